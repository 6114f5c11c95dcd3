use serde::{Deserialize, Deserializer, Serialize, Serializer};
use statrs::function::beta::beta_reg;

use crate::{Error, Result};

/// Two-sided paired t-test result.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    /// `±inf` when the differences are constant and nonzero.
    #[serde(serialize_with = "ser_sentinel", deserialize_with = "de_sentinel")]
    pub t: f64,
    pub p: f64,
    pub n: usize,
}

// JSON has no infinity; write it as the strings "inf" / "-inf".
fn ser_sentinel<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_infinite() {
        s.serialize_str(if *v > 0.0 { "inf" } else { "-inf" })
    } else {
        s.serialize_f64(*v)
    }
}

fn de_sentinel<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Str(String),
    }
    match Raw::deserialize(d)? {
        Raw::Num(v) => Ok(v),
        Raw::Str(s) if s == "inf" => Ok(f64::INFINITY),
        Raw::Str(s) if s == "-inf" => Ok(f64::NEG_INFINITY),
        Raw::Str(s) => Err(serde::de::Error::custom(format!("bad t value {s:?}"))),
    }
}

/// Paired two-sided t-test on `a − b` with `n − 1` degrees of freedom.
///
/// The p-value is `I_{ν/(ν+t²)}(ν/2, 1/2)`, the regularized incomplete beta
/// form of the two-sided Student tail. All-zero differences give `(0, 1)`;
/// constant nonzero differences give `(±inf, 0)`.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<TTest> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            what: "paired samples".into(),
            expected: a.len(),
            actual: b.len(),
        });
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "paired t-test needs at least 2 pairs, got {n}"
        )));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let nf = n as f64;
    let mean = d.iter().sum::<f64>() / nf;
    let var = d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    if d.iter().all(|v| *v == 0.0) {
        return Ok(TTest { t: 0.0, p: 1.0, n });
    }
    if var == 0.0 {
        return Ok(TTest {
            t: f64::INFINITY.copysign(mean),
            p: 0.0,
            n,
        });
    }
    let t = mean / (var / nf).sqrt();
    let df = nf - 1.0;
    let p = beta_reg(df / 2.0, 0.5, df / (df + t * t)).clamp(0.0, 1.0);
    Ok(TTest { t, p, n })
}
