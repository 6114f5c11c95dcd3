use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{FactorMatrix, Hyperparams, ModelState, UserProfile, Variant};
use crate::{Error, Result};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    variant: Variant,
    hyper: Hyperparams,
    vocab_fingerprint: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    factors: Option<FactorMatrix>,
    profiles: Vec<UserProfile>,
    objective_trace: Vec<f64>,
}

impl ModelState {
    pub fn to_json(&self) -> Result<String> {
        let file = ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            variant: self.variant,
            hyper: self.hyper.clone(),
            vocab_fingerprint: self.vocab_fingerprint.clone(),
            factors: self.factors.clone(),
            profiles: self.profiles.clone(),
            objective_trace: self.objective_trace.clone(),
        };
        Ok(serde_json::to_string(&file)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        from_file(serde_json::from_str(s)?)
    }
}

fn from_file(file: ModelFile) -> Result<ModelState> {
    if file.format_version != MODEL_FORMAT_VERSION {
        return Err(Error::Unsupported(format!(
            "model format version {} (supported: {MODEL_FORMAT_VERSION})",
            file.format_version
        )));
    }
    if file.variant.has_factors() != file.factors.is_some() {
        return Err(Error::InvalidArgument(format!(
            "{} model file {} factors",
            file.variant,
            if file.factors.is_some() { "has unexpected" } else { "is missing" }
        )));
    }
    Ok(ModelState {
        variant: file.variant,
        hyper: file.hyper,
        factors: file.factors,
        profiles: file.profiles,
        objective_trace: file.objective_trace,
        vocab_fingerprint: file.vocab_fingerprint,
    })
}

pub fn save_model(path: &Path, state: &ModelState) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(state.to_json()?.as_bytes())?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<ModelState> {
    let file: ModelFile = serde_json::from_reader(BufReader::new(File::open(path)?))?;
    from_file(file)
}
