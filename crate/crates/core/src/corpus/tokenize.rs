use std::collections::HashSet;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

/// Version tag of the bundled stop-word list; part of the vocabulary fingerprint.
pub const STOP_WORDS_VERSION: u32 = 1;

const STOP_WORDS_SOURCE: &str = include_str!("stopwords.txt");

fn stop_words() -> &'static HashSet<&'static str> {
    static WORDS: OnceLock<HashSet<&'static str>> = OnceLock::new();
    WORDS.get_or_init(|| {
        STOP_WORDS_SOURCE
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect()
    })
}

pub fn is_stop_word(token: &str) -> bool {
    stop_words().contains(token)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizerOptions {
    /// Apply the Porter stemmer to every surviving token.
    pub stem: bool,
    /// Drop tokens found in the built-in stop-word list.
    pub remove_stop_words: bool,
}

impl Default for TokenizerOptions {
    fn default() -> Self {
        TokenizerOptions {
            stem: true,
            remove_stop_words: true,
        }
    }
}

/// Lowercases, splits on non-alphanumeric characters, removes stop words and
/// stems, using the default options.
pub fn tokenize(text: &str) -> Vec<String> {
    tokenize_with(text, TokenizerOptions::default())
}

pub fn tokenize_with(text: &str, opts: TokenizerOptions) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .filter(|t| !(opts.remove_stop_words && is_stop_word(t)))
        .map(|t| {
            if opts.stem {
                porter_stemmer::stem(&t)
            } else {
                t
            }
        })
        .filter(|t| !t.is_empty())
        .collect()
}
