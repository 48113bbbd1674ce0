#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::OnceLock;

use dangspeech_core::resources::{default_data_dir, Resources};
use dangspeech_core::textproc::Token;

pub fn res() -> &'static Resources {
    static RES: OnceLock<Resources> = OnceLock::new();
    RES.get_or_init(|| Resources::load_dir(default_data_dir()).unwrap())
}

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

/// Scans every start position left to right and takes the longest seed
/// whose word tokens equal the window.
pub fn brute_force_matches(seeds: &[Vec<String>], tokens: &[Token]) -> Vec<(String, usize, usize)> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        let mut best: Option<&Vec<String>> = None;
        for s in seeds {
            let end = i + s.len();
            if end > tokens.len() {
                continue;
            }
            let fits = tokens[i..end].iter().zip(s).all(|(t, w)| t.is_word() && &t.text == w);
            if fits && best.is_none_or(|b| s.len() > b.len()) {
                best = Some(s);
            }
        }
        match best {
            Some(s) => {
                out.push((s.join(" "), i, i + s.len()));
                i += s.len();
            }
            None => i += 1,
        }
    }
    out
}

/// Textbook kappa from cell proportions.
pub fn kappa_oracle(c: [[u64; 2]; 2]) -> f64 {
    let n = (c[0][0] + c[0][1] + c[1][0] + c[1][1]) as f64;
    let po = (c[0][0] + c[1][1]) as f64 / n;
    let a_safe = (c[0][0] + c[0][1]) as f64 / n;
    let b_safe = (c[0][0] + c[1][0]) as f64 / n;
    let pe = a_safe * b_safe + (1.0 - a_safe) * (1.0 - b_safe);
    (po - pe) / (1.0 - pe)
}
