#![allow(dead_code)]

use rand::Rng;
use rdeq_core::source::{AlphabetDoc, MeasureDoc, ModelDocument, PmfDoc, PrivacyDoc, RolesDoc, UtilityDoc};
use rdeq_core::SourceSpec;

pub fn alphabet(name: &str, n: usize) -> AlphabetDoc {
    AlphabetDoc {
        name: name.into(),
        symbols: (0..n).map(|i| i.to_string()).collect(),
    }
}

/// Strictly positive pmf with `n` cells.
pub fn random_pmf<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| 0.05 + rng.gen::<f64>()).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

/// Single attribute `x` that is both public and private.
pub fn census(n: usize, pmf: Vec<f64>, table: Option<Vec<Vec<f64>>>) -> SourceSpec {
    SourceSpec::from_document(&ModelDocument {
        alphabets: vec![alphabet("x", n)],
        roles: RolesDoc {
            public: vec!["x".into()],
            private: vec!["x".into()],
            encoded: None,
        },
        side_info: None,
        reconstruction: vec![],
        pmf: PmfDoc {
            axes: vec!["x".into()],
            values: pmf,
        },
        utility: vec![UtilityDoc {
            f: None,
            g: match table {
                Some(table) => MeasureDoc::Table { table },
                None => MeasureDoc::Named("hamming".into()),
            },
            d: 0.0,
        }],
        privacy: PrivacyDoc { e: 0.0 },
    })
    .unwrap()
}

/// Public `r`, private `h` and, when `nz > 0`, side information `z`, with
/// the pmf laid out over `(r, h[, z])` and hamming distortion on `r`.
pub fn split(nr: usize, nh: usize, nz: usize, pmf: Vec<f64>) -> SourceSpec {
    let mut alphabets = vec![alphabet("r", nr), alphabet("h", nh)];
    let mut axes = vec!["r".to_string(), "h".to_string()];
    if nz > 0 {
        alphabets.push(alphabet("z", nz));
        axes.push("z".into());
    }
    SourceSpec::from_document(&ModelDocument {
        alphabets,
        roles: RolesDoc {
            public: vec!["r".into()],
            private: vec!["h".into()],
            encoded: None,
        },
        side_info: (nz > 0).then(|| "z".to_string()),
        reconstruction: vec![],
        pmf: PmfDoc { axes, values: pmf },
        utility: vec![UtilityDoc {
            f: None,
            g: MeasureDoc::Named("hamming".into()),
            d: 0.0,
        }],
        privacy: PrivacyDoc { e: 0.0 },
    })
    .unwrap()
}

/// Outer product of a `(r, h)` pmf with an independent `z` pmf.
pub fn with_independent_side(prh: &[f64], pz: &[f64]) -> Vec<f64> {
    prh.iter().flat_map(|p| pz.iter().map(move |q| p * q)).collect()
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}
