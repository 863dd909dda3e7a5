//! Fixtures shared by the solver benchmarks.

use rdeq_core::{load_spec, Alphabet, DistortionMatrix, JointPmf, SourceSpec};

/// Uniform source over `n` symbols with hamming distortion.
pub fn uniform_source(n: usize) -> (JointPmf, DistortionMatrix) {
    let x = Alphabet::indexed("x", n).expect("nonempty alphabet");
    let prior = JointPmf::uniform(vec![x.clone()]).expect("uniform pmf");
    (prior, DistortionMatrix::hamming(&x))
}

/// Binary public and private attributes with binary side information.
pub fn side_info_model() -> SourceSpec {
    load_spec(
        r#"{
        "alphabets": [
            {"name": "r", "symbols": ["0", "1"]},
            {"name": "h", "symbols": ["0", "1"]},
            {"name": "z", "symbols": ["0", "1"]}
        ],
        "roles": {"public": ["r"], "private": ["h"]},
        "side_info": "z",
        "pmf": {"axes": ["r", "h", "z"], "values": [0.2, 0.05, 0.1, 0.15, 0.05, 0.15, 0.2, 0.1]},
        "utility": [{"g": "hamming", "D": 0.15}],
        "privacy": {"E": 0.5}
    }"#,
    )
    .expect("fixture model is valid")
}

/// Binary public and private attributes, no side information.
pub fn pair_model() -> SourceSpec {
    load_spec(
        r#"{
        "alphabets": [{"name": "r", "symbols": ["0", "1"]}, {"name": "h", "symbols": ["0", "1"]}],
        "roles": {"public": ["r"], "private": ["h"]},
        "pmf": {"axes": ["r", "h"], "values": [0.35, 0.15, 0.1, 0.4]},
        "utility": [{"g": "hamming", "D": 0.1}],
        "privacy": {"E": 0.6}
    }"#,
    )
    .expect("fixture model is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_load() {
        assert_eq!(uniform_source(4).0.mass().len(), 4);
        assert!(side_info_model().has_side_info());
        assert_eq!(pair_model().source_size(), 4);
    }
}
