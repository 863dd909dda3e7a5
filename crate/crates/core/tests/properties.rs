mod common;

use proptest::prelude::*;
use rdeq_core::{
    binary_entropy, brute_force_rde, check_successive, conditional_entropy, disclosure_rates, distortion_bounds,
    entropy, gamma_of_d, ingest_csv, marginalize, mutual_information, rate_distortion, rd_curve, Alphabet, CaseTag,
    Database, DistortionMatrix, JointPmf, SolverConfig,
};

use common::{census, linspace, split};

fn pmf(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.02f64..1.0, n).prop_map(|w| {
        let s: f64 = w.iter().sum();
        w.into_iter().map(|x| x / s).collect()
    })
}

fn three_axes() -> impl Strategy<Value = JointPmf> {
    (2usize..=3, 2usize..=3, 1usize..=2)
        .prop_flat_map(|(a, b, c)| (Just((a, b, c)), pmf(a * b * c)))
        .prop_map(|((a, b, c), m)| {
            let axes = vec![
                Alphabet::indexed("a", a).unwrap(),
                Alphabet::indexed("b", b).unwrap(),
                Alphabet::indexed("c", c).unwrap(),
            ];
            JointPmf::new(axes, m).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn chain_rule(p in three_axes()) {
        let joint = entropy(&p);
        let ab = entropy(&marginalize(&p, &["a", "b"]).unwrap());
        let c_given = conditional_entropy(&p, &["c"], &["a", "b"]).unwrap();
        prop_assert!((joint - ab - c_given).abs() < 1e-9);
        let a = entropy(&marginalize(&p, &["a"]).unwrap());
        let b_given = conditional_entropy(&p, &["b"], &["a"]).unwrap();
        prop_assert!((ab - a - b_given).abs() < 1e-9);
    }

    #[test]
    fn mutual_information_identities(p in three_axes()) {
        let i = mutual_information(&p, &["a"], &["b", "c"]).unwrap();
        let j = mutual_information(&p, &["b", "c"], &["a"]).unwrap();
        prop_assert!(i >= -1e-12);
        prop_assert!((i - j).abs() < 1e-9);
        let h = entropy(&marginalize(&p, &["a"]).unwrap());
        let hc = conditional_entropy(&p, &["a"], &["b", "c"]).unwrap();
        prop_assert!((i - (h - hc)).abs() < 1e-9);
        // conditioning reduces entropy
        prop_assert!(hc <= conditional_entropy(&p, &["a"], &["b"]).unwrap() + 1e-12);
    }

    #[test]
    fn binary_rate_distortion_oracle(p in 0.05f64..0.95, t in 0.0f64..1.0) {
        let x = Alphabet::new("x", ["0", "1"]).unwrap();
        let prior = JointPmf::new(vec![x.clone()], vec![1.0 - p, p]).unwrap();
        let d = t * p.min(1.0 - p);
        let r = rate_distortion(&prior, &DistortionMatrix::hamming(&x), d).unwrap();
        prop_assert!((r.rate - (binary_entropy(p) - binary_entropy(d))).abs() < 1e-6);
        prop_assert!(r.achieved_distortion <= d + 1e-9);
    }

    #[test]
    fn rate_distortion_is_convex_and_nonincreasing(m in pmf(3), off in prop::collection::vec(0.1f64..1.0, 6)) {
        let mut rows = vec![vec![0.0; 3]; 3];
        let mut k = 0;
        for (i, row) in rows.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                if i != j {
                    *v = off[k];
                    k += 1;
                }
            }
        }
        let prior = JointPmf::new(vec![Alphabet::indexed("x", 3).unwrap()], m).unwrap();
        let d = DistortionMatrix::new(rows).unwrap();
        let (lo, hi) = distortion_bounds(&prior, &d).unwrap();
        let rates: Vec<f64> = rd_curve(&prior, &d, &linspace(lo, hi, 9)).into_iter().map(|p| p.unwrap().rate).collect();
        prop_assert!(rates.windows(2).all(|w| w[1] <= w[0] + 1e-7));
        prop_assert!(rates.windows(3).all(|w| w[0] - 2.0 * w[1] + w[2] >= -1e-6), "{:?}", rates);
        prop_assert!(rates.last().unwrap().abs() < 1e-7);
    }

    #[test]
    fn csv_round_trip(rows in prop::collection::vec((0usize..3, 0usize..2), 0..40)) {
        let schema = vec![
            Alphabet::new("colour", ["red", "green", "blue"]).unwrap(),
            Alphabet::new("flag", ["no", "yes"]).unwrap(),
        ];
        let db = Database::new(schema.clone(), rows.iter().map(|&(a, b)| vec![a, b]).collect()).unwrap();
        let back = ingest_csv(&db.to_csv(), &schema).unwrap();
        prop_assert_eq!(back.rows(), db.rows());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn single_attribute_gamma_is_entropy_minus_rate(m in pmf(3), t in 0.0f64..1.0) {
        let spec = census(3, m, None);
        let (lo, hi) = distortion_bounds(spec.joint(), spec.distortion(0)).unwrap();
        let d = lo + t * (hi - lo);
        let forced = SolverConfig { path: Some(CaseTag::NoSideInfo), restarts: 1, ..SolverConfig::default() };
        let g = gamma_of_d(&spec, &[d], &forced).unwrap().value;
        let r = rate_distortion(spec.joint(), spec.distortion(0), d).unwrap().rate;
        prop_assert!((g - (entropy(spec.joint()) - r)).abs() < 1e-4, "{} vs {}", g, entropy(spec.joint()) - r);
    }

    #[test]
    fn equivocation_sandwich(m in pmf(8), d in 0.0f64..0.5) {
        let spec = split(2, 2, 2, m);
        let lo = conditional_entropy(spec.joint(), &["h"], &["r", "z"]).unwrap();
        let hi = conditional_entropy(spec.joint(), &["h"], &["z"]).unwrap();
        let cfg = SolverConfig { restarts: 4, ..SolverConfig::default() };
        let g = gamma_of_d(&spec, &[d], &cfg).unwrap().value;
        prop_assert!(g >= lo - 1e-6 && g <= hi + 1e-6);
    }

    #[test]
    fn finer_grids_never_hurt(m in pmf(4), d in 0.0f64..0.4, e in 0.0f64..0.5) {
        let spec = split(2, 2, 0, m);
        let coarse = brute_force_rde(&spec, &[d], e, 4, 2).unwrap();
        let fine = brute_force_rde(&spec, &[d], e, 8, 2).unwrap();
        prop_assert!(fine <= coarse + 1e-12);
    }

    #[test]
    fn bernoulli_sources_refine_without_loss(p in 0.2f64..0.5, a in 0.3f64..0.9, b in 0.2f64..0.8) {
        let x = Alphabet::new("x", ["0", "1"]).unwrap();
        let prior = JointPmf::new(vec![x.clone()], vec![1.0 - p, p]).unwrap();
        let (d1, d2) = (a * p, a * b * p);
        let plan = check_successive(&prior, &DistortionMatrix::hamming(&x), (d1, 0.0), (d2, 0.0)).unwrap();
        prop_assert!(plan.feasible, "gap {}", plan.gap);
        let (r0, r1) = disclosure_rates(&plan, &prior).unwrap();
        prop_assert!((r0 + r1 - (binary_entropy(p) - binary_entropy(d2))).abs() < 1e-3);
        prop_assert!((r1 - (binary_entropy(p) - binary_entropy(d1))).abs() < 1e-3);
    }
}
