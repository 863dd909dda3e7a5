//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

mod common;

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rdeq_core::{
    audit, binary_entropy, brute_force_rde, check_successive, conditional_entropy, disclosure_rates, distortion_bounds,
    entropy, gamma_of_d, marginalize, rate_de, rd_curve, sanitize, synthesize_channel, tradeoff_region, Alphabet,
    CaseTag, Database, DistortionMatrix, JointPmf, SolverConfig,
};

use common::{census, linspace, random_pmf, split, with_independent_side};

type Outcome = Result<String, String>;

fn cfg(restarts: usize) -> SolverConfig {
    SolverConfig {
        restarts,
        ..SolverConfig::default()
    }
}

fn within(limit: Duration, took: Duration) -> Result<(), String> {
    if took > limit {
        Err(format!("took {took:.2?}, limit {limit:?}"))
    } else {
        Ok(())
    }
}

fn binary_rd() -> Outcome {
    let x = Alphabet::new("x", ["0", "1"]).unwrap();
    let prior = JointPmf::new(vec![x.clone()], vec![0.5, 0.5]).unwrap();
    let d = DistortionMatrix::hamming(&x);
    let grid: Vec<f64> = (0..=10).map(|i| i as f64 * 0.05).collect();
    let start = Instant::now();
    let curve = rd_curve(&prior, &d, &grid);
    let took = start.elapsed();
    let mut worst: f64 = 0.0;
    for (p, &dv) in curve.into_iter().zip(&grid) {
        let p = p.map_err(|e| e.to_string())?;
        let err = (p.rate - (1.0 - binary_entropy(dv))).abs();
        worst = worst.max(err);
        if err > 1e-4 {
            return Err(format!("D={dv}: R={} error {err:.2e}", p.rate));
        }
    }
    within(Duration::from_secs(1), took)?;
    Ok(format!("max error {worst:.1e} bits in {took:.2?}"))
}

fn single_attribute_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let forced = SolverConfig {
        path: Some(CaseTag::NoSideInfo),
        ..cfg(1)
    };
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for k in 0..20 {
        let n = rng.gen_range(2..=4);
        let table: Option<Vec<Vec<f64>>> = (k % 2 == 1).then(|| {
            (0..n)
                .map(|i| (0..n).map(|j| if i == j { 0.0 } else { rng.gen_range(0.2..1.0) }).collect())
                .collect()
        });
        let spec = census(n, random_pmf(&mut rng, n), table);
        let h = entropy(spec.joint());
        let (lo, hi) = distortion_bounds(spec.joint(), spec.distortion(0)).unwrap();
        for dv in linspace(lo, hi, 6) {
            let g = gamma_of_d(&spec, &[dv], &forced).map_err(|e| format!("spec {k}, D={dv}: {e}"))?;
            let r = rdeq_core::rate_distortion(spec.joint(), spec.distortion(0), dv).map_err(|e| e.to_string())?;
            let err = (g.value - (h - r.rate)).abs();
            worst = worst.max(err);
            if err > 1e-4 {
                return Err(format!("spec {k}, D={dv}: Γ={} but H-R={}", g.value, h - r.rate));
            }
        }
    }
    let took = start.elapsed();
    within(Duration::from_secs(30), took)?;
    Ok(format!("20 specs x 6 D, max gap {worst:.1e} bits in {took:.2?}"))
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let c = cfg(8);
    let mut worst: f64 = 0.0;
    let mut done = 0;
    let mut attempts = 0;
    while done < 10 {
        attempts += 1;
        if attempts > 100 {
            return Err("could not draw 10 feasible points".into());
        }
        let spec = split(2, 2, 0, random_pmf(&mut rng, 4));
        let (_, hi) = distortion_bounds(&marginalize(spec.joint(), &["r"]).unwrap(), spec.distortion(0)).unwrap();
        let dv = rng.gen_range(0.0..hi);
        let gamma = gamma_of_d(&spec, &[dv], &c).map_err(|e| e.to_string())?.value;
        let floor = conditional_entropy(spec.joint(), &["h"], &["r"]).unwrap();
        let ev = floor + rng.gen_range(0.1..0.9) * (gamma - floor);
        let solved = rate_de(&spec, &[dv], ev, &c).map_err(|e| e.to_string())?;
        let aux = solved.solution.aux_alphabet.len();
        let brute = brute_force_rde(&spec, &[dv], ev, 32, aux).map_err(|e| e.to_string())?;
        if !brute.is_finite() {
            continue;
        }
        if brute < solved.value - 1e-6 {
            return Err(format!("D={dv:.4} E={ev:.4}: brute {brute} beats solver {}", solved.value));
        }
        let gap = (brute - solved.value).abs();
        worst = worst.max(gap);
        if gap > 0.02 {
            return Err(format!("D={dv:.4} E={ev:.4}: brute {brute} vs solver {}", solved.value));
        }
        done += 1;
    }
    Ok(format!("10 points, |U|=2, max gap {worst:.4} bits"))
}

fn sandwich() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let c = cfg(4);
    for k in 0..50 {
        let (nr, nh, nz) = (rng.gen_range(2..=3), 2, rng.gen_range(1..=2));
        let spec = split(nr, nh, nz, random_pmf(&mut rng, nr * nh * nz));
        let lo = conditional_entropy(spec.joint(), &["h"], &["r", "z"]).unwrap();
        let hi = conditional_entropy(spec.joint(), &["h"], &["z"]).unwrap();
        for dv in [0.0, 0.1, 0.25, 0.5] {
            let g = gamma_of_d(&spec, &[dv], &c).map_err(|e| format!("spec {k}, D={dv}: {e}"))?.value;
            if g < lo - 1e-6 || g > hi + 1e-6 {
                return Err(format!("spec {k}, D={dv}: {lo} <= {g} <= {hi} fails"));
            }
        }
    }
    Ok("50 specs x 4 D".into())
}

fn is_convex_nonincreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] <= w[0] + 1e-6) && v.windows(3).all(|w| w[0] - 2.0 * w[1] + w[2] >= -1e-6)
}

fn monotonicity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let c = cfg(4);
    let mut grids = 0;
    for k in 0..3 {
        let n = 3;
        let census_spec = census(n, random_pmf(&mut rng, n), None);
        let (lo, hi) = distortion_bounds(census_spec.joint(), census_spec.distortion(0)).unwrap();
        let ds = linspace(lo, hi, 11);
        let rates: Vec<f64> = rd_curve(census_spec.joint(), census_spec.distortion(0), &ds)
            .into_iter()
            .map(|p| p.map(|p| p.rate).map_err(|e| e.to_string()))
            .collect::<Result<_, _>>()?;
        if !is_convex_nonincreasing(&rates) {
            return Err(format!("R(D) of spec {k} is not convex non-increasing: {rates:?}"));
        }
        grids += 1;
    }
    for k in 0..2 {
        let spec = split(2, 2, 2, random_pmf(&mut rng, 8));
        let ds: Vec<Vec<f64>> = linspace(0.0, 0.4, 5).into_iter().map(|d| vec![d]).collect();
        let es = linspace(0.0, 0.9, 4);
        let pts = tradeoff_region(&spec, &ds, &es, &c).map_err(|e| e.to_string())?;
        let gammas: Vec<f64> = (0..ds.len()).filter_map(|i| pts[i * es.len()].gamma).collect();
        if gammas.windows(2).any(|w| w[1] < w[0] - 1e-6) {
            return Err(format!("Γ(D) of spec {k} decreases: {gammas:?}"));
        }
        let rate = |i: usize, j: usize| pts[i * es.len() + j].rate;
        for i in 0..ds.len() {
            for j in 0..es.len() {
                if let (Some(a), Some(b)) = (rate(i, j), i.checked_sub(1).and_then(|p| rate(p, j))) {
                    if a > b + 1e-6 {
                        return Err(format!("R increases in D at spec {k}, cell ({i},{j})"));
                    }
                }
                if let (Some(a), Some(b)) = (rate(i, j), j.checked_sub(1).and_then(|p| rate(i, p))) {
                    if a < b - 1e-6 {
                        return Err(format!("R decreases in E at spec {k}, cell ({i},{j})"));
                    }
                }
            }
        }
        grids += 1;
    }
    Ok(format!("{grids} grids"))
}

fn independence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let c = cfg(4);
    for k in 0..5 {
        let (nr, nh, nz) = (rng.gen_range(2..=3), rng.gen_range(2..=3), rng.gen_range(0..=2));
        let prz = random_pmf(&mut rng, nr * nz.max(1));
        let ph = random_pmf(&mut rng, nh);
        // lay out as (r, h, z)
        let mut pmf = Vec::new();
        for r in 0..nr {
            for &h in &ph {
                for z in 0..nz.max(1) {
                    pmf.push(prz[r * nz.max(1) + z] * h);
                }
            }
        }
        let spec = split(nr, nh, nz, pmf);
        let target = entropy(&marginalize(spec.joint(), &["h"]).unwrap());
        let (_, hi) = distortion_bounds(&marginalize(spec.joint(), &["r"]).unwrap(), spec.distortion(0)).unwrap();
        for dv in linspace(0.0, hi, 4) {
            let g = gamma_of_d(&spec, &[dv], &c).map_err(|e| e.to_string())?.value;
            if (g - target).abs() > 1e-6 {
                return Err(format!("spec {k}, D={dv}: Γ={g} but H(h)={target}"));
            }
        }
    }
    Ok("5 specs x 4 D".into())
}

fn successive() -> Outcome {
    let x = Alphabet::new("x", ["0", "1"]).unwrap();
    let prior = JointPmf::new(vec![x.clone()], vec![0.5, 0.5]).unwrap();
    let d = DistortionMatrix::hamming(&x);
    let start = Instant::now();
    let plan = check_successive(&prior, &d, (0.25, 0.8113), (0.11, 0.5000)).map_err(|e| e.to_string())?;
    if !plan.feasible {
        return Err(format!("plan infeasible, gap {}", plan.gap));
    }
    let (r0, r1) = disclosure_rates(&plan, &prior).map_err(|e| e.to_string())?;
    let took = start.elapsed();
    if (r0 + r1 - 0.5).abs() > 1e-3 {
        return Err(format!("R0+R1 = {}", r0 + r1));
    }
    let k = plan.refinement.kernel();
    let crossover = 0.5 * (k[1] + k[2]);
    if (crossover - 0.1795).abs() > 1e-3 {
        return Err(format!("cascade crossover {crossover}"));
    }
    within(Duration::from_secs(5), took)?;
    Ok(format!("R0={r0:.4} R1={r1:.4} crossover={crossover:.4} in {took:.2?}"))
}

fn sanitizer() -> Outcome {
    let spec = census(2, vec![0.5, 0.5], None);
    let plan = synthesize_channel(&spec, &[0.11], binary_entropy(0.11) - 1e-3, &SolverConfig::default())
        .map_err(|e| e.to_string())?;
    let x = spec.attributes()[0].clone();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let rows = (0..100_000).map(|_| vec![rng.gen_range(0..2)]).collect();
    let db = Database::new(vec![x], rows).unwrap();
    let a = sanitize(&db, &plan).map_err(|e| e.to_string())?;
    let b = sanitize(&db, &plan).map_err(|e| e.to_string())?;
    if a.to_csv() != b.to_csv() {
        return Err("reruns differ".into());
    }
    let report = audit(&db, &a, &spec, &plan).map_err(|e| e.to_string())?;
    let delta = report.distortion[0];
    if !(0.105..=0.115).contains(&delta) {
        return Err(format!("empirical distortion {delta}"));
    }
    Ok(format!("Δ={delta:.4}, rerun byte-identical"))
}

fn degenerate_side_info() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let c = cfg(4);
    let mut worst: f64 = 0.0;
    for k in 0..10 {
        let prh = random_pmf(&mut rng, 4);
        let pz = random_pmf(&mut rng, 2);
        let with = split(2, 2, 2, with_independent_side(&prh, &pz));
        let without = split(2, 2, 0, prh);
        let dv = rng.gen_range(0.0..0.3);
        let gamma = gamma_of_d(&without, &[dv], &c).map_err(|e| e.to_string())?.value;
        let ev = rng.gen_range(0.1..0.9) * gamma;
        let a = rate_de(&with, &[dv], ev, &c).map_err(|e| format!("spec {k}: {e}"))?.value;
        let b = rate_de(&without, &[dv], ev, &c).map_err(|e| format!("spec {k}: {e}"))?.value;
        worst = worst.max((a - b).abs());
        if (a - b).abs() > 0.01 {
            return Err(format!("spec {k}, D={dv:.3} E={ev:.3}: {a} vs {b}"));
        }
    }
    Ok(format!("10 specs, max gap {worst:.1e} bits"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("binary rate-distortion curve", binary_rd),
        ("single-attribute equivocation identity", single_attribute_identity),
        ("brute-force oracle agreement", oracle_equivalence),
        ("equivocation sandwich bound", sandwich),
        ("monotonicity and convexity", monotonicity),
        ("independent private attribute", independence),
        ("successive disclosure without rate loss", successive),
        ("sanitizer statistics and determinism", sanitizer),
        ("independent side information", degenerate_side_info),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let took = start.elapsed();
        match result {
            Ok(msg) => println!("PASS {}: {name} ({msg}) [{took:.2?}]", i + 1),
            Err(msg) => {
                failed += 1;
                println!("FAIL {}: {name} ({msg}) [{took:.2?}]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
