//! Exhaustive search over quantized auxiliary channels.

use std::f64::consts::LN_2;

use rayon::prelude::*;

use super::engine::Problem;
use super::{check_distortion, setup, SolverConfig};
use crate::error::{Error, Result};
use crate::source::SourceSpec;

/// Largest number of channels the search will visit.
pub const BRUTE_FORCE_BUDGET: u64 = 50_000_000;

/// All rows of `n` nonnegative multiples of `1/q` summing to one.
fn grid_rows(q: usize, n: usize) -> Vec<Vec<f64>> {
    fn rec(left: usize, n: usize, q: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if n == 1 {
            cur.push(left);
            out.push(cur.iter().map(|&k| k as f64 / q as f64).collect());
            cur.pop();
            return;
        }
        for k in (0..=left).rev() {
            cur.push(k);
            rec(left - k, n - 1, q, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(q, n, q, &mut Vec::with_capacity(n), &mut out);
    out
}

/// Smallest `I(X;U) - I(Z;U)` in bits over encoders whose entries are
/// multiples of `1/q`, each paired with its distortion-minimizing decoder,
/// that meet the distortion bound and `H(Xh | U, Z) >= e`. Returns infinity
/// when no grid channel qualifies.
///
/// The encoder reads the same attributes as the dispatched solver path and
/// `U` has `aux_size` symbols.
pub fn brute_force_rde(spec: &SourceSpec, d: &[f64], e: f64, q: usize, aux_size: usize) -> Result<f64> {
    if spec.distortions().len() != 1 {
        return Err(Error::UnsupportedModel(
            "the exhaustive search handles a single utility constraint".into(),
        ));
    }
    check_distortion(spec, d)?;
    if spec.source_size() > 4 {
        return Err(Error::Size(format!(
            "source alphabet has {} cells; the exhaustive search allows 4",
            spec.source_size()
        )));
    }
    if !(1..=4).contains(&aux_size) {
        return Err(Error::Size(format!("auxiliary size {aux_size} is outside 1..=4")));
    }
    if !(1..=32).contains(&q) {
        return Err(Error::Size(format!("quantization level {q} is outside 1..=32")));
    }
    let cfg = SolverConfig {
        aux_size: Some(aux_size),
        ..SolverConfig::default()
    };
    let su = setup(spec, &cfg)?;
    let p = &su.problem;
    let rows = grid_rows(q, aux_size);
    let active: Vec<usize> = (0..p.n_c).filter(|&c| p.wc[c] > 0.0).collect();
    let total = (rows.len() as u64).checked_pow(active.len() as u32).unwrap_or(u64::MAX);
    if total > BRUTE_FORCE_BUDGET {
        return Err(Error::Size(format!(
            "{total} grid channels exceed the search budget of {BRUTE_FORCE_BUDGET}"
        )));
    }
    if active.is_empty() {
        return Ok(0.0);
    }
    let eval = Evaluator::new(p, &su.input_of, aux_size);
    let (d_max, e_min) = (d[0] + 1e-9, (e - 1e-9) * LN_2);
    let best = (0..rows.len())
        .into_par_iter()
        .map(|first| {
            let mut scratch = eval.scratch();
            let mut v = vec![0.0; p.n_c * aux_size];
            for c in 0..p.n_c {
                v[c * aux_size..(c + 1) * aux_size].copy_from_slice(&rows[0]);
            }
            let mut idx = vec![0usize; active.len()];
            idx[0] = first;
            let mut best = f64::INFINITY;
            loop {
                for (k, &c) in active.iter().enumerate() {
                    v[c * aux_size..(c + 1) * aux_size].copy_from_slice(&rows[idx[k]]);
                }
                if let Some(rate) = eval.rate_if_feasible(&v, &mut scratch, d_max, e_min) {
                    best = best.min(rate / LN_2);
                }
                // odometer over every row but the first
                let mut k = 1;
                while k < idx.len() {
                    idx[k] += 1;
                    if idx[k] < rows.len() {
                        break;
                    }
                    idx[k] = 0;
                    k += 1;
                }
                if k == idx.len() {
                    break;
                }
            }
            best
        })
        .reduce(|| f64::INFINITY, f64::min);
    Ok(best)
}

/// Allocation-free evaluation of one grid channel with its best decoder.
struct Evaluator<'a> {
    p: &'a Problem,
    input_of: &'a [usize],
    n_u: usize,
}

struct Scratch {
    w: Vec<f64>,
    quz: Vec<f64>,
    phuz: Vec<f64>,
}

fn xlogx(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

impl<'a> Evaluator<'a> {
    fn new(p: &'a Problem, input_of: &'a [usize], n_u: usize) -> Self {
        Evaluator { p, input_of, n_u }
    }

    fn scratch(&self) -> Scratch {
        let p = self.p;
        Scratch {
            w: vec![0.0; p.n_x * self.n_u],
            quz: vec![0.0; self.n_u * p.n_z],
            phuz: vec![0.0; p.n_h * self.n_u * p.n_z],
        }
    }

    /// `I(X;U|Z)` in nats when the channel meets both bounds (equivocation in nats).
    fn rate_if_feasible(&self, v: &[f64], s: &mut Scratch, d_max: f64, e_min: f64) -> Option<f64> {
        let p = self.p;
        let (n_u, n_z, n_r) = (self.n_u, p.n_z, p.n_r);
        for (x, &c) in self.input_of.iter().enumerate() {
            s.w[x * n_u..(x + 1) * n_u].copy_from_slice(&v[c * n_u..(c + 1) * n_u]);
        }
        // distortion with the per-(u, z) best reconstruction
        let dist = &p.dist[0];
        let mut distortion = 0.0;
        for u in 0..n_u {
            for z in 0..n_z {
                let mut best = f64::INFINITY;
                for r in 0..n_r {
                    let mut cost = 0.0;
                    for x in 0..p.n_x {
                        cost += p.pxz[x * n_z + z] * s.w[x * n_u + u] * dist[x * n_r + r];
                    }
                    if cost < best {
                        best = cost;
                    }
                }
                distortion += best;
            }
        }
        if distortion > d_max {
            return None;
        }
        s.quz.iter_mut().for_each(|q| *q = 0.0);
        s.phuz.iter_mut().for_each(|q| *q = 0.0);
        for x in 0..p.n_x {
            let h = p.h_of[x];
            for z in 0..n_z {
                let m = p.pxz[x * n_z + z];
                if m == 0.0 {
                    continue;
                }
                for u in 0..n_u {
                    let a = m * s.w[x * n_u + u];
                    s.quz[u * n_z + z] += a;
                    s.phuz[(h * n_u + u) * n_z + z] += a;
                }
            }
        }
        // H(Xh,U,Z) - H(U,Z)
        let mut equivocation = 0.0;
        for &m in &s.phuz {
            equivocation -= xlogx(m);
        }
        for &q in &s.quz {
            equivocation += xlogx(q);
        }
        if equivocation < e_min {
            return None;
        }
        let mut rate = 0.0;
        for x in 0..p.n_x {
            for u in 0..n_u {
                rate += p.px[x] * xlogx(s.w[x * n_u + u]);
            }
        }
        for u in 0..n_u {
            for z in 0..n_z {
                let q = s.quz[u * n_z + z];
                if q > 0.0 {
                    rate -= q * (q / p.pz[z]).ln();
                }
            }
        }
        Some(rate.max(0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_rows_count_compositions() {
        assert_eq!(grid_rows(4, 2).len(), 5);
        assert_eq!(grid_rows(3, 3).len(), 10);
        for r in grid_rows(5, 3) {
            assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
