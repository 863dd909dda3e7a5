//! Classical rate-distortion function by Blahut–Arimoto iteration.
//!
//! For a slope parameter `beta >= 0` the iteration converges to the test
//! channel minimizing `I(X; X^) + beta E[d(X, X^)]`. A geometric bracket and
//! bisection on `beta` locate the target distortion; the final channel is
//! the convex combination of the two bracketing channels that meets the
//! target exactly, so the returned point never overshoots `D`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::prob::{Alphabet, Channel, JointPmf};

/// Distortion between source cells (rows) and reconstruction cells (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct DistortionMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    reconstruction: Vec<Alphabet>,
}

impl DistortionMatrix {
    /// Matrix from rows; the reconstruction axis is named `xhat`.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Validation("distortion matrix rows differ in length".into()));
        }
        let n = rows.len();
        let values = rows.into_iter().flatten().collect();
        DistortionMatrix::with_reconstruction(n, values, vec![Alphabet::indexed("xhat", cols)?])
    }

    /// Row-major matrix whose columns enumerate the product of `reconstruction`.
    pub fn with_reconstruction(rows: usize, values: Vec<f64>, reconstruction: Vec<Alphabet>) -> Result<Self> {
        let cols: usize = reconstruction.iter().map(Alphabet::len).product();
        if rows == 0 || cols == 0 || values.len() != rows * cols {
            return Err(Error::Validation(format!(
                "distortion matrix needs {rows}x{cols} entries, got {}",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::Validation(format!("distortion entry {v} must be finite and nonnegative")));
        }
        Ok(DistortionMatrix {
            rows,
            cols,
            values,
            reconstruction,
        })
    }

    /// Hamming distortion on `alphabet`, reconstructing into a copy named `<name>_hat`.
    pub fn hamming(alphabet: &Alphabet) -> Self {
        let n = alphabet.len();
        let values = (0..n * n).map(|k| if k / n == k % n { 0.0 } else { 1.0 }).collect();
        DistortionMatrix::with_reconstruction(n, values, vec![alphabet.renamed(crate::source::hat(alphabet.name()))])
            .expect("hamming matrix is valid")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.values[row * self.cols..(row + 1) * self.cols]
    }

    pub fn reconstruction(&self) -> &[Alphabet] {
        &self.reconstruction
    }
}

/// A point on the rate-distortion curve with its achieving test channel.
#[derive(Debug, Clone)]
pub struct RdPoint {
    /// Requested distortion.
    pub distortion: f64,
    /// Expected distortion of `channel`; never above `distortion` by more
    /// than rounding.
    pub achieved_distortion: f64,
    /// `I(X; X^)` of `channel`, in bits.
    pub rate: f64,
    pub channel: Channel,
    /// `dR/dD` in bits per unit distortion; `None` at the minimum-distortion end.
    pub slope: Option<f64>,
    /// Blahut–Arimoto iterations spent on this point.
    pub iterations: usize,
}

/// Minimum and maximum useful distortion for `prior` under `d`.
pub fn distortion_bounds(prior: &JointPmf, d: &DistortionMatrix) -> Result<(f64, f64)> {
    check_dims(prior, d)?;
    let p = prior.mass();
    let d_min = p
        .iter()
        .enumerate()
        .map(|(i, &pi)| pi * d.row(i).iter().copied().fold(f64::INFINITY, f64::min))
        .sum();
    let (_, d_max) = best_constant(p, d);
    Ok((d_min, d_max))
}

fn check_dims(prior: &JointPmf, d: &DistortionMatrix) -> Result<()> {
    if prior.mass().len() != d.rows {
        return Err(Error::Validation(format!(
            "distortion matrix has {} rows but the prior has {} cells",
            d.rows,
            prior.mass().len()
        )));
    }
    Ok(())
}

/// Lowest-index reconstruction minimizing the expected distortion.
fn best_constant(p: &[f64], d: &DistortionMatrix) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for j in 0..d.cols {
        let e: f64 = p.iter().enumerate().map(|(i, &pi)| pi * d.get(i, j)).sum();
        if e < best.1 {
            best = (j, e);
        }
    }
    best
}

/// Mutual information in bits between an input pmf and a channel's output.
pub(crate) fn channel_information(p: &[f64], w: &[f64], cols: usize) -> f64 {
    let mut q = vec![0.0; cols];
    for (i, &pi) in p.iter().enumerate() {
        for j in 0..cols {
            q[j] += pi * w[i * cols + j];
        }
    }
    let mut info = 0.0;
    for (i, &pi) in p.iter().enumerate() {
        if pi == 0.0 {
            continue;
        }
        for j in 0..cols {
            let wij = w[i * cols + j];
            if wij > 0.0 {
                info += pi * wij * (wij / q[j]).log2();
            }
        }
    }
    info.max(0.0)
}

fn expected_distortion(p: &[f64], w: &[f64], d: &DistortionMatrix) -> f64 {
    p.iter()
        .enumerate()
        .map(|(i, &pi)| {
            pi * w[i * d.cols..(i + 1) * d.cols]
                .iter()
                .zip(d.row(i))
                .map(|(a, b)| a * b)
                .sum::<f64>()
        })
        .sum()
}

/// Blahut–Arimoto solver settings.
#[derive(Debug, Clone, Copy)]
pub struct RdSolver {
    /// Stop when the Blahut bound gap (nats) falls below this.
    pub gap_tolerance: f64,
    pub max_iterations: usize,
    /// Bisection stops once the bracketing channel is this close to the target.
    pub distortion_tolerance: f64,
    pub max_bisections: usize,
}

impl Default for RdSolver {
    fn default() -> Self {
        RdSolver {
            gap_tolerance: 1e-12,
            max_iterations: 100_000,
            distortion_tolerance: 1e-10,
            max_bisections: 200,
        }
    }
}

/// Source restricted to symbols with positive probability.
struct Active<'a> {
    p: Vec<f64>,
    rows: Vec<usize>,
    d: &'a DistortionMatrix,
    row_min: Vec<f64>,
}

/// One solved slope: channel rows over the active symbols.
#[derive(Clone)]
struct Solved {
    beta: f64,
    w: Vec<f64>,
    distortion: f64,
}

impl RdSolver {
    pub fn distortion_bounds(&self, prior: &JointPmf, d: &DistortionMatrix) -> Result<(f64, f64)> {
        distortion_bounds(prior, d)
    }

    /// Iterates the output marginal for a fixed kernel `a[i][j]` (already
    /// shifted per row); returns the channel and iteration count.
    fn iterate(&self, act: &Active, a: &[f64], q: &mut [f64]) -> (Vec<f64>, usize) {
        let m = act.d.cols;
        let n = act.p.len();
        let mut denom = vec![0.0; n];
        let mut c = vec![0.0; m];
        let mut iters = 0;
        while iters < self.max_iterations {
            iters += 1;
            for i in 0..n {
                denom[i] = (0..m).map(|j| q[j] * a[i * m + j]).sum();
            }
            c.iter_mut().for_each(|v| *v = 0.0);
            for i in 0..n {
                let s = act.p[i] / denom[i];
                for j in 0..m {
                    c[j] += s * a[i * m + j];
                }
            }
            let max_c = c.iter().copied().fold(0.0, f64::max);
            let avg: f64 = q
                .iter()
                .zip(&c)
                .filter(|(&qj, _)| qj > 0.0)
                .map(|(&qj, &cj)| qj * cj.ln())
                .sum();
            for j in 0..m {
                q[j] *= c[j];
            }
            let total: f64 = q.iter().sum();
            q.iter_mut().for_each(|v| *v /= total);
            if max_c.ln() - avg < self.gap_tolerance {
                break;
            }
        }
        let mut w = vec![0.0; n * m];
        for i in 0..n {
            let row = &mut w[i * m..(i + 1) * m];
            for j in 0..m {
                row[j] = q[j] * a[i * m + j];
            }
            let s: f64 = row.iter().sum();
            row.iter_mut().for_each(|v| *v /= s);
        }
        (w, iters)
    }

    fn at_slope(&self, act: &Active, beta: f64, q: &mut [f64], iters: &mut usize) -> Solved {
        let m = act.d.cols;
        let mut a = vec![0.0; act.p.len() * m];
        for (k, &i) in act.rows.iter().enumerate() {
            for j in 0..m {
                a[k * m + j] = (-beta * (act.d.get(i, j) - act.row_min[k])).exp();
            }
        }
        // keep every column alive so the bracket search can revisit it
        q.iter_mut().for_each(|v| *v = v.max(1e-300));
        let (w, n) = self.iterate(act, &a, q);
        *iters += n;
        let distortion = act_distortion(act, &w);
        Solved { beta, w, distortion }
    }

    /// Minimum-information channel among those achieving the minimum distortion.
    fn at_min_distortion(&self, act: &Active, iters: &mut usize) -> Solved {
        let m = act.d.cols;
        let mut a = vec![0.0; act.p.len() * m];
        for (k, &i) in act.rows.iter().enumerate() {
            for j in 0..m {
                if act.d.get(i, j) <= act.row_min[k] {
                    a[k * m + j] = 1.0;
                }
            }
        }
        let mut q = vec![1.0 / m as f64; m];
        let (w, n) = self.iterate(act, &a, &mut q);
        *iters += n;
        let distortion = act_distortion(act, &w);
        Solved {
            beta: f64::INFINITY,
            w,
            distortion,
        }
    }

    pub fn solve(&self, prior: &JointPmf, d: &DistortionMatrix, target: f64) -> Result<RdPoint> {
        let (d_min, d_max) = distortion_bounds(prior, d)?;
        if !target.is_finite() || target < d_min - 1e-12 {
            return Err(Error::InfeasibleDistortion {
                requested: vec![target],
                minimum: vec![d_min],
            });
        }
        let p_full = prior.mass();
        let m = d.cols;
        let rows: Vec<usize> = (0..p_full.len()).filter(|&i| p_full[i] > 0.0).collect();
        let act = Active {
            p: rows.iter().map(|&i| p_full[i]).collect(),
            row_min: rows
                .iter()
                .map(|&i| d.row(i).iter().copied().fold(f64::INFINITY, f64::min))
                .collect(),
            rows,
            d,
        };
        let mut iters = 0;

        let (j0, _) = best_constant(p_full, d);
        let constant = Solved {
            beta: 0.0,
            w: (0..act.p.len() * m).map(|k| if k % m == j0 { 1.0 } else { 0.0 }).collect(),
            distortion: d_max,
        };
        if target >= d_max {
            return Ok(self.finish(prior, d, &act, target, &constant, None, iters));
        }
        let floor = self.at_min_distortion(&act, &mut iters);
        if target <= floor.distortion + self.distortion_tolerance {
            return Ok(self.finish(prior, d, &act, target, &floor, None, iters));
        }

        // lo: distortion above target; hi: at or below target
        let mut lo = constant;
        let mut hi = floor;
        let spread = (d_max - d_min).max(1e-300);
        let mut beta = 1.0 / spread;
        let mut q = vec![1.0 / m as f64; m];
        let beta_cap = 1e8 / spread;
        let first = self.at_slope(&act, beta, &mut q, &mut iters);
        let expand_up = first.distortion > target;
        let mut s = first;
        loop {
            if s.distortion > target {
                lo = s;
                if !expand_up {
                    break;
                }
                beta *= 2.0;
                if beta > beta_cap {
                    break;
                }
            } else {
                hi = s;
                if expand_up {
                    break;
                }
                beta /= 2.0;
                if beta < 1e-12 / spread {
                    break;
                }
            }
            s = self.at_slope(&act, beta, &mut q, &mut iters);
        }
        for _ in 0..self.max_bisections {
            if target - hi.distortion <= self.distortion_tolerance {
                break;
            }
            if !(lo.beta > 0.0 && hi.beta.is_finite()) {
                break;
            }
            let mid = (lo.beta * hi.beta).sqrt();
            if mid <= lo.beta || mid >= hi.beta {
                break;
            }
            let s = self.at_slope(&act, mid, &mut q, &mut iters);
            if s.distortion > target {
                lo = s;
            } else {
                hi = s;
            }
        }

        // time-share the bracket to land exactly on the target
        let lambda = if lo.distortion > hi.distortion {
            ((target - hi.distortion) / (lo.distortion - hi.distortion)).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let w: Vec<f64> = hi.w.iter().zip(&lo.w).map(|(h, l)| (1.0 - lambda) * h + lambda * l).collect();
        let mixed = Solved {
            beta: hi.beta,
            distortion: act_distortion(&act, &w),
            w,
        };
        let slope = hi.beta.is_finite().then(|| -hi.beta / std::f64::consts::LN_2);
        Ok(self.finish(prior, d, &act, target, &mixed, slope, iters))
    }

    #[allow(clippy::too_many_arguments)]
    fn finish(
        &self,
        prior: &JointPmf,
        d: &DistortionMatrix,
        act: &Active,
        target: f64,
        s: &Solved,
        slope: Option<f64>,
        iterations: usize,
    ) -> RdPoint {
        let m = d.cols;
        let n = prior.mass().len();
        let mut kernel = vec![0.0; n * m];
        for i in 0..n {
            // unused symbols go to their nearest reconstruction
            let row = d.row(i);
            let j = (0..m).fold(0, |b, j| if row[j] < row[b] { j } else { b });
            kernel[i * m + j] = 1.0;
        }
        for (k, &i) in act.rows.iter().enumerate() {
            kernel[i * m..(i + 1) * m].copy_from_slice(&s.w[k * m..(k + 1) * m]);
        }
        let rate = channel_information(prior.mass(), &kernel, m);
        let achieved = expected_distortion(prior.mass(), &kernel, d);
        let channel = Channel::new(prior.axes().to_vec(), d.reconstruction.clone(), kernel)
            .expect("solver rows are normalized");
        let slope = if s.beta == 0.0 { Some(0.0) } else { slope };
        RdPoint {
            distortion: target,
            achieved_distortion: achieved,
            rate,
            channel,
            slope,
            iterations,
        }
    }

    pub fn curve(&self, prior: &JointPmf, d: &DistortionMatrix, grid: &[f64]) -> Vec<Result<RdPoint>> {
        grid.par_iter().map(|&t| self.solve(prior, d, t)).collect()
    }
}

fn act_distortion(act: &Active, w: &[f64]) -> f64 {
    let m = act.d.cols;
    act.rows
        .iter()
        .enumerate()
        .map(|(k, &i)| {
            act.p[k]
                * w[k * m..(k + 1) * m]
                    .iter()
                    .zip(act.d.row(i))
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
        })
        .sum()
}

/// `R(D)` and its test channel with default solver settings.
pub fn rate_distortion(prior: &JointPmf, d: &DistortionMatrix, target: f64) -> Result<RdPoint> {
    RdSolver::default().solve(prior, d, target)
}

/// One result per grid value; infeasible values yield an error entry.
pub fn rd_curve(prior: &JointPmf, d: &DistortionMatrix, grid: &[f64]) -> Vec<Result<RdPoint>> {
    RdSolver::default().curve(prior, d, grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::binary_entropy;

    fn bern(p: f64) -> (JointPmf, DistortionMatrix) {
        let x = Alphabet::new("x", ["0", "1"]).unwrap();
        let prior = JointPmf::new(vec![x.clone()], vec![1.0 - p, p]).unwrap();
        (prior, DistortionMatrix::hamming(&x))
    }

    #[test]
    fn bounds_examples() {
        let (p, d) = bern(0.5);
        assert_eq!(distortion_bounds(&p, &d).unwrap(), (0.0, 0.5));
        let (p, d) = bern(0.0);
        assert_eq!(distortion_bounds(&p, &d).unwrap(), (0.0, 0.0));
        let c = DistortionMatrix::new(vec![vec![0.3; 3]; 2]).unwrap();
        let (lo, hi) = distortion_bounds(&p, &c).unwrap();
        assert!((lo - 0.3).abs() < 1e-15 && (hi - 0.3).abs() < 1e-15);
        let wrong = DistortionMatrix::new(vec![vec![0.0; 2]; 3]).unwrap();
        assert!(distortion_bounds(&p, &wrong).is_err());
    }

    #[test]
    fn binary_points() {
        let (p, d) = bern(0.5);
        let lossless = rate_distortion(&p, &d, 0.0).unwrap();
        assert!((lossless.rate - 1.0).abs() < 1e-9);
        assert!((lossless.channel.prob(0, 0) - 1.0).abs() < 1e-9);

        let zero = rate_distortion(&p, &d, 0.5).unwrap();
        assert_eq!(zero.rate, 0.0);
        assert_eq!(zero.channel.kernel(), &[1.0, 0.0, 1.0, 0.0]);

        let mid = rate_distortion(&p, &d, 0.11).unwrap();
        assert!((mid.rate - (1.0 - binary_entropy(0.11))).abs() < 1e-6);
        assert!((mid.rate - 0.5000).abs() < 1e-3);
        assert!(mid.achieved_distortion <= 0.11 + 1e-9);
        assert!((mid.channel.prob(0, 1) - 0.11).abs() < 1e-5);
    }

    #[test]
    fn infeasible_below_minimum() {
        let c = DistortionMatrix::new(vec![vec![0.3; 2]; 2]).unwrap();
        let (p, _) = bern(0.5);
        assert!(matches!(rate_distortion(&p, &c, 0.2), Err(Error::InfeasibleDistortion { .. })));
    }

    #[test]
    fn curve_examples() {
        let (p, d) = bern(0.5);
        let pts = rd_curve(&p, &d, &[0.0, 0.5]);
        assert!((pts[0].as_ref().unwrap().rate - 1.0).abs() < 1e-9);
        assert_eq!(pts[1].as_ref().unwrap().rate, 0.0);
        let pts = rd_curve(&p, &d, &[0.11, 0.25]);
        assert!((pts[0].as_ref().unwrap().rate - 0.5000).abs() < 1e-3);
        assert!((pts[1].as_ref().unwrap().rate - 0.1887).abs() < 1e-4);
        let single = rd_curve(&p, &d, &[0.25]);
        let direct = rate_distortion(&p, &d, 0.25).unwrap();
        assert_eq!(single[0].as_ref().unwrap().rate, direct.rate);
        let with_err = rd_curve(&p, &d, &[-0.1, 0.2]);
        assert!(with_err[0].is_err() && with_err[1].is_ok());
    }

    #[test]
    fn zero_probability_symbols_are_dropped() {
        let x = Alphabet::indexed("x", 3).unwrap();
        let prior = JointPmf::new(vec![x.clone()], vec![0.5, 0.0, 0.5]).unwrap();
        let d = DistortionMatrix::hamming(&x);
        let pt = rate_distortion(&prior, &d, 0.11).unwrap();
        assert!((pt.rate - (1.0 - binary_entropy(0.11))).abs() < 1e-6);
        assert_eq!(pt.channel.row(1), &[0.0, 1.0, 0.0]);
    }
}
