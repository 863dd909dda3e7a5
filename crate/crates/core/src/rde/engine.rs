//! Numerical core for the auxiliary-channel problems.
//!
//! The encoder is `V(u|c)` where the encoder input `c` is drawn from
//! `A(c|x)`; the induced channel is `W(u|x) = sum_c A(c|x) V(u|c)`. With the
//! decoder `g(u, z)` held fixed, `I(X;U|Z)` is convex in `V`, `H(Xh|U,Z)` is
//! concave and every distortion is linear, so each fixed-decoder problem is
//! convex. It is solved by an augmented Lagrangian whose inner problem is
//! minimized by entropic mirror descent with a backtracking step. The
//! decoder is then re-fit per `(u, z)` and the two steps alternate.
//!
//! Everything here works in nats.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Smallest encoder entry kept; keeps every logarithm finite.
const FLOOR: f64 = 1e-250;

#[derive(Debug, Clone)]
pub(crate) struct Problem {
    pub n_x: usize,
    pub n_z: usize,
    pub n_h: usize,
    pub n_r: usize,
    pub n_c: usize,
    pub n_u: usize,
    /// `p(x, z)` laid out as `[x * n_z + z]`.
    pub pxz: Vec<f64>,
    pub px: Vec<f64>,
    pub pz: Vec<f64>,
    /// Private tuple index of each source cell.
    pub h_of: Vec<usize>,
    /// Sparse `A(c|x)` rows.
    pub enc: Vec<Vec<(usize, f64)>>,
    /// Mass of each encoder input, `sum_x p(x) A(c|x)`.
    pub wc: Vec<f64>,
    /// Per constraint, distortion laid out as `[x * n_r + r]`.
    pub dist: Vec<Vec<f64>>,
}

impl Problem {
    pub fn new(
        pxz: Vec<f64>,
        n_z: usize,
        h_of: Vec<usize>,
        n_h: usize,
        enc: Vec<Vec<(usize, f64)>>,
        n_c: usize,
        dist: Vec<Vec<f64>>,
        n_r: usize,
        n_u: usize,
    ) -> Self {
        let n_x = pxz.len() / n_z;
        let px: Vec<f64> = (0..n_x).map(|x| pxz[x * n_z..(x + 1) * n_z].iter().sum()).collect();
        let pz: Vec<f64> = (0..n_z).map(|z| (0..n_x).map(|x| pxz[x * n_z + z]).sum()).collect();
        let mut wc = vec![0.0; n_c];
        for (x, row) in enc.iter().enumerate() {
            for &(c, a) in row {
                wc[c] += px[x] * a;
            }
        }
        Problem {
            n_x,
            n_z,
            n_h,
            n_r,
            n_c,
            n_u,
            pxz,
            px,
            pz,
            h_of,
            enc,
            wc,
            dist,
        }
    }

    pub fn n_constraints(&self) -> usize {
        self.dist.len()
    }

    pub fn channel(&self, v: &[f64]) -> Vec<f64> {
        let n_u = self.n_u;
        let mut w = vec![0.0; self.n_x * n_u];
        for (x, row) in self.enc.iter().enumerate() {
            for &(c, a) in row {
                for u in 0..n_u {
                    w[x * n_u + u] += a * v[c * n_u + u];
                }
            }
        }
        w
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Decoder {
    /// `g(u, z) = u`; requires `n_u == n_r`.
    Identity,
    /// `g(u, z) = table[u * n_z + z]`.
    Table(Vec<usize>),
}

impl Decoder {
    pub fn get(&self, u: usize, z: usize, n_z: usize) -> usize {
        match self {
            Decoder::Identity => u,
            Decoder::Table(t) => t[u * n_z + z],
        }
    }

    pub fn table(&self, n_u: usize, n_z: usize) -> Vec<usize> {
        (0..n_u * n_z).map(|k| self.get(k / n_z, k % n_z, n_z)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Goal {
    MaxEquivocation,
    MinRate,
}

#[derive(Debug, Clone)]
pub(crate) struct Targets {
    pub distortion: Vec<f64>,
    /// Minimum equivocation in nats.
    pub equivocation: Option<f64>,
}

#[derive(Debug, Clone, Default)]
pub(crate) struct Metrics {
    /// `I(X;U|Z)` in nats.
    pub rate: f64,
    /// `H(Xh|U,Z)` in nats.
    pub equivocation: f64,
    pub distortion: Vec<f64>,
}

/// Marginals of the joint `p(x, z) W(u|x)` needed by objective and gradient.
struct Joint {
    w: Vec<f64>,
    quz: Vec<f64>,
    phuz: Vec<f64>,
}

fn xlogy(x: f64, y: f64) -> f64 {
    if x > 0.0 {
        x * y.ln()
    } else {
        0.0
    }
}

impl Problem {
    fn joint(&self, v: &[f64]) -> Joint {
        let (n_u, n_z) = (self.n_u, self.n_z);
        let w = self.channel(v);
        let mut quz = vec![0.0; n_u * n_z];
        let mut phuz = vec![0.0; self.n_h * n_u * n_z];
        for x in 0..self.n_x {
            let h = self.h_of[x];
            for z in 0..n_z {
                let p = self.pxz[x * n_z + z];
                if p == 0.0 {
                    continue;
                }
                for u in 0..n_u {
                    let m = p * w[x * n_u + u];
                    quz[u * n_z + z] += m;
                    phuz[(h * n_u + u) * n_z + z] += m;
                }
            }
        }
        Joint { w, quz, phuz }
    }

    fn metrics_of(&self, j: &Joint, decoder: &Decoder) -> Metrics {
        let (n_u, n_z, n_r) = (self.n_u, self.n_z, self.n_r);
        let mut rate = 0.0;
        for x in 0..self.n_x {
            for u in 0..n_u {
                let w = j.w[x * n_u + u];
                rate += self.px[x] * xlogy(w, w);
            }
        }
        for u in 0..n_u {
            for z in 0..n_z {
                let q = j.quz[u * n_z + z];
                if q > 0.0 {
                    rate -= q * (q / self.pz[z]).ln();
                }
            }
        }
        let mut equivocation = 0.0;
        for h in 0..self.n_h {
            for u in 0..n_u {
                for z in 0..n_z {
                    let m = j.phuz[(h * n_u + u) * n_z + z];
                    if m > 0.0 {
                        equivocation -= m * (m / j.quz[u * n_z + z]).ln();
                    }
                }
            }
        }
        let mut distortion = vec![0.0; self.dist.len()];
        for x in 0..self.n_x {
            for z in 0..n_z {
                let p = self.pxz[x * n_z + z];
                if p == 0.0 {
                    continue;
                }
                for u in 0..n_u {
                    let r = decoder.get(u, z, n_z);
                    let m = p * j.w[x * n_u + u];
                    for (acc, d) in distortion.iter_mut().zip(&self.dist) {
                        *acc += m * d[x * n_r + r];
                    }
                }
            }
        }
        Metrics {
            rate: rate.max(0.0),
            equivocation: equivocation.max(0.0),
            distortion,
        }
    }

    pub fn metrics(&self, v: &[f64], decoder: &Decoder) -> Metrics {
        self.metrics_of(&self.joint(v), decoder)
    }

    /// Distortion-minimizing decoder for the encoder `v`, weighting the
    /// constraints by `weights`. Cells with no mass keep `previous`.
    pub fn fit_decoder(&self, v: &[f64], weights: &[f64], previous: Option<&[usize]>) -> Vec<usize> {
        let (n_u, n_z, n_r) = (self.n_u, self.n_z, self.n_r);
        let w = self.channel(v);
        let mut out = Vec::with_capacity(n_u * n_z);
        let mut cost = vec![0.0; n_r];
        for u in 0..n_u {
            for z in 0..n_z {
                cost.iter_mut().for_each(|c| *c = 0.0);
                let mut mass = 0.0;
                for x in 0..self.n_x {
                    let m = self.pxz[x * n_z + z] * w[x * n_u + u];
                    if m == 0.0 {
                        continue;
                    }
                    mass += m;
                    for (l, d) in self.dist.iter().enumerate() {
                        for r in 0..n_r {
                            cost[r] += m * weights[l] * d[x * n_r + r];
                        }
                    }
                }
                let k = u * n_z + z;
                if mass < 1e-13 {
                    if let Some(p) = previous {
                        out.push(p[k]);
                        continue;
                    }
                }
                let best = (0..n_r).fold(0, |b, r| if cost[r] < cost[b] { r } else { b });
                out.push(best);
            }
        }
        out
    }
}

/// Multipliers and penalty of the augmented Lagrangian.
struct Augmented<'a> {
    goal: Goal,
    targets: &'a Targets,
    lambda: Vec<f64>,
    rho: f64,
}

impl Augmented<'_> {
    /// Constraint values `c_i <= 0`: distortions first, then equivocation.
    fn constraints(&self, m: &Metrics) -> Vec<f64> {
        let mut c: Vec<f64> = m
            .distortion
            .iter()
            .zip(&self.targets.distortion)
            .map(|(d, t)| d - t)
            .collect();
        if let Some(e) = self.targets.equivocation {
            c.push(e - m.equivocation);
        }
        c
    }

    fn objective(&self, m: &Metrics) -> f64 {
        match self.goal {
            Goal::MaxEquivocation => -m.equivocation,
            Goal::MinRate => m.rate,
        }
    }

    fn value(&self, m: &Metrics) -> f64 {
        let c = self.constraints(m);
        let pen: f64 = c
            .iter()
            .zip(&self.lambda)
            .map(|(&ci, &li)| {
                let s = (li + self.rho * ci).max(0.0);
                (s * s - li * li) / (2.0 * self.rho)
            })
            .sum();
        self.objective(m) + pen
    }

    /// Coefficients on (rate, -equivocation, distortion_l) in the gradient.
    fn weights(&self, m: &Metrics) -> (f64, f64, Vec<f64>) {
        let c = self.constraints(m);
        let mult: Vec<f64> = c
            .iter()
            .zip(&self.lambda)
            .map(|(&ci, &li)| (li + self.rho * ci).max(0.0))
            .collect();
        let n_l = self.targets.distortion.len();
        let (mut a_rate, mut a_neq) = match self.goal {
            Goal::MaxEquivocation => (0.0, 1.0),
            Goal::MinRate => (1.0, 0.0),
        };
        if self.targets.equivocation.is_some() {
            a_neq += mult[n_l];
        }
        if a_rate < 0.0 {
            a_rate = 0.0;
        }
        (a_rate, a_neq, mult[..n_l].to_vec())
    }
}

impl Augmented<'_> {
    /// Gradient coefficients of the plain Lagrangian at the current multipliers.
    fn multiplier_weights(&self) -> (f64, f64, Vec<f64>) {
        let n_l = self.targets.distortion.len();
        let (a_rate, mut a_neq) = match self.goal {
            Goal::MaxEquivocation => (0.0, 1.0),
            Goal::MinRate => (1.0, 0.0),
        };
        if self.targets.equivocation.is_some() {
            a_neq += self.lambda[n_l];
        }
        (a_rate, a_neq, self.lambda[..n_l].to_vec())
    }
}

impl Problem {
    /// Gradient of the weighted objective with respect to `V(u|c)`.
    fn gradient(&self, j: &Joint, decoder: &Decoder, a_rate: f64, a_neq: f64, a_dist: &[f64]) -> Vec<f64> {
        let (n_u, n_z, n_r) = (self.n_u, self.n_z, self.n_r);
        let mut gv = vec![0.0; self.n_c * n_u];
        let mut gw = vec![0.0; n_u];
        for x in 0..self.n_x {
            if self.px[x] == 0.0 {
                continue;
            }
            let h = self.h_of[x];
            for u in 0..n_u {
                let mut g = 0.0;
                if a_rate != 0.0 {
                    g += a_rate * self.px[x] * j.w[x * n_u + u].max(FLOOR).ln();
                }
                for z in 0..n_z {
                    let p = self.pxz[x * n_z + z];
                    if p == 0.0 {
                        continue;
                    }
                    let q = j.quz[u * n_z + z].max(FLOOR);
                    if a_rate != 0.0 {
                        g -= a_rate * p * (q / self.pz[z]).ln();
                    }
                    if a_neq != 0.0 {
                        let ph = j.phuz[(h * n_u + u) * n_z + z].max(FLOOR);
                        g += a_neq * p * (ph / q).ln();
                    }
                    let r = decoder.get(u, z, n_z);
                    for (l, d) in self.dist.iter().enumerate() {
                        g += a_dist[l] * p * d[x * n_r + r];
                    }
                }
                gw[u] = g;
            }
            for &(c, a) in &self.enc[x] {
                for u in 0..n_u {
                    gv[c * n_u + u] += a * gw[u];
                }
            }
        }
        gv
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct EngineSettings {
    pub inner_tolerance: f64,
    pub max_inner: usize,
    pub feasibility_tolerance: f64,
    pub max_outer: usize,
    pub max_alternations: usize,
}

impl Default for EngineSettings {
    fn default() -> Self {
        EngineSettings {
            inner_tolerance: 1e-10,
            max_inner: 4_000,
            feasibility_tolerance: 1e-8,
            max_outer: 60,
            max_alternations: 30,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Solution {
    pub v: Vec<f64>,
    pub decoder: Decoder,
    pub metrics: Metrics,
    pub multipliers: Vec<f64>,
    pub iterations: usize,
}

fn normalize_rows(v: &mut [f64], n_u: usize) {
    for row in v.chunks_mut(n_u) {
        let s: f64 = row.iter().sum();
        row.iter_mut().for_each(|x| *x = (*x / s).max(FLOOR));
        let s: f64 = row.iter().sum();
        row.iter_mut().for_each(|x| *x /= s);
    }
}

impl Problem {
    /// Mirror-descent step `V' ~ V exp(-eta G / w_c)` on every encoder row.
    fn step(&self, v: &[f64], g: &[f64], eta: f64) -> Vec<f64> {
        let n_u = self.n_u;
        let mut out = v.to_vec();
        for c in 0..self.n_c {
            if self.wc[c] <= 0.0 {
                continue;
            }
            let row = &mut out[c * n_u..(c + 1) * n_u];
            let gr = &g[c * n_u..(c + 1) * n_u];
            let logs: Vec<f64> = (0..n_u).map(|u| v[c * n_u + u].ln() - eta * gr[u] / self.wc[c]).collect();
            let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            for u in 0..n_u {
                row[u] = (logs[u] - top).exp();
            }
        }
        normalize_rows(&mut out, n_u);
        out
    }

    fn fw_gap(&self, v: &[f64], g: &[f64]) -> f64 {
        let n_u = self.n_u;
        (0..self.n_c)
            .filter(|&c| self.wc[c] > 0.0)
            .map(|c| {
                let gr = &g[c * n_u..(c + 1) * n_u];
                let lin: f64 = (0..n_u).map(|u| v[c * n_u + u] * gr[u]).sum();
                lin - gr.iter().copied().fold(f64::INFINITY, f64::min)
            })
            .sum()
    }

    fn weighted_kl(&self, a: &[f64], b: &[f64]) -> f64 {
        let n_u = self.n_u;
        (0..self.n_c)
            .map(|c| {
                self.wc[c]
                    * (0..n_u)
                        .map(|u| {
                            let (p, q) = (a[c * n_u + u], b[c * n_u + u]);
                            xlogy(p, p / q)
                        })
                        .sum::<f64>()
            })
            .sum()
    }

    /// Minimizes the augmented Lagrangian over `V` for fixed multipliers.
    fn inner(&self, aug: &Augmented, decoder: &Decoder, v: &mut Vec<f64>, tolerance: f64, s: &EngineSettings) -> usize {
        let mut eta = 1.0;
        let mut j = self.joint(v);
        let mut m = self.metrics_of(&j, decoder);
        let mut val = aug.value(&m);
        let mut checkpoint = val;
        for it in 0..s.max_inner {
            let (ar, an, ad) = aug.weights(&m);
            let g = self.gradient(&j, decoder, ar, an, &ad);
            if self.fw_gap(v, &g) < tolerance {
                return it;
            }
            if it % 100 == 99 {
                // flat directions toward unused symbols converge very slowly
                if checkpoint - val < 1e-12 * (1.0 + val.abs()) {
                    return it;
                }
                checkpoint = val;
            }
            loop {
                let cand = self.step(v, &g, eta);
                let cj = self.joint(&cand);
                let cm = self.metrics_of(&cj, decoder);
                let cval = aug.value(&cm);
                let lin: f64 = g.iter().zip(cand.iter().zip(v.iter())).map(|(gi, (a, b))| gi * (a - b)).sum();
                let bound = val + lin + self.weighted_kl(&cand, v) / eta;
                if cval <= bound + 1e-15 * val.abs().max(1.0) {
                    let stalled = (val - cval).abs() <= 1e-16 * val.abs().max(1.0);
                    *v = cand;
                    j = cj;
                    m = cm;
                    val = cval;
                    eta = (eta * 1.5).min(1e6);
                    if stalled && eta < 1e-12 {
                        return it;
                    }
                    break;
                }
                eta *= 0.5;
                if eta < 1e-14 {
                    return it;
                }
            }
        }
        s.max_inner
    }

    /// Solves the fixed-decoder problem from the starting encoder `v`.
    pub fn solve_fixed(
        &self,
        goal: Goal,
        targets: &Targets,
        decoder: &Decoder,
        mut v: Vec<f64>,
        lambda: Option<&[f64]>,
        s: &EngineSettings,
    ) -> Solution {
        let n_cons = targets.distortion.len() + usize::from(targets.equivocation.is_some());
        let lambda = match lambda {
            Some(l) if l.len() == n_cons => l.to_vec(),
            _ => vec![0.0; n_cons],
        };
        let mut aug = Augmented {
            goal,
            targets,
            lambda,
            rho: 10.0,
        };
        let mut iterations = 0;
        for pass in 0..4 {
            if pass > 0 {
                // an encoder symbol that collapsed early cannot come back
                // once the penalty is stiff; reopen it and start over
                let (ar, an, ad) = aug.multiplier_weights();
                let j = self.joint(&v);
                let g = self.gradient(&j, decoder, ar, an, &ad);
                if self.fw_gap(&v, &g) <= 1e-7 {
                    break;
                }
                let n_u = self.n_u as f64;
                v.iter_mut().for_each(|x| *x = 0.999 * *x + 1e-3 / n_u);
                aug.rho = 10.0;
            }
            iterations += self.run_multipliers(&mut aug, decoder, &mut v, s);
        }
        let metrics = self.metrics(&v, decoder);
        Solution {
            v,
            decoder: decoder.clone(),
            metrics,
            multipliers: aug.lambda,
            iterations,
        }
    }

    /// Augmented-Lagrangian outer loop; returns the inner iterations spent.
    fn run_multipliers(&self, aug: &mut Augmented, decoder: &Decoder, v: &mut Vec<f64>, s: &EngineSettings) -> usize {
        let mut iterations = 0;
        let mut prev_violation = f64::INFINITY;
        let mut tolerance = 1e-7_f64.max(s.inner_tolerance);
        for _ in 0..s.max_outer {
            let n = self.inner(aug, decoder, v, tolerance, s);
            iterations += n;
            let m = self.metrics(v, decoder);
            let c = aug.constraints(&m);
            let violation = c.iter().copied().fold(0.0, f64::max);
            let shift = c
                .iter()
                .zip(&aug.lambda)
                .map(|(ci, li)| ((li + aug.rho * ci).max(0.0) - li).abs())
                .fold(0.0, f64::max);
            for (li, ci) in aug.lambda.iter_mut().zip(&c) {
                *li = (*li + aug.rho * ci).max(0.0);
            }
            let converged = tolerance <= s.inner_tolerance;
            if converged && violation <= s.feasibility_tolerance && shift <= 1e-7 * (1.0 + aug.rho) {
                break;
            }
            // no progress left at the largest penalty
            if converged && aug.rho >= 1e6 && n <= 1 && violation <= 100.0 * s.feasibility_tolerance {
                break;
            }
            if violation > s.feasibility_tolerance && violation > 0.25 * prev_violation {
                aug.rho = (aug.rho * 10.0).min(1e6);
            }
            prev_violation = violation;
            tolerance = (tolerance * 0.1).max(s.inner_tolerance);
        }
        iterations
    }

    /// Alternates fixed-decoder solves with decoder refits, keeping the best
    /// feasible iterate.
    pub fn solve_alternating(
        &self,
        goal: Goal,
        targets: &Targets,
        decoder: Decoder,
        v: Vec<f64>,
        s: &EngineSettings,
        slack: (f64, f64),
    ) -> Option<Solution> {
        let mut decoder = decoder;
        let mut v = v;
        let mut lambda: Option<Vec<f64>> = None;
        let mut best: Option<Solution> = None;
        let mut iterations = 0;
        let mut previous = f64::INFINITY;
        for _ in 0..s.max_alternations.max(1) {
            let sol = self.solve_fixed(goal, targets, &decoder, v, lambda.as_deref(), s);
            iterations += sol.iterations;
            if feasible(&sol.metrics, targets, slack) && better(goal, &sol, best.as_ref()) {
                best = Some(sol.clone());
            }
            let value = match goal {
                Goal::MaxEquivocation => -sol.metrics.equivocation,
                Goal::MinRate => sol.metrics.rate,
            };
            let stalled = value > previous - 1e-12;
            previous = previous.min(value);
            let Decoder::Table(current) = &decoder else {
                break;
            };
            let any = sol.multipliers.iter().take(self.n_constraints()).any(|&m| m > 0.0);
            let weights: Vec<f64> = sol
                .multipliers
                .iter()
                .take(self.n_constraints())
                .map(|&m| if any { m + 1e-9 } else { 1.0 })
                .collect();
            let next = self.fit_decoder(&sol.v, &weights, Some(current));
            if &next == current || stalled {
                break;
            }
            decoder = Decoder::Table(next);
            lambda = Some(sol.multipliers);
            v = sol.v;
        }
        if let Some(b) = best.as_mut() {
            b.iterations = iterations;
        }
        best
    }
}

pub(crate) fn feasible(m: &Metrics, t: &Targets, slack: (f64, f64)) -> bool {
    m.distortion.iter().zip(&t.distortion).all(|(d, b)| *d <= b + slack.0)
        && t.equivocation.is_none_or(|e| m.equivocation >= e - slack.1)
}

pub(crate) fn better(goal: Goal, a: &Solution, b: Option<&Solution>) -> bool {
    match b {
        None => true,
        Some(b) => match goal {
            Goal::MaxEquivocation => a.metrics.equivocation > b.metrics.equivocation,
            Goal::MinRate => a.metrics.rate < b.metrics.rate,
        },
    }
}

/// Uniform encoder.
pub(crate) fn uniform(n_c: usize, n_u: usize) -> Vec<f64> {
    vec![1.0 / n_u as f64; n_c * n_u]
}

/// Random encoder rows drawn uniformly from the simplex.
pub(crate) fn random_encoder(n_c: usize, n_u: usize, seed: u64, stream: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut v: Vec<f64> = (0..n_c * n_u).map(|_| -rng.gen::<f64>().max(1e-300).ln()).collect();
    normalize_rows(&mut v, n_u);
    v
}

/// Deterministic encoder `u = map[c]`, floored to stay in the interior.
pub(crate) fn deterministic_encoder(map: &[usize], n_u: usize) -> Vec<f64> {
    let mut v = vec![0.0; map.len() * n_u];
    for (c, &u) in map.iter().enumerate() {
        v[c * n_u + u] = 1.0;
    }
    normalize_rows(&mut v, n_u);
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::binary_entropy;

    /// Uniform bit, K = 1, no side information, U = X^.
    fn binary(n_u: usize) -> Problem {
        let ham = vec![0.0, 1.0, 1.0, 0.0];
        Problem::new(
            vec![0.5, 0.5],
            1,
            vec![0, 1],
            2,
            vec![vec![(0, 1.0)], vec![(1, 1.0)]],
            2,
            vec![ham],
            2,
            n_u,
        )
    }

    #[test]
    fn gradient_matches_finite_differences() {
        // side information and an overlap between public and private parts
        let pxz = vec![0.1, 0.05, 0.2, 0.05, 0.15, 0.1, 0.05, 0.3];
        let d = vec![0.0, 1.0, 1.0, 0.0, 0.5, 0.7, 0.9, 0.2];
        let p = Problem::new(
            pxz,
            2,
            vec![0, 1, 0, 1],
            2,
            (0..4).map(|x| vec![(x, 1.0)]).collect(),
            4,
            vec![d],
            2,
            3,
        );
        let dec = Decoder::Table(vec![0, 1, 1, 0, 0, 1]);
        let v = random_encoder(4, 3, 7, 0);
        let targets = Targets {
            distortion: vec![0.2],
            equivocation: Some(0.3),
        };
        let aug = Augmented {
            goal: Goal::MinRate,
            targets: &targets,
            lambda: vec![0.4, 0.7],
            rho: 3.0,
        };
        let j = p.joint(&v);
        let m = p.metrics_of(&j, &dec);
        let (ar, an, ad) = aug.weights(&m);
        let g = p.gradient(&j, &dec, ar, an, &ad);
        let h = 1e-6;
        for k in 0..v.len() {
            let mut plus = v.clone();
            plus[k] += h;
            let mut minus = v.clone();
            minus[k] -= h;
            // the augmented value's gradient equals the weighted gradient
            // away from the max(0, .) kink
            let fd = (aug.value(&p.metrics(&plus, &dec)) - aug.value(&p.metrics(&minus, &dec))) / (2.0 * h);
            assert!((fd - g[k]).abs() < 1e-6, "k={k}: fd {fd} vs {}", g[k]);
        }
    }

    #[test]
    fn max_equivocation_matches_binary_oracle() {
        let p = binary(2);
        let t = Targets {
            distortion: vec![0.11],
            equivocation: None,
        };
        let s = p.solve_fixed(Goal::MaxEquivocation, &t, &Decoder::Identity, uniform(2, 2), None, &EngineSettings::default());
        let bits = s.metrics.equivocation / std::f64::consts::LN_2;
        assert!((bits - binary_entropy(0.11)).abs() < 1e-6, "{bits}");
        assert!(s.metrics.distortion[0] <= 0.11 + 1e-8);
    }

    #[test]
    fn min_rate_matches_binary_oracle() {
        let p = binary(2);
        let t = Targets {
            distortion: vec![0.11],
            equivocation: Some(0.3 * std::f64::consts::LN_2),
        };
        let s = p.solve_fixed(Goal::MinRate, &t, &Decoder::Identity, uniform(2, 2), None, &EngineSettings::default());
        let bits = s.metrics.rate / std::f64::consts::LN_2;
        assert!((bits - (1.0 - binary_entropy(0.11))).abs() < 1e-6, "{bits}");
    }

    #[test]
    fn table_decoder_with_extra_symbols() {
        let p = binary(4);
        let t = Targets {
            distortion: vec![0.11],
            equivocation: None,
        };
        let dec = Decoder::Table(vec![0, 1, 0, 1]);
        let s = p
            .solve_alternating(Goal::MinRate, &t, dec, random_encoder(2, 4, 1, 0), &EngineSettings::default(), (1e-6, 1e-6))
            .unwrap();
        let bits = s.metrics.rate / std::f64::consts::LN_2;
        assert!((bits - (1.0 - binary_entropy(0.11))).abs() < 1e-5, "{bits}");
    }
}
