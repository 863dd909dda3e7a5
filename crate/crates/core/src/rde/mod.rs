//! Maximal equivocation `Γ(D)`, minimal rate `R(D,E)` and the tradeoff
//! region over auxiliary channels `p(u | x)` with a decoder `g(u, z)`.

mod brute;
mod engine;

use std::f64::consts::LN_2;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{
    attach_channel, conditional_entropy, marginalize, mutual_information, product_size, Alphabet, Channel,
};
use crate::rd::RdSolver;
use crate::source::SourceSpec;

pub use brute::brute_force_rde;
pub(crate) use engine::{Decoder, EngineSettings, Goal, Problem, Targets};
use engine::{better, deterministic_encoder, feasible, random_encoder, uniform, Solution};

/// Name of the auxiliary axis in stored channels.
pub const AUX: &str = "_u";

/// Slack on distortion constraints, in distortion units.
pub const DISTORTION_SLACK: f64 = 1e-6;
/// Slack on the equivocation constraint, in bits.
pub const EQUIVOCATION_SLACK: f64 = 1e-6;

/// Solver path chosen for a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CaseTag {
    /// Side information is constant; the auxiliary variable is the reconstruction.
    NoSideInfo,
    /// Disjoint roles with `Xh - Xr - Z`; the encoder sees the public part only.
    WynerZivMarkov,
    /// One attribute that is both public and private, no side information, one constraint.
    CensusK1,
    General,
}

impl fmt::Display for CaseTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CaseTag::NoSideInfo => "no-side-info",
            CaseTag::WynerZivMarkov => "wyner-ziv-markov",
            CaseTag::CensusK1 => "census-K1",
            CaseTag::General => "general",
        })
    }
}

impl std::str::FromStr for CaseTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "no-side-info" => Ok(CaseTag::NoSideInfo),
            "wyner-ziv-markov" => Ok(CaseTag::WynerZivMarkov),
            "census-K1" | "census-k1" => Ok(CaseTag::CensusK1),
            "general" => Ok(CaseTag::General),
            _ => Err(Error::Parse(format!("unknown solver path `{s}`"))),
        }
    }
}

/// Which attributes the encoder may condition on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EncoderInputs {
    #[default]
    AllAttributes,
    EncodedSet,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Starting points for the non-convex paths.
    pub restarts: usize,
    pub seed: u64,
    /// Overrides the auxiliary alphabet size on the non-convex paths.
    pub aux_size: Option<usize>,
    /// Forces a solver path instead of the dispatched one.
    pub path: Option<CaseTag>,
    pub encoder_inputs: EncoderInputs,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            restarts: 16,
            seed: 0,
            aux_size: None,
            path: None,
            encoder_inputs: EncoderInputs::AllAttributes,
        }
    }
}

/// An auxiliary channel with its decoder and operating point.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxChannelSolution {
    pub aux_alphabet: Alphabet,
    /// `p(u | x)` over all attributes.
    pub channel: Channel,
    /// The same channel over the attributes the encoder actually reads.
    pub encoder: Channel,
    pub side_info: Alphabet,
    pub reconstruction: Vec<Alphabet>,
    /// Reconstruction tuple for `(u, z)`, stored at `u * |Z| + z`.
    pub decoder: Vec<usize>,
    /// `I(X;U) - I(Z;U)` in bits.
    pub rate: f64,
    /// `H(Xh | U, Z)` in bits.
    pub equivocation: f64,
    pub distortion: Vec<f64>,
}

/// Operating point recomputed from a stored channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Verified {
    pub rate: f64,
    pub equivocation: f64,
    pub distortion: Vec<f64>,
}

impl AuxChannelSolution {
    pub fn decode(&self, u: usize, z: usize) -> usize {
        self.decoder[u * self.side_info.len() + z]
    }

    /// Recomputes rate, equivocation and distortions from the stored channel
    /// and decoder with the generic information functions.
    pub fn verify(&self, spec: &SourceSpec) -> Result<Verified> {
        let joint = attach_channel(spec.joint(), &self.channel)?;
        let attrs: Vec<&str> = spec.roles().all().iter().map(String::as_str).collect();
        let private: Vec<&str> = spec.roles().private().iter().map(String::as_str).collect();
        let z = spec.side_info_axis().name();
        let rate = mutual_information(&joint, &attrs, &[AUX])? - mutual_information(&joint, &[z], &[AUX])?;
        let equivocation = conditional_entropy(&joint, &private, &[AUX, z])?;
        let dec = Channel::deterministic(
            vec![self.aux_alphabet.clone(), self.side_info.clone()],
            self.reconstruction.clone(),
            &self.decoder,
        )?;
        let full = attach_channel(&joint, &dec)?;
        let keep: Vec<&str> = spec
            .roles()
            .public()
            .iter()
            .map(String::as_str)
            .chain(self.reconstruction.iter().map(Alphabet::name))
            .collect();
        let pr = marginalize(&full, &keep)?;
        let distortion = spec
            .distortions()
            .iter()
            .map(|d| pr.mass().iter().zip(d.values()).map(|(p, v)| p * v).sum())
            .collect();
        Ok(Verified {
            rate: rate.max(0.0),
            equivocation,
            distortion,
        })
    }
}

/// Solver bookkeeping reported alongside a result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub path: CaseTag,
    pub aux_size: usize,
    /// True when the auxiliary size is the additive guess used for several constraints.
    pub aux_size_is_guess: bool,
    pub restarts: usize,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub struct RdeOutcome {
    /// `Γ(D)` or `R(D,E)` in bits.
    pub value: f64,
    pub solution: AuxChannelSolution,
    pub stats: SolveStats,
}

/// One `(D, E)` cell of a tradeoff sweep.
#[derive(Debug, Clone)]
pub struct TradeoffPoint {
    pub distortion: Vec<f64>,
    pub equivocation: f64,
    /// `R(D,E)` in bits when feasible.
    pub rate: Option<f64>,
    /// `Γ(D)` in bits when the distortion vector is feasible.
    pub gamma: Option<f64>,
    pub feasible: bool,
    /// Why the point is infeasible.
    pub reason: Option<String>,
    pub solution: Option<AuxChannelSolution>,
}

// ---------------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------------

fn is_census(spec: &SourceSpec) -> bool {
    let r = spec.roles();
    r.all().len() == 1 && r.public() == r.all() && r.private() == r.all()
}

/// `Xh - Xr - Z` holds to rounding.
fn markov_private_public_side(spec: &SourceSpec) -> bool {
    let r = spec.roles();
    let public: Vec<&str> = r.public().iter().map(String::as_str).collect();
    let private: Vec<&str> = r.private().iter().map(String::as_str).collect();
    let z = spec.side_info_axis().name();
    let given: Vec<&str> = public.iter().copied().chain([z]).collect();
    match (
        conditional_entropy(spec.joint(), &private, &public),
        conditional_entropy(spec.joint(), &private, &given),
    ) {
        (Ok(a), Ok(b)) => a - b <= 1e-12,
        _ => false,
    }
}

/// Picks the solver path for a model.
pub fn dispatch_special_case(spec: &SourceSpec) -> CaseTag {
    let constant_z = spec.side_info_is_constant();
    if constant_z && is_census(spec) && spec.distortions().len() == 1 {
        CaseTag::CensusK1
    } else if constant_z {
        CaseTag::NoSideInfo
    } else if !spec.roles().overlapping() && markov_private_public_side(spec) {
        CaseTag::WynerZivMarkov
    } else {
        CaseTag::General
    }
}

// ---------------------------------------------------------------------------
// Problem setup
// ---------------------------------------------------------------------------

pub(crate) struct Setup {
    pub path: CaseTag,
    pub problem: Problem,
    pub inputs: Vec<String>,
    /// Encoder input of every source cell.
    pub input_of: Vec<usize>,
    /// Public tuple of every source cell.
    pub public_of: Vec<usize>,
    pub table_decoder: bool,
    pub aux_size_is_guess: bool,
}

pub(crate) fn setup(spec: &SourceSpec, cfg: &SolverConfig) -> Result<Setup> {
    let path = cfg.path.unwrap_or_else(|| dispatch_special_case(spec));
    let roles = spec.roles();
    let n_l = spec.distortions().len();
    match path {
        CaseTag::CensusK1 if !(is_census(spec) && spec.side_info_is_constant() && n_l == 1) => {
            return Err(Error::UnsupportedModel(
                "the census path needs one attribute that is both public and private, \
                 constant side information and one utility constraint"
                    .into(),
            ))
        }
        CaseTag::NoSideInfo if !spec.side_info_is_constant() => {
            return Err(Error::UnsupportedModel(
                "the no-side-info path needs constant side information".into(),
            ))
        }
        CaseTag::WynerZivMarkov if roles.overlapping() => {
            return Err(Error::UnsupportedModel(
                "the Wyner-Ziv path needs disjoint public and private attributes".into(),
            ))
        }
        _ => {}
    }
    let inputs: Vec<String> = match (path, cfg.encoder_inputs) {
        (CaseTag::WynerZivMarkov, _) => roles.public().to_vec(),
        (_, EncoderInputs::AllAttributes) => roles.all().to_vec(),
        (_, EncoderInputs::EncodedSet) => roles.encoded().to_vec(),
    };
    let n_z = spec.side_info_axis().len();
    let input_of = spec.projection(&inputs);
    let n_c = product_size(&spec.axes_of(&inputs));
    let public_of = spec.projection(roles.public());
    let h_of = spec.projection(roles.private());
    let n_h = product_size(&spec.axes_of(roles.private()));
    let n_r = product_size(spec.reconstruction());
    let dist: Vec<Vec<f64>> = spec
        .distortions()
        .iter()
        .map(|d| public_of.iter().flat_map(|&p| d.row(p).iter().copied()).collect())
        .collect();
    let table_decoder = matches!(path, CaseTag::WynerZivMarkov | CaseTag::General);
    let (n_u, guess) = if table_decoder {
        match cfg.aux_size {
            Some(0) => return Err(Error::Validation("auxiliary alphabet size must be positive".into())),
            Some(n) => (n, false),
            None => (n_c + 1 + n_l, n_l > 1),
        }
    } else {
        (n_r, false)
    };
    let enc = input_of.iter().map(|&c| vec![(c, 1.0)]).collect();
    let problem = Problem::new(
        spec.source_side_mass().to_vec(),
        n_z,
        h_of,
        n_h,
        enc,
        n_c,
        dist,
        n_r,
        n_u,
    );
    Ok(Setup {
        path,
        problem,
        inputs,
        input_of,
        public_of,
        table_decoder,
        aux_size_is_guess: guess,
    })
}

/// Smallest achievable value of each distortion on its own.
pub(crate) fn minimum_distortions(spec: &SourceSpec) -> Vec<f64> {
    let public_of = spec.projection(spec.roles().public());
    let n_z = spec.side_info_axis().len();
    let mass = spec.source_side_mass();
    spec.distortions()
        .iter()
        .map(|d| {
            public_of
                .iter()
                .enumerate()
                .map(|(x, &p)| {
                    let px: f64 = mass[x * n_z..(x + 1) * n_z].iter().sum();
                    px * d.row(p).iter().copied().fold(f64::INFINITY, f64::min)
                })
                .sum()
        })
        .collect()
}

fn check_distortion(spec: &SourceSpec, d: &[f64]) -> Result<()> {
    if d.len() != spec.distortions().len() {
        return Err(Error::Validation(format!(
            "expected {} distortion bounds, got {}",
            spec.distortions().len(),
            d.len()
        )));
    }
    if d.iter().any(|v| !v.is_finite()) {
        return Err(Error::Validation("distortion bounds must be finite".into()));
    }
    let minimum = minimum_distortions(spec);
    if d.iter().zip(&minimum).any(|(a, m)| *a < m - 1e-12) {
        return Err(Error::InfeasibleDistortion {
            requested: d.to_vec(),
            minimum,
        });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Candidates
// ---------------------------------------------------------------------------

impl Setup {
    fn ones(&self) -> Vec<f64> {
        vec![1.0; self.problem.n_constraints()]
    }

    /// Encoder input to public tuple, for inputs that carry mass.
    fn public_of_input(&self) -> Vec<usize> {
        let mut out = vec![0; self.problem.n_c];
        for (x, &c) in self.input_of.iter().enumerate() {
            out[c] = self.public_of[x];
        }
        out
    }

    /// Per encoder input, mean distortion of every reconstruction.
    fn input_costs(&self, weights: &[f64]) -> Vec<f64> {
        let p = &self.problem;
        let mut cost = vec![0.0; p.n_c * p.n_r];
        for (x, &c) in self.input_of.iter().enumerate() {
            for (l, d) in p.dist.iter().enumerate() {
                for r in 0..p.n_r {
                    cost[c * p.n_r + r] += p.px[x] * weights[l] * d[x * p.n_r + r];
                }
            }
        }
        cost
    }

    fn evaluate(&self, v: Vec<f64>, decoder: Decoder) -> Solution {
        let metrics = self.problem.metrics(&v, &decoder);
        Solution {
            v,
            decoder,
            metrics,
            multipliers: Vec::new(),
            iterations: 0,
        }
    }

    /// `U` reveals the public part exactly (best reconstruction when `U` is the reconstruction).
    fn reveal_public(&self) -> Option<Solution> {
        let p = &self.problem;
        let pub_of_c = self.public_of_input();
        if self.table_decoder {
            let n_pub = pub_of_c.iter().max().map_or(0, |m| m + 1);
            if p.n_u < n_pub {
                return None;
            }
            let v = deterministic_encoder(&pub_of_c, p.n_u);
            let g = p.fit_decoder(&v, &self.ones(), None);
            Some(self.evaluate(v, Decoder::Table(g)))
        } else {
            let cost = self.input_costs(&self.ones());
            let map: Vec<usize> = (0..p.n_c)
                .map(|c| {
                    let row = &cost[c * p.n_r..(c + 1) * p.n_r];
                    (0..p.n_r).fold(0, |b, r| if row[r] < row[b] { r } else { b })
                })
                .collect();
            Some(self.evaluate(deterministic_encoder(&map, p.n_u), Decoder::Identity))
        }
    }

    /// `U` constant.
    fn constant(&self) -> Solution {
        let p = &self.problem;
        if self.table_decoder {
            let v = deterministic_encoder(&vec![0; p.n_c], p.n_u);
            let g = p.fit_decoder(&v, &self.ones(), None);
            self.evaluate(v, Decoder::Table(g))
        } else {
            let cost = self.input_costs(&self.ones());
            let total: Vec<f64> = (0..p.n_r).map(|r| (0..p.n_c).map(|c| cost[c * p.n_r + r]).sum()).collect();
            let r = (0..p.n_r).fold(0, |b, r| if total[r] < total[b] { r } else { b });
            self.evaluate(deterministic_encoder(&vec![r; p.n_c], p.n_u), Decoder::Identity)
        }
    }

    /// Starting points: an encoder aligned with the distortion, then random ones.
    fn starts(&self, cfg: &SolverConfig) -> Vec<(Decoder, Vec<f64>)> {
        let p = &self.problem;
        if !self.table_decoder {
            return vec![(Decoder::Identity, uniform(p.n_c, p.n_u))];
        }
        let cost = self.input_costs(&self.ones());
        let n = cfg.restarts.max(1);
        (0..n)
            .map(|k| {
                if k == 0 {
                    let decoder: Vec<usize> = (0..p.n_u * p.n_z).map(|i| (i / p.n_z) % p.n_r).collect();
                    let mut v = vec![0.0; p.n_c * p.n_u];
                    for c in 0..p.n_c {
                        let w = p.wc[c].max(1e-300);
                        let row = &cost[c * p.n_r..(c + 1) * p.n_r];
                        let lo = row.iter().copied().fold(f64::INFINITY, f64::min) / w;
                        let hi = row.iter().copied().fold(f64::NEG_INFINITY, f64::max) / w;
                        let s = 4.0 / (hi - lo).max(1e-9);
                        for u in 0..p.n_u {
                            v[c * p.n_u + u] = (-s * (row[u % p.n_r] / w - lo)).exp() + 0.05;
                        }
                        let t: f64 = v[c * p.n_u..(c + 1) * p.n_u].iter().sum();
                        v[c * p.n_u..(c + 1) * p.n_u].iter_mut().for_each(|x| *x /= t);
                    }
                    (Decoder::Table(decoder), v)
                } else {
                    let v = random_encoder(p.n_c, p.n_u, cfg.seed, k as u64);
                    let g = p.fit_decoder(&v, &self.ones(), None);
                    (Decoder::Table(g), v)
                }
            })
            .collect()
    }

    /// Best feasible solution over all starts, exact candidates and `extra`.
    fn optimize(
        &self,
        goal: Goal,
        targets: &Targets,
        extra: &[Solution],
        cfg: &SolverConfig,
    ) -> (Option<Solution>, usize, usize) {
        let settings = EngineSettings::default();
        let slack = (DISTORTION_SLACK, EQUIVOCATION_SLACK * LN_2);
        let mut starts = self.starts(cfg);
        let restarts = starts.len();
        starts.extend(extra.iter().map(|s| (s.decoder.clone(), s.v.clone())));
        if let Some(s) = self.reveal_public() {
            starts.push((s.decoder, s.v));
        }
        let solved: Vec<Option<Solution>> = starts
            .into_par_iter()
            .map(|(dec, v)| self.problem.solve_alternating(goal, targets, dec, v, &settings, slack))
            .collect();
        let iterations = solved.iter().flatten().map(|s| s.iterations).sum();
        let mut best: Option<Solution> = None;
        let exact = self.reveal_public().into_iter().chain([self.constant()]).chain(extra.iter().cloned());
        for s in solved.into_iter().flatten().chain(exact) {
            if feasible(&s.metrics, targets, slack) && better(goal, &s, best.as_ref()) {
                best = Some(s);
            }
        }
        (best, restarts, iterations)
    }

    fn to_solution(&self, spec: &SourceSpec, s: &Solution) -> Result<AuxChannelSolution> {
        let p = &self.problem;
        let aux = Alphabet::indexed(AUX, p.n_u)?;
        let w = p.channel(&s.v);
        let channel = Channel::new(spec.attributes().to_vec(), vec![aux.clone()], w)?;
        let encoder = Channel::new(spec.axes_of(&self.inputs), vec![aux.clone()], s.v.clone())?;
        Ok(AuxChannelSolution {
            aux_alphabet: aux,
            channel,
            encoder,
            side_info: spec.side_info_axis().clone(),
            reconstruction: spec.reconstruction().to_vec(),
            decoder: s.decoder.table(p.n_u, p.n_z),
            rate: s.metrics.rate / LN_2,
            equivocation: s.metrics.equivocation / LN_2,
            distortion: s.metrics.distortion.clone(),
        })
    }

    fn stats(&self, restarts: usize, iterations: usize) -> SolveStats {
        SolveStats {
            path: self.path,
            aux_size: self.problem.n_u,
            aux_size_is_guess: self.aux_size_is_guess,
            restarts,
            iterations,
        }
    }
}

// ---------------------------------------------------------------------------
// Census path
// ---------------------------------------------------------------------------

fn census(spec: &SourceSpec, setup: &Setup, d: f64) -> Result<(Solution, usize)> {
    let attr = &spec.roles().all()[0];
    let prior = marginalize(spec.joint(), &[attr.as_str()])?;
    let point = RdSolver::default().solve(&prior, spec.distortion(0), d)?;
    let v = point.channel.kernel().to_vec();
    Ok((setup.evaluate(v, Decoder::Identity), point.iterations))
}

// ---------------------------------------------------------------------------
// Public solvers
// ---------------------------------------------------------------------------

fn gamma_with(spec: &SourceSpec, setup: &Setup, d: &[f64], cfg: &SolverConfig) -> Result<(Solution, SolveStats)> {
    check_distortion(spec, d)?;
    if setup.path == CaseTag::CensusK1 {
        let (s, it) = census(spec, setup, d[0])?;
        return Ok((s, setup.stats(1, it)));
    }
    let targets = Targets {
        distortion: d.to_vec(),
        equivocation: None,
    };
    let (best, restarts, iterations) = setup.optimize(Goal::MaxEquivocation, &targets, &[], cfg);
    let best = best.ok_or_else(|| Error::InfeasibleDistortion {
        requested: d.to_vec(),
        minimum: minimum_distortions(spec),
    })?;
    Ok((best, setup.stats(restarts, iterations)))
}

/// `Γ(D)`: the largest `H(Xh | U, Z)` over auxiliary channels meeting every
/// distortion bound, in bits.
pub fn gamma_of_d(spec: &SourceSpec, d: &[f64], cfg: &SolverConfig) -> Result<RdeOutcome> {
    let setup = setup(spec, cfg)?;
    let (s, stats) = gamma_with(spec, &setup, d, cfg)?;
    let solution = setup.to_solution(spec, &s)?;
    Ok(RdeOutcome {
        value: solution.equivocation,
        solution,
        stats,
    })
}

fn rate_with(
    setup: &Setup,
    d: &[f64],
    e: f64,
    gamma: &Solution,
    gamma_stats: &SolveStats,
    cfg: &SolverConfig,
) -> Result<(Solution, SolveStats)> {
    let gamma_bits = gamma.metrics.equivocation / LN_2;
    if !e.is_finite() {
        return Err(Error::Validation("equivocation bound must be finite".into()));
    }
    if e > gamma_bits + EQUIVOCATION_SLACK {
        return Err(Error::InfeasiblePrivacy {
            requested: e,
            maximum: gamma_bits,
        });
    }
    if setup.path == CaseTag::CensusK1 {
        return Ok((gamma.clone(), gamma_stats.clone()));
    }
    let targets = Targets {
        distortion: d.to_vec(),
        equivocation: (e > 0.0).then_some(e * LN_2),
    };
    let (best, restarts, iterations) = setup.optimize(Goal::MinRate, &targets, std::slice::from_ref(gamma), cfg);
    let best = best.unwrap_or_else(|| gamma.clone());
    Ok((best, setup.stats(restarts, iterations + gamma_stats.iterations)))
}

/// `R(D,E)`: the smallest `I(X;U) - I(Z;U)` over auxiliary channels meeting
/// every distortion bound with `H(Xh | U, Z) >= E`, in bits.
pub fn rate_de(spec: &SourceSpec, d: &[f64], e: f64, cfg: &SolverConfig) -> Result<RdeOutcome> {
    let setup = setup(spec, cfg)?;
    let (g, gs) = gamma_with(spec, &setup, d, cfg)?;
    let (s, stats) = rate_with(&setup, d, e, &g, &gs, cfg)?;
    let solution = setup.to_solution(spec, &s)?;
    Ok(RdeOutcome {
        value: solution.rate,
        solution,
        stats,
    })
}

fn dominated(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y)
}

/// Solves every `(D, E)` pair of the grids, row-major in `D`. Infeasible
/// pairs are flagged. Solutions are shared between grid points, so `Γ` is
/// non-decreasing and `R` non-increasing in `D` across the grid.
pub fn tradeoff_region(
    spec: &SourceSpec,
    d_grid: &[Vec<f64>],
    e_grid: &[f64],
    cfg: &SolverConfig,
) -> Result<Vec<TradeoffPoint>> {
    if d_grid.is_empty() || e_grid.is_empty() {
        return Err(Error::Validation("tradeoff grids must be nonempty".into()));
    }
    let setup = setup(spec, cfg)?;
    let gammas: Vec<Result<(Solution, SolveStats)>> =
        d_grid.par_iter().map(|d| gamma_with(spec, &setup, d, cfg)).collect();

    // a solution feasible at a smaller D is feasible at every larger one
    let shared: Vec<Result<(Solution, SolveStats)>> = d_grid
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let own = gammas[i].clone()?;
            let mut best = own;
            for (j, dj) in d_grid.iter().enumerate() {
                if let Ok((s, _)) = &gammas[j] {
                    if j != i && dominated(dj, d) && s.metrics.equivocation > best.0.metrics.equivocation {
                        best.0 = s.clone();
                    }
                }
            }
            Ok(best)
        })
        .collect();

    let cells: Vec<(usize, f64)> = (0..d_grid.len()).flat_map(|i| e_grid.iter().map(move |&e| (i, e))).collect();
    let solved: Vec<Result<Solution>> = cells
        .par_iter()
        .map(|&(i, e)| {
            let (g, gs) = shared[i].as_ref().map_err(Clone::clone)?;
            rate_with(&setup, &d_grid[i], e, g, gs, cfg).map(|(s, _)| s)
        })
        .collect();

    let slack = (DISTORTION_SLACK, EQUIVOCATION_SLACK * LN_2);
    let pool: Vec<&Solution> = solved
        .iter()
        .flatten()
        .chain(shared.iter().flatten().map(|(s, _)| s))
        .collect();
    cells
        .iter()
        .zip(&solved)
        .map(|(&(i, e), res)| {
            let d = &d_grid[i];
            let gamma = shared[i].as_ref().ok().map(|(s, _)| s.metrics.equivocation / LN_2);
            match res {
                Ok(own) => {
                    let targets = Targets {
                        distortion: d.clone(),
                        equivocation: (e > 0.0).then_some(e * LN_2),
                    };
                    let mut best = own;
                    for s in &pool {
                        if feasible(&s.metrics, &targets, slack) && s.metrics.rate < best.metrics.rate {
                            best = s;
                        }
                    }
                    let solution = setup.to_solution(spec, best)?;
                    Ok(TradeoffPoint {
                        distortion: d.clone(),
                        equivocation: e,
                        rate: Some(solution.rate),
                        gamma,
                        feasible: true,
                        reason: None,
                        solution: Some(solution),
                    })
                }
                Err(err) if err.is_infeasible() => Ok(TradeoffPoint {
                    distortion: d.clone(),
                    equivocation: e,
                    rate: None,
                    gamma,
                    feasible: false,
                    reason: Some(err.to_string()),
                    solution: None,
                }),
                Err(err) => Err(err.clone()),
            }
        })
        .collect()
}
