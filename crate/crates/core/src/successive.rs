//! Two-stage disclosure of a single attribute: a coarse release followed by
//! a refinement, with the coarse reconstruction a degraded copy of the fine one.

use std::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::prob::{attach_channel, entropy, mutual_information, Channel, JointPmf};
use crate::rd::{DistortionMatrix, RdSolver};
use crate::rde::{Decoder, EngineSettings, Goal, Problem, Targets};

/// Tolerance on `I(X; X^1) = R(D1)`, in bits.
pub const RATE_MATCH_TOLERANCE: f64 = 1e-4;
/// Slack when comparing a stage's equivocation with `Γ(D)`, in bits.
pub const STAGE_PRIVACY_SLACK: f64 = 1e-4;

/// A coarse stage `(D1, E1)` and a fine stage `(D2, E2)` realized as the
/// cascade `X -> X^2 -> X^1`.
#[derive(Debug, Clone, PartialEq)]
pub struct StagePlan {
    pub coarse: (f64, f64),
    pub fine: (f64, f64),
    /// `p(x^2 | x)`.
    pub fine_channel: Channel,
    /// `p(x^1 | x^2)`.
    pub refinement: Channel,
    /// `(R0, R1)` in bits: the refinement increment and the coarse rate.
    pub rates: (f64, f64),
    /// Reported equivocation per stage, `(E1, E2)`, in bits.
    pub equivocation: (f64, f64),
    /// Expected distortion of the coarse and fine reconstructions.
    pub achieved: (f64, f64),
    /// `R(D1)` and `R(D2)` from the single-stage solver.
    pub single_stage: (f64, f64),
    /// `|I(X; X^1) - R(D1)|` in bits.
    pub gap: f64,
    pub feasible: bool,
}

impl StagePlan {
    /// `p(x^1 | x)` obtained by composing the two stages.
    pub fn coarse_channel(&self) -> Result<Channel> {
        self.fine_channel.then(&self.refinement)
    }
}

fn stage_name(base: &str, k: usize) -> String {
    format!("{base}_{k}")
}

/// Looks for a cascade meeting both stages without rate loss.
pub fn check_successive(
    prior: &JointPmf,
    d: &DistortionMatrix,
    coarse: (f64, f64),
    fine: (f64, f64),
) -> Result<StagePlan> {
    if prior.axes().len() != 1 {
        return Err(Error::UnsupportedModel(format!(
            "successive disclosure needs a single attribute, got {}",
            prior.axes().len()
        )));
    }
    let (d1, e1) = coarse;
    let (d2, e2) = fine;
    if d2 >= d1 {
        return Err(Error::Ordering(format!(
            "the fine distortion {d2} must be below the coarse distortion {d1}"
        )));
    }
    let solver = RdSolver::default();
    let h = entropy(prior);
    let p1 = solver.solve(prior, d, d1)?;
    let p2 = solver.solve(prior, d, d2)?;
    for (e, r) in [(e1, p1.rate), (e2, p2.rate)] {
        let gamma = h - r;
        if e > gamma + STAGE_PRIVACY_SLACK {
            return Err(Error::InfeasiblePrivacy {
                requested: e,
                maximum: gamma,
            });
        }
    }

    let n_x = prior.mass().len();
    let n_r = d.cols();
    let w2 = p2.channel.kernel();

    // start from the single-stage solution on the induced reconstruction prior
    let mut q2 = vec![0.0; n_r];
    let mut dbar = vec![0.0; n_r * n_r];
    for x in 0..n_x {
        for r in 0..n_r {
            let m = prior.mass()[x] * w2[x * n_r + r];
            q2[r] += m;
            for s in 0..n_r {
                dbar[r * n_r + s] += m * d.get(x, s);
            }
        }
    }
    for r in 0..n_r {
        if q2[r] > 0.0 {
            for s in 0..n_r {
                dbar[r * n_r + s] /= q2[r];
            }
        }
    }
    let rec = d.reconstruction();
    let mid: Vec<_> = rec.iter().map(|a| a.renamed(stage_name(a.name(), 2))).collect();
    let out: Vec<_> = rec.iter().map(|a| a.renamed(stage_name(a.name(), 1))).collect();
    let induced = JointPmf::new(mid.clone(), q2)?;
    let dbar_m = DistortionMatrix::with_reconstruction(n_r, dbar, out.clone())?;
    let start = match solver.solve(&induced, &dbar_m, d1) {
        Ok(p) => p.channel.kernel().to_vec(),
        Err(_) => vec![1.0 / n_r as f64; n_r * n_r],
    };

    // refine over p(x^1 | x^2) against the true source
    let enc = (0..n_x)
        .map(|x| (0..n_r).filter(|&r| w2[x * n_r + r] > 0.0).map(|r| (r, w2[x * n_r + r])).collect())
        .collect();
    let problem = Problem::new(
        prior.mass().to_vec(),
        1,
        (0..n_x).collect(),
        n_x,
        enc,
        n_r,
        vec![d.values().to_vec()],
        n_r,
        n_r,
    );
    let targets = Targets {
        distortion: vec![d1],
        equivocation: None,
    };
    let settings = EngineSettings::default();
    let start_rows = floor_rows(start, n_r);
    let sol = problem.solve_fixed(Goal::MinRate, &targets, &Decoder::Identity, start_rows, None, &settings);

    let refinement = Channel::new(mid.clone(), out, sol.v.clone())?;
    let fine_channel = Channel::new(prior.axes().to_vec(), mid, w2.to_vec())?;
    let r1 = sol.metrics.rate / LN_2;
    let achieved1 = sol.metrics.distortion[0];
    let gap = (r1 - p1.rate).abs();
    let feasible = gap <= RATE_MATCH_TOLERANCE && achieved1 <= d1 + 1e-6;
    Ok(StagePlan {
        coarse,
        fine,
        fine_channel,
        refinement,
        rates: ((p2.rate - r1).max(0.0), r1),
        equivocation: (h - p1.rate, h - p2.rate),
        achieved: (achieved1, p2.achieved_distortion),
        single_stage: (p1.rate, p2.rate),
        gap,
        feasible,
    })
}

fn floor_rows(mut v: Vec<f64>, n: usize) -> Vec<f64> {
    for row in v.chunks_mut(n) {
        row.iter_mut().for_each(|x| *x = x.max(1e-250));
        let s: f64 = row.iter().sum();
        row.iter_mut().for_each(|x| *x /= s);
    }
    v
}

/// `(R0, R1)` of a feasible plan, recomputed from its cascade:
/// `R1 = I(X; X^1)` and `R0 = I(X; X^2) - I(X; X^1)`.
pub fn disclosure_rates(plan: &StagePlan, prior: &JointPmf) -> Result<(f64, f64)> {
    if !plan.feasible {
        return Err(Error::State("the plan is not feasible".into()));
    }
    let x: Vec<&str> = prior.axes().iter().map(|a| a.name()).collect();
    let fine = attach_channel(prior, &plan.fine_channel)?;
    let both = attach_channel(&fine, &plan.refinement)?;
    let mid: Vec<&str> = plan.fine_channel.output_axes().iter().map(|a| a.name()).collect();
    let out: Vec<&str> = plan.refinement.output_axes().iter().map(|a| a.name()).collect();
    let r2 = mutual_information(&both, &x, &mid)?;
    let r1 = mutual_information(&both, &x, &out)?;
    Ok(((r2 - r1).max(0.0), r1))
}
