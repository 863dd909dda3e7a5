//! Row-by-row sanitization through a memoryless channel, and audits of the result.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{attach_channel, conditional_entropy, flatten, unflatten, Alphabet, Channel};
use crate::rde::{rate_de, EncoderInputs, SolverConfig, TradeoffPoint};
use crate::source::{Database, SourceSpec};

/// A channel from encoded attribute tuples to reconstruction tuples, with
/// the operating point it realizes and the seed for per-row draws.
#[derive(Debug, Clone)]
pub struct SanitizationPlan {
    pub operating_point: TradeoffPoint,
    pub channel: Channel,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct PointDoc {
    #[serde(rename = "D")]
    d: Vec<f64>,
    #[serde(rename = "E")]
    e: f64,
    #[serde(rename = "R")]
    r: Option<f64>,
    gamma: Option<f64>,
    feasible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ChannelDoc {
    inputs: Vec<Alphabet>,
    outputs: Vec<Alphabet>,
    /// One row per input tuple, row-major over `inputs`.
    kernel: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct PlanDoc {
    operating_point: PointDoc,
    seed: u64,
    channel: ChannelDoc,
}

impl SanitizationPlan {
    pub fn to_json(&self) -> String {
        let p = &self.operating_point;
        let n = self.channel.output_size();
        let doc = PlanDoc {
            operating_point: PointDoc {
                d: p.distortion.clone(),
                e: p.equivocation,
                r: p.rate,
                gamma: p.gamma,
                feasible: p.feasible,
            },
            seed: self.seed,
            channel: ChannelDoc {
                inputs: self.channel.input_axes().to_vec(),
                outputs: self.channel.output_axes().to_vec(),
                kernel: self.channel.kernel().chunks(n).map(<[f64]>::to_vec).collect(),
            },
        };
        serde_json::to_string_pretty(&doc).expect("plan serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: PlanDoc = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let check = |axes: Vec<Alphabet>| -> Result<Vec<Alphabet>> {
            axes.into_iter()
                .map(|a| Alphabet::new(a.name().to_string(), a.symbols().to_vec()))
                .collect()
        };
        let inputs = check(doc.channel.inputs)?;
        let outputs = check(doc.channel.outputs)?;
        let channel = Channel::new(inputs, outputs, doc.channel.kernel.concat())?;
        let p = doc.operating_point;
        Ok(SanitizationPlan {
            operating_point: TradeoffPoint {
                distortion: p.d,
                equivocation: p.e,
                rate: p.r,
                gamma: p.gamma,
                feasible: p.feasible,
                reason: None,
                solution: None,
            },
            channel,
            seed: doc.seed,
        })
    }
}

/// Model-level and empirical figures for a sanitized database.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    /// Empirical average distortion per utility constraint.
    pub distortion: Vec<f64>,
    pub target_distortion: Vec<f64>,
    /// `H(Xh | X^r, Z)` in bits under the model and the plan channel.
    pub equivocation: f64,
    pub target_equivocation: f64,
    pub rows: usize,
}

/// Builds the per-row channel for the operating point `(d, e)`.
///
/// The auxiliary channel is solved over the encoded attributes and composed
/// with its decoder; side information must be constant.
pub fn synthesize_channel(spec: &SourceSpec, d: &[f64], e: f64, cfg: &SolverConfig) -> Result<SanitizationPlan> {
    if !spec.side_info_is_constant() {
        return Err(Error::UnsupportedModel(
            "sanitization needs constant side information; the decoder's input is not available per row".into(),
        ));
    }
    let cfg = SolverConfig {
        encoder_inputs: EncoderInputs::EncodedSet,
        ..cfg.clone()
    };
    let out = rate_de(spec, d, e, &cfg)?;
    let sol = &out.solution;
    let z0 = {
        let n_z = spec.side_info_axis().len();
        let mut mass = vec![0.0; n_z];
        for (i, m) in spec.joint().mass().iter().enumerate() {
            mass[i % n_z] += m;
        }
        (0..n_z).find(|&z| mass[z] > 0.0).unwrap_or(0)
    };
    let n_u = sol.aux_alphabet.len();
    let n_r = sol.reconstruction.iter().map(Alphabet::len).product::<usize>();
    let enc = &sol.encoder;
    let mut kernel = vec![0.0; enc.input_size() * n_r];
    for c in 0..enc.input_size() {
        for u in 0..n_u {
            kernel[c * n_r + sol.decode(u, z0)] += enc.prob(c, u);
        }
    }
    let channel = Channel::new(enc.input_axes().to_vec(), sol.reconstruction.clone(), kernel)?;
    Ok(SanitizationPlan {
        operating_point: TradeoffPoint {
            distortion: d.to_vec(),
            equivocation: e,
            rate: Some(out.value),
            gamma: None,
            feasible: true,
            reason: None,
            solution: Some(out.solution),
        },
        channel,
        seed: cfg.seed,
    })
}

/// Column of every axis of `axes` in `db`, checking that alphabets agree.
fn columns(db: &Database, axes: &[Alphabet]) -> Result<Vec<usize>> {
    axes.iter()
        .map(|a| {
            let c = db
                .column(a.name())
                .ok_or_else(|| Error::Schema(format!("database has no column `{}`", a.name())))?;
            if db.schema()[c].symbols() != a.symbols() {
                return Err(Error::Schema(format!("column `{}` has a different alphabet", a.name())));
            }
            Ok(c)
        })
        .collect()
}

/// Draws one output per row from the plan channel. Row `i` uses stream `i`
/// of a ChaCha20 generator seeded with the plan seed, so the result does not
/// depend on scheduling.
pub fn sanitize(db: &Database, plan: &SanitizationPlan) -> Result<Database> {
    let ch = &plan.channel;
    let cols = columns(db, ch.input_axes())?;
    let outputs = ch.output_axes().to_vec();
    let rows: Vec<Vec<usize>> = db
        .rows()
        .par_iter()
        .enumerate()
        .map(|(i, row)| {
            let part: Vec<usize> = cols.iter().map(|&c| row[c]).collect();
            let input = flatten(&part, ch.input_axes());
            let mut rng = ChaCha20Rng::seed_from_u64(plan.seed);
            rng.set_stream(i as u64);
            let draw: f64 = rng.gen();
            let probs = ch.row(input);
            let mut acc = 0.0;
            let mut pick = None;
            for (o, &p) in probs.iter().enumerate() {
                acc += p;
                if draw < acc {
                    pick = Some(o);
                    break;
                }
            }
            // rounding can leave the cumulative sum just under one
            let pick = pick.unwrap_or_else(|| probs.iter().rposition(|&p| p > 0.0).unwrap_or(0));
            let mut out = vec![0; outputs.len()];
            unflatten(pick, &outputs, &mut out);
            out
        })
        .collect();
    Database::new(outputs, rows)
}

/// Empirical distortions of `sdb` against `db`, and the model equivocation
/// `H(Xh | X^r, Z)` of the plan channel.
pub fn audit(db: &Database, sdb: &Database, spec: &SourceSpec, plan: &SanitizationPlan) -> Result<AuditReport> {
    if db.len() != sdb.len() {
        return Err(Error::Validation(format!(
            "row counts differ: {} original, {} sanitized",
            db.len(),
            sdb.len()
        )));
    }
    let public = spec.axes_of(spec.roles().public());
    let pub_cols = columns(db, &public)?;
    let rec_cols = columns(sdb, spec.reconstruction())?;
    let mut totals = vec![0.0; spec.distortions().len()];
    let mut a = vec![0; public.len()];
    let mut b = vec![0; rec_cols.len()];
    for (x, y) in db.rows().iter().zip(sdb.rows()) {
        a.iter_mut().zip(&pub_cols).for_each(|(v, &c)| *v = x[c]);
        b.iter_mut().zip(&rec_cols).for_each(|(v, &c)| *v = y[c]);
        let (i, j) = (flatten(&a, &public), flatten(&b, spec.reconstruction()));
        for (t, d) in totals.iter_mut().zip(spec.distortions()) {
            *t += d.get(i, j);
        }
    }
    let n = db.len().max(1) as f64;
    let joint = attach_channel(spec.joint(), &plan.channel)?;
    let private: Vec<&str> = spec.roles().private().iter().map(String::as_str).collect();
    let given: Vec<&str> = spec
        .reconstruction()
        .iter()
        .map(Alphabet::name)
        .chain([spec.side_info_axis().name()])
        .collect();
    let equivocation = conditional_entropy(&joint, &private, &given)?;
    Ok(AuditReport {
        distortion: totals.into_iter().map(|t| t / n).collect(),
        target_distortion: spec.utility().bounds(),
        equivocation,
        target_equivocation: spec.privacy().bound,
        rows: db.len(),
    })
}
