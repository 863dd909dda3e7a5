//! `rdeq`: utility-privacy tradeoffs for discrete databases from the command line.

mod output;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rdeq_core::{
    audit, brute_force_rde, check_successive, disclosure_rates, dispatch_special_case, distortion_bounds, entropy,
    gamma_of_d, ingest_csv, load_spec, marginalize, rd_curve, sanitize, synthesize_channel, tradeoff_region, CaseTag,
    Error, SanitizationPlan, SolverConfig, SourceSpec,
};
use serde_json::{json, Value};

use output::{Document, Format, Table};

#[derive(Parser, Debug)]
#[command(name = "rdeq", version, about = "Rate-distortion-equivocation tradeoffs for discrete databases")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a model file and summarize it.
    Validate(Common),
    /// Rate-distortion function of the public attributes.
    Rd(Common),
    /// Maximal equivocation at a distortion bound.
    Gamma(Common),
    /// Minimal rate over a grid of distortion and equivocation bounds.
    Tradeoff(Common),
    /// Build a channel for an operating point and apply it to a database.
    Sanitize(Common),
    /// Check a coarse and a fine disclosure stage for rate loss.
    Successive(Common),
    /// Compare a sanitized database with its original.
    Audit(Common),
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Model file (JSON).
    #[arg(long)]
    model: PathBuf,
    /// Distortion bound(s). With one utility constraint each value is a
    /// separate point; otherwise the values form one bound per constraint.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    distortion: Option<Vec<f64>>,
    /// Equivocation bound in bits.
    #[arg(long, allow_negative_numbers = true)]
    equivocation: Option<f64>,
    /// Distortion grid `a:b:n`, applied to every constraint.
    #[arg(long)]
    d_grid: Option<String>,
    /// Equivocation grid `a:b:n`.
    #[arg(long)]
    e_grid: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 16)]
    restarts: usize,
    /// Append an exhaustive-search comparison where the model is small enough.
    #[arg(long)]
    oracle: bool,
    /// Quantization level of the exhaustive search.
    #[arg(long, default_value_t = 32)]
    oracle_q: usize,
    /// Force a solver path: no-side-info, wyner-ziv-markov, census-K1 or general.
    #[arg(long)]
    path: Option<CaseTag>,
    /// Auxiliary alphabet size on the non-convex paths.
    #[arg(long)]
    aux_size: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write the result here instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Database CSV (sanitize, audit).
    #[arg(long)]
    database: Option<PathBuf>,
    /// Sanitized database CSV (audit).
    #[arg(long)]
    sanitized: Option<PathBuf>,
    /// Existing plan to apply (sanitize) or audit against (audit).
    #[arg(long)]
    plan: Option<PathBuf>,
    /// Where sanitize stores the plan it used.
    #[arg(long)]
    plan_out: Option<PathBuf>,
    /// Coarse stage `D,E` (successive).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    coarse: Option<Vec<f64>>,
    /// Fine stage `D,E` (successive).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    fine: Option<Vec<f64>>,
}

/// Failure with its exit status.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: if e.is_infeasible() { 2 } else { 3 },
            message: e.to_string(),
        }
    }
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure {
        code: 3,
        message: message.into(),
    }
}

type Run<T> = Result<T, Failure>;

fn read(path: &Path) -> Run<String> {
    fs::read_to_string(path).map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Run<()> {
    fs::write(path, text).map_err(|e| invalid(format!("cannot write {}: {e}", path.display())))
}

fn parse_grid(text: &str) -> Run<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || invalid(format!("grid `{text}` is not of the form a:b:n"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let a: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let b: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if n == 0 || !a.is_finite() || !b.is_finite() {
        return Err(bad());
    }
    if n == 1 {
        return Ok(vec![a]);
    }
    Ok((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect())
}

/// Resolved numeric inputs, echoed in every document.
struct Resolved {
    distortions: Vec<Vec<f64>>,
    equivocations: Vec<f64>,
    cfg: SolverConfig,
}

fn resolve(c: &Common, spec: &SourceSpec) -> Run<Resolved> {
    let l = spec.distortions().len();
    let distortions = if let Some(g) = &c.d_grid {
        parse_grid(g)?.into_iter().map(|d| vec![d; l]).collect()
    } else if let Some(v) = &c.distortion {
        if l == 1 {
            v.iter().map(|&d| vec![d]).collect()
        } else if v.len() == l {
            vec![v.clone()]
        } else {
            return Err(invalid(format!("expected {l} distortion values, one per constraint, got {}", v.len())));
        }
    } else {
        vec![spec.utility().bounds()]
    };
    let equivocations = if let Some(g) = &c.e_grid {
        parse_grid(g)?
    } else {
        vec![c.equivocation.unwrap_or(spec.privacy().bound)]
    };
    if c.restarts == 0 {
        return Err(invalid("--restarts must be at least 1"));
    }
    let cfg = SolverConfig {
        restarts: c.restarts,
        seed: c.seed,
        aux_size: c.aux_size,
        path: c.path,
        ..SolverConfig::default()
    };
    Ok(Resolved {
        distortions,
        equivocations,
        cfg,
    })
}

fn config_echo(name: &str, c: &Common, r: Option<&Resolved>) -> Value {
    let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
    json!({
        "command": name,
        "model": c.model.display().to_string(),
        "format": c.format.name(),
        "distortion": r.map(|r| json!(r.distortions)),
        "equivocation": r.map(|r| json!(r.equivocations)),
        "seed": c.seed,
        "restarts": c.restarts,
        "oracle": c.oracle,
        "oracle_q": c.oracle_q,
        "path": c.path.map(|p| p.to_string()),
        "aux_size": c.aux_size,
        "database": path(&c.database),
        "sanitized": path(&c.sanitized),
        "plan": path(&c.plan),
        "plan_out": path(&c.plan_out),
        "coarse": c.coarse,
        "fine": c.fine,
        "distortion_slack": rdeq_core::rde::DISTORTION_SLACK,
        "equivocation_slack": rdeq_core::rde::EQUIVOCATION_SLACK,
    })
}

fn public_names(spec: &SourceSpec) -> Vec<&str> {
    spec.roles().public().iter().map(String::as_str).collect()
}

fn validate(c: &Common, spec: &SourceSpec) -> Run<Document> {
    let public = marginalize(spec.joint(), &public_names(spec))?;
    let bounds: Vec<Value> = spec
        .distortions()
        .iter()
        .map(|d| distortion_bounds(&public, d).map(|(lo, hi)| json!({"min": lo, "max": hi})))
        .collect::<Result<_, _>>()?;
    let result = json!({
        "valid": true,
        "attributes": spec.attributes().iter().map(|a| json!({"name": a.name(), "size": a.len()})).collect::<Vec<_>>(),
        "public": spec.roles().public(),
        "private": spec.roles().private(),
        "encoded": spec.roles().encoded(),
        "side_info": spec.has_side_info().then(|| spec.side_info_axis().name().to_string()),
        "side_info_constant": spec.side_info_is_constant(),
        "source_size": spec.source_size(),
        "entropy": entropy(spec.joint()),
        "solver_path": dispatch_special_case(spec).to_string(),
        "distortion_range": bounds,
        "requirements": {"D": spec.utility().bounds(), "E": spec.privacy().bound},
    });
    Ok(Document::object(config_echo("validate", c, None), result))
}

fn rd(c: &Common, spec: &SourceSpec) -> Run<Document> {
    let r = resolve(c, spec)?;
    if spec.distortions().len() != 1 {
        return Err(invalid("rd needs a model with exactly one utility constraint"));
    }
    let public = marginalize(spec.joint(), &public_names(spec))?;
    let grid: Vec<f64> = r.distortions.iter().map(|d| d[0]).collect();
    let mut table = Table::new(&["D", "R", "achieved_D", "slope", "iterations"]);
    let mut points = Vec::new();
    for (d, p) in grid.iter().zip(rd_curve(&public, spec.distortion(0), &grid)) {
        let p = p?;
        table.row(vec![json!(d), json!(p.rate), json!(p.achieved_distortion), json!(p.slope), json!(p.iterations)]);
        points.push(json!({
            "D": d, "R": p.rate, "achieved_D": p.achieved_distortion, "slope": p.slope, "iterations": p.iterations,
        }));
    }
    Ok(Document::curve(config_echo("rd", c, Some(&r)), json!({"points": points}), table))
}

fn gamma(c: &Common, spec: &SourceSpec) -> Run<Document> {
    let r = resolve(c, spec)?;
    let l = spec.distortions().len();
    let mut header: Vec<String> = (0..l).map(|i| format!("D{i}")).collect();
    header.extend(["gamma", "rate", "path", "aux_size", "iterations"].map(String::from));
    let mut table = Table::new(&header.iter().map(String::as_str).collect::<Vec<_>>());
    let mut points = Vec::new();
    for d in &r.distortions {
        let out = gamma_of_d(spec, d, &r.cfg)?;
        let s = &out.stats;
        let mut row: Vec<Value> = d.iter().map(|v| json!(v)).collect();
        row.extend([json!(out.value), json!(out.solution.rate), json!(s.path.to_string()), json!(s.aux_size), json!(s.iterations)]);
        table.row(row);
        points.push(json!({
            "D": d,
            "gamma": out.value,
            "rate": out.solution.rate,
            "achieved_D": out.solution.distortion,
            "solver": {
                "path": s.path.to_string(),
                "aux_size": s.aux_size,
                "aux_size_is_guess": s.aux_size_is_guess,
                "restarts": s.restarts,
                "iterations": s.iterations,
            },
        }));
    }
    Ok(Document::curve(config_echo("gamma", c, Some(&r)), json!({"points": points}), table))
}

fn tradeoff(c: &Common, spec: &SourceSpec) -> Run<Document> {
    let r = resolve(c, spec)?;
    let l = spec.distortions().len();
    let points = tradeoff_region(spec, &r.distortions, &r.equivocations, &r.cfg)?;
    let mut header: Vec<String> = (0..l).map(|i| format!("D{i}")).collect();
    header.extend(["E", "R", "feasible", "gamma"].map(String::from));
    header.extend((0..l).map(|i| format!("achieved_D{i}")));
    header.extend(["equivocation_achieved", "reason"].map(String::from));
    if c.oracle {
        header.extend(["oracle_R", "oracle_gap"].map(String::from));
    }
    let mut table = Table::new(&header.iter().map(String::as_str).collect::<Vec<_>>());
    let mut docs = Vec::new();
    for p in &points {
        let sol = p.solution.as_ref();
        let achieved: Vec<Option<f64>> = (0..l).map(|i| sol.map(|s| s.distortion[i])).collect();
        let mut row: Vec<Value> = p.distortion.iter().map(|v| json!(v)).collect();
        row.extend([json!(p.equivocation), json!(p.rate), json!(p.feasible), json!(p.gamma)]);
        row.extend(achieved.iter().map(|a| json!(a)));
        row.extend([json!(sol.map(|s| s.equivocation)), json!(p.reason)]);
        let mut doc = json!({
            "D": p.distortion,
            "E": p.equivocation,
            "R": p.rate,
            "feasible": p.feasible,
            "gamma": p.gamma,
            "achieved_D": achieved,
            "achieved_E": sol.map(|s| s.equivocation),
            "reason": p.reason,
        });
        if c.oracle {
            let o = oracle(c, spec, p, &r.cfg);
            row.extend([o.get("R").cloned().unwrap_or(Value::Null), o.get("gap").cloned().unwrap_or(Value::Null)]);
            doc["oracle"] = o;
        }
        table.row(row);
        docs.push(doc);
    }
    let mut doc = Document::curve(
        config_echo("tradeoff", c, Some(&r)),
        json!({
            "solver": {"path": dispatch_special_case(spec).to_string(), "restarts": r.cfg.restarts},
            "points": docs,
        }),
        table,
    );
    if points.iter().all(|p| !p.feasible) {
        let reason = points.iter().find_map(|p| p.reason.clone()).unwrap_or_default();
        doc.status = 2;
        doc.note = Some(format!("no requested point is feasible: {reason}"));
    }
    Ok(doc)
}

/// Exhaustive-search comparison for one feasible point.
fn oracle(c: &Common, spec: &SourceSpec, p: &rdeq_core::TradeoffPoint, cfg: &SolverConfig) -> Value {
    let (Some(rate), Some(sol)) = (p.rate, p.solution.as_ref()) else {
        return json!({"skipped": "point is infeasible"});
    };
    let aux = cfg.aux_size.unwrap_or(sol.aux_alphabet.len());
    match brute_force_rde(spec, &p.distortion, p.equivocation, c.oracle_q, aux) {
        Ok(b) if b.is_finite() => json!({"q": c.oracle_q, "aux_size": aux, "R": b, "gap": b - rate}),
        Ok(_) => json!({"q": c.oracle_q, "aux_size": aux, "skipped": "no grid channel meets the bounds"}),
        Err(e) => json!({"skipped": e.to_string()}),
    }
}

fn sanitize_cmd(c: &Common, spec: &SourceSpec) -> Run<Document> {
    let db_path = c.database.as_ref().ok_or_else(|| invalid("sanitize needs --database"))?;
    let db = ingest_csv(&read(db_path)?, spec.attributes())?;
    let r = resolve(c, spec)?;
    let plan = match &c.plan {
        Some(p) => SanitizationPlan::from_json(&read(p)?)?,
        None => {
            if r.distortions.len() != 1 || r.equivocations.len() != 1 {
                return Err(invalid("sanitize needs a single operating point"));
            }
            synthesize_channel(spec, &r.distortions[0], r.equivocations[0], &r.cfg)?
        }
    };
    let out = sanitize(&db, &plan)?;
    if let Some(p) = &c.plan_out {
        write(p, &plan.to_json())?;
    }
    let report = audit(&db, &out, spec, &plan)?;
    let summary = json!({
        "rows": out.len(),
        "plan_seed": plan.seed,
        "operating_point": {"D": plan.operating_point.distortion, "E": plan.operating_point.equivocation, "R": plan.operating_point.rate},
        "empirical_D": report.distortion,
        "equivocation": report.equivocation,
    });
    Ok(Document::data(config_echo("sanitize", c, Some(&r)), summary, out.to_csv()))
}

fn audit_cmd(c: &Common, spec: &SourceSpec) -> Run<Document> {
    let need = |p: &Option<PathBuf>, flag: &str| p.clone().ok_or_else(|| invalid(format!("audit needs --{flag}")));
    let plan = SanitizationPlan::from_json(&read(&need(&c.plan, "plan")?)?)?;
    let db = ingest_csv(&read(&need(&c.database, "database")?)?, spec.attributes())?;
    let sdb = ingest_csv(&read(&need(&c.sanitized, "sanitized")?)?, plan.channel.output_axes())?;
    let report = audit(&db, &sdb, spec, &plan)?;
    let result = json!({
        "rows": report.rows,
        "D": report.distortion,
        "target_D": report.target_distortion,
        "equivocation": report.equivocation,
        "equivocation_quantity": "H(Xh | X^r, Z)",
        "target_E": report.target_equivocation,
        "meets_D": report.distortion.iter().zip(&report.target_distortion).all(|(a, b)| a <= b),
        "meets_E": report.equivocation >= report.target_equivocation,
    });
    Ok(Document::object(config_echo("audit", c, None), result))
}

fn stage(v: &Option<Vec<f64>>, flag: &str) -> Run<(f64, f64)> {
    match v.as_deref() {
        Some([d, e]) => Ok((*d, *e)),
        _ => Err(invalid(format!("--{flag} takes D,E"))),
    }
}

fn successive(c: &Common, spec: &SourceSpec) -> Run<Document> {
    let coarse = stage(&c.coarse, "coarse")?;
    let fine = stage(&c.fine, "fine")?;
    if spec.distortions().len() != 1 {
        return Err(invalid("successive needs a model with exactly one utility constraint"));
    }
    let prior = marginalize(spec.joint(), &public_names(spec))?;
    let plan = check_successive(&prior, spec.distortion(0), coarse, fine)?;
    let rates = if plan.feasible { Some(disclosure_rates(&plan, &prior)?) } else { None };
    let kernel = |k: &[f64], n: usize| k.chunks(n).map(<[f64]>::to_vec).collect::<Vec<_>>();
    let result = json!({
        "feasible": plan.feasible,
        "R0": rates.map(|r| r.0),
        "R1": rates.map(|r| r.1),
        "single_stage_R": [plan.single_stage.0, plan.single_stage.1],
        "rate_gap": plan.gap,
        "E": [plan.equivocation.0, plan.equivocation.1],
        "achieved_D": [plan.achieved.0, plan.achieved.1],
        "fine_channel": kernel(plan.fine_channel.kernel(), plan.fine_channel.output_size()),
        "refinement": kernel(plan.refinement.kernel(), plan.refinement.output_size()),
    });
    Ok(Document::object(config_echo("successive", c, None), result))
}

fn run(cli: &Cli) -> Run<(Document, Common)> {
    let (name, c) = match &cli.command {
        Command::Validate(c) => ("validate", c),
        Command::Rd(c) => ("rd", c),
        Command::Gamma(c) => ("gamma", c),
        Command::Tradeoff(c) => ("tradeoff", c),
        Command::Sanitize(c) => ("sanitize", c),
        Command::Successive(c) => ("successive", c),
        Command::Audit(c) => ("audit", c),
    };
    let spec = load_spec(&read(&c.model)?)?;
    let doc = match name {
        "validate" => validate(c, &spec),
        "rd" => rd(c, &spec),
        "gamma" => gamma(c, &spec),
        "tradeoff" => tradeoff(c, &spec),
        "sanitize" => sanitize_cmd(c, &spec),
        "successive" => successive(c, &spec),
        _ => audit_cmd(c, &spec),
    }?;
    Ok((doc, c.clone()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = run(&cli).and_then(|(doc, c)| {
        match (&doc.data, &c.output) {
            // the database goes to the output file and the summary to stdout
            (Some(data), Some(p)) => {
                write(p, data)?;
                print!("{}", doc.render(Format::Json).map_err(invalid)?);
            }
            (Some(data), None) => print!("{data}"),
            (None, Some(p)) => write(p, &doc.render(c.format).map_err(invalid)?)?,
            (None, None) => print!("{}", doc.render(c.format).map_err(invalid)?),
        }
        if let Some(note) = &doc.note {
            eprintln!("rdeq: {note}");
        }
        Ok(doc.status)
    });
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("rdeq: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
