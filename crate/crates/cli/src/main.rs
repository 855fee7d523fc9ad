//! `ale-glue`: reproducible experiments on scalar-flat ALE gluing.

mod config;

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Parser, Subcommand};
use num_rational::BigRational;
use serde_json::{json, Value};

use ale_glue::ale_models::{burns_simanca, eguchi_hanson, euclidean, from_document, to_document, ModelDocument};
use ale_glue::cohomology::{
    increment_factor, mass_increment, plan_blowups_exact, PlanReport,
};
use ale_glue::error::Error;
use ale_glue::experiments::{blowup, calibrate_two_point, epsilon_sweep, solve_blowup, sweep_csv, SWEEP_COLUMNS};
use ale_glue::gluing::{glued_scalar_curvature_norm, two_point_sweep, CutoffProfile, CutoffShape};
use ale_glue::mass::{default_radii, mass_consistency_with};
use ale_glue::scalarflat_solver::{certify_threshold, RadialMesh};
use ale_glue::validation::run_validation;
use ale_glue::weighted_analysis::{estimate_constants, two_point_epsilon0};
use ale_glue::{Model, NormSpec, Preglued};

use config::{Overrides, RunConfig};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Library(#[from] Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Library(e) => match e {
                Error::InvalidInput(_)
                | Error::DomainError(_)
                | Error::TargetBelowBase { .. }
                | Error::DegenerateThreshold(_)
                | Error::IncompatibleDimensions(_)
                | Error::RadiusTooSmall { .. } => 1,
                _ => 2,
            },
            CliError::Invariant(_) => 3,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "ale-glue", version, about = "Scalar-flat ALE Kähler gluing experiments")]
struct Cli {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for randomized checks.
    #[arg(long, global = true, default_value_t = 7)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Mass of a model by boundary integral, asymptotic fit and topology.
    Mass(Overrides),
    /// Pre-glue a scaled Burns–Simanca bubble into a base chart.
    Glue(Overrides),
    /// Newton-solve the scalar-flat blow-up and read off its mass.
    Solve(Overrides),
    /// Estimate the gluing constants and the threshold `ε₀`.
    Constants(Overrides),
    /// Plan blow-up weights reaching a target mass.
    Plan(Overrides),
    /// Sweep `ε` or the second point's radius; emits CSV.
    Sweep(Overrides),
    /// Run the invariant suite.
    Validate(Overrides),
}

impl Command {
    fn parts(&self) -> (&'static str, &Overrides) {
        match self {
            Command::Mass(o) => ("mass", o),
            Command::Glue(o) => ("glue", o),
            Command::Solve(o) => ("solve", o),
            Command::Constants(o) => ("constants", o),
            Command::Plan(o) => ("plan", o),
            Command::Sweep(o) => ("sweep", o),
            Command::Validate(o) => ("validate", o),
        }
    }
}

/// Report body plus an optional failure raised after the report is written.
struct Outcome {
    report: Value,
    violation: Option<String>,
}

impl From<Value> for Outcome {
    fn from(report: Value) -> Self {
        Self { report, violation: None }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("ALE_GLUE_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let (name, flags) = cli.command.parts();
    let cfg = RunConfig::merge(cli.config.as_deref(), flags)?;
    log::info!("running {name} with seed {}", cli.seed);
    let outcome = match name {
        "mass" => cmd_mass(&cfg)?,
        "glue" => cmd_glue(&cfg)?,
        "solve" => cmd_solve(&cfg, cli.seed)?,
        "constants" => cmd_constants(&cfg, cli.seed)?,
        "plan" => cmd_plan(&cfg)?,
        "sweep" => cmd_sweep(&cfg, cli.seed, cli.out.as_deref())?,
        _ => cmd_validate(cli.seed)?,
    };
    let document = json!({
        "schema_version": SCHEMA_VERSION,
        "tool": "ale-glue",
        "version": env!("CARGO_PKG_VERSION"),
        "modules": module_versions(),
        "timestamp": timestamp(),
        "command": name,
        "seed": cli.seed,
        "config": cfg.echo(),
        "report": outcome.report,
    });
    let text = serde_json::to_string_pretty(&document).expect("report serializes") + "\n";
    match &cli.out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::Write::write_all(&mut std::io::stdout().lock(), text.as_bytes())?,
    }
    match outcome.violation {
        Some(v) => Err(CliError::Invariant(v)),
        None => Ok(()),
    }
}

fn module_versions() -> Value {
    let v = env!("CARGO_PKG_VERSION");
    let names = [
        "radial_kahler",
        "ale_models",
        "mass",
        "cohomology",
        "gluing",
        "weighted_analysis",
        "scalarflat_solver",
        "cli",
    ];
    Value::Object(names.iter().map(|n| (n.to_string(), json!(v))).collect())
}

fn timestamp() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn model(cfg: &RunConfig) -> Result<Model, CliError> {
    let m: usize = cfg.get("m")?;
    Ok(match cfg.raw("model") {
        "eh" => eguchi_hanson(cfg.get::<f64>("a")?)?,
        "bs" => burns_simanca::<f64>(m)?.rescaled(cfg.get("scale")?),
        "flat" => euclidean(m)?,
        "file" => {
            let path = cfg.optional("model-file").ok_or_else(|| CliError::Config("model = file needs model-file".into()))?;
            let doc: ModelDocument = serde_json::from_str(&std::fs::read_to_string(path)?)
                .map_err(|e| CliError::Config(format!("{path}: {e}")))?;
            from_document(&doc)?
        }
        other => return Err(CliError::Config(format!("unknown model `{other}`"))),
    })
}

fn cutoff(cfg: &RunConfig) -> Result<CutoffProfile, CliError> {
    match cfg.raw("cutoff") {
        "smoothstep9" => Ok(CutoffProfile::new(CutoffShape::Smoothstep9)),
        "exponential" => Ok(CutoffProfile::new(CutoffShape::Exponential)),
        other => Err(CliError::Config(format!("unknown cutoff `{other}`"))),
    }
}

fn norm_spec(cfg: &RunConfig, m: usize) -> Result<NormSpec, CliError> {
    let spec = NormSpec::default_for(m);
    let spec = match cfg.get_optional::<f64>("delta")? {
        Some(d) => spec.with_delta(d),
        None => spec,
    };
    spec.validate(m)?;
    Ok(spec)
}

fn builder(cfg: &RunConfig) -> Result<impl Fn(f64) -> ale_glue::error::Result<Preglued> + Sync, CliError> {
    let base = model(cfg)?;
    let chart = cfg.get_optional::<f64>("chart")?;
    let cut = cutoff(cfg)?;
    Ok(move |eps: f64| blowup(&base, chart, eps, cut))
}

fn export(cfg: &RunConfig, model: &Model, pg: &Preglued, nodes: usize) -> Result<Option<String>, CliError> {
    let Some(path) = cfg.optional("export") else { return Ok(None) };
    let mesh = RadialMesh::for_glued(pg, nodes)?;
    let doc = to_document(model, mesh.s[0], mesh.s[mesh.len() - 1], cfg.get("per-octave")?)?;
    std::fs::write(path, serde_json::to_string_pretty(&doc).expect("document serializes"))?;
    Ok(Some(path.to_string()))
}

fn cmd_mass(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let model = model(cfg)?;
    let radii = match cfg.optional("radii") {
        Some(_) => cfg.list("radii")?,
        None => default_radii(&model),
    };
    let topological = match cfg.raw("topological") {
        "auto" => match cfg.raw("model") {
            "eh" | "flat" => Some(0.0),
            "bs" => Some(mass_increment(model.m, cfg.get("scale")?)),
            _ => None,
        },
        _ => cfg.get_optional("topological")?,
    };
    Ok(mass_consistency_with(&model, topological, &radii)?.to_json().into())
}

fn cmd_glue(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let pg = builder(cfg)?(cfg.get("epsilon")?)?;
    let spec = norm_spec(cfg, pg.m())?;
    let (inner, outer) = pg.annulus();
    let exported = export(cfg, &pg.model(), &pg, cfg.get("nodes")?)?;
    Ok(json!({
        "epsilon": pg.epsilon,
        "r_epsilon": pg.r_epsilon,
        "annulus": [inner, outer],
        "seam_mismatch": pg.seam_mismatch()?,
        "scalar_curvature_norm": glued_scalar_curvature_norm(&pg, &spec)?,
        "delta": spec.delta,
        "cutoff": pg.cutoff,
        "profile": exported,
        "caveats": pg.caveats(),
    })
    .into())
}

fn cmd_solve(cfg: &RunConfig, seed: u64) -> Result<Outcome, CliError> {
    let pg = builder(cfg)?(cfg.get("epsilon")?)?;
    let nodes = cfg.get("nodes")?;
    let (report, solved) = solve_blowup(&pg, nodes, cfg.get("tol")?, seed)?;
    let exported = export(cfg, &solved, &pg, nodes)?;
    let mut value = serde_json::to_value(&report).expect("report serializes");
    value["profile"] = json!(exported);
    Ok(value.into())
}

fn cmd_constants(cfg: &RunConfig, seed: u64) -> Result<Outcome, CliError> {
    let build = builder(cfg)?;
    let family = cfg.list("epsilons")?.into_iter().map(&build).collect::<Result<Vec<_>, _>>()?;
    let m = family.first().map(|pg| pg.m()).ok_or_else(|| CliError::Config("epsilons is empty".into()))?;
    let spec = norm_spec(cfg, m)?;
    let constants = estimate_constants(&family, &spec, cfg.get("refine")?)?;
    let mut report = json!({ "constants": constants });
    let mut violation = None;
    if cfg.get::<bool>("certify")? {
        let cap = cfg.get::<f64>("cap-factor")? * constants.epsilon0;
        let threshold = certify_threshold(&build, &constants, spec, cap, seed)?;
        if !threshold.consistent {
            violation = Some(format!(
                "empirical threshold {:e} below formula epsilon0 {:e}",
                threshold.empirical_threshold, threshold.formula_epsilon0
            ));
        }
        report["threshold"] = serde_json::to_value(&threshold).expect("report serializes");
    }
    Ok(Outcome { report, violation })
}

fn rational(cfg: &RunConfig, key: &str) -> Result<BigRational, CliError> {
    let v = cfg.raw(key);
    if let Ok(q) = BigRational::from_str(v) {
        return Ok(q);
    }
    v.parse::<f64>()
        .ok()
        .and_then(BigRational::from_float)
        .ok_or_else(|| CliError::Config(format!("{key}: `{v}` is not a rational number")))
}

fn cmd_plan(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let m: usize = cfg.get("m")?;
    let (eps0, safety) = (cfg.get("eps0")?, cfg.get("safety")?);
    if !cfg.get::<bool>("exact")? {
        let plan = PlanReport::build(cfg.get("base-mass")?, cfg.get("target")?, m, eps0, safety)?;
        return Ok(serde_json::to_value(&plan).expect("report serializes").into());
    }
    let (base, target) = (rational(cfg, "base-mass")?, rational(cfg, "target")?);
    let weights = plan_blowups_exact(&base, &target, m, eps0, safety)?;
    let achieved = weights.iter().fold(base.clone(), |acc, w| acc + increment_factor(m) * &w.power);
    Ok(json!({
        "m": m,
        "units": "coefficient of pi^-(m-1)",
        "base_mass": base.to_string(),
        "target": target.to_string(),
        "epsilon0": eps0,
        "safety": safety,
        "k": weights.len(),
        "weight_powers": weights.iter().map(|w| w.power.to_string()).collect::<Vec<_>>(),
        "weights": weights.iter().map(|w| w.epsilon_f64(m)).collect::<Vec<_>>(),
        "achieved_mass": achieved.to_string(),
        "exact_match": achieved == target,
    })
    .into())
}

fn cmd_sweep(cfg: &RunConfig, seed: u64, out: Option<&std::path::Path>) -> Result<Outcome, CliError> {
    let (report, csv) = match cfg.raw("kind") {
        "epsilon" => {
            let build = builder(cfg)?;
            let grid = cfg.list("epsilons")?;
            let rows = epsilon_sweep(&build, &grid, cfg.get("nodes")?, cfg.get("tol")?, seed)?;
            let caveats = build(grid[0])?.caveats();
            (json!({ "kind": "epsilon", "columns": SWEEP_COLUMNS, "rows": rows, "caveats": caveats }), sweep_csv(&rows))
        }
        "two-point" => {
            let base = model(cfg)?;
            let s_p: f64 = cfg.get("calibration-chart")?;
            let spec = norm_spec(cfg, base.m)?;
            let grid = cfg.list("epsilons")?;
            let cal = calibrate_two_point(&base, s_p, &grid, &spec)?;
            let family = grid
                .iter()
                .map(|&e| blowup(&base, Some(s_p), e, cutoff(cfg)?).map_err(CliError::from))
                .collect::<Result<Vec<_>, _>>()?;
            let k_p = estimate_constants(&family, &spec, false)?.k_p;
            let radii = cfg.list("rq")?;
            let sweep = two_point_sweep(&base, s_p, &radii, &cal)?;
            let table = two_point_epsilon0(&base, s_p, &radii, &cal, k_p)?;
            let mut csv = String::from("r_q,c_p,c_q,C_pq_bound,C_p_bound,eps0\n");
            for (r, t) in sweep.rows.iter().zip(&table.rows) {
                csv.push_str(&format!("{:e},{:e},{:e},{:e},{:e},{:e}\n", r.r_q, r.c_p, r.c_q, r.c_pq_bound, r.c_p_bound, t.eps0));
            }
            (json!({ "kind": "two-point", "calibration": cal, "k_p": k_p, "sweep": sweep, "table": table, "caveats": table.caveats }), csv)
        }
        other => return Err(CliError::Config(format!("unknown sweep kind `{other}`"))),
    };
    let csv_path = cfg.optional("csv").map(PathBuf::from).or_else(|| out.map(|p| p.with_extension("csv")));
    let mut report = report;
    match csv_path {
        Some(p) => {
            std::fs::write(&p, &csv)?;
            report["csv_path"] = json!(p.display().to_string());
        }
        None => report["csv"] = json!(csv),
    }
    Ok(report.into())
}

fn cmd_validate(seed: u64) -> Result<Outcome, CliError> {
    let v = run_validation(seed)?;
    let violation = (!v.passed).then(|| {
        let failed: Vec<&str> = v.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
        failed.join(", ")
    });
    Ok(Outcome { report: serde_json::to_value(&v).expect("report serializes"), violation })
}
