//! Command-line frontend: estimation, solving, certification, simulation and
//! reporting as reproducible runs.
//!
//! Exit codes: 0 success, 2 input/validation failure, 3 solve not certified,
//! 4 certification check failed, 1 anything else. Every run writes a
//! `manifest.json` (argv, tool version, input digests) into its output
//! directory. Set `FLEETFLOW_LOG=error|warn|info|debug` to control chatter.

mod files;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};

use fleetflow::duality::{kkt_check, marginal_report, KktConfig};
use fleetflow::ingest;
use fleetflow::instance::Instance;
use fleetflow::sim::{run_simulation, DemandRealization, DynamPolicy, Policy, SimConfig, SimStart};
use fleetflow::solver::{
    build_dynamic_program, build_static_program, SolveConfig, SupplyConstraintKind,
};
use fleetflow::transform::{contract_solution, expand, ContractedPlan};

use files::{CertFile, Manifest, PlanFile};

fn verbosity() -> u8 {
    match std::env::var("FLEETFLOW_LOG").ok().as_deref() {
        Some("error") => 0,
        Some("warn") => 1,
        Some("debug") => 3,
        _ => 2,
    }
}

fn info(msg: impl AsRef<str>) {
    if verbosity() >= 2 {
        eprintln!("fleetflow: {}", msg.as_ref());
    }
}

fn debug(msg: impl AsRef<str>) {
    if verbosity() >= 3 {
        eprintln!("fleetflow[debug]: {}", msg.as_ref());
    }
}

#[derive(Parser)]
#[command(
    name = "fleetflow",
    version,
    about = "Pricing and dispatch optimization for fluid ride-hailing markets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a reproducible synthetic order log.
    Synth(SynthArgs),
    /// Estimate demand curves and the fare rate from an order log.
    Estimate(EstimateArgs),
    /// Solve the stationary pricing/dispatch program.
    SolveStatic(SolveStaticArgs),
    /// Solve the finite-horizon pricing/dispatch program.
    SolveDynamic(SolveDynamicArgs),
    /// Verify a plan/certificate pair against first-order conditions.
    KktCheck(KktArgs),
    /// Simulate a pricing policy on an instance.
    Simulate(SimulateArgs),
    /// Merge simulation traces into a comparison table.
    Report(ReportArgs),
    /// Expand an instance to unit travel times.
    Expand(ExpandArgs),
    /// Dump one edge's ironed objective.
    Inspect(InspectArgs),
}

#[derive(Args)]
struct SolveFlags {
    /// Ironing grid intervals per envelope.
    #[arg(long, default_value_t = 1000)]
    grid: usize,
    /// Cap on piecewise-linear segments per envelope.
    #[arg(long)]
    pwl_max: Option<usize>,
    #[arg(long, default_value_t = 1e-7)]
    feas_tol: f64,
    #[arg(long, default_value_t = 1e-5)]
    stat_tol: f64,
    #[arg(long, default_value_t = 1e-6)]
    slack_tol: f64,
    #[arg(long, default_value_t = 100_000)]
    max_pivots: usize,
    /// Minutes per time step.
    #[arg(long, default_value_t = 15)]
    step_minutes: u32,
}

impl SolveFlags {
    fn solve_config(&self) -> SolveConfig {
        SolveConfig {
            grid_size: self.grid,
            max_pwl_segments: self.pwl_max,
            feasibility_tol: self.feas_tol,
            stationarity_tol: self.stat_tol,
            slackness_tol: self.slack_tol,
            max_pivots: self.max_pivots,
            step_minutes: self.step_minutes,
        }
    }

    fn kkt_config(&self) -> KktConfig {
        KktConfig {
            stationarity_tol: self.stat_tol,
            slackness_tol: self.slack_tol,
            feasibility_tol: self.feas_tol,
            step_minutes: self.step_minutes,
        }
    }
}

#[derive(Args)]
struct SynthArgs {
    /// Generator configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short = 'o', long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct EstimateArgs {
    /// Order log CSV (header: order,driver,user,origin,dest,price,timestamp).
    #[arg(long)]
    orders: PathBuf,
    #[arg(short = 'o', long)]
    out_dir: PathBuf,
    /// Fit one demand curve per hour of day.
    #[arg(long)]
    per_hour: bool,
    /// Drop weekend records (default when --per-hour is set).
    #[arg(long, conflicts_with = "all_days")]
    weekdays_only: bool,
    /// Keep weekend records even in per-hour mode.
    #[arg(long)]
    all_days: bool,
    #[arg(long, default_value_t = 10)]
    min_cell: usize,
    #[arg(long, default_value_t = 0.05)]
    lower_quantile: f64,
    #[arg(long, default_value_t = 0.95)]
    upper_quantile: f64,
    /// Request-count divisor; defaults to the largest cell count.
    #[arg(long)]
    normalizer: Option<f64>,
    #[arg(long, default_value_t = 15)]
    step_minutes: u32,
}

#[derive(Args)]
struct SolveStaticArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(short = 'o', long)]
    out_dir: PathBuf,
    #[command(flatten)]
    flags: SolveFlags,
}

#[derive(Args)]
struct SolveDynamicArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(short = 'o', long)]
    out_dir: PathBuf,
    /// Number of steps in the horizon.
    #[arg(long)]
    horizon: usize,
    /// Initial driver distribution: "uniform" or a JSON file {node: mass}.
    #[arg(long, default_value = "uniform")]
    w1: String,
    /// Supply constraint: `per-step`, `total=<budget>` or `soft=<tiers.json>`.
    #[arg(long, default_value = "per-step")]
    supply: String,
    #[command(flatten)]
    flags: SolveFlags,
}

#[derive(Args)]
struct KktArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    plan: PathBuf,
    #[arg(long)]
    cert: PathBuf,
    /// Output directory for the report (optional; prints either way).
    #[arg(short = 'o', long)]
    out_dir: Option<PathBuf>,
    #[command(flatten)]
    flags: SolveFlags,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Policy: "fixed:alpha=0.5117", "surge:alpha=0.5117,beta=1..5" or
    /// "dynam:plan=<plan.json>".
    #[arg(long)]
    policy: String,
    #[arg(short = 'o', long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 96)]
    steps: usize,
    #[arg(long, default_value_t = 15)]
    step_minutes: u32,
    /// Start state: "uniform", "plan=<plan.json>" (its stationary state) or
    /// "file=<w.json>". Defaults to the plan state for dynam, else uniform.
    #[arg(long)]
    start: Option<String>,
    /// Sample one price per edge and step instead of fluid expectations.
    #[arg(long)]
    sample_seed: Option<u64>,
    /// Ironing grid used when rebuilding mixtures is necessary.
    #[arg(long, default_value_t = 1000)]
    grid: usize,
}

#[derive(Args)]
struct ReportArgs {
    /// Trace CSV files produced by `simulate`.
    #[arg(required = true)]
    traces: Vec<PathBuf>,
    #[arg(short = 'o', long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct ExpandArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(short = 'o', long)]
    out_dir: PathBuf,
    /// Also write the edge/node mapping back to the original instance.
    #[arg(long)]
    emit_mapping: bool,
}

#[derive(Args)]
struct InspectArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Edge id to iron.
    #[arg(long)]
    edge: String,
    #[arg(long, default_value_t = 0)]
    period: usize,
    #[arg(long, default_value_t = 1000)]
    grid: usize,
    #[arg(short = 'o', long)]
    out_dir: PathBuf,
}

/// Failure with a process exit code.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    fn validation(error: anyhow::Error) -> Self {
        Failure { code: 2, error }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        // Library input/validation errors map to exit code 2.
        let code = match error.downcast_ref::<fleetflow::Error>() {
            Some(
                fleetflow::Error::InvalidInput(_)
                | fleetflow::Error::OutOfRange { .. }
                | fleetflow::Error::DimensionMismatch(_)
                | fleetflow::Error::Infeasible(_),
            ) => 2,
            _ => 1,
        };
        Failure { code, error }
    }
}

impl From<fleetflow::Error> for Failure {
    fn from(error: fleetflow::Error) -> Self {
        Failure::from(anyhow::Error::new(error))
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth(args) => cmd_synth(args),
        Command::Estimate(args) => cmd_estimate(args),
        Command::SolveStatic(args) => cmd_solve_static(args),
        Command::SolveDynamic(args) => cmd_solve_dynamic(args),
        Command::KktCheck(args) => cmd_kkt_check(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Report(args) => cmd_report(args),
        Command::Expand(args) => cmd_expand(args),
        Command::Inspect(args) => cmd_inspect(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("fleetflow: error: {:#}", failure.error);
            ExitCode::from(failure.code)
        }
    }
}

fn ensure_out_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir)
        .with_context(|| format!("creating {}", dir.display()))
        .map_err(Failure::from)
}

fn load_instance(path: &Path) -> Result<Instance, Failure> {
    debug(format!("loading instance {}", path.display()));
    Instance::from_file(path).map_err(|e| Failure::validation(anyhow::Error::new(e)))
}

fn cmd_synth(args: SynthArgs) -> CmdResult {
    ensure_out_dir(&args.out_dir)?;
    let config: ingest::SynthConfig = files::read_json(&args.config)?;
    let csv = ingest::synth_generate(&config, args.seed)?;
    let out = args.out_dir.join("orders.csv");
    std::fs::write(&out, &csv).context("writing orders.csv")?;
    info(format!("wrote {} ({} lines)", out.display(), csv.lines().count()));
    let mut manifest = Manifest::new("synth");
    manifest.input(&args.config)?;
    manifest.output(&out);
    manifest.write(&args.out_dir)?;
    Ok(())
}

fn cmd_estimate(args: EstimateArgs) -> CmdResult {
    ensure_out_dir(&args.out_dir)?;
    let parsed = ingest::parse_orders(&args.orders)?;
    info(format!(
        "parsed {} records, {} rejected rows",
        parsed.records.len(),
        parsed.rejected.len()
    ));
    let config = ingest::EstimationConfig {
        lower_quantile: args.lower_quantile,
        upper_quantile: args.upper_quantile,
        min_cell: args.min_cell,
        per_hour: args.per_hour,
        weekdays_only: if args.weekdays_only {
            Some(true)
        } else if args.all_days {
            Some(false)
        } else {
            None
        },
        supply_normalizer: args.normalizer,
        step_minutes: args.step_minutes,
    };
    let result = ingest::estimate_instance(parsed, &config)?;
    info(format!(
        "fare rate {:.4} per minute (r^2 {:.4}, n {}); {} edges; {} outliers removed",
        result.alpha.alpha,
        result.alpha.r_squared,
        result.alpha.n,
        result.edges.len(),
        result.removed_outliers
    ));
    let instance_path = args.out_dir.join("instance.json");
    files::write_json(&instance_path, &result.instance)?;
    let estimation_path = args.out_dir.join("estimation.json");
    files::write_json(&estimation_path, &result)?;
    // The emitted instance must load cleanly.
    load_instance(&instance_path)?;
    let mut manifest = Manifest::new("estimate");
    manifest.input(&args.orders)?;
    manifest.output(&instance_path);
    manifest.output(&estimation_path);
    manifest.write(&args.out_dir)?;
    Ok(())
}

fn cmd_solve_static(args: SolveStaticArgs) -> CmdResult {
    ensure_out_dir(&args.out_dir)?;
    let instance = load_instance(&args.instance)?;
    let config = args.flags.solve_config();
    let expanded = expand(&instance);
    debug(format!(
        "expanded to {} nodes / {} edges",
        expanded.graph.node_count(),
        expanded.graph.edge_count()
    ));
    let envelopes = expanded.envelopes(config.grid_size)?;
    let program = build_static_program(&expanded, &envelopes, &config)?;
    debug(format!("program: {} vars, {} rows", program.n_lp_vars(), program.n_lp_rows()));
    let result = program.solve(&config)?;
    let report = kkt_check(
        &expanded,
        &envelopes,
        &result.plan,
        &result.certificate,
        &args.flags.kkt_config(),
    )?;
    let certified = result.certified && report.passes;
    info(format!(
        "objective {:.6} per step; certified: {certified} (stationarity {:.2e}, pivots {})",
        result.plan.objective_value, report.max_stationarity, result.pivots
    ));

    let contracted = contract_solution(&result.plan, &expanded)?;
    let policy =
        DynamPolicy::from_plan(&instance, &contracted, config.grid_size, config.step_minutes)?;
    let plan_path = args.out_dir.join("plan.json");
    files::write_json(&plan_path, &PlanFile::from_parts(&contracted, &policy, &instance.graph))?;
    let cert_path = args.out_dir.join("cert.json");
    files::write_json(
        &cert_path,
        &CertFile::from_certificate(&result.certificate, &expanded.graph),
    )?;
    let kkt_path = args.out_dir.join("kkt.json");
    files::write_json(&kkt_path, &report)?;
    if verbosity() >= 2 {
        eprint!("{}", marginal_report(&result.certificate, &expanded.graph));
    }
    let mut manifest = Manifest::new("solve-static");
    manifest.input(&args.instance)?;
    manifest.output(&plan_path);
    manifest.output(&cert_path);
    manifest.output(&kkt_path);
    manifest.write(&args.out_dir)?;

    if !certified {
        return Err(Failure {
            code: 3,
            error: anyhow!(
                "solve not certified: stationarity {:.3e}, slackness {:.3e}, feasibility {:.3e}",
                report.max_stationarity,
                report.complementary_slackness,
                report.primal_feasibility
            ),
        });
    }
    Ok(())
}

fn parse_supply(spec: &str) -> anyhow::Result<SupplyConstraintKind> {
    if spec == "per-step" {
        return Ok(SupplyConstraintKind::PerStep);
    }
    if let Some(budget) = spec.strip_prefix("total=") {
        return Ok(SupplyConstraintKind::TotalAccumulated { budget: budget.parse()? });
    }
    if let Some(path) = spec.strip_prefix("soft=") {
        #[derive(serde::Deserialize)]
        struct SoftFile {
            tiers: Vec<(f64, f64)>,
            tail_marginal: f64,
        }
        let soft: SoftFile = files::read_json(Path::new(path))?;
        return Ok(SupplyConstraintKind::Soft {
            tiers: soft.tiers,
            tail_marginal: soft.tail_marginal,
        });
    }
    bail!("unknown supply spec {spec:?}; use per-step, total=<budget> or soft=<tiers.json>")
}

fn load_w1(spec: &str, instance: &Instance) -> anyhow::Result<Vec<f64>> {
    if spec == "uniform" {
        let n = instance.graph.node_count();
        return Ok(vec![1.0 / n as f64; n]);
    }
    let map: std::collections::BTreeMap<String, f64> = files::read_json(Path::new(spec))?;
    let mut w = vec![0.0; instance.graph.node_count()];
    for (node, mass) in map {
        let idx = instance
            .graph
            .node_index(&node)
            .with_context(|| format!("unknown node {node} in {spec}"))?;
        w[idx] = mass;
    }
    Ok(w)
}

fn cmd_solve_dynamic(args: SolveDynamicArgs) -> CmdResult {
    ensure_out_dir(&args.out_dir)?;
    let instance = load_instance(&args.instance)?;
    let config = args.flags.solve_config();
    let supply = parse_supply(&args.supply).map_err(Failure::validation)?;
    let expanded = expand(&instance);
    let envelopes = expanded.envelopes(config.grid_size)?;
    let w1 = match supply {
        SupplyConstraintKind::PerStep => {
            // The initial distribution lives on real nodes; virtual nodes
            // start empty.
            let mut w = vec![0.0; expanded.graph.node_count()];
            let real = load_w1(&args.w1, &instance).map_err(Failure::validation)?;
            w[..real.len()].copy_from_slice(&real);
            Some(w)
        }
        _ => None,
    };
    let program =
        build_dynamic_program(&expanded, &envelopes, args.horizon, w1.as_deref(), supply, &config)?;
    debug(format!("program: {} vars, {} rows", program.n_lp_vars(), program.n_lp_rows()));
    let result = program.solve(&config)?;
    let report = kkt_check(
        &expanded,
        &envelopes,
        &result.plan,
        &result.certificate,
        &args.flags.kkt_config(),
    )?;
    let certified = result.certified && report.passes;
    info(format!(
        "objective {:.6} over {} steps; certified: {certified} (pivots {})",
        result.plan.objective_value, args.horizon, result.pivots
    ));

    let contracted = contract_solution(&result.plan, &expanded)?;
    let policy =
        DynamPolicy::from_plan(&instance, &contracted, config.grid_size, config.step_minutes)?;
    let plan_path = args.out_dir.join("plan.json");
    files::write_json(&plan_path, &PlanFile::from_parts(&contracted, &policy, &instance.graph))?;
    let cert_path = args.out_dir.join("cert.json");
    files::write_json(
        &cert_path,
        &CertFile::from_certificate(&result.certificate, &expanded.graph),
    )?;
    let kkt_path = args.out_dir.join("kkt.json");
    files::write_json(&kkt_path, &report)?;
    if verbosity() >= 2 {
        eprint!("{}", marginal_report(&result.certificate, &expanded.graph));
    }
    let mut manifest = Manifest::new("solve-dynamic");
    manifest.input(&args.instance)?;
    manifest.output(&plan_path);
    manifest.output(&cert_path);
    manifest.output(&kkt_path);
    manifest.write(&args.out_dir)?;

    if !certified {
        return Err(Failure {
            code: 3,
            error: anyhow!(
                "solve not certified: stationarity {:.3e}, slackness {:.3e}, feasibility {:.3e}",
                report.max_stationarity,
                report.complementary_slackness,
                report.primal_feasibility
            ),
        });
    }
    Ok(())
}

fn cmd_kkt_check(args: KktArgs) -> CmdResult {
    let instance = load_instance(&args.instance)?;
    let expanded = expand(&instance);
    let envelopes = expanded.envelopes(args.flags.grid)?;
    let plan_file: PlanFile = files::read_json(&args.plan)?;
    let (contracted, _) = plan_file.into_parts(&instance)?;
    let plan = fleetflow::transform::expand_plan(&contracted, &expanded);
    let cert_file: CertFile = files::read_json(&args.cert)?;
    let cert = cert_file.into_certificate(&expanded.graph)?;
    let report = kkt_check(&expanded, &envelopes, &plan, &cert, &args.flags.kkt_config())?;
    println!(
        "stationarity {:.3e} | slackness {:.3e} | feasibility {:.3e} | lambda>=0 gap {:.3e}{}",
        report.max_stationarity,
        report.complementary_slackness,
        report.primal_feasibility,
        report.lambda_negativity,
        report.duality_gap.map(|g| format!(" | duality gap {g:.3e}")).unwrap_or_default()
    );
    println!("result: {}", if report.passes { "PASS" } else { "FAIL" });
    if let Some(out_dir) = &args.out_dir {
        ensure_out_dir(out_dir)?;
        let path = out_dir.join("kkt.json");
        files::write_json(&path, &report)?;
        let mut manifest = Manifest::new("kkt-check");
        manifest.input(&args.instance)?;
        manifest.input(&args.plan)?;
        manifest.input(&args.cert)?;
        manifest.output(&path);
        manifest.write(out_dir)?;
    }
    if report.passes {
        Ok(())
    } else {
        Err(Failure { code: 4, error: anyhow!("first-order conditions violated") })
    }
}

fn parse_policy(
    spec: &str,
    instance: &Instance,
    grid: usize,
    step_minutes: u32,
) -> anyhow::Result<(Policy, Option<ContractedPlan>)> {
    let (kind, rest) =
        spec.split_once(':').with_context(|| format!("policy {spec:?} is missing options"))?;
    let mut options = std::collections::BTreeMap::new();
    for pair in rest.split(',') {
        let (k, v) = pair.split_once('=').with_context(|| format!("bad policy option {pair:?}"))?;
        options.insert(k.trim().to_string(), v.trim().to_string());
    }
    let need = |key: &str| -> anyhow::Result<&String> {
        options.get(key).with_context(|| format!("policy {kind} needs {key}=..."))
    };
    match kind {
        "fixed" => {
            let alpha: f64 = need("alpha")?.parse()?;
            Ok((Policy::Fixed { alpha }, None))
        }
        "surge" => {
            let alpha: f64 = need("alpha")?.parse()?;
            let beta = need("beta")?;
            let (lo, hi) = beta
                .split_once("..")
                .with_context(|| format!("beta range {beta:?} should look like 1..5"))?;
            Ok((Policy::Surge { alpha, beta_min: lo.parse()?, beta_max: hi.parse()? }, None))
        }
        "dynam" => {
            let plan_path = need("plan")?;
            let plan_file: PlanFile = files::read_json(Path::new(plan_path))?;
            let (contracted, policy) = plan_file.into_parts(instance)?;
            // Rebuild mixtures if the plan file carried none at all.
            let has_any = policy.mixtures.iter().flatten().any(Option::is_some);
            let policy = if has_any {
                policy
            } else {
                DynamPolicy::from_plan(instance, &contracted, grid, step_minutes)?
            };
            Ok((Policy::Dynam(policy), Some(contracted)))
        }
        other => bail!("unknown policy kind {other:?} (fixed | surge | dynam)"),
    }
}

fn parse_start(
    spec: Option<&str>,
    instance: &Instance,
    dynam_plan: Option<&ContractedPlan>,
) -> anyhow::Result<SimStart> {
    match spec {
        None => match dynam_plan {
            Some(plan) => Ok(SimStart::from_plan(instance, plan)),
            None => {
                let n = instance.graph.node_count();
                Ok(SimStart::all_available(instance, vec![1.0 / n as f64; n]))
            }
        },
        Some("uniform") => {
            let n = instance.graph.node_count();
            Ok(SimStart::all_available(instance, vec![1.0 / n as f64; n]))
        }
        Some(s) if s.starts_with("plan=") => {
            let path = &s["plan=".len()..];
            let plan_file: PlanFile = files::read_json(Path::new(path))?;
            let (contracted, _) = plan_file.into_parts(instance)?;
            Ok(SimStart::from_plan(instance, &contracted))
        }
        Some(s) if s.starts_with("file=") => {
            let path = &s["file=".len()..];
            let w = load_w1(path, instance)?;
            Ok(SimStart::all_available(instance, w))
        }
        Some(other) => bail!("unknown start spec {other:?} (uniform | plan=PATH | file=PATH)"),
    }
}

#[derive(serde::Serialize)]
struct SimulateSummary {
    policy: String,
    steps: usize,
    step_minutes: u32,
    time_average_revenue: f64,
    total_revenue: f64,
    mean_supply_ratio_deviation: Option<f64>,
}

fn cmd_simulate(args: SimulateArgs) -> CmdResult {
    ensure_out_dir(&args.out_dir)?;
    let instance = load_instance(&args.instance)?;
    let (policy, dynam_plan) = parse_policy(&args.policy, &instance, args.grid, args.step_minutes)
        .map_err(Failure::validation)?;
    let start = parse_start(args.start.as_deref(), &instance, dynam_plan.as_ref())
        .map_err(Failure::validation)?;
    let config = SimConfig {
        steps: args.steps,
        step_minutes: args.step_minutes,
        realization: match args.sample_seed {
            Some(seed) => DemandRealization::Sampled { seed },
            None => DemandRealization::Expectation,
        },
    };
    let trace = run_simulation(&instance, &policy, &start, &config)?;
    let summary = SimulateSummary {
        policy: args.policy.clone(),
        steps: args.steps,
        step_minutes: args.step_minutes,
        time_average_revenue: trace.time_average_revenue(),
        total_revenue: trace.total_revenue(),
        mean_supply_ratio_deviation: trace.mean_supply_ratio_deviation(),
    };
    info(format!(
        "time-average revenue {:.6}; supply-ratio deviation {}",
        summary.time_average_revenue,
        summary
            .mean_supply_ratio_deviation
            .map(|d| format!("{d:.4}"))
            .unwrap_or_else(|| "n/a".into())
    ));
    let trace_path = args.out_dir.join("trace.csv");
    files::write_trace_csv(&trace, &instance, &trace_path)?;
    let summary_path = args.out_dir.join("summary.json");
    files::write_json(&summary_path, &summary)?;
    let mut manifest = Manifest::new("simulate");
    manifest.input(&args.instance)?;
    manifest.output(&trace_path);
    manifest.output(&summary_path);
    manifest.write(&args.out_dir)?;
    Ok(())
}

fn cmd_report(args: ReportArgs) -> CmdResult {
    ensure_out_dir(&args.out_dir)?;
    let mut parsed = Vec::new();
    for path in &args.traces {
        parsed.push(files::read_trace_csv(path)?);
    }
    // Revenue curves side by side.
    let max_len = parsed.iter().map(|t| t.revenue.len()).max().unwrap_or(0);
    let mut csv = String::from("step");
    for t in &parsed {
        csv.push_str(&format!(",{}:revenue", t.name));
    }
    csv.push('\n');
    for i in 0..max_len {
        csv.push_str(&format!("{}", i + 1));
        for t in &parsed {
            match t.revenue.get(i) {
                Some(r) => csv.push_str(&format!(",{r:.12}")),
                None => csv.push(','),
            }
        }
        csv.push('\n');
    }
    let csv_path = args.out_dir.join("comparison.csv");
    std::fs::write(&csv_path, csv).context("writing comparison.csv")?;

    #[derive(serde::Serialize)]
    struct Row {
        name: String,
        time_average_revenue: f64,
        mean_supply_ratio_deviation: Option<f64>,
    }
    let rows: Vec<Row> = parsed
        .iter()
        .map(|t| Row {
            name: t.name.clone(),
            time_average_revenue: t.time_average_revenue(),
            mean_supply_ratio_deviation: t.mean_ratio_deviation(),
        })
        .collect();
    for r in &rows {
        info(format!(
            "{}: time-average revenue {:.6}, ratio deviation {}",
            r.name,
            r.time_average_revenue,
            r.mean_supply_ratio_deviation
                .map(|d| format!("{d:.4}"))
                .unwrap_or_else(|| "n/a".into())
        ));
    }
    let json_path = args.out_dir.join("comparison.json");
    files::write_json(&json_path, &rows)?;
    let mut manifest = Manifest::new("report");
    for path in &args.traces {
        manifest.input(path)?;
    }
    manifest.output(&csv_path);
    manifest.output(&json_path);
    manifest.write(&args.out_dir)?;
    Ok(())
}

fn cmd_expand(args: ExpandArgs) -> CmdResult {
    ensure_out_dir(&args.out_dir)?;
    let instance = load_instance(&args.instance)?;
    let expanded = expand(&instance);
    let expanded_path = args.out_dir.join("expanded.json");
    files::write_json(&expanded_path, &expanded)?;
    let mut manifest = Manifest::new("expand");
    manifest.input(&args.instance)?;
    manifest.output(&expanded_path);
    if args.emit_mapping {
        let mapping_path = args.out_dir.join("mapping.json");
        files::write_json(&mapping_path, &expanded.mapping)?;
        manifest.output(&mapping_path);
    }
    manifest.write(&args.out_dir)?;
    info(format!(
        "expanded {} -> {} nodes, {} -> {} edges",
        instance.graph.node_count(),
        expanded.graph.node_count(),
        instance.graph.edge_count(),
        expanded.graph.edge_count()
    ));
    Ok(())
}

fn cmd_inspect(args: InspectArgs) -> CmdResult {
    ensure_out_dir(&args.out_dir)?;
    let instance = load_instance(&args.instance)?;
    let edge = instance
        .graph
        .edge_index(&args.edge)
        .with_context(|| format!("unknown edge {}", args.edge))
        .map_err(Failure::validation)?;
    let envelope =
        fleetflow::ironing::iron_objective(instance.edge_objective(edge, args.period), args.grid)?;
    #[derive(serde::Serialize)]
    struct Inspect<'a> {
        edge: &'a str,
        period: usize,
        max_throughput: f64,
        argmax: f64,
        envelope: &'a fleetflow::ironing::IronedObjective,
    }
    let path = args.out_dir.join("envelope.json");
    files::write_json(
        &path,
        &Inspect {
            edge: &args.edge,
            period: args.period,
            max_throughput: envelope.max_throughput(),
            argmax: envelope.argmax(),
            envelope: &envelope,
        },
    )?;
    let mut manifest = Manifest::new("inspect");
    manifest.input(&args.instance)?;
    manifest.output(&path);
    manifest.write(&args.out_dir)?;
    info(format!(
        "edge {}: {} hull breakpoints, best throughput {:.4}",
        args.edge,
        envelope.breakpoints().len(),
        envelope.argmax()
    ));
    Ok(())
}
