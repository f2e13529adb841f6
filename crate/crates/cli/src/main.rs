use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use tdvrp::forecast::{
    forecasts_from_history, forecasts_to_json, history_from_json, GridSpec, MergeConfig,
};
use tdvrp::insertion::{Norm, SchedulerConfig, WbParams};
use tdvrp::milp::{
    build_milp, check_and_repair, emit_lp, scalarize, solve_and_repair, CandidateSolution,
};
use tdvrp::pd::{forecasts_from_json, Metric};
use tdvrp::sim::{self, GenSpec, RunConfig};
use tdvrp::Router;

#[derive(Parser)]
#[command(
    name = "tdvrp",
    version,
    about = "Time-dependent pickup and delivery scheduling"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic grid city and request stream.
    Generate(GenerateArgs),
    /// Replay an instance online through a scheduler.
    Run(RunArgs),
    /// Compare finished runs.
    Report(ReportArgs),
    /// Write the relaxed MILP in LP format.
    MilpExport(MilpArgs),
    /// Solve a tiny instance exactly, or check given subtours, under the true travel times.
    MilpCheck(MilpCheckArgs),
    /// Build forecast requests from a multi-day history.
    Forecast(ForecastArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 200)]
    requests: usize,
    #[arg(long, default_value_t = 10)]
    workers: usize,
    /// Grid columns and rows.
    #[arg(long, default_value_t = 50)]
    grid: u64,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct InstanceArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    instance: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Time,
    Dist,
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Time => Metric::Time,
            MetricArg::Dist => Metric::Distance,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum NormArg {
    L1,
    L2,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    input: InstanceArgs,
    #[arg(long, value_enum, default_value = "time")]
    metric: MetricArg,
    #[arg(long, value_enum, default_value = "l1")]
    norm: NormArg,
    /// Workload balancing, optionally as `--wb=theta,mu`.
    #[arg(long, num_args = 0..=1, require_equals = true, default_missing_value = "1.5,2")]
    wb: Option<String>,
    /// Request relocation after every handled request.
    #[arg(long)]
    rr: bool,
    /// Forecast file; switches to the forecast-seeded scheduler.
    #[arg(long)]
    prophet: Option<PathBuf>,
    /// Fixed subtours to evaluate instead of scheduling.
    #[arg(long, conflicts_with = "prophet")]
    baseline: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// Run directories, each holding a `summary.json`.
    #[arg(required = true)]
    runs: Vec<PathBuf>,
    /// Position of the reference run in `runs`.
    #[arg(long, default_value_t = 0)]
    base: usize,
    /// Also write the table as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct MilpArgs {
    #[command(flatten)]
    input: InstanceArgs,
    /// `dist` adds a time-optimal alternative per arc.
    #[arg(long, value_enum, default_value = "time")]
    metric: MetricArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MilpCheckArgs {
    #[command(flatten)]
    model: MilpArgs,
    /// Candidate subtours as JSON; solved exactly when absent.
    #[arg(long)]
    solution: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    max_rounds: usize,
}

#[derive(Args)]
struct ForecastArgs {
    /// JSON list of past requests, each with a `day` field.
    #[arg(long)]
    history: PathBuf,
    #[arg(long)]
    days: usize,
    #[arg(long, default_value_t = 500.0)]
    cell_size: f64,
    #[arg(long, default_value_t = 48)]
    windows: usize,
    #[arg(long)]
    out: PathBuf,
}

fn parse_wb(text: &str) -> Result<WbParams> {
    let (theta, mu) = text.split_once(',').context("--wb expects `theta,mu`")?;
    let p = WbParams {
        theta: theta.trim().parse().context("bad theta")?,
        mu: mu.trim().parse().context("bad mu")?,
    };
    if !(p.theta > 0.0 && p.mu >= 0.0) {
        bail!("--wb needs theta > 0 and mu >= 0");
    }
    Ok(p)
}

fn router_for(loaded: &sim::Loaded) -> Arc<Router> {
    Arc::new(Router::new(Arc::new(loaded.graph.clone())))
}

fn generate(a: GenerateArgs) -> Result<()> {
    if a.grid < 2 {
        bail!("--grid must be at least 2");
    }
    let spec = GenSpec {
        seed: a.seed,
        width: a.grid,
        height: a.grid,
        requests: a.requests,
        workers: a.workers,
        ..GenSpec::default()
    };
    let (graph, instance) = sim::generate_json(&spec);
    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    sim::write_text(&a.out.join("graph.json"), &graph)?;
    sim::write_text(&a.out.join("instance.json"), &instance)?;
    println!(
        "wrote {} and {}",
        a.out.join("graph.json").display(),
        a.out.join("instance.json").display()
    );
    Ok(())
}

fn run(a: RunArgs) -> Result<()> {
    let loaded = sim::load(&a.input.graph, &a.input.instance)?;
    let router = router_for(&loaded);
    if let Some(path) = &a.baseline {
        let subtours = sim::baseline_from_json(&sim::read_text(path)?)?;
        let b = sim::evaluate_baseline(&router, &loaded.instance, &subtours)?;
        std::fs::create_dir_all(&a.out)?;
        let summary = sim::RunSummary {
            variant: "baseline".into(),
            instance: loaded.fingerprint,
            metrics: b.metrics,
        };
        sim::write_text(
            &a.out.join("metrics.csv"),
            &sim::metrics_csv("baseline", &summary.metrics),
        )?;
        let routes: Vec<_> = b.routes.iter().map(sim::RouteRecord::from_route).collect();
        sim::write_text(
            &a.out.join("routes.json"),
            &serde_json::to_string_pretty(&routes)?,
        )?;
        sim::write_text(
            &a.out.join("violations.json"),
            &serde_json::to_string_pretty(&b.violations)?,
        )?;
        sim::write_text(
            &a.out.join("summary.json"),
            &serde_json::to_string_pretty(&summary)?,
        )?;
        print!("{}", sim::report(&[summary], 0)?.to_table());
        return Ok(());
    }
    let scheduler = SchedulerConfig {
        metric: a.metric.into(),
        norm: match a.norm {
            NormArg::L1 => Norm::L1,
            NormArg::L2 => Norm::L2,
        },
        wb: a.wb.as_deref().map(parse_wb).transpose()?,
        rr: a.rr,
    };
    let config = match &a.prophet {
        Some(path) => RunConfig::prophet(scheduler, forecasts_from_json(&sim::read_text(path)?)?),
        None => RunConfig::insertion(scheduler),
    };
    let result = sim::replay(router, &loaded.instance, &config)?;
    let summary = sim::write_outputs(&a.out, &result, &loaded.fingerprint)?;
    log::info!(
        "mean latency {:.2} ms, max {:.2} ms",
        result.metrics.latency_mean_ms,
        result.metrics.latency_max_ms
    );
    print!("{}", sim::report(&[summary], 0)?.to_table());
    Ok(())
}

fn report(a: ReportArgs) -> Result<()> {
    let runs = a
        .runs
        .iter()
        .map(|d| sim::read_summary(d))
        .collect::<Result<Vec<_>, _>>()?;
    let table = sim::report(&runs, a.base)?;
    if let Some(path) = &a.csv {
        sim::write_text(path, &table.to_csv())?;
    }
    print!("{}", table.to_table());
    Ok(())
}

fn milp_model(a: &MilpArgs) -> Result<(Arc<Router>, tdvrp::milp::ScalarizedPdGraph)> {
    let loaded = sim::load(&a.input.graph, &a.input.instance)?;
    let router = router_for(&loaded);
    let sg = scalarize(
        &router,
        &loaded.instance.requests,
        &loaded.instance.workers,
        a.metric.into(),
    )?;
    Ok((router, sg))
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => Ok(sim::write_text(path, text)?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn milp_export(a: MilpArgs) -> Result<()> {
    let (_, sg) = milp_model(&a)?;
    let model = build_milp(&sg);
    log::info!(
        "{} variables, {} constraints",
        model.lp.vars.len(),
        model.lp.rows.len()
    );
    write_or_print(a.out.as_deref(), &emit_lp(&model.lp))
}

fn milp_check(a: MilpCheckArgs) -> Result<()> {
    let (router, sg) = milp_model(&a.model)?;
    let model = build_milp(&sg);
    let json = match &a.solution {
        Some(path) => {
            let candidate: CandidateSolution = serde_json::from_str(&sim::read_text(path)?)
                .with_context(|| format!("parsing {}", path.display()))?;
            serde_json::to_string_pretty(&check_and_repair(&sg, &model, &router, &candidate, 0)?)?
        }
        None => {
            serde_json::to_string_pretty(&solve_and_repair(&sg, &model, &router, a.max_rounds)?)?
        }
    };
    write_or_print(a.model.out.as_deref(), &(json + "\n"))
}

fn forecast(a: ForecastArgs) -> Result<()> {
    let history = history_from_json(&sim::read_text(&a.history)?)?;
    let spec = GridSpec {
        cell_size: a.cell_size,
        windows_per_day: a.windows,
        days: a.days,
        bounds: None,
    };
    let forecasts = forecasts_from_history(&history, &spec, &MergeConfig::for_spec(&spec))?;
    sim::write_text(&a.out, &forecasts_to_json(&forecasts))?;
    println!(
        "{} forecasts from {} past requests",
        forecasts.len(),
        history.len()
    );
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Generate(a) => generate(a),
        Command::Run(a) => run(a),
        Command::Report(a) => report(a),
        Command::MilpExport(a) => milp_export(a),
        Command::MilpCheck(a) => milp_check(a),
        Command::Forecast(a) => forecast(a),
    }
}
