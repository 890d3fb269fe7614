//! `sreplan`: generate scenarios, plan deployments, run sweeps, inspect files.
//!
//! Exit status: 0 ok, 1 usage or invalid input, 2 infeasible full coverage,
//! 3 I/O error. Diagnostics go to stderr; data goes to files or stdout.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::Value;

use sreplan::activation::{compute_activation, ActivationTables, TableError};
use sreplan::catalog::{CatalogConfig, CatalogError, Flavor};
use sreplan::channel::LinkBudgetParams;
use sreplan::optimizer::{solve_exact, solve_greedy, PlanError, PlanInstance, PlanKind};
use sreplan::scenario::{generate_manhattan, load_scenario_file, ManhattanParams, ScenarioError};
use sreplan::sweeps::{export_results, run_sweep_with_progress, shape_report, ExportFormat, SweepConfig, SweepError};
use sreplan::topology::{export_topology, feature_counts};

#[derive(Debug, Parser)]
#[command(name = "sreplan", version, about = "Smart radio environment planning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic Manhattan-grid scenario.
    Generate(GenerateArgs),
    /// Compute activation tables for a scenario and solve one planning problem.
    Plan(PlanArgs),
    /// Run a parameter sweep over several scenarios.
    Sweep(SweepArgs),
    /// Summarize a scenario, activation table or topology file.
    Inspect(InspectArgs),
}

#[derive(Debug, Args)]
struct GenerateArgs {
    /// Blocks per side.
    #[arg(long)]
    blocks: Option<usize>,
    #[arg(long)]
    block_size: Option<f64>,
    #[arg(long)]
    street_width: Option<f64>,
    /// Building height, m.
    #[arg(long)]
    height: Option<f64>,
    #[arg(long)]
    tp_spacing: Option<f64>,
    #[arg(long)]
    site_spacing: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Model {
    Fcmc,
    Mbcc,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Solver {
    Exact,
    Greedy,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FlavorArg {
    Reduced,
    Full,
}

#[derive(Debug, Args)]
struct PlanArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Catalog config file; built-in defaults when absent.
    #[arg(long)]
    catalog: Option<PathBuf>,
    /// Overrides the catalog flavor.
    #[arg(long, value_enum)]
    flavor: Option<FlavorArg>,
    /// Link budget parameter file; built-in defaults when absent.
    #[arg(long)]
    link: Option<PathBuf>,
    /// SNR threshold, dB.
    #[arg(long, allow_hyphen_values = true)]
    gamma: f64,
    #[arg(long, value_enum)]
    model: Model,
    /// Coverage redundancy for FCMC.
    #[arg(long, default_value_t = 1)]
    k: u32,
    /// Budget for MBCC, cost units.
    #[arg(long)]
    budget: Option<f64>,
    #[arg(long, value_enum, default_value_t = Solver::Exact)]
    solver: Solver,
    /// Seconds before the exact solver returns its best plan so far.
    #[arg(long)]
    time_limit: Option<f64>,
    /// Let one site host several devices.
    #[arg(long)]
    allow_colocation: bool,
    /// Topology output; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the activation tables (binary).
    #[arg(long)]
    tables_out: Option<PathBuf>,
    /// Also write the activation tables as CSV.
    #[arg(long)]
    tables_csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Sweep config file; the default budget sweep when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Results file: `.json` writes the full result, anything else CSV.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct InspectArgs {
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long)]
    tables: Option<PathBuf>,
    #[arg(long)]
    solution: Option<PathBuf>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Infeasible(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Infeasible(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Infeasible(m) | CliError::Io(m) => f.write_str(m),
        }
    }
}

fn io_err(path: &Path, e: io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::Io(_) => CliError::Io(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<CatalogError> for CliError {
    fn from(e: CatalogError) -> Self {
        match e {
            CatalogError::Io(_) => CliError::Io(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<TableError> for CliError {
    fn from(e: TableError) -> Self {
        match e {
            TableError::Io(_) => CliError::Io(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<SweepError> for CliError {
    fn from(e: SweepError) -> Self {
        match &e {
            SweepError::Io(_) | SweepError::Scenario { source: ScenarioError::Io(_), .. } => CliError::Io(e.to_string()),
            SweepError::Csv(c) if c.is_io_error() => CliError::Io(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<PlanError> for CliError {
    fn from(e: PlanError) -> Self {
        match e {
            PlanError::Infeasible { ref uncoverable } => {
                CliError::Infeasible(format!("{e}\nuncoverable test points: {}", uncoverable.join(" ")))
            }
            PlanError::NoIncumbent | PlanError::HeuristicStuck => CliError::Infeasible(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

/// Writes to a file, or stdout when no path is given.
fn write_output(path: Option<&Path>, body: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<(), CliError> {
    match path {
        Some(p) => {
            let file = File::create(p).map_err(|e| io_err(p, e))?;
            let mut w = BufWriter::new(file);
            body(&mut w).and_then(|_| w.flush()).map_err(|e| io_err(p, e))
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            body(&mut lock).and_then(|_| lock.flush()).map_err(|e| CliError::Io(format!("stdout: {e}")))
        }
    }
}

fn read_json(path: &Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn generate(args: GenerateArgs) -> Result<(), CliError> {
    let d = ManhattanParams::default();
    let params = ManhattanParams {
        blocks: args.blocks.unwrap_or(d.blocks),
        block_size: args.block_size.unwrap_or(d.block_size),
        street_width: args.street_width.unwrap_or(d.street_width),
        height: args.height.unwrap_or(d.height),
        tp_spacing: args.tp_spacing.unwrap_or(d.tp_spacing),
        site_spacing: args.site_spacing.unwrap_or(d.site_spacing),
        seed: args.seed.unwrap_or(d.seed),
        ..d
    };
    let scenario = generate_manhattan(&params)?;
    let json = scenario.to_json();
    write_output(args.out.as_deref(), |w| writeln!(w, "{json}"))?;
    eprintln!(
        "generated {} buildings, {} sites, {} test points",
        scenario.buildings.len(),
        scenario.sites.len(),
        scenario.tps.len()
    );
    Ok(())
}

fn plan(args: PlanArgs) -> Result<(), CliError> {
    let scenario = load_scenario_file(&args.scenario)?;
    let mut catalog_cfg = match &args.catalog {
        Some(p) => CatalogConfig::from_file(p)?,
        None => CatalogConfig::default(),
    };
    if let Some(f) = args.flavor {
        catalog_cfg.flavor = match f {
            FlavorArg::Reduced => Flavor::ReducedSet,
            FlavorArg::Full => Flavor::FullSet,
        };
    }
    let catalog = catalog_cfg.build()?;
    let link: LinkBudgetParams = match &args.link {
        Some(p) => serde_json::from_value(read_json(p)?).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?,
        None => LinkBudgetParams::default(),
    };
    link.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    if !args.gamma.is_finite() {
        return Err(CliError::Usage("--gamma must be finite".into()));
    }
    let kind = match (args.model, args.budget) {
        (Model::Fcmc, None) => PlanKind::Fcmc { k: args.k },
        (Model::Fcmc, Some(_)) => return Err(CliError::Usage("--budget applies to --model mbcc only".into())),
        (Model::Mbcc, Some(budget)) => PlanKind::Mbcc { budget },
        (Model::Mbcc, None) => return Err(CliError::Usage("--model mbcc needs --budget".into())),
    };
    let limit = match args.time_limit {
        Some(s) if !(s > 0.0 && s.is_finite()) => return Err(CliError::Usage("--time-limit must be positive".into())),
        s => s.map(Duration::from_secs_f64),
    };

    let tables = compute_activation(&scenario, &catalog, &link, args.gamma);
    if let Some(p) = &args.tables_out {
        write_output(Some(p), |w| tables.write_binary(w))?;
    }
    if let Some(p) = &args.tables_csv {
        let file = File::create(p).map_err(|e| io_err(p, e))?;
        tables.write_csv(BufWriter::new(file)).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
    }

    let inst = PlanInstance::from_catalog(kind, &tables, &catalog)?
        .with_one_device_per_site(!args.allow_colocation)
        .with_time_limit(limit);
    let solution = match args.solver {
        Solver::Exact => solve_exact(&inst)?,
        Solver::Greedy => solve_greedy(&inst)?,
    };
    inst.check(&solution).map_err(|e| CliError::Usage(format!("internal check failed: {e}")))?;
    let doc = export_topology(&solution, &scenario, &tables, &catalog).map_err(|e| CliError::Usage(e.to_string()))?;
    let text = serde_json::to_string_pretty(&doc).expect("topology serializes");
    write_output(args.out.as_deref(), |w| writeln!(w, "{text}"))?;
    eprintln!(
        "cost={:.3} covered={:.1}% installs={} optimal={}",
        solution.total_cost,
        100.0 * solution.coverage_fraction(tables.n_tps),
        solution.installs.len(),
        solution.optimal
    );
    Ok(())
}

fn sweep(args: SweepArgs) -> Result<(), CliError> {
    let config = match &args.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| io_err(p, e))?;
            SweepConfig::from_json(&text)?
        }
        None => SweepConfig::default(),
    };
    let result = run_sweep_with_progress(&config, |msg| eprintln!("{msg}"))?;
    let format = match args.out.extension().and_then(|e| e.to_str()) {
        Some("json") => ExportFormat::Json,
        _ => ExportFormat::Csv,
    };
    let file = File::create(&args.out).map_err(|e| io_err(&args.out, e))?;
    export_results(&result, format, BufWriter::new(file))?;
    for agg in &result.aggregates {
        eprintln!(
            "gamma={} {} {}={} feasible={}/{} mean_objective={}",
            agg.gamma_db,
            agg.flavor.label(),
            result.axis,
            agg.axis_value,
            agg.feasible,
            agg.scenarios,
            agg.mean_objective.map_or("-".into(), |v| format!("{v:.3}"))
        );
    }
    if result.axis == "ris_size" {
        for r in shape_report(&result) {
            eprintln!(
                "gamma={} {}: coverage rises then declines on {}/{} scenarios",
                r.gamma_db,
                r.flavor.label(),
                r.rise_then_decline,
                r.scenarios
            );
        }
    }
    Ok(())
}

fn inspect(args: InspectArgs) -> Result<(), CliError> {
    let mut out = io::stdout().lock();
    let w = |out: &mut io::StdoutLock<'_>, s: String| writeln!(out, "{s}").map_err(|e| CliError::Io(format!("stdout: {e}")));
    if let Some(p) = args.scenario {
        let s = load_scenario_file(&p)?;
        let walls = s.sites.iter().filter(|c| c.mount.kind() == sreplan::scenario::MountKind::Wall).count();
        w(&mut out, format!("area {} x {} m", s.area.w, s.area.h))?;
        w(&mut out, format!("buildings {}", s.buildings.len()))?;
        w(&mut out, format!("sites {} (wall {walls}, roof {})", s.sites.len(), s.sites.len() - walls))?;
        w(&mut out, format!("test points {}", s.tps.len()))?;
        let b = s.bs.position;
        w(&mut out, format!("bs ({}, {}, {}) array {}x{}", b.x, b.y, b.z, s.bs.array[0], s.bs.array[1]))?;
    } else if let Some(p) = args.tables {
        let file = File::open(&p).map_err(|e| io_err(&p, e))?;
        let t = ActivationTables::read_binary(BufReader::new(file))?;
        let st = t.coverage_stats();
        w(&mut out, format!("dims {} tps x {} sites x {} specs", t.n_tps, t.n_sites, t.n_specs))?;
        w(&mut out, format!("gamma {} dB", t.gamma_threshold))?;
        w(&mut out, format!("bs covered {}", st.bs_covered))?;
        w(&mut out, format!("coverable {} ({:.1}%)", st.coverable, 100.0 * st.fill_ratio))?;
        w(&mut out, format!("uncoverable {}", st.uncoverable_tps.join(" ")))?;
    } else if let Some(p) = args.solution {
        let doc = read_json(&p)?;
        if doc["type"] != "FeatureCollection" {
            return Err(CliError::Usage(format!("{}: not a topology document", p.display())));
        }
        let [buildings, bs, devices, tps, links] = feature_counts(&doc);
        let props = &doc["properties"];
        let num = |v: &serde_json::Value| v.as_f64().map_or("-".into(), |x| format!("{x:.3}"));
        let model = props["model"].as_str().unwrap_or("?");
        w(&mut out, format!("model {model} objective {} cost {} optimal {}", num(&props["objective"]), num(&props["total_cost"]), props["optimal"]))?;
        w(&mut out, format!("features: {buildings} buildings, {bs} bs, {devices} devices, {tps} test points, {links} links"))?;
        w(&mut out, format!("covered {} of {}", props["covered"], props["tps"]))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Plan(a) => plan(a),
        Command::Sweep(a) => sweep(a),
        Command::Inspect(a) => inspect(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
