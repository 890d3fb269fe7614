//! Experiment driver: budget, metasurface size, repeater gain and price
//! ratio sweeps over several scenarios, with aggregate curves and the share
//! of each device technology in the solved plans.

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::activation::{compute_snr, ActivationTables};
use crate::catalog::{Catalog, CatalogConfig, CatalogError, Flavor, Technology};
use crate::channel::LinkBudgetParams;
use crate::optimizer::{plannable_tps, solve_exact, solve_greedy, PlanError, PlanInstance, PlanKind, PlanSolution};
use crate::scenario::{generate_manhattan, load_scenario_file, ManhattanParams, Scenario, ScenarioError};

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("invalid sweep config: {0}")]
    Config(String),
    #[error("scenario {label}: {source}")]
    Scenario { label: String, source: ScenarioError },
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error("solver: {0}")]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// The swept quantity and its values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "values", rename_all = "snake_case")]
pub enum SweepAxis {
    /// Budget in cost units (MBCC only).
    Budget(Vec<f64>),
    /// Metasurface cell counts; replaces the catalog sizes.
    RisSize(Vec<u32>),
    /// Repeater gains in dB; replaces the catalog gains.
    NcrGain(Vec<f64>),
    /// Price of the reference repeater over the reference RIS.
    PriceRatio(Vec<f64>),
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::Budget(_) => "budget",
            SweepAxis::RisSize(_) => "ris_size",
            SweepAxis::NcrGain(_) => "ncr_gain",
            SweepAxis::PriceRatio(_) => "price_ratio",
        }
    }

    pub fn values(&self) -> Vec<f64> {
        match self {
            SweepAxis::Budget(v) | SweepAxis::NcrGain(v) | SweepAxis::PriceRatio(v) => v.clone(),
            SweepAxis::RisSize(v) => v.iter().map(|&m| f64::from(m)).collect(),
        }
    }

    /// Whether the axis changes link budgets (and so activation tables).
    pub fn changes_physics(&self) -> bool {
        matches!(self, SweepAxis::RisSize(_) | SweepAxis::NcrGain(_))
    }

    /// Budget grid from 0 to `max` in `step` increments.
    pub fn budget_grid(max: f64, step: f64) -> SweepAxis {
        let n = (max / step).round() as usize;
        SweepAxis::Budget((0..=n).map(|i| i as f64 * step).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SweepModel {
    Fcmc { k: u32 },
    /// `budget` is required unless the axis is the budget itself.
    Mbcc {
        #[serde(default)]
        budget: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioSource {
    /// Synthetic grid from the base generator parameters with this seed.
    Seed(u64),
    File(PathBuf),
}

impl ScenarioSource {
    pub fn label(&self) -> String {
        match self {
            ScenarioSource::Seed(s) => format!("seed-{s}"),
            ScenarioSource::File(p) => p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
        }
    }
}

/// Which test points a sweep plans for.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TpSelection {
    All,
    /// Test points a plan can serve `k` times with the reduced catalog at
    /// the highest threshold of the sweep and the base device settings.
    /// Keeps full coverage attainable on every point of a cost-only sweep.
    Plannable { k: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverChoice {
    Exact,
    Greedy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub axis: SweepAxis,
    pub model: SweepModel,
    pub flavors: Vec<Flavor>,
    pub gammas_db: Vec<f64>,
    pub scenarios: Vec<ScenarioSource>,
    pub generator: ManhattanParams,
    pub catalog: CatalogConfig,
    pub link: LinkBudgetParams,
    pub tp_selection: TpSelection,
    pub solver: SolverChoice,
    pub one_device_per_site: bool,
    pub time_limit_s: Option<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            axis: SweepAxis::budget_grid(16.0, 0.5),
            model: SweepModel::Mbcc { budget: None },
            flavors: vec![Flavor::ReducedSet, Flavor::FullSet],
            gammas_db: vec![0.0, 10.0],
            scenarios: (1..=8).map(ScenarioSource::Seed).collect(),
            generator: default_generator(),
            catalog: CatalogConfig::default(),
            link: LinkBudgetParams::default(),
            tp_selection: TpSelection::All,
            solver: SolverChoice::Exact,
            one_device_per_site: true,
            time_limit_s: None,
        }
    }
}

/// Base generator for sweeps: a 4x4 grid, 420 m on a side.
pub fn default_generator() -> ManhattanParams {
    ManhattanParams { blocks: 4, ..ManhattanParams::default() }
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<Self, SweepError> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        let bad = |m: &str| Err(SweepError::Config(m.into()));
        let values = self.axis.values();
        if values.is_empty() {
            return bad("axis has no values");
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return bad("axis values must be finite and non-negative");
        }
        if self.flavors.is_empty() || self.gammas_db.is_empty() || self.scenarios.is_empty() {
            return bad("flavors, thresholds and scenarios must be non-empty");
        }
        if self.gammas_db.iter().any(|g| !g.is_finite()) {
            return bad("thresholds must be finite");
        }
        match (&self.axis, self.model) {
            (SweepAxis::Budget(_), SweepModel::Fcmc { .. }) => bad("a budget axis requires the MBCC model"),
            (SweepAxis::Budget(_), SweepModel::Mbcc { budget: Some(_) }) => bad("budget is set by the axis"),
            (_, SweepModel::Mbcc { budget: None }) if !matches!(self.axis, SweepAxis::Budget(_)) => {
                bad("MBCC needs a fixed budget when the axis is not the budget")
            }
            (_, SweepModel::Mbcc { budget: Some(b) }) if !(b >= 0.0) => bad("budget must be non-negative"),
            (_, SweepModel::Fcmc { k: 0 }) => bad("K must be at least 1"),
            (SweepAxis::RisSize(v), _) if v.contains(&0) => bad("metasurface size must be positive"),
            _ => Ok(()),
        }?;
        if let TpSelection::Plannable { k: 0 } = self.tp_selection {
            return bad("plannable selection needs k >= 1");
        }
        if let Some(t) = self.time_limit_s {
            if !(t > 0.0) {
                return bad("time limit must be positive");
            }
        }
        self.link.validate().map_err(|e| SweepError::Config(e.to_string()))?;
        Ok(())
    }

    /// Catalog settings at one axis point.
    pub fn catalog_at(&self, flavor: Flavor, value: f64) -> CatalogConfig {
        let mut cfg = CatalogConfig { flavor, ..self.catalog.clone() };
        match &self.axis {
            SweepAxis::RisSize(_) => cfg.ris_sizes = vec![value.round() as u32],
            SweepAxis::NcrGain(_) => cfg.ncr_gains = vec![value],
            SweepAxis::PriceRatio(_) => {
                let cells = self.catalog.ris_sizes.first().copied().unwrap_or(100 * 100);
                let gain = self.catalog.ncr_gains.first().copied().unwrap_or(55.0);
                cfg.cost_model = self.catalog.cost_model.with_price_ratio(value, cells, gain);
            }
            SweepAxis::Budget(_) => {}
        }
        cfg
    }

    fn plan_kind(&self, value: f64) -> PlanKind {
        match (self.model, &self.axis) {
            (SweepModel::Fcmc { k }, _) => PlanKind::Fcmc { k },
            (SweepModel::Mbcc { .. }, SweepAxis::Budget(_)) => PlanKind::Mbcc { budget: value },
            (SweepModel::Mbcc { budget }, _) => PlanKind::Mbcc { budget: budget.unwrap_or(0.0) },
        }
    }

    fn load(&self, source: &ScenarioSource) -> Result<Scenario, SweepError> {
        let label = source.label();
        match source {
            ScenarioSource::Seed(seed) => generate_manhattan(&ManhattanParams { seed: *seed, ..self.generator.clone() }),
            ScenarioSource::File(path) => load_scenario_file(path),
        }
        .map_err(|source| SweepError::Scenario { label, source })
    }
}

/// One solved point: a scenario, threshold, catalog flavor and axis value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub scenario: String,
    pub gamma_db: f64,
    pub flavor: Flavor,
    pub axis_value: f64,
    /// Plan cost for FCMC, covered test points for MBCC; empty if infeasible.
    pub objective: Option<f64>,
    pub total_cost: Option<f64>,
    /// Fraction of the planned test points covered.
    pub coverage: Option<f64>,
    /// Number of test points planned for.
    pub tps: usize,
    pub feasible: bool,
    pub optimal: bool,
    pub installed: usize,
    pub ratio_ris: f64,
    pub ratio_star: f64,
    pub ratio_ncr: f64,
    pub ratio_3sncr: f64,
}

impl SweepPoint {
    pub fn ratios(&self) -> [f64; 4] {
        [self.ratio_ris, self.ratio_star, self.ratio_ncr, self.ratio_3sncr]
    }
}

/// Mean curve and envelope across scenarios at one (threshold, flavor,
/// axis value).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepAggregate {
    pub gamma_db: f64,
    pub flavor: Flavor,
    pub axis_value: f64,
    /// Scenarios with a feasible plan; statistics are over those.
    pub feasible: usize,
    pub scenarios: usize,
    pub mean_objective: Option<f64>,
    pub min_objective: Option<f64>,
    pub max_objective: Option<f64>,
    pub mean_coverage: Option<f64>,
    pub min_coverage: Option<f64>,
    pub max_coverage: Option<f64>,
    /// Installed devices per technology over all installed devices, pooled
    /// across scenarios; RIS, STAR, NCR, 3SNCR.
    pub contribution: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axis: String,
    pub model: SweepModel,
    pub points: Vec<SweepPoint>,
    pub aggregates: Vec<SweepAggregate>,
}

pub fn run_sweep(config: &SweepConfig) -> Result<SweepResult, SweepError> {
    run_sweep_with_progress(config, |_| {})
}

/// Runs every point; scenarios are processed in parallel, output order is
/// scenario, threshold, flavor, axis value regardless of completion order.
pub fn run_sweep_with_progress(config: &SweepConfig, progress: impl Fn(&str) + Sync) -> Result<SweepResult, SweepError> {
    config.validate()?;
    let per_scenario: Vec<Result<Vec<SweepPoint>, SweepError>> = config
        .scenarios
        .par_iter()
        .map(|source| {
            let points = sweep_scenario(config, source)?;
            progress(&format!("{}: {} points", source.label(), points.len()));
            Ok(points)
        })
        .collect();
    let mut points = Vec::new();
    for r in per_scenario {
        points.extend(r?);
    }
    let aggregates = aggregate(&points);
    Ok(SweepResult { axis: config.axis.name().into(), model: config.model, points, aggregates })
}

/// BS and (site, spec) SNR tensors.
type SnrPair = (Vec<f64>, Vec<f64>);

/// SNR tensors per catalog physics; thresholds and prices do not enter.
struct SnrCache<'s> {
    scenario: &'s Scenario,
    link: &'s LinkBudgetParams,
    entries: HashMap<String, Arc<SnrPair>>,
}

impl SnrCache<'_> {
    fn tables(&mut self, cfg: &CatalogConfig, catalog: &Catalog, gamma: f64) -> ActivationTables {
        let physics = CatalogConfig { cost_model: Default::default(), ..cfg.clone() };
        let key = serde_json::to_string(&physics).expect("catalog config serializes");
        let snr = self
            .entries
            .entry(key)
            .or_insert_with(|| Arc::new(compute_snr(self.scenario, catalog, self.link)))
            .clone();
        let ids = (
            self.scenario.tps.iter().map(|t| t.id.clone()).collect(),
            self.scenario.sites.iter().map(|s| s.id.clone()).collect(),
            catalog.specs.iter().map(|s| s.id.clone()).collect(),
        );
        let dims = (self.scenario.tps.len(), self.scenario.sites.len(), catalog.len());
        ActivationTables::from_snr(snr.0.clone(), snr.1.clone(), dims, gamma, ids)
    }
}

fn pair_costs(tables: &ActivationTables, catalog: &Catalog) -> Vec<f64> {
    (0..tables.n_sites).flat_map(|_| catalog.specs.iter().map(|s| s.cost)).collect()
}

fn sweep_scenario(config: &SweepConfig, source: &ScenarioSource) -> Result<Vec<SweepPoint>, SweepError> {
    let scenario = config.load(source)?;
    let label = source.label();
    let mut cache = SnrCache { scenario: &scenario, link: &config.link, entries: HashMap::new() };

    let selection: Option<Vec<usize>> = match config.tp_selection {
        TpSelection::All => None,
        TpSelection::Plannable { k } => {
            let gamma = config.gammas_db.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let cfg = CatalogConfig { flavor: Flavor::ReducedSet, ..config.catalog.clone() };
            let catalog = cfg.build()?;
            let tables = cache.tables(&cfg, &catalog, gamma);
            Some(plannable_tps(&tables, &pair_costs(&tables, &catalog), k, config.one_device_per_site)?)
        }
    };

    let limit = config.time_limit_s.map(Duration::from_secs_f64);
    let mut points = Vec::new();
    for &gamma in &config.gammas_db {
        for &flavor in &config.flavors {
            for value in config.axis.values() {
                let cfg = config.catalog_at(flavor, value);
                let catalog = cfg.build()?;
                let mut tables = cache.tables(&cfg, &catalog, gamma);
                if let Some(sel) = &selection {
                    tables = tables.select_tps(sel);
                }
                let inst = PlanInstance::from_catalog(config.plan_kind(value), &tables, &catalog)?
                    .with_one_device_per_site(config.one_device_per_site)
                    .with_time_limit(limit);
                let outcome = match config.solver {
                    SolverChoice::Exact => solve_exact(&inst),
                    SolverChoice::Greedy => solve_greedy(&inst),
                };
                let point = match outcome {
                    Ok(sol) => solved_point(&sol, &catalog, tables.n_tps),
                    Err(PlanError::Infeasible { .. } | PlanError::NoIncumbent | PlanError::HeuristicStuck) => infeasible_point(tables.n_tps),
                    Err(e) => return Err(e.into()),
                };
                points.push(SweepPoint { scenario: label.clone(), gamma_db: gamma, flavor, axis_value: value, ..point });
            }
        }
    }
    Ok(points)
}

fn solved_point(sol: &PlanSolution, catalog: &Catalog, n_tps: usize) -> SweepPoint {
    let mut counts = [0usize; 4];
    for i in &sol.installs {
        counts[catalog.specs[i.spec].technology.index()] += 1;
    }
    let ratios = contribution(&counts);
    SweepPoint {
        scenario: String::new(),
        gamma_db: 0.0,
        flavor: catalog.flavor,
        axis_value: 0.0,
        objective: Some(sol.objective),
        total_cost: Some(sol.total_cost),
        coverage: Some(sol.coverage_fraction(n_tps)),
        tps: n_tps,
        feasible: true,
        optimal: sol.optimal,
        installed: sol.installs.len(),
        ratio_ris: ratios[0],
        ratio_star: ratios[1],
        ratio_ncr: ratios[2],
        ratio_3sncr: ratios[3],
    }
}

fn infeasible_point(n_tps: usize) -> SweepPoint {
    SweepPoint {
        scenario: String::new(),
        gamma_db: 0.0,
        flavor: Flavor::FullSet,
        axis_value: 0.0,
        objective: None,
        total_cost: None,
        coverage: None,
        tps: n_tps,
        feasible: false,
        optimal: false,
        installed: 0,
        ratio_ris: 0.0,
        ratio_star: 0.0,
        ratio_ncr: 0.0,
        ratio_3sncr: 0.0,
    }
}

/// Share of each technology among installed devices; zeros when none.
pub fn contribution(counts: &[usize; 4]) -> [f64; 4] {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return [0.0; 4];
    }
    counts.map(|c| c as f64 / total as f64)
}

/// Threshold and axis value as bit patterns, with the flavor.
type GroupKey = (u64, Flavor, u64);

/// Mean, min and max across scenarios per (threshold, flavor, axis value),
/// in first-appearance order.
pub fn aggregate(points: &[SweepPoint]) -> Vec<SweepAggregate> {
    let mut groups: Vec<(GroupKey, Vec<&SweepPoint>)> = Vec::new();
    let mut index: BTreeMap<GroupKey, usize> = BTreeMap::new();
    for p in points {
        let key = (p.gamma_db.to_bits(), p.flavor, p.axis_value.to_bits());
        let slot = *index.entry(key).or_insert_with(|| {
            groups.push((key, Vec::new()));
            groups.len() - 1
        });
        groups[slot].1.push(p);
    }
    groups
        .into_iter()
        .map(|(_, ps)| {
            let first = ps[0];
            let feasible: Vec<&&SweepPoint> = ps.iter().filter(|p| p.feasible).collect();
            let stats = |f: &dyn Fn(&SweepPoint) -> Option<f64>| {
                let vals: Vec<f64> = feasible.iter().filter_map(|p| f(p)).collect();
                if vals.is_empty() {
                    return (None, None, None);
                }
                let mean = vals.iter().sum::<f64>() / vals.len() as f64;
                let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
                let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                // Guard the envelope against summation rounding.
                (Some(mean.clamp(min, max)), Some(min), Some(max))
            };
            let (mean_objective, min_objective, max_objective) = stats(&|p| p.objective);
            let (mean_coverage, min_coverage, max_coverage) = stats(&|p| p.coverage);
            let mut counts = [0usize; 4];
            for p in &feasible {
                for (c, r) in counts.iter_mut().zip(p.ratios()) {
                    *c += (r * p.installed as f64).round() as usize;
                }
            }
            SweepAggregate {
                gamma_db: first.gamma_db,
                flavor: first.flavor,
                axis_value: first.axis_value,
                feasible: feasible.len(),
                scenarios: ps.len(),
                mean_objective,
                min_objective,
                max_objective,
                mean_coverage,
                min_coverage,
                max_coverage,
                contribution: contribution(&counts),
            }
        })
        .collect()
}

/// Per-scenario curves of one (threshold, flavor), keyed by scenario, in
/// axis order.
pub fn curves(points: &[SweepPoint], gamma_db: f64, flavor: Flavor) -> BTreeMap<String, Vec<&SweepPoint>> {
    let mut out: BTreeMap<String, Vec<&SweepPoint>> = BTreeMap::new();
    for p in points.iter().filter(|p| p.gamma_db == gamma_db && p.flavor == flavor) {
        out.entry(p.scenario.clone()).or_default().push(p);
    }
    out
}

/// Whether a curve rises to an interior peak and then falls: some interior
/// point strictly above both end points.
pub fn rises_then_declines(values: &[f64]) -> bool {
    let n = values.len();
    n >= 3 && values[1..n - 1].iter().any(|&v| v > values[0] && v > values[n - 1])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShapeReport {
    pub gamma_db: f64,
    pub flavor: Flavor,
    pub scenarios: usize,
    pub rise_then_decline: usize,
}

/// Counts, per (threshold, flavor), the scenarios whose coverage curve
/// rises then declines along the axis.
pub fn shape_report(result: &SweepResult) -> Vec<ShapeReport> {
    let mut seen: Vec<(f64, Flavor)> = Vec::new();
    for p in &result.points {
        if !seen.contains(&(p.gamma_db, p.flavor)) {
            seen.push((p.gamma_db, p.flavor));
        }
    }
    seen.into_iter()
        .map(|(gamma_db, flavor)| {
            let cs = curves(&result.points, gamma_db, flavor);
            let hits = cs
                .values()
                .filter(|c| rises_then_declines(&c.iter().map(|p| p.coverage.unwrap_or(0.0)).collect::<Vec<_>>()))
                .count();
            ShapeReport { gamma_db, flavor, scenarios: cs.len(), rise_then_decline: hits }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportFormat {
    Csv,
    Json,
}

/// Column order of the long-format table.
pub const CSV_COLUMNS: [&str; 15] = [
    "scenario",
    "gamma_db",
    "flavor",
    "axis_value",
    "objective",
    "total_cost",
    "coverage",
    "tps",
    "feasible",
    "optimal",
    "installed",
    "ratio_ris",
    "ratio_star",
    "ratio_ncr",
    "ratio_3sncr",
];

pub fn write_points_csv<W: Write>(points: &[SweepPoint], w: W) -> Result<(), SweepError> {
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    out.write_record(CSV_COLUMNS)?;
    for p in points {
        out.serialize(p)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_points_csv<R: Read>(r: R) -> Result<Vec<SweepPoint>, SweepError> {
    let mut rdr = csv::Reader::from_reader(r);
    let headers = rdr.headers()?.clone();
    if headers.iter().ne(CSV_COLUMNS) {
        return Err(SweepError::Config(format!("unexpected columns: {headers:?}")));
    }
    Ok(rdr.deserialize().collect::<Result<_, _>>()?)
}

pub fn read_result_json<R: Read>(r: R) -> Result<SweepResult, SweepError> {
    Ok(serde_json::from_reader(r)?)
}

/// Serializes the result: the long-format point table for CSV, the full
/// result with aggregates for JSON.
pub fn export_results<W: Write>(result: &SweepResult, format: ExportFormat, mut w: W) -> Result<(), SweepError> {
    match format {
        ExportFormat::Csv => write_points_csv(&result.points, w),
        ExportFormat::Json => {
            serde_json::to_writer_pretty(&mut w, result)?;
            writeln!(w)?;
            Ok(())
        }
    }
}

/// Technology order used by the ratio columns.
pub const RATIO_ORDER: [Technology; 4] = Technology::ALL;

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SweepConfig {
        SweepConfig {
            axis: SweepAxis::Budget(vec![0.0, 2.0, 4.0]),
            gammas_db: vec![0.0],
            scenarios: vec![ScenarioSource::Seed(1), ScenarioSource::Seed(2)],
            generator: ManhattanParams { blocks: 2, ..ManhattanParams::default() },
            ..SweepConfig::default()
        }
    }

    #[test]
    fn config_validation() {
        assert!(small().validate().is_ok());
        let fcmc_budget = SweepConfig { model: SweepModel::Fcmc { k: 1 }, ..small() };
        assert!(fcmc_budget.validate().is_err());
        let missing_budget = SweepConfig { axis: SweepAxis::RisSize(vec![2500]), ..small() };
        assert!(missing_budget.validate().is_err());
        let empty = SweepConfig { axis: SweepAxis::Budget(vec![]), ..small() };
        assert!(empty.validate().is_err());
        let no_scenarios = SweepConfig { scenarios: vec![], ..small() };
        assert!(no_scenarios.validate().is_err());
    }

    #[test]
    fn budget_grid_is_inclusive() {
        let SweepAxis::Budget(v) = SweepAxis::budget_grid(16.0, 0.5) else { panic!() };
        assert_eq!(v.len(), 33);
        assert_eq!(v[32], 16.0);
    }

    #[test]
    fn row_count_and_order() {
        let res = run_sweep(&small()).unwrap();
        // 2 scenarios x 3 budgets x 2 flavors x 1 threshold.
        assert_eq!(res.points.len(), 12);
        assert_eq!(res.points[0].scenario, "seed-1");
        assert_eq!(res.points[6].scenario, "seed-2");
        assert_eq!(res.points[0].flavor, Flavor::ReducedSet);
        assert_eq!(res.aggregates.len(), 6);
    }

    #[test]
    fn zero_budget_is_bs_only() {
        let cfg = SweepConfig { axis: SweepAxis::Budget(vec![0.0]), ..small() };
        let res = run_sweep(&cfg).unwrap();
        for p in &res.points {
            assert_eq!(p.installed, 0);
            assert_eq!(p.ratios(), [0.0; 4]);
        }
    }

    #[test]
    fn contribution_sums_to_one() {
        let r = contribution(&[1, 0, 2, 1]);
        assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(contribution(&[0; 4]), [0.0; 4]);
    }

    #[test]
    fn shape_detection() {
        assert!(rises_then_declines(&[0.1, 0.3, 0.2]));
        assert!(!rises_then_declines(&[0.1, 0.2, 0.3]));
        assert!(!rises_then_declines(&[0.3, 0.3, 0.3]));
        assert!(!rises_then_declines(&[0.1, 0.2]));
    }

    #[test]
    fn empty_sweep_exports_header_only() {
        let res = SweepResult { axis: "budget".into(), model: SweepModel::Mbcc { budget: None }, points: vec![], aggregates: vec![] };
        let mut buf = Vec::new();
        export_results(&res, ExportFormat::Csv, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().trim_end(), CSV_COLUMNS.join(","));
    }
}
