//! Coverage planning on top of activation tables.
//!
//! * FCMC: cheapest set of installs such that every test point is served by
//!   at least `K` distinct devices, the base station counting as one.
//! * MBCC: most test points served by the base station or an installed
//!   device, with total cost within a budget.
//!
//! Both are solved exactly by depth-first branch-and-bound, approximately by
//! greedy heuristics, and by exhaustive enumeration for small instances.

use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use crate::activation::ActivationTables;
use crate::catalog::Catalog;

const COST_EPS: f64 = 1e-9;
/// Default variable limit of the exhaustive solver.
pub const BRUTE_FORCE_LIMIT: usize = 22;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error("full coverage is infeasible; {} test point(s) cannot reach the demand", uncoverable.len())]
    Infeasible { uncoverable: Vec<String> },
    #[error("solver expects a {expected} instance")]
    WrongKind { expected: &'static str },
    #[error("instance has {vars} variables, above the limit of {limit}")]
    TooLarge { vars: usize, limit: usize },
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("time limit reached before any feasible plan was found")]
    NoIncumbent,
    /// The greedy heuristic ran out of options under the one-device-per-site
    /// rule; the exact solver may still find a plan.
    #[error("greedy heuristic found no feasible plan; try the exact solver")]
    HeuristicStuck,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum PlanKind {
    Fcmc { k: u32 },
    Mbcc { budget: f64 },
}

/// A planning problem over fixed activation tables.
#[derive(Debug, Clone)]
pub struct PlanInstance<'a> {
    pub kind: PlanKind,
    pub tables: &'a ActivationTables,
    /// Cost per `(site, spec)` pair, indexed `c * n_specs + d`.
    pub costs: Vec<f64>,
    /// At most one device per candidate site.
    pub one_device_per_site: bool,
    pub time_limit: Option<Duration>,
}

impl<'a> PlanInstance<'a> {
    pub fn new(kind: PlanKind, tables: &'a ActivationTables, costs: Vec<f64>) -> Result<Self, PlanError> {
        let inst = Self { kind, tables, costs, one_device_per_site: true, time_limit: None };
        inst.validate()?;
        Ok(inst)
    }

    /// Prices every pair with the cost of its catalog spec.
    pub fn from_catalog(kind: PlanKind, tables: &'a ActivationTables, catalog: &Catalog) -> Result<Self, PlanError> {
        if catalog.len() != tables.n_specs {
            return Err(PlanError::InvalidInstance("catalog and tables disagree on the spec count".into()));
        }
        let costs = (0..tables.n_sites).flat_map(|_| catalog.specs.iter().map(|s| s.cost)).collect();
        Self::new(kind, tables, costs)
    }

    pub fn with_one_device_per_site(mut self, on: bool) -> Self {
        self.one_device_per_site = on;
        self
    }

    pub fn with_time_limit(mut self, limit: Option<Duration>) -> Self {
        self.time_limit = limit;
        self
    }

    fn validate(&self) -> Result<(), PlanError> {
        if self.costs.len() != self.tables.n_pairs() {
            return Err(PlanError::InvalidInstance(format!(
                "{} costs for {} (site, spec) pairs",
                self.costs.len(),
                self.tables.n_pairs()
            )));
        }
        if self.costs.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
            return Err(PlanError::InvalidInstance("costs must be finite and strictly positive".into()));
        }
        match self.kind {
            PlanKind::Fcmc { k: 0 } => Err(PlanError::InvalidInstance("K must be at least 1".into())),
            PlanKind::Mbcc { budget } if !(budget >= 0.0) => {
                Err(PlanError::InvalidInstance("budget must be non-negative".into()))
            }
            _ => Ok(()),
        }
    }

    fn site_of(&self, pair: usize) -> usize {
        pair / self.tables.n_specs
    }

    /// Number of installed devices serving each test point, BS included.
    pub fn service_counts(&self, installs: &[Install]) -> Vec<u32> {
        let t = self.tables;
        (0..t.n_tps)
            .map(|tp| u32::from(t.delta_bs[tp]) + installs.iter().filter(|i| t.get(tp, i.site, i.spec)).count() as u32)
            .collect()
    }

    /// Recomputes cost and coverage of an install set.
    pub fn evaluate(&self, installs: Vec<Install>, optimal: bool, bound_gap: f64) -> PlanSolution {
        let mut installs = installs;
        installs.sort();
        let counts = self.service_counts(&installs);
        let need = match self.kind {
            PlanKind::Fcmc { k } => k,
            PlanKind::Mbcc { .. } => 1,
        };
        let covered: Vec<usize> = (0..counts.len()).filter(|&t| counts[t] >= need).collect();
        let total_cost = installs.iter().map(|i| self.costs[i.pair(self.tables.n_specs)]).sum::<f64>() + 0.0;
        let objective = match self.kind {
            PlanKind::Fcmc { .. } => total_cost,
            PlanKind::Mbcc { .. } => covered.len() as f64,
        };
        PlanSolution { kind: self.kind, installs, total_cost, covered, objective, optimal, bound_gap, nodes: 0 }
    }

    /// Re-checks a solution against the tables alone.
    pub fn check(&self, sol: &PlanSolution) -> Result<(), String> {
        let n_d = self.tables.n_specs;
        let mut seen = std::collections::HashSet::new();
        for i in &sol.installs {
            if i.site >= self.tables.n_sites || i.spec >= n_d {
                return Err(format!("install {i:?} out of range"));
            }
            if !seen.insert(if self.one_device_per_site { (i.site, 0) } else { (i.site, i.spec + 1) }) {
                return Err(format!("site {} used twice", i.site));
            }
        }
        let cost: f64 = sol.installs.iter().map(|i| self.costs[i.pair(n_d)]).sum();
        if (cost - sol.total_cost).abs() > 1e-6 {
            return Err(format!("reported cost {} but installs cost {cost}", sol.total_cost));
        }
        let counts = self.service_counts(&sol.installs);
        match self.kind {
            PlanKind::Fcmc { k } => {
                if let Some(t) = (0..counts.len()).find(|&t| counts[t] < k) {
                    return Err(format!("test point {} served {} < {k} times", self.tables.tp_ids[t], counts[t]));
                }
            }
            PlanKind::Mbcc { budget } => {
                if cost > budget + 1e-9 {
                    return Err(format!("cost {cost} exceeds budget {budget}"));
                }
                if let Some(&t) = sol.covered.iter().find(|&&t| counts[t] == 0) {
                    return Err(format!("test point {} claimed covered without a witness", self.tables.tp_ids[t]));
                }
            }
        }
        Ok(())
    }

    /// Test points whose demand cannot be met even installing everything.
    pub fn uncoverable(&self) -> Vec<String> {
        let k = match self.kind {
            PlanKind::Fcmc { k } => k,
            PlanKind::Mbcc { .. } => 1,
        };
        let t = self.tables;
        (0..t.n_tps)
            .filter(|&tp| {
                let demand = k.saturating_sub(u32::from(t.delta_bs[tp]));
                demand > 0 && self.capacity(tp) < demand as usize
            })
            .map(|tp| t.tp_ids[tp].clone())
            .collect()
    }

    fn capacity(&self, tp: usize) -> usize {
        let mut pairs: Vec<(usize, usize)> = self.tables.active_pairs(tp).collect();
        if self.one_device_per_site {
            pairs.dedup_by_key(|p| p.0);
        }
        pairs.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Install {
    pub site: usize,
    pub spec: usize,
}

impl Install {
    pub fn pair(&self, n_specs: usize) -> usize {
        self.site * n_specs + self.spec
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanSolution {
    pub kind: PlanKind,
    /// Installed `(site, spec)` pairs, sorted.
    pub installs: Vec<Install>,
    pub total_cost: f64,
    /// Test points meeting the demand (FCMC) or served at all (MBCC).
    pub covered: Vec<usize>,
    /// Cost for FCMC, covered count for MBCC.
    pub objective: f64,
    pub optimal: bool,
    /// Relative gap between incumbent and bound; 0 when proven optimal.
    pub bound_gap: f64,
    /// Search nodes explored.
    pub nodes: u64,
}

impl PlanSolution {
    pub fn coverage_fraction(&self, n_tps: usize) -> f64 {
        if n_tps == 0 {
            1.0
        } else {
            self.covered.len() as f64 / n_tps as f64
        }
    }
}

// ---------------------------------------------------------------------------
// Bitsets

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Bits(Vec<u64>);

impl Bits {
    fn new(n: usize) -> Self {
        Bits(vec![0; n.div_ceil(64)])
    }
    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }
    fn is_subset(&self, other: &Bits) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a & !b == 0)
    }
}

// ---------------------------------------------------------------------------
// Reduced model shared by the branch-and-bound solvers

#[derive(Debug, Clone)]
struct Var {
    pair: usize,
    site: usize,
    cost: f64,
    /// Elements served, as indices into the model's element list.
    cover: Vec<usize>,
}

#[derive(Debug, Clone)]
struct Model {
    vars: Vec<Var>,
    /// Weight (number of collapsed test points) per element.
    weight: Vec<u32>,
    /// Residual demand per element.
    demand: Vec<u32>,
    /// Variables serving each element.
    by_elem: Vec<Vec<usize>>,
    n_sites: usize,
}

impl Model {
    fn n_elems(&self) -> usize {
        self.weight.len()
    }

    fn rebuild_index(&mut self) {
        let mut by_elem = vec![Vec::new(); self.n_elems()];
        for (v, var) in self.vars.iter().enumerate() {
            for &e in &var.cover {
                by_elem[e].push(v);
            }
        }
        self.by_elem = by_elem;
    }
}

/// Builds the reduced model: test points with positive residual demand,
/// pairs that serve at least one of them, with identical test points merged
/// and dominated pairs dropped.
fn build_model(inst: &PlanInstance<'_>, demand_of: impl Fn(usize) -> u32, max_cost: f64, single_coverage: bool) -> Model {
    let t = inst.tables;
    let n_pairs = t.n_pairs();
    // Signature of a test point: the affordable pairs serving it.
    let mut sigs: Vec<(Vec<usize>, u32, usize)> = Vec::new();
    for tp in 0..t.n_tps {
        let demand = demand_of(tp);
        if demand == 0 {
            continue;
        }
        let pairs: Vec<usize> = t
            .active_pairs(tp)
            .map(|(c, d)| c * t.n_specs + d)
            .filter(|&p| inst.costs[p] <= max_cost + COST_EPS)
            .collect();
        if pairs.is_empty() {
            continue;
        }
        sigs.push((pairs, demand, tp));
    }
    sigs.sort();
    let mut weight = Vec::new();
    let mut demand = Vec::new();
    let mut elem_pairs: Vec<Vec<usize>> = Vec::new();
    for (pairs, d, _) in sigs {
        if elem_pairs.last() == Some(&pairs) && demand.last() == Some(&d) {
            *weight.last_mut().unwrap() += 1;
        } else {
            elem_pairs.push(pairs);
            weight.push(1);
            demand.push(d);
        }
    }
    let mut cover_of_pair: Vec<Vec<usize>> = vec![Vec::new(); n_pairs];
    for (e, pairs) in elem_pairs.iter().enumerate() {
        for &p in pairs {
            cover_of_pair[p].push(e);
        }
    }
    let vars: Vec<Var> = cover_of_pair
        .into_iter()
        .enumerate()
        .filter(|(_, cover)| !cover.is_empty())
        .map(|(p, cover)| Var { pair: p, site: inst.site_of(p), cost: inst.costs[p], cover })
        .collect();
    let mut model = Model { vars, weight, demand, by_elem: Vec::new(), n_sites: t.n_sites };
    drop_dominated(&mut model, inst.one_device_per_site, single_coverage);
    model.rebuild_index();
    model
}

/// Removes pair `a` when some pair `b` serves a superset at no higher cost
/// and swapping `a` for `b` can never break feasibility.
fn drop_dominated(model: &mut Model, one_per_site: bool, single_coverage: bool) {
    let n = model.n_elems();
    let sets: Vec<Bits> = model
        .vars
        .iter()
        .map(|v| {
            let mut b = Bits::new(n);
            v.cover.iter().for_each(|&e| b.set(e));
            b
        })
        .collect();
    let vars = &model.vars;
    let keep: Vec<bool> = (0..vars.len())
        .map(|a| {
            !(0..vars.len()).any(|b| {
                if a == b {
                    return false;
                }
                let comparable = (one_per_site && vars[a].site == vars[b].site) || (single_coverage && !one_per_site);
                if !comparable || vars[b].cost > vars[a].cost + COST_EPS || !sets[a].is_subset(&sets[b]) {
                    return false;
                }
                let tie = (vars[b].cost - vars[a].cost).abs() <= COST_EPS && sets[b].is_subset(&sets[a]);
                !tie || b < a
            })
        })
        .collect();
    let mut i = 0;
    model.vars.retain(|_| {
        i += 1;
        keep[i - 1]
    });
}

// ---------------------------------------------------------------------------
// FCMC

/// Provably optimal K-redundant minimum-cost cover.
pub fn solve_fcmc_exact(inst: &PlanInstance<'_>) -> Result<PlanSolution, PlanError> {
    let PlanKind::Fcmc { k } = inst.kind else {
        return Err(PlanError::WrongKind { expected: "FCMC" });
    };
    let uncoverable = inst.uncoverable();
    if !uncoverable.is_empty() {
        return Err(PlanError::Infeasible { uncoverable });
    }
    let t = inst.tables;
    let demand_of = |tp: usize| k.saturating_sub(u32::from(t.delta_bs[tp]));
    let mut model = build_model(inst, demand_of, f64::INFINITY, k == 1);
    drop_dominated_elements(&mut model);

    let mut search = CoverSearch::new(&model, inst.one_device_per_site, inst.time_limit);
    if let Some(seed) = greedy_cover(&model, inst.one_device_per_site) {
        search.best_cost = seed.iter().map(|&v| model.vars[v].cost).sum();
        search.best = Some(seed);
    }
    let root_lb = search.lower_bound();
    search.run();

    let Some(best) = search.best.clone() else {
        if search.timed_out {
            return Err(PlanError::NoIncumbent);
        }
        return Err(PlanError::Infeasible { uncoverable: unmet_tps(inst, k) });
    };
    let installs = best.iter().map(|&v| pair_install(inst, model.vars[v].pair)).collect();
    let optimal = !search.timed_out;
    let gap = if optimal || search.best_cost <= 0.0 { 0.0 } else { ((search.best_cost - root_lb) / search.best_cost).max(0.0) };
    let mut sol = inst.evaluate(installs, optimal, gap);
    sol.nodes = search.nodes;
    Ok(sol)
}

/// Elements whose serving pairs include those of another element with at
/// least the same demand are satisfied automatically.
fn drop_dominated_elements(model: &mut Model) {
    let n = model.n_elems();
    let sets: Vec<Bits> = model
        .by_elem
        .iter()
        .map(|vs| {
            let mut b = Bits::new(model.vars.len());
            vs.iter().for_each(|&v| b.set(v));
            b
        })
        .collect();
    let keep: Vec<bool> = (0..n)
        .map(|e2| {
            !(0..n).any(|e1| {
                e1 != e2
                    && model.demand[e1] >= model.demand[e2]
                    && sets[e1].is_subset(&sets[e2])
                    && (e1 < e2 || !sets[e2].is_subset(&sets[e1]) || model.demand[e1] > model.demand[e2])
            })
        })
        .collect();
    if keep.iter().all(|&k| k) {
        return;
    }
    let mut remap = vec![usize::MAX; n];
    let mut next = 0;
    for e in 0..n {
        if keep[e] {
            remap[e] = next;
            next += 1;
        }
    }
    let filter = |v: Vec<u32>| v.into_iter().enumerate().filter(|(e, _)| keep[*e]).map(|(_, x)| x).collect::<Vec<_>>();
    model.weight = filter(std::mem::take(&mut model.weight));
    model.demand = filter(std::mem::take(&mut model.demand));
    for var in &mut model.vars {
        var.cover = var.cover.iter().filter(|&&e| keep[e]).map(|&e| remap[e]).collect();
    }
    model.vars.retain(|v| !v.cover.is_empty());
    model.rebuild_index();
}

fn pair_install(inst: &PlanInstance<'_>, pair: usize) -> Install {
    Install { site: pair / inst.tables.n_specs, spec: pair % inst.tables.n_specs }
}

fn unmet_tps(inst: &PlanInstance<'_>, k: u32) -> Vec<String> {
    let t = inst.tables;
    (0..t.n_tps)
        .filter(|&tp| u32::from(t.delta_bs[tp]) < k)
        .map(|tp| t.tp_ids[tp].clone())
        .collect()
}

/// Greedy cover on the reduced model: cheapest cost per unit of residual
/// demand met. `None` when it gets stuck.
fn greedy_cover(model: &Model, one_per_site: bool) -> Option<Vec<usize>> {
    let mut residual = model.demand.clone();
    let mut used = vec![false; model.vars.len()];
    let mut site_used = vec![false; model.n_sites];
    let mut chosen = Vec::new();
    while residual.iter().any(|&r| r > 0) {
        let mut best: Option<(f64, usize)> = None;
        for (v, var) in model.vars.iter().enumerate() {
            if used[v] || (one_per_site && site_used[var.site]) {
                continue;
            }
            let gain: u32 = var.cover.iter().filter(|&&e| residual[e] > 0).map(|&e| model.weight[e]).sum();
            if gain == 0 {
                continue;
            }
            let ratio = var.cost / f64::from(gain);
            if best.is_none_or(|(r, _)| ratio < r - COST_EPS) {
                best = Some((ratio, v));
            }
        }
        let (_, v) = best?;
        used[v] = true;
        site_used[model.vars[v].site] = true;
        for &e in &model.vars[v].cover {
            residual[e] = residual[e].saturating_sub(1);
        }
        chosen.push(v);
    }
    prune_redundant(model, &mut chosen);
    Some(chosen)
}

/// Drops installs, most expensive first, while demand stays met.
fn prune_redundant(model: &Model, chosen: &mut Vec<usize>) {
    let mut count = vec![0u32; model.n_elems()];
    for &v in chosen.iter() {
        for &e in &model.vars[v].cover {
            count[e] += 1;
        }
    }
    let mut order = chosen.clone();
    order.sort_by(|&a, &b| model.vars[b].cost.total_cmp(&model.vars[a].cost).then(b.cmp(&a)));
    for v in order {
        if model.vars[v].cover.iter().all(|&e| count[e] > model.demand[e]) {
            for &e in &model.vars[v].cover {
                count[e] -= 1;
            }
            chosen.retain(|&x| x != v);
        }
    }
}

struct CoverSearch<'m> {
    model: &'m Model,
    one_per_site: bool,
    residual: Vec<u32>,
    banned: Vec<bool>,
    chosen: Vec<usize>,
    in_use: Vec<bool>,
    site_used: Vec<bool>,
    cost: f64,
    best: Option<Vec<usize>>,
    best_cost: f64,
    nodes: u64,
    deadline: Option<Instant>,
    timed_out: bool,
}

impl<'m> CoverSearch<'m> {
    fn new(model: &'m Model, one_per_site: bool, limit: Option<Duration>) -> Self {
        Self {
            model,
            one_per_site,
            residual: model.demand.clone(),
            banned: vec![false; model.vars.len()],
            chosen: Vec::new(),
            in_use: vec![false; model.vars.len()],
            site_used: vec![false; model.n_sites],
            cost: 0.0,
            best: None,
            best_cost: f64::INFINITY,
            nodes: 0,
            deadline: limit.map(|l| Instant::now() + l),
            timed_out: false,
        }
    }

    fn available(&self, v: usize) -> bool {
        !self.banned[v] && !self.in_use[v] && !(self.one_per_site && self.site_used[self.model.vars[v].site])
    }

    /// Lower bound on the cost still needed. Each pair's cost is spread
    /// evenly over the residual demand units it can serve; every element
    /// pays for its `r` cheapest shares. Also at least the `r` cheapest
    /// serving pairs of the most expensive element.
    fn lower_bound(&self) -> f64 {
        let m = self.model;
        let share: Vec<f64> = m
            .vars
            .iter()
            .enumerate()
            .map(|(v, var)| {
                if !self.available(v) {
                    return f64::INFINITY;
                }
                let units = var.cover.iter().filter(|&&e| self.residual[e] > 0).map(|&e| m.weight[e]).sum::<u32>();
                if units == 0 {
                    f64::INFINITY
                } else {
                    var.cost / f64::from(units)
                }
            })
            .collect();
        let mut spread = 0.0;
        let mut single: f64 = 0.0;
        let mut shares = Vec::new();
        let mut costs = Vec::new();
        for e in 0..m.n_elems() {
            let r = self.residual[e] as usize;
            if r == 0 {
                continue;
            }
            shares.clear();
            costs.clear();
            for &v in &m.by_elem[e] {
                if share[v].is_finite() {
                    shares.push(share[v]);
                    costs.push(m.vars[v].cost);
                }
            }
            if shares.len() < r {
                return f64::INFINITY;
            }
            if r == 1 {
                spread += f64::from(m.weight[e]) * shares.iter().copied().fold(f64::INFINITY, f64::min);
                single = single.max(costs.iter().copied().fold(f64::INFINITY, f64::min));
            } else {
                shares.sort_by(f64::total_cmp);
                costs.sort_by(f64::total_cmp);
                spread += f64::from(m.weight[e]) * shares[..r].iter().sum::<f64>();
                single = single.max(costs[..r].iter().sum());
            }
        }
        spread.max(single)
    }

    fn run(&mut self) {
        self.nodes += 1;
        if self.nodes.is_multiple_of(512) {
            if let Some(d) = self.deadline {
                if Instant::now() >= d {
                    self.timed_out = true;
                }
            }
        }
        if self.timed_out {
            return;
        }
        let m = self.model;
        // Branch on the unmet element with the fewest options.
        let mut pick: Option<(usize, usize)> = None;
        for e in 0..m.n_elems() {
            if self.residual[e] == 0 {
                continue;
            }
            let options = m.by_elem[e].iter().filter(|&&v| self.available(v)).count();
            if options < self.residual[e] as usize {
                return;
            }
            if pick.is_none_or(|(_, o)| options < o) {
                pick = Some((e, options));
            }
        }
        let Some((elem, _)) = pick else {
            if self.cost < self.best_cost - COST_EPS {
                self.best_cost = self.cost;
                self.best = Some(self.chosen.clone());
            }
            return;
        };
        if self.cost + self.lower_bound() >= self.best_cost - COST_EPS {
            return;
        }

        let mut options: Vec<(f64, usize)> = m.by_elem[elem]
            .iter()
            .filter(|&&v| self.available(v))
            .map(|&v| {
                let units: u32 = m.vars[v].cover.iter().filter(|&&e| self.residual[e] > 0).map(|&e| m.weight[e]).sum();
                (m.vars[v].cost / f64::from(units.max(1)), v)
            })
            .collect();
        options.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

        let mut banned_here = Vec::with_capacity(options.len());
        for &(_, v) in &options {
            let var = &m.vars[v];
            if self.cost + var.cost < self.best_cost - COST_EPS {
                self.in_use[v] = true;
                self.site_used[var.site] = true;
                self.chosen.push(v);
                self.cost += var.cost;
                let touched: Vec<usize> = var.cover.iter().copied().filter(|&e| self.residual[e] > 0).collect();
                for &e in &touched {
                    self.residual[e] -= 1;
                }
                self.run();
                for &e in &touched {
                    self.residual[e] += 1;
                }
                self.cost -= var.cost;
                self.chosen.pop();
                self.site_used[var.site] = false;
                self.in_use[v] = false;
            }
            self.banned[v] = true;
            banned_here.push(v);
            if self.timed_out {
                break;
            }
        }
        for v in banned_here {
            self.banned[v] = false;
        }
    }
}

// ---------------------------------------------------------------------------
// MBCC

/// Provably optimal budgeted maximum coverage.
pub fn solve_mbcc_exact(inst: &PlanInstance<'_>) -> Result<PlanSolution, PlanError> {
    let PlanKind::Mbcc { budget } = inst.kind else {
        return Err(PlanError::WrongKind { expected: "MBCC" });
    };
    let t = inst.tables;
    let model = build_model(inst, |tp| u32::from(!t.delta_bs[tp]), budget, true);
    let mut search = BudgetSearch::new(&model, budget, inst.one_device_per_site, inst.time_limit);
    if let Some(seed) = greedy_budget(&model, budget, inst.one_device_per_site, 1) {
        search.offer(&seed);
    }
    let root_ub = search.upper_bound(0) as f64;
    search.run(0);
    let installs = search.best.iter().map(|&v| pair_install(inst, model.vars[v].pair)).collect();
    let optimal = !search.timed_out;
    let gap = if optimal || root_ub <= 0.0 { 0.0 } else { ((root_ub - search.best_cov as f64) / root_ub).max(0.0) };
    let mut sol = inst.evaluate(installs, optimal, gap);
    sol.nodes = search.nodes;
    Ok(sol)
}

struct BudgetSearch<'m> {
    model: &'m Model,
    budget: f64,
    one_per_site: bool,
    /// Variables in branching order.
    order: Vec<usize>,
    covered: Vec<u32>,
    cov: u64,
    cost: f64,
    site_used: Vec<bool>,
    chosen: Vec<usize>,
    best: Vec<usize>,
    best_cov: u64,
    best_cost: f64,
    nodes: u64,
    deadline: Option<Instant>,
    timed_out: bool,
}

impl<'m> BudgetSearch<'m> {
    fn new(model: &'m Model, budget: f64, one_per_site: bool, limit: Option<Duration>) -> Self {
        let mut order: Vec<usize> = (0..model.vars.len()).collect();
        let eff = |v: usize| {
            let w: u32 = model.vars[v].cover.iter().map(|&e| model.weight[e]).sum();
            f64::from(w) / model.vars[v].cost
        };
        order.sort_by(|&a, &b| eff(b).total_cmp(&eff(a)).then(a.cmp(&b)));
        Self {
            model,
            budget,
            one_per_site,
            order,
            covered: vec![0; model.n_elems()],
            cov: 0,
            cost: 0.0,
            site_used: vec![false; model.n_sites],
            chosen: Vec::new(),
            best: Vec::new(),
            best_cov: 0,
            best_cost: 0.0,
            nodes: 0,
            deadline: limit.map(|l| Instant::now() + l),
            timed_out: false,
        }
    }

    fn better(&self, cov: u64, cost: f64) -> bool {
        cov > self.best_cov || (cov == self.best_cov && cost < self.best_cost - COST_EPS)
    }

    /// Evaluates an install set found outside the search.
    fn offer(&mut self, vars: &[usize]) {
        let mut hit = vec![false; self.model.n_elems()];
        for &v in vars {
            for &e in &self.model.vars[v].cover {
                hit[e] = true;
            }
        }
        let cov = hit.iter().zip(&self.model.weight).filter(|(h, _)| **h).map(|(_, &w)| u64::from(w)).sum();
        let cost = vars.iter().map(|&v| self.model.vars[v].cost).sum();
        if self.better(cov, cost) {
            self.best = vars.to_vec();
            self.best_cov = cov;
            self.best_cost = cost;
        }
    }

    fn available(&self, v: usize, residual: f64) -> bool {
        let var = &self.model.vars[v];
        var.cost <= residual + COST_EPS && !(self.one_per_site && self.site_used[var.site])
    }

    fn gain(&self, v: usize) -> u64 {
        let m = self.model;
        m.vars[v].cover.iter().filter(|&&e| self.covered[e] == 0).map(|&e| u64::from(m.weight[e])).sum()
    }

    /// Coverage reachable from this node: marginal gains of the remaining
    /// variables packed fractionally into the residual budget, capped by the
    /// weight they can still reach.
    fn upper_bound(&self, from: usize) -> u64 {
        let residual = self.budget - self.cost;
        let mut items: Vec<(f64, f64)> = Vec::new();
        let mut reach = vec![false; self.model.n_elems()];
        for &v in &self.order[from..] {
            if !self.available(v, residual) {
                continue;
            }
            let g = self.gain(v);
            if g == 0 {
                continue;
            }
            for &e in &self.model.vars[v].cover {
                reach[e] = true;
            }
            items.push((g as f64, self.model.vars[v].cost));
        }
        let reachable: u64 = reach
            .iter()
            .enumerate()
            .filter(|(e, r)| **r && self.covered[*e] == 0)
            .map(|(e, _)| u64::from(self.model.weight[e]))
            .sum();
        items.sort_by(|a, b| (b.0 / b.1).total_cmp(&(a.0 / a.1)));
        let mut room = residual;
        let mut extra = 0.0;
        for (g, c) in items {
            if c <= room {
                extra += g;
                room -= c;
            } else {
                extra += g * room / c;
                break;
            }
        }
        self.cov + ((extra + 1e-9).floor() as u64).min(reachable)
    }

    fn run(&mut self, from: usize) {
        self.nodes += 1;
        if self.nodes.is_multiple_of(512) {
            if let Some(d) = self.deadline {
                if Instant::now() >= d {
                    self.timed_out = true;
                }
            }
        }
        if self.better(self.cov, self.cost) {
            self.best = self.chosen.clone();
            self.best_cov = self.cov;
            self.best_cost = self.cost;
        }
        if self.timed_out {
            return;
        }
        // Next variable that is affordable and still adds coverage.
        let residual = self.budget - self.cost;
        let Some(pos) = (from..self.order.len()).find(|&i| {
            let v = self.order[i];
            self.available(v, residual) && self.gain(v) > 0
        }) else {
            return;
        };
        let ub = self.upper_bound(pos);
        if ub < self.best_cov || (ub == self.best_cov && self.cov == self.best_cov) {
            return;
        }
        if ub == self.best_cov {
            // Only a cheaper plan with the same coverage could still win.
            let cheapest = self.order[pos..]
                .iter()
                .filter(|&&v| self.available(v, residual))
                .map(|&v| self.model.vars[v].cost)
                .fold(f64::INFINITY, f64::min);
            if self.cost + cheapest >= self.best_cost - COST_EPS {
                return;
            }
        }

        let v = self.order[pos];
        let var = &self.model.vars[v];
        self.site_used[var.site] = true;
        self.cost += var.cost;
        self.chosen.push(v);
        let mut gained = 0u64;
        for &e in &var.cover {
            if self.covered[e] == 0 {
                gained += u64::from(self.model.weight[e]);
            }
            self.covered[e] += 1;
        }
        self.cov += gained;
        self.run(pos + 1);
        self.cov -= gained;
        for &e in &var.cover {
            self.covered[e] -= 1;
        }
        self.chosen.pop();
        self.cost -= var.cost;
        self.site_used[var.site] = false;

        if !self.timed_out {
            self.run(pos + 1);
        }
    }
}

/// Cost-effectiveness greedy under a budget. With `seed_size > 0`, every
/// feasible seed set of up to that many installs is completed greedily and
/// the best result kept.
fn greedy_budget(model: &Model, budget: f64, one_per_site: bool, seed_size: usize) -> Option<Vec<usize>> {
    let n = model.vars.len();
    let weight_of = |set: &[usize]| -> u64 {
        let mut hit = vec![false; model.n_elems()];
        for &v in set {
            for &e in &model.vars[v].cover {
                hit[e] = true;
            }
        }
        hit.iter().zip(&model.weight).filter(|(h, _)| **h).map(|(_, &w)| u64::from(w)).sum()
    };
    let complete = |mut set: Vec<usize>| -> Vec<usize> {
        let mut hit = vec![false; model.n_elems()];
        let mut site_used = vec![false; model.n_sites];
        let mut cost = 0.0;
        for &v in &set {
            site_used[model.vars[v].site] = true;
            cost += model.vars[v].cost;
            model.vars[v].cover.iter().for_each(|&e| hit[e] = true);
        }
        loop {
            let mut best: Option<(f64, usize)> = None;
            for v in 0..n {
                let var = &model.vars[v];
                if set.contains(&v) || cost + var.cost > budget + COST_EPS || (one_per_site && site_used[var.site]) {
                    continue;
                }
                let g: u32 = var.cover.iter().filter(|&&e| !hit[e]).map(|&e| model.weight[e]).sum();
                if g == 0 {
                    continue;
                }
                let eff = f64::from(g) / var.cost;
                if best.is_none_or(|(b, _)| eff > b + 1e-12) {
                    best = Some((eff, v));
                }
            }
            let Some((_, v)) = best else { break };
            site_used[model.vars[v].site] = true;
            cost += model.vars[v].cost;
            model.vars[v].cover.iter().for_each(|&e| hit[e] = true);
            set.push(v);
        }
        set
    };
    let cost_of = |set: &[usize]| set.iter().map(|&v| model.vars[v].cost).sum::<f64>();
    let feasible_seed = |set: &[usize]| {
        cost_of(set) <= budget + COST_EPS && {
            let mut sites: Vec<usize> = set.iter().map(|&v| model.vars[v].site).collect();
            sites.sort_unstable();
            let before = sites.len();
            sites.dedup();
            !one_per_site || sites.len() == before
        }
    };

    let mut best: Option<(u64, f64, Vec<usize>)> = None;
    let mut consider = |set: Vec<usize>| {
        let w = weight_of(&set);
        let c = cost_of(&set);
        if best.as_ref().is_none_or(|(bw, bc, _)| w > *bw || (w == *bw && c < *bc - COST_EPS)) {
            best = Some((w, c, set));
        }
    };
    consider(complete(Vec::new()));
    // Best single affordable install.
    if seed_size >= 1 {
        for v in 0..n {
            if feasible_seed(&[v]) {
                consider(vec![v]);
            }
        }
    }
    if seed_size >= 2 {
        let mut stack: Vec<Vec<usize>> = (0..n).map(|v| vec![v]).collect();
        while let Some(seed) = stack.pop() {
            if !feasible_seed(&seed) {
                continue;
            }
            if seed.len() == seed_size {
                consider(complete(seed));
            } else {
                if seed.len() > 1 {
                    consider(seed.clone());
                }
                let last = *seed.last().unwrap();
                for v in last + 1..n {
                    let mut next = seed.clone();
                    next.push(v);
                    stack.push(next);
                }
            }
        }
    }
    best.map(|(_, _, s)| s)
}

/// Partial-enumeration depth used by the budgeted greedy on small models.
const GREEDY_SEED_SIZE: usize = 3;
/// Above this many reduced variables the greedy only seeds with single installs.
const GREEDY_ENUMERATION_LIMIT: usize = 40;

/// Heuristic plan: weighted greedy for FCMC, cost-effectiveness greedy with
/// partial enumeration for MBCC. `optimal` is always false.
pub fn solve_greedy(inst: &PlanInstance<'_>) -> Result<PlanSolution, PlanError> {
    let t = inst.tables;
    match inst.kind {
        PlanKind::Fcmc { k } => {
            let uncoverable = inst.uncoverable();
            if !uncoverable.is_empty() {
                return Err(PlanError::Infeasible { uncoverable });
            }
            let model = build_model(inst, |tp| k.saturating_sub(u32::from(t.delta_bs[tp])), f64::INFINITY, false);
            let chosen = greedy_cover(&model, inst.one_device_per_site).ok_or(PlanError::HeuristicStuck)?;
            let installs = chosen.iter().map(|&v| pair_install(inst, model.vars[v].pair)).collect();
            Ok(inst.evaluate(installs, false, f64::NAN))
        }
        PlanKind::Mbcc { budget } => {
            let model = build_model(inst, |tp| u32::from(!t.delta_bs[tp]), budget, false);
            let seed = if model.vars.len() <= GREEDY_ENUMERATION_LIMIT { GREEDY_SEED_SIZE } else { 1 };
            let chosen = greedy_budget(&model, budget, inst.one_device_per_site, seed).unwrap_or_default();
            let installs = chosen.iter().map(|&v| pair_install(inst, model.vars[v].pair)).collect();
            Ok(inst.evaluate(installs, false, f64::NAN))
        }
    }
}

/// Exhaustive enumeration of every install subset; the reference oracle.
/// Ties are broken like the exact solvers: higher coverage, then lower cost.
pub fn brute_force(inst: &PlanInstance<'_>, var_limit: usize) -> Result<PlanSolution, PlanError> {
    let t = inst.tables;
    let n = t.n_pairs();
    if n > var_limit {
        return Err(PlanError::TooLarge { vars: n, limit: var_limit });
    }
    // Test points served by each pair.
    let served: Vec<Vec<usize>> = (0..n)
        .map(|p| (0..t.n_tps).filter(|&tp| t.get(tp, p / t.n_specs, p % t.n_specs)).collect())
        .collect();
    let mut enumerator = Enumerator {
        inst,
        served,
        counts: t.delta_bs.iter().map(|&b| u32::from(b)).collect(),
        site_used: vec![false; t.n_sites],
        chosen: Vec::new(),
        cost: 0.0,
        best: None,
    };
    enumerator.visit(0);
    let Some((_, _, chosen)) = enumerator.best else {
        let k = match inst.kind {
            PlanKind::Fcmc { k } => k,
            PlanKind::Mbcc { .. } => 1,
        };
        let mut uncoverable = inst.uncoverable();
        if uncoverable.is_empty() {
            uncoverable = unmet_tps(inst, k);
        }
        return Err(PlanError::Infeasible { uncoverable });
    };
    let installs = chosen.into_iter().map(|p| pair_install(inst, p)).collect();
    Ok(inst.evaluate(installs, true, 0.0))
}

struct Enumerator<'a, 'b> {
    inst: &'b PlanInstance<'a>,
    served: Vec<Vec<usize>>,
    counts: Vec<u32>,
    site_used: Vec<bool>,
    chosen: Vec<usize>,
    cost: f64,
    /// (objective key, cost, pairs); larger key is better.
    best: Option<(f64, f64, Vec<usize>)>,
}

impl Enumerator<'_, '_> {
    fn visit(&mut self, pair: usize) {
        if pair == self.served.len() {
            self.leaf();
            return;
        }
        if let PlanKind::Mbcc { budget } = self.inst.kind {
            if self.cost > budget + COST_EPS {
                return;
            }
        }
        self.visit(pair + 1);
        let site = self.inst.site_of(pair);
        if self.inst.one_device_per_site && self.site_used[site] {
            return;
        }
        self.site_used[site] = true;
        self.chosen.push(pair);
        self.cost += self.inst.costs[pair];
        for &tp in &self.served[pair] {
            self.counts[tp] += 1;
        }
        self.visit(pair + 1);
        for &tp in &self.served[pair] {
            self.counts[tp] -= 1;
        }
        self.cost -= self.inst.costs[pair];
        self.chosen.pop();
        self.site_used[site] = false;
    }

    fn leaf(&mut self) {
        let key = match self.inst.kind {
            PlanKind::Fcmc { k } => {
                if self.counts.iter().any(|&c| c < k) {
                    return;
                }
                -self.cost
            }
            PlanKind::Mbcc { budget } => {
                if self.cost > budget + COST_EPS {
                    return;
                }
                self.counts.iter().filter(|&&c| c > 0).count() as f64
            }
        };
        let improves = match &self.best {
            None => true,
            Some((bk, bc, _)) => key > bk + COST_EPS || ((key - bk).abs() <= COST_EPS && self.cost < bc - COST_EPS),
        };
        if improves {
            self.best = Some((key, self.cost, self.chosen.clone()));
        }
    }
}

/// Test points that some plan can serve at least `k` times: those covered
/// by the unlimited-budget maximum-coverage plan that also have `k`
/// potential servers, counting the base station.
pub fn plannable_tps(tables: &ActivationTables, costs: &[f64], k: u32, one_device_per_site: bool) -> Result<Vec<usize>, PlanError> {
    let budget = costs.iter().sum::<f64>() + 1.0;
    let inst = PlanInstance::new(PlanKind::Mbcc { budget }, tables, costs.to_vec())?.with_one_device_per_site(one_device_per_site);
    let reach = solve_mbcc_exact(&inst)?;
    let redundant = PlanInstance { kind: PlanKind::Fcmc { k: k.max(1) }, ..inst };
    let short: std::collections::HashSet<String> = redundant.uncoverable().into_iter().collect();
    Ok(reach.covered.into_iter().filter(|&t| !short.contains(&tables.tp_ids[t])).collect())
}

/// Dispatches to the exact solver for the instance kind.
pub fn solve_exact(inst: &PlanInstance<'_>) -> Result<PlanSolution, PlanError> {
    match inst.kind {
        PlanKind::Fcmc { .. } => solve_fcmc_exact(inst),
        PlanKind::Mbcc { .. } => solve_mbcc_exact(inst),
    }
}
