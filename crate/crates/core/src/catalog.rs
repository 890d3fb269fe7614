//! Device catalog (the set of installable technology/configuration pairs)
//! and the configuration-dependent cost models.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{DeviceConfig, PANEL_SEPARATION};
use crate::scenario::MountKind;

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("catalog expansion is empty: {0}")]
    Empty(&'static str),
    #[error("invalid catalog setting: {0}")]
    Invalid(String),
    #[error("cannot parse catalog config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("cannot read catalog config: {0}")]
    Io(#[from] std::io::Error),
}

/// Price coefficients, in units where the 100x100 reference RIS costs 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostModel {
    pub ris_deploy: f64,
    pub ris_per_cell: f64,
    pub ncr_deploy: f64,
    pub ncr_per_db: f64,
    pub star_multiplier: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        Self { ris_deploy: 0.4, ris_per_cell: 6e-5, ncr_deploy: 0.8, ncr_per_db: 4e-2, star_multiplier: 2.0 }
    }
}

impl CostModel {
    pub fn validate(&self) -> Result<(), CatalogError> {
        let all = [self.ris_deploy, self.ris_per_cell, self.ncr_deploy, self.ncr_per_db, self.star_multiplier];
        if all.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(CatalogError::Invalid("cost coefficients must be finite and non-negative".into()));
        }
        Ok(())
    }

    pub fn ris_cost(&self, cells: u32) -> f64 {
        self.ris_deploy + self.ris_per_cell * f64::from(cells)
    }

    pub fn ncr_cost(&self, gain_db: f64) -> f64 {
        self.ncr_deploy + self.ncr_per_db * gain_db
    }

    pub fn device_cost(&self, config: &DeviceConfig) -> f64 {
        match *config {
            DeviceConfig::Ris { cells, .. } => self.ris_cost(cells),
            DeviceConfig::Star { cells, .. } => self.star_multiplier * self.ris_cost(cells),
            DeviceConfig::Ncr { gain_db, .. } | DeviceConfig::TriNcr { gain_db, .. } => self.ncr_cost(gain_db),
        }
    }

    /// Rescales both repeater coefficients so the reference repeater costs
    /// `ratio` times the reference RIS.
    pub fn with_price_ratio(&self, ratio: f64, reference_cells: u32, reference_gain_db: f64) -> CostModel {
        let current = self.ncr_cost(reference_gain_db);
        let scale = if current > 0.0 { ratio * self.ris_cost(reference_cells) / current } else { 0.0 };
        CostModel { ncr_deploy: self.ncr_deploy * scale, ncr_per_db: self.ncr_per_db * scale, ..self.clone() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Technology {
    #[serde(rename = "RIS")]
    Ris,
    #[serde(rename = "STAR")]
    Star,
    #[serde(rename = "NCR")]
    Ncr,
    #[serde(rename = "3SNCR")]
    TriNcr,
}

impl Technology {
    pub const ALL: [Technology; 4] = [Technology::Ris, Technology::Star, Technology::Ncr, Technology::TriNcr];

    pub fn of(config: &DeviceConfig) -> Technology {
        match config {
            DeviceConfig::Ris { .. } => Technology::Ris,
            DeviceConfig::Star { .. } => Technology::Star,
            DeviceConfig::Ncr { .. } => Technology::Ncr,
            DeviceConfig::TriNcr { .. } => Technology::TriNcr,
        }
    }

    pub fn mount(self) -> MountKind {
        match self {
            Technology::Ris => MountKind::Wall,
            _ => MountKind::Roof,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Technology::Ris => "RIS",
            Technology::Star => "STAR",
            Technology::Ncr => "NCR",
            Technology::TriNcr => "3SNCR",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceSpec {
    pub id: String,
    pub technology: Technology,
    pub config: DeviceConfig,
    /// Serving azimuth in radians, for oriented repeaters.
    pub orientation: Option<f64>,
    pub cost: f64,
    pub mount: MountKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flavor {
    /// RIS and two-panel NCR only.
    ReducedSet,
    /// Adds STAR and three-panel NCR.
    FullSet,
}

impl Flavor {
    pub fn label(self) -> &'static str {
        match self {
            Flavor::ReducedSet => "reduced",
            Flavor::FullSet => "full",
        }
    }

    pub fn includes(self, tech: Technology) -> bool {
        match self {
            Flavor::FullSet => true,
            Flavor::ReducedSet => matches!(tech, Technology::Ris | Technology::Ncr),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Catalog {
    pub flavor: Flavor,
    pub specs: Vec<DeviceSpec>,
}

/// Everything needed to expand a catalog; the on-disk catalog file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CatalogConfig {
    pub flavor: Flavor,
    /// Metasurface sizes as cell counts.
    pub ris_sizes: Vec<u32>,
    /// Repeater amplification gains, dB.
    pub ncr_gains: Vec<f64>,
    /// Number of evenly spaced repeater orientations.
    pub orientations: usize,
    /// Repeater array size (donor panel; serving panel for two-panel NCRs).
    pub ncr_elements: u32,
    pub ris_beta_r: f64,
    pub star_beta_r: f64,
    pub star_beta_t: f64,
    pub cost_model: CostModel,
}

impl Default for CatalogConfig {
    fn default() -> Self {
        Self {
            flavor: Flavor::FullSet,
            ris_sizes: vec![100 * 100],
            ncr_gains: vec![55.0],
            orientations: 8,
            ncr_elements: 12 * 6,
            ris_beta_r: 1.0,
            star_beta_r: 0.5,
            star_beta_t: 0.5,
            cost_model: CostModel::default(),
        }
    }
}

impl CatalogConfig {
    pub fn from_json(text: &str) -> Result<Self, CatalogError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, CatalogError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn build(&self) -> Result<Catalog, CatalogError> {
        build_catalog(self)
    }
}

/// Expands technologies x configurations x orientations into device specs,
/// ordered by technology, then configuration, then orientation.
///
/// RIS orientation comes from the wall it is mounted on and STAR surfaces
/// face the base station, so neither is expanded over orientations.
pub fn build_catalog(cfg: &CatalogConfig) -> Result<Catalog, CatalogError> {
    cfg.cost_model.validate()?;
    if cfg.ris_sizes.is_empty() {
        return Err(CatalogError::Empty("no metasurface sizes"));
    }
    if cfg.ncr_gains.is_empty() {
        return Err(CatalogError::Empty("no repeater gains"));
    }
    if cfg.orientations == 0 {
        return Err(CatalogError::Empty("no repeater orientations"));
    }
    if cfg.ris_sizes.contains(&0) {
        return Err(CatalogError::Invalid("metasurface size must be positive".into()));
    }
    if cfg.ncr_gains.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
        return Err(CatalogError::Invalid("repeater gains must be non-negative".into()));
    }
    let model = &cfg.cost_model;
    let mut specs = Vec::new();
    let mut push = |id: String, config: DeviceConfig, orientation: Option<f64>| -> Result<(), CatalogError> {
        config.validate().map_err(|e| CatalogError::Invalid(e.to_string()))?;
        let technology = Technology::of(&config);
        specs.push(DeviceSpec { id, technology, config, orientation, cost: model.device_cost(&config), mount: technology.mount() });
        Ok(())
    };
    let step = 2.0 * PI / cfg.orientations as f64;
    let azimuth = |k: usize| k as f64 * step;
    let deg = |a: f64| a.to_degrees().round() as i64;

    for &cells in &cfg.ris_sizes {
        push(format!("ris-m{cells}"), DeviceConfig::Ris { cells, beta_r: cfg.ris_beta_r }, None)?;
    }
    if cfg.flavor.includes(Technology::Star) {
        for &cells in &cfg.ris_sizes {
            let config = DeviceConfig::Star { cells, beta_r: cfg.star_beta_r, beta_t: cfg.star_beta_t };
            push(format!("star-m{cells}"), config, None)?;
        }
    }
    for &gain_db in &cfg.ncr_gains {
        for k in 0..cfg.orientations {
            let a = azimuth(k);
            let config = DeviceConfig::Ncr { elements: cfg.ncr_elements, gain_db, serve_azimuth: a };
            push(format!("ncr-g{}-az{:03}", fmt_gain(gain_db), deg(a)), config, Some(a))?;
        }
    }
    if cfg.flavor.includes(Technology::TriNcr) {
        for &gain_db in &cfg.ncr_gains {
            for k in 0..cfg.orientations {
                let a = azimuth(k);
                let b = (a + PANEL_SEPARATION).rem_euclid(2.0 * PI);
                let config = DeviceConfig::TriNcr { elements: cfg.ncr_elements, gain_db, serve_azimuths: [a, b] };
                push(format!("3sncr-g{}-az{:03}", fmt_gain(gain_db), deg(a)), config, Some(a))?;
            }
        }
    }
    Ok(Catalog { flavor: cfg.flavor, specs })
}

fn fmt_gain(g: f64) -> String {
    if g.fract() == 0.0 {
        format!("{g:.0}")
    } else {
        format!("{g}")
    }
}

impl Catalog {
    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.specs.iter().position(|s| s.id == id)
    }

    /// Plain-text price list.
    pub fn cost_table(&self) -> String {
        let mut out = format!("{:<24} {:<6} {:<5} {:>10}\n", "id", "type", "mount", "cost");
        for s in &self.specs {
            let mount = match s.mount {
                MountKind::Wall => "wall",
                MountKind::Roof => "roof",
            };
            let _ = writeln!(out, "{:<24} {:<6} {:<5} {:>10.4}", s.id, s.technology.label(), mount, s.cost);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_of_each(flavor: Flavor) -> Catalog {
        build_catalog(&CatalogConfig { flavor, ..Default::default() }).unwrap()
    }

    #[test]
    fn reference_prices() {
        let m = CostModel::default();
        assert_eq!(m.ris_cost(10_000), 1.0);
        assert!((m.ris_cost(2_500) - 0.55).abs() < 1e-12);
        assert_eq!(m.ris_cost(0), m.ris_deploy);
        assert_eq!(m.ncr_cost(55.0), 3.0);
        assert!((m.ncr_cost(30.0) - 2.0).abs() < 1e-12);
        assert_eq!(m.ncr_cost(0.0), 0.8);
    }

    #[test]
    fn star_and_three_sector_prices() {
        let m = CostModel::default();
        let star = DeviceConfig::Star { cells: 10_000, beta_r: 0.5, beta_t: 0.5 };
        assert_eq!(m.device_cost(&star), 2.0);
        let tri = DeviceConfig::TriNcr { elements: 72, gain_db: 55.0, serve_azimuths: [0.0, PANEL_SEPARATION] };
        assert_eq!(m.device_cost(&tri), 3.0);
        for cells in [100, 2_500, 40_000] {
            let ris = DeviceConfig::Ris { cells, beta_r: 1.0 };
            let star = DeviceConfig::Star { cells, beta_r: 0.5, beta_t: 0.5 };
            assert_eq!(m.device_cost(&star), 2.0 * m.device_cost(&ris));
        }
    }

    #[test]
    fn catalog_cardinality() {
        let reduced = one_of_each(Flavor::ReducedSet);
        assert_eq!(reduced.len(), 1 + 8);
        assert!(reduced.specs.iter().all(|s| matches!(s.technology, Technology::Ris | Technology::Ncr)));
        let full = one_of_each(Flavor::FullSet);
        assert_eq!(full.len(), 1 + 8 + 1 + 8);
        for s in &reduced.specs {
            assert!(full.specs.contains(s), "{} missing from the full set", s.id);
        }
    }

    #[test]
    fn ordering_is_by_technology() {
        let full = one_of_each(Flavor::FullSet);
        let techs: Vec<_> = full.specs.iter().map(|s| s.technology).collect();
        let mut sorted = techs.clone();
        sorted.sort();
        assert_eq!(techs, sorted);
        assert_eq!(full.specs[0].mount, MountKind::Wall);
        assert!(full.specs[1..].iter().all(|s| s.mount == MountKind::Roof));
    }

    #[test]
    fn empty_lists_are_rejected() {
        let cfg = CatalogConfig { ncr_gains: vec![], ..Default::default() };
        assert!(matches!(build_catalog(&cfg), Err(CatalogError::Empty(_))));
        let cfg = CatalogConfig { orientations: 0, ..Default::default() };
        assert!(matches!(build_catalog(&cfg), Err(CatalogError::Empty(_))));
    }

    #[test]
    fn price_ratio_scaling() {
        let m = CostModel::default();
        for ratio in [0.5, 1.0, 3.0, 4.0] {
            let scaled = m.with_price_ratio(ratio, 10_000, 55.0);
            assert!((scaled.ncr_cost(55.0) - ratio * scaled.ris_cost(10_000)).abs() < 1e-12);
            assert_eq!(scaled.ris_cost(10_000), 1.0);
        }
    }

    #[test]
    fn config_file_overrides_defaults() {
        let cfg = CatalogConfig::from_json(r#"{"flavor":"reduced_set","ncr_gains":[30,55],"orientations":4}"#).unwrap();
        let cat = cfg.build().unwrap();
        assert_eq!(cat.len(), 1 + 2 * 4);
        assert!(cat.cost_table().contains("ncr-g30-az090"));
    }
}
