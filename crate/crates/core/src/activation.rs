//! Boolean link-activation tables: which test points the base station and
//! each (site, device) pair serve above the SNR threshold.
//!
//! The SNR tensor is kept next to the booleans so threshold sweeps only
//! re-threshold instead of re-running the physics.

use std::io::{self, Read, Write};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::catalog::Catalog;
use crate::channel::{snr_direct, snr_relayed, LinkBudgetParams};
use crate::scenario::Scenario;

/// Leading bytes of the binary table export.
pub const TABLE_MAGIC: &[u8; 8] = b"SREDELTA";
pub const TABLE_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum TableError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("not an activation table file (bad magic)")]
    BadMagic,
    #[error("unsupported table version {0}")]
    Version(u32),
    #[error("malformed table: {0}")]
    Malformed(String),
}

/// Activation parameters over test points `t`, sites `c` and specs `d`.
/// Dense tensors are stored in `(t, c, d)` order.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationTables {
    pub n_tps: usize,
    pub n_sites: usize,
    pub n_specs: usize,
    pub gamma_threshold: f64,
    pub delta_bs: Vec<bool>,
    pub delta: Vec<bool>,
    pub snr_bs: Vec<f64>,
    pub snr: Vec<f64>,
    pub tp_ids: Vec<String>,
    pub site_ids: Vec<String>,
    pub spec_ids: Vec<String>,
    /// Per test point, the active `(c, d)` pairs as `c * n_specs + d`.
    active: Vec<Vec<u32>>,
}

impl ActivationTables {
    /// Thresholds an SNR tensor. Unavailable links carry `-inf` and are never active.
    pub fn from_snr(
        snr_bs: Vec<f64>,
        snr: Vec<f64>,
        dims: (usize, usize, usize),
        gamma: f64,
        ids: (Vec<String>, Vec<String>, Vec<String>),
    ) -> Self {
        let (n_tps, n_sites, n_specs) = dims;
        assert_eq!(snr_bs.len(), n_tps);
        assert_eq!(snr.len(), n_tps * n_sites * n_specs);
        let (tp_ids, site_ids, spec_ids) = ids;
        assert_eq!((tp_ids.len(), site_ids.len(), spec_ids.len()), dims);
        let delta_bs = snr_bs.iter().map(|&s| is_active(s, gamma)).collect();
        let delta = snr.iter().map(|&s| is_active(s, gamma)).collect();
        let mut tables = Self {
            n_tps,
            n_sites,
            n_specs,
            gamma_threshold: gamma,
            delta_bs,
            delta,
            snr_bs,
            snr,
            tp_ids,
            site_ids,
            spec_ids,
            active: Vec::new(),
        };
        tables.reindex();
        tables
    }

    /// Builds tables straight from boolean activation data, e.g. for
    /// synthetic solver instances. SNR is recorded as `+inf` / `-inf`.
    pub fn from_delta(n_tps: usize, n_sites: usize, n_specs: usize, delta_bs: Vec<bool>, delta: Vec<bool>) -> Self {
        let to_snr = |b: bool| if b { f64::INFINITY } else { f64::NEG_INFINITY };
        let snr_bs = delta_bs.iter().map(|&b| to_snr(b)).collect();
        let snr = delta.iter().map(|&b| to_snr(b)).collect();
        let ids = (
            (0..n_tps).map(|t| format!("t{t}")).collect(),
            (0..n_sites).map(|c| format!("c{c}")).collect(),
            (0..n_specs).map(|d| format!("d{d}")).collect(),
        );
        Self::from_snr(snr_bs, snr, (n_tps, n_sites, n_specs), 0.0, ids)
    }

    fn reindex(&mut self) {
        let pairs = self.n_sites * self.n_specs;
        self.active = (0..self.n_tps)
            .map(|t| {
                let row = &self.delta[t * pairs..(t + 1) * pairs];
                row.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i as u32).collect()
            })
            .collect();
    }

    /// Same physics, new threshold.
    pub fn rethreshold(&self, gamma: f64) -> Self {
        let ids = (self.tp_ids.clone(), self.site_ids.clone(), self.spec_ids.clone());
        Self::from_snr(self.snr_bs.clone(), self.snr.clone(), (self.n_tps, self.n_sites, self.n_specs), gamma, ids)
    }

    /// Tables restricted to the given test points, in the given order.
    pub fn select_tps(&self, tps: &[usize]) -> Self {
        let pairs = self.n_sites * self.n_specs;
        let snr_bs = tps.iter().map(|&t| self.snr_bs[t]).collect();
        let snr = tps.iter().flat_map(|&t| self.snr[t * pairs..(t + 1) * pairs].iter().copied()).collect();
        let ids = (tps.iter().map(|&t| self.tp_ids[t].clone()).collect(), self.site_ids.clone(), self.spec_ids.clone());
        let mut out = Self::from_snr(snr_bs, snr, (tps.len(), self.n_sites, self.n_specs), self.gamma_threshold, ids);
        // Keep the boolean data verbatim: tables built from raw deltas carry +-inf SNR only.
        out.delta_bs = tps.iter().map(|&t| self.delta_bs[t]).collect();
        out.delta = tps.iter().flat_map(|&t| self.delta[t * pairs..(t + 1) * pairs].iter().copied()).collect();
        out.reindex();
        out
    }

    pub fn index(&self, t: usize, c: usize, d: usize) -> usize {
        (t * self.n_sites + c) * self.n_specs + d
    }

    pub fn get(&self, t: usize, c: usize, d: usize) -> bool {
        self.delta[self.index(t, c, d)]
    }

    pub fn snr_at(&self, t: usize, c: usize, d: usize) -> f64 {
        self.snr[self.index(t, c, d)]
    }

    /// Active `(site, spec)` pairs for test point `t`.
    pub fn active_pairs(&self, t: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n_d = self.n_specs;
        self.active[t].iter().map(move |&p| (p as usize / n_d, p as usize % n_d))
    }

    pub fn n_pairs(&self) -> usize {
        self.n_sites * self.n_specs
    }

    pub fn coverage_stats(&self) -> CoverageStats {
        coverage_stats(self)
    }

    /// Binary export: magic, version, dimensions, threshold, ids, then the
    /// boolean and SNR tensors, all little-endian in `(t, c, d)` order.
    pub fn write_binary<W: Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(TABLE_MAGIC)?;
        w.write_all(&TABLE_VERSION.to_le_bytes())?;
        for n in [self.n_tps, self.n_sites, self.n_specs] {
            w.write_all(&(n as u32).to_le_bytes())?;
        }
        w.write_all(&self.gamma_threshold.to_le_bytes())?;
        for id in self.tp_ids.iter().chain(&self.site_ids).chain(&self.spec_ids) {
            w.write_all(&(id.len() as u32).to_le_bytes())?;
            w.write_all(id.as_bytes())?;
        }
        let bytes: Vec<u8> = self.delta_bs.iter().chain(&self.delta).map(|&b| u8::from(b)).collect();
        w.write_all(&bytes)?;
        for s in self.snr_bs.iter().chain(&self.snr) {
            w.write_all(&s.to_le_bytes())?;
        }
        w.flush()
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self, TableError> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != TABLE_MAGIC {
            return Err(TableError::BadMagic);
        }
        let version = read_u32(&mut r)?;
        if version != TABLE_VERSION {
            return Err(TableError::Version(version));
        }
        let (n_t, n_c, n_d) = (read_u32(&mut r)? as usize, read_u32(&mut r)? as usize, read_u32(&mut r)? as usize);
        let n = n_t
            .checked_mul(n_c)
            .and_then(|x| x.checked_mul(n_d))
            .ok_or_else(|| TableError::Malformed("dimensions overflow".into()))?;
        let gamma = read_f64(&mut r)?;
        let mut read_ids = |count: usize| -> Result<Vec<String>, TableError> {
            (0..count)
                .map(|_| {
                    let len = read_u32(&mut r)? as usize;
                    let mut buf = vec![0u8; len];
                    r.read_exact(&mut buf)?;
                    String::from_utf8(buf).map_err(|_| TableError::Malformed("id is not UTF-8".into()))
                })
                .collect()
        };
        let ids = (read_ids(n_t)?, read_ids(n_c)?, read_ids(n_d)?);
        let mut flags = vec![0u8; n_t + n];
        r.read_exact(&mut flags)?;
        let mut snr_bs = Vec::with_capacity(n_t);
        for _ in 0..n_t {
            snr_bs.push(read_f64(&mut r)?);
        }
        let mut snr = Vec::with_capacity(n);
        for _ in 0..n {
            snr.push(read_f64(&mut r)?);
        }
        let tables = Self::from_snr(snr_bs, snr, (n_t, n_c, n_d), gamma, ids);
        let stored: Vec<bool> = flags.iter().map(|&b| b != 0).collect();
        if stored[..n_t] != tables.delta_bs[..] || stored[n_t..] != tables.delta[..] {
            // Boolean data wins over the SNR tensor (it may have been edited externally).
            let mut t = tables;
            t.delta_bs = stored[..n_t].to_vec();
            t.delta = stored[n_t..].to_vec();
            t.reindex();
            return Ok(t);
        }
        Ok(tables)
    }

    /// Long-format CSV: one row per available link, the BS as site `BS`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), csv::Error> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["tp", "site", "spec", "snr_db", "active"])?;
        for t in 0..self.n_tps {
            if self.snr_bs[t] > f64::NEG_INFINITY {
                let snr = self.snr_bs[t].to_string();
                out.write_record([self.tp_ids[t].as_str(), "BS", "", snr.as_str(), flag(self.delta_bs[t])])?;
            }
            for c in 0..self.n_sites {
                for d in 0..self.n_specs {
                    let i = self.index(t, c, d);
                    if self.snr[i] > f64::NEG_INFINITY {
                        let snr = self.snr[i].to_string();
                        out.write_record([
                            self.tp_ids[t].as_str(),
                            self.site_ids[c].as_str(),
                            self.spec_ids[d].as_str(),
                            snr.as_str(),
                            flag(self.delta[i]),
                        ])?;
                    }
                }
            }
        }
        out.flush()?;
        Ok(())
    }
}

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

fn read_u32<R: Read>(r: &mut R) -> io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> io::Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

/// `snr >= gamma` for available links; ties count as covered.
fn is_active(snr: f64, gamma: f64) -> bool {
    snr > f64::NEG_INFINITY && snr >= gamma
}

/// Long-term SNR of the direct link per test point and of every
/// (test point, site, spec) triple, `-inf` where unavailable or where the
/// spec cannot be mounted on the site.
pub fn compute_snr(scenario: &Scenario, catalog: &Catalog, params: &LinkBudgetParams) -> (Vec<f64>, Vec<f64>) {
    let n_c = scenario.sites.len();
    let n_d = catalog.len();
    let rows: Vec<(f64, Vec<f64>)> = scenario
        .tps
        .par_iter()
        .map(|tp| {
            let direct = snr_direct(scenario, tp, params).gamma_bar;
            let mut row = vec![f64::NEG_INFINITY; n_c * n_d];
            for (c, site) in scenario.sites.iter().enumerate() {
                for (d, spec) in catalog.specs.iter().enumerate() {
                    if spec.mount != site.mount.kind() {
                        continue;
                    }
                    if let Ok(link) = snr_relayed(scenario, site, &spec.config, tp, params) {
                        row[c * n_d + d] = link.gamma_bar;
                    }
                }
            }
            (direct, row)
        })
        .collect();
    let mut snr_bs = Vec::with_capacity(rows.len());
    let mut snr = Vec::with_capacity(rows.len() * n_c * n_d);
    for (direct, row) in rows {
        snr_bs.push(direct);
        snr.extend(row);
    }
    (snr_bs, snr)
}

pub fn compute_activation(
    scenario: &Scenario,
    catalog: &Catalog,
    params: &LinkBudgetParams,
    gamma: f64,
) -> ActivationTables {
    let (snr_bs, snr) = compute_snr(scenario, catalog, params);
    let ids = (
        scenario.tps.iter().map(|t| t.id.clone()).collect(),
        scenario.sites.iter().map(|s| s.id.clone()).collect(),
        catalog.specs.iter().map(|s| s.id.clone()).collect(),
    );
    ActivationTables::from_snr(snr_bs, snr, (scenario.tps.len(), scenario.sites.len(), catalog.len()), gamma, ids)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageStats {
    pub tps: usize,
    pub bs_covered: usize,
    /// Test points served by the BS or by at least one (site, spec) pair.
    pub coverable: usize,
    pub uncoverable_tps: Vec<String>,
    /// Fraction of test points that are coverable.
    pub fill_ratio: f64,
}

pub fn coverage_stats(tables: &ActivationTables) -> CoverageStats {
    let bs_covered = tables.delta_bs.iter().filter(|&&b| b).count();
    let uncoverable_tps: Vec<String> = (0..tables.n_tps)
        .filter(|&t| !tables.delta_bs[t] && tables.active[t].is_empty())
        .map(|t| tables.tp_ids[t].clone())
        .collect();
    let coverable = tables.n_tps - uncoverable_tps.len();
    let fill_ratio = if tables.n_tps == 0 { 1.0 } else { coverable as f64 / tables.n_tps as f64 };
    CoverageStats { tps: tables.n_tps, bs_covered, coverable, uncoverable_tps, fill_ratio }
}
