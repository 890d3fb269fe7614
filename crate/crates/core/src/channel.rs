//! Link-budget physics: array responses, element patterns, free-space loss,
//! dynamic blockage and the long-term SNR of direct, metasurface-assisted
//! and repeater-assisted links.
//!
//! Beamformers are assumed optimal for every receiver position, so precoders,
//! combiners and surface phase profiles only show up as coherent array gains:
//! `10 log10 N` for an `N`-element panel and `20 log10 M` for an `M`-cell
//! metasurface. Each hop is its dominant line-of-sight path.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scenario::{CandidateSite, Mount, Point3, Scenario, TestPoint};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Half-width of the azimuth cone a panel or surface can serve.
pub const SERVING_HALF_ANGLE: f64 = PI / 3.0;
/// Minimum azimuth separation between a repeater's donor and serving panels.
pub const PANEL_SEPARATION: f64 = 2.0 * PI / 3.0;

const THREE_GPP_MAX_GAIN_DBI: f64 = 8.0;
const THREE_GPP_BEAMWIDTH: f64 = 65.0 * PI / 180.0;
const THREE_GPP_MAX_ATTENUATION_DB: f64 = 30.0;
const ANGLE_EPS: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum ChannelError {
    #[error("{device} cannot be installed on a {mount} site")]
    MountMismatch { device: &'static str, mount: &'static str },
    #[error("invalid device configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid link-budget parameters: {0}")]
    InvalidParams(String),
}

/// Scalar link-budget inputs. Field names follow the default simulation
/// parameter table; every field may be overridden from a parameter file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkBudgetParams {
    pub carrier_frequency_hz: f64,
    pub bs_transmit_power_dbm: f64,
    pub noise_power_dbm: f64,
    pub ncr_noise_figure_db: f64,
    pub blocker_density_per_m2: f64,
    pub blocker_velocity_mps: f64,
    pub blocker_height_m: f64,
    pub blockage_duration_s: f64,
    /// Extra loss while a dynamic blocker shadows the path.
    pub blockage_attenuation_db: f64,
    /// Receive gain of the user equipment (isotropic by default).
    pub ue_gain_db: f64,
}

impl Default for LinkBudgetParams {
    fn default() -> Self {
        Self {
            carrier_frequency_hz: 28e9,
            bs_transmit_power_dbm: 35.0,
            noise_power_dbm: -82.0,
            ncr_noise_figure_db: 8.0,
            blocker_density_per_m2: 4e-3,
            blocker_velocity_mps: 15.0,
            blocker_height_m: 1.7,
            blockage_duration_s: 5.0,
            blockage_attenuation_db: 20.0,
            ue_gain_db: 0.0,
        }
    }
}

impl LinkBudgetParams {
    pub fn validate(&self) -> Result<(), ChannelError> {
        let fail = |m: &str| Err(ChannelError::InvalidParams(m.into()));
        if !(self.carrier_frequency_hz.is_finite() && self.carrier_frequency_hz > 0.0) {
            return fail("carrier frequency must be positive");
        }
        if !(self.blocker_density_per_m2 >= 0.0) {
            return fail("blocker density must be non-negative");
        }
        if !(self.blockage_duration_s > 0.0) {
            return fail("blockage duration must be positive");
        }
        if !(self.blockage_attenuation_db >= 0.0) {
            return fail("blockage attenuation must be non-negative");
        }
        if !(self.blocker_velocity_mps >= 0.0 && self.blocker_height_m >= 0.0) {
            return fail("blocker velocity and height must be non-negative");
        }
        Ok(())
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_frequency_hz
    }

    /// Noise power at the repeater input, dBm.
    pub fn relay_noise_dbm(&self) -> f64 {
        self.noise_power_dbm + self.ncr_noise_figure_db
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementPattern {
    /// Directional antenna element, 8 dBi peak.
    ThreeGpp,
    /// Metasurface unit cell, cosine-shaped.
    MetaAtom,
}

/// Uniform planar array lying in the local y-z plane, boresight along +x.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    pub rows: usize,
    pub cols: usize,
    /// Element spacing as a fraction of the wavelength.
    pub spacing: f64,
    pub element_pattern: ElementPattern,
}

impl ArrayGeometry {
    pub fn new(rows: usize, cols: usize, spacing: f64, element_pattern: ElementPattern) -> Self {
        Self { rows, cols, spacing, element_pattern }
    }

    pub fn elements(&self) -> usize {
        self.rows * self.cols
    }

    /// Local element positions in meters, column index along y and row index along z.
    pub fn element_positions(&self, wavelength: f64) -> Vec<[f64; 3]> {
        let d = self.spacing * wavelength;
        (0..self.rows)
            .flat_map(|r| (0..self.cols).map(move |c| [0.0, c as f64 * d, r as f64 * d]))
            .collect()
    }
}

pub fn wave_vector(azimuth: f64, elevation: f64, wavelength: f64) -> [f64; 3] {
    let k = 2.0 * PI / wavelength;
    [
        k * elevation.cos() * azimuth.cos(),
        k * elevation.cos() * azimuth.sin(),
        k * elevation.sin(),
    ]
}

/// Steering vector `exp(j k . nu_l)` over all elements of the array.
pub fn array_response(geom: &ArrayGeometry, azimuth: f64, elevation: f64, wavelength: f64) -> Vec<Complex64> {
    let k = wave_vector(azimuth, elevation, wavelength);
    geom.element_positions(wavelength)
        .into_iter()
        .map(|nu| Complex64::from_polar(1.0, k[0] * nu[0] + k[1] * nu[1] + k[2] * nu[2]))
        .collect()
}

/// Element gain in dBi along a single cut, `off_boresight` in radians.
pub fn element_gain(pattern: ElementPattern, off_boresight: f64) -> f64 {
    match pattern {
        ElementPattern::ThreeGpp => {
            THREE_GPP_MAX_GAIN_DBI
                - (12.0 * (off_boresight / THREE_GPP_BEAMWIDTH).powi(2)).min(THREE_GPP_MAX_ATTENUATION_DB)
        }
        ElementPattern::MetaAtom => {
            if off_boresight.abs() < PI / 2.0 {
                10.0 * (PI / 4.0 * off_boresight.cos()).log10()
            } else {
                f64::NEG_INFINITY
            }
        }
    }
}

/// Directional element gain combining the azimuth and elevation cuts, floored
/// at 8 - 30 = -22 dBi.
pub fn three_gpp_gain(azimuth_off: f64, elevation_off: f64) -> f64 {
    let horizontal = (12.0 * (azimuth_off / THREE_GPP_BEAMWIDTH).powi(2)).min(THREE_GPP_MAX_ATTENUATION_DB);
    let vertical = (12.0 * (elevation_off / THREE_GPP_BEAMWIDTH).powi(2)).min(THREE_GPP_MAX_ATTENUATION_DB);
    THREE_GPP_MAX_GAIN_DBI - (horizontal + vertical).min(THREE_GPP_MAX_ATTENUATION_DB)
}

/// Pattern roll-off relative to boresight (<= 0 dB). Panels are credited
/// with their array gain; the element pattern only tapers it off-axis.
pub fn panel_taper(azimuth_off: f64, elevation_off: f64) -> f64 {
    three_gpp_gain(azimuth_off, elevation_off) - THREE_GPP_MAX_GAIN_DBI
}

pub fn fspl(distance: f64, wavelength: f64) -> f64 {
    20.0 * (4.0 * PI * distance / wavelength).log10()
}

/// Probability that a link of horizontal length `link_len` is shadowed by a
/// moving blocker: `a / (a + mu)` with arrival rate
/// `a = (2/pi) density velocity len (h_B - h_low) / (h_high - h_low)`.
pub fn blockage_prob(link_len: f64, params: &LinkBudgetParams, h_tx: f64, h_rx: f64) -> f64 {
    let (hi, lo) = if h_tx >= h_rx { (h_tx, h_rx) } else { (h_rx, h_tx) };
    let ratio = if hi - lo > 1e-12 {
        ((params.blocker_height_m - lo) / (hi - lo)).clamp(0.0, 1.0)
    } else if params.blocker_height_m > lo {
        1.0
    } else {
        0.0
    };
    let arrival = 2.0 / PI * params.blocker_density_per_m2 * params.blocker_velocity_mps * link_len.max(0.0) * ratio;
    if arrival <= 0.0 {
        return 0.0;
    }
    let departure = 1.0 / params.blockage_duration_s;
    arrival / (arrival + departure)
}

/// Blocked, unblocked and long-term SNR of one link, all in dB.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkSnr {
    pub gamma0: f64,
    pub gamma_blocked: f64,
    pub p_block: f64,
    pub gamma_bar: f64,
}

impl LinkSnr {
    pub const UNAVAILABLE: LinkSnr = LinkSnr {
        gamma0: f64::NEG_INFINITY,
        gamma_blocked: f64::NEG_INFINITY,
        p_block: 0.0,
        gamma_bar: f64::NEG_INFINITY,
    };

    pub fn is_available(&self) -> bool {
        self.gamma_bar > f64::NEG_INFINITY
    }
}

/// Averages blocked and unblocked SNR in linear power.
pub fn longterm_snr(gamma0: f64, p_block: f64, attenuation: f64) -> LinkSnr {
    if gamma0 == f64::NEG_INFINITY {
        return LinkSnr { p_block, ..LinkSnr::UNAVAILABLE };
    }
    let gamma_blocked = gamma0 - attenuation;
    let linear = p_block * db_to_lin(gamma_blocked) + (1.0 - p_block) * db_to_lin(gamma0);
    LinkSnr { gamma0, gamma_blocked, p_block, gamma_bar: lin_to_db(linear) }
}

/// Composes independent per-hop blockage probabilities.
pub fn combined_blockage(hops: &[f64]) -> f64 {
    1.0 - hops.iter().map(|p| 1.0 - p).product::<f64>()
}

pub fn db_to_lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn lin_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

/// Device configuration; decides which budget applies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DeviceConfig {
    /// Reflective surface with `cells` unit cells.
    Ris { cells: u32, beta_r: f64 },
    /// Simultaneously transmitting and reflecting surface.
    Star { cells: u32, beta_r: f64, beta_t: f64 },
    /// Two-panel network-controlled repeater.
    Ncr { elements: u32, gain_db: f64, serve_azimuth: f64 },
    /// Three-panel repeater: one donor panel and two serving panels of
    /// `elements / 2` each, all 120 degrees apart.
    TriNcr { elements: u32, gain_db: f64, serve_azimuths: [f64; 2] },
}

impl DeviceConfig {
    pub fn validate(&self) -> Result<(), ChannelError> {
        let fail = |m: String| Err(ChannelError::InvalidConfig(m));
        match *self {
            DeviceConfig::Ris { cells, beta_r } => {
                if cells == 0 || !(0.0..=1.0).contains(&beta_r) {
                    return fail(format!("RIS needs cells > 0 and beta_r in [0,1], got {cells}, {beta_r}"));
                }
            }
            DeviceConfig::Star { cells, beta_r, beta_t } => {
                if cells == 0 || !(beta_r >= 0.0 && beta_t >= 0.0 && beta_r + beta_t <= 1.0 + 1e-12) {
                    return fail(format!("STAR needs cells > 0 and beta_r + beta_t <= 1, got {beta_r} + {beta_t}"));
                }
            }
            DeviceConfig::Ncr { elements, gain_db, serve_azimuth } => {
                if elements == 0 || gain_db.is_nan() || !serve_azimuth.is_finite() {
                    return fail("NCR needs elements > 0 and a finite orientation".into());
                }
            }
            DeviceConfig::TriNcr { elements, gain_db, serve_azimuths } => {
                if elements < 2 || elements % 2 != 0 || gain_db.is_nan() {
                    return fail(format!("3-sector NCR needs an even element count, got {elements}"));
                }
                let sep = angle_between(serve_azimuths[0], serve_azimuths[1]);
                if (sep - PANEL_SEPARATION).abs() > 1e-6 {
                    return fail(format!("3-sector NCR serving panels must be 120 deg apart, got {:.3} deg", sep.to_degrees()));
                }
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match self {
            DeviceConfig::Ris { .. } => "RIS",
            DeviceConfig::Star { .. } => "STAR",
            DeviceConfig::Ncr { .. } => "NCR",
            DeviceConfig::TriNcr { .. } => "3SNCR",
        }
    }
}

/// Unsigned angle between two azimuths, in `[0, pi]`.
pub fn angle_between(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    if d > PI {
        2.0 * PI - d
    } else {
        d
    }
}

/// One line-of-sight hop with the gains of both ends, dB.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hop {
    pub distance: f64,
    pub tx_gain_db: f64,
    pub rx_gain_db: f64,
}

impl Hop {
    /// Net gain of the hop including free-space loss.
    pub fn gain_db(&self, wavelength: f64) -> f64 {
        self.tx_gain_db + self.rx_gain_db - fspl(self.distance, wavelength)
    }
}

/// Unblocked SNR of a direct link.
pub fn direct_gamma0(params: &LinkBudgetParams, hop: &Hop) -> f64 {
    params.bs_transmit_power_dbm + hop.gain_db(params.wavelength()) - params.noise_power_dbm
}

/// Inputs of the metasurface (RIS or STAR) cascaded budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetasurfaceBudget {
    pub bs_gain_db: f64,
    pub ue_gain_db: f64,
    pub cells: u32,
    /// Power fraction steered toward the receiver side (beta_r or beta_t).
    pub beta: f64,
    pub incidence_gain_db: f64,
    pub departure_gain_db: f64,
    pub d_in: f64,
    pub d_out: f64,
}

impl MetasurfaceBudget {
    pub fn gamma0(&self, params: &LinkBudgetParams) -> f64 {
        if self.beta <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let lambda = params.wavelength();
        params.bs_transmit_power_dbm + self.bs_gain_db + self.ue_gain_db + 20.0 * f64::from(self.cells).log10()
            + self.incidence_gain_db
            + self.departure_gain_db
            + 10.0 * self.beta.log10()
            - fspl(self.d_in, lambda)
            - fspl(self.d_out, lambda)
            - params.noise_power_dbm
    }
}

/// Inputs of the amplify-and-forward repeater budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelayBudget {
    pub bs_gain_db: f64,
    /// Donor panel gain toward the base station.
    pub rx_panel_gain_db: f64,
    /// Serving panel gain toward the user.
    pub tx_panel_gain_db: f64,
    pub ue_gain_db: f64,
    pub amplification_db: f64,
    pub d_in: f64,
    pub d_out: f64,
}

/// Power levels at the user behind a repeater, dBm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelayLevels {
    /// Signal received at the repeater.
    pub relay_input_dbm: f64,
    pub signal_dbm: f64,
    pub amplified_noise_dbm: f64,
    pub thermal_noise_dbm: f64,
}

impl RelayBudget {
    pub fn levels(&self, params: &LinkBudgetParams) -> RelayLevels {
        let lambda = params.wavelength();
        let relay_input_dbm = params.bs_transmit_power_dbm + self.bs_gain_db + self.rx_panel_gain_db - fspl(self.d_in, lambda);
        let out = self.amplification_db + self.tx_panel_gain_db + self.ue_gain_db - fspl(self.d_out, lambda);
        RelayLevels {
            relay_input_dbm,
            signal_dbm: relay_input_dbm + out,
            amplified_noise_dbm: params.relay_noise_dbm() + out,
            thermal_noise_dbm: params.noise_power_dbm,
        }
    }

    /// `g rho h / (g sigma_v h + sigma_n)`; the forwarded relay noise is kept.
    pub fn gamma0(&self, params: &LinkBudgetParams) -> f64 {
        if self.amplification_db == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        let l = self.levels(params);
        let noise = db_to_lin(l.amplified_noise_dbm) + db_to_lin(l.thermal_noise_dbm);
        l.signal_dbm - lin_to_db(noise)
    }
}

/// Base-station gain toward `target`: full array gain, tapered in elevation.
/// The site is assumed sectorized so any azimuth sees a boresight panel.
fn bs_gain_toward(scenario: &Scenario, target: &Point3) -> f64 {
    let bs = &scenario.bs;
    let el = bs.position.elevation_to(target);
    10.0 * (bs.elements() as f64).log10() + panel_taper(0.0, el)
}

fn unit(from: &Point3, to: &Point3) -> [f64; 3] {
    let d = [to.x - from.x, to.y - from.y, to.z - from.z];
    let n = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
    [d[0] / n, d[1] / n, d[2] / n]
}

fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn hop_blockage(params: &LinkBudgetParams, a: &Point3, b: &Point3) -> f64 {
    blockage_prob(a.horizontal_distance(b), params, a.z, b.z)
}

/// Long-term SNR of the BS -> test point link.
pub fn snr_direct(scenario: &Scenario, tp: &TestPoint, params: &LinkBudgetParams) -> LinkSnr {
    let bs = scenario.bs.position;
    let ue = tp.position;
    let d = bs.distance(&ue);
    if d <= 0.0 || scenario.los_blocked(&bs, &ue) {
        return LinkSnr::UNAVAILABLE;
    }
    let hop = Hop { distance: d, tx_gain_db: bs_gain_toward(scenario, &ue), rx_gain_db: params.ue_gain_db };
    longterm_snr(direct_gamma0(params, &hop), hop_blockage(params, &bs, &ue), params.blockage_attenuation_db)
}

/// Long-term SNR of BS -> surface -> test point with optimal phases.
///
/// A RIS only serves its outward half-space, and needs the base station
/// there as well. A STAR faces the base station: users on the base-station
/// side are reached in reflection (`beta_r`), users behind it in
/// transmission (`beta_t`).
pub fn snr_metasurface(
    scenario: &Scenario,
    site: &CandidateSite,
    cfg: &DeviceConfig,
    tp: &TestPoint,
    params: &LinkBudgetParams,
) -> Result<LinkSnr, ChannelError> {
    cfg.validate()?;
    let bs = scenario.bs.position;
    let s = site.position;
    let ue = tp.position;
    let (cells, normal, beta_r, beta_t) = match (*cfg, site.mount) {
        (DeviceConfig::Ris { cells, beta_r }, Mount::Wall { normal }) => (cells, [normal[0], normal[1], 0.0], beta_r, 0.0),
        (DeviceConfig::Star { cells, beta_r, beta_t }, Mount::Roof) => {
            let az = s.azimuth_to(&bs);
            (cells, [az.cos(), az.sin(), 0.0], beta_r, beta_t)
        }
        (DeviceConfig::Ris { .. }, Mount::Roof) => return Err(ChannelError::MountMismatch { device: "RIS", mount: "roof" }),
        (DeviceConfig::Star { .. }, Mount::Wall { .. }) => return Err(ChannelError::MountMismatch { device: "STAR", mount: "wall" }),
        _ => return Err(ChannelError::InvalidConfig(format!("{} is not a metasurface", cfg.name()))),
    };
    let (d_in, d_out) = (bs.distance(&s), s.distance(&ue));
    if d_in <= 0.0 || d_out <= 0.0 {
        return Ok(LinkSnr::UNAVAILABLE);
    }
    let cos_in = dot3(unit(&s, &bs), normal);
    let cos_out_signed = dot3(unit(&s, &ue), normal);
    if cos_in <= ANGLE_EPS {
        return Ok(LinkSnr::UNAVAILABLE);
    }
    let (cos_out, beta) = if cos_out_signed > ANGLE_EPS {
        (cos_out_signed, beta_r)
    } else if cos_out_signed < -ANGLE_EPS && beta_t > 0.0 {
        (-cos_out_signed, beta_t)
    } else {
        return Ok(LinkSnr::UNAVAILABLE);
    };
    if beta <= 0.0 || scenario.los_blocked(&bs, &s) || scenario.los_blocked(&s, &ue) {
        return Ok(LinkSnr::UNAVAILABLE);
    }
    let budget = MetasurfaceBudget {
        bs_gain_db: bs_gain_toward(scenario, &s),
        ue_gain_db: params.ue_gain_db,
        cells,
        beta,
        incidence_gain_db: element_gain(ElementPattern::MetaAtom, cos_in.clamp(-1.0, 1.0).acos()),
        departure_gain_db: element_gain(ElementPattern::MetaAtom, cos_out.clamp(-1.0, 1.0).acos()),
        d_in,
        d_out,
    };
    let p_block = combined_blockage(&[hop_blockage(params, &bs, &s), hop_blockage(params, &s, &ue)]);
    Ok(longterm_snr(budget.gamma0(params), p_block, params.blockage_attenuation_db))
}

/// Long-term SNR of BS -> repeater -> test point.
///
/// The two-panel repeater steers its donor panel at the base station and
/// serves a 120-degree cone around `serve_azimuth`, which must sit at least
/// 120 degrees away from the donor direction. The three-panel repeater has a
/// fixed donor panel opposite the bisector of its serving panels; the base
/// station must fall inside the donor cone.
pub fn snr_ncr(
    scenario: &Scenario,
    site: &CandidateSite,
    cfg: &DeviceConfig,
    tp: &TestPoint,
    params: &LinkBudgetParams,
) -> Result<LinkSnr, ChannelError> {
    cfg.validate()?;
    if !matches!(site.mount, Mount::Roof) {
        return Err(ChannelError::MountMismatch { device: cfg.name(), mount: "wall" });
    }
    let bs = scenario.bs.position;
    let s = site.position;
    let ue = tp.position;
    let (d_in, d_out) = (bs.distance(&s), s.distance(&ue));
    if d_in <= 0.0 || d_out <= 0.0 {
        return Ok(LinkSnr::UNAVAILABLE);
    }
    let bs_az = s.azimuth_to(&bs);
    let tp_az = s.azimuth_to(&ue);
    let bs_el = s.elevation_to(&bs);
    let tp_el = s.elevation_to(&ue);
    let in_cone = |off: f64| off <= SERVING_HALF_ANGLE + ANGLE_EPS;

    let (elements, amplification_db, rx_taper, tx_elements, tx_off) = match *cfg {
        DeviceConfig::Ncr { elements, gain_db, serve_azimuth } => {
            if angle_between(serve_azimuth, bs_az) < PANEL_SEPARATION - ANGLE_EPS {
                return Ok(LinkSnr::UNAVAILABLE);
            }
            (elements, gain_db, panel_taper(0.0, bs_el), elements, angle_between(tp_az, serve_azimuth))
        }
        DeviceConfig::TriNcr { elements, gain_db, serve_azimuths } => {
            let donor = donor_azimuth(serve_azimuths);
            let donor_off = angle_between(bs_az, donor);
            if !in_cone(donor_off) {
                return Ok(LinkSnr::UNAVAILABLE);
            }
            let tx_off = serve_azimuths
                .iter()
                .map(|&a| angle_between(tp_az, a))
                .fold(f64::INFINITY, f64::min);
            (elements, gain_db, panel_taper(donor_off, bs_el), elements / 2, tx_off)
        }
        _ => return Err(ChannelError::InvalidConfig(format!("{} is not a repeater", cfg.name()))),
    };
    if !in_cone(tx_off) || scenario.los_blocked(&bs, &s) || scenario.los_blocked(&s, &ue) {
        return Ok(LinkSnr::UNAVAILABLE);
    }
    let budget = RelayBudget {
        bs_gain_db: bs_gain_toward(scenario, &s),
        rx_panel_gain_db: 10.0 * f64::from(elements).log10() + rx_taper,
        tx_panel_gain_db: 10.0 * f64::from(tx_elements).log10() + panel_taper(tx_off, tp_el),
        ue_gain_db: params.ue_gain_db,
        amplification_db,
        d_in,
        d_out,
    };
    let p_block = combined_blockage(&[hop_blockage(params, &bs, &s), hop_blockage(params, &s, &ue)]);
    Ok(longterm_snr(budget.gamma0(params), p_block, params.blockage_attenuation_db))
}

/// Donor-panel azimuth of a three-panel repeater: opposite the bisector of
/// the two serving panels.
pub fn donor_azimuth(serve_azimuths: [f64; 2]) -> f64 {
    let [a, b] = serve_azimuths;
    let bisector = (a.sin() + b.sin()).atan2(a.cos() + b.cos());
    (bisector + PI).rem_euclid(2.0 * PI)
}

/// Dispatches to the budget matching the device technology.
pub fn snr_relayed(
    scenario: &Scenario,
    site: &CandidateSite,
    cfg: &DeviceConfig,
    tp: &TestPoint,
    params: &LinkBudgetParams,
) -> Result<LinkSnr, ChannelError> {
    match cfg {
        DeviceConfig::Ris { .. } | DeviceConfig::Star { .. } => snr_metasurface(scenario, site, cfg, tp, params),
        DeviceConfig::Ncr { .. } | DeviceConfig::TriNcr { .. } => snr_ncr(scenario, site, cfg, tp, params),
    }
}
