use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sreplan::channel::*;

fn params() -> LinkBudgetParams {
    LinkBudgetParams::default()
}

fn relay(gain: f64) -> RelayBudget {
    let panel = 10.0 * 72f64.log10();
    RelayBudget {
        bs_gain_db: 10.0 * 192f64.log10(),
        rx_panel_gain_db: panel,
        tx_panel_gain_db: panel,
        ue_gain_db: 0.0,
        amplification_db: gain,
        d_in: 100.0,
        d_out: 100.0,
    }
}

#[test]
fn fspl_golden_and_slope() {
    let lambda = params().wavelength();
    assert!((fspl(100.0, lambda) - 101.39).abs() < 0.01);
    assert!((fspl(1000.0, lambda) - fspl(100.0, lambda) - 20.0).abs() < 1e-9);
}

#[test]
fn metasurface_gain_grows_with_square_of_cells() {
    let p = params();
    let at = |cells| {
        MetasurfaceBudget {
            bs_gain_db: 0.0,
            ue_gain_db: 0.0,
            cells,
            beta: 1.0,
            incidence_gain_db: 0.0,
            departure_gain_db: 0.0,
            d_in: 50.0,
            d_out: 80.0,
        }
        .gamma0(&p)
    };
    for m in [100, 2500, 10_000, 40_000] {
        assert!((at(2 * m) - at(m) - 20.0 * 2f64.log10()).abs() < 1e-9);
    }
}

#[test]
fn star_split_costs_three_db() {
    let p = params();
    let b = |beta| MetasurfaceBudget {
        bs_gain_db: 0.0,
        ue_gain_db: 0.0,
        cells: 10_000,
        beta,
        incidence_gain_db: 0.0,
        departure_gain_db: 0.0,
        d_in: 100.0,
        d_out: 100.0,
    };
    assert!((b(1.0).gamma0(&p) - b(0.5).gamma0(&p) - 10.0 * 2f64.log10()).abs() < 1e-9);
    assert_eq!(b(0.0).gamma0(&p), f64::NEG_INFINITY);
}

#[test]
fn relay_saturates_at_first_hop_snr() {
    let p = params();
    let l = relay(55.0).levels(&p);
    let first_hop = l.relay_input_dbm - p.relay_noise_dbm();
    let mut last = f64::NEG_INFINITY;
    for g in (0..=200).step_by(10) {
        let snr = relay(f64::from(g)).gamma0(&p);
        assert!(snr >= last - 1e-12, "SNR fell at g={g}");
        assert!(snr <= first_hop + 1e-9);
        last = snr;
    }
    assert!((last - first_hop).abs() < 0.01);
    assert_eq!(relay(f64::NEG_INFINITY).gamma0(&p), f64::NEG_INFINITY);
}

#[test]
fn blockage_golden_and_shape() {
    let p = params();
    assert!((blockage_prob(100.0, &p, 10.0, 1.5) - 0.3101).abs() < 5e-4);
    assert_eq!(blockage_prob(0.0, &p, 10.0, 1.5), 0.0);
    // Both ends above the blocker: never shadowed.
    assert_eq!(blockage_prob(100.0, &p, 10.0, 5.0), 0.0);
    let mut last = 0.0;
    for len in [10.0, 50.0, 100.0, 400.0, 2000.0] {
        let pb = blockage_prob(len, &p, 10.0, 1.5);
        assert!(pb > last && pb < 1.0);
        last = pb;
    }
}

/// Blockers of density `rho` walk straight lines in uniform directions at
/// speed `v`; count crossings of a fixed segment per unit time.
#[test]
fn crossing_rate_matches_two_over_pi() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (len, v, t) = (10.0, 1.0, 1.0);
    let half = len / 2.0;
    // Only blockers within v*t of the segment can reach it.
    let (w, h) = (len + 4.0 * v * t, 4.0 * v * t);
    let rho = 2.0;
    let trials = 20_000;
    let mut crossings = 0u64;
    for _ in 0..trials {
        let n = (rho * w * h) as usize;
        for _ in 0..n {
            let x = rng.random_range(-w / 2.0..w / 2.0);
            let y = rng.random_range(-h / 2.0..h / 2.0);
            let theta = rng.random_range(0.0..2.0 * PI);
            let (dx, dy) = (v * t * theta.cos(), v * t * theta.sin());
            let y1 = y + dy;
            if (y > 0.0) != (y1 > 0.0) {
                let x_cross = x + dx * (-y / dy);
                crossings += u64::from(x_cross.abs() <= half);
            }
        }
    }
    let rate = crossings as f64 / (trials as f64 * t);
    let expected = 2.0 / PI * rho * v * len;
    assert!((rate / expected - 1.0).abs() < 0.02, "rate {rate} vs {expected}");
}

/// Alternating renewal: free periods end at rate `a`, blocked periods at
/// rate `mu`. The blocked time fraction is `a / (a + mu)`.
#[test]
fn on_off_fraction_matches_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (a, mu) = (0.09, 0.2);
    let exp = |rng: &mut ChaCha8Rng, rate: f64| -(1.0 - rng.random::<f64>()).ln() / rate;
    let (mut free, mut blocked) = (0.0, 0.0);
    for _ in 0..200_000 {
        free += exp(&mut rng, a);
        blocked += exp(&mut rng, mu);
    }
    let frac = blocked / (free + blocked);
    assert!((frac - a / (a + mu)).abs() < 0.005, "{frac}");
}

#[test]
fn longterm_snr_is_a_linear_mix() {
    for (g0, pb) in [(20.0, 0.0), (20.0, 0.3), (5.0, 0.9), (-3.0, 1.0)] {
        let s = longterm_snr(g0, pb, 20.0);
        assert!(s.gamma_bar <= g0 + 1e-12 && s.gamma_bar >= s.gamma_blocked - 1e-12);
        let lin = pb * db_to_lin(g0 - 20.0) + (1.0 - pb) * db_to_lin(g0);
        assert!((db_to_lin(s.gamma_bar) - lin).abs() < 1e-9 * lin);
    }
    assert_eq!(longterm_snr(20.0, 0.0, 20.0).gamma_bar, 20.0);
    assert!(!longterm_snr(f64::NEG_INFINITY, 0.2, 20.0).is_available());
    assert!((combined_blockage(&[0.3, 0.5]) - 0.65).abs() < 1e-12);
}

#[test]
fn matched_array_gain_is_element_count() {
    let lambda = params().wavelength();
    let geom = ArrayGeometry::new(8, 12, 0.5, ElementPattern::ThreeGpp);
    let a = array_response(&geom, 0.3, 0.1, lambda);
    assert_eq!(a.len(), 96);
    let coherent: Complex64 = a.iter().map(|x| x * x.conj()).sum();
    assert!((coherent.norm() - 96.0).abs() < 1e-9);
    let off = array_response(&geom, 0.9, 0.1, lambda);
    let mismatched: Complex64 = a.iter().zip(&off).map(|(x, y)| x * y.conj()).sum();
    assert!(mismatched.norm() < 96.0 / 2.0);
}

#[test]
fn element_patterns() {
    assert!((element_gain(ElementPattern::MetaAtom, 0.0) - 10.0 * (PI / 4.0).log10()).abs() < 1e-12);
    assert_eq!(element_gain(ElementPattern::MetaAtom, PI / 2.0), f64::NEG_INFINITY);
    assert_eq!(element_gain(ElementPattern::ThreeGpp, 0.0), 8.0);
    assert_eq!(panel_taper(0.0, 0.0), 0.0);
    assert_eq!(three_gpp_gain(PI, PI / 2.0), 8.0 - 30.0);
}
