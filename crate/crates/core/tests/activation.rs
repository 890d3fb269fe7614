use sreplan::activation::{ActivationTables, TableError};
use sreplan::*;

fn fixture() -> (Scenario, Catalog) {
    let sc = load_scenario(include_str!("fixtures/manhattan_3x3.json")).unwrap();
    let cat = CatalogConfig { flavor: Flavor::FullSet, ..Default::default() }.build().unwrap();
    (sc, cat)
}

#[test]
fn active_sets_shrink_as_threshold_rises() {
    let (sc, cat) = fixture();
    let base = compute_activation(&sc, &cat, &LinkBudgetParams::default(), -20.0);
    let mut prev = base.clone();
    for g in [-10.0, 0.0, 10.0, 20.0, 30.0] {
        let t = base.rethreshold(g);
        assert_eq!(t, compute_activation(&sc, &cat, &LinkBudgetParams::default(), g));
        for (now, before) in t.delta.iter().zip(&prev.delta).chain(t.delta_bs.iter().zip(&prev.delta_bs)) {
            assert!(!now | before, "activation appeared when the threshold rose to {g}");
        }
        prev = t;
    }
}

#[test]
fn fixture_has_useful_tables() {
    let (sc, cat) = fixture();
    let t = compute_activation(&sc, &cat, &LinkBudgetParams::default(), 10.0);
    let stats = t.coverage_stats();
    assert_eq!(stats.tps, 112);
    assert!(stats.bs_covered > 0 && stats.bs_covered < stats.coverable);
    assert!(stats.fill_ratio > 0.5, "{stats:?}");
    assert!(t.delta.iter().any(|&b| b));
    for tp in 0..t.n_tps {
        for (c, d) in t.active_pairs(tp) {
            assert!(t.snr_at(tp, c, d) >= 10.0);
        }
    }
}

#[test]
fn binary_tables_round_trip() {
    let (sc, cat) = fixture();
    let t = compute_activation(&sc, &cat, &LinkBudgetParams::default(), 0.0);
    let mut buf = Vec::new();
    t.write_binary(&mut buf).unwrap();
    assert_eq!(ActivationTables::read_binary(buf.as_slice()).unwrap(), t);

    let mut bad = buf.clone();
    bad[0] = b'X';
    assert!(matches!(ActivationTables::read_binary(bad.as_slice()), Err(TableError::BadMagic)));
    assert!(ActivationTables::read_binary(&buf[..buf.len() / 2]).is_err());
}

#[test]
fn selection_keeps_rows() {
    let (sc, cat) = fixture();
    let t = compute_activation(&sc, &cat, &LinkBudgetParams::default(), 10.0);
    let pick = [5, 0, 77];
    let s = t.select_tps(&pick);
    for (row, &tp) in pick.iter().enumerate() {
        assert_eq!(s.tp_ids[row], t.tp_ids[tp]);
        assert_eq!(s.delta_bs[row], t.delta_bs[tp]);
        assert_eq!(s.active_pairs(row).collect::<Vec<_>>(), t.active_pairs(tp).collect::<Vec<_>>());
    }
}
