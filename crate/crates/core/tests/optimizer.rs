use proptest::prelude::*;
use sreplan::optimizer::BRUTE_FORCE_LIMIT;
use sreplan::*;

fn tables_strategy() -> impl Strategy<Value = (ActivationTables, Vec<f64>)> {
    (1usize..=3, 1usize..=7, 1usize..=10, 0.1..0.6f64, any::<u64>()).prop_map(|(n_specs, n_sites, n_tps, density, seed)| {
        use rand::{RngExt, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let delta_bs = (0..n_tps).map(|_| rng.random_bool(density / 3.0)).collect();
        let delta = (0..n_tps * n_sites * n_specs).map(|_| rng.random_bool(density)).collect();
        let costs = (0..n_sites * n_specs).map(|_| rng.random_range(0.5..=4.0)).collect();
        (ActivationTables::from_delta(n_tps, n_sites, n_specs, delta_bs, delta), costs)
    })
}

fn cost(inst: &PlanInstance<'_>) -> f64 {
    solve_exact(inst).map(|s| s.total_cost).unwrap_or(f64::INFINITY)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn fcmc_matches_brute_force((tables, costs) in tables_strategy(), k in 1u32..=3, per_site: bool) {
        let inst = PlanInstance::new(PlanKind::Fcmc { k }, &tables, costs).unwrap().with_one_device_per_site(per_site);
        match (solve_exact(&inst), brute_force(&inst, BRUTE_FORCE_LIMIT)) {
            (Ok(e), Ok(b)) => {
                prop_assert!((e.total_cost - b.total_cost).abs() < 1e-9);
                prop_assert!(e.optimal);
                prop_assert_eq!(inst.check(&e), Ok(()));
                prop_assert_eq!(e.covered.len(), tables.n_tps);
                match solve_greedy(&inst) {
                    Ok(g) => {
                        prop_assert_eq!(inst.check(&g), Ok(()));
                        prop_assert!(g.total_cost >= e.total_cost - 1e-9);
                    }
                    // Site conflicts can strand the heuristic, never without them.
                    Err(PlanError::HeuristicStuck) => prop_assert!(per_site),
                    Err(other) => prop_assert!(false, "greedy: {other}"),
                }
            }
            (Err(PlanError::Infeasible { uncoverable: a }), Err(PlanError::Infeasible { .. })) => {
                prop_assert!(!a.is_empty());
            }
            (e, b) => prop_assert!(false, "exact {:?} brute {:?}", e.is_ok(), b.is_ok()),
        }
    }

    #[test]
    fn mbcc_matches_brute_force((tables, costs) in tables_strategy(), share in 0.0..1.0f64, per_site: bool) {
        let budget = share * costs.iter().sum::<f64>();
        let inst = PlanInstance::new(PlanKind::Mbcc { budget }, &tables, costs).unwrap().with_one_device_per_site(per_site);
        let e = solve_exact(&inst).unwrap();
        let b = brute_force(&inst, BRUTE_FORCE_LIMIT).unwrap();
        prop_assert_eq!(e.objective, b.objective);
        prop_assert!(e.total_cost <= budget + 1e-9);
        prop_assert_eq!(inst.check(&e), Ok(()));
        let g = solve_greedy(&inst).unwrap();
        prop_assert_eq!(inst.check(&g), Ok(()));
        prop_assert!(g.objective <= e.objective);
    }

    #[test]
    fn demand_and_budget_are_monotone((tables, costs) in tables_strategy()) {
        let fcmc = |k| cost(&PlanInstance::new(PlanKind::Fcmc { k }, &tables, costs.clone()).unwrap());
        prop_assert!(fcmc(2) >= fcmc(1));
        prop_assert!(fcmc(3) >= fcmc(2));
        let total: f64 = costs.iter().sum();
        let mut last = -1.0;
        for step in 0..=8 {
            let budget = total * f64::from(step) / 8.0;
            let got = solve_exact(&PlanInstance::new(PlanKind::Mbcc { budget }, &tables, costs.clone()).unwrap()).unwrap().objective;
            prop_assert!(got >= last);
            last = got;
        }
        let reachable = (0..tables.n_tps).filter(|&t| tables.delta_bs[t] || tables.active_pairs(t).next().is_some()).count();
        prop_assert!(last as usize <= reachable);
    }
}

#[test]
fn fixture_plans_are_consistent() {
    let sc = load_scenario(include_str!("fixtures/manhattan_3x3.json")).unwrap();
    let cat = CatalogConfig { flavor: Flavor::ReducedSet, ..Default::default() }.build().unwrap();
    let all = compute_activation(&sc, &cat, &LinkBudgetParams::default(), 10.0);
    let costs: Vec<f64> = (0..all.n_sites).flat_map(|_| cat.specs.iter().map(|s| s.cost)).collect();
    let keep = plannable_tps(&all, &costs, 1, true).unwrap();
    assert!(keep.len() > all.n_tps / 2);
    let t = all.select_tps(&keep);
    let inst = PlanInstance::from_catalog(PlanKind::Fcmc { k: 1 }, &t, &cat).unwrap();
    let exact = solve_exact(&inst).unwrap();
    let greedy = solve_greedy(&inst).unwrap();
    assert!(exact.optimal && exact.bound_gap.abs() < 1e-9);
    assert_eq!(inst.check(&exact), Ok(()));
    assert!(greedy.total_cost >= exact.total_cost - 1e-9);

    // Spending exactly the optimal cost covers everything.
    let dual = PlanInstance::from_catalog(PlanKind::Mbcc { budget: exact.total_cost }, &t, &cat).unwrap();
    assert_eq!(solve_exact(&dual).unwrap().covered.len(), t.n_tps);

    // Unfiltered tables include unreachable points, which are named.
    let raw = PlanInstance::from_catalog(PlanKind::Fcmc { k: 1 }, &all, &cat).unwrap();
    if let Err(PlanError::Infeasible { uncoverable }) = solve_exact(&raw) {
        assert!(uncoverable.iter().all(|id| all.tp_ids.contains(id)));
        assert!(!uncoverable.is_empty());
    }
}
