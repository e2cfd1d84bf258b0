//! Acceptance criteria. Each test prints one `criterion N ... PASS|FAIL` line.
//!
//! Tolerances: shares and costs on the worked example to 0.01; objective
//! equality to 1e-6; budget balance to 1e-9; price ratios to 1e-6.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ctg_core::equilibria::{
    all_matchings, exists_equilibrium, exists_joint_equilibrium, greedy_rue, is_tie_free,
    ordinal_to_cardinal, verify, EXHAUSTIVE_LIMIT,
};
use ctg_core::feasibility::{enumerate_feasible_groups, FeasibilityParams, Metric};
use ctg_core::fixtures::{
    example1_ordinal, five_player_ordinal, random_catalog, random_requests, random_table,
    worked_example_feasibility, worked_example_instance,
};
use ctg_core::protocols::{build_share_table, Protocol, ResidualWeighting};
use ctg_core::report::{coverage_ratio, run_on_catalog, Case};
use ctg_core::scenario::{generate_demand, DemandConfig};
use ctg_core::solver::{brute_force_solve, notion_spec, solve, Objective, SolveSpec, SolveStatus};
use ctg_core::{CostParams, CostShareTable, EquilibriumNotion, GroupCatalog, Matching, Members};

const SHARE_TOL: f64 = 0.01;
const OBJ_TOL: f64 = 1e-6;
const BUDGET_TOL: f64 = 1e-9;
const RATIO_TOL: f64 = 1e-6;

fn line(n: u32, name: &str, failures: &[String], detail: &str) {
    let verdict = if failures.is_empty() { "PASS" } else { "FAIL" };
    println!("criterion {n} ({name}): {verdict} {detail}");
    for f in failures.iter().take(20) {
        println!("    {f}");
    }
}

fn finish(n: u32, name: &str, failures: Vec<String>, detail: &str) {
    line(n, name, &failures, detail);
    assert!(failures.is_empty(), "criterion {n} failed with {} violation(s)", failures.len());
}

fn share(cat: &GroupCatalog, t: &CostShareTable, g: &[usize], rider: usize) -> f64 {
    let gi = cat.index_of(&Members::new(g.iter().copied())).expect("group in catalog");
    t.share(cat, gi, rider).expect("rider in group")
}

fn geometric_catalog(rng: &mut ChaCha8Rng, n: usize, capacity: usize) -> GroupCatalog {
    let requests = random_requests(rng, n, 3.0, 300.0);
    let feas = FeasibilityParams {
        capacity,
        detour_factor: 1.5,
        metric: Metric::Euclidean,
        speed: 30.0,
    };
    enumerate_feasible_groups(&requests, &CostParams::default(), &feas).expect("generated catalog")
}

/// Mixed corpus: geometric catalogs and synthetic closed catalogs.
fn corpus(seed: u64, count: usize, max_n: usize) -> Vec<GroupCatalog> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|k| {
            let n = rng.gen_range(3..=max_n);
            let capacity = rng.gen_range(2..=4);
            if k % 2 == 0 {
                geometric_catalog(&mut rng, n, capacity)
            } else {
                random_catalog(&mut rng, n, capacity, 0.6)
            }
        })
        .collect()
}

fn all_protocols() -> Vec<Protocol> {
    vec![
        Protocol::Externality,
        Protocol::OverchargedExternality { d: None },
        Protocol::Residual(ResidualWeighting::Proportional),
        Protocol::Residual(ResidualWeighting::Uniform),
        Protocol::Subgroup,
    ]
}

#[test]
fn criterion_1_worked_example() {
    let start = Instant::now();
    let inst = worked_example_instance();
    let cat = enumerate_feasible_groups(&inst.requests, &inst.params, &worked_example_feasibility())
        .expect("worked example catalog");
    let mut failures = Vec::new();
    let mut check = |what: String, got: f64, want: f64| {
        if (got - want).abs() > SHARE_TOL {
            failures.push(format!("{what}: got {got:.4}, want {want}"));
        }
    };

    let totals: [(&[usize], f64); 7] = [
        (&[0], 23.0),
        (&[1], 19.0),
        (&[2], 9.24),
        (&[0, 1], 31.0),
        (&[0, 2], 31.96),
        (&[1, 2], 26.08),
        (&[0, 1, 2], 40.44),
    ];
    for (m, want) in totals {
        let members = Members::new(m.iter().copied());
        let got = cat.total_cost(&members).unwrap_or(f64::NAN);
        check(format!("c({members})"), got, want);
    }

    let residual = build_share_table(&cat, Protocol::Residual(ResidualWeighting::Proportional)).unwrap();
    let externality = build_share_table(&cat, Protocol::Externality).unwrap();
    let subgroup = build_share_table(&cat, Protocol::Subgroup).unwrap();
    let expected: [(&str, &CostShareTable, &[usize], &[f64]); 8] = [
        ("residual", &residual, &[0, 1], &[16.98, 14.02]),
        ("residual", &residual, &[1, 2], &[17.55, 8.53]),
        ("residual", &residual, &[0, 1, 2], &[18.15, 15.0, 7.29]),
        ("externality", &externality, &[0, 1], &[12.0, 8.0]),
        ("externality", &externality, &[0, 1, 2], &[14.36, 8.48, 9.44]),
        ("subgroup", &subgroup, &[0, 1], &[15.5, 15.5]),
        ("subgroup", &subgroup, &[0, 2], &[22.72, 9.24]),
        ("subgroup", &subgroup, &[1, 2], &[16.84, 9.24]),
    ];
    for (name, table, g, want) in expected {
        for (&rider, &w) in g.iter().zip(want) {
            let members = Members::new(g.iter().copied());
            check(format!("{name} {members} rider {rider}"), share(&cat, table, g, rider), w);
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    if elapsed >= 1.0 {
        failures.push(format!("runtime {elapsed:.3}s over 1s"));
    }
    finish(1, "worked example", failures, &format!("in {elapsed:.3}s"));
}

#[test]
fn criterion_2_optimum_is_an_equilibrium() {
    let start = Instant::now();
    let cats = corpus(2024, 120, 10);
    let mut failures = Vec::new();
    let checks: [(Protocol, &[EquilibriumNotion]); 4] = [
        (Protocol::Externality, &[EquilibriumNotion::Rsie]),
        (Protocol::Residual(ResidualWeighting::Proportional), &[EquilibriumNotion::Rue]),
        (Protocol::Residual(ResidualWeighting::Uniform), &[EquilibriumNotion::Rue]),
        (Protocol::Subgroup, &[EquilibriumNotion::Rhe, EquilibriumNotion::Rue]),
    ];
    let mut pooled = 0;
    for (k, cat) in cats.iter().enumerate() {
        let opt = solve(cat, &SolveSpec::unconstrained(cat, Objective::Minimize)).unwrap();
        pooled += (opt.matching.len() < cat.n_riders()) as usize;
        for (protocol, notions) in checks {
            let table = build_share_table(cat, protocol).unwrap();
            for &notion in notions {
                if !verify(&opt.matching, notion, &table, cat).unwrap() {
                    failures.push(format!("instance {k} (n={}): {protocol} optimum is not {notion}", cat.n_riders()));
                }
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    if elapsed >= 60.0 {
        failures.push(format!("runtime {elapsed:.1}s over 60s"));
    }
    finish(
        2,
        "optimum verifies",
        failures,
        &format!("{} instances ({pooled} pooled at the optimum) in {elapsed:.2}s", cats.len()),
    );
}

#[test]
fn criterion_3_budget_properties() {
    let mut cats = corpus(3, 120, 10);
    let inst = worked_example_instance();
    cats.push(enumerate_feasible_groups(&inst.requests, &inst.params, &worked_example_feasibility()).unwrap());
    cats.push(ctg_core::fixtures::worked_example_catalog());
    let mut failures = Vec::new();
    let mut groups_checked = 0;
    for (k, cat) in cats.iter().enumerate() {
        for protocol in all_protocols() {
            if protocol == Protocol::Externality {
                continue;
            }
            let table = build_share_table(cat, protocol).unwrap();
            for g in 0..cat.len() {
                groups_checked += 1;
                let gap = table.group_sum(g) - cat.cost(g);
                let bad = match protocol {
                    Protocol::OverchargedExternality { .. } => gap < -BUDGET_TOL,
                    _ => gap.abs() > BUDGET_TOL,
                };
                if bad {
                    failures.push(format!("instance {k} {protocol} group {}: gap {gap:e}", cat.members(g)));
                }
            }
        }
    }
    finish(3, "budget", failures, &format!("{groups_checked} group tables over {} catalogs", cats.len()));
}

/// Exhaustive oracle: best or worst cost over all matchings that verify.
fn oracle(cat: &GroupCatalog, table: &CostShareTable, matchings: &[Matching], notion: EquilibriumNotion, objective: Objective) -> Option<f64> {
    let costs = matchings
        .iter()
        .filter(|m| verify(m, notion, table, cat).unwrap())
        .map(|m| m.total_cost(cat));
    match objective {
        Objective::Minimize => costs.reduce(f64::min),
        Objective::Maximize => costs.reduce(f64::max),
    }
}

#[test]
fn criterion_4_solver_matches_oracle() {
    let start = Instant::now();
    let cats = corpus(4, 220, 8);
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let notions = [
        EquilibriumNotion::Tne,
        EquilibriumNotion::Rhe,
        EquilibriumNotion::Rue,
        EquilibriumNotion::Rsie,
    ];
    let mut failures = Vec::new();
    let mut comparisons = 0;
    for (k, cat) in cats.iter().enumerate() {
        let table = match k % 4 {
            0 => random_table(&mut rng, cat),
            1 => build_share_table(cat, Protocol::Externality).unwrap(),
            2 => build_share_table(cat, Protocol::Residual(ResidualWeighting::Proportional)).unwrap(),
            _ => build_share_table(cat, Protocol::Subgroup).unwrap(),
        };
        let matchings = all_matchings(cat, EXHAUSTIVE_LIMIT).unwrap();
        for notion in notions {
            for objective in [Objective::Minimize, Objective::Maximize] {
                comparisons += 1;
                let spec = notion_spec(cat, &table, Some(notion), objective).unwrap();
                let fast = solve(cat, &spec).unwrap();
                let brute = brute_force_solve(cat, &spec).unwrap();
                let want = oracle(cat, &table, &matchings, notion, objective);
                let agree = |v: Option<f64>| match (v, want) {
                    (Some(a), Some(b)) => (a - b).abs() <= OBJ_TOL,
                    (None, None) => true,
                    _ => false,
                };
                if !agree(fast.objective_value) || !agree(brute.objective_value) {
                    failures.push(format!(
                        "instance {k} {notion} {objective:?}: solve {:?}, brute {:?}, oracle {want:?}",
                        fast.objective_value, brute.objective_value
                    ));
                }
                if fast.is_optimal() && !verify(&fast.matching, notion, &table, cat).unwrap() {
                    failures.push(format!("instance {k} {notion} {objective:?}: solution fails verify"));
                }
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    if elapsed >= 120.0 {
        failures.push(format!("runtime {elapsed:.1}s over 120s"));
    }
    finish(
        4,
        "solver oracle",
        failures,
        &format!("{} instances, {comparisons} comparisons in {elapsed:.2}s", cats.len()),
    );
}

#[test]
fn criterion_5_counterexamples() {
    let mut failures = Vec::new();
    let ex1 = example1_ordinal();
    let (cat1, t1) = ordinal_to_cardinal(&ex1, 100.0).unwrap();
    if exists_equilibrium(EquilibriumNotion::Tse, &cat1, &t1).unwrap().is_some() {
        failures.push("three-cycle has a strong equilibrium".into());
    }
    if exists_equilibrium(EquilibriumNotion::Rsie, &cat1, &t1).unwrap().is_some() {
        failures.push("three-cycle has an individually stable equilibrium".into());
    }
    let five = five_player_ordinal();
    let (cat5, t5) = ordinal_to_cardinal(&five, 1000.0).unwrap();
    let joint = exists_joint_equilibrium(
        &[EquilibriumNotion::Rhe, EquilibriumNotion::Rue],
        &cat5,
        &t5,
        EXHAUSTIVE_LIMIT,
    )
    .unwrap();
    if let Some(m) = joint {
        failures.push(format!("five-rider ring has a hermetic unmergeable matching {:?}", m.selected()));
    }
    for (name, cat, t) in [("three-cycle", &cat1, &t1), ("five-rider ring", &cat5, &t5)] {
        let g = greedy_rue(cat, t);
        if !verify(&g, EquilibriumNotion::Rue, t, cat).unwrap() {
            failures.push(format!("greedy result on {name} is not RUE"));
        }
    }
    finish(5, "counterexamples", failures, "");
}

#[test]
fn criterion_6_inclusions() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut failures = Vec::new();
    let mut instances = 0;
    let mut matchings_checked = 0;
    let mut tse_seen = 0;
    while instances < 60 {
        let n = rng.gen_range(3..=6);
        let capacity = rng.gen_range(2..=4);
        let cat = random_catalog(&mut rng, n, capacity, 0.7);
        let table = match instances % 3 {
            0 => random_table(&mut rng, &cat),
            1 => build_share_table(&cat, Protocol::Residual(ResidualWeighting::Proportional)).unwrap(),
            _ => build_share_table(&cat, Protocol::Externality).unwrap(),
        };
        if !is_tie_free(&cat, &table) {
            continue;
        }
        instances += 1;
        for m in all_matchings(&cat, EXHAUSTIVE_LIMIT).unwrap() {
            matchings_checked += 1;
            let v = |n| verify(&m, n, &table, &cat).unwrap();
            let (tne, rhe, rue, rsie, tse) = (
                v(EquilibriumNotion::Tne),
                v(EquilibriumNotion::Rhe),
                v(EquilibriumNotion::Rue),
                v(EquilibriumNotion::Rsie),
                v(EquilibriumNotion::Tse),
            );
            tse_seen += tse as usize;
            let mut bad = |cond: bool, what: &str| {
                if cond {
                    failures.push(format!("instance {instances} matching {:?}: {what}", m.selected()));
                }
            };
            bad(tse && !(rhe && rue && rsie), "TSE outside RHE, RUE or RSIE");
            bad(rhe && !tne, "RHE outside TNE");
            bad(rue && !tne, "RUE outside TNE");
            bad(rsie && !tne, "RSIE outside TNE");
        }
    }
    finish(
        6,
        "inclusions",
        failures,
        &format!("{instances} instances, {matchings_checked} matchings, {tse_seen} strong"),
    );
}

fn city(seed: u64) -> GroupCatalog {
    let requests = generate_demand(&DemandConfig {
        n_riders: 50,
        seed,
        ..Default::default()
    })
    .unwrap();
    enumerate_feasible_groups(&requests, &CostParams::default(), &FeasibilityParams::default()).unwrap()
}

fn sub_catalog(cat: &GroupCatalog, riders: &[usize]) -> GroupCatalog {
    let map = |m: &Members| Members::new(m.iter().map(|r| riders.iter().position(|&x| x == r).unwrap()));
    let groups = cat
        .groups()
        .iter()
        .filter(|g| g.members.iter().all(|r| riders.contains(&r)))
        .map(|g| {
            let mut g = g.clone();
            g.members = map(&g.members);
            g.route = None;
            g.origin = ctg_core::GroupOrigin::Feasible;
            g
        })
        .collect();
    GroupCatalog::new(riders.len(), groups).unwrap()
}

#[test]
fn criterion_7_city_pattern() {
    let start = Instant::now();
    let protocols = [
        Protocol::Externality,
        Protocol::Residual(ResidualWeighting::Proportional),
        Protocol::Subgroup,
    ];
    let notions = [
        Some(EquilibriumNotion::Tne),
        Some(EquilibriumNotion::Rhe),
        Some(EquilibriumNotion::Rue),
        Some(EquilibriumNotion::Rsie),
    ];
    let mut failures = Vec::new();
    let mut cells = 0;
    let mut subsample = 0;
    for seed in [7, 17] {
        let cat = city(seed);
        let exp = run_on_catalog(&cat, &protocols, &notions).unwrap();
        let everyone_alone = Matching::singletons(&cat).total_cost(&cat);
        let unconstrained_max = solve(&cat, &SolveSpec::unconstrained(&cat, Objective::Maximize))
            .unwrap()
            .objective_value
            .unwrap();
        let alone_is_max = everyone_alone >= unconstrained_max - OBJ_TOL;
        for pair in exp.kpis.chunks(2) {
            let (best, worst) = (&pair[0], &pair[1]);
            assert_eq!((best.case, worst.case), (Case::Best, Case::Worst));
            cells += 1;
            let cell = format!("seed {seed} {} {}", best.protocol, best.notion);
            if best.status == SolveStatus::Infeasible {
                continue;
            }
            let (pos, poa) = (best.ratio.unwrap(), worst.ratio.unwrap());
            if pos > 1.01 + RATIO_TOL {
                failures.push(format!("{cell}: PoS {pos:.4}"));
            }
            if poa < pos - RATIO_TOL {
                failures.push(format!("{cell}: PoA {poa:.4} below PoS {pos:.4}"));
            }
            if best.verified != Some(true) {
                failures.push(format!("{cell}: best case fails verify"));
            }
            if best.notion == "rhe" && alone_is_max && worst.n_groups != Some(cat.n_riders()) {
                failures.push(format!("{cell}: RHE worst has {:?} groups", worst.n_groups));
            }
        }

        // small sub-instances checked against exhaustive search
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..10 {
            let mut riders: Vec<usize> = (0..cat.n_riders()).collect();
            rand::seq::SliceRandom::shuffle(riders.as_mut_slice(), &mut rng);
            riders.truncate(10);
            riders.sort_unstable();
            let sub = sub_catalog(&cat, &riders);
            let table = build_share_table(&sub, Protocol::Subgroup).unwrap();
            let matchings = all_matchings(&sub, EXHAUSTIVE_LIMIT).unwrap();
            let alone = Matching::singletons(&sub).total_cost(&sub);
            let max_all = matchings.iter().map(|m| m.total_cost(&sub)).fold(f64::MIN, f64::max);
            if alone < max_all - OBJ_TOL {
                continue;
            }
            subsample += 1;
            let spec = notion_spec(&sub, &table, Some(EquilibriumNotion::Rhe), Objective::Maximize).unwrap();
            let worst = solve(&sub, &spec).unwrap();
            let brute = oracle(&sub, &table, &matchings, EquilibriumNotion::Rhe, Objective::Maximize);
            if worst.matching.len() != sub.n_riders() {
                failures.push(format!("seed {seed} sub-instance {riders:?}: RHE worst is not everyone alone"));
            }
            if brute.is_none_or(|b| (b - alone).abs() > OBJ_TOL) {
                failures.push(format!("seed {seed} sub-instance {riders:?}: exhaustive RHE worst {brute:?} vs alone {alone}"));
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    if elapsed >= 600.0 {
        failures.push(format!("runtime {elapsed:.1}s over 600s"));
    }
    finish(
        7,
        "city pattern",
        failures,
        &format!("{cells} cells, {subsample} exhaustive sub-instances in {elapsed:.1}s"),
    );
}

#[test]
fn criterion_8_externality_coverage() {
    let notions = [
        Some(EquilibriumNotion::Tne),
        Some(EquilibriumNotion::Rhe),
        Some(EquilibriumNotion::Rue),
        Some(EquilibriumNotion::Rsie),
    ];
    let mut failures = Vec::new();
    let mut reported = Vec::new();
    for seed in [7, 17] {
        let cat = city(seed);
        let opt = solve(&cat, &SolveSpec::unconstrained(&cat, Objective::Minimize)).unwrap();
        if opt.matching.len() == cat.n_riders() {
            continue;
        }
        let table = build_share_table(&cat, Protocol::Externality).unwrap();
        reported.push(format!("seed {seed} optimum {:.3}", coverage_ratio(&opt.matching, &table, &cat)));
        let exp = run_on_catalog(&cat, &[Protocol::Externality], &notions).unwrap();
        for row in exp.coverage.iter().filter(|r| r.case == Case::Best) {
            match row.coverage {
                Some(c) => {
                    reported.push(format!("{} {c:.3}", row.notion));
                    if c >= 1.0 {
                        failures.push(format!("seed {seed} {}: coverage {c:.4}", row.notion));
                    }
                }
                None => reported.push(format!("{} infeasible", row.notion)),
            }
        }
    }
    if reported.is_empty() {
        failures.push("no instance pooled at the optimum".into());
    }
    finish(8, "externality coverage", failures, &reported.join(", "));
}
