//! Small reference instances and random generators used by tests, examples
//! and the acceptance suite.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::equilibria::OrdinalInstance;
use crate::feasibility::{FeasibilityParams, Metric};
use crate::model::{
    BudgetMode, CostParams, CostShareTable, Group, GroupCatalog, Members, Point, ProtocolTag,
    TripRequest,
};
use crate::scenario::Instance;

/// Three riders heading to a common destination at (2, 0).
///
/// Rider 0 passes the origin of rider 1 on the way; rider 2 starts just
/// below the straight line. Speed is 1 km/h so hours equal kilometres.
pub fn worked_example_instance() -> Instance {
    let d = Point::new(2.0, 0.0);
    Instance {
        params: CostParams {
            beta_t: 1.0,
            beta_w: 1.0,
            beta_l: 1.0,
            beta_v: 7.0,
            c_s: 0.0,
        },
        requests: vec![
            TripRequest::new(0, Point::new(-6.0, 0.0), d, 0.0),
            TripRequest::new(1, Point::new(-4.0, 0.0), d, 0.0),
            TripRequest::new(2, Point::new(0.0, -1.0), d, 0.0),
        ],
    }
}

pub fn worked_example_feasibility() -> FeasibilityParams {
    FeasibilityParams {
        capacity: 3,
        detour_factor: 10.0,
        metric: Metric::Euclidean,
        speed: 1.0,
    }
}

/// The worked example at the level of tabulated group costs.
///
/// Direct costs follow the per-group timings; operator costs make up the
/// rest of each tabulated total.
pub fn worked_example_catalog() -> GroupCatalog {
    let groups = vec![
        Group::from_parts([0], vec![8.0], 15.0, 0.0),
        Group::from_parts([1], vec![6.0], 13.0, 0.0),
        Group::from_parts([2], vec![2.24], 7.0, 0.0),
        Group::from_parts([0, 1], vec![8.0, 8.0], 15.0, 0.0),
        Group::from_parts([0, 2], vec![8.32, 8.32], 15.32, 0.0),
        Group::from_parts([1, 2], vec![6.36, 6.36], 13.36, 0.0),
        Group::from_parts([0, 1, 2], vec![8.36, 8.36, 8.36], 15.36, 0.0),
    ];
    let mut cat = GroupCatalog::new(3, groups).expect("valid fixture");
    // the tabulated totals are rounded to cents; snap them
    let snapped: Vec<Group> = cat
        .groups()
        .iter()
        .map(|g| {
            let mut g = g.clone();
            let rounded = (g.total_cost * 100.0).round() / 100.0;
            g.operator_cost += rounded - g.total_cost;
            g.total_cost = rounded;
            g
        })
        .collect();
    cat = GroupCatalog::new(3, snapped).expect("valid fixture");
    cat
}

/// An arbitrary split of the worked-example costs under which no strong
/// equilibrium exists.
pub fn first_alternative_table(catalog: &GroupCatalog) -> CostShareTable {
    let rows: [(&[usize], &[f64]); 7] = [
        (&[0], &[23.0]),
        (&[1], &[19.0]),
        (&[2], &[9.24]),
        (&[0, 1], &[22.99, 8.01]),
        (&[0, 2], &[22.96, 9.0]),
        (&[1, 2], &[18.0, 8.08]),
        (&[0, 1, 2], &[23.0, 12.0, 5.44]),
    ];
    let mut shares = vec![Vec::new(); catalog.len()];
    for (m, s) in rows {
        let g = catalog
            .index_of(&Members::new(m.iter().copied()))
            .expect("worked-example group");
        shares[g] = s.to_vec();
    }
    CostShareTable::new(catalog, shares, ProtocolTag::Custom, BudgetMode::Balanced)
        .expect("aligned fixture")
}

/// Three riders in a preference cycle over pairs; all three together is infeasible.
pub fn example1_ordinal() -> OrdinalInstance {
    let (a, b, c) = (0, 1, 2);
    let m = |v: &[usize]| Members::new(v.iter().copied());
    OrdinalInstance {
        riders: 3,
        feasible: vec![m(&[a]), m(&[b]), m(&[c]), m(&[a, b]), m(&[a, c]), m(&[b, c])],
        pref: vec![
            vec![m(&[a, b]), m(&[a, c]), m(&[a])],
            vec![m(&[b, c]), m(&[a, b]), m(&[b])],
            vec![m(&[a, c]), m(&[b, c]), m(&[c])],
        ],
    }
}

/// Five riders on a ring with no matching that is both hermetic and unmergeable.
///
/// Rider `i` ranks `{i,i+1,i+2}`, `{i,i+1}`, `{i-1,i,i+1}`, `{i-1,i}`,
/// `{i-2,i-1,i}`, then riding alone (indices mod 5).
pub fn five_player_ordinal() -> OrdinalInstance {
    let n = 5;
    let at = |i: usize, k: isize| ((i as isize + k).rem_euclid(n as isize)) as usize;
    let mut feasible: Vec<Members> = (0..n).map(Members::singleton).collect();
    for i in 0..n {
        feasible.push(Members::from([i, at(i, 1)]));
        feasible.push(Members::from([i, at(i, 1), at(i, 2)]));
    }
    let pref = (0..n)
        .map(|i| {
            vec![
                Members::from([i, at(i, 1), at(i, 2)]),
                Members::from([i, at(i, 1)]),
                Members::from([at(i, -1), i, at(i, 1)]),
                Members::from([at(i, -1), i]),
                Members::from([at(i, -2), at(i, -1), i]),
                Members::singleton(i),
            ]
        })
        .collect();
    OrdinalInstance {
        riders: n,
        feasible,
        pref,
    }
}

/// A random catalog closed under subsets with monotone costs.
///
/// Singletons cost between 5 and 20; each other drawn group costs its solo
/// sum times a factor in `[0.55, 1.1)`, so pooling is usually but not always
/// cheaper. `density` is the chance of drawing each candidate group.
pub fn random_catalog<R: Rng>(rng: &mut R, n: usize, capacity: usize, density: f64) -> GroupCatalog {
    let solo: Vec<f64> = (0..n).map(|_| rng.gen_range(5.0..20.0)).collect();
    let mut groups: Vec<Group> = (0..n)
        .map(|r| random_split(rng, Members::singleton(r), solo[r]))
        .collect();
    let mut riders: Vec<usize> = (0..n).collect();
    let draws = (n * n).max(4);
    let mut seen = std::collections::HashSet::new();
    for _ in 0..draws {
        if !rng.gen_bool(density.clamp(0.0, 1.0)) {
            continue;
        }
        let k = rng.gen_range(2..=capacity.clamp(2, n.max(2)));
        if k > n {
            continue;
        }
        riders.shuffle(rng);
        let m = Members::new(riders[..k].iter().copied());
        if !seen.insert(m.clone()) {
            continue;
        }
        let base: f64 = m.iter().map(|r| solo[r]).sum();
        let total = base * rng.gen_range(0.55..1.1);
        groups.push(random_split(rng, m, total));
    }
    let cat = GroupCatalog::new(n, groups).expect("generated catalog");
    crate::feasibility::close_under_subsets(&cat).expect("closable")
}

fn random_split<R: Rng>(rng: &mut R, members: Members, total: f64) -> Group {
    let operator = total * rng.gen_range(0.3..0.7);
    let weights: Vec<f64> = members.iter().map(|_| rng.gen_range(0.5..1.5)).collect();
    let wsum: f64 = weights.iter().sum();
    let direct: Vec<f64> = weights.iter().map(|w| (total - operator) * w / wsum).collect();
    let operator = total - direct.iter().sum::<f64>();
    Group::from_parts(members, direct, operator, 0.0)
}

/// Random exogenous shares in `[1, 100)`; ties have probability zero.
pub fn random_table<R: Rng>(rng: &mut R, catalog: &GroupCatalog) -> CostShareTable {
    CostShareTable::from_fn(catalog, ProtocolTag::Custom, BudgetMode::Unconstrained, |_, _| {
        rng.gen_range(1.0..100.0)
    })
    .expect("aligned table")
}

/// Random requests in a `size` x `size` km square with departures in `[0, window)`.
pub fn random_requests<R: Rng>(rng: &mut R, n: usize, size: f64, window: f64) -> Vec<TripRequest> {
    (0..n)
        .map(|id| {
            let o = Point::new(rng.gen_range(0.0..size), rng.gen_range(0.0..size));
            let mut d = Point::new(rng.gen_range(0.0..size), rng.gen_range(0.0..size));
            while d == o {
                d = Point::new(rng.gen_range(0.0..size), rng.gen_range(0.0..size));
            }
            let t = if window > 0.0 { rng.gen_range(0.0..window) } else { 0.0 };
            TripRequest::new(id, o, d, t)
        })
        .collect()
}
