//! Feasible-group generation: per-group routing, the detour filter and subset closure.
//!
//! A route starts at the first pickup at that rider's departure time. At an
//! origin reached early the vehicle holds until the rider departs; riders
//! already on board accrue that hold as in-vehicle time. Times are seconds,
//! distances kilometres, and costs convert seconds to hours.

use std::collections::{HashMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CtgError, Result};
use crate::model::{
    CostParams, Group, GroupCatalog, GroupOrigin, Members, Point, RiderId, TripRequest, EPS,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    #[default]
    Euclidean,
    Manhattan,
}

impl Metric {
    pub fn distance(&self, a: Point, b: Point) -> f64 {
        match self {
            Metric::Euclidean => (a.x - b.x).hypot(a.y - b.y),
            Metric::Manhattan => (a.x - b.x).abs() + (a.y - b.y).abs(),
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = CtgError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" => Ok(Metric::Euclidean),
            "manhattan" => Ok(Metric::Manhattan),
            other => Err(CtgError::InvalidParameter(format!("unknown metric '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityParams {
    pub capacity: usize,
    pub detour_factor: f64,
    pub metric: Metric,
    /// km/h
    pub speed: f64,
}

impl Default for FeasibilityParams {
    fn default() -> Self {
        Self {
            capacity: 4,
            detour_factor: 1.5,
            metric: Metric::Euclidean,
            speed: 30.0,
        }
    }
}

impl FeasibilityParams {
    pub fn validate(&self) -> Result<()> {
        if self.capacity < 1 {
            return Err(CtgError::InvalidParameter("capacity must be at least 1".into()));
        }
        if self.detour_factor.is_nan() || self.detour_factor < 1.0 {
            return Err(CtgError::InvalidParameter(
                "detour factor must be at least 1".into(),
            ));
        }
        if !(self.speed > 0.0 && self.speed.is_finite()) {
            return Err(CtgError::InvalidParameter("speed must be positive".into()));
        }
        if self.capacity > 12 {
            return Err(CtgError::InvalidParameter(
                "capacity above 12 makes stop enumeration intractable".into(),
            ));
        }
        Ok(())
    }

    /// Travel time in seconds.
    pub fn travel_time(&self, a: Point, b: Point) -> f64 {
        self.metric.distance(a, b) / self.speed * 3600.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopKind {
    Origin,
    Destination,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stop {
    pub rider: RiderId,
    pub kind: StopKind,
    pub position: Point,
    pub arrival: f64,
    /// Later than `arrival` only when the vehicle holds for a departing rider.
    pub departure: f64,
}

/// A served stop sequence. `wait` and `in_vehicle` are in seconds, aligned with `members`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Route {
    pub members: Members,
    pub stops: Vec<Stop>,
    pub length: f64,
    pub wait: Vec<f64>,
    pub in_vehicle: Vec<f64>,
}

impl Route {
    pub fn start(&self) -> f64 {
        self.stops.first().map_or(0.0, |s| s.departure)
    }

    pub fn end(&self) -> f64 {
        self.stops.last().map_or(0.0, |s| s.arrival)
    }

    /// Vehicle time from first pickup to last drop-off, seconds.
    pub fn duration(&self) -> f64 {
        self.end() - self.start()
    }

    pub fn wait_of(&self, rider: RiderId) -> Option<f64> {
        self.members.position(rider).map(|p| self.wait[p])
    }

    pub fn in_vehicle_of(&self, rider: RiderId) -> Option<f64> {
        self.members.position(rider).map(|p| self.in_vehicle[p])
    }
}

/// `C(G,i) = beta_t * t + beta_w * w`, times in hours.
pub fn direct_user_cost(route: &Route, rider: RiderId, params: &CostParams) -> Result<f64> {
    let p = route
        .members
        .position(rider)
        .ok_or_else(|| CtgError::RiderNotInGroup {
            rider,
            group: route.members.clone(),
        })?;
    Ok(params.beta_t * route.in_vehicle[p] / 3600.0 + params.beta_w * route.wait[p] / 3600.0)
}

/// `C_O(G) = beta_l * l + beta_v`.
pub fn operator_cost(route: &Route, params: &CostParams) -> f64 {
    params.beta_l * route.length + params.beta_v
}

/// Direct cost of riding alone on the shortest path.
pub fn solo_direct_cost(request: &TripRequest, cost: &CostParams, feas: &FeasibilityParams) -> f64 {
    cost.beta_t * feas.travel_time(request.origin, request.destination) / 3600.0
}

/// Turns a route into a catalog group carrying its cost decomposition.
pub fn priced_group(route: Route, cost: &CostParams) -> Group {
    let direct_costs: Vec<f64> = route
        .members
        .iter()
        .map(|r| direct_user_cost(&route, r, cost).expect("member of its own route"))
        .collect();
    let operator = operator_cost(&route, cost);
    let mut group = Group::from_parts(route.members.clone(), direct_costs, operator, cost.c_s);
    group.route = Some(route);
    group
}

fn check_members(members: &Members, requests: &[TripRequest], feas: &FeasibilityParams) -> Result<()> {
    if members.is_empty() {
        return Err(CtgError::InvalidParameter("empty group".into()));
    }
    if members.len() > feas.capacity {
        return Err(CtgError::InvalidParameter(format!(
            "group {members} exceeds capacity {}",
            feas.capacity
        )));
    }
    if let Some(r) = members.iter().find(|&r| r >= requests.len()) {
        return Err(CtgError::InvalidParameter(format!("rider {r} has no request")));
    }
    Ok(())
}

/// Plays a stop sequence (indices into `members`) and records the timings.
fn simulate(
    members: &Members,
    seq: &[(usize, StopKind)],
    requests: &[TripRequest],
    feas: &FeasibilityParams,
) -> Route {
    let k = members.len();
    let mut pickup = vec![0.0; k];
    let mut wait = vec![0.0; k];
    let mut in_vehicle = vec![0.0; k];
    let mut stops = Vec::with_capacity(seq.len());
    let mut length = 0.0;
    let mut here: Option<Point> = None;
    let mut clock = 0.0;
    for &(p, kind) in seq {
        let req = &requests[members.as_slice()[p]];
        let at = match kind {
            StopKind::Origin => req.origin,
            StopKind::Destination => req.destination,
        };
        let arrival = match here {
            None => req.depart_at,
            Some(prev) => {
                length += feas.metric.distance(prev, at);
                clock + feas.travel_time(prev, at)
            }
        };
        let departure = match kind {
            StopKind::Origin => {
                let d = arrival.max(req.depart_at);
                pickup[p] = d;
                wait[p] = d - req.depart_at;
                d
            }
            StopKind::Destination => {
                in_vehicle[p] = arrival - pickup[p];
                arrival
            }
        };
        stops.push(Stop {
            rider: req.id,
            kind,
            position: at,
            arrival,
            departure,
        });
        here = Some(at);
        clock = departure;
    }
    Route {
        members: members.clone(),
        stops,
        length,
        wait,
        in_vehicle,
    }
}

fn route_cost(route: &Route, cost: &CostParams) -> f64 {
    let riders: f64 = route
        .wait
        .iter()
        .zip(&route.in_vehicle)
        .map(|(w, t)| cost.beta_t * t / 3600.0 + cost.beta_w * w / 3600.0)
        .sum();
    riders + operator_cost(route, cost) + cost.c_s
}

struct RouteSearch<'a> {
    pts: Vec<(Point, Point, f64)>,
    cost: &'a CostParams,
    feas: &'a FeasibilityParams,
    seq: Vec<(usize, StopKind)>,
    pickup: Vec<f64>,
    best: f64,
    best_seq: Vec<(usize, StopKind)>,
}

impl RouteSearch<'_> {
    fn dfs(&mut self, here: Point, clock: f64, picked: u32, dropped: u32, partial: f64) {
        let k = self.pts.len();
        if partial >= self.best - EPS {
            return;
        }
        if dropped.count_ones() as usize == k {
            self.best = partial;
            self.best_seq = self.seq.clone();
            return;
        }
        for p in 0..k {
            let bit = 1u32 << p;
            for kind in [StopKind::Origin, StopKind::Destination] {
                let allowed = match kind {
                    StopKind::Origin => picked & bit == 0,
                    StopKind::Destination => picked & bit != 0 && dropped & bit == 0,
                };
                if !allowed {
                    continue;
                }
                let (o, d, depart) = self.pts[p];
                let at = if kind == StopKind::Origin { o } else { d };
                let dist = self.feas.metric.distance(here, at);
                let arrival = clock + dist / self.feas.speed * 3600.0;
                let mut step = self.cost.beta_l * dist;
                self.seq.push((p, kind));
                match kind {
                    StopKind::Origin => {
                        let dep = arrival.max(depart);
                        self.pickup[p] = dep;
                        step += self.cost.beta_w * (dep - depart) / 3600.0;
                        self.dfs(at, dep, picked | bit, dropped, partial + step);
                    }
                    StopKind::Destination => {
                        step += self.cost.beta_t * (arrival - self.pickup[p]) / 3600.0;
                        self.dfs(at, arrival, picked, dropped | bit, partial + step);
                    }
                }
                self.seq.pop();
            }
        }
    }
}

/// Cheapest stop ordering for `members` under the total group cost.
///
/// Ties go to the lexicographically smallest stop sequence.
pub fn optimal_route(
    members: &Members,
    requests: &[TripRequest],
    cost: &CostParams,
    feas: &FeasibilityParams,
) -> Result<Route> {
    check_members(members, requests, feas)?;
    let pts: Vec<(Point, Point, f64)> = members
        .iter()
        .map(|r| {
            let q = &requests[r];
            (q.origin, q.destination, q.depart_at)
        })
        .collect();
    let k = pts.len();
    let mut search = RouteSearch {
        pts,
        cost,
        feas,
        seq: Vec::with_capacity(2 * k),
        pickup: vec![0.0; k],
        best: f64::INFINITY,
        best_seq: Vec::new(),
    };
    let fixed = cost.beta_v + cost.c_s;
    for first in 0..k {
        let (o, _, depart) = search.pts[first];
        search.seq.push((first, StopKind::Origin));
        search.pickup[first] = depart;
        search.dfs(o, depart, 1 << first, 0, fixed);
        search.seq.pop();
    }
    Ok(simulate(members, &search.best_seq, requests, feas))
}

/// Every stop ordering of `members`, for exhaustive checks.
pub fn all_routes(
    members: &Members,
    requests: &[TripRequest],
    feas: &FeasibilityParams,
) -> Result<Vec<Route>> {
    check_members(members, requests, feas)?;
    fn rec(
        k: usize,
        picked: u32,
        dropped: u32,
        seq: &mut Vec<(usize, StopKind)>,
        out: &mut Vec<Vec<(usize, StopKind)>>,
    ) {
        if dropped.count_ones() as usize == k {
            out.push(seq.clone());
            return;
        }
        for p in 0..k {
            let bit = 1 << p;
            if picked & bit == 0 {
                seq.push((p, StopKind::Origin));
                rec(k, picked | bit, dropped, seq, out);
                seq.pop();
            } else if dropped & bit == 0 {
                seq.push((p, StopKind::Destination));
                rec(k, picked, dropped | bit, seq, out);
                seq.pop();
            }
        }
    }
    let mut seqs = Vec::new();
    rec(members.len(), 0, 0, &mut Vec::new(), &mut seqs);
    Ok(seqs
        .iter()
        .map(|s| simulate(members, s, requests, feas))
        .collect())
}

/// Total cost `c(G)` of a route under `cost`.
pub fn total_route_cost(route: &Route, cost: &CostParams) -> f64 {
    route_cost(route, cost)
}

/// Routes and prices `members`, returning the group if every member's direct
/// cost is within the detour factor of their solo direct cost.
pub fn evaluate_group(
    members: &Members,
    requests: &[TripRequest],
    cost: &CostParams,
    feas: &FeasibilityParams,
) -> Result<Option<Group>> {
    let route = optimal_route(members, requests, cost, feas)?;
    let group = priced_group(route, cost);
    let ok = members.iter().zip(&group.direct_costs).all(|(r, &c)| {
        c <= feas.detour_factor * solo_direct_cost(&requests[r], cost, feas) + EPS
    });
    Ok(ok.then_some(group))
}

/// All feasible groups, generated level by level.
///
/// A size-`k` candidate extends a feasible group by a higher-numbered rider and
/// is kept when all its `(k-1)`-subsets are feasible and it passes the detour
/// filter. The result is closed under subsets.
pub fn enumerate_feasible_groups(
    requests: &[TripRequest],
    cost: &CostParams,
    feas: &FeasibilityParams,
) -> Result<GroupCatalog> {
    crate::model::validate_requests(requests)?;
    cost.validate()?;
    feas.validate()?;
    let n = requests.len();
    let singles: Vec<Group> = (0..n)
        .map(|r| {
            let route = optimal_route(&Members::singleton(r), requests, cost, feas)?;
            Ok(priced_group(route, cost))
        })
        .collect::<Result<_>>()?;
    let mut all = singles;
    let mut level: Vec<Members> = (0..n).map(Members::singleton).collect();
    let mut known: HashSet<Members> = level.iter().cloned().collect();
    for _size in 2..=feas.capacity.min(n) {
        let mut candidates = Vec::new();
        for g in &level {
            let top = *g.as_slice().last().expect("non-empty");
            for r in top + 1..n {
                let cand = g.with(r);
                if cand.as_slice().iter().all(|&m| known.contains(&cand.without(m))) {
                    candidates.push(cand);
                }
            }
        }
        let evaluated: Vec<Option<Group>> = candidates
            .par_iter()
            .map(|m| evaluate_group(m, requests, cost, feas))
            .collect::<Result<_>>()?;
        let next: Vec<Group> = evaluated.into_iter().flatten().collect();
        if next.is_empty() {
            break;
        }
        level = next.iter().map(|g| g.members.clone()).collect();
        known.extend(level.iter().cloned());
        all.extend(next);
    }
    let catalog = GroupCatalog::new(n, all)?;
    close_under_subsets(&catalog)
}

/// Adds every missing subset and enforces monotone costs.
///
/// Each subset `H` of a catalog group gets `c(H) = min` over `H` itself (when
/// present) and all catalog supersets of `H`. When a superset wins, `H` is
/// served by that superset's route: it keeps the superset's direct costs for
/// its own members and books the rest of the superset cost as operator cost.
/// Ties prefer `H` itself, then the smallest superset.
pub fn close_under_subsets(catalog: &GroupCatalog) -> Result<GroupCatalog> {
    // best source for each subset: catalog index of the cheapest superset (or itself)
    let mut best: HashMap<Members, usize> = HashMap::new();
    let better = |cand: usize, cur: usize, target: &Members| -> bool {
        let (cc, cu) = (catalog.cost(cand), catalog.cost(cur));
        if cc < cu - EPS {
            return true;
        }
        if cc > cu + EPS {
            return false;
        }
        let self_cand = catalog.members(cand) == target;
        let self_cur = catalog.members(cur) == target;
        if self_cand != self_cur {
            return self_cand;
        }
        // catalog order is (size, members)
        cand < cur
    };
    for g in 0..catalog.len() {
        let m = catalog.members(g);
        if m.len() >= 32 {
            return Err(CtgError::InvalidCatalog(format!("group {m} too large to close")));
        }
        let full = (1u32 << m.len()) - 1;
        for mask in 1..=full {
            let h = m.select(mask);
            match best.get(&h) {
                Some(&cur) if !better(g, cur, &h) => {}
                _ => {
                    best.insert(h, g);
                }
            }
        }
    }
    let mut groups = Vec::with_capacity(best.len());
    for (h, src) in best {
        let source = catalog.group(src);
        if source.members == h {
            groups.push(source.clone());
            continue;
        }
        let direct: Vec<f64> = h
            .iter()
            .map(|r| source.direct_cost(r).expect("subset member"))
            .collect();
        let operator = source.total_cost - direct.iter().sum::<f64>() - source.societal_cost;
        groups.push(Group {
            members: h,
            route: source.route.clone(),
            total_cost: source.total_cost,
            direct_costs: direct,
            operator_cost: operator,
            societal_cost: source.societal_cost,
            origin: GroupOrigin::Inherited(source.members.clone()),
        });
    }
    GroupCatalog::new(catalog.n_riders(), groups)
}
