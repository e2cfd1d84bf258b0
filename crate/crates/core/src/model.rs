//! Domain types shared by every stage of the pipeline: trip requests, cost
//! parameters, the feasible-group catalog, per-rider cost shares and matchings.
//!
//! Riders are identified by dense indices `0..n`. A group is a sorted set of
//! rider ids ([`Members`]). The catalog keeps its groups in a canonical order:
//! by size first, then lexicographically by member list. Singletons therefore
//! occupy indices `0..n` and `catalog.group(i)` is `{i}` for every rider `i`.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{CtgError, Result};
use crate::feasibility::Route;
use crate::protocols::ResidualWeighting;

pub type RiderId = usize;

/// Tolerance for money identities (budget balance, cost decomposition) and for
/// the weak/strict inequalities of the equilibrium definitions.
pub const EPS: f64 = 1e-9;

/// Tolerance for comparing objective values coming out of optimisation.
pub const OPT_TOL: f64 = 1e-6;

/// `a <= b` up to [`EPS`].
#[inline]
pub fn weakly_le(a: f64, b: f64) -> bool {
    a <= b + EPS
}

/// `a < b` by more than [`EPS`].
#[inline]
pub fn strictly_lt(a: f64, b: f64) -> bool {
    a < b - EPS
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

/// One traveller's request. Coordinates are in kilometres, `depart_at` in seconds.
#[derive(Clone, Debug, PartialEq)]
pub struct TripRequest {
    pub id: RiderId,
    pub origin: Point,
    pub destination: Point,
    pub depart_at: f64,
}

impl TripRequest {
    pub fn new(id: RiderId, origin: Point, destination: Point, depart_at: f64) -> Self {
        Self {
            id,
            origin,
            destination,
            depart_at,
        }
    }
}

/// Checks that ids are exactly `0..n` in order and that no trip is degenerate.
pub fn validate_requests(requests: &[TripRequest]) -> Result<()> {
    if requests.is_empty() {
        return Err(CtgError::InvalidInstance("no requests".into()));
    }
    for (pos, r) in requests.iter().enumerate() {
        if r.id != pos {
            return Err(CtgError::InvalidInstance(format!(
                "request at position {pos} has id {}, ids must be 0..n in order",
                r.id
            )));
        }
        if r.origin == r.destination {
            return Err(CtgError::InvalidInstance(format!(
                "request {} has identical origin and destination",
                r.id
            )));
        }
        let finite = [r.origin.x, r.origin.y, r.destination.x, r.destination.y, r.depart_at]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(CtgError::InvalidInstance(format!(
                "request {} has a non-finite field",
                r.id
            )));
        }
    }
    Ok(())
}

/// Monetary weights of the group cost model.
///
/// `beta_t` and `beta_w` are per hour, `beta_l` per kilometre, `beta_v` per ride
/// and `c_s` per group.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    pub beta_t: f64,
    pub beta_w: f64,
    pub beta_l: f64,
    pub beta_v: f64,
    #[serde(default)]
    pub c_s: f64,
}

impl Default for CostParams {
    fn default() -> Self {
        Self {
            beta_t: 9.0,
            beta_w: 13.5,
            beta_l: 1.0,
            beta_v: 1.0,
            c_s: 0.0,
        }
    }
}

impl CostParams {
    pub fn validate(&self) -> Result<()> {
        let all = [self.beta_t, self.beta_w, self.beta_l, self.beta_v, self.c_s];
        if all.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(CtgError::InvalidParameter(
                "cost parameters must be finite and non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// A sorted, duplicate-free set of rider ids.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Members(Vec<RiderId>);

impl Members {
    pub fn new(riders: impl IntoIterator<Item = RiderId>) -> Self {
        let mut v: Vec<RiderId> = riders.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Self(v)
    }

    pub fn singleton(rider: RiderId) -> Self {
        Self(vec![rider])
    }

    pub fn as_slice(&self) -> &[RiderId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = RiderId> + '_ {
        self.0.iter().copied()
    }

    pub fn contains(&self, rider: RiderId) -> bool {
        self.0.binary_search(&rider).is_ok()
    }

    /// Index of `rider` within the sorted member list.
    pub fn position(&self, rider: RiderId) -> Option<usize> {
        self.0.binary_search(&rider).ok()
    }

    pub fn is_subset_of(&self, other: &Members) -> bool {
        if self.len() > other.len() {
            return false;
        }
        let mut it = other.0.iter();
        'outer: for r in &self.0 {
            for o in it.by_ref() {
                match o.cmp(r) {
                    std::cmp::Ordering::Less => continue,
                    std::cmp::Ordering::Equal => continue 'outer,
                    std::cmp::Ordering::Greater => return false,
                }
            }
            return false;
        }
        true
    }

    pub fn is_disjoint(&self, other: &Members) -> bool {
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].cmp(&other.0[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => return false,
            }
        }
        true
    }

    pub fn union(&self, other: &Members) -> Members {
        Members::new(self.iter().chain(other.iter()))
    }

    pub fn with(&self, rider: RiderId) -> Members {
        Members::new(self.iter().chain(std::iter::once(rider)))
    }

    pub fn without(&self, rider: RiderId) -> Members {
        Members(self.0.iter().copied().filter(|&r| r != rider).collect())
    }

    /// Sub-member set selected by the bits of `mask` (bit k picks the k-th member).
    pub fn select(&self, mask: u32) -> Members {
        Members(
            self.0
                .iter()
                .enumerate()
                .filter(|(k, _)| mask & (1 << k) != 0)
                .map(|(_, &r)| r)
                .collect(),
        )
    }

    /// All non-empty proper subsets, in increasing bitmask order.
    pub fn proper_subsets(&self) -> impl Iterator<Item = Members> + '_ {
        assert!(self.len() < 32, "group too large for subset enumeration");
        let full = (1u32 << self.len()) - 1;
        (1..full).map(move |mask| self.select(mask))
    }
}

impl fmt::Display for Members {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, r) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{r}")?;
        }
        write!(f, "}}")
    }
}

impl From<Vec<RiderId>> for Members {
    fn from(v: Vec<RiderId>) -> Self {
        Members::new(v)
    }
}

impl<const N: usize> From<[RiderId; N]> for Members {
    fn from(v: [RiderId; N]) -> Self {
        Members::new(v)
    }
}

/// Where a catalog entry comes from.
#[derive(Clone, Debug, PartialEq, Default)]
pub enum GroupOrigin {
    /// Feasible in its own right.
    #[default]
    Feasible,
    /// Added (or re-priced) by subset closure: served by the route of a cheaper superset.
    Inherited(Members),
}

/// A feasible group together with its cost decomposition.
///
/// `direct_costs` is aligned with `members`.
#[derive(Clone, Debug, PartialEq)]
pub struct Group {
    pub members: Members,
    pub route: Option<Route>,
    pub total_cost: f64,
    pub direct_costs: Vec<f64>,
    pub operator_cost: f64,
    pub societal_cost: f64,
    pub origin: GroupOrigin,
}

impl Group {
    /// A group known only by its total cost; everything is booked as operator cost.
    pub fn from_total(members: impl Into<Members>, total_cost: f64) -> Self {
        let members = members.into();
        let direct_costs = vec![0.0; members.len()];
        Self {
            members,
            route: None,
            total_cost,
            direct_costs,
            operator_cost: total_cost,
            societal_cost: 0.0,
            origin: GroupOrigin::Feasible,
        }
    }

    /// A group from its parts; the total is their sum.
    pub fn from_parts(
        members: impl Into<Members>,
        direct_costs: Vec<f64>,
        operator_cost: f64,
        societal_cost: f64,
    ) -> Self {
        let total_cost = direct_costs.iter().sum::<f64>() + operator_cost + societal_cost;
        Self {
            members: members.into(),
            route: None,
            total_cost,
            direct_costs,
            operator_cost,
            societal_cost,
            origin: GroupOrigin::Feasible,
        }
    }

    pub fn size(&self) -> usize {
        self.members.len()
    }

    pub fn direct_cost(&self, rider: RiderId) -> Option<f64> {
        self.members.position(rider).map(|p| self.direct_costs[p])
    }

    /// `total - (sum of direct + operator + societal)`.
    pub fn decomposition_residual(&self) -> f64 {
        self.total_cost
            - (self.direct_costs.iter().sum::<f64>() + self.operator_cost + self.societal_cost)
    }

    pub fn is_directly_feasible(&self) -> bool {
        matches!(self.origin, GroupOrigin::Feasible)
    }
}

/// The feasible-group family with its cost data.
#[derive(Clone, Debug)]
pub struct GroupCatalog {
    n_riders: usize,
    groups: Vec<Group>,
    index: HashMap<Members, usize>,
    by_rider: Vec<Vec<usize>>,
}

impl GroupCatalog {
    /// Builds a catalog, putting groups into canonical order.
    ///
    /// Requires every singleton, rider ids below `n_riders`, no duplicate member
    /// sets, non-negative finite costs and an exact cost decomposition.
    pub fn new(n_riders: usize, mut groups: Vec<Group>) -> Result<Self> {
        if n_riders == 0 {
            return Err(CtgError::InvalidCatalog("catalog has no riders".into()));
        }
        groups.sort_by(|a, b| {
            a.members
                .len()
                .cmp(&b.members.len())
                .then_with(|| a.members.cmp(&b.members))
        });
        let mut index = HashMap::with_capacity(groups.len());
        let mut by_rider = vec![Vec::new(); n_riders];
        for (g, group) in groups.iter().enumerate() {
            if group.members.is_empty() {
                return Err(CtgError::InvalidCatalog("empty group".into()));
            }
            if let Some(&r) = group.members.as_slice().last() {
                if r >= n_riders {
                    return Err(CtgError::InvalidCatalog(format!(
                        "group {} names rider {r} but there are only {n_riders} riders",
                        group.members
                    )));
                }
            }
            if group.direct_costs.len() != group.members.len() {
                return Err(CtgError::InvalidCatalog(format!(
                    "group {} has {} direct costs for {} members",
                    group.members,
                    group.direct_costs.len(),
                    group.members.len()
                )));
            }
            if !group.total_cost.is_finite() || group.total_cost < 0.0 {
                return Err(CtgError::InvalidCatalog(format!(
                    "group {} has invalid total cost {}",
                    group.members, group.total_cost
                )));
            }
            if group.decomposition_residual().abs() > EPS {
                return Err(CtgError::InvalidCatalog(format!(
                    "group {}: total cost {} differs from the sum of its parts",
                    group.members, group.total_cost
                )));
            }
            if index.insert(group.members.clone(), g).is_some() {
                return Err(CtgError::InvalidCatalog(format!(
                    "group {} listed twice",
                    group.members
                )));
            }
            for r in group.members.iter() {
                by_rider[r].push(g);
            }
        }
        for rider in 0..n_riders {
            if !index.contains_key(&Members::singleton(rider)) {
                return Err(CtgError::InvalidCatalog(format!(
                    "singleton {{{rider}}} is missing"
                )));
            }
        }
        Ok(Self {
            n_riders,
            groups,
            index,
            by_rider,
        })
    }

    /// Builds a catalog from `(members, total cost)` pairs.
    pub fn from_costs<M: Into<Members>>(
        n_riders: usize,
        costs: impl IntoIterator<Item = (M, f64)>,
    ) -> Result<Self> {
        let groups = costs
            .into_iter()
            .map(|(m, c)| Group::from_total(m, c))
            .collect();
        Self::new(n_riders, groups)
    }

    pub fn n_riders(&self) -> usize {
        self.n_riders
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn groups(&self) -> &[Group] {
        &self.groups
    }

    pub fn group(&self, g: usize) -> &Group {
        &self.groups[g]
    }

    pub fn members(&self, g: usize) -> &Members {
        &self.groups[g].members
    }

    pub fn cost(&self, g: usize) -> f64 {
        self.groups[g].total_cost
    }

    pub fn index_of(&self, members: &Members) -> Option<usize> {
        self.index.get(members).copied()
    }

    /// Catalog index of `{rider}`.
    pub fn singleton(&self, rider: RiderId) -> usize {
        debug_assert_eq!(self.groups[rider].members.as_slice(), &[rider]);
        rider
    }

    /// Indices of all groups containing `rider`, in catalog order.
    pub fn groups_of(&self, rider: RiderId) -> &[usize] {
        &self.by_rider[rider]
    }

    /// Stored total cost `c(G)` of a member set.
    pub fn total_cost(&self, members: &Members) -> Result<f64> {
        self.index_of(members)
            .map(|g| self.cost(g))
            .ok_or_else(|| CtgError::UnknownGroup(members.clone()))
    }

    /// `c(H)` with `c(∅) = 0`.
    pub(crate) fn cost_or_empty(&self, members: &Members) -> Result<f64> {
        if members.is_empty() {
            Ok(0.0)
        } else {
            self.total_cost(members)
        }
    }

    pub fn max_cost(&self) -> f64 {
        self.groups
            .iter()
            .map(|g| g.total_cost)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_group_size(&self) -> usize {
        self.groups.iter().map(Group::size).max().unwrap_or(0)
    }

    /// First missing subset found, if the catalog is not subset-closed.
    pub fn check_subset_closed(&self) -> Result<()> {
        for group in &self.groups {
            for sub in group.members.proper_subsets() {
                if !self.index.contains_key(&sub) {
                    return Err(CtgError::MissingSubset {
                        group: group.members.clone(),
                        subset: sub,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn is_subset_closed(&self) -> bool {
        self.check_subset_closed().is_ok()
    }

    /// `c(H) <= c(G)` for every catalog pair `H ⊆ G` (up to [`EPS`]).
    pub fn is_monotone(&self) -> bool {
        self.groups.iter().all(|g| {
            g.members.proper_subsets().all(|sub| match self.index_of(&sub) {
                Some(h) => weakly_le(self.cost(h), g.total_cost),
                None => true,
            })
        })
    }
}

/// Which protocol produced a [`CostShareTable`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ProtocolTag {
    Externality,
    OverchargedExternality { d: f64 },
    Residual(ResidualWeighting),
    Subgroup,
    /// Shares obtained from ordinal preferences.
    Ordinal,
    /// Shares supplied directly.
    Custom,
}

impl fmt::Display for ProtocolTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProtocolTag::Externality => write!(f, "externality"),
            ProtocolTag::OverchargedExternality { .. } => write!(f, "externality-over"),
            ProtocolTag::Residual(w) => write!(f, "residual-{w}"),
            ProtocolTag::Subgroup => write!(f, "subgroup"),
            ProtocolTag::Ordinal => write!(f, "ordinal"),
            ProtocolTag::Custom => write!(f, "custom"),
        }
    }
}

/// Budget guarantee carried by a share table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetMode {
    /// Shares sum to `c(G)` on every group.
    Balanced,
    /// Shares sum to at least `c(G)` on every group.
    Overcharging,
    /// No guarantee (plain externality shares may under-collect).
    Unconstrained,
}

/// Individual costs `c_i(G)` for every member of every catalog group.
///
/// `shares[g]` is aligned with `catalog.members(g)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CostShareTable {
    shares: Vec<Vec<f64>>,
    pub protocol: ProtocolTag,
    pub budget_mode: BudgetMode,
}

impl CostShareTable {
    pub fn new(
        catalog: &GroupCatalog,
        shares: Vec<Vec<f64>>,
        protocol: ProtocolTag,
        budget_mode: BudgetMode,
    ) -> Result<Self> {
        if shares.len() != catalog.len() {
            return Err(CtgError::InvalidShares(format!(
                "{} share rows for {} catalog groups",
                shares.len(),
                catalog.len()
            )));
        }
        for (g, row) in shares.iter().enumerate() {
            if row.len() != catalog.members(g).len() {
                return Err(CtgError::InvalidShares(format!(
                    "group {} has {} shares for {} members",
                    catalog.members(g),
                    row.len(),
                    catalog.members(g).len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(CtgError::InvalidShares(format!(
                    "group {} has a non-finite share",
                    catalog.members(g)
                )));
            }
        }
        Ok(Self {
            shares,
            protocol,
            budget_mode,
        })
    }

    /// Fills a table from `f(group index, rider)`.
    pub fn from_fn(
        catalog: &GroupCatalog,
        protocol: ProtocolTag,
        budget_mode: BudgetMode,
        mut f: impl FnMut(usize, RiderId) -> f64,
    ) -> Result<Self> {
        let shares = (0..catalog.len())
            .map(|g| catalog.members(g).iter().map(|r| f(g, r)).collect())
            .collect();
        Self::new(catalog, shares, protocol, budget_mode)
    }

    pub fn len(&self) -> usize {
        self.shares.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shares.is_empty()
    }

    /// Shares of group `g`, aligned with its members.
    pub fn row(&self, g: usize) -> &[f64] {
        &self.shares[g]
    }

    /// `c_i(G)` for catalog group `g`; `None` if `rider ∉ G`.
    pub fn share(&self, catalog: &GroupCatalog, g: usize, rider: RiderId) -> Option<f64> {
        catalog
            .members(g)
            .position(rider)
            .map(|p| self.shares[g][p])
    }

    /// `c_i(G)` for a rider known to be in `g`. Panics otherwise.
    pub(crate) fn cost_of(&self, catalog: &GroupCatalog, g: usize, rider: RiderId) -> f64 {
        self.share(catalog, g, rider)
            .unwrap_or_else(|| panic!("rider {rider} not in group {}", catalog.members(g)))
    }

    /// Monetary fare `f(G,i) = c_i(G) - C(G,i)`.
    pub fn fare(&self, catalog: &GroupCatalog, g: usize, rider: RiderId) -> Option<f64> {
        let share = self.share(catalog, g, rider)?;
        let direct = catalog.group(g).direct_cost(rider)?;
        Some(share - direct)
    }

    pub fn group_sum(&self, g: usize) -> f64 {
        self.shares[g].iter().sum()
    }

    /// Groups violating the table's budget mode, with `Σ c_i(G) - c(G)`.
    pub fn budget_violations(&self, catalog: &GroupCatalog) -> Vec<(usize, f64)> {
        (0..catalog.len())
            .filter_map(|g| {
                let gap = self.group_sum(g) - catalog.cost(g);
                let bad = match self.budget_mode {
                    BudgetMode::Balanced => gap.abs() > EPS,
                    BudgetMode::Overcharging => gap < -EPS,
                    BudgetMode::Unconstrained => false,
                };
                bad.then_some((g, gap))
            })
            .collect()
    }
}

/// A selection of catalog groups meant to partition the riders.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Matching {
    selected: Vec<usize>,
}

impl Matching {
    pub fn new(selected: impl IntoIterator<Item = usize>) -> Self {
        let mut selected: Vec<usize> = selected.into_iter().collect();
        selected.sort_unstable();
        selected.dedup();
        Self { selected }
    }

    /// Everyone travels alone.
    pub fn singletons(catalog: &GroupCatalog) -> Self {
        Self::new((0..catalog.n_riders()).map(|r| catalog.singleton(r)))
    }

    /// Looks each member set up in the catalog.
    pub fn from_members<'a>(
        catalog: &GroupCatalog,
        groups: impl IntoIterator<Item = &'a Members>,
    ) -> Result<Self> {
        let idx = groups
            .into_iter()
            .map(|m| {
                catalog
                    .index_of(m)
                    .ok_or_else(|| CtgError::UnknownGroup(m.clone()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::new(idx))
    }

    pub fn selected(&self) -> &[usize] {
        &self.selected
    }

    pub fn len(&self) -> usize {
        self.selected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.selected.is_empty()
    }

    pub fn members<'a>(&'a self, catalog: &'a GroupCatalog) -> impl Iterator<Item = &'a Members> {
        self.selected.iter().map(move |&g| catalog.members(g))
    }

    pub fn total_cost(&self, catalog: &GroupCatalog) -> f64 {
        self.selected.iter().map(|&g| catalog.cost(g)).sum()
    }

    /// Group index of each rider, if the matching is a valid partition.
    pub fn assignment(&self, catalog: &GroupCatalog) -> Option<Vec<usize>> {
        let mut assigned = vec![usize::MAX; catalog.n_riders()];
        for &g in &self.selected {
            if g >= catalog.len() {
                return None;
            }
            for r in catalog.members(g).iter() {
                if assigned[r] != usize::MAX {
                    return None;
                }
                assigned[r] = g;
            }
        }
        assigned.iter().all(|&g| g != usize::MAX).then_some(assigned)
    }
}

/// Outcome of [`validate_matching`].
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct MatchingReport {
    pub valid: bool,
    pub over_covered: Vec<RiderId>,
    pub uncovered: Vec<RiderId>,
    pub unknown_groups: Vec<usize>,
}

/// Checks that the selected groups partition the riders.
pub fn validate_matching(matching: &Matching, catalog: &GroupCatalog) -> MatchingReport {
    let mut count = vec![0usize; catalog.n_riders()];
    let mut report = MatchingReport::default();
    for &g in matching.selected() {
        if g >= catalog.len() {
            report.unknown_groups.push(g);
            continue;
        }
        for r in catalog.members(g).iter() {
            count[r] += 1;
        }
    }
    for (r, &c) in count.iter().enumerate() {
        match c {
            0 => report.uncovered.push(r),
            1 => {}
            _ => report.over_covered.push(r),
        }
    }
    report.valid = report.over_covered.is_empty()
        && report.uncovered.is_empty()
        && report.unknown_groups.is_empty();
    report
}

/// The five equilibrium notions of the co-travellers game.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EquilibriumNotion {
    /// Nobody prefers travelling alone.
    Tne,
    /// Every selected group is hermetic.
    Rhe,
    /// Nash and no two selected groups are mergeable.
    Rue,
    /// No rider can move to another group that accepts them.
    Rsie,
    /// No coalition can deviate with all members strictly better off.
    Tse,
}

impl EquilibriumNotion {
    pub const ALL: [EquilibriumNotion; 5] = [
        EquilibriumNotion::Tne,
        EquilibriumNotion::Rhe,
        EquilibriumNotion::Rue,
        EquilibriumNotion::Rsie,
        EquilibriumNotion::Tse,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            EquilibriumNotion::Tne => "tne",
            EquilibriumNotion::Rhe => "rhe",
            EquilibriumNotion::Rue => "rue",
            EquilibriumNotion::Rsie => "rsie",
            EquilibriumNotion::Tse => "tse",
        }
    }
}

impl fmt::Display for EquilibriumNotion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EquilibriumNotion {
    type Err = CtgError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tne" => Ok(EquilibriumNotion::Tne),
            "rhe" => Ok(EquilibriumNotion::Rhe),
            "rue" => Ok(EquilibriumNotion::Rue),
            "rsie" => Ok(EquilibriumNotion::Rsie),
            "tse" => Ok(EquilibriumNotion::Tse),
            other => Err(CtgError::InvalidParameter(format!(
                "unknown equilibrium notion '{other}'"
            ))),
        }
    }
}
