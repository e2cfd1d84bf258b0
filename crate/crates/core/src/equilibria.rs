//! Equilibrium notions of the co-travellers game.
//!
//! Weak preferences (`≤`) allow [`EPS`] slack and strict ones (`<`) require a
//! gap larger than [`EPS`]; see [`weakly_le`] and [`strictly_lt`].

use std::collections::BTreeSet;
use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};

use crate::error::{CtgError, Result};
use crate::model::{
    strictly_lt, weakly_le, BudgetMode, CostShareTable, EquilibriumNotion, Group, GroupCatalog,
    Matching, Members, ProtocolTag, RiderId, EPS,
};

/// Default rider limit for exhaustive matching enumeration.
pub const EXHAUSTIVE_LIMIT: usize = 12;

/// Groups in which every member weakly prefers the group to riding alone.
pub fn tne_groups(catalog: &GroupCatalog, table: &CostShareTable) -> Vec<usize> {
    (0..catalog.len())
        .filter(|&g| is_tne_group(catalog, table, g))
        .collect()
}

pub fn is_tne_group(catalog: &GroupCatalog, table: &CostShareTable, g: usize) -> bool {
    catalog
        .members(g)
        .iter()
        .zip(table.row(g))
        .all(|(r, &c)| weakly_le(c, table.row(catalog.singleton(r))[0]))
}

/// True iff every proper subset `H` of the group has a member who weakly
/// prefers the group to `H`.
pub fn is_hermetic(catalog: &GroupCatalog, table: &CostShareTable, members: &Members) -> Result<bool> {
    let g = catalog
        .index_of(members)
        .ok_or_else(|| CtgError::UnknownGroup(members.clone()))?;
    for h in members.proper_subsets() {
        let hi = catalog.index_of(&h).ok_or_else(|| CtgError::MissingSubset {
            group: members.clone(),
            subset: h.clone(),
        })?;
        let someone_stays = h.iter().any(|r| {
            weakly_le(table.cost_of(catalog, g, r), table.cost_of(catalog, hi, r))
        });
        if !someone_stays {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Hermetic groups (a subset of the TNE groups, since singletons are subsets).
pub fn hermetic_groups(catalog: &GroupCatalog, table: &CostShareTable) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for g in 0..catalog.len() {
        if is_hermetic(catalog, table, catalog.members(g))? {
            out.push(g);
        }
    }
    Ok(out)
}

/// Two disjoint groups whose union is feasible, makes everyone weakly better
/// off and someone strictly better off.
pub fn is_mergeable(catalog: &GroupCatalog, table: &CostShareTable, g1: usize, g2: usize) -> bool {
    let (m1, m2) = (catalog.members(g1), catalog.members(g2));
    if !m1.is_disjoint(m2) {
        return false;
    }
    let Some(u) = catalog.index_of(&m1.union(m2)) else {
        return false;
    };
    merge_improves(catalog, table, u, &[g1, g2])
}

fn merge_improves(catalog: &GroupCatalog, table: &CostShareTable, u: usize, parts: &[usize]) -> bool {
    let mut strict = false;
    for &p in parts {
        for r in catalog.members(p).iter() {
            let (now, merged) = (table.cost_of(catalog, p, r), table.cost_of(catalog, u, r));
            if !weakly_le(merged, now) {
                return false;
            }
            strict |= strictly_lt(merged, now);
        }
    }
    strict
}

/// `g1` and `g2` are disjoint and some member of `g1` would move to `g2`,
/// strictly gaining, with every member of `g2` weakly gaining.
pub fn is_individually_unstable(
    catalog: &GroupCatalog,
    table: &CostShareTable,
    g1: usize,
    g2: usize,
) -> bool {
    let (m1, m2) = (catalog.members(g1), catalog.members(g2));
    if !m1.is_disjoint(m2) {
        return false;
    }
    m1.iter().any(|i| {
        let Some(t) = catalog.index_of(&m2.with(i)) else {
            return false;
        };
        strictly_lt(table.cost_of(catalog, t, i), table.cost_of(catalog, g1, i))
            && m2
                .iter()
                .all(|j| weakly_le(table.cost_of(catalog, t, j), table.cost_of(catalog, g2, j)))
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExclusionKind {
    Mergeable,
    IndividuallyUnstable,
}

/// Unordered pairs of groups that may not be selected together.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExclusionPairs {
    pub kind: ExclusionKind,
    pairs: BTreeSet<(usize, usize)>,
}

impl ExclusionPairs {
    pub fn new(kind: ExclusionKind) -> Self {
        Self {
            kind,
            pairs: BTreeSet::new(),
        }
    }

    pub fn insert(&mut self, a: usize, b: usize) {
        assert_ne!(a, b, "a group cannot exclude itself");
        self.pairs.insert((a.min(b), a.max(b)));
    }

    pub fn contains(&self, a: usize, b: usize) -> bool {
        self.pairs.contains(&(a.min(b), a.max(b)))
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.pairs.iter().copied()
    }
}

fn membership(catalog: &GroupCatalog, restrict_to: &[usize]) -> Vec<bool> {
    let mut inside = vec![false; catalog.len()];
    for &g in restrict_to {
        inside[g] = true;
    }
    inside
}

/// All mergeable pairs among `restrict_to`.
///
/// Scans each feasible union and its two-way splits, so pairs whose union is
/// not in the catalog are never considered.
pub fn mergeable_pairs(
    catalog: &GroupCatalog,
    table: &CostShareTable,
    restrict_to: &[usize],
) -> ExclusionPairs {
    let inside = membership(catalog, restrict_to);
    let mut out = ExclusionPairs::new(ExclusionKind::Mergeable);
    for u in 0..catalog.len() {
        let m = catalog.members(u);
        if m.len() < 2 {
            continue;
        }
        // bit 0 always on the first side, so each split is seen once
        let full = (1u32 << m.len()) - 1;
        for mask in (1..full).filter(|mask| mask & 1 == 1) {
            let (Some(a), Some(b)) = (
                catalog.index_of(&m.select(mask)),
                catalog.index_of(&m.select(full & !mask)),
            ) else {
                continue;
            };
            if inside[a] && inside[b] && merge_improves(catalog, table, u, &[a, b]) {
                out.insert(a, b);
            }
        }
    }
    out
}

/// All individually unstable pairs among `restrict_to`.
///
/// The empty receiver is not represented here; it is the TNE condition.
pub fn individually_unstable_pairs(
    catalog: &GroupCatalog,
    table: &CostShareTable,
    restrict_to: &[usize],
) -> ExclusionPairs {
    let inside = membership(catalog, restrict_to);
    let mut out = ExclusionPairs::new(ExclusionKind::IndividuallyUnstable);
    for t in 0..catalog.len() {
        let tm = catalog.members(t);
        if tm.len() < 2 {
            continue;
        }
        for i in tm.iter() {
            let Some(g2) = catalog.index_of(&tm.without(i)) else {
                continue;
            };
            if !inside[g2] {
                continue;
            }
            let accepted = catalog
                .members(g2)
                .iter()
                .all(|j| weakly_le(table.cost_of(catalog, t, j), table.cost_of(catalog, g2, j)));
            if !accepted {
                continue;
            }
            let gain = table.cost_of(catalog, t, i);
            for &g1 in catalog.groups_of(i) {
                if inside[g1]
                    && catalog.members(g1).is_disjoint(catalog.members(g2))
                    && strictly_lt(gain, table.cost_of(catalog, g1, i))
                {
                    out.insert(g1, g2);
                }
            }
        }
    }
    out
}

fn require_valid(catalog: &GroupCatalog, matching: &Matching) -> Result<Vec<usize>> {
    matching.assignment(catalog).ok_or_else(|| {
        let rep = crate::model::validate_matching(matching, catalog);
        CtgError::InvalidParameter(format!(
            "matching is not a partition (over-covered {:?}, uncovered {:?}, unknown groups {:?})",
            rep.over_covered, rep.uncovered, rep.unknown_groups
        ))
    })
}

/// No group outside the matching is strictly preferred by all of its members.
fn is_tse(catalog: &GroupCatalog, table: &CostShareTable, assigned: &[usize]) -> bool {
    (0..catalog.len()).all(|g| {
        catalog.members(g).iter().any(|i| {
            let current = assigned[i];
            current == g
                || weakly_le(table.cost_of(catalog, current, i), table.cost_of(catalog, g, i))
        })
    })
}

/// Checks `matching` against one notion.
pub fn verify(
    matching: &Matching,
    notion: EquilibriumNotion,
    table: &CostShareTable,
    catalog: &GroupCatalog,
) -> Result<bool> {
    let assigned = require_valid(catalog, matching)?;
    let sel = matching.selected();
    let tne = || sel.iter().all(|&g| is_tne_group(catalog, table, g));
    let ok = match notion {
        EquilibriumNotion::Tne => tne(),
        EquilibriumNotion::Rhe => {
            let mut all = true;
            for &g in sel {
                if !is_hermetic(catalog, table, catalog.members(g))? {
                    all = false;
                    break;
                }
            }
            all
        }
        EquilibriumNotion::Rue => {
            tne()
                && sel.iter().enumerate().all(|(k, &a)| {
                    sel[k + 1..].iter().all(|&b| !is_mergeable(catalog, table, a, b))
                })
        }
        EquilibriumNotion::Rsie => {
            tne()
                && sel.iter().all(|&a| {
                    sel.iter()
                        .all(|&b| a == b || !is_individually_unstable(catalog, table, a, b))
                })
        }
        EquilibriumNotion::Tse => is_tse(catalog, table, &assigned),
    };
    Ok(ok)
}

/// Checks `matching` against every notion in `notions`.
pub fn verify_all(
    matching: &Matching,
    notions: &[EquilibriumNotion],
    table: &CostShareTable,
    catalog: &GroupCatalog,
) -> Result<bool> {
    for &n in notions {
        if !verify(matching, n, table, catalog)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Greedy merging from everyone-alone until no two current groups are mergeable.
pub fn greedy_rue(catalog: &GroupCatalog, table: &CostShareTable) -> Matching {
    let n = catalog.n_riders();
    let mut group_of: Vec<usize> = (0..n).map(|r| catalog.singleton(r)).collect();
    loop {
        let mut merged = false;
        for i in 0..n {
            for j in i + 1..n {
                let (gi, gj) = (group_of[i], group_of[j]);
                if gi != gj && is_mergeable(catalog, table, gi, gj) {
                    let u = catalog
                        .index_of(&catalog.members(gi).union(catalog.members(gj)))
                        .expect("mergeable implies feasible union");
                    for r in catalog.members(u).iter() {
                        group_of[r] = u;
                    }
                    merged = true;
                }
            }
        }
        if !merged {
            return Matching::new(group_of);
        }
    }
}

/// Visits every partition of the riders into groups with `allowed[g]` set,
/// branching on the lowest uncovered rider and trying its groups in catalog
/// order. `compatible(chosen, g)` can cut branches early.
pub fn for_each_partition<C, V>(catalog: &GroupCatalog, allowed: &[bool], compatible: C, mut visit: V)
where
    C: Fn(&[usize], usize) -> bool,
    V: FnMut(&[usize]) -> ControlFlow<()>,
{
    fn rec<C, V>(
        catalog: &GroupCatalog,
        allowed: &[bool],
        compatible: &C,
        visit: &mut V,
        covered: &mut Vec<bool>,
        chosen: &mut Vec<usize>,
    ) -> ControlFlow<()>
    where
        C: Fn(&[usize], usize) -> bool,
        V: FnMut(&[usize]) -> ControlFlow<()>,
    {
        let Some(r) = covered.iter().position(|c| !c) else {
            return visit(chosen);
        };
        for &g in catalog.groups_of(r) {
            if !allowed[g] {
                continue;
            }
            let m = catalog.members(g);
            if m.iter().any(|x| covered[x]) || !compatible(chosen, g) {
                continue;
            }
            for x in m.iter() {
                covered[x] = true;
            }
            chosen.push(g);
            let flow = rec(catalog, allowed, compatible, visit, covered, chosen);
            chosen.pop();
            for x in m.iter() {
                covered[x] = false;
            }
            flow?;
        }
        ControlFlow::Continue(())
    }
    let mut covered = vec![false; catalog.n_riders()];
    let _ = rec(catalog, allowed, &compatible, &mut visit, &mut covered, &mut Vec::new());
}

/// Every matching, in enumeration order. Exponential; meant for small instances.
pub fn all_matchings(catalog: &GroupCatalog, limit: usize) -> Result<Vec<Matching>> {
    guard(catalog, limit)?;
    let allowed = vec![true; catalog.len()];
    let mut out = Vec::new();
    for_each_partition(catalog, &allowed, |_, _| true, |sel| {
        out.push(Matching::new(sel.iter().copied()));
        ControlFlow::Continue(())
    });
    Ok(out)
}

fn guard(catalog: &GroupCatalog, limit: usize) -> Result<()> {
    if catalog.n_riders() > limit {
        return Err(CtgError::InstanceTooLarge {
            n: catalog.n_riders(),
            limit,
        });
    }
    Ok(())
}

/// First matching (in enumeration order) satisfying `notion`, if any.
pub fn exists_equilibrium(
    notion: EquilibriumNotion,
    catalog: &GroupCatalog,
    table: &CostShareTable,
) -> Result<Option<Matching>> {
    exists_joint_equilibrium(&[notion], catalog, table, EXHAUSTIVE_LIMIT)
}

/// First matching satisfying all of `notions` simultaneously, if any.
///
/// Every notion implies TNE, so only TNE groups are enumerated; RHE further
/// restricts to hermetic groups, and RUE/RSIE pair conditions prune branches.
pub fn exists_joint_equilibrium(
    notions: &[EquilibriumNotion],
    catalog: &GroupCatalog,
    table: &CostShareTable,
    limit: usize,
) -> Result<Option<Matching>> {
    guard(catalog, limit)?;
    let has = |n: EquilibriumNotion| notions.contains(&n);
    let mut allowed = vec![false; catalog.len()];
    for g in tne_groups(catalog, table) {
        allowed[g] = true;
    }
    if has(EquilibriumNotion::Rhe) {
        for (g, slot) in allowed.iter_mut().enumerate() {
            if *slot && !is_hermetic(catalog, table, catalog.members(g))? {
                *slot = false;
            }
        }
    }
    let rue = has(EquilibriumNotion::Rue);
    let rsie = has(EquilibriumNotion::Rsie);
    let compatible = |chosen: &[usize], g: usize| {
        chosen.iter().all(|&h| {
            !(rue && is_mergeable(catalog, table, h, g))
                && !(rsie
                    && (is_individually_unstable(catalog, table, h, g)
                        || is_individually_unstable(catalog, table, g, h)))
        })
    };
    let mut found = None;
    let mut failure = None;
    for_each_partition(catalog, &allowed, compatible, |sel| {
        let m = Matching::new(sel.iter().copied());
        match verify_all(&m, notions, table, catalog) {
            Ok(true) => {
                found = Some(m);
                ControlFlow::Break(())
            }
            Ok(false) => ControlFlow::Continue(()),
            Err(e) => {
                failure = Some(e);
                ControlFlow::Break(())
            }
        }
    });
    match failure {
        Some(e) => Err(e),
        None => Ok(found),
    }
}

/// Strict preference rankings over feasible groups.
///
/// `pref[i]` lists rider `i`'s groups from best to worst and must contain their
/// singleton. Groups ranked after the singleton are worse than riding alone.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrdinalInstance {
    pub riders: usize,
    pub feasible: Vec<Members>,
    pub pref: Vec<Vec<Members>>,
}

impl OrdinalInstance {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(CtgError::InvalidInstance(msg));
        if self.riders == 0 || self.pref.len() != self.riders {
            return bad(format!(
                "{} preference lists for {} riders",
                self.pref.len(),
                self.riders
            ));
        }
        let feasible: BTreeSet<&Members> = self.feasible.iter().collect();
        if feasible.len() != self.feasible.len() {
            return bad("feasible family lists a group twice".into());
        }
        for g in &self.feasible {
            if g.is_empty() || g.iter().any(|r| r >= self.riders) {
                return bad(format!("feasible group {g} is empty or names an unknown rider"));
            }
        }
        for (i, list) in self.pref.iter().enumerate() {
            let ranked: BTreeSet<&Members> = list.iter().collect();
            if ranked.len() != list.len() {
                return bad(format!("rider {i} ranks a group twice"));
            }
            if !ranked.contains(&Members::singleton(i)) {
                return bad(format!("rider {i} does not rank riding alone"));
            }
            for g in list {
                if !g.contains(i) {
                    return bad(format!("rider {i} ranks {g}, which does not contain them"));
                }
                if g.len() > 1 && !feasible.contains(g) {
                    return bad(format!("rider {i} ranks infeasible group {g}"));
                }
            }
            for g in self.feasible.iter().filter(|g| g.contains(i)) {
                if !ranked.contains(g) {
                    return bad(format!("rider {i} does not rank their feasible group {g}"));
                }
            }
        }
        Ok(())
    }

    /// Largest rank after subset completion.
    pub fn max_rank(&self) -> usize {
        let (_, ranks) = self.completed_ranks();
        ranks.iter().flat_map(|r| r.iter().copied()).max().unwrap_or(1)
    }

    /// Feasible family closed under subsets, with 1-based ranks per rider
    /// aligned to each group's members. Added subsets rank below riding alone.
    fn completed_ranks(&self) -> (Vec<Members>, Vec<Vec<usize>>) {
        let mut family: BTreeSet<Members> = (0..self.riders).map(Members::singleton).collect();
        for g in &self.feasible {
            family.insert(g.clone());
            family.extend(g.proper_subsets());
        }
        let mut groups: Vec<Members> = family.into_iter().collect();
        groups.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        let mut next_rank: Vec<usize> = self.pref.iter().map(Vec::len).collect();
        let ranks = groups
            .iter()
            .map(|g| {
                g.iter()
                    .map(|i| match self.pref[i].iter().position(|h| h == g) {
                        Some(p) => p + 1,
                        None => {
                            next_rank[i] += 1;
                            next_rank[i]
                        }
                    })
                    .collect()
            })
            .collect();
        (groups, ranks)
    }
}

/// Cardinal costs realising ordinal preferences.
///
/// `c_i(G) = rank_i(G) + d` and `c(G) = Σ c_i(G)`. With `d > n * max rank`
/// the group costs are monotone on the subset lattice.
pub fn ordinal_to_cardinal(instance: &OrdinalInstance, d: f64) -> Result<(GroupCatalog, CostShareTable)> {
    instance.validate()?;
    let (groups, ranks) = instance.completed_ranks();
    let max_rank = ranks.iter().flat_map(|r| r.iter().copied()).max().unwrap_or(1);
    let required = (instance.riders * max_rank) as f64;
    if d.is_nan() || d <= required {
        return Err(CtgError::DTooSmall { d, required });
    }
    let shares: Vec<Vec<f64>> = ranks
        .iter()
        .map(|r| r.iter().map(|&k| k as f64 + d).collect())
        .collect();
    let catalog_groups = groups
        .iter()
        .zip(&shares)
        .map(|(g, s)| Group::from_total(g.clone(), s.iter().sum()))
        .collect();
    let catalog = GroupCatalog::new(instance.riders, catalog_groups)?;
    // catalog order equals the (size, members) order used above
    let table = CostShareTable::new(&catalog, shares, ProtocolTag::Ordinal, BudgetMode::Balanced)?;
    debug_assert!(catalog.is_monotone());
    Ok((catalog, table))
}

/// A rider's cheapest option over all catalog groups containing them.
pub fn best_share(catalog: &GroupCatalog, table: &CostShareTable, rider: RiderId) -> f64 {
    catalog
        .groups_of(rider)
        .iter()
        .map(|&g| table.cost_of(catalog, g, rider))
        .fold(f64::INFINITY, f64::min)
}

/// True if no rider has two options within [`EPS`] of each other.
pub fn is_tie_free(catalog: &GroupCatalog, table: &CostShareTable) -> bool {
    (0..catalog.n_riders()).all(|r| {
        let mut v: Vec<f64> = catalog
            .groups_of(r)
            .iter()
            .map(|&g| table.cost_of(catalog, g, r))
            .collect();
        v.sort_by(f64::total_cmp);
        v.windows(2).all(|w| w[1] - w[0] > EPS)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{
        example1_ordinal, first_alternative_table, five_player_ordinal, worked_example_catalog,
    };
    use crate::protocols::{residual_shares, ResidualWeighting};

    fn idx(cat: &GroupCatalog, m: &[usize]) -> usize {
        cat.index_of(&Members::new(m.iter().copied())).unwrap()
    }

    fn matching(cat: &GroupCatalog, groups: &[&[usize]]) -> Matching {
        Matching::new(groups.iter().map(|g| idx(cat, g)))
    }

    #[test]
    fn tne_on_first_alternative_keeps_everything() {
        let cat = worked_example_catalog();
        let t = first_alternative_table(&cat);
        assert_eq!(tne_groups(&cat, &t).len(), 7);
    }

    #[test]
    fn tne_drops_group_with_a_loser() {
        let cat = worked_example_catalog();
        let t = CostShareTable::from_fn(&cat, ProtocolTag::Custom, BudgetMode::Unconstrained, |g, r| {
            if cat.members(g).len() == 2 && r == 0 {
                30.0
            } else {
                1.0
            }
        })
        .unwrap();
        let kept = tne_groups(&cat, &t);
        assert!(kept.contains(&idx(&cat, &[0])));
        assert!(!kept.contains(&idx(&cat, &[0, 1])));
        assert!(kept.contains(&idx(&cat, &[1, 2])));
    }

    #[test]
    fn hermetic_checks() {
        let cat = worked_example_catalog();
        let first = first_alternative_table(&cat);
        assert!(!is_hermetic(&cat, &first, &Members::from([0, 1, 2])).unwrap());
        assert!(is_hermetic(&cat, &first, &Members::from([2])).unwrap());
        let res = residual_shares(&cat, ResidualWeighting::Proportional).unwrap();
        assert!(is_hermetic(&cat, &res, &Members::from([0, 1])).unwrap());
    }

    #[test]
    fn mergeable_on_first_alternative() {
        let cat = worked_example_catalog();
        let t = first_alternative_table(&cat);
        let tne = tne_groups(&cat, &t);
        let m = mergeable_pairs(&cat, &t, &tne);
        assert!(m.contains(idx(&cat, &[0]), idx(&cat, &[1])));
        assert!(m.contains(idx(&cat, &[0]), idx(&cat, &[2])));
        assert!(m.contains(idx(&cat, &[1]), idx(&cat, &[2])));
        assert!(!m.contains(idx(&cat, &[0, 1]), idx(&cat, &[2])));
        assert!(is_mergeable(&cat, &t, idx(&cat, &[0]), idx(&cat, &[1])));
    }

    #[test]
    fn singletons_only_have_no_mergeable_pairs() {
        let cat = GroupCatalog::from_costs(3, [(vec![0], 1.0), (vec![1], 1.0), (vec![2], 1.0)]).unwrap();
        let t = CostShareTable::from_fn(&cat, ProtocolTag::Custom, BudgetMode::Balanced, |g, _| cat.cost(g))
            .unwrap();
        assert!(mergeable_pairs(&cat, &t, &[0, 1, 2]).is_empty());
        assert!(individually_unstable_pairs(&cat, &t, &[0, 1, 2]).is_empty());
    }

    #[test]
    fn unstable_on_first_alternative() {
        let cat = worked_example_catalog();
        let t = first_alternative_table(&cat);
        let all: Vec<usize> = (0..cat.len()).collect();
        let s = individually_unstable_pairs(&cat, &t, &all);
        assert!(s.contains(idx(&cat, &[0, 2]), idx(&cat, &[1])));
        assert!(is_individually_unstable(&cat, &t, idx(&cat, &[0, 2]), idx(&cat, &[1])));
        assert!(s.contains(idx(&cat, &[0, 1]), idx(&cat, &[2])));
        // rider 0 would not leave {0,2} for {1}: 22.99 > 22.96
        let t01 = t.share(&cat, idx(&cat, &[0, 1]), 0).unwrap();
        let t02 = t.share(&cat, idx(&cat, &[0, 2]), 0).unwrap();
        assert!(t01 > t02);
    }

    #[test]
    fn identical_shares_are_never_unstable() {
        let cat = worked_example_catalog();
        let t = CostShareTable::from_fn(&cat, ProtocolTag::Custom, BudgetMode::Unconstrained, |_, _| 5.0)
            .unwrap();
        let all: Vec<usize> = (0..cat.len()).collect();
        assert!(individually_unstable_pairs(&cat, &t, &all).is_empty());
        assert!(mergeable_pairs(&cat, &t, &all).is_empty());
    }

    #[test]
    fn verify_first_alternative_optimum() {
        let cat = worked_example_catalog();
        let t = first_alternative_table(&cat);
        let opt = matching(&cat, &[&[0, 1], &[2]]);
        assert!(verify(&opt, EquilibriumNotion::Rhe, &t, &cat).unwrap());
        assert!(verify(&opt, EquilibriumNotion::Rue, &t, &cat).unwrap());
        assert!(!verify(&opt, EquilibriumNotion::Rsie, &t, &cat).unwrap());
        let whole = matching(&cat, &[&[0, 1, 2]]);
        assert!(verify(&whole, EquilibriumNotion::Rsie, &t, &cat).unwrap());
        assert!(exists_equilibrium(EquilibriumNotion::Tse, &cat, &t).unwrap().is_none());
    }

    #[test]
    fn everyone_alone_is_tne_and_rhe() {
        let cat = worked_example_catalog();
        let t = first_alternative_table(&cat);
        let alone = Matching::singletons(&cat);
        assert!(verify(&alone, EquilibriumNotion::Tne, &t, &cat).unwrap());
        assert!(verify(&alone, EquilibriumNotion::Rhe, &t, &cat).unwrap());
    }

    #[test]
    fn verify_rejects_invalid_matching() {
        let cat = worked_example_catalog();
        let t = first_alternative_table(&cat);
        let bad = matching(&cat, &[&[0, 1], &[1, 2]]);
        assert!(verify(&bad, EquilibriumNotion::Tne, &t, &cat).is_err());
    }

    #[test]
    fn greedy_rue_on_residual_shares() {
        let cat = worked_example_catalog();
        let t = residual_shares(&cat, ResidualWeighting::Proportional).unwrap();
        let m = greedy_rue(&cat, &t);
        assert_eq!(m, matching(&cat, &[&[0, 1], &[2]]));
        assert!(verify(&m, EquilibriumNotion::Rue, &t, &cat).unwrap());
    }

    #[test]
    fn greedy_rue_without_merges_keeps_singletons() {
        let cat = worked_example_catalog();
        let t = CostShareTable::from_fn(&cat, ProtocolTag::Custom, BudgetMode::Unconstrained, |g, r| {
            if cat.members(g).len() == 1 {
                1.0
            } else {
                2.0 + r as f64
            }
        })
        .unwrap();
        assert_eq!(greedy_rue(&cat, &t), Matching::singletons(&cat));
    }

    #[test]
    fn example1_has_no_tse_and_no_rsie() {
        let (cat, t) = ordinal_to_cardinal(&example1_ordinal(), 100.0).unwrap();
        assert!(exists_equilibrium(EquilibriumNotion::Tse, &cat, &t).unwrap().is_none());
        assert!(exists_equilibrium(EquilibriumNotion::Rsie, &cat, &t).unwrap().is_none());
        assert!(exists_equilibrium(EquilibriumNotion::Rue, &cat, &t).unwrap().is_some());
    }

    #[test]
    fn five_player_instance_separates_rhe_and_rue() {
        let (cat, t) = ordinal_to_cardinal(&five_player_ordinal(), 1000.0).unwrap();
        assert!(exists_equilibrium(EquilibriumNotion::Rhe, &cat, &t).unwrap().is_some());
        assert!(exists_equilibrium(EquilibriumNotion::Rue, &cat, &t).unwrap().is_some());
        let joint = exists_joint_equilibrium(
            &[EquilibriumNotion::Rhe, EquilibriumNotion::Rue],
            &cat,
            &t,
            EXHAUSTIVE_LIMIT,
        )
        .unwrap();
        assert!(joint.is_none());
    }

    #[test]
    fn ordinal_costs_preserve_preferences() {
        let inst = five_player_ordinal();
        let (cat, t) = ordinal_to_cardinal(&inst, 1000.0).unwrap();
        for (i, list) in inst.pref.iter().enumerate() {
            let costs: Vec<f64> = list
                .iter()
                .map(|g| t.share(&cat, cat.index_of(g).unwrap(), i).unwrap())
                .collect();
            assert!(costs.windows(2).all(|w| w[0] < w[1]));
        }
        assert!(cat.is_subset_closed());
        assert!(cat.is_monotone());
    }

    #[test]
    fn ordinal_single_rider_and_small_d() {
        let inst = OrdinalInstance {
            riders: 1,
            feasible: vec![Members::singleton(0)],
            pref: vec![vec![Members::singleton(0)]],
        };
        let (cat, _) = ordinal_to_cardinal(&inst, 5.0).unwrap();
        assert_eq!(cat.len(), 1);
        assert!(matches!(
            ordinal_to_cardinal(&example1_ordinal(), 2.0),
            Err(CtgError::DTooSmall { .. })
        ));
    }

    #[test]
    fn exhaustive_guard() {
        let n = 13;
        let cat = GroupCatalog::from_costs(n, (0..n).map(|r| (vec![r], 1.0))).unwrap();
        let t = CostShareTable::from_fn(&cat, ProtocolTag::Custom, BudgetMode::Balanced, |_, _| 1.0).unwrap();
        assert!(matches!(
            exists_equilibrium(EquilibriumNotion::Tse, &cat, &t),
            Err(CtgError::InstanceTooLarge { n: 13, limit: 12 })
        ));
    }
}
