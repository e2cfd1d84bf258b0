//! Exact set partitioning with pairwise exclusions.
//!
//! Riders are split into independent components (riders linked by a shared
//! allowed group or by an exclusion pair) and each component is solved by
//! depth-first branch and bound:
//!
//! * branch on the uncovered rider with the fewest usable groups,
//! * try their groups by increasing cost per member,
//! * bound with the cheapest per-member cost of every uncovered rider,
//! * selecting a group blocks its exclusion partners until backtracking.
//!
//! Among co-optimal matchings the lexicographically smallest set of group
//! indices is returned. Maximisation negates the coefficients.

use std::ops::ControlFlow;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::equilibria::{
    for_each_partition, hermetic_groups, individually_unstable_pairs, mergeable_pairs, tne_groups,
    ExclusionPairs, EXHAUSTIVE_LIMIT,
};
use crate::error::{CtgError, Result};
use crate::model::{CostShareTable, EquilibriumNotion, GroupCatalog, Matching};

/// Objective values closer than this are treated as ties.
const TIE_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    Minimize,
    Maximize,
}

impl std::str::FromStr for Objective {
    type Err = CtgError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "min" | "minimize" => Ok(Objective::Minimize),
            "max" | "maximize" => Ok(Objective::Maximize),
            other => Err(CtgError::InvalidParameter(format!("unknown objective '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveSpec {
    pub objective: Objective,
    /// Sorted catalog indices that may be selected.
    pub allowed_groups: Vec<usize>,
    pub exclusions: Option<ExclusionPairs>,
    /// One coefficient per catalog group.
    pub objective_coefficients: Vec<f64>,
}

impl SolveSpec {
    /// Every group allowed, costs `c(G)`, no exclusions.
    pub fn unconstrained(catalog: &GroupCatalog, objective: Objective) -> Self {
        Self {
            objective,
            allowed_groups: (0..catalog.len()).collect(),
            exclusions: None,
            objective_coefficients: catalog.groups().iter().map(|g| g.total_cost).collect(),
        }
    }

    pub fn with_allowed(mut self, mut allowed: Vec<usize>) -> Self {
        allowed.sort_unstable();
        allowed.dedup();
        self.allowed_groups = allowed;
        self
    }

    pub fn with_exclusions(mut self, exclusions: ExclusionPairs) -> Self {
        self.exclusions = Some(exclusions);
        self
    }

    fn validate(&self, catalog: &GroupCatalog) -> Result<()> {
        if self.objective_coefficients.len() != catalog.len() {
            return Err(CtgError::InvalidParameter(format!(
                "{} coefficients for {} groups",
                self.objective_coefficients.len(),
                catalog.len()
            )));
        }
        if self.objective_coefficients.iter().any(|c| !c.is_finite()) {
            return Err(CtgError::InvalidParameter("non-finite coefficient".into()));
        }
        if let Some(&g) = self.allowed_groups.iter().find(|&&g| g >= catalog.len()) {
            return Err(CtgError::InvalidParameter(format!("allowed group {g} out of range")));
        }
        if let Some(ex) = &self.exclusions {
            if let Some((a, b)) = ex.iter().find(|&(a, b)| a >= catalog.len() || b >= catalog.len()) {
                return Err(CtgError::InvalidParameter(format!(
                    "exclusion pair ({a}, {b}) out of range"
                )));
            }
        }
        Ok(())
    }

    fn signed(&self, g: usize) -> f64 {
        match self.objective {
            Objective::Minimize => self.objective_coefficients[g],
            Objective::Maximize => -self.objective_coefficients[g],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Empty when infeasible.
    pub matching: Matching,
    pub objective_value: Option<f64>,
    pub nodes_explored: u64,
    pub wall_time: f64,
}

impl SolveResult {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

struct DisjointSets(Vec<usize>);

impl DisjointSets {
    fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.0[root] != root {
            root = self.0[root];
        }
        let mut cur = x;
        while self.0[cur] != root {
            let next = self.0[cur];
            self.0[cur] = root;
            cur = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// One component's search state. Groups and riders use local indices.
struct Search {
    members: Vec<Vec<usize>>,
    coef: Vec<f64>,
    per_member: Vec<f64>,
    global: Vec<usize>,
    /// Local groups of each local rider, by increasing per-member cost.
    by_rider: Vec<Vec<usize>>,
    partners: Vec<Vec<usize>>,
    covered: Vec<bool>,
    blocked: Vec<u32>,
    chosen: Vec<usize>,
    best: f64,
    best_set: Option<Vec<usize>>,
    nodes: u64,
}

impl Search {
    fn usable(&self, g: usize) -> bool {
        self.blocked[g] == 0 && self.members[g].iter().all(|&r| !self.covered[r])
    }

    fn select(&mut self, g: usize) {
        for &r in &self.members[g] {
            self.covered[r] = true;
        }
        for &h in &self.partners[g] {
            self.blocked[h] += 1;
        }
        self.chosen.push(g);
    }

    fn unselect(&mut self, g: usize) {
        self.chosen.pop();
        for &h in &self.partners[g] {
            self.blocked[h] -= 1;
        }
        for &r in &self.members[g] {
            self.covered[r] = false;
        }
    }

    fn offer(&mut self, value: f64) {
        let mut set: Vec<usize> = self.chosen.iter().map(|&g| self.global[g]).collect();
        set.sort_unstable();
        let take = match &self.best_set {
            None => true,
            Some(cur) => {
                value < self.best - TIE_TOL || (value <= self.best + TIE_TOL && set < *cur)
            }
        };
        if take {
            self.best = if self.best_set.is_some() {
                value.min(self.best)
            } else {
                value
            };
            self.best_set = Some(set);
        }
    }

    fn dfs(&mut self, partial: f64) {
        self.nodes += 1;
        let mut bound = partial;
        let mut pick: Option<(usize, usize)> = None;
        let mut any_uncovered = false;
        for r in 0..self.covered.len() {
            if self.covered[r] {
                continue;
            }
            any_uncovered = true;
            let mut count = 0;
            let mut cheapest = f64::INFINITY;
            for &g in &self.by_rider[r] {
                if self.usable(g) {
                    if count == 0 {
                        cheapest = self.per_member[g];
                    }
                    count += 1;
                }
            }
            if count == 0 {
                return;
            }
            bound += cheapest;
            if pick.is_none_or(|(_, c)| count < c) {
                pick = Some((r, count));
            }
        }
        if !any_uncovered {
            self.offer(partial);
            return;
        }
        if self.best_set.is_some() && bound > self.best + TIE_TOL {
            return;
        }
        let (r, _) = pick.expect("an uncovered rider");
        let options: Vec<usize> = self.by_rider[r]
            .iter()
            .copied()
            .filter(|&g| self.usable(g))
            .collect();
        for g in options {
            self.select(g);
            self.dfs(partial + self.coef[g]);
            self.unselect(g);
        }
    }
}

/// Exact optimum of the set-partitioning problem described by `spec`.
pub fn solve(catalog: &GroupCatalog, spec: &SolveSpec) -> Result<SolveResult> {
    spec.validate(catalog)?;
    let start = Instant::now();
    let n = catalog.n_riders();
    let mut allowed = vec![false; catalog.len()];
    for &g in &spec.allowed_groups {
        allowed[g] = true;
    }
    let mut sets = DisjointSets((0..n).collect());
    for &g in &spec.allowed_groups {
        let m = catalog.members(g).as_slice();
        for w in m.windows(2) {
            sets.union(w[0], w[1]);
        }
    }
    let pairs: Vec<(usize, usize)> = spec
        .exclusions
        .iter()
        .flat_map(|ex| ex.iter())
        .filter(|&(a, b)| allowed[a] && allowed[b])
        .collect();
    for &(a, b) in &pairs {
        sets.union(catalog.members(a).as_slice()[0], catalog.members(b).as_slice()[0]);
    }

    let mut component_riders: Vec<Vec<usize>> = vec![Vec::new(); n];
    for r in 0..n {
        let root = sets.find(r);
        component_riders[root].push(r);
    }
    let mut local_rider = vec![usize::MAX; n];
    let mut component_groups: Vec<Vec<usize>> = vec![Vec::new(); n];
    for riders in &component_riders {
        for (k, &r) in riders.iter().enumerate() {
            local_rider[r] = k;
        }
    }
    for &g in &spec.allowed_groups {
        let root = sets.find(catalog.members(g).as_slice()[0]);
        component_groups[root].push(g);
    }
    let mut local_group = vec![usize::MAX; catalog.len()];

    let mut selected = Vec::new();
    let mut total = 0.0;
    let mut nodes = 0;
    let mut feasible = true;
    for root in 0..n {
        let riders = &component_riders[root];
        if riders.is_empty() {
            continue;
        }
        let groups = &component_groups[root];
        for (k, &g) in groups.iter().enumerate() {
            local_group[g] = k;
        }
        let members: Vec<Vec<usize>> = groups
            .iter()
            .map(|&g| catalog.members(g).iter().map(|r| local_rider[r]).collect())
            .collect();
        let coef: Vec<f64> = groups.iter().map(|&g| spec.signed(g)).collect();
        let per_member: Vec<f64> = coef
            .iter()
            .zip(&members)
            .map(|(c, m)| c / m.len() as f64)
            .collect();
        let mut by_rider: Vec<Vec<usize>> = vec![Vec::new(); riders.len()];
        for (k, m) in members.iter().enumerate() {
            for &r in m {
                by_rider[r].push(k);
            }
        }
        for list in &mut by_rider {
            list.sort_by(|&a, &b| per_member[a].total_cmp(&per_member[b]).then(a.cmp(&b)));
        }
        let mut partners = vec![Vec::new(); groups.len()];
        for &(a, b) in &pairs {
            if sets.find(catalog.members(a).as_slice()[0]) == root {
                partners[local_group[a]].push(local_group[b]);
                partners[local_group[b]].push(local_group[a]);
            }
        }
        let mut search = Search {
            members,
            coef,
            per_member,
            global: groups.clone(),
            by_rider,
            partners,
            covered: vec![false; riders.len()],
            blocked: vec![0; groups.len()],
            chosen: Vec::new(),
            best: f64::INFINITY,
            best_set: None,
            nodes: 0,
        };
        search.dfs(0.0);
        nodes += search.nodes;
        match search.best_set {
            Some(set) => {
                total += set.iter().map(|&g| spec.objective_coefficients[g]).sum::<f64>();
                selected.extend(set);
            }
            None => {
                feasible = false;
                break;
            }
        }
    }
    Ok(finish(feasible, selected, total, nodes, start))
}

fn finish(feasible: bool, selected: Vec<usize>, total: f64, nodes: u64, start: Instant) -> SolveResult {
    let wall_time = start.elapsed().as_secs_f64();
    if feasible {
        SolveResult {
            status: SolveStatus::Optimal,
            matching: Matching::new(selected),
            objective_value: Some(total),
            nodes_explored: nodes,
            wall_time,
        }
    } else {
        SolveResult {
            status: SolveStatus::Infeasible,
            matching: Matching::default(),
            objective_value: None,
            nodes_explored: nodes,
            wall_time,
        }
    }
}

/// Exhaustive enumeration of all partitions; the reference for [`solve`].
pub fn brute_force_solve(catalog: &GroupCatalog, spec: &SolveSpec) -> Result<SolveResult> {
    spec.validate(catalog)?;
    if catalog.n_riders() > EXHAUSTIVE_LIMIT {
        return Err(CtgError::InstanceTooLarge {
            n: catalog.n_riders(),
            limit: EXHAUSTIVE_LIMIT,
        });
    }
    let start = Instant::now();
    let mut allowed = vec![false; catalog.len()];
    for &g in &spec.allowed_groups {
        allowed[g] = true;
    }
    let ex = spec.exclusions.as_ref();
    let compatible = |chosen: &[usize], g: usize| {
        ex.is_none_or(|ex| chosen.iter().all(|&h| !ex.contains(h, g)))
    };
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut nodes = 0u64;
    for_each_partition(catalog, &allowed, compatible, |sel| {
        nodes += 1;
        let value: f64 = sel.iter().map(|&g| spec.signed(g)).sum();
        let mut set = sel.to_vec();
        set.sort_unstable();
        let take = match &best {
            None => true,
            Some((v, s)) => value < v - TIE_TOL || (value <= v + TIE_TOL && set < *s),
        };
        if take {
            best = Some((value, set));
        }
        ControlFlow::Continue(())
    });
    Ok(match best {
        Some((_, set)) => {
            let total = set.iter().map(|&g| spec.objective_coefficients[g]).sum();
            finish(true, set, total, nodes, start)
        }
        None => finish(false, Vec::new(), 0.0, nodes, start),
    })
}

/// Solve spec for the best or worst matching under `notion` (`None` = unconstrained).
///
/// TNE and RHE restrict the groups; RUE and RSIE add exclusion pairs over the
/// TNE groups. TSE has no pairwise formulation.
pub fn notion_spec(
    catalog: &GroupCatalog,
    table: &CostShareTable,
    notion: Option<EquilibriumNotion>,
    objective: Objective,
) -> Result<SolveSpec> {
    let base = SolveSpec::unconstrained(catalog, objective);
    Ok(match notion {
        None => base,
        Some(EquilibriumNotion::Tne) => base.with_allowed(tne_groups(catalog, table)),
        Some(EquilibriumNotion::Rhe) => base.with_allowed(hermetic_groups(catalog, table)?),
        Some(EquilibriumNotion::Rue) => {
            let tne = tne_groups(catalog, table);
            let pairs = mergeable_pairs(catalog, table, &tne);
            base.with_allowed(tne).with_exclusions(pairs)
        }
        Some(EquilibriumNotion::Rsie) => {
            let tne = tne_groups(catalog, table);
            let pairs = individually_unstable_pairs(catalog, table, &tne);
            base.with_allowed(tne).with_exclusions(pairs)
        }
        Some(EquilibriumNotion::Tse) => {
            return Err(CtgError::UnsupportedNotion("tse".into()));
        }
    })
}

/// Price of stability and anarchy under one notion.
#[derive(Clone, Debug, PartialEq)]
pub struct PosPoa {
    pub optimum: f64,
    pub optimal: SolveResult,
    pub best: SolveResult,
    pub worst: SolveResult,
    /// `None` when the constrained problem is infeasible or the optimum is not positive.
    pub pos: Option<f64>,
    pub poa: Option<f64>,
}

pub fn pos_poa(
    catalog: &GroupCatalog,
    table: &CostShareTable,
    notion: EquilibriumNotion,
) -> Result<PosPoa> {
    let optimal = solve(catalog, &SolveSpec::unconstrained(catalog, Objective::Minimize))?;
    let optimum = optimal
        .objective_value
        .expect("singletons always give a feasible unconstrained problem");
    let best = solve(catalog, &notion_spec(catalog, table, Some(notion), Objective::Minimize)?)?;
    let worst = solve(catalog, &notion_spec(catalog, table, Some(notion), Objective::Maximize)?)?;
    let ratio = |r: &SolveResult| {
        r.objective_value
            .filter(|_| optimum > 0.0)
            .map(|v| v / optimum)
    };
    Ok(PosPoa {
        optimum,
        pos: ratio(&best),
        poa: ratio(&worst),
        optimal,
        best,
        worst,
    })
}
