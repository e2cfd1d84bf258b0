//! Cost-sharing protocols.
//!
//! All protocols here are oblivious: the shares of a group depend only on the
//! costs of that group and its subsets (plus the constant `D` of the
//! overcharged variant).

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CtgError, Result};
use crate::model::{BudgetMode, CostShareTable, GroupCatalog, Members, ProtocolTag, RiderId, EPS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidualWeighting {
    #[default]
    Proportional,
    Uniform,
}

impl fmt::Display for ResidualWeighting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ResidualWeighting::Proportional => f.write_str("proportional"),
            ResidualWeighting::Uniform => f.write_str("uniform"),
        }
    }
}

impl FromStr for ResidualWeighting {
    type Err = CtgError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "proportional" => Ok(ResidualWeighting::Proportional),
            "uniform" => Ok(ResidualWeighting::Uniform),
            other => Err(CtgError::InvalidParameter(format!(
                "unknown residual weighting '{other}'"
            ))),
        }
    }
}

/// Protocol selector for [`build_share_table`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Protocol {
    Externality,
    /// `d = None` uses the largest group cost of the catalog.
    OverchargedExternality { d: Option<f64> },
    Residual(ResidualWeighting),
    Subgroup,
}

impl Protocol {
    /// Parses a CLI protocol name, with the options that only some protocols use.
    pub fn parse(name: &str, weighting: ResidualWeighting, d: Option<f64>) -> Result<Self> {
        match name {
            "externality" => Ok(Protocol::Externality),
            "externality-over" => Ok(Protocol::OverchargedExternality { d }),
            "residual" => Ok(Protocol::Residual(weighting)),
            "subgroup" => Ok(Protocol::Subgroup),
            other => Err(CtgError::InvalidParameter(format!("unknown protocol '{other}'"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Protocol::Externality => "externality",
            Protocol::OverchargedExternality { .. } => "externality-over",
            Protocol::Residual(_) => "residual",
            Protocol::Subgroup => "subgroup",
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Protocol::Residual(w) => write!(f, "residual-{w}"),
            other => f.write_str(other.name()),
        }
    }
}

fn parallel_rows(
    catalog: &GroupCatalog,
    row: impl Fn(usize) -> Result<Vec<f64>> + Sync + Send,
) -> Result<Vec<Vec<f64>>> {
    (0..catalog.len()).into_par_iter().map(row).collect()
}

fn externality_row(catalog: &GroupCatalog, g: usize) -> Result<Vec<f64>> {
    let members = catalog.members(g);
    let total = catalog.cost(g);
    members
        .iter()
        .map(|r| {
            let rest = members.without(r);
            let c_rest = catalog.cost_or_empty(&rest).map_err(|_| CtgError::MissingSubset {
                group: members.clone(),
                subset: rest.clone(),
            })?;
            Ok(total - c_rest)
        })
        .collect()
}

/// `c_i(G) = c(G) - c(G \ {i})`.
pub fn externality_shares(catalog: &GroupCatalog) -> Result<CostShareTable> {
    let rows = parallel_rows(catalog, |g| externality_row(catalog, g))?;
    CostShareTable::new(catalog, rows, ProtocolTag::Externality, BudgetMode::Unconstrained)
}

/// Externality shares shifted up by `d`, which must be at least the largest group cost.
pub fn overcharged_externality_shares(catalog: &GroupCatalog, d: Option<f64>) -> Result<CostShareTable> {
    let required = catalog.max_cost();
    let d = d.unwrap_or(required);
    if !d.is_finite() || d < required {
        return Err(CtgError::DTooSmall { d, required });
    }
    let rows = parallel_rows(catalog, |g| {
        Ok(externality_row(catalog, g)?.into_iter().map(|v| v + d).collect())
    })?;
    CostShareTable::new(
        catalog,
        rows,
        ProtocolTag::OverchargedExternality { d },
        BudgetMode::Overcharging,
    )
}

/// Residual prices `p(i,G)` of one group; they sum to `c(G) - Σ c({j})`.
pub fn residual_prices(
    catalog: &GroupCatalog,
    g: usize,
    weighting: ResidualWeighting,
) -> Result<Vec<f64>> {
    let members = catalog.members(g);
    let solo: Vec<f64> = members.iter().map(|r| catalog.cost(catalog.singleton(r))).collect();
    let solo_sum: f64 = solo.iter().sum();
    let delta = catalog.cost(g) - solo_sum;
    match weighting {
        ResidualWeighting::Uniform => Ok(vec![delta / members.len() as f64; members.len()]),
        ResidualWeighting::Proportional => {
            if solo_sum <= 0.0 {
                return Err(CtgError::ZeroSingletonCost(members.clone()));
            }
            Ok(solo.iter().map(|c| delta * c / solo_sum).collect())
        }
    }
}

/// `c_i(G) = c({i}) + p(i,G)`.
pub fn residual_shares(catalog: &GroupCatalog, weighting: ResidualWeighting) -> Result<CostShareTable> {
    let rows = parallel_rows(catalog, |g| {
        let prices = residual_prices(catalog, g, weighting)?;
        Ok(catalog
            .members(g)
            .iter()
            .zip(prices)
            .map(|(r, p)| catalog.cost(catalog.singleton(r)) + p)
            .collect())
    })?;
    CostShareTable::new(
        catalog,
        rows,
        ProtocolTag::Residual(weighting),
        BudgetMode::Balanced,
    )
}

/// Greedy cheapest-average partition of a group.
#[derive(Clone, Debug, PartialEq)]
pub struct SubgroupDecomposition {
    pub members: Members,
    /// `z_i(G)`, aligned with `members`.
    pub z: Vec<f64>,
    /// `φ_i(G)`, aligned with `members`.
    pub phi: Vec<Members>,
    /// Blocks with their average cost, ascending.
    pub ordered_parts: Vec<(Members, f64)>,
    pub excess: f64,
}

impl SubgroupDecomposition {
    pub fn z_of(&self, rider: RiderId) -> Option<f64> {
        self.members.position(rider).map(|p| self.z[p])
    }
}

/// Order used by the greedy argmin: smaller average, then larger group, then members.
pub fn subgroup_order(a: (f64, &Members), b: (f64, &Members)) -> Ordering {
    a.0.total_cmp(&b.0)
        .then_with(|| b.1.len().cmp(&a.1.len()))
        .then_with(|| a.1.cmp(b.1))
}

/// Global rank of every catalog group under [`subgroup_order`].
///
/// Scanning a group's subsets by rank and taking each one that still fits
/// reproduces the repeated argmin without re-minimising.
#[derive(Clone, Debug)]
pub struct SubgroupRanking {
    rank: Vec<usize>,
}

impl SubgroupRanking {
    pub fn new(catalog: &GroupCatalog) -> Self {
        let avg = |g: usize| catalog.cost(g) / catalog.members(g).len() as f64;
        let mut order: Vec<usize> = (0..catalog.len()).collect();
        order.sort_by(|&a, &b| {
            subgroup_order((avg(a), catalog.members(a)), (avg(b), catalog.members(b)))
        });
        let mut rank = vec![0; catalog.len()];
        for (k, g) in order.into_iter().enumerate() {
            rank[g] = k;
        }
        Self { rank }
    }

    pub fn decompose(&self, catalog: &GroupCatalog, members: &Members) -> Result<SubgroupDecomposition> {
        let total = catalog.total_cost(members)?;
        let mut subsets: Vec<usize> = Vec::with_capacity((1 << members.len()) - 1);
        let full = (1u32 << members.len()) - 1;
        for mask in 1..=full {
            let h = members.select(mask);
            let idx = catalog.index_of(&h).ok_or_else(|| CtgError::MissingSubset {
                group: members.clone(),
                subset: h.clone(),
            })?;
            subsets.push(idx);
        }
        subsets.sort_by_key(|&h| self.rank[h]);
        let mut remaining = members.clone();
        let mut blocks = Vec::new();
        for h in subsets {
            if remaining.is_empty() {
                break;
            }
            let hm = catalog.members(h);
            if hm.is_subset_of(&remaining) {
                blocks.push((hm.clone(), catalog.cost(h) / hm.len() as f64));
                remaining = Members::new(remaining.iter().filter(|&r| !hm.contains(r)));
            }
        }
        Ok(assemble(members, total, blocks))
    }
}

pub(crate) fn assemble(members: &Members, total: f64, mut blocks: Vec<(Members, f64)>) -> SubgroupDecomposition {
    blocks.sort_by(|a, b| a.1.total_cmp(&b.1));
    let mut z = vec![0.0; members.len()];
    let mut phi = vec![Members::default(); members.len()];
    for (block, avg) in &blocks {
        for r in block.iter() {
            let p = members.position(r).expect("block within group");
            z[p] = *avg;
            phi[p] = block.clone();
        }
    }
    let excess = total - z.iter().sum::<f64>();
    SubgroupDecomposition {
        members: members.clone(),
        z,
        phi,
        ordered_parts: blocks,
        excess,
    }
}

/// Runs the greedy decomposition for a single group.
pub fn subgroup_decompose(members: &Members, catalog: &GroupCatalog) -> Result<SubgroupDecomposition> {
    SubgroupRanking::new(catalog).decompose(catalog, members)
}

/// Budget-balanced shares from a decomposition.
pub fn balance_subgroup(dec: &SubgroupDecomposition, total: f64) -> Vec<f64> {
    let n = dec.members.len() as f64;
    if dec.excess >= -EPS {
        return dec.z.iter().map(|z| z + dec.excess / n).collect();
    }
    let avg = total / n;
    let parts = &dec.ordered_parts;
    let q = parts.len();
    let mass = |k: usize| parts[k].0.len() as f64;
    let i1 = parts
        .iter()
        .position(|(_, z)| *z >= avg)
        .unwrap_or(q - 1);
    // S(j): blocks i1..=j flattened to the average, the rest at z
    let collected = |j: Option<usize>| -> f64 {
        (0..q)
            .map(|k| {
                let flat = j.is_some_and(|j| k >= i1 && k <= j);
                if flat {
                    avg * mass(k)
                } else {
                    parts[k].1 * mass(k)
                }
            })
            .sum()
    };
    let mut i2: Option<usize> = None;
    for j in i1..q {
        if collected(Some(j)) >= total {
            i2 = Some(j);
        } else {
            break;
        }
    }
    let mut block_cost: Vec<f64> = parts.iter().map(|(_, z)| *z).collect();
    if let Some(j) = i2 {
        for c in &mut block_cost[i1..=j] {
            *c = avg;
        }
    }
    let absorber = i2.map_or(i1, |j| j + 1);
    if absorber < q {
        let others: f64 = (0..q)
            .filter(|&k| k != absorber)
            .map(|k| block_cost[k] * mass(k))
            .sum();
        block_cost[absorber] = (total - others) / mass(absorber);
    }
    let mut shares = vec![0.0; dec.members.len()];
    for (k, (block, _)) in parts.iter().enumerate() {
        for r in block.iter() {
            shares[dec.members.position(r).expect("block within group")] = block_cost[k];
        }
    }
    shares
}

/// Subgroup-based shares for every catalog group.
pub fn subgroup_shares(catalog: &GroupCatalog) -> Result<CostShareTable> {
    catalog.check_subset_closed()?;
    let ranking = SubgroupRanking::new(catalog);
    let rows = parallel_rows(catalog, |g| {
        let dec = ranking.decompose(catalog, catalog.members(g))?;
        Ok(balance_subgroup(&dec, catalog.cost(g)))
    })?;
    CostShareTable::new(catalog, rows, ProtocolTag::Subgroup, BudgetMode::Balanced)
}

/// Dispatches to the selected protocol.
pub fn build_share_table(catalog: &GroupCatalog, protocol: Protocol) -> Result<CostShareTable> {
    match protocol {
        Protocol::Externality => externality_shares(catalog),
        Protocol::OverchargedExternality { d } => overcharged_externality_shares(catalog, d),
        Protocol::Residual(w) => residual_shares(catalog, w),
        Protocol::Subgroup => subgroup_shares(catalog),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::worked_example_catalog;
    use approx::assert_abs_diff_eq;

    fn shares_of(table: &CostShareTable, cat: &GroupCatalog, m: &[usize]) -> Vec<f64> {
        table.row(cat.index_of(&Members::new(m.iter().copied())).unwrap()).to_vec()
    }

    fn close(got: &[f64], want: &[f64], tol: f64) {
        assert_eq!(got.len(), want.len());
        for (g, w) in got.iter().zip(want) {
            assert_abs_diff_eq!(*g, *w, epsilon = tol);
        }
    }

    #[test]
    fn externality_worked_example() {
        let cat = worked_example_catalog();
        let t = externality_shares(&cat).unwrap();
        close(&shares_of(&t, &cat, &[0, 1]), &[12.0, 8.0], 1e-9);
        close(&shares_of(&t, &cat, &[0, 1, 2]), &[14.36, 8.48, 9.44], 1e-9);
        close(&shares_of(&t, &cat, &[2]), &[9.24], 1e-12);
    }

    #[test]
    fn externality_needs_subsets() {
        let cat = GroupCatalog::from_costs(
            3,
            [(vec![0], 1.0), (vec![1], 1.0), (vec![2], 1.0), (vec![0, 1, 2], 2.0)],
        )
        .unwrap();
        assert!(matches!(
            externality_shares(&cat),
            Err(CtgError::MissingSubset { .. })
        ));
    }

    #[test]
    fn overcharged_adds_d() {
        let cat = worked_example_catalog();
        let t = overcharged_externality_shares(&cat, Some(40.44)).unwrap();
        let s = shares_of(&t, &cat, &[0, 1]);
        close(&s, &[52.44, 48.44], 1e-9);
        assert!(s.iter().sum::<f64>() >= 31.0);
        assert!(t.budget_violations(&cat).is_empty());
        assert!(matches!(
            overcharged_externality_shares(&cat, Some(40.0)),
            Err(CtgError::DTooSmall { .. })
        ));
        let default = overcharged_externality_shares(&cat, None).unwrap();
        assert_eq!(default.protocol, ProtocolTag::OverchargedExternality { d: 40.44 });
    }

    #[test]
    fn residual_worked_example() {
        let cat = worked_example_catalog();
        let t = residual_shares(&cat, ResidualWeighting::Proportional).unwrap();
        close(&shares_of(&t, &cat, &[0, 1]), &[16.98, 14.02], 0.01);
        close(&shares_of(&t, &cat, &[1, 2]), &[17.55, 8.53], 0.01);
        close(&shares_of(&t, &cat, &[0, 2]), &[22.8, 9.16], 0.01);
        close(&shares_of(&t, &cat, &[0, 1, 2]), &[18.15, 15.0, 7.29], 0.01);
        close(&shares_of(&t, &cat, &[1]), &[19.0], 1e-12);
        assert!(t.budget_violations(&cat).is_empty());
    }

    #[test]
    fn residual_uniform_splits_evenly() {
        let cat = worked_example_catalog();
        let t = residual_shares(&cat, ResidualWeighting::Uniform).unwrap();
        close(&shares_of(&t, &cat, &[0, 1]), &[23.0 - 5.5, 19.0 - 5.5], 1e-9);
    }

    #[test]
    fn residual_zero_singletons() {
        let cat = GroupCatalog::from_costs(2, [(vec![0], 0.0), (vec![1], 0.0), (vec![0, 1], 1.0)])
            .unwrap();
        assert!(matches!(
            residual_shares(&cat, ResidualWeighting::Proportional),
            Err(CtgError::ZeroSingletonCost(_))
        ));
        assert!(residual_shares(&cat, ResidualWeighting::Uniform).is_ok());
    }

    #[test]
    fn subgroup_decompositions() {
        let cat = worked_example_catalog();
        let d = subgroup_decompose(&Members::from([0, 1]), &cat).unwrap();
        assert_eq!(d.ordered_parts.len(), 1);
        close(&d.z, &[15.5, 15.5], 1e-12);
        assert_abs_diff_eq!(d.excess, 0.0, epsilon = 1e-12);

        let d = subgroup_decompose(&Members::from([0, 1, 2]), &cat).unwrap();
        let blocks: Vec<&Members> = d.ordered_parts.iter().map(|(m, _)| m).collect();
        assert_eq!(blocks, vec![&Members::from([2]), &Members::from([0, 1])]);
        close(&d.z, &[15.5, 15.5, 9.24], 1e-12);
        assert_abs_diff_eq!(d.excess, 0.2, epsilon = 1e-9);

        let d = subgroup_decompose(&Members::from([1]), &cat).unwrap();
        assert_eq!(d.phi, vec![Members::from([1])]);
        assert_eq!(d.excess, 0.0);
    }

    #[test]
    fn subgroup_worked_example() {
        let cat = worked_example_catalog();
        let t = subgroup_shares(&cat).unwrap();
        close(&shares_of(&t, &cat, &[0, 1]), &[15.5, 15.5], 1e-9);
        close(&shares_of(&t, &cat, &[0, 2]), &[22.72, 9.24], 1e-9);
        close(&shares_of(&t, &cat, &[1, 2]), &[16.84, 9.24], 1e-9);
        // positive excess spread over the whole group
        close(
            &shares_of(&t, &cat, &[0, 1, 2]),
            &[15.5 + 0.2 / 3.0, 15.5 + 0.2 / 3.0, 9.24 + 0.2 / 3.0],
            1e-9,
        );
        assert!(t.budget_violations(&cat).is_empty());
    }

    #[test]
    fn negative_excess_flattens_middle_blocks() {
        // blocks {0}:1, {1}:4, {2}:6, avg 3 -> {1} flattened to 3, {2} absorbs
        let cat = GroupCatalog::from_costs(
            3,
            [
                (vec![0], 1.0),
                (vec![1], 4.0),
                (vec![2], 6.0),
                (vec![0, 1], 100.0),
                (vec![0, 2], 100.0),
                (vec![1, 2], 100.0),
                (vec![0, 1, 2], 9.0),
            ],
        )
        .unwrap();
        let g = cat.index_of(&Members::from([0, 1, 2])).unwrap();
        let dec = subgroup_decompose(cat.members(g), &cat).unwrap();
        // {0} ranks ahead of the whole group, leaving three singleton blocks
        let blocks: Vec<&Members> = dec.ordered_parts.iter().map(|(m, _)| m).collect();
        assert_eq!(blocks, vec![&Members::from([0]), &Members::from([1]), &Members::from([2])]);

        let dec = assemble(
            &Members::from([0, 1, 2]),
            9.0,
            vec![
                (Members::from([0]), 1.0),
                (Members::from([1]), 4.0),
                (Members::from([2]), 6.0),
            ],
        );
        assert_abs_diff_eq!(dec.excess, -2.0, epsilon = 1e-12);
        let s = balance_subgroup(&dec, 9.0);
        close(&s, &[1.0, 3.0, 5.0], 1e-12);
    }
}
