//! JSON files exchanged between CLI stages.
//!
//! Fields are written in alphabetical order and member lists sorted, so output
//! is byte-for-byte deterministic.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::equilibria::{ExclusionKind, ExclusionPairs};
use crate::error::{CtgError, Result};
use crate::feasibility::Route;
use crate::model::{
    BudgetMode, CostShareTable, EquilibriumNotion, Group, GroupCatalog, GroupOrigin, Matching,
    Members, ProtocolTag, RiderId,
};
use crate::protocols::ResidualWeighting;
use crate::solver::{SolveResult, SolveStatus};

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| CtgError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| CtgError::Json {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(value).map_err(|source| CtgError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    fs::write(path, text + "\n").map_err(|source| CtgError::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupRecord {
    pub direct_costs: BTreeMap<RiderId, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inherited_from: Option<Members>,
    pub members: Members,
    pub operator_cost: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub route: Option<Route>,
    #[serde(default)]
    pub societal_cost: f64,
    pub total_cost: f64,
}

impl From<&Group> for GroupRecord {
    fn from(g: &Group) -> Self {
        Self {
            direct_costs: g.members.iter().zip(g.direct_costs.iter().copied()).collect(),
            inherited_from: match &g.origin {
                GroupOrigin::Feasible => None,
                GroupOrigin::Inherited(src) => Some(src.clone()),
            },
            members: g.members.clone(),
            operator_cost: g.operator_cost,
            route: g.route.clone(),
            societal_cost: g.societal_cost,
            total_cost: g.total_cost,
        }
    }
}

impl GroupRecord {
    fn into_group(self) -> Result<Group> {
        let members = Members::new(self.members.iter());
        let direct_costs = members
            .iter()
            .map(|r| {
                self.direct_costs.get(&r).copied().ok_or_else(|| {
                    CtgError::InvalidCatalog(format!("group {members} lacks a direct cost for {r}"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if self.direct_costs.len() != members.len() {
            return Err(CtgError::InvalidCatalog(format!(
                "group {members} has direct costs for non-members"
            )));
        }
        Ok(Group {
            members,
            route: self.route,
            total_cost: self.total_cost,
            direct_costs,
            operator_cost: self.operator_cost,
            societal_cost: self.societal_cost,
            origin: self
                .inherited_from
                .map_or(GroupOrigin::Feasible, GroupOrigin::Inherited),
        })
    }
}

pub fn catalog_to_records(catalog: &GroupCatalog) -> Vec<GroupRecord> {
    catalog.groups().iter().map(GroupRecord::from).collect()
}

/// Rebuilds a catalog; the rider count is one past the largest rider id.
pub fn catalog_from_records(records: Vec<GroupRecord>) -> Result<GroupCatalog> {
    let n = records
        .iter()
        .flat_map(|r| r.members.iter())
        .max()
        .map_or(0, |m| m + 1);
    let groups = records
        .into_iter()
        .map(GroupRecord::into_group)
        .collect::<Result<Vec<_>>>()?;
    GroupCatalog::new(n, groups)
}

pub fn catalog_from_json(text: &str) -> Result<GroupCatalog> {
    let records: Vec<GroupRecord> =
        serde_json::from_str(text).map_err(|e| CtgError::InvalidCatalog(e.to_string()))?;
    catalog_from_records(records)
}

pub fn catalog_to_json(catalog: &GroupCatalog) -> String {
    serde_json::to_string_pretty(&catalog_to_records(catalog)).expect("catalog serialises")
}

pub fn save_catalog(path: impl AsRef<Path>, catalog: &GroupCatalog) -> Result<()> {
    write_json(path, &catalog_to_records(catalog))
}

pub fn load_catalog(path: impl AsRef<Path>) -> Result<GroupCatalog> {
    catalog_from_records(read_json(path)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShareEntry {
    pub group_members: Members,
    pub per_rider_share: BTreeMap<RiderId, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SharesRecord {
    pub budget_mode: BudgetMode,
    pub entries: Vec<ShareEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overcharge_d: Option<f64>,
    pub protocol: String,
}

fn tag_name(tag: &ProtocolTag) -> (String, Option<f64>) {
    match tag {
        ProtocolTag::OverchargedExternality { d } => (tag.to_string(), Some(*d)),
        other => (other.to_string(), None),
    }
}

fn parse_tag(name: &str, d: Option<f64>) -> Result<ProtocolTag> {
    Ok(match name {
        "externality" => ProtocolTag::Externality,
        "externality-over" => ProtocolTag::OverchargedExternality {
            d: d.ok_or_else(|| CtgError::InvalidShares("overcharged table without D".into()))?,
        },
        "subgroup" => ProtocolTag::Subgroup,
        "ordinal" => ProtocolTag::Ordinal,
        "custom" => ProtocolTag::Custom,
        other => match other.strip_prefix("residual-") {
            Some(w) => ProtocolTag::Residual(w.parse::<ResidualWeighting>()?),
            None => return Err(CtgError::InvalidShares(format!("unknown protocol '{other}'"))),
        },
    })
}

pub fn shares_to_record(catalog: &GroupCatalog, table: &CostShareTable) -> SharesRecord {
    let (protocol, overcharge_d) = tag_name(&table.protocol);
    SharesRecord {
        budget_mode: table.budget_mode,
        entries: (0..catalog.len())
            .map(|g| ShareEntry {
                group_members: catalog.members(g).clone(),
                per_rider_share: catalog
                    .members(g)
                    .iter()
                    .zip(table.row(g).iter().copied())
                    .collect(),
            })
            .collect(),
        overcharge_d,
        protocol,
    }
}

/// Aligns a shares file with `catalog`; every catalog group must appear once.
pub fn shares_from_record(catalog: &GroupCatalog, record: SharesRecord) -> Result<CostShareTable> {
    let mut rows: Vec<Option<Vec<f64>>> = vec![None; catalog.len()];
    for entry in record.entries {
        let g = catalog
            .index_of(&entry.group_members)
            .ok_or_else(|| CtgError::UnknownGroup(entry.group_members.clone()))?;
        let row = entry
            .group_members
            .iter()
            .map(|r| {
                entry.per_rider_share.get(&r).copied().ok_or_else(|| {
                    CtgError::InvalidShares(format!(
                        "group {} lacks a share for rider {r}",
                        entry.group_members
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if rows[g].replace(row).is_some() {
            return Err(CtgError::InvalidShares(format!(
                "group {} listed twice",
                entry.group_members
            )));
        }
    }
    let rows = rows
        .into_iter()
        .enumerate()
        .map(|(g, r)| {
            r.ok_or_else(|| {
                CtgError::InvalidShares(format!("no shares for group {}", catalog.members(g)))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let tag = parse_tag(&record.protocol, record.overcharge_d)?;
    CostShareTable::new(catalog, rows, tag, record.budget_mode)
}

pub fn save_shares(path: impl AsRef<Path>, catalog: &GroupCatalog, table: &CostShareTable) -> Result<()> {
    write_json(path, &shares_to_record(catalog, table))
}

pub fn load_shares(path: impl AsRef<Path>, catalog: &GroupCatalog) -> Result<CostShareTable> {
    shares_from_record(catalog, read_json(path)?)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchingRecord {
    pub groups: Vec<Members>,
}

impl MatchingRecord {
    pub fn from_matching(catalog: &GroupCatalog, matching: &Matching) -> Self {
        let mut groups: Vec<Members> = matching.members(catalog).cloned().collect();
        groups.sort();
        Self { groups }
    }

    pub fn to_matching(&self, catalog: &GroupCatalog) -> Result<Matching> {
        Matching::from_members(catalog, &self.groups)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub groups: Vec<Members>,
    pub nodes: u64,
    pub objective: Option<f64>,
    pub seconds: f64,
    pub status: SolveStatus,
}

impl ResultRecord {
    pub fn new(catalog: &GroupCatalog, result: &SolveResult) -> Self {
        Self {
            groups: MatchingRecord::from_matching(catalog, &result.matching).groups,
            nodes: result.nodes_explored,
            objective: result.objective_value,
            seconds: result.wall_time,
            status: result.status,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrunedRecord {
    pub groups: Vec<Members>,
    pub notion: String,
}

impl PrunedRecord {
    pub fn new(catalog: &GroupCatalog, notion: EquilibriumNotion, kept: &[usize]) -> Self {
        Self {
            groups: kept.iter().map(|&g| catalog.members(g).clone()).collect(),
            notion: notion.to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairsRecord {
    pub kind: ExclusionKind,
    pub pairs: Vec<(Members, Members)>,
}

impl PairsRecord {
    pub fn new(catalog: &GroupCatalog, pairs: &ExclusionPairs) -> Self {
        Self {
            kind: pairs.kind,
            pairs: pairs
                .iter()
                .map(|(a, b)| (catalog.members(a).clone(), catalog.members(b).clone()))
                .collect(),
        }
    }

    pub fn to_pairs(&self, catalog: &GroupCatalog) -> Result<ExclusionPairs> {
        let mut out = ExclusionPairs::new(self.kind);
        for (a, b) in &self.pairs {
            let ia = catalog.index_of(a).ok_or_else(|| CtgError::UnknownGroup(a.clone()))?;
            let ib = catalog.index_of(b).ok_or_else(|| CtgError::UnknownGroup(b.clone()))?;
            out.insert(ia, ib);
        }
        Ok(out)
    }
}
