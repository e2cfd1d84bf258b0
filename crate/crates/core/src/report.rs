//! Protocol by notion sweeps and their CSV, JSON and DOT outputs.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equilibria::verify;
use crate::error::{CtgError, Result};
use crate::feasibility::{enumerate_feasible_groups, FeasibilityParams};
use crate::model::{
    validate_matching, CostShareTable, EquilibriumNotion, GroupCatalog, GroupOrigin, Matching, EPS,
};
use crate::protocols::{build_share_table, Protocol};
use crate::scenario::Instance;
use crate::solver::{notion_spec, solve, Objective, SolveSpec, SolveStatus};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Case {
    Best,
    Worst,
}

impl Case {
    fn objective(self) -> Objective {
        match self {
            Case::Best => Objective::Minimize,
            Case::Worst => Objective::Maximize,
        }
    }
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Case::Best => "best",
            Case::Worst => "worst",
        })
    }
}

fn notion_name(notion: Option<EquilibriumNotion>) -> &'static str {
    notion.map_or("none", |n| n.as_str())
}

/// One line of the KPI table. Hours are pax or vehicle hours; `ratio` is the
/// objective over the unconstrained optimum (PoS for best, PoA for worst).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KpiRow {
    pub protocol: String,
    pub notion: String,
    pub case: Case,
    pub status: SolveStatus,
    pub pax_hours: Option<f64>,
    pub veh_hours: Option<f64>,
    pub n_groups: Option<usize>,
    pub ratio: Option<f64>,
    pub objective: Option<f64>,
    pub verified: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoverageRow {
    pub protocol: String,
    pub notion: String,
    pub case: Case,
    pub coverage: Option<f64>,
}

/// Everything one sweep produces.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub catalog: GroupCatalog,
    pub optimum: f64,
    pub kpis: Vec<KpiRow>,
    pub coverage: Vec<CoverageRow>,
    /// Regret CDF of each feasible best case, keyed `protocol_notion`.
    pub regret: Vec<(String, Vec<(f64, f64)>)>,
    /// Best and worst matchings per row of `kpis`, `None` when infeasible.
    pub matchings: Vec<Option<Matching>>,
}

impl Experiment {
    /// True when some RSIE cell had no feasible matching.
    pub fn rsie_infeasible(&self) -> bool {
        self.kpis
            .iter()
            .any(|r| r.notion == "rsie" && r.status == SolveStatus::Infeasible)
    }
}

/// Passenger hours `sum (t + w)` and vehicle hours `sum duration` of a matching.
///
/// Groups without a route (catalogs built from bare costs) contribute nothing.
pub fn hours(catalog: &GroupCatalog, matching: &Matching) -> (f64, f64) {
    let mut pax = 0.0;
    let mut veh = 0.0;
    for &g in matching.selected() {
        if let Some(route) = &catalog.group(g).route {
            pax += route.wait.iter().chain(&route.in_vehicle).sum::<f64>();
            veh += route.duration();
        }
    }
    (pax / 3600.0, veh / 3600.0)
}

/// Share of the selected groups' cost that the riders pay.
pub fn coverage_ratio(matching: &Matching, table: &CostShareTable, catalog: &GroupCatalog) -> f64 {
    let paid: f64 = matching.selected().iter().map(|&g| table.group_sum(g)).sum();
    paid / matching.total_cost(catalog)
}

/// Relative regret of each rider against their cheapest group, as sorted
/// `(value, cumulative fraction)` points.
///
/// A zero cheapest share gives regret 0 when matched and infinity otherwise.
pub fn regret_cdf(matching: &Matching, table: &CostShareTable, catalog: &GroupCatalog) -> Vec<(f64, f64)> {
    let mut values = Vec::with_capacity(catalog.n_riders());
    for &g in matching.selected() {
        for rider in catalog.members(g).iter() {
            let own = table.cost_of(catalog, g, rider);
            let best = catalog
                .groups_of(rider)
                .iter()
                .map(|&h| table.cost_of(catalog, h, rider))
                .fold(f64::INFINITY, f64::min);
            let r = if best.abs() <= EPS {
                if (own - best).abs() <= EPS {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                ((own - best) / best).max(0.0)
            };
            values.push(r);
        }
    }
    values.sort_by(f64::total_cmp);
    let n = values.len() as f64;
    values
        .into_iter()
        .enumerate()
        .map(|(k, v)| (v, (k + 1) as f64 / n))
        .collect()
}

/// Riders linked when they form a directly feasible pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShareabilityGraph {
    pub edges: Vec<(usize, usize)>,
    /// Directly feasible groups per size.
    pub group_sizes: BTreeMap<usize, usize>,
    pub mean_degree: f64,
    pub nodes: usize,
}

pub fn shareability_graph(catalog: &GroupCatalog) -> ShareabilityGraph {
    let mut edges = Vec::new();
    let mut group_sizes = BTreeMap::new();
    for g in catalog.groups() {
        if g.origin != GroupOrigin::Feasible {
            continue;
        }
        *group_sizes.entry(g.size()).or_insert(0) += 1;
        if let [a, b] = g.members.as_slice() {
            edges.push((*a, *b));
        }
    }
    edges.sort_unstable();
    let nodes = catalog.n_riders();
    let mean_degree = if nodes == 0 {
        0.0
    } else {
        2.0 * edges.len() as f64 / nodes as f64
    };
    ShareabilityGraph {
        edges,
        group_sizes,
        mean_degree,
        nodes,
    }
}

impl ShareabilityGraph {
    pub fn to_dot(&self) -> String {
        let mut out = String::from("graph shareability {\n");
        for v in 0..self.nodes {
            out.push_str(&format!("  {v};\n"));
        }
        for (a, b) in &self.edges {
            out.push_str(&format!("  {a} -- {b};\n"));
        }
        out.push_str("}\n");
        out
    }
}

struct Cell {
    rows: Vec<KpiRow>,
    coverage: Vec<CoverageRow>,
    regret: Option<(String, Vec<(f64, f64)>)>,
    matchings: Vec<Option<Matching>>,
}

fn run_cell(
    catalog: &GroupCatalog,
    optimum: f64,
    protocol: &str,
    table: &CostShareTable,
    notion: Option<EquilibriumNotion>,
) -> Result<Cell> {
    let mut cell = Cell {
        rows: Vec::new(),
        coverage: Vec::new(),
        regret: None,
        matchings: Vec::new(),
    };
    for case in [Case::Best, Case::Worst] {
        let spec = match notion {
            Some(_) => notion_spec(catalog, table, notion, case.objective())?,
            None => SolveSpec::unconstrained(catalog, case.objective()),
        };
        let res = solve(catalog, &spec)?;
        let feasible = res.is_optimal();
        let verified = if !feasible {
            None
        } else {
            Some(match notion {
                Some(n) => verify(&res.matching, n, table, catalog)?,
                None => validate_matching(&res.matching, catalog).valid,
            })
        };
        let (pax, veh) = hours(catalog, &res.matching);
        cell.rows.push(KpiRow {
            protocol: protocol.to_string(),
            notion: notion_name(notion).to_string(),
            case,
            status: res.status,
            pax_hours: feasible.then_some(pax),
            veh_hours: feasible.then_some(veh),
            n_groups: feasible.then_some(res.matching.len()),
            ratio: res
                .objective_value
                .filter(|_| optimum > 0.0)
                .map(|v| v / optimum),
            objective: res.objective_value,
            verified,
        });
        cell.coverage.push(CoverageRow {
            protocol: protocol.to_string(),
            notion: notion_name(notion).to_string(),
            case,
            coverage: feasible.then(|| coverage_ratio(&res.matching, table, catalog)),
        });
        if case == Case::Best && feasible {
            cell.regret = Some((
                format!("{protocol}_{}", notion_name(notion)),
                regret_cdf(&res.matching, table, catalog),
            ));
        }
        cell.matchings.push(feasible.then_some(res.matching));
    }
    Ok(cell)
}

/// Runs every protocol by notion cell on an already built catalog.
///
/// Rows come out ordered by protocol, notion, then best before worst.
pub fn run_on_catalog(
    catalog: &GroupCatalog,
    protocols: &[Protocol],
    notions: &[Option<EquilibriumNotion>],
) -> Result<Experiment> {
    let optimum = solve(catalog, &SolveSpec::unconstrained(catalog, Objective::Minimize))?
        .objective_value
        .expect("everyone alone is always feasible");
    let tables = protocols
        .par_iter()
        .map(|&p| build_share_table(catalog, p))
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, Option<EquilibriumNotion>)> = (0..protocols.len())
        .flat_map(|p| notions.iter().map(move |&n| (p, n)))
        .collect();
    let cells = jobs
        .par_iter()
        .map(|&(p, n)| run_cell(catalog, optimum, &protocols[p].to_string(), &tables[p], n))
        .collect::<Result<Vec<_>>>()?;
    let mut exp = Experiment {
        catalog: catalog.clone(),
        optimum,
        kpis: Vec::new(),
        coverage: Vec::new(),
        regret: Vec::new(),
        matchings: Vec::new(),
    };
    for cell in cells {
        exp.kpis.extend(cell.rows);
        exp.coverage.extend(cell.coverage);
        exp.regret.extend(cell.regret);
        exp.matchings.extend(cell.matchings);
    }
    Ok(exp)
}

/// Generates the catalog for `instance`, then sweeps it.
pub fn run_experiment(
    instance: &Instance,
    feasibility: &FeasibilityParams,
    protocols: &[Protocol],
    notions: &[Option<EquilibriumNotion>],
) -> Result<Experiment> {
    let catalog = enumerate_feasible_groups(&instance.requests, &instance.params, feasibility)?;
    run_on_catalog(&catalog, protocols, notions)
}

fn fmt_opt<T: fmt::Display>(v: Option<T>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

fn write_text(path: &Path, text: String) -> Result<()> {
    fs::write(path, text).map_err(|source| CtgError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|e| CtgError::Row {
        path: path.to_path_buf(),
        row: 0,
        message: e.to_string(),
    })
}

fn write_rows<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv_writer(path)?;
    let err = |k: usize| {
        move |e: csv::Error| CtgError::Row {
            path: path.to_path_buf(),
            row: k,
            message: e.to_string(),
        }
    };
    w.write_record(header).map_err(err(0))?;
    for (k, row) in rows.into_iter().enumerate() {
        w.write_record(row.into_iter().collect::<Vec<_>>()).map_err(err(k + 1))?;
    }
    w.flush().map_err(|source| CtgError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes kpi.csv, coverage.csv, regret_<cell>.csv, shareability.dot and
/// shareability.json into `dir`, creating it if needed.
pub fn write_outputs(exp: &Experiment, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|source| CtgError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    write_rows(
        &dir.join("kpi.csv"),
        &[
            "protocol", "notion", "case", "status", "pax_hours", "veh_hours", "n_groups", "ratio",
            "objective", "verified",
        ],
        exp.kpis.iter().map(|r| {
            vec![
                r.protocol.clone(),
                r.notion.clone(),
                r.case.to_string(),
                match r.status {
                    SolveStatus::Optimal => "optimal".to_string(),
                    SolveStatus::Infeasible => "infeasible".to_string(),
                },
                fmt_opt(r.pax_hours),
                fmt_opt(r.veh_hours),
                fmt_opt(r.n_groups),
                fmt_opt(r.ratio),
                fmt_opt(r.objective),
                fmt_opt(r.verified),
            ]
        }),
    )?;
    write_rows(
        &dir.join("coverage.csv"),
        &["protocol", "notion", "case", "coverage"],
        exp.coverage.iter().map(|r| {
            vec![
                r.protocol.clone(),
                r.notion.clone(),
                r.case.to_string(),
                fmt_opt(r.coverage),
            ]
        }),
    )?;
    for (name, points) in &exp.regret {
        write_rows(
            &dir.join(format!("regret_{name}.csv")),
            &["regret", "cdf"],
            points.iter().map(|(v, c)| vec![v.to_string(), c.to_string()]),
        )?;
    }
    let graph = shareability_graph(&exp.catalog);
    write_text(&dir.join("shareability.dot"), graph.to_dot())?;
    let json = serde_json::to_string_pretty(&graph).expect("graph serialises");
    write_text(&dir.join("shareability.json"), json + "\n")
}
