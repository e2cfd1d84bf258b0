use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use ctg_core::equilibria::{
    exists_equilibrium, hermetic_groups, individually_unstable_pairs, mergeable_pairs,
    ordinal_to_cardinal, tne_groups, verify, OrdinalInstance,
};
use ctg_core::feasibility::{enumerate_feasible_groups, FeasibilityParams, Metric};
use ctg_core::io::{
    load_catalog, load_shares, read_json, save_catalog, save_shares, write_json, MatchingRecord,
    PairsRecord, PrunedRecord, ResultRecord,
};
use ctg_core::protocols::{build_share_table, Protocol, ResidualWeighting};
use ctg_core::report::{run_experiment, write_outputs};
use ctg_core::scenario::{
    generate_demand, load_instance, save_instance, DemandConfig, DestinationMode, Geometry, Instance,
};
use ctg_core::solver::{brute_force_solve, notion_spec, solve, Objective, SolveSpec};
use ctg_core::{CostParams, CtgError, EquilibriumNotion, GroupCatalog, Result};

#[derive(Parser)]
#[command(name = "ctg", version, about = "Co-travellers game toolkit for ride-pooling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw seeded synthetic trip requests.
    Demand(DemandArgs),
    /// Build the subset-closed catalog of feasible groups.
    Generate(GenerateArgs),
    /// Price every group under a protocol.
    Shares(SharesArgs),
    /// Keep the groups allowed by TNE or RHE.
    Prune(PruneArgs),
    /// List the group pairs excluded by RUE or RSIE.
    Exclusions(PruneArgs),
    /// Find a best or worst matching.
    Solve(SolveArgs),
    /// Check a matching against a notion; exits 1 when it fails.
    Verify(VerifyArgs),
    /// Search all matchings for an equilibrium.
    Exists(ExistsArgs),
    /// Run a protocol by notion sweep and write the result tables.
    Report(ReportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum GeometryKind {
    Box,
    Ring,
}

#[derive(Clone, Copy, ValueEnum)]
enum Destinations {
    Uniform,
    Center,
    Biased,
}

#[derive(Args)]
struct DemandArgs {
    #[arg(long, default_value_t = 50)]
    n: usize,
    /// Departure window, seconds.
    #[arg(long, default_value_t = 600.0)]
    window: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, value_enum, default_value = "box")]
    geometry: GeometryKind,
    /// Box side or ring radius, km.
    #[arg(long, default_value_t = 10.0)]
    size: f64,
    #[arg(long, value_enum, default_value = "biased")]
    destinations: Destinations,
    /// Destination spread around the centre for `biased`, km.
    #[arg(long, default_value_t = 1.5)]
    spread: f64,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct FeasArgs {
    #[arg(long, default_value_t = 4)]
    capacity: usize,
    #[arg(long, default_value_t = 1.5)]
    detour_factor: f64,
    #[arg(long, default_value = "euclidean")]
    metric: Metric,
    /// km/h
    #[arg(long, default_value_t = 30.0)]
    speed: f64,
}

impl FeasArgs {
    fn params(&self) -> FeasibilityParams {
        FeasibilityParams {
            capacity: self.capacity,
            detour_factor: self.detour_factor,
            metric: self.metric,
            speed: self.speed,
        }
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    instance: PathBuf,
    #[command(flatten)]
    feas: FeasArgs,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct SharesArgs {
    #[arg(long)]
    catalog: PathBuf,
    /// externality, externality-over, residual or subgroup
    #[arg(long)]
    protocol: String,
    #[arg(long, default_value = "proportional")]
    weighting: ResidualWeighting,
    #[arg(long)]
    overcharge_d: Option<f64>,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct PruneArgs {
    #[arg(long)]
    catalog: PathBuf,
    #[arg(long)]
    shares: PathBuf,
    #[arg(long)]
    notion: EquilibriumNotion,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    catalog: PathBuf,
    /// Needed unless the notion is `none`.
    #[arg(long)]
    shares: Option<PathBuf>,
    /// none, tne, rhe, rue or rsie
    #[arg(long, default_value = "none")]
    notion: String,
    #[arg(long, default_value = "min")]
    objective: Objective,
    /// Enumerate every matching instead of branch and bound (small instances).
    #[arg(long)]
    brute_force: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    catalog: PathBuf,
    #[arg(long)]
    shares: PathBuf,
    /// Matching or solve-result JSON.
    #[arg(long)]
    matching: PathBuf,
    #[arg(long)]
    notion: EquilibriumNotion,
}

#[derive(Args)]
struct ExistsArgs {
    #[arg(long, required_unless_present = "ordinal")]
    catalog: Option<PathBuf>,
    #[arg(long, required_unless_present = "ordinal")]
    shares: Option<PathBuf>,
    /// Ordinal preference instance instead of a catalog and shares.
    #[arg(long, conflicts_with_all = ["catalog", "shares"])]
    ordinal: Option<PathBuf>,
    /// Offset added to ranks for ordinal instances; defaults to n * max_rank + 1.
    #[arg(long)]
    d: Option<f64>,
    #[arg(long)]
    notion: EquilibriumNotion,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    instance: PathBuf,
    /// `all` or a comma list of externality, externality-over, residual, subgroup
    #[arg(long, default_value = "all")]
    protocols: String,
    /// Comma list of none, tne, rhe, rue, rsie
    #[arg(long, default_value = "rhe,rue,rsie")]
    notions: String,
    #[arg(long, default_value = "proportional")]
    weighting: ResidualWeighting,
    #[command(flatten)]
    feas: FeasArgs,
    #[arg(long)]
    out_dir: PathBuf,
}

fn parse_notion(s: &str) -> Result<Option<EquilibriumNotion>> {
    match s.trim() {
        "none" => Ok(None),
        other => other.parse().map(Some),
    }
}

fn emit<T: Serialize>(output: Option<&PathBuf>, value: &T) -> Result<()> {
    match output {
        Some(p) => write_json(p, value),
        None => {
            println!("{}", serde_json::to_string_pretty(value).expect("serialisable"));
            Ok(())
        }
    }
}

fn load_pair(catalog: &PathBuf, shares: &PathBuf) -> Result<(GroupCatalog, ctg_core::CostShareTable)> {
    let cat = load_catalog(catalog)?;
    let table = load_shares(shares, &cat)?;
    Ok((cat, table))
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Demand(a) => {
            let config = DemandConfig {
                n_riders: a.n,
                window_seconds: a.window,
                geometry: match a.geometry {
                    GeometryKind::Box => Geometry::Box {
                        width: a.size,
                        height: a.size,
                    },
                    GeometryKind::Ring => Geometry::RingRadial { radius: a.size },
                },
                seed: a.seed,
                destination_mode: match a.destinations {
                    Destinations::Uniform => DestinationMode::Uniform,
                    Destinations::Center => DestinationMode::CommonCenter,
                    Destinations::Biased => DestinationMode::CenterBiased { spread: a.spread },
                },
            };
            let instance = Instance {
                params: CostParams::default(),
                requests: generate_demand(&config)?,
            };
            save_instance(&a.output, &instance)?;
        }
        Command::Generate(a) => {
            let inst = load_instance(&a.instance)?;
            let cat = enumerate_feasible_groups(&inst.requests, &inst.params, &a.feas.params())?;
            save_catalog(&a.output, &cat)?;
            eprintln!("{} groups over {} riders", cat.len(), cat.n_riders());
        }
        Command::Shares(a) => {
            let cat = load_catalog(&a.catalog)?;
            let protocol = Protocol::parse(&a.protocol, a.weighting, a.overcharge_d)?;
            let table = build_share_table(&cat, protocol)?;
            save_shares(&a.output, &cat, &table)?;
        }
        Command::Prune(a) => {
            let (cat, table) = load_pair(&a.catalog, &a.shares)?;
            let kept = match a.notion {
                EquilibriumNotion::Tne => tne_groups(&cat, &table),
                EquilibriumNotion::Rhe => hermetic_groups(&cat, &table)?,
                other => {
                    return Err(CtgError::InvalidParameter(format!(
                        "prune takes tne or rhe, not {other}"
                    )))
                }
            };
            write_json(&a.output, &PrunedRecord::new(&cat, a.notion, &kept))?;
        }
        Command::Exclusions(a) => {
            let (cat, table) = load_pair(&a.catalog, &a.shares)?;
            let tne = tne_groups(&cat, &table);
            let pairs = match a.notion {
                EquilibriumNotion::Rue => mergeable_pairs(&cat, &table, &tne),
                EquilibriumNotion::Rsie => individually_unstable_pairs(&cat, &table, &tne),
                other => {
                    return Err(CtgError::InvalidParameter(format!(
                        "exclusions takes rue or rsie, not {other}"
                    )))
                }
            };
            write_json(&a.output, &PairsRecord::new(&cat, &pairs))?;
        }
        Command::Solve(a) => {
            let cat = load_catalog(&a.catalog)?;
            let spec = match parse_notion(&a.notion)? {
                None => SolveSpec::unconstrained(&cat, a.objective),
                Some(n) => {
                    let shares = a.shares.as_ref().ok_or_else(|| {
                        CtgError::InvalidParameter(format!("--shares is required for {n}"))
                    })?;
                    let table = load_shares(shares, &cat)?;
                    notion_spec(&cat, &table, Some(n), a.objective)?
                }
            };
            let res = if a.brute_force {
                brute_force_solve(&cat, &spec)?
            } else {
                solve(&cat, &spec)?
            };
            emit(a.output.as_ref(), &ResultRecord::new(&cat, &res))?;
        }
        Command::Verify(a) => {
            let (cat, table) = load_pair(&a.catalog, &a.shares)?;
            let rec: MatchingRecord = read_json(&a.matching)?;
            let m = rec.to_matching(&cat)?;
            let ok = verify(&m, a.notion, &table, &cat)?;
            println!("{}: {}", a.notion, if ok { "holds" } else { "fails" });
            if !ok {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Exists(a) => {
            let (cat, table) = match (&a.ordinal, &a.catalog, &a.shares) {
                (Some(p), _, _) => {
                    let inst: OrdinalInstance = read_json(p)?;
                    inst.validate()?;
                    let d = a.d.unwrap_or((inst.riders * inst.max_rank() + 1) as f64);
                    ordinal_to_cardinal(&inst, d)?
                }
                (None, Some(c), Some(s)) => load_pair(c, s)?,
                _ => unreachable!("clap requires catalog and shares without ordinal"),
            };
            let witness = exists_equilibrium(a.notion, &cat, &table)?;
            #[derive(Serialize)]
            struct Found {
                exists: bool,
                notion: String,
                witness: Option<MatchingRecord>,
            }
            emit(
                a.output.as_ref(),
                &Found {
                    exists: witness.is_some(),
                    notion: a.notion.to_string(),
                    witness: witness.map(|m| MatchingRecord::from_matching(&cat, &m)),
                },
            )?;
        }
        Command::Report(a) => {
            let inst = load_instance(&a.instance)?;
            let protocols = if a.protocols.trim() == "all" {
                vec![
                    Protocol::Externality,
                    Protocol::Residual(a.weighting),
                    Protocol::Subgroup,
                ]
            } else {
                a.protocols
                    .split(',')
                    .map(|p| Protocol::parse(p.trim(), a.weighting, None))
                    .collect::<Result<Vec<_>>>()?
            };
            let notions = a
                .notions
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(parse_notion)
                .collect::<Result<Vec<_>>>()?;
            let exp = run_experiment(&inst, &a.feas.params(), &protocols, &notions)?;
            write_outputs(&exp, &a.out_dir)?;
            for r in &exp.kpis {
                eprintln!(
                    "{} {} {} ratio={}",
                    r.protocol,
                    r.notion,
                    r.case,
                    r.ratio.map_or("infeasible".to_string(), |v| format!("{v:.4}"))
                );
            }
            if exp.rsie_infeasible() {
                return Ok(ExitCode::from(2));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
