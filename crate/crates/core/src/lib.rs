//! Co-travellers game for ride-pooling.
//!
//! Pipeline: trip requests ([`scenario`]) are turned into a catalog of feasible
//! groups with their costs ([`feasibility`]), a cost-sharing protocol assigns
//! each rider a cost in each of their groups ([`protocols`]), equilibrium
//! notions prune groups or exclude pairs of groups ([`equilibria`]), and an
//! exact set-partitioning search finds optimal and best/worst equilibrium
//! matchings ([`solver`]). [`report`] runs whole sweeps.

pub mod equilibria;
pub mod error;
pub mod feasibility;
pub mod fixtures;
pub mod io;
pub mod model;
pub mod protocols;
pub mod report;
pub mod scenario;
pub mod solver;

pub use error::{CtgError, Result};
pub use model::{
    validate_matching, BudgetMode, CostParams, CostShareTable, EquilibriumNotion, Group,
    GroupCatalog, GroupOrigin, Matching, MatchingReport, Members, Point, ProtocolTag, RiderId,
    TripRequest, EPS, OPT_TOL,
};
