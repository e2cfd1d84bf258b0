//! C interface to the co-travellers game library.
//!
//! Objects are opaque handles released with their `_free` function. Every
//! fallible call returns a [`CtgStatus`]; on failure [`ctg_last_error`] gives
//! a message for the calling thread. Group member lists are arrays of rider
//! ids and need not be sorted.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ctg_core::equilibria::verify;
use ctg_core::feasibility::{enumerate_feasible_groups, FeasibilityParams, Metric};
use ctg_core::io::{catalog_from_json, catalog_to_json};
use ctg_core::protocols::{build_share_table, Protocol, ResidualWeighting};
use ctg_core::scenario::instance_from_json;
use ctg_core::solver::{notion_spec, solve, Objective, SolveSpec};
use ctg_core::{CostShareTable, CtgError, EquilibriumNotion, GroupCatalog, Matching, Members};

/// Catalog of feasible groups with their costs.
pub struct CtgCatalog(GroupCatalog);

/// Per-rider cost shares aligned with one catalog.
pub struct CtgShares(CostShareTable);

/// A set of disjoint groups covering every rider.
pub struct CtgMatching {
    matching: Matching,
    groups: Vec<Members>,
    objective: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CtgStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    InvalidInput = 3,
    UnknownGroup = 4,
    TooLarge = 5,
    Unsupported = 6,
    Infeasible = 7,
    BufferTooSmall = 8,
    Internal = 9,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CtgProtocol {
    Externality = 0,
    ExternalityOvercharged = 1,
    ResidualProportional = 2,
    ResidualUniform = 3,
    Subgroup = 4,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CtgNotion {
    None = 0,
    Tne = 1,
    Rhe = 2,
    Rue = 3,
    Rsie = 4,
    Tse = 5,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CtgMetric {
    Euclidean = 0,
    Manhattan = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CtgObjective {
    Minimize = 0,
    Maximize = 1,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(err: &CtgError) -> CtgStatus {
    match err {
        CtgError::UnknownGroup(_) | CtgError::RiderNotInGroup { .. } => CtgStatus::UnknownGroup,
        CtgError::InstanceTooLarge { .. } => CtgStatus::TooLarge,
        CtgError::UnsupportedNotion(_) => CtgStatus::Unsupported,
        _ => CtgStatus::InvalidInput,
    }
}

struct Failure(CtgStatus, String);

impl From<CtgError> for Failure {
    fn from(e: CtgError) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn run(f: impl FnOnce() -> Result<(), Failure>) -> CtgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            CtgStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            CtgStatus::Internal
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(CtgStatus::NullArgument, format!("{what} is null"))
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(CtgStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn members(p: *const usize, len: usize) -> Result<Members, Failure> {
    if len == 0 {
        return Ok(Members::default());
    }
    if p.is_null() {
        return Err(null("members"));
    }
    Ok(Members::new(std::slice::from_raw_parts(p, len).iter().copied()))
}

unsafe fn put<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(value);
    Ok(())
}

fn notion_of(n: CtgNotion) -> Option<EquilibriumNotion> {
    match n {
        CtgNotion::None => None,
        CtgNotion::Tne => Some(EquilibriumNotion::Tne),
        CtgNotion::Rhe => Some(EquilibriumNotion::Rhe),
        CtgNotion::Rue => Some(EquilibriumNotion::Rue),
        CtgNotion::Rsie => Some(EquilibriumNotion::Rsie),
        CtgNotion::Tse => Some(EquilibriumNotion::Tse),
    }
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn ctg_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Parses a catalog from its JSON form.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ctg_catalog_from_json(json: *const c_char, out: *mut *mut CtgCatalog) -> CtgStatus {
    run(|| {
        let cat = catalog_from_json(text(json, "json")?)?;
        put(out, Box::into_raw(Box::new(CtgCatalog(cat))))
    })
}

/// Builds the feasible-group catalog of a JSON instance.
///
/// # Safety
/// `instance_json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ctg_catalog_generate(
    instance_json: *const c_char,
    capacity: usize,
    detour_factor: f64,
    metric: CtgMetric,
    speed_kmh: f64,
    out: *mut *mut CtgCatalog,
) -> CtgStatus {
    run(|| {
        let inst = instance_from_json(text(instance_json, "instance_json")?)?;
        let feas = FeasibilityParams {
            capacity,
            detour_factor,
            metric: match metric {
                CtgMetric::Euclidean => Metric::Euclidean,
                CtgMetric::Manhattan => Metric::Manhattan,
            },
            speed: speed_kmh,
        };
        let cat = enumerate_feasible_groups(&inst.requests, &inst.params, &feas)?;
        put(out, Box::into_raw(Box::new(CtgCatalog(cat))))
    })
}

/// # Safety
/// `catalog` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ctg_catalog_free(catalog: *mut CtgCatalog) {
    if !catalog.is_null() {
        drop(Box::from_raw(catalog));
    }
}

/// Number of groups; 0 for a null handle.
///
/// # Safety
/// `catalog` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ctg_catalog_len(catalog: *const CtgCatalog) -> usize {
    catalog.as_ref().map_or(0, |c| c.0.len())
}

/// Number of riders; 0 for a null handle.
///
/// # Safety
/// `catalog` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ctg_catalog_riders(catalog: *const CtgCatalog) -> usize {
    catalog.as_ref().map_or(0, |c| c.0.n_riders())
}

/// Total cost of the group with the given members.
///
/// # Safety
/// `members_ptr` must point to `len` ids and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ctg_catalog_total_cost(
    catalog: *const CtgCatalog,
    members_ptr: *const usize,
    len: usize,
    out: *mut f64,
) -> CtgStatus {
    run(|| {
        let cat = &borrow(catalog, "catalog")?.0;
        let m = members(members_ptr, len)?;
        put(out, cat.total_cost(&m)?)
    })
}

/// JSON form of the catalog; release with [`ctg_string_free`].
///
/// # Safety
/// `catalog` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn ctg_catalog_to_json(catalog: *const CtgCatalog, out: *mut *mut c_char) -> CtgStatus {
    run(|| {
        let cat = &borrow(catalog, "catalog")?.0;
        let s = CString::new(catalog_to_json(cat)).map_err(|_| Failure(CtgStatus::Internal, "NUL in JSON".into()))?;
        put(out, s.into_raw())
    })
}

/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ctg_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Prices every group. `overcharge_d` is used only by the overcharged
/// protocol; pass NaN for the largest group cost.
///
/// # Safety
/// `catalog` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn ctg_shares_build(
    catalog: *const CtgCatalog,
    protocol: CtgProtocol,
    overcharge_d: f64,
    out: *mut *mut CtgShares,
) -> CtgStatus {
    run(|| {
        let cat = &borrow(catalog, "catalog")?.0;
        let p = match protocol {
            CtgProtocol::Externality => Protocol::Externality,
            CtgProtocol::ExternalityOvercharged => Protocol::OverchargedExternality {
                d: (!overcharge_d.is_nan()).then_some(overcharge_d),
            },
            CtgProtocol::ResidualProportional => Protocol::Residual(ResidualWeighting::Proportional),
            CtgProtocol::ResidualUniform => Protocol::Residual(ResidualWeighting::Uniform),
            CtgProtocol::Subgroup => Protocol::Subgroup,
        };
        let table = build_share_table(cat, p)?;
        put(out, Box::into_raw(Box::new(CtgShares(table))))
    })
}

/// Share of `rider` in the group with the given members.
///
/// # Safety
/// Handles must be live and belong together; `members_ptr` must point to `len` ids.
#[no_mangle]
pub unsafe extern "C" fn ctg_shares_get(
    shares: *const CtgShares,
    catalog: *const CtgCatalog,
    members_ptr: *const usize,
    len: usize,
    rider: usize,
    out: *mut f64,
) -> CtgStatus {
    run(|| {
        let table = &borrow(shares, "shares")?.0;
        let cat = &borrow(catalog, "catalog")?.0;
        let m = members(members_ptr, len)?;
        if table.len() != cat.len() {
            return Err(Failure(CtgStatus::InvalidInput, "shares belong to another catalog".into()));
        }
        let g = cat.index_of(&m).ok_or_else(|| CtgError::UnknownGroup(m.clone()))?;
        let v = table
            .share(cat, g, rider)
            .ok_or(CtgError::RiderNotInGroup { rider, group: m })?;
        put(out, v)
    })
}

/// # Safety
/// `shares` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ctg_shares_free(shares: *mut CtgShares) {
    if !shares.is_null() {
        drop(Box::from_raw(shares));
    }
}

/// Best or worst matching under `notion`. `shares` may be null only for
/// `CTG_NOTION_NONE`. Returns `CTG_STATUS_INFEASIBLE` when no matching
/// satisfies the notion.
///
/// # Safety
/// Handles must be live and belong together; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ctg_solve(
    catalog: *const CtgCatalog,
    shares: *const CtgShares,
    notion: CtgNotion,
    objective: CtgObjective,
    out: *mut *mut CtgMatching,
) -> CtgStatus {
    run(|| {
        let cat = &borrow(catalog, "catalog")?.0;
        let obj = match objective {
            CtgObjective::Minimize => Objective::Minimize,
            CtgObjective::Maximize => Objective::Maximize,
        };
        let spec = match notion_of(notion) {
            None => SolveSpec::unconstrained(cat, obj),
            Some(n) => notion_spec(cat, &borrow(shares, "shares")?.0, Some(n), obj)?,
        };
        let res = solve(cat, &spec)?;
        let Some(objective) = res.objective_value else {
            return Err(Failure(CtgStatus::Infeasible, "no matching satisfies the notion".into()));
        };
        let groups = res.matching.members(cat).cloned().collect();
        put(
            out,
            Box::into_raw(Box::new(CtgMatching {
                matching: res.matching,
                groups,
                objective,
            })),
        )
    })
}

/// Number of groups in the matching; 0 for a null handle.
///
/// # Safety
/// `matching` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ctg_matching_len(matching: *const CtgMatching) -> usize {
    matching.as_ref().map_or(0, |m| m.groups.len())
}

/// Total cost of the matching; NaN for a null handle.
///
/// # Safety
/// `matching` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ctg_matching_objective(matching: *const CtgMatching) -> f64 {
    matching.as_ref().map_or(f64::NAN, |m| m.objective)
}

/// Copies the sorted members of group `k` into `buf`. `out_len` receives the
/// group size even when `cap` is too small.
///
/// # Safety
/// `buf` must hold `cap` ids and `out_len` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ctg_matching_group(
    matching: *const CtgMatching,
    k: usize,
    buf: *mut usize,
    cap: usize,
    out_len: *mut usize,
) -> CtgStatus {
    run(|| {
        let m = borrow(matching, "matching")?;
        let g = m
            .groups
            .get(k)
            .ok_or_else(|| Failure(CtgStatus::InvalidInput, format!("group {k} out of range")))?;
        put(out_len, g.len())?;
        if cap < g.len() {
            return Err(Failure(CtgStatus::BufferTooSmall, format!("group needs {} slots", g.len())));
        }
        if buf.is_null() {
            return Err(null("buf"));
        }
        ptr::copy_nonoverlapping(g.as_slice().as_ptr(), buf, g.len());
        Ok(())
    })
}

/// # Safety
/// `matching` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ctg_matching_free(matching: *mut CtgMatching) {
    if !matching.is_null() {
        drop(Box::from_raw(matching));
    }
}

/// Checks a matching against a notion; `CTG_NOTION_NONE` checks only that it
/// is a valid partition.
///
/// # Safety
/// Handles must be live and belong together; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ctg_verify(
    catalog: *const CtgCatalog,
    shares: *const CtgShares,
    matching: *const CtgMatching,
    notion: CtgNotion,
    out: *mut bool,
) -> CtgStatus {
    run(|| {
        let cat = &borrow(catalog, "catalog")?.0;
        let m = &borrow(matching, "matching")?.matching;
        let holds = match notion_of(notion) {
            None => ctg_core::validate_matching(m, cat).valid,
            Some(n) => verify(m, n, &borrow(shares, "shares")?.0, cat)?,
        };
        put(out, holds)
    })
}
