//! C interface to `csma-core`.
//!
//! Networks and state spaces are opaque handles owned by the caller and
//! released with the matching `_free` function. Every fallible call returns
//! a [`CsmaStatus`]; on failure [`csma_last_error`] describes the problem.
//! Strings returned by the library must be released with [`csma_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use csma_core::analysis::{aggregate_throughput, exact_hitting_time, gamma, jain_index, starvation_indices};
use csma_core::conflict_graph::NetworkFile;
use csma_core::report::{analyze_space, AnalyzeOptions, RunManifest};
use csma_core::{ConflictGraph, Error, MultiChannelNetwork, RateModel, StateSpace};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CsmaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    CapExceeded = 3,
    SolverFailed = 4,
    /// The quantity does not exist for this network, e.g. a height index
    /// with a single dominant state.
    Undefined = 5,
    Panic = 6,
}

/// Opaque network handle.
pub struct CsmaNetwork {
    net: MultiChannelNetwork,
    name: Option<String>,
}

/// Opaque handle to an enumerated state space.
pub struct CsmaStateSpace {
    space: StateSpace,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> CsmaStatus {
    match e {
        Error::CapExceeded { .. } => CsmaStatus::CapExceeded,
        Error::Solver { .. } | Error::Simulation(_) => CsmaStatus::SolverFailed,
        _ => CsmaStatus::InvalidInput,
    }
}

enum Fail {
    Null(&'static str),
    Core(Error),
    Undefined(&'static str),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Core(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> CsmaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            CsmaStatus::Ok
        }
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer passed as {what}"));
            CsmaStatus::NullPointer
        }
        Ok(Err(Fail::Core(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Fail::Undefined(what))) => {
            set_error(format!("{what} is undefined for this network"));
            CsmaStatus::Undefined
        }
        Err(_) => {
            set_error("internal panic".into());
            CsmaStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    // SAFETY: caller promises p is null or a live handle from this library.
    unsafe { p.as_ref() }.ok_or(Fail::Null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Fail> {
    // SAFETY: caller promises p is null or valid for writes.
    unsafe { p.as_mut() }.ok_or(Fail::Null(what))
}

unsafe fn c_str<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    // SAFETY: non-null and NUL-terminated per the caller contract.
    unsafe { CStr::from_ptr(p) }
        .to_str()
        .map_err(|_| Fail::Core(Error::InvalidArgument(format!("{what} is not valid UTF-8"))))
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn csma_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn csma_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses a network from the JSON file format.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn csma_network_from_json(json: *const c_char, out_net: *mut *mut CsmaNetwork) -> CsmaStatus {
    guard(|| {
        let text = unsafe { c_str(json, "json") }?;
        let slot = unsafe { out(out_net, "out_net") }?;
        let file: NetworkFile = serde_json::from_str(text).map_err(Error::from)?;
        let net = MultiChannelNetwork::from_file(&file)?;
        *slot = Box::into_raw(Box::new(CsmaNetwork { net, name: file.name }));
        Ok(())
    })
}

/// Builds a network with one conflict graph shared by all channels and
/// homogeneous activation rate `nu`. `edges` holds `2 * num_edges` node
/// indices.
///
/// # Safety
/// `edges` must point to `2 * num_edges` readable values (or be null when
/// `num_edges` is zero) and `out_net` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn csma_network_shared(
    num_nodes: usize,
    edges: *const u32,
    num_edges: usize,
    num_channels: usize,
    nu: f64,
    out_net: *mut *mut CsmaNetwork,
) -> CsmaStatus {
    guard(|| {
        let slot = unsafe { out(out_net, "out_net") }?;
        let flat: &[u32] = if num_edges == 0 {
            &[]
        } else {
            if edges.is_null() {
                return Err(Fail::Null("edges"));
            }
            // SAFETY: length guaranteed by the caller.
            unsafe { std::slice::from_raw_parts(edges, 2 * num_edges) }
        };
        let pairs = flat.chunks_exact(2).map(|p| (p[0] as usize, p[1] as usize));
        let g = ConflictGraph::new(num_nodes, pairs)?;
        let net = MultiChannelNetwork::shared(g, num_channels, RateModel::homogeneous(nu))?;
        *slot = Box::into_raw(Box::new(CsmaNetwork { net, name: None }));
        Ok(())
    })
}

/// # Safety
/// `net` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn csma_network_free(net: *mut CsmaNetwork) {
    if !net.is_null() {
        // SAFETY: allocated by Box::into_raw above.
        drop(unsafe { Box::from_raw(net) });
    }
}

/// # Safety
/// The handle must be null or live.
#[no_mangle]
pub unsafe extern "C" fn csma_network_num_nodes(net: *const CsmaNetwork) -> usize {
    unsafe { net.as_ref() }.map_or(0, |n| n.net.num_nodes())
}

/// # Safety
/// The handle must be null or live.
#[no_mangle]
pub unsafe extern "C" fn csma_network_num_channels(net: *const CsmaNetwork) -> usize {
    unsafe { net.as_ref() }.map_or(0, |n| n.net.num_channels())
}

/// Enumerates the feasible states, refusing more than `cap` of them.
///
/// # Safety
/// `net` must be a live network handle and `out_space` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn csma_state_space_new(
    net: *const CsmaNetwork,
    cap: usize,
    out_space: *mut *mut CsmaStateSpace,
) -> CsmaStatus {
    guard(|| {
        let n = unsafe { deref(net, "net") }?;
        let slot = unsafe { out(out_space, "out_space") }?;
        let space = StateSpace::enumerate_with_cap(&n.net, cap)?;
        *slot = Box::into_raw(Box::new(CsmaStateSpace { space }));
        Ok(())
    })
}

/// # Safety
/// `space` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn csma_state_space_free(space: *mut CsmaStateSpace) {
    if !space.is_null() {
        // SAFETY: allocated by Box::into_raw above.
        drop(unsafe { Box::from_raw(space) });
    }
}

/// Number of states; zero for a null handle.
///
/// # Safety
/// The handle must be null or live.
#[no_mangle]
pub unsafe extern "C" fn csma_state_space_len(space: *const CsmaStateSpace) -> usize {
    unsafe { space.as_ref() }.map_or(0, |s| s.space.len())
}

/// Largest number of simultaneously active nodes; zero for a null handle.
///
/// # Safety
/// The handle must be null or live.
#[no_mangle]
pub unsafe extern "C" fn csma_max_activity(space: *const CsmaStateSpace) -> usize {
    unsafe { space.as_ref() }.map_or(0, |s| s.space.max_activity())
}

/// # Safety
/// The handle must be null or live.
#[no_mangle]
pub unsafe extern "C" fn csma_dominant_count(space: *const CsmaStateSpace) -> usize {
    unsafe { space.as_ref() }.map_or(0, |s| s.space.dominant().len())
}

/// Asymptotic aggregate throughput per channel as a reduced fraction.
///
/// # Safety
/// Pointers must be valid; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn csma_throughput(
    space: *const CsmaStateSpace,
    numer: *mut u64,
    denom: *mut u64,
) -> CsmaStatus {
    guard(|| {
        let s = unsafe { deref(space, "space") }?;
        let (n, d) = (unsafe { out(numer, "numer") }?, unsafe { out(denom, "denom") }?);
        let r = aggregate_throughput(&s.space)?;
        (*n, *d) = (*r.numer(), *r.denom());
        Ok(())
    })
}

/// Jain index of the asymptotic per-node throughputs.
///
/// # Safety
/// Pointers must be valid; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn csma_jain(space: *const CsmaStateSpace, numer: *mut u64, denom: *mut u64) -> CsmaStatus {
    guard(|| {
        let s = unsafe { deref(space, "space") }?;
        let (n, d) = (unsafe { out(numer, "numer") }?, unsafe { out(denom, "denom") }?);
        let r = jain_index(&s.space).ok_or(Fail::Undefined("the Jain index"))?;
        (*n, *d) = (*r.numer(), *r.denom());
        Ok(())
    })
}

/// Worst communication height between two dominant states.
///
/// # Safety
/// `space` must be a live handle and `value` writable.
#[no_mangle]
pub unsafe extern "C" fn csma_gamma(space: *const CsmaStateSpace, value: *mut f64) -> CsmaStatus {
    guard(|| {
        let s = unsafe { deref(space, "space") }?;
        let v = unsafe { out(value, "value") }?;
        *v = gamma(&s.space).ok_or(Fail::Undefined("the mixing height"))?;
        Ok(())
    })
}

/// Network starvation index: the worst per-node index.
///
/// # Safety
/// `space` must be a live handle and `value` writable.
#[no_mangle]
pub unsafe extern "C" fn csma_upsilon(space: *const CsmaStateSpace, value: *mut f64) -> CsmaStatus {
    guard(|| {
        let s = unsafe { deref(space, "space") }?;
        let v = unsafe { out(value, "value") }?;
        *v = starvation_indices(&s.space)
            .network
            .ok_or(Fail::Undefined("the starvation index"))?;
        Ok(())
    })
}

/// Expected time to reach any of `num_targets` states from `start` at rate
/// scale `nu`. States are `num_nodes` channel numbers each; the targets are
/// stored back to back.
///
/// # Safety
/// `start` must hold `num_nodes` values and `targets` `num_targets * num_nodes`.
#[no_mangle]
pub unsafe extern "C" fn csma_hitting_time(
    space: *const CsmaStateSpace,
    nu: f64,
    start: *const u8,
    targets: *const u8,
    num_targets: usize,
    value: *mut f64,
) -> CsmaStatus {
    guard(|| {
        let s = unsafe { deref(space, "space") }?;
        let v = unsafe { out(value, "value") }?;
        if start.is_null() {
            return Err(Fail::Null("start"));
        }
        if targets.is_null() {
            return Err(Fail::Null("targets"));
        }
        let n = s.space.num_nodes();
        // SAFETY: lengths guaranteed by the caller.
        let start = unsafe { std::slice::from_raw_parts(start, n) };
        let targets = unsafe { std::slice::from_raw_parts(targets, n * num_targets) };
        let find = |x: &[u8]| {
            s.space
                .index_of(x)
                .ok_or_else(|| Error::InfeasibleState(format!("{x:?} is not a feasible state")))
        };
        let from = find(start)?;
        let set = targets.chunks_exact(n).map(find).collect::<Result<Vec<_>, _>>()?;
        *v = exact_hitting_time(&s.space, nu, from, &set)?;
        Ok(())
    })
}

/// Full analysis report as JSON. Release the string with
/// [`csma_string_free`].
///
/// # Safety
/// `net` must be a live handle and `json_out` writable.
#[no_mangle]
pub unsafe extern "C" fn csma_analyze_json(
    net: *const CsmaNetwork,
    cap: usize,
    json_out: *mut *mut c_char,
) -> CsmaStatus {
    guard(|| {
        let n = unsafe { deref(net, "net") }?;
        let slot = unsafe { out(json_out, "json_out") }?;
        let opts = AnalyzeOptions {
            state_cap: cap,
            ..Default::default()
        };
        let space = StateSpace::enumerate_with_cap(&n.net, cap)?;
        let manifest = RunManifest::new("ffi-analyze", serde_json::json!({ "cap": cap }), None, None);
        let report = analyze_space(&n.net, &space, n.name.clone(), &opts, manifest)?;
        let text = serde_json::to_string(&report).map_err(Error::from)?;
        *slot = CString::new(text).expect("JSON has no NUL").into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn csma_string_free(s: *mut c_char) {
    if !s.is_null() {
        // SAFETY: produced by CString::into_raw.
        drop(unsafe { CString::from_raw(s) });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ptr;

    fn c4() -> *mut CsmaNetwork {
        let edges = [0u32, 1, 1, 2, 2, 3, 3, 0];
        let mut net = ptr::null_mut();
        let st = unsafe { csma_network_shared(4, edges.as_ptr(), 4, 1, 10.0, &mut net) };
        assert_eq!(st, CsmaStatus::Ok);
        net
    }

    #[test]
    fn status_mapping() {
        assert_eq!(
            status_of(&Error::CapExceeded {
                what: "states",
                cap: 1,
                bound: 2
            }),
            CsmaStatus::CapExceeded
        );
        assert_eq!(status_of(&Error::InvalidArgument("x".into())), CsmaStatus::InvalidInput);
    }

    #[test]
    fn null_out_pointer_is_reported() {
        let net = c4();
        let st = unsafe { csma_state_space_new(net, 100, ptr::null_mut()) };
        assert_eq!(st, CsmaStatus::NullPointer);
        let msg = unsafe { CStr::from_ptr(csma_last_error()) }.to_str().unwrap();
        assert!(msg.contains("out_space"));
        unsafe { csma_network_free(net) };
    }
}
