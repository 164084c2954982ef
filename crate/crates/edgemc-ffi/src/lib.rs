//! C ABI over the edgemc sampler.
//!
//! Every fallible function returns an [`EmcStatus`] code and stores a
//! human-readable message, readable through [`emc_last_error`], on the
//! calling thread when it fails. Data matrices, candidate graphs, and
//! posterior tables are opaque handles created and freed by this library.
//! Node indices are zero-based across the whole interface; the CSV writers
//! use one-based labels, matching the command-line tool. Panics are caught
//! at the boundary and reported as [`EmcStatus::Panic`].

use std::any::Any;
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::fmt::Display;
use std::fs::File;
use std::io::BufWriter;
use std::panic::{catch_unwind, AssertUnwindSafe};

use edgemc::files::write_posterior_csv;
use edgemc::sampler::{posterior_from_trace, run};
use edgemc::{CandidateGraph, Constraints, DataMatrix, Error, McmcConfig, PosteriorTable, Prior};

/// Result code returned by every fallible function in this interface.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmcStatus {
    /// The call succeeded.
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// An argument failed validation: bad graph, data, prior, options, or an
    /// out-of-range index.
    InvalidArgument = 2,
    /// A string argument was not valid UTF-8.
    Utf8 = 3,
    /// A file could not be opened, read, or written.
    Io = 4,
    /// The computation failed after its inputs validated, for example a
    /// rank-deficient regression; see `emc_last_error`.
    Runtime = 5,
    /// A panic was caught at the boundary. No output was written.
    Panic = 6,
}

/// Opaque handle to a data matrix: N observations of b named columns.
pub struct EmcData(DataMatrix);

/// Opaque handle to a candidate graph: a node count plus an unordered
/// candidate-edge list.
pub struct EmcGraph(CandidateGraph);

/// Opaque handle to a posterior table: per-edge probabilities of the
/// forward, reverse, and absent states.
pub struct EmcPosterior(PosteriorTable);

/// Sampler settings for `emc_infer`. Obtain defaults from
/// `emc_infer_options_default`, then override fields as needed.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmcInferOptions {
    /// Total Metropolis-Hastings iterations; must be at least 1.
    pub iterations: u64,
    /// Fraction of iterations discarded from the front, in [0, 1).
    pub burn_in_fraction: f64,
    /// Thinning interval: every step_size-th post-burn-in sample is kept.
    pub step_size: u64,
    /// Seed of the chain RNG; equal seeds reproduce the run exactly.
    pub seed: u64,
    /// Prior probability that an edge points lo -> hi.
    pub prior_forward: f64,
    /// Prior probability that an edge points hi -> lo.
    pub prior_reverse: f64,
    /// Prior probability that an edge is absent.
    pub prior_absent: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: impl Display) {
    // Interior nuls would truncate the C string; map them to spaces.
    let text = msg.to_string().replace('\0', " ");
    let cstring = CString::new(text).expect("nul-free by construction");
    let _ = LAST_ERROR.try_with(|slot| *slot.borrow_mut() = cstring);
}

/// Maps core errors onto the coarse C status codes.
fn status_code(err: &Error) -> EmcStatus {
    match err {
        Error::Io(_) => EmcStatus::Io,
        Error::InvalidGraph(_)
        | Error::InvalidData(_)
        | Error::InvalidPrior(_)
        | Error::InvalidConfig(_)
        | Error::InvalidConstraint(_)
        | Error::Parse(_)
        | Error::Csv(_) => EmcStatus::InvalidArgument,
        _ => EmcStatus::Runtime,
    }
}

fn fail(err: &Error) -> EmcStatus {
    set_last_error(err);
    status_code(err)
}

fn invalid(msg: impl Display) -> EmcStatus {
    set_last_error(msg);
    EmcStatus::InvalidArgument
}

fn null_arg(what: &str) -> EmcStatus {
    set_last_error(format_args!("{what} must not be null"));
    EmcStatus::NullArgument
}

fn panic_text(payload: &(dyn Any + Send)) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        format!("panic: {s}")
    } else if let Some(s) = payload.downcast_ref::<String>() {
        format!("panic: {s}")
    } else {
        "panic: unknown payload".into()
    }
}

/// Runs a body, converting early returns and caught panics to status codes.
fn guarded(body: impl FnOnce() -> Result<(), EmcStatus>) -> EmcStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => EmcStatus::Ok,
        Ok(Err(status)) => status,
        Err(payload) => {
            set_last_error(panic_text(payload.as_ref()));
            EmcStatus::Panic
        }
    }
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, EmcStatus> {
    p.as_ref().ok_or_else(|| null_arg(what))
}

/// Null-checks an out slot and clears it so failed calls never leave a
/// dangling value behind.
unsafe fn out_arg<'a, T>(p: *mut *mut T, what: &str) -> Result<&'a mut *mut T, EmcStatus> {
    match p.as_mut() {
        Some(slot) => {
            *slot = std::ptr::null_mut();
            Ok(slot)
        }
        None => Err(null_arg(what)),
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, EmcStatus> {
    if p.is_null() {
        return Err(null_arg(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_last_error(format_args!("{what} is not valid UTF-8"));
        EmcStatus::Utf8
    })
}

/// Message from the most recent failing call on this thread, or an empty
/// string if nothing has failed yet. The pointer stays valid until the next
/// failing call on the same thread.
#[no_mangle]
pub extern "C" fn emc_last_error() -> *const c_char {
    LAST_ERROR
        .try_with(|slot| slot.borrow().as_ptr())
        .unwrap_or(std::ptr::null())
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn emc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Loads a data matrix from a CSV file with a header row of column names
/// and one observation per row; every field must be a finite float.
///
/// # Safety
/// `path` must point to a nul-terminated string. `out` must point to a
/// writable pointer slot; on success `*out` owns the matrix and must be
/// released with `emc_data_free`.
#[no_mangle]
pub unsafe extern "C" fn emc_data_read_csv(
    path: *const c_char,
    out: *mut *mut EmcData,
) -> EmcStatus {
    guarded(|| {
        let slot = out_arg(out, "out")?;
        let path = str_arg(path, "path")?;
        let data = DataMatrix::from_csv_path(path).map_err(|e| fail(&e))?;
        *slot = Box::into_raw(Box::new(EmcData(data)));
        Ok(())
    })
}

/// Builds a data matrix from `n_cols` columns of `n_rows` values each,
/// stored back to back in `values` (column-major, n_rows * n_cols entries).
/// `names` may be null, in which case the columns are named T1, T2, ...;
/// otherwise it must hold `n_cols` non-null nul-terminated strings.
///
/// # Safety
/// `values` must be readable for n_rows * n_cols doubles and `names`, when
/// non-null, for `n_cols` pointers. On success `*out` owns the matrix and
/// must be released with `emc_data_free`.
#[no_mangle]
pub unsafe extern "C" fn emc_data_from_columns(
    names: *const *const c_char,
    values: *const f64,
    n_rows: usize,
    n_cols: usize,
    out: *mut *mut EmcData,
) -> EmcStatus {
    guarded(|| {
        let slot = out_arg(out, "out")?;
        if values.is_null() {
            return Err(null_arg("values"));
        }
        if n_rows == 0 {
            return Err(invalid("n_rows must be at least 2"));
        }
        let total = n_rows
            .checked_mul(n_cols)
            .ok_or_else(|| invalid("n_rows * n_cols overflows"))?;
        let flat = std::slice::from_raw_parts(values, total);
        let columns: Vec<Vec<f64>> = flat.chunks_exact(n_rows).map(|c| c.to_vec()).collect();
        let names = if names.is_null() {
            (1..=n_cols).map(|j| format!("T{j}")).collect()
        } else {
            let ptrs = std::slice::from_raw_parts(names, n_cols);
            let mut owned = Vec::with_capacity(n_cols);
            for (j, &p) in ptrs.iter().enumerate() {
                owned.push(str_arg(p, &format!("names[{j}]"))?.to_string());
            }
            owned
        };
        let data = DataMatrix::new(names, columns).map_err(|e| fail(&e))?;
        *slot = Box::into_raw(Box::new(EmcData(data)));
        Ok(())
    })
}

/// Number of observations, or 0 when `data` is null.
///
/// # Safety
/// `data` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn emc_data_n_rows(data: *const EmcData) -> usize {
    data.as_ref().map_or(0, |d| d.0.n_rows())
}

/// Number of columns, or 0 when `data` is null.
///
/// # Safety
/// `data` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn emc_data_n_cols(data: *const EmcData) -> usize {
    data.as_ref().map_or(0, |d| d.0.n_cols())
}

/// Releases a data handle; null is ignored.
///
/// # Safety
/// `data` must be null or a handle not freed before; it is invalid after.
#[no_mangle]
pub unsafe extern "C" fn emc_data_free(data: *mut EmcData) {
    if !data.is_null() {
        drop(Box::from_raw(data));
    }
}

/// Builds a candidate graph from an edge list over `node_count` nodes.
/// `endpoints` holds 2 * edge_count zero-based node indices: candidate edge
/// k joins endpoints[2k] and endpoints[2k+1]. Order within a pair does not
/// matter. Self-loops, duplicate pairs, and out-of-range nodes are
/// rejected. `endpoints` may be null only when `edge_count` is 0.
///
/// # Safety
/// `endpoints`, when non-null, must be readable for 2 * edge_count values.
/// On success `*out` owns the graph and must be released with
/// `emc_graph_free`.
#[no_mangle]
pub unsafe extern "C" fn emc_graph_from_edge_list(
    node_count: usize,
    endpoints: *const usize,
    edge_count: usize,
    out: *mut *mut EmcGraph,
) -> EmcStatus {
    guarded(|| {
        let slot = out_arg(out, "out")?;
        if endpoints.is_null() && edge_count > 0 {
            return Err(null_arg("endpoints"));
        }
        let pairs: Vec<(usize, usize)> = if edge_count == 0 {
            Vec::new()
        } else {
            std::slice::from_raw_parts(endpoints, 2 * edge_count)
                .chunks_exact(2)
                .map(|pair| (pair[0], pair[1]))
                .collect()
        };
        let graph = CandidateGraph::new(node_count, &pairs).map_err(|e| fail(&e))?;
        *slot = Box::into_raw(Box::new(EmcGraph(graph)));
        Ok(())
    })
}

/// Builds the fully connected candidate graph on `node_count` nodes: all
/// node_count * (node_count - 1) / 2 unordered pairs.
///
/// # Safety
/// On success `*out` owns the graph and must be released with
/// `emc_graph_free`.
#[no_mangle]
pub unsafe extern "C" fn emc_graph_fully_connected(
    node_count: usize,
    out: *mut *mut EmcGraph,
) -> EmcStatus {
    guarded(|| {
        let slot = out_arg(out, "out")?;
        let graph = CandidateGraph::fully_connected(node_count).map_err(|e| fail(&e))?;
        *slot = Box::into_raw(Box::new(EmcGraph(graph)));
        Ok(())
    })
}

/// Number of nodes, or 0 when `graph` is null.
///
/// # Safety
/// `graph` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn emc_graph_node_count(graph: *const EmcGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.0.node_count())
}

/// Number of candidate edges, or 0 when `graph` is null.
///
/// # Safety
/// `graph` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn emc_graph_edge_count(graph: *const EmcGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.0.edge_count())
}

/// Writes candidate edge `index`'s endpoints (lo < hi, zero-based). Edges
/// are sorted lexicographically, so the index is a pure function of the
/// edge set.
///
/// # Safety
/// `graph` must be a live handle; `lo` and `hi` must be writable.
#[no_mangle]
pub unsafe extern "C" fn emc_graph_edge(
    graph: *const EmcGraph,
    index: usize,
    lo: *mut usize,
    hi: *mut usize,
) -> EmcStatus {
    guarded(|| {
        let graph = ref_arg(graph, "graph")?;
        if lo.is_null() {
            return Err(null_arg("lo"));
        }
        if hi.is_null() {
            return Err(null_arg("hi"));
        }
        let m = graph.0.edge_count();
        if index >= m {
            return Err(invalid(format_args!(
                "edge index {index} out of range for {m} edges"
            )));
        }
        let edge = graph.0.edge(index);
        *lo = edge.lo;
        *hi = edge.hi;
        Ok(())
    })
}

/// Releases a graph handle; null is ignored.
///
/// # Safety
/// `graph` must be null or a handle not freed before; it is invalid after.
#[no_mangle]
pub unsafe extern "C" fn emc_graph_free(graph: *mut EmcGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

/// Default sampler settings: 30000 iterations, 20% burn-in, thinning step
/// 120, seed 0, prior (0.05, 0.05, 0.9) over (forward, reverse, absent).
#[no_mangle]
pub extern "C" fn emc_infer_options_default() -> EmcInferOptions {
    EmcInferOptions {
        iterations: 30_000,
        burn_in_fraction: 0.2,
        step_size: 120,
        seed: 0,
        prior_forward: 0.05,
        prior_reverse: 0.05,
        prior_absent: 0.9,
    }
}

/// Runs the Metropolis-Hastings sampler over the candidate graph's edge
/// states and returns the posterior state frequencies per edge. The data
/// must have exactly one column per graph node, in node order. Equal seeds
/// and inputs reproduce the table exactly.
///
/// # Safety
/// `data`, `graph`, and `options` must be live handles or readable structs
/// from this library. On success `*out` owns the table and must be released
/// with `emc_posterior_free`.
#[no_mangle]
pub unsafe extern "C" fn emc_infer(
    data: *const EmcData,
    graph: *const EmcGraph,
    options: *const EmcInferOptions,
    out: *mut *mut EmcPosterior,
) -> EmcStatus {
    guarded(|| {
        let slot = out_arg(out, "out")?;
        let data = ref_arg(data, "data")?;
        let graph = ref_arg(graph, "graph")?;
        let opts = *ref_arg(options, "options")?;
        let prior = Prior::new(opts.prior_forward, opts.prior_reverse, opts.prior_absent)
            .map_err(|e| fail(&e))?;
        let iterations = usize::try_from(opts.iterations)
            .map_err(|_| invalid("iterations does not fit in the address space"))?;
        let step_size = usize::try_from(opts.step_size)
            .map_err(|_| invalid("step_size does not fit in the address space"))?;
        let config = McmcConfig {
            iterations,
            burn_in_fraction: opts.burn_in_fraction,
            step_size,
            seed: opts.seed,
        };
        let constraints = Constraints::none(graph.0.edge_count());
        let trace = run(&data.0, &graph.0, &prior, &config, &constraints).map_err(|e| fail(&e))?;
        let table = posterior_from_trace(&trace, &graph.0).map_err(|e| fail(&e))?;
        *slot = Box::into_raw(Box::new(EmcPosterior(table)));
        Ok(())
    })
}

/// Number of candidate edges in the table, or 0 when `posterior` is null.
///
/// # Safety
/// `posterior` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn emc_posterior_edge_count(posterior: *const EmcPosterior) -> usize {
    posterior.as_ref().map_or(0, |p| p.0.edge_count())
}

/// Writes edge `index`'s endpoints (lo < hi, zero-based) and its three
/// state probabilities to probs[0..3]: forward (lo -> hi), reverse
/// (hi -> lo), absent. Rows sum to 1.
///
/// # Safety
/// `posterior` must be a live handle; `lo` and `hi` must be writable and
/// `probs` writable for three doubles.
#[no_mangle]
pub unsafe extern "C" fn emc_posterior_edge(
    posterior: *const EmcPosterior,
    index: usize,
    lo: *mut usize,
    hi: *mut usize,
    probs: *mut f64,
) -> EmcStatus {
    guarded(|| {
        let table = ref_arg(posterior, "posterior")?;
        if lo.is_null() {
            return Err(null_arg("lo"));
        }
        if hi.is_null() {
            return Err(null_arg("hi"));
        }
        if probs.is_null() {
            return Err(null_arg("probs"));
        }
        let m = table.0.edge_count();
        if index >= m {
            return Err(invalid(format_args!(
                "edge index {index} out of range for {m} edges"
            )));
        }
        let edge = table.0.edges()[index];
        *lo = edge.lo;
        *hi = edge.hi;
        std::slice::from_raw_parts_mut(probs, 3).copy_from_slice(&table.0.probs()[index]);
        Ok(())
    })
}

/// Posterior probability that edge `index` is present (forward plus
/// reverse).
///
/// # Safety
/// `posterior` must be a live handle and `presence` writable.
#[no_mangle]
pub unsafe extern "C" fn emc_posterior_presence(
    posterior: *const EmcPosterior,
    index: usize,
    presence: *mut f64,
) -> EmcStatus {
    guarded(|| {
        let table = ref_arg(posterior, "posterior")?;
        if presence.is_null() {
            return Err(null_arg("presence"));
        }
        let m = table.0.edge_count();
        if index >= m {
            return Err(invalid(format_args!(
                "edge index {index} out of range for {m} edges"
            )));
        }
        *presence = table.0.presence(index);
        Ok(())
    })
}

/// Writes the posterior table as CSV with one-based node labels, in the
/// same format as the command-line tool.
///
/// # Safety
/// `posterior` must be a live handle and `path` a nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn emc_posterior_write_csv(
    posterior: *const EmcPosterior,
    path: *const c_char,
) -> EmcStatus {
    guarded(|| {
        let table = ref_arg(posterior, "posterior")?;
        let path = str_arg(path, "path")?;
        let file = File::create(path).map_err(|e| fail(&Error::Io(e)))?;
        write_posterior_csv(&table.0, BufWriter::new(file)).map_err(|e| fail(&e))?;
        Ok(())
    })
}

/// Releases a posterior handle; null is ignored.
///
/// # Safety
/// `posterior` must be null or a handle not freed before; it is invalid
/// after.
#[no_mangle]
pub unsafe extern "C" fn emc_posterior_free(posterior: *mut EmcPosterior) {
    if !posterior.is_null() {
        drop(Box::from_raw(posterior));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_codes_partition_the_error_type() {
        assert_eq!(
            status_code(&Error::Io(std::io::Error::other("x"))),
            EmcStatus::Io
        );
        assert_eq!(
            status_code(&Error::InvalidGraph("x".into())),
            EmcStatus::InvalidArgument
        );
        assert_eq!(
            status_code(&Error::InvalidPrior("x".into())),
            EmcStatus::InvalidArgument
        );
        assert_eq!(
            status_code(&Error::RankDeficient { node: 0 }),
            EmcStatus::Runtime
        );
    }

    #[test]
    fn last_error_round_trips_and_survives_interior_nul() {
        set_last_error("plain message");
        let got = unsafe { CStr::from_ptr(emc_last_error()) };
        assert_eq!(got.to_str().unwrap(), "plain message");

        set_last_error("a\0b");
        let got = unsafe { CStr::from_ptr(emc_last_error()) };
        assert_eq!(got.to_str().unwrap(), "a b");
    }

    #[test]
    fn guarded_converts_panics_to_status() {
        let status = guarded(|| panic!("boom"));
        assert_eq!(status, EmcStatus::Panic);
        let msg = unsafe { CStr::from_ptr(emc_last_error()) };
        assert!(msg.to_str().unwrap().contains("boom"));
    }

    #[test]
    fn frees_ignore_null() {
        unsafe {
            emc_data_free(std::ptr::null_mut());
            emc_graph_free(std::ptr::null_mut());
            emc_posterior_free(std::ptr::null_mut());
        }
    }

    #[test]
    fn version_is_a_static_utf8_string() {
        let v = unsafe { CStr::from_ptr(emc_version()) };
        assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
    }
}
