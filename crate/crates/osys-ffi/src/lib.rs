//! C bindings for the operator-system toolkit.
//!
//! The surface is deliberately small: an opaque handle for complex square
//! matrices with the kernel predicates that make sense over a C boundary,
//! plus flat-array entry points for graph envelopes and tower
//! classification. Every call returns a status code; outputs are written
//! only on `Ok`, and panics are caught at the boundary instead of
//! unwinding into the caller.

use std::os::raw::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};

use osys_core::matcore::{cx, is_psd, kron, op_norm, CMat, Tol};
use osys_core::uhf_graph::{
    canonical_embed, envelope_blocks, glimm_equivalent, FiniteGraph, GlimmVerdict, Side, UhfSpec,
};

/// Outcome of every call; anything but `Ok` leaves the outputs untouched.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OsysStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A row, column, or vertex index was out of range.
    BadIndex = 2,
    /// An argument violated a documented invariant (zero dimension, loop
    /// edge, zero multiplicity, ...).
    BadArgument = 3,
    /// The output buffer was too short; the required length is reported.
    BufferTooSmall = 4,
    /// An internal numeric routine failed on this input.
    Numeric = 5,
    /// A panic was caught at the boundary; treat the handle as poisoned.
    Panic = 6,
}

/// Opaque complex square matrix. Create with `osys_matrix_new`, release
/// with `osys_matrix_free`.
pub struct OsysMatrix {
    m: CMat,
}

fn guarded(f: impl FnOnce() -> OsysStatus) -> OsysStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => OsysStatus::Panic,
    }
}

unsafe fn slice_arg<'a, T>(ptr: *const T, len: usize) -> Option<&'a [T]> {
    if len == 0 {
        Some(&[])
    } else if ptr.is_null() {
        None
    } else {
        Some(std::slice::from_raw_parts(ptr, len))
    }
}

/// Version of the library as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn osys_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Static name for a status code, for log messages.
#[no_mangle]
pub extern "C" fn osys_status_name(status: OsysStatus) -> *const c_char {
    let name: &'static [u8] = match status {
        OsysStatus::Ok => b"ok\0",
        OsysStatus::NullArgument => b"null argument\0",
        OsysStatus::BadIndex => b"bad index\0",
        OsysStatus::BadArgument => b"bad argument\0",
        OsysStatus::BufferTooSmall => b"buffer too small\0",
        OsysStatus::Numeric => b"numeric failure\0",
        OsysStatus::Panic => b"panic\0",
    };
    name.as_ptr() as *const c_char
}

/// Allocates a dim x dim zero matrix and writes the handle to `out`.
#[no_mangle]
pub unsafe extern "C" fn osys_matrix_new(dim: usize, out: *mut *mut OsysMatrix) -> OsysStatus {
    guarded(|| {
        if out.is_null() {
            return OsysStatus::NullArgument;
        }
        if dim == 0 {
            return OsysStatus::BadArgument;
        }
        let handle = Box::new(OsysMatrix { m: CMat::zeros(dim, dim) });
        *out = Box::into_raw(handle);
        OsysStatus::Ok
    })
}

/// Releases a matrix handle; a null handle is a no-op.
#[no_mangle]
pub unsafe extern "C" fn osys_matrix_free(m: *mut OsysMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Writes the side length of the matrix.
#[no_mangle]
pub unsafe extern "C" fn osys_matrix_dim(m: *const OsysMatrix, out: *mut usize) -> OsysStatus {
    guarded(|| {
        if m.is_null() || out.is_null() {
            return OsysStatus::NullArgument;
        }
        *out = (*m).m.nrows();
        OsysStatus::Ok
    })
}

/// Sets entry (row, col), 0-based, to re + im*i.
#[no_mangle]
pub unsafe extern "C" fn osys_matrix_set(
    m: *mut OsysMatrix,
    row: usize,
    col: usize,
    re: f64,
    im: f64,
) -> OsysStatus {
    guarded(|| {
        if m.is_null() {
            return OsysStatus::NullArgument;
        }
        let mat = &mut (*m).m;
        if row >= mat.nrows() || col >= mat.ncols() {
            return OsysStatus::BadIndex;
        }
        mat[(row, col)] = cx(re, im);
        OsysStatus::Ok
    })
}

/// Reads entry (row, col), 0-based.
#[no_mangle]
pub unsafe extern "C" fn osys_matrix_get(
    m: *const OsysMatrix,
    row: usize,
    col: usize,
    re: *mut f64,
    im: *mut f64,
) -> OsysStatus {
    guarded(|| {
        if m.is_null() || re.is_null() || im.is_null() {
            return OsysStatus::NullArgument;
        }
        let mat = &(*m).m;
        if row >= mat.nrows() || col >= mat.ncols() {
            return OsysStatus::BadIndex;
        }
        let v = mat[(row, col)];
        *re = v.re;
        *im = v.im;
        OsysStatus::Ok
    })
}

/// Whether the matrix is positive semidefinite within eps; a non-hermitian
/// matrix is reported as not positive rather than as an error.
#[no_mangle]
pub unsafe extern "C" fn osys_matrix_is_psd(
    m: *const OsysMatrix,
    eps: f64,
    out: *mut bool,
) -> OsysStatus {
    guarded(|| {
        if m.is_null() || out.is_null() {
            return OsysStatus::NullArgument;
        }
        if !(eps >= 0.0) || !eps.is_finite() {
            return OsysStatus::BadArgument;
        }
        match is_psd(&(*m).m, Tol { eps }) {
            Ok(v) => {
                *out = v;
                OsysStatus::Ok
            }
            Err(_) => OsysStatus::Numeric,
        }
    })
}

/// Operator norm (largest singular value).
#[no_mangle]
pub unsafe extern "C" fn osys_matrix_op_norm(m: *const OsysMatrix, out: *mut f64) -> OsysStatus {
    guarded(|| {
        if m.is_null() || out.is_null() {
            return OsysStatus::NullArgument;
        }
        *out = op_norm(&(*m).m);
        OsysStatus::Ok
    })
}

/// Kronecker product left (x) right as a fresh handle.
#[no_mangle]
pub unsafe extern "C" fn osys_matrix_kron(
    left: *const OsysMatrix,
    right: *const OsysMatrix,
    out: *mut *mut OsysMatrix,
) -> OsysStatus {
    guarded(|| {
        if left.is_null() || right.is_null() || out.is_null() {
            return OsysStatus::NullArgument;
        }
        let prod = kron(&(*left).m, &(*right).m);
        *out = Box::into_raw(Box::new(OsysMatrix { m: prod }));
        OsysStatus::Ok
    })
}

/// Block-repeats the matrix `mult` times along the tower index convention
/// (the multiplicity-mult unital embedding) as a fresh handle.
#[no_mangle]
pub unsafe extern "C" fn osys_matrix_embed(
    m: *const OsysMatrix,
    mult: usize,
    out: *mut *mut OsysMatrix,
) -> OsysStatus {
    guarded(|| {
        if m.is_null() || out.is_null() {
            return OsysStatus::NullArgument;
        }
        if mult == 0 {
            return OsysStatus::BadArgument;
        }
        match canonical_embed(&(*m).m, mult) {
            Ok(big) => {
                *out = Box::into_raw(Box::new(OsysMatrix { m: big }));
                OsysStatus::Ok
            }
            Err(_) => OsysStatus::BadArgument,
        }
    })
}

/// Block sizes of the C*-envelope of the graph system on n vertices.
///
/// `edges` is a flat list of `edge_count` pairs (i, j) with 1-based
/// vertices, either orientation, no loops. Sizes are written largest
/// first; `out_len` receives the count even when the buffer is short, so
/// callers can retry with `BufferTooSmall`.
#[no_mangle]
pub unsafe extern "C" fn osys_envelope_blocks(
    n: usize,
    edges: *const usize,
    edge_count: usize,
    out_blocks: *mut usize,
    out_capacity: usize,
    out_len: *mut usize,
) -> OsysStatus {
    guarded(|| {
        if out_len.is_null() {
            return OsysStatus::NullArgument;
        }
        let Some(flat) = slice_arg(edges, edge_count.saturating_mul(2)) else {
            return OsysStatus::NullArgument;
        };
        if n == 0 {
            return OsysStatus::BadArgument;
        }
        let pairs: Vec<(usize, usize)> =
            flat.chunks_exact(2).map(|c| (c[0], c[1])).collect();
        let graph = match FiniteGraph::new(n, &pairs) {
            Ok(g) => g,
            Err(_) => return OsysStatus::BadArgument,
        };
        let blocks = envelope_blocks(&graph);
        *out_len = blocks.len();
        if blocks.len() > out_capacity {
            return OsysStatus::BufferTooSmall;
        }
        if out_blocks.is_null() {
            return OsysStatus::NullArgument;
        }
        for (k, b) in blocks.iter().enumerate() {
            *out_blocks.add(k) = *b;
        }
        OsysStatus::Ok
    })
}

/// Whether two matrix towers generate the same limit algebra.
///
/// Each tower is a first dimension n1 plus a finite prefix of
/// multiplicities followed by a repeating period (the period may be empty
/// for a tower that stops growing). On the non-equivalent verdict,
/// `out_prime` receives the separating prime and `out_larger_right`
/// whether the right tower carries the larger exponent.
#[no_mangle]
pub unsafe extern "C" fn osys_glimm_equivalent(
    n1_a: u64,
    prefix_a: *const u64,
    prefix_a_len: usize,
    period_a: *const u64,
    period_a_len: usize,
    n1_b: u64,
    prefix_b: *const u64,
    prefix_b_len: usize,
    period_b: *const u64,
    period_b_len: usize,
    out_equivalent: *mut bool,
    out_prime: *mut u64,
    out_larger_right: *mut bool,
) -> OsysStatus {
    guarded(|| {
        if out_equivalent.is_null() || out_prime.is_null() || out_larger_right.is_null() {
            return OsysStatus::NullArgument;
        }
        let (Some(pre_a), Some(per_a), Some(pre_b), Some(per_b)) = (
            slice_arg(prefix_a, prefix_a_len),
            slice_arg(period_a, period_a_len),
            slice_arg(prefix_b, prefix_b_len),
            slice_arg(period_b, period_b_len),
        ) else {
            return OsysStatus::NullArgument;
        };
        let spec = |n1: u64, pre: &[u64], per: &[u64]| {
            UhfSpec::new(n1, pre.to_vec(), per.to_vec())
        };
        let (a, b) = match (spec(n1_a, pre_a, per_a), spec(n1_b, pre_b, per_b)) {
            (Ok(a), Ok(b)) => (a, b),
            _ => return OsysStatus::BadArgument,
        };
        match glimm_equivalent(&a, &b) {
            GlimmVerdict::Equivalent => {
                *out_equivalent = true;
                *out_prime = 0;
                *out_larger_right = false;
            }
            GlimmVerdict::NotEquivalent { prime, larger } => {
                *out_equivalent = false;
                *out_prime = prime;
                *out_larger_right = larger == Side::Right;
            }
        }
        OsysStatus::Ok
    })
}
