//! C interface to kronspec.
//!
//! Handles (`KsMatrix`, `KsOutcome`, `KsDecomposition`) are opaque and owned
//! by the caller; release each with its `ks_*_free`. Fallible functions
//! return a `KsStatus` and, on failure, leave a message for `ks_last_error`
//! on the calling thread. Strings handed out through `char **` are released
//! with `ks_string_free`.
//!
//! Pointer arguments must be null or valid for the documented access; null
//! is reported as `KS_STATUS_INVALID_ARGUMENT`. Matrix data is row-major;
//! complex data interleaves real and imaginary parts.
#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use kronspec::kron::{
    binomial_inverse_with_diagnostics, kron_rank, preprocess_binomial, reconstruct,
    InverseDiagnostics, InverseOptions, KronSumDecomposition, KroneckerBinomial,
};
use kronspec::matcore::{format_json, read_matrix, sample_gaussian, write_matrix, MatrixFormat};
use kronspec::perturb::{perturb_tuple, PerturbOutcome, PerturbSpec, SelfMap};
use kronspec::spectra::simplicity_report;
use kronspec::{Error, FieldTag, Matrix, RandomSource, C64};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KsStatus {
    Ok = 0,
    InvalidArgument = 1,
    Input = 2,
    Numeric = 3,
    Exhausted = 4,
    Precondition = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KsFormat {
    /// JSON for a `.json` extension, Matrix Market otherwise.
    Auto = 0,
    MatrixMarket = 1,
    Json = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KsSelfMap {
    Identity = 0,
    Inverse = 1,
    Transpose = 2,
    ConjugateTranspose = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct KsPerturbSpec {
    pub eps: f64,
    pub gap_tol: f64,
    pub max_attempts: usize,
    pub stage2_shrink: f64,
    pub seed: u64,
    /// Draw complex perturbation directions (otherwise real).
    pub complex_field: bool,
    pub designated: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct KsSpectrumSummary {
    pub n: usize,
    /// Infinite for n = 1.
    pub min_gap: f64,
    pub is_simple: bool,
    pub is_invertible: bool,
    pub has_eig_condition: bool,
    pub eig_condition: f64,
    pub safe_radius: f64,
    pub gap_tol_used: f64,
}

pub struct KsMatrix {
    inner: Matrix,
}

pub struct KsOutcome {
    inner: PerturbOutcome,
}

pub struct KsDecomposition {
    inner: KronSumDecomposition,
    diagnostics: InverseDiagnostics,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

enum Failure {
    Lib(Error),
    Arg(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type FfiResult<T> = Result<T, Failure>;

fn set_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = msg);
}

fn guard(f: impl FnOnce() -> FfiResult<()>) -> KsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            KsStatus::Ok
        }
        Ok(Err(Failure::Arg(msg))) => {
            set_error(msg);
            KsStatus::InvalidArgument
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            match e.exit_code() {
                2 => KsStatus::Input,
                4 => KsStatus::Exhausted,
                5 => KsStatus::Precondition,
                _ => KsStatus::Numeric,
            }
        }
        Err(_) => {
            set_error("internal panic".into());
            KsStatus::Panic
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, name: &str) -> FfiResult<&'a T> {
    p.as_ref()
        .ok_or_else(|| Failure::Arg(format!("{name} is null")))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> FfiResult<()> {
    if out.is_null() {
        return Err(Failure::Arg("output pointer is null".into()));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn put_matrix(out: *mut *mut KsMatrix, m: Matrix) -> FfiResult<()> {
    put(out, KsMatrix { inner: m })
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> FfiResult<()> {
    if out.is_null() {
        return Err(Failure::Arg("output pointer is null".into()));
    }
    let c = CString::new(s).map_err(|_| Failure::Arg("string contains NUL".into()))?;
    *out = c.into_raw();
    Ok(())
}

unsafe fn put_value<T>(out: *mut T, value: T) -> FfiResult<()> {
    if out.is_null() {
        return Err(Failure::Arg("output pointer is null".into()));
    }
    *out = value;
    Ok(())
}

unsafe fn path_arg(path: *const c_char) -> FfiResult<std::path::PathBuf> {
    if path.is_null() {
        return Err(Failure::Arg("path is null".into()));
    }
    let s = CStr::from_ptr(path)
        .to_str()
        .map_err(|_| Failure::Arg("path is not valid UTF-8".into()))?;
    Ok(s.into())
}

fn format_of(format: KsFormat, path: &std::path::Path) -> MatrixFormat {
    match format {
        KsFormat::Auto => MatrixFormat::from_path(path),
        KsFormat::MatrixMarket => MatrixFormat::MatrixMarket,
        KsFormat::Json => MatrixFormat::Json,
    }
}

fn json<T: serde::Serialize>(value: &T) -> FfiResult<String> {
    serde_json::to_string_pretty(value).map_err(|e| Failure::Lib(e.into()))
}

fn spec_from(s: &KsPerturbSpec) -> PerturbSpec {
    PerturbSpec {
        eps: s.eps,
        gap_tol: s.gap_tol,
        max_attempts: s.max_attempts,
        stage2_shrink: s.stage2_shrink,
        seed: s.seed,
        field: if s.complex_field {
            FieldTag::Complex
        } else {
            FieldTag::Real
        },
        designated: s.designated,
    }
}

/// Message for the last failed call on this thread; empty after a success.
/// Valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn ks_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

#[no_mangle]
pub unsafe extern "C" fn ks_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

unsafe fn from_entries(
    rows: usize,
    cols: usize,
    data: *const f64,
    complex: bool,
) -> FfiResult<Matrix> {
    let len = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(if complex { 2 } else { 1 }))
        .ok_or_else(|| Failure::Arg("dimensions overflow".into()))?;
    if data.is_null() && len > 0 {
        return Err(Failure::Arg("data is null".into()));
    }
    let values = if len == 0 {
        &[][..]
    } else {
        std::slice::from_raw_parts(data, len)
    };
    let entries: Vec<C64> = if complex {
        values
            .chunks_exact(2)
            .map(|c| C64::new(c[0], c[1]))
            .collect()
    } else {
        values.iter().map(|&v| C64::new(v, 0.0)).collect()
    };
    let field = if complex {
        FieldTag::Complex
    } else {
        FieldTag::Real
    };
    Ok(Matrix::from_row_major(rows, cols, &entries, field)?)
}

/// `data` holds `rows * cols` doubles, row-major.
#[no_mangle]
pub unsafe extern "C" fn ks_matrix_from_real(
    rows: usize,
    cols: usize,
    data: *const f64,
    out: *mut *mut KsMatrix,
) -> KsStatus {
    guard(|| put_matrix(out, from_entries(rows, cols, data, false)?))
}

/// `data` holds `2 * rows * cols` doubles, row-major `(re, im)` pairs.
#[no_mangle]
pub unsafe extern "C" fn ks_matrix_from_complex(
    rows: usize,
    cols: usize,
    data: *const f64,
    out: *mut *mut KsMatrix,
) -> KsStatus {
    guard(|| put_matrix(out, from_entries(rows, cols, data, true)?))
}

#[no_mangle]
pub unsafe extern "C" fn ks_matrix_identity(n: usize, out: *mut *mut KsMatrix) -> KsStatus {
    guard(|| put_matrix(out, Matrix::identity(n)))
}

/// Seeded standard Gaussian matrix.
#[no_mangle]
pub unsafe extern "C" fn ks_matrix_gaussian(
    n: usize,
    complex: bool,
    seed: u64,
    out: *mut *mut KsMatrix,
) -> KsStatus {
    let field = if complex {
        FieldTag::Complex
    } else {
        FieldTag::Real
    };
    guard(|| put_matrix(out, sample_gaussian(n, field, &mut RandomSource::new(seed))))
}

#[no_mangle]
pub unsafe extern "C" fn ks_matrix_free(m: *mut KsMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Zero for a null handle.
#[no_mangle]
pub unsafe extern "C" fn ks_matrix_rows(m: *const KsMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.inner.nrows())
}

/// Zero for a null handle.
#[no_mangle]
pub unsafe extern "C" fn ks_matrix_cols(m: *const KsMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.inner.ncols())
}

#[no_mangle]
pub unsafe extern "C" fn ks_matrix_is_complex(m: *const KsMatrix) -> bool {
    m.as_ref()
        .is_some_and(|m| m.inner.field() == FieldTag::Complex)
}

#[no_mangle]
pub unsafe extern "C" fn ks_matrix_get(
    m: *const KsMatrix,
    row: usize,
    col: usize,
    re: *mut f64,
    im: *mut f64,
) -> KsStatus {
    guard(|| {
        let m = &borrow(m, "matrix")?.inner;
        if row >= m.nrows() || col >= m.ncols() {
            return Err(Failure::Arg(format!(
                "index ({row}, {col}) out of range for {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let z = m[(row, col)];
        put_value(re, z.re)?;
        put_value(im, z.im)
    })
}

#[no_mangle]
pub unsafe extern "C" fn ks_matrix_read(
    path: *const c_char,
    format: KsFormat,
    out: *mut *mut KsMatrix,
) -> KsStatus {
    guard(|| {
        let path = path_arg(path)?;
        put_matrix(out, read_matrix(&path, format_of(format, &path))?)
    })
}

#[no_mangle]
pub unsafe extern "C" fn ks_matrix_write(
    m: *const KsMatrix,
    path: *const c_char,
    format: KsFormat,
) -> KsStatus {
    guard(|| {
        let m = &borrow(m, "matrix")?.inner;
        let path = path_arg(path)?;
        Ok(write_matrix(m, &path, format_of(format, &path))?)
    })
}

#[no_mangle]
pub unsafe extern "C" fn ks_matrix_to_json(m: *const KsMatrix, out: *mut *mut c_char) -> KsStatus {
    guard(|| put_string(out, format_json(&borrow(m, "matrix")?.inner)?))
}

#[no_mangle]
pub unsafe extern "C" fn ks_matrix_multiply(
    a: *const KsMatrix,
    b: *const KsMatrix,
    out: *mut *mut KsMatrix,
) -> KsStatus {
    guard(|| {
        let product = borrow(a, "a")?.inner.multiply(&borrow(b, "b")?.inner)?;
        put_matrix(out, product)
    })
}

#[no_mangle]
pub unsafe extern "C" fn ks_matrix_inverse(
    m: *const KsMatrix,
    out: *mut *mut KsMatrix,
) -> KsStatus {
    guard(|| put_matrix(out, borrow(m, "matrix")?.inner.inverse()?))
}

#[no_mangle]
pub unsafe extern "C" fn ks_matrix_frobenius_norm(m: *const KsMatrix, out: *mut f64) -> KsStatus {
    guard(|| put_value(out, borrow(m, "matrix")?.inner.frobenius_norm()))
}

#[no_mangle]
pub unsafe extern "C" fn ks_matrix_spectral_norm(m: *const KsMatrix, out: *mut f64) -> KsStatus {
    guard(|| put_value(out, borrow(m, "matrix")?.inner.spectral_norm()))
}

#[no_mangle]
pub unsafe extern "C" fn ks_spectrum_report(
    m: *const KsMatrix,
    gap_tol: f64,
    out: *mut KsSpectrumSummary,
) -> KsStatus {
    guard(|| {
        let m = &borrow(m, "matrix")?.inner;
        let r = simplicity_report(m, gap_tol)?;
        put_value(
            out,
            KsSpectrumSummary {
                n: r.eigenvalues.len(),
                min_gap: r.min_gap,
                is_simple: r.is_simple,
                is_invertible: r.is_invertible,
                has_eig_condition: r.eig_condition.is_some(),
                eig_condition: r.eig_condition.unwrap_or(f64::NAN),
                safe_radius: r.safe_radius,
                gap_tol_used: r.gap_tol_used,
            },
        )
    })
}

/// Full report including eigenvalues, as JSON.
#[no_mangle]
pub unsafe extern "C" fn ks_spectrum_report_json(
    m: *const KsMatrix,
    gap_tol: f64,
    out: *mut *mut c_char,
) -> KsStatus {
    guard(|| {
        let r = simplicity_report(&borrow(m, "matrix")?.inner, gap_tol)?;
        put_string(out, json(&r)?)
    })
}

#[no_mangle]
pub extern "C" fn ks_perturb_spec_default() -> KsPerturbSpec {
    let d = PerturbSpec::default();
    KsPerturbSpec {
        eps: d.eps,
        gap_tol: d.gap_tol,
        max_attempts: d.max_attempts,
        stage2_shrink: d.stage2_shrink,
        seed: d.seed,
        complex_field: d.field == FieldTag::Complex,
        designated: d.designated,
    }
}

/// Perturbs `k` matrices so that `maps[0](A_0) ... maps[k-1](A_{k-1})` has a
/// simple spectrum. `spec` may be null for the defaults.
#[no_mangle]
pub unsafe extern "C" fn ks_perturb_tuple(
    matrices: *const *const KsMatrix,
    maps: *const KsSelfMap,
    k: usize,
    spec: *const KsPerturbSpec,
    out: *mut *mut KsOutcome,
) -> KsStatus {
    guard(|| {
        if k == 0 || matrices.is_null() || maps.is_null() {
            return Err(Failure::Arg("need k >= 1 matrices and maps".into()));
        }
        let mats = std::slice::from_raw_parts(matrices, k)
            .iter()
            .enumerate()
            .map(|(i, &m)| borrow(m, &format!("matrix {i}")).map(|m| m.inner.clone()))
            .collect::<FfiResult<Vec<_>>>()?;
        let maps: Vec<SelfMap> = std::slice::from_raw_parts(maps, k)
            .iter()
            .map(|m| match m {
                KsSelfMap::Identity => SelfMap::Identity,
                KsSelfMap::Inverse => SelfMap::Inverse,
                KsSelfMap::Transpose => SelfMap::Transpose,
                KsSelfMap::ConjugateTranspose => SelfMap::ConjugateTranspose,
            })
            .collect();
        let spec = spec.as_ref().map_or_else(PerturbSpec::default, spec_from);
        put(
            out,
            KsOutcome {
                inner: perturb_tuple(&mats, &maps, &spec)?,
            },
        )
    })
}

#[no_mangle]
pub unsafe extern "C" fn ks_outcome_free(o: *mut KsOutcome) {
    if !o.is_null() {
        drop(Box::from_raw(o));
    }
}

/// Number of perturbed matrices; zero for a null handle.
#[no_mangle]
pub unsafe extern "C" fn ks_outcome_len(o: *const KsOutcome) -> usize {
    o.as_ref().map_or(0, |o| o.inner.perturbed.len())
}

#[no_mangle]
pub unsafe extern "C" fn ks_outcome_attempts_used(o: *const KsOutcome) -> usize {
    o.as_ref().map_or(0, |o| o.inner.attempts_used)
}

/// Copy of the `index`-th perturbed matrix.
#[no_mangle]
pub unsafe extern "C" fn ks_outcome_matrix(
    o: *const KsOutcome,
    index: usize,
    out: *mut *mut KsMatrix,
) -> KsStatus {
    guard(|| {
        let o = &borrow(o, "outcome")?.inner;
        let m = o
            .perturbed
            .get(index)
            .ok_or_else(|| Failure::Arg(format!("index {index} out of range")))?;
        put_matrix(out, m.clone())
    })
}

#[no_mangle]
pub unsafe extern "C" fn ks_outcome_delta(
    o: *const KsOutcome,
    index: usize,
    out: *mut f64,
) -> KsStatus {
    guard(|| {
        let o = &borrow(o, "outcome")?.inner;
        let d = *o
            .deltas
            .get(index)
            .ok_or_else(|| Failure::Arg(format!("index {index} out of range")))?;
        put_value(out, d)
    })
}

#[no_mangle]
pub unsafe extern "C" fn ks_outcome_product(
    o: *const KsOutcome,
    out: *mut *mut KsMatrix,
) -> KsStatus {
    guard(|| put_matrix(out, borrow(o, "outcome")?.inner.product.clone()))
}

#[no_mangle]
pub unsafe extern "C" fn ks_outcome_to_json(
    o: *const KsOutcome,
    out: *mut *mut c_char,
) -> KsStatus {
    guard(|| put_string(out, json(&borrow(o, "outcome")?.inner)?))
}

unsafe fn binomial_of(
    a: *const KsMatrix,
    b: *const KsMatrix,
    c: *const KsMatrix,
    d: *const KsMatrix,
) -> FfiResult<KroneckerBinomial> {
    Ok(KroneckerBinomial::new(
        borrow(a, "a")?.inner.clone(),
        borrow(b, "b")?.inner.clone(),
        borrow(c, "c")?.inner.clone(),
        borrow(d, "d")?.inner.clone(),
    )?)
}

/// Inverse of `A⊗C + B⊗D` as at most `min(p, q)` Kronecker products.
#[no_mangle]
pub unsafe extern "C" fn ks_binomial_inverse(
    a: *const KsMatrix,
    b: *const KsMatrix,
    c: *const KsMatrix,
    d: *const KsMatrix,
    gap_tol: f64,
    out: *mut *mut KsDecomposition,
) -> KsStatus {
    guard(|| {
        let binomial = binomial_of(a, b, c, d)?;
        let opts = InverseOptions {
            gap_tol,
            ..InverseOptions::default()
        };
        let (inner, diagnostics) = binomial_inverse_with_diagnostics(&binomial, &opts)?;
        put(out, KsDecomposition { inner, diagnostics })
    })
}

/// Perturbs `A` and `B` by less than `delta` each (Frobenius) so that
/// `ks_binomial_inverse` accepts the result. `spec` may be null.
#[no_mangle]
pub unsafe extern "C" fn ks_preprocess_binomial(
    a: *const KsMatrix,
    b: *const KsMatrix,
    c: *const KsMatrix,
    d: *const KsMatrix,
    delta: f64,
    spec: *const KsPerturbSpec,
    a_out: *mut *mut KsMatrix,
    b_out: *mut *mut KsMatrix,
) -> KsStatus {
    guard(|| {
        if a_out.is_null() || b_out.is_null() {
            return Err(Failure::Arg("output pointer is null".into()));
        }
        let binomial = binomial_of(a, b, c, d)?;
        let spec = spec.as_ref().map_or_else(PerturbSpec::default, spec_from);
        let (fixed, _) = preprocess_binomial(&binomial, delta, &spec)?;
        put_matrix(a_out, fixed.a().clone())?;
        put_matrix(b_out, fixed.b().clone())
    })
}

#[no_mangle]
pub unsafe extern "C" fn ks_decomposition_free(d: *mut KsDecomposition) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

/// Number of terms; zero for a null handle.
#[no_mangle]
pub unsafe extern "C" fn ks_decomposition_len(d: *const KsDecomposition) -> usize {
    d.as_ref().map_or(0, |d| d.inner.len())
}

/// `||X * reconstruction - I||_F`; NaN for a null handle.
#[no_mangle]
pub unsafe extern "C" fn ks_decomposition_residual(d: *const KsDecomposition) -> f64 {
    d.as_ref().map_or(f64::NAN, |d| d.diagnostics.residual)
}

/// Copies of the factors of term `index`.
#[no_mangle]
pub unsafe extern "C" fn ks_decomposition_term(
    d: *const KsDecomposition,
    index: usize,
    left: *mut *mut KsMatrix,
    right: *mut *mut KsMatrix,
) -> KsStatus {
    guard(|| {
        if left.is_null() || right.is_null() {
            return Err(Failure::Arg("output pointer is null".into()));
        }
        let d = &borrow(d, "decomposition")?.inner;
        let t = d
            .terms
            .get(index)
            .ok_or_else(|| Failure::Arg(format!("term {index} out of range")))?;
        put_matrix(left, t.left.clone())?;
        put_matrix(right, t.right.clone())
    })
}

#[no_mangle]
pub unsafe extern "C" fn ks_decomposition_reconstruct(
    d: *const KsDecomposition,
    out: *mut *mut KsMatrix,
) -> KsStatus {
    guard(|| put_matrix(out, reconstruct(&borrow(d, "decomposition")?.inner)?))
}

/// `{"p", "q", "terms"}` JSON.
#[no_mangle]
pub unsafe extern "C" fn ks_decomposition_to_json(
    d: *const KsDecomposition,
    out: *mut *mut c_char,
) -> KsStatus {
    guard(|| put_string(out, json(&borrow(d, "decomposition")?.inner)?))
}

#[no_mangle]
pub unsafe extern "C" fn ks_kron_rank(
    x: *const KsMatrix,
    p: usize,
    q: usize,
    tol: f64,
    out: *mut usize,
) -> KsStatus {
    guard(|| {
        let report = kron_rank(&borrow(x, "matrix")?.inner, p, q, tol)?;
        put_value(out, report.numeric_rank)
    })
}
