//! Inverse of `X = A ⊗ C + B ⊗ D` as a sum of at most `min(p, q)` Kronecker
//! products.
//!
//! With `B` invertible, `X = (B ⊗ I)(M ⊗ C + I ⊗ D)` for `M = B^-1 A`. When
//! `M = S diag(lambda) S^-1` the middle factor is block diagonal in the
//! eigenbasis with blocks `lambda_i C + D`, which gives
//!
//! ```text
//! X^-1 = sum_i (S E_ii S^-1 B^-1) ⊗ (lambda_i C + D)^-1          (p terms)
//!      = sum_j (S diag(lambda_i^j / d_i) S^-1 B^-1) ⊗ M_j         (q terms)
//! ```
//!
//! where `d_i = det(lambda_i C + D)` and `M_j` are the coefficients of
//! `adj(lambda C + D)`. Terms may be complex even for real input when the
//! pencil has complex eigenvalues.

use serde::Serialize;

use super::{
    adjugate_poly, evaluate_binomial, kron_rank, reconstruct, KronSumDecomposition, KronTerm,
    KroneckerBinomial, DEFAULT_RANK_TOL, PREPROCESS_HINT,
};
use crate::error::{Error, Result};
use crate::matcore::{Matrix, RandomSource, C64};
use crate::perturb::{perturb_pair_inverse, PerturbOutcome, PerturbSpec};
use crate::spectra::{eigendecompose, report_from, SpectrumReport, DEFAULT_GAP_TOL};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Branch {
    /// One term per pencil eigenvalue.
    #[serde(rename = "p-term")]
    PTerm,
    /// One term per adjugate coefficient.
    #[serde(rename = "q-term")]
    QTerm,
}

/// What to do when the input does not have numeric Kronecker rank 2.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RankPolicy {
    Ignore,
    Warn,
    Reject,
}

#[derive(Clone, Debug)]
pub struct InverseOptions {
    pub gap_tol: f64,
    /// Residual guard: `||X * rec - I||_F <= tol_recon * cond(X)`.
    pub tol_recon: f64,
    pub rank_tol: f64,
    pub rank_policy: RankPolicy,
    /// Overrides the default choice (p-term when `p <= q`).
    pub branch: Option<Branch>,
}

impl Default for InverseOptions {
    fn default() -> Self {
        InverseOptions {
            gap_tol: DEFAULT_GAP_TOL,
            tol_recon: 1e-8,
            rank_tol: DEFAULT_RANK_TOL,
            rank_policy: RankPolicy::Warn,
            branch: None,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct InverseDiagnostics {
    pub branch: Branch,
    /// The roles of (A, C) and (B, D) were exchanged because B is singular.
    pub swapped: bool,
    pub pencil_report: SpectrumReport,
    pub residual: f64,
    pub condition: f64,
    pub bound: f64,
    pub input_kron_rank: usize,
    pub warnings: Vec<String>,
}

struct Prepared {
    swapped: bool,
    /// Invertible factor and its inverse.
    base_inv: Matrix,
    /// q x q factors in the roles of C and D.
    c: Matrix,
    d: Matrix,
    eigenvalues: Vec<C64>,
    vectors: Matrix,
    vectors_inv: Matrix,
    nodes: Vec<Matrix>,
    report: SpectrumReport,
}

fn precondition(msg: String) -> Error {
    Error::Precondition(format!("{msg}{PREPROCESS_HINT}"))
}

fn prepare(b: &KroneckerBinomial, gap_tol: f64) -> Result<Prepared> {
    // X is symmetric under (A, C) <-> (B, D); put an invertible factor in B's role.
    let (swapped, num, base, c, d) = if b.b().check_invertible().is_ok() {
        (false, b.a(), b.b(), b.c(), b.d())
    } else if b.a().check_invertible().is_ok() {
        (true, b.b(), b.a(), b.d(), b.c())
    } else {
        return Err(precondition("neither A nor B is invertible".into()));
    };
    let base_inv = base.inverse()?;
    let m = base_inv.multiply(num)?;
    let eig = eigendecompose(&m)?;
    let eigenvalues = eig.eigenvalues.clone();
    let vectors = eig.eigenvectors.clone();
    let report = report_from(&m, eig, gap_tol);
    if !report.is_simple {
        return Err(precondition(format!(
            "pencil spectrum is not simple (min gap {:e})",
            report.min_gap
        )));
    }
    let vectors_inv = vectors
        .inverse()
        .map_err(|_| precondition("pencil eigenvector matrix is numerically singular".into()))?;
    let mut nodes = Vec::with_capacity(eigenvalues.len());
    for (i, &lambda) in eigenvalues.iter().enumerate() {
        let node = c.scale_complex(lambda).add(d)?;
        if node.check_invertible().is_err() {
            return Err(precondition(format!(
                "lambda_{i} C + D is singular for lambda_{i} = {lambda}"
            )));
        }
        nodes.push(node);
    }
    Ok(Prepared {
        swapped,
        base_inv,
        c: c.clone(),
        d: d.clone(),
        eigenvalues,
        vectors,
        vectors_inv,
        nodes,
        report,
    })
}

/// Succeeds when [`binomial_inverse`] can run on `b` at this tolerance.
pub fn check_inverse_preconditions(b: &KroneckerBinomial, gap_tol: f64) -> Result<()> {
    prepare(b, gap_tol).map(|_| ())
}

fn outer(col: &Matrix, j: usize, row: &Matrix, i: usize, weight: C64) -> Matrix {
    let p = col.nrows();
    let data = nalgebra::DMatrix::from_fn(p, p, |r, c| col[(r, j)] * weight * row[(i, c)]);
    Matrix::from_dmatrix(data, col.field().join(row.field()))
}

fn assemble(prep: &Prepared, p: usize, q: usize, branch: Branch) -> Result<KronSumDecomposition> {
    // Row i of w is e_i^T S^-1 B^-1.
    let w = prep.vectors_inv.multiply(&prep.base_inv)?;
    let terms = match branch {
        Branch::PTerm => {
            let mut terms = Vec::with_capacity(p);
            for (i, node) in prep.nodes.iter().enumerate() {
                terms.push(KronTerm {
                    left: outer(&prep.vectors, i, &w, i, C64::new(1.0, 0.0)),
                    right: node.inverse()?,
                });
            }
            terms
        }
        Branch::QTerm => {
            let coeffs = adjugate_poly(&prep.c, &prep.d)?;
            let dets = prep
                .nodes
                .iter()
                .map(Matrix::determinant)
                .collect::<Result<Vec<C64>>>()?;
            let mut terms = Vec::with_capacity(q);
            for (j, coeff) in coeffs.into_iter().enumerate() {
                let weights: Vec<C64> = prep
                    .eigenvalues
                    .iter()
                    .zip(&dets)
                    .map(|(lambda, det)| lambda.powi(j as i32) / det)
                    .collect();
                let scaled = prep.vectors.multiply(&Matrix::diag_complex(&weights))?;
                terms.push(KronTerm {
                    left: scaled.multiply(&w)?,
                    right: coeff,
                });
            }
            terms
        }
    };
    Ok(KronSumDecomposition { p, q, terms })
}

pub fn binomial_inverse(
    b: &KroneckerBinomial,
    opts: &InverseOptions,
) -> Result<KronSumDecomposition> {
    binomial_inverse_with_diagnostics(b, opts).map(|(d, _)| d)
}

/// [`binomial_inverse`] plus the pencil report, residual and conditioning.
pub fn binomial_inverse_with_diagnostics(
    b: &KroneckerBinomial,
    opts: &InverseOptions,
) -> Result<(KronSumDecomposition, InverseDiagnostics)> {
    let (p, q) = (b.p(), b.q());
    let x = evaluate_binomial(b);
    let mut warnings = Vec::new();
    let input_kron_rank = kron_rank(&x, p, q, opts.rank_tol)?.numeric_rank;
    if input_kron_rank != 2 {
        let msg = format!("input has numeric Kronecker rank {input_kron_rank}, expected 2");
        match opts.rank_policy {
            RankPolicy::Ignore => {}
            RankPolicy::Warn => warnings.push(msg),
            RankPolicy::Reject => return Err(Error::Precondition(msg)),
        }
    }

    let prep = prepare(b, opts.gap_tol)?;
    let branch = opts
        .branch
        .unwrap_or(if p <= q { Branch::PTerm } else { Branch::QTerm });
    let decomposition = assemble(&prep, p, q, branch)?;

    let rec = reconstruct(&decomposition)?;
    let residual = x
        .multiply(&rec)?
        .sub(&Matrix::identity(p * q))?
        .frobenius_norm();
    let condition = x.condition_number();
    let bound = opts.tol_recon * condition;
    if !(residual <= bound) {
        return Err(Error::ResidualTooLarge {
            residual,
            bound,
            condition,
        });
    }
    Ok((
        decomposition,
        InverseDiagnostics {
            branch,
            swapped: prep.swapped,
            pencil_report: prep.report,
            residual,
            condition,
            bound,
            input_kron_rank,
            warnings,
        },
    ))
}

/// Perturbs `A` and `B` by less than `delta` (Frobenius) so that the result
/// satisfies the [`binomial_inverse`] preconditions; `C` and `D` are kept.
///
/// `A_eps B_eps^-1` and `B_eps^-1 A_eps` are similar, so simplicity of the
/// perturbed product carries over to the pencil. The pencil check is still
/// repeated at `spec.gap_tol` because the two matrices have different norms;
/// a failing draw is retried on a derived seed.
pub fn preprocess_binomial(
    b: &KroneckerBinomial,
    delta: f64,
    spec: &PerturbSpec,
) -> Result<(KroneckerBinomial, PerturbOutcome)> {
    if !(delta > 0.0) {
        return Err(Error::Precondition(format!(
            "delta must be positive, got {delta}"
        )));
    }
    let mut total_attempts = 0;
    let mut last_trace = None;
    for retry in 0..spec.max_attempts {
        let seed = if retry == 0 {
            spec.seed
        } else {
            RandomSource::derived(spec.seed, &[0x5052_4550, retry as u64]).next_u64()
        };
        let attempt_spec = PerturbSpec {
            eps: delta,
            seed,
            ..spec.clone()
        };
        let outcome = match perturb_pair_inverse(b.a(), b.b(), &attempt_spec) {
            Ok(o) => o,
            Err(Error::AttemptsExhausted { attempts, trace }) => {
                total_attempts += attempts;
                last_trace = Some(trace);
                continue;
            }
            Err(e) => return Err(e),
        };
        total_attempts += outcome.attempts_used;
        let perturbed =
            b.with_left_factors(outcome.perturbed[0].clone(), outcome.perturbed[1].clone())?;
        if check_inverse_preconditions(&perturbed, spec.gap_tol).is_ok() {
            return Ok((perturbed, outcome));
        }
        last_trace = Some(Box::new(outcome.trace));
    }
    Err(Error::AttemptsExhausted {
        attempts: total_attempts,
        trace: last_trace.unwrap_or_default(),
    })
}
