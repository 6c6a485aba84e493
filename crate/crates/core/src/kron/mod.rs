//! Kronecker products, Kronecker rank, and explicit inverses of binomials
//! `X = A ⊗ C + B ⊗ D`.
//!
//! Block convention: in `L ⊗ R` the left factor indexes blocks, so entry
//! `(i*q + k, j*q + l)` equals `L[i,j] * R[k,l]` (0-based, `R` is q x q).

mod adjugate;
mod inverse;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{Matrix, C64};
use crate::spectra::{eigendecompose, report_from, SpectrumReport};

pub use adjugate::{adjugate_poly, MAX_NODE_RETRIES};
pub use inverse::{
    binomial_inverse, binomial_inverse_with_diagnostics, check_inverse_preconditions,
    preprocess_binomial, Branch, InverseDiagnostics, InverseOptions, RankPolicy,
};

/// Default relative tolerance for [`kron_rank`].
pub const DEFAULT_RANK_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KroneckerBinomial {
    #[serde(rename = "A")]
    a: Matrix,
    #[serde(rename = "B")]
    b: Matrix,
    #[serde(rename = "C")]
    c: Matrix,
    #[serde(rename = "D")]
    d: Matrix,
}

fn square_of(m: &Matrix, size: usize, name: &'static str) -> Result<()> {
    if m.nrows() == size && m.ncols() == size {
        Ok(())
    } else {
        Err(Error::dims(
            name,
            format!("{size}x{size}"),
            format!("{}x{}", m.nrows(), m.ncols()),
        ))
    }
}

impl KroneckerBinomial {
    /// `A, B` must be p x p and `C, D` q x q.
    pub fn new(a: Matrix, b: Matrix, c: Matrix, d: Matrix) -> Result<KroneckerBinomial> {
        let p = a.require_square("binomial factor A")?;
        square_of(&b, p, "binomial factor B")?;
        let q = c.require_square("binomial factor C")?;
        square_of(&d, q, "binomial factor D")?;
        Ok(KroneckerBinomial { a, b, c, d })
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn b(&self) -> &Matrix {
        &self.b
    }

    pub fn c(&self) -> &Matrix {
        &self.c
    }

    pub fn d(&self) -> &Matrix {
        &self.d
    }

    pub fn p(&self) -> usize {
        self.a.nrows()
    }

    pub fn q(&self) -> usize {
        self.c.nrows()
    }

    /// Same C and D with new p x p factors.
    pub fn with_left_factors(&self, a: Matrix, b: Matrix) -> Result<KroneckerBinomial> {
        KroneckerBinomial::new(a, b, self.c.clone(), self.d.clone())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KronTerm {
    #[serde(rename = "L")]
    pub left: Matrix,
    #[serde(rename = "R")]
    pub right: Matrix,
}

/// `sum_k L_k ⊗ R_k` with p x p left and q x q right factors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KronSumDecomposition {
    pub p: usize,
    pub q: usize,
    pub terms: Vec<KronTerm>,
}

impl KronSumDecomposition {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KronRankReport {
    /// Descending.
    pub singular_values: Vec<f64>,
    pub numeric_rank: usize,
    pub tol_used: f64,
}

#[derive(Clone, Debug)]
pub struct PencilSpectrum {
    pub eigenvalues: Vec<C64>,
    pub eigenvectors: Matrix,
    pub report: SpectrumReport,
}

pub fn kron_product(l: &Matrix, r: &Matrix) -> Matrix {
    let (lr, lc) = (l.nrows(), l.ncols());
    let (rr, rc) = (r.nrows(), r.ncols());
    let mut out = nalgebra::DMatrix::<C64>::zeros(lr * rr, lc * rc);
    for j in 0..lc {
        for i in 0..lr {
            let lij = l[(i, j)];
            for col in 0..rc {
                for row in 0..rr {
                    out[(i * rr + row, j * rc + col)] = lij * r[(row, col)];
                }
            }
        }
    }
    Matrix::from_dmatrix(out, l.field().join(r.field()))
}

pub fn evaluate_binomial(b: &KroneckerBinomial) -> Matrix {
    let first = kron_product(&b.a, &b.c);
    let second = kron_product(&b.b, &b.d);
    first
        .add(&second)
        .expect("binomial factors have consistent sizes")
}

/// Sum of the terms in ascending index order.
pub fn reconstruct(d: &KronSumDecomposition) -> Result<Matrix> {
    let mut terms = d.terms.iter();
    let first = terms
        .next()
        .ok_or_else(|| Error::Precondition("decomposition has no terms".into()))?;
    let mut acc = kron_product(&first.left, &first.right);
    for t in terms {
        acc = acc.add(&kron_product(&t.left, &t.right))?;
    }
    Ok(acc)
}

fn check_pq(x: &Matrix, p: usize, q: usize, op: &'static str) -> Result<()> {
    if p == 0 || q == 0 {
        return Err(Error::dims(op, "positive p and q", format!("p={p}, q={q}")));
    }
    let size = p * q;
    if x.nrows() != size || x.ncols() != size {
        return Err(Error::dims(
            op,
            format!("{size}x{size} (p={p}, q={q})"),
            format!("{}x{}", x.nrows(), x.ncols()),
        ));
    }
    Ok(())
}

/// Maps `L ⊗ R` to `vec(L) vec(R)^T`.
///
/// Block `(i, j)` becomes row `i + j*p`, holding the column-stacked entries
/// of that q x q block.
pub fn rearrange(x: &Matrix, p: usize, q: usize) -> Result<Matrix> {
    check_pq(x, p, q, "rearrange")?;
    let src = x.as_dmatrix();
    let out = nalgebra::DMatrix::from_fn(p * p, q * q, |row, col| {
        let (i, j) = (row % p, row / p);
        let (k, l) = (col % q, col / q);
        src[(i * q + k, j * q + l)]
    });
    Ok(Matrix::from_dmatrix(out, x.field()))
}

/// Numeric Kronecker rank: number of singular values of the rearranged
/// matrix above `tol * sigma_1`.
pub fn kron_rank(x: &Matrix, p: usize, q: usize, tol: f64) -> Result<KronRankReport> {
    if !(tol > 0.0) {
        return Err(Error::Precondition(format!(
            "rank tolerance must be positive, got {tol}"
        )));
    }
    let r = rearrange(x, p, q)?;
    let singular_values = r.singular_values();
    let cutoff = tol * singular_values.first().copied().unwrap_or(0.0);
    let numeric_rank = singular_values.iter().filter(|&&s| s > cutoff).count();
    Ok(KronRankReport {
        singular_values,
        numeric_rank,
        tol_used: tol,
    })
}

pub(crate) const PREPROCESS_HINT: &str =
    "; perturb the factors with preprocess_binomial (CLI: --auto-preprocess)";

/// Spectrum of the pencil `(a, b)`, i.e. of `b^-1 a`.
pub fn pencil_spectrum(a: &Matrix, b: &Matrix, gap_tol: f64) -> Result<PencilSpectrum> {
    let p = a.require_square("pencil_spectrum")?;
    square_of(b, p, "pencil_spectrum")?;
    if !(gap_tol > 0.0) {
        return Err(Error::Precondition(format!(
            "gap_tol must be positive, got {gap_tol}"
        )));
    }
    b.check_invertible().map_err(|e| match e {
        Error::SingularMatrix { ratio, .. } => Error::SingularMatrix {
            ratio,
            hint: PREPROCESS_HINT,
        },
        other => other,
    })?;
    let m = b.solve(a)?;
    let eig = eigendecompose(&m)?;
    let eigenvalues = eig.eigenvalues.clone();
    let eigenvectors = eig.eigenvectors.clone();
    let report = report_from(&m, eig, gap_tol);
    Ok(PencilSpectrum {
        eigenvalues,
        eigenvectors,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::{sample_gaussian, FieldTag, RandomSource};
    use crate::spectra::DEFAULT_GAP_TOL;

    #[test]
    fn kron_examples() {
        let i2 = Matrix::identity(2);
        assert_eq!(kron_product(&i2, &i2), Matrix::identity(4));
        assert_eq!(
            kron_product(&Matrix::diag(&[1.0, 2.0]), &i2),
            Matrix::diag(&[1.0, 1.0, 2.0, 2.0])
        );
        let swap = Matrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]);
        let expect = Matrix::from_rows(&[
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 2.0],
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 2.0, 0.0, 0.0],
        ]);
        assert_eq!(kron_product(&swap, &Matrix::diag(&[1.0, 2.0])), expect);
    }

    #[test]
    fn kron_index_map_on_unequal_sizes() {
        let mut rng = RandomSource::new(4);
        let l = sample_gaussian(2, FieldTag::Complex, &mut rng);
        let r = sample_gaussian(3, FieldTag::Complex, &mut rng);
        let k = kron_product(&l, &r);
        for i in 0..2 {
            for j in 0..2 {
                for a in 0..3 {
                    for b in 0..3 {
                        assert_eq!(k[(i * 3 + a, j * 3 + b)], l[(i, j)] * r[(a, b)]);
                    }
                }
            }
        }
    }

    fn binomial(a: Matrix, b: Matrix, c: Matrix, d: Matrix) -> KroneckerBinomial {
        KroneckerBinomial::new(a, b, c, d).unwrap()
    }

    #[test]
    fn evaluate_examples() {
        let i = Matrix::identity(2);
        let x = evaluate_binomial(&binomial(i.clone(), i.clone(), i.clone(), i.clone()));
        assert_eq!(x, Matrix::identity(4).scale(2.0));

        let s = |v: f64| Matrix::diag(&[v]);
        let x = evaluate_binomial(&binomial(s(2.0), s(3.0), s(5.0), s(7.0)));
        assert_eq!(x, s(31.0));

        let x = evaluate_binomial(&binomial(
            Matrix::diag(&[1.0, 2.0]),
            i.clone(),
            i,
            Matrix::diag(&[1.0, 3.0]),
        ));
        assert_eq!(x, Matrix::diag(&[2.0, 4.0, 3.0, 5.0]));
    }

    #[test]
    fn binomial_rejects_bad_sizes() {
        let err = KroneckerBinomial::new(
            Matrix::identity(2),
            Matrix::identity(3),
            Matrix::identity(2),
            Matrix::identity(2),
        );
        assert!(matches!(err, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn rearrange_of_single_product_is_outer_product() {
        let mut rng = RandomSource::new(10);
        let l = sample_gaussian(2, FieldTag::Complex, &mut rng);
        let r = sample_gaussian(3, FieldTag::Complex, &mut rng);
        let re = rearrange(&kron_product(&l, &r), 2, 3).unwrap();
        let vl = l.as_dmatrix().as_slice().to_vec();
        let vr = r.as_dmatrix().as_slice().to_vec();
        for row in 0..4 {
            for col in 0..9 {
                assert_eq!(re[(row, col)], vl[row] * vr[col]);
            }
        }
    }

    #[test]
    fn rearrange_examples() {
        let i2 = Matrix::identity(2);
        let r = rearrange(&kron_product(&i2, &i2), 2, 2).unwrap();
        assert_eq!(
            kron_rank(&kron_product(&i2, &i2), 2, 2, DEFAULT_RANK_TOL)
                .unwrap()
                .numeric_rank,
            1
        );
        let v = [1.0, 0.0, 0.0, 1.0];
        for a in 0..4 {
            for b in 0..4 {
                assert_eq!(r[(a, b)].re, v[a] * v[b]);
            }
        }
        let d = Matrix::diag(&[2.0, 4.0, 3.0, 5.0]);
        assert_eq!(
            kron_rank(&d, 2, 2, DEFAULT_RANK_TOL).unwrap().numeric_rank,
            2
        );
        let z = Matrix::zeros(4, 4, FieldTag::Real);
        assert_eq!(rearrange(&z, 2, 2).unwrap(), z);
        assert!(rearrange(&d, 2, 3).is_err());
    }

    #[test]
    fn rank_examples() {
        let mut rng = RandomSource::new(12);
        let l = sample_gaussian(3, FieldTag::Complex, &mut rng);
        let r = sample_gaussian(2, FieldTag::Complex, &mut rng);
        assert_eq!(
            kron_rank(&kron_product(&l, &r), 3, 2, DEFAULT_RANK_TOL)
                .unwrap()
                .numeric_rank,
            1
        );
        let z = kron_rank(&Matrix::zeros(6, 6, FieldTag::Real), 3, 2, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(z.numeric_rank, 0);
        let g = |rng: &mut RandomSource| sample_gaussian(3, FieldTag::Complex, rng);
        let b = binomial(g(&mut rng), g(&mut rng), g(&mut rng), g(&mut rng));
        let report = kron_rank(&evaluate_binomial(&b), 3, 3, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(report.numeric_rank, 2);
        assert_eq!(report.singular_values.len(), 9);
        assert!(report.singular_values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn pencil_examples() {
        let ps = pencil_spectrum(
            &Matrix::diag(&[1.0, 2.0]),
            &Matrix::identity(2),
            DEFAULT_GAP_TOL,
        )
        .unwrap();
        assert!((ps.eigenvalues[0] - C64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((ps.eigenvalues[1] - C64::new(2.0, 0.0)).norm() < 1e-15);
        assert!(ps.report.is_simple);
        let ps =
            pencil_spectrum(&Matrix::identity(2), &Matrix::identity(2), DEFAULT_GAP_TOL).unwrap();
        assert!(!ps.report.is_simple);
        let nil = Matrix::from_rows(&[[0.0, 1.0], [0.0, 0.0]]);
        match pencil_spectrum(&Matrix::identity(2), &nil, DEFAULT_GAP_TOL) {
            Err(Error::SingularMatrix { hint, .. }) => assert!(hint.contains("preprocess")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn reconstruct_single_term_identity() {
        let d = KronSumDecomposition {
            p: 2,
            q: 3,
            terms: vec![KronTerm {
                left: Matrix::identity(2),
                right: Matrix::identity(3),
            }],
        };
        assert_eq!(reconstruct(&d).unwrap(), Matrix::identity(6));
        let v = serde_json::to_value(&d).unwrap();
        assert!(v["terms"][0].get("L").is_some() && v["terms"][0].get("R").is_some());
    }
}
