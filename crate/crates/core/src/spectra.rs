//! Eigenvalues and simplicity certificates.
//!
//! A [`SpectrumReport`] decides simplicity and invertibility with a relative
//! tolerance and, for simple spectra, carries a Bauer–Fike radius inside
//! which every perturbation keeps the eigenvalues separated.

mod schur;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{sample_gaussian, FieldTag, Matrix, RandomSource, C64, TOL_SINGULAR};

pub const DEFAULT_GAP_TOL: f64 = 1e-8;

/// Largest dimension accepted by [`char_poly_discriminant`].
pub const DISCRIMINANT_MAX_N: usize = 8;

/// Residual bound `||A v - lambda v|| <= TOL_EIG ||A||_2` met by [`eigendecompose`].
pub const TOL_EIG: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct Eigendecomposition {
    /// Sorted lexicographically by (re, im).
    pub eigenvalues: Vec<C64>,
    /// Unit 2-norm eigenvector columns, in eigenvalue order.
    pub eigenvectors: Matrix,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    #[serde(with = "complex_pairs")]
    pub eigenvalues: Vec<C64>,
    /// Infinite for 1x1 matrices (serialized as null).
    pub min_gap: f64,
    pub is_simple: bool,
    pub is_invertible: bool,
    /// 2-norm condition number of the eigenvector matrix; present only when simple.
    pub eig_condition: Option<f64>,
    pub safe_radius: f64,
    pub gap_tol_used: f64,
}

pub(crate) mod complex_pairs {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::matcore::C64;

    pub fn serialize<S: Serializer>(values: &[C64], s: S) -> Result<S::Ok, S::Error> {
        let pairs: Vec<[f64; 2]> = values.iter().map(|z| [z.re, z.im]).collect();
        pairs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<C64>, D::Error> {
        let pairs = Vec::<[f64; 2]>::deserialize(d)?;
        Ok(pairs.into_iter().map(|[re, im]| C64::new(re, im)).collect())
    }
}

fn lex_cmp(a: &C64, b: &C64) -> std::cmp::Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

/// Eigenvectors of an upper-triangular `t` by back substitution, one per
/// diagonal entry. Near-zero pivots are replaced by a floor scaled to `||t||`.
fn triangular_eigenvectors(t: &DMatrix<C64>) -> DMatrix<C64> {
    let n = t.nrows();
    let scale = t
        .iter()
        .map(|z| z.norm_sqr())
        .sum::<f64>()
        .sqrt()
        .max(f64::MIN_POSITIVE);
    let floor = (f64::EPSILON * scale).max(f64::MIN_POSITIVE);
    let mut y = DMatrix::<C64>::zeros(n, n);
    for k in 0..n {
        let lambda = t[(k, k)];
        y[(k, k)] = C64::new(1.0, 0.0);
        for j in (0..k).rev() {
            let mut s = C64::new(0.0, 0.0);
            for m in (j + 1)..=k {
                s += t[(j, m)] * y[(m, k)];
            }
            let pivot = t[(j, j)] - lambda;
            let modulus = pivot.norm();
            y[(j, k)] = if modulus < floor {
                -s / floor
            } else {
                -(s * (pivot.conj() / modulus)) / modulus
            };
            let big = y[(j, k)].norm();
            if big > 1e150 {
                for m in j..=k {
                    y[(m, k)] /= big;
                }
            }
        }
    }
    y
}

pub fn eigendecompose(a: &Matrix) -> Result<Eigendecomposition> {
    let n = a.require_square("eigendecompose")?;
    if !a.is_finite() {
        return Err(Error::NonFinite);
    }
    let cap = 30 * n.max(10) * n;
    let (q, t) = schur::complex_schur(a.as_dmatrix().clone(), cap)
        .ok_or(Error::NonConvergence { n, cap })?;
    let mut vectors = &q * triangular_eigenvectors(&t);
    for mut col in vectors.column_iter_mut() {
        let norm = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.0 {
            col /= C64::new(norm, 0.0);
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| lex_cmp(&t[(i, i)], &t[(j, j)]));
    let eigenvalues = order.iter().map(|&i| t[(i, i)]).collect();
    let eigenvectors = DMatrix::from_fn(n, n, |r, c| vectors[(r, order[c])]);
    Ok(Eigendecomposition {
        eigenvalues,
        eigenvectors: Matrix::from_dmatrix(eigenvectors, FieldTag::Complex),
    })
}

fn min_pairwise_gap(values: &[C64]) -> f64 {
    let mut gap = f64::INFINITY;
    for (i, a) in values.iter().enumerate() {
        for b in &values[i + 1..] {
            gap = gap.min((a - b).norm());
        }
    }
    gap
}

pub fn simplicity_report(a: &Matrix, gap_tol: f64) -> Result<SpectrumReport> {
    if !(gap_tol > 0.0) {
        return Err(Error::Precondition(format!(
            "gap_tol must be positive, got {gap_tol}"
        )));
    }
    let eig = eigendecompose(a)?;
    Ok(report_from(a, eig, gap_tol))
}

/// Builds the report for `a` from an already computed eigendecomposition.
pub(crate) fn report_from(a: &Matrix, eig: Eigendecomposition, gap_tol: f64) -> SpectrumReport {
    let threshold = gap_tol * a.frobenius_norm().max(1.0);
    let min_gap = min_pairwise_gap(&eig.eigenvalues);
    let is_simple = min_gap > threshold;
    let is_invertible = eig.eigenvalues.iter().all(|z| z.norm() > threshold)
        && a.singular_value_ratio() > TOL_SINGULAR;
    let (eig_condition, safe_radius) = if is_simple {
        let kappa = eig.eigenvectors.condition_number();
        (Some(kappa), min_gap / (2.0 * kappa))
    } else {
        (None, 0.0)
    };
    SpectrumReport {
        eigenvalues: eig.eigenvalues,
        min_gap,
        is_simple,
        is_invertible,
        eig_condition,
        safe_radius,
        gap_tol_used: gap_tol,
    }
}

/// Product of `(lambda_i - lambda_j)^2` over `i < j`, from computed eigenvalues.
pub fn char_poly_discriminant(a: &Matrix) -> Result<C64> {
    let n = a.require_square("char_poly_discriminant")?;
    if n > DISCRIMINANT_MAX_N {
        return Err(Error::DimensionGuard {
            op: "char_poly_discriminant",
            n,
            max: DISCRIMINANT_MAX_N,
        });
    }
    let ev = eigendecompose(a)?.eigenvalues;
    let mut disc = C64::new(1.0, 0.0);
    for i in 0..n {
        for j in (i + 1)..n {
            let d = ev[i] - ev[j];
            disc *= d * d;
        }
    }
    Ok(disc)
}

/// `(tr a)^2 - 4 det a` for 2x2 matrices, computed from the entries.
pub fn discriminant_2x2(a: &Matrix) -> Result<C64> {
    if a.nrows() != 2 || a.ncols() != 2 {
        return Err(Error::dims(
            "discriminant_2x2",
            "2x2",
            format!("{}x{}", a.nrows(), a.ncols()),
        ));
    }
    let tr = a[(0, 0)] + a[(1, 1)];
    let det = a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)];
    Ok(tr * tr - det * 4.0)
}

/// Samples `trials` perturbations of spectral norm `0.9 * safe_radius` and
/// checks that each perturbed matrix is still simple at the report's tolerance.
///
/// A `false` result contradicts the Bauer–Fike bound and indicates a defect.
pub fn certify_openness(
    a: &Matrix,
    report: &SpectrumReport,
    trials: usize,
    rng: &mut RandomSource,
) -> Result<bool> {
    if !report.is_simple {
        return Err(Error::Precondition(
            "certify_openness requires a report with a simple spectrum".into(),
        ));
    }
    let n = a.require_square("certify_openness")?;
    // Every 1x1 matrix is simple.
    if n == 1 || trials == 0 {
        return Ok(true);
    }
    let radius = 0.9 * report.safe_radius;
    for _ in 0..trials {
        let g = sample_gaussian(n, FieldTag::Complex, rng);
        let e = g.scale(radius / g.spectral_norm());
        let perturbed = a.add(&e)?;
        if !simplicity_report(&perturbed, report.gap_tol_used)?.is_simple {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approx(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    fn check_residuals(a: &Matrix) {
        let eig = eigendecompose(a).unwrap();
        let norm = a.spectral_norm();
        let v = eig.eigenvectors.as_dmatrix();
        for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
            let col = v.column(k).into_owned();
            let unit = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            assert!((unit - 1.0).abs() < 1e-12, "unit {unit} n {}", a.nrows());
            let r = a.as_dmatrix() * &col - &col * lambda;
            let res = r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            assert!(
                res <= TOL_EIG * norm.max(f64::MIN_POSITIVE),
                "residual {res} for {lambda}"
            );
        }
    }

    #[test]
    fn diagonal_eigenvalues() {
        let eig = eigendecompose(&Matrix::diag(&[3.0, 1.0, 2.0])).unwrap();
        let expect = [1.0, 2.0, 3.0];
        for (z, e) in eig.eigenvalues.iter().zip(expect) {
            assert!(approx(*z, C64::new(e, 0.0), 1e-14));
        }
    }

    #[test]
    fn rotation_eigenvalues() {
        let eig = eigendecompose(&Matrix::from_rows(&[[0.0, 1.0], [-1.0, 0.0]])).unwrap();
        assert!(approx(eig.eigenvalues[0], C64::new(0.0, -1.0), 1e-14));
        assert!(approx(eig.eigenvalues[1], C64::new(0.0, 1.0), 1e-14));
    }

    #[test]
    fn companion_of_z3_minus_1_gives_roots_of_unity() {
        // companion matrix of z^3 - 1
        let c = Matrix::from_rows(&[[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]);
        let ev = eigendecompose(&c).unwrap().eigenvalues;
        let s = 3f64.sqrt() / 2.0;
        let expect = [C64::new(-0.5, -s), C64::new(-0.5, s), C64::new(1.0, 0.0)];
        for (z, e) in ev.iter().zip(expect) {
            assert!(approx(*z, e, 1e-10), "{z} vs {e}");
        }
        check_residuals(&c);
    }

    #[test]
    fn residual_contract_on_random_and_defective() {
        let mut rng = RandomSource::new(1);
        for n in 1..=12 {
            check_residuals(&sample_gaussian(n, FieldTag::Complex, &mut rng));
            check_residuals(&sample_gaussian(n, FieldTag::Real, &mut rng));
        }
        check_residuals(&Matrix::from_rows(&[[0.0, 1.0], [0.0, 0.0]]));
        check_residuals(&Matrix::identity(4));
        check_residuals(&Matrix::zeros(3, 3, FieldTag::Real));
    }

    #[test]
    fn report_examples() {
        let r = simplicity_report(&Matrix::identity(2), DEFAULT_GAP_TOL).unwrap();
        assert!(!r.is_simple && r.is_invertible);
        assert_eq!(r.min_gap, 0.0);
        assert_eq!(r.safe_radius, 0.0);
        assert_eq!(r.eig_condition, None);

        let r = simplicity_report(
            &Matrix::from_rows(&[[0.0, 1.0], [0.0, 0.0]]),
            DEFAULT_GAP_TOL,
        )
        .unwrap();
        assert!(!r.is_simple && !r.is_invertible);

        let r = simplicity_report(&Matrix::diag(&[1.0, 2.0]), DEFAULT_GAP_TOL).unwrap();
        assert!(r.is_simple && r.is_invertible);
        assert!((r.min_gap - 1.0).abs() < 1e-15);
        assert!((r.eig_condition.unwrap() - 1.0).abs() < 1e-12);
        assert!((r.safe_radius - 0.5).abs() < 1e-12);
    }

    #[test]
    fn one_by_one_is_simple_with_infinite_gap() {
        let r = simplicity_report(&Matrix::diag(&[5.0]), DEFAULT_GAP_TOL).unwrap();
        assert!(r.is_simple && r.is_invertible);
        assert!(r.min_gap.is_infinite());
        let json = serde_json::to_value(&r).unwrap();
        assert!(json["min_gap"].is_null());
    }

    #[test]
    fn report_rejects_nonpositive_tolerance() {
        assert!(simplicity_report(&Matrix::identity(2), 0.0).is_err());
    }

    #[test]
    fn report_json_keys() {
        let r = simplicity_report(&Matrix::diag(&[1.0, 2.0]), DEFAULT_GAP_TOL).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        for key in [
            "eigenvalues",
            "min_gap",
            "is_simple",
            "is_invertible",
            "eig_condition",
            "safe_radius",
        ] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(v["eigenvalues"][1], serde_json::json!([2.0, 0.0]));
    }

    #[test]
    fn discriminant_examples() {
        let d = char_poly_discriminant(&Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]])).unwrap();
        assert!(approx(d, C64::new(33.0, 0.0), 1e-12));
        let closed = discriminant_2x2(&Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]])).unwrap();
        assert_eq!(closed, C64::new(33.0, 0.0));
        assert!(char_poly_discriminant(&Matrix::identity(2)).unwrap().norm() < 1e-28);
        let d = char_poly_discriminant(&Matrix::diag(&[0.0, 1.0, 2.0])).unwrap();
        assert!(approx(d, C64::new(4.0, 0.0), 1e-12));
        assert!(matches!(
            char_poly_discriminant(&Matrix::identity(9)),
            Err(Error::DimensionGuard { .. })
        ));
    }

    #[test]
    fn openness_examples() {
        let a = Matrix::diag(&[1.0, 2.0]);
        let r = simplicity_report(&a, DEFAULT_GAP_TOL).unwrap();
        assert!(certify_openness(&a, &r, 100, &mut RandomSource::new(0)).unwrap());
        assert!(certify_openness(&a, &r, 0, &mut RandomSource::new(0)).unwrap());
        let i = Matrix::identity(2);
        let ri = simplicity_report(&i, DEFAULT_GAP_TOL).unwrap();
        assert!(certify_openness(&i, &ri, 1, &mut RandomSource::new(0)).is_err());
    }

    #[test]
    fn reports_are_bitwise_reproducible() {
        let a = sample_gaussian(6, FieldTag::Complex, &mut RandomSource::new(42));
        let r1 = simplicity_report(&a, DEFAULT_GAP_TOL).unwrap();
        let r2 = simplicity_report(&a, DEFAULT_GAP_TOL).unwrap();
        assert_eq!(
            serde_json::to_string(&r1).unwrap(),
            serde_json::to_string(&r2).unwrap()
        );
    }
}
