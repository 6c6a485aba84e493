//! Dense square-matrix substrate.
//!
//! Every matrix stores complex scalars; the [`FieldTag`] records whether the
//! matrix is known to be real, in which case every imaginary part is exactly
//! zero. Storage is column-major (the layout of the underlying
//! `nalgebra::DMatrix`); serialized forms are row-major.

mod io;
mod random;

use std::fmt;
use std::ops::Index;

use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use io::{
    format_json, format_matrix_market, parse_json, parse_matrix_market, read_matrix, write_matrix,
    MatrixFormat,
};
pub use random::{sample_gaussian, RandomSource};

pub type C64 = Complex<f64>;

/// Relative singular-value threshold below which a matrix is treated as singular.
pub const TOL_SINGULAR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldTag {
    Real,
    Complex,
}

impl FieldTag {
    /// Field of a value computed from operands of fields `self` and `other`.
    pub fn join(self, other: FieldTag) -> FieldTag {
        if self == FieldTag::Real && other == FieldTag::Real {
            FieldTag::Real
        } else {
            FieldTag::Complex
        }
    }
}

impl fmt::Display for FieldTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FieldTag::Real => "real",
            FieldTag::Complex => "complex",
        })
    }
}

impl std::str::FromStr for FieldTag {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "real" => Ok(FieldTag::Real),
            "complex" => Ok(FieldTag::Complex),
            other => Err(format!(
                "unknown field '{other}' (expected real or complex)"
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    data: DMatrix<C64>,
    field: FieldTag,
}

/// Result of [`Matrix::inverse_with_estimate`].
#[derive(Clone, Debug)]
pub struct InverseResult {
    pub inverse: Matrix,
    pub sigma_min: f64,
    pub sigma_max: f64,
}

impl Matrix {
    /// Wraps a complex matrix. A `Real` tag forces imaginary parts to zero.
    pub fn from_dmatrix(data: DMatrix<C64>, field: FieldTag) -> Matrix {
        let mut m = Matrix { data, field };
        if field == FieldTag::Real {
            m.data.iter_mut().for_each(|z| z.im = 0.0);
        }
        m
    }

    /// Builds a matrix from row-major entries, checking the real invariant.
    pub fn from_row_major(
        rows: usize,
        cols: usize,
        entries: &[C64],
        field: FieldTag,
    ) -> Result<Matrix> {
        if rows == 0 || cols == 0 {
            return Err(Error::dims(
                "from_row_major",
                "positive dimensions",
                format!("{rows}x{cols}"),
            ));
        }
        if entries.len() != rows * cols {
            return Err(Error::dims("from_row_major", rows * cols, entries.len()));
        }
        if field == FieldTag::Real && entries.iter().any(|z| z.im != 0.0) {
            return Err(Error::Precondition(
                "real-tagged matrix has a nonzero imaginary part".into(),
            ));
        }
        Ok(Matrix {
            data: DMatrix::from_row_slice(rows, cols, entries),
            field,
        })
    }

    /// Real matrix from row-major values.
    pub fn real(rows: usize, cols: usize, values: &[f64]) -> Result<Matrix> {
        let entries: Vec<C64> = values.iter().map(|&x| C64::new(x, 0.0)).collect();
        Matrix::from_row_major(rows, cols, &entries, FieldTag::Real)
    }

    /// Real matrix from fixed-width rows; convenient for literals.
    pub fn from_rows<const N: usize>(rows: &[[f64; N]]) -> Matrix {
        assert!(
            !rows.is_empty() && N > 0,
            "matrix literal must be non-empty"
        );
        let data = DMatrix::from_fn(rows.len(), N, |i, j| C64::new(rows[i][j], 0.0));
        Matrix {
            data,
            field: FieldTag::Real,
        }
    }

    pub fn identity(n: usize) -> Matrix {
        Matrix {
            data: DMatrix::identity(n, n),
            field: FieldTag::Real,
        }
    }

    pub fn zeros(rows: usize, cols: usize, field: FieldTag) -> Matrix {
        Matrix {
            data: DMatrix::zeros(rows, cols),
            field,
        }
    }

    pub fn diag(values: &[f64]) -> Matrix {
        let n = values.len();
        Matrix {
            data: DMatrix::from_fn(n, n, |i, j| {
                if i == j {
                    C64::new(values[i], 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            }),
            field: FieldTag::Real,
        }
    }

    pub fn diag_complex(values: &[C64]) -> Matrix {
        let n = values.len();
        let data = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                values[i]
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let field = if values.iter().all(|z| z.im == 0.0) {
            FieldTag::Real
        } else {
            FieldTag::Complex
        };
        Matrix { data, field }
    }

    pub fn nrows(&self) -> usize {
        self.data.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.data.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.nrows() == self.ncols()
    }

    pub fn field(&self) -> FieldTag {
        self.field
    }

    pub fn as_dmatrix(&self) -> &DMatrix<C64> {
        &self.data
    }

    pub fn into_dmatrix(self) -> DMatrix<C64> {
        self.data
    }

    /// Same entries, tagged complex.
    pub fn to_complex(&self) -> Matrix {
        Matrix {
            data: self.data.clone(),
            field: FieldTag::Complex,
        }
    }

    pub fn row_major_entries(&self) -> Vec<C64> {
        let (r, c) = self.data.shape();
        (0..r)
            .flat_map(|i| (0..c).map(move |j| (i, j)))
            .map(|ij| self.data[ij])
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub(crate) fn require_square(&self, op: &'static str) -> Result<usize> {
        if self.is_square() {
            Ok(self.nrows())
        } else {
            Err(Error::dims(
                op,
                "square matrix",
                format!("{}x{}", self.nrows(), self.ncols()),
            ))
        }
    }

    fn require_same_shape(&self, other: &Matrix, op: &'static str) -> Result<()> {
        if self.data.shape() == other.data.shape() {
            Ok(())
        } else {
            Err(Error::dims(
                op,
                format!("{}x{}", self.nrows(), self.ncols()),
                format!("{}x{}", other.nrows(), other.ncols()),
            ))
        }
    }

    pub fn multiply(&self, other: &Matrix) -> Result<Matrix> {
        if self.ncols() != other.nrows() {
            return Err(Error::dims(
                "multiply",
                format!("{} rows on the right", self.ncols()),
                other.nrows(),
            ));
        }
        Ok(Matrix::from_dmatrix(
            &self.data * &other.data,
            self.field.join(other.field),
        ))
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        self.require_same_shape(other, "add")?;
        Ok(Matrix::from_dmatrix(
            &self.data + &other.data,
            self.field.join(other.field),
        ))
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        self.require_same_shape(other, "sub")?;
        Ok(Matrix::from_dmatrix(
            &self.data - &other.data,
            self.field.join(other.field),
        ))
    }

    pub fn scale(&self, factor: f64) -> Matrix {
        Matrix::from_dmatrix(&self.data * C64::new(factor, 0.0), self.field)
    }

    pub fn scale_complex(&self, factor: C64) -> Matrix {
        let field = if factor.im == 0.0 {
            self.field
        } else {
            FieldTag::Complex
        };
        Matrix::from_dmatrix(&self.data * factor, field)
    }

    pub fn transpose(&self) -> Matrix {
        Matrix {
            data: self.data.transpose(),
            field: self.field,
        }
    }

    pub fn conjugate_transpose(&self) -> Matrix {
        Matrix {
            data: self.data.adjoint(),
            field: self.field,
        }
    }

    pub fn trace(&self) -> C64 {
        self.data.diagonal().iter().sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest singular value.
    pub fn spectral_norm(&self) -> f64 {
        self.singular_values().first().copied().unwrap_or(0.0)
    }

    /// Singular values in descending order.
    pub fn singular_values(&self) -> Vec<f64> {
        let mut sv: Vec<f64> = self
            .data
            .clone()
            .svd(false, false)
            .singular_values
            .iter()
            .copied()
            .collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        sv
    }

    /// sigma_min / sigma_max, or 0 for the zero matrix.
    pub fn singular_value_ratio(&self) -> f64 {
        let sv = self.singular_values();
        match (sv.first(), sv.last()) {
            (Some(&max), Some(&min)) if max > 0.0 => min / max,
            _ => 0.0,
        }
    }

    /// 2-norm condition number; infinite when singular.
    pub fn condition_number(&self) -> f64 {
        let ratio = self.singular_value_ratio();
        if ratio > 0.0 {
            1.0 / ratio
        } else {
            f64::INFINITY
        }
    }

    /// Fails with [`Error::SingularMatrix`] unless sigma_min > TOL_SINGULAR * sigma_max.
    pub fn check_invertible(&self) -> Result<()> {
        self.require_square("check_invertible")?;
        let ratio = self.singular_value_ratio();
        if ratio > TOL_SINGULAR {
            Ok(())
        } else {
            Err(Error::SingularMatrix { ratio, hint: "" })
        }
    }

    pub fn inverse(&self) -> Result<Matrix> {
        self.inverse_with_estimate().map(|r| r.inverse)
    }

    /// Inverse by partially pivoted LU, gated on the singular-value ratio.
    pub fn inverse_with_estimate(&self) -> Result<InverseResult> {
        self.require_square("inverse")?;
        if !self.is_finite() {
            return Err(Error::NonFinite);
        }
        let sv = self.singular_values();
        let sigma_max = sv[0];
        let sigma_min = sv[sv.len() - 1];
        let ratio = if sigma_max > 0.0 {
            sigma_min / sigma_max
        } else {
            0.0
        };
        if ratio <= TOL_SINGULAR {
            return Err(Error::SingularMatrix { ratio, hint: "" });
        }
        let inv = self
            .data
            .clone()
            .lu()
            .try_inverse()
            .ok_or(Error::SingularMatrix { ratio, hint: "" })?;
        Ok(InverseResult {
            inverse: Matrix::from_dmatrix(inv, self.field),
            sigma_min,
            sigma_max,
        })
    }

    /// Solves `self * X = rhs` after the invertibility gate.
    pub fn solve(&self, rhs: &Matrix) -> Result<Matrix> {
        self.check_invertible()?;
        if rhs.nrows() != self.nrows() {
            return Err(Error::dims("solve", self.nrows(), rhs.nrows()));
        }
        let x = self
            .data
            .clone()
            .lu()
            .solve(&rhs.data)
            .ok_or(Error::SingularMatrix {
                ratio: 0.0,
                hint: "",
            })?;
        Ok(Matrix::from_dmatrix(x, self.field.join(rhs.field)))
    }

    pub fn determinant(&self) -> Result<C64> {
        self.require_square("determinant")?;
        Ok(self.data.clone().lu().determinant())
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = C64;

    fn index(&self, ij: (usize, usize)) -> &C64 {
        &self.data[ij]
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixJson {
    field: FieldTag,
    rows: usize,
    cols: usize,
    data: Vec<[f64; 2]>,
}

impl Serialize for Matrix {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson {
            field: self.field,
            rows: self.nrows(),
            cols: self.ncols(),
            data: self
                .row_major_entries()
                .iter()
                .map(|z| [z.re, z.im])
                .collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Matrix {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let raw = MatrixJson::deserialize(deserializer)?;
        let entries: Vec<C64> = raw.data.iter().map(|&[re, im]| C64::new(re, im)).collect();
        Matrix::from_row_major(raw.rows, raw.cols, &entries, raw.field)
            .map_err(serde::de::Error::custom)
    }
}
