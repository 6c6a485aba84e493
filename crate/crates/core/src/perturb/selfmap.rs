use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::matcore::Matrix;

/// A homeomorphism of the general linear group onto itself.
///
/// Matrices attached to `LeftMul`, `RightMul` and `Similarity` must be
/// invertible; the checked constructors enforce it and [`SelfMap::apply`]
/// re-checks before use.
#[derive(Clone, Debug, PartialEq)]
pub enum SelfMap {
    Identity,
    Inverse,
    Transpose,
    ConjugateTranspose,
    /// `X -> M X`
    LeftMul(Matrix),
    /// `X -> X M`
    RightMul(Matrix),
    /// `X -> S X S^-1`
    Similarity(Matrix),
}

impl SelfMap {
    pub fn left_mul(m: Matrix) -> Result<SelfMap> {
        m.check_invertible()?;
        Ok(SelfMap::LeftMul(m))
    }

    pub fn right_mul(m: Matrix) -> Result<SelfMap> {
        m.check_invertible()?;
        Ok(SelfMap::RightMul(m))
    }

    pub fn similarity(s: Matrix) -> Result<SelfMap> {
        s.check_invertible()?;
        Ok(SelfMap::Similarity(s))
    }

    pub fn name(&self) -> &'static str {
        match self {
            SelfMap::Identity => "identity",
            SelfMap::Inverse => "inverse",
            SelfMap::Transpose => "transpose",
            SelfMap::ConjugateTranspose => "conjugate-transpose",
            SelfMap::LeftMul(_) => "left-mul",
            SelfMap::RightMul(_) => "right-mul",
            SelfMap::Similarity(_) => "similarity",
        }
    }

    fn attached(&self) -> Option<&Matrix> {
        match self {
            SelfMap::LeftMul(m) | SelfMap::RightMul(m) | SelfMap::Similarity(m) => Some(m),
            _ => None,
        }
    }

    /// Checks that an attached matrix is an invertible n x n matrix.
    pub fn validate(&self, n: usize) -> Result<()> {
        match self.attached() {
            Some(m) if m.nrows() != n || m.ncols() != n => Err(Error::dims(
                "self-map",
                format!("{n}x{n}"),
                format!("{}x{}", m.nrows(), m.ncols()),
            )),
            Some(m) => m.check_invertible(),
            None => Ok(()),
        }
    }

    pub fn apply(&self, m: &Matrix) -> Result<Matrix> {
        m.require_square("apply_selfmap")?;
        m.check_invertible()?;
        match self {
            SelfMap::Identity => Ok(m.clone()),
            SelfMap::Inverse => m.inverse(),
            SelfMap::Transpose => Ok(m.transpose()),
            SelfMap::ConjugateTranspose => Ok(m.conjugate_transpose()),
            SelfMap::LeftMul(left) => {
                left.check_invertible()?;
                left.multiply(m)
            }
            SelfMap::RightMul(right) => {
                right.check_invertible()?;
                m.multiply(right)
            }
            SelfMap::Similarity(s) => s.multiply(m)?.multiply(&s.inverse()?),
        }
    }
}

pub fn apply_selfmap(f: &SelfMap, m: &Matrix) -> Result<Matrix> {
    f.apply(m)
}

impl fmt::Display for SelfMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Parses the matrix-free variants.
impl FromStr for SelfMap {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "identity" | "id" => Ok(SelfMap::Identity),
            "inverse" | "inv" => Ok(SelfMap::Inverse),
            "transpose" | "t" => Ok(SelfMap::Transpose),
            "conjugate-transpose" | "ctranspose" | "adjoint" => Ok(SelfMap::ConjugateTranspose),
            other => Err(format!(
                "unknown self-map '{other}' (expected identity, inverse, transpose, conjugate-transpose)"
            )),
        }
    }
}
