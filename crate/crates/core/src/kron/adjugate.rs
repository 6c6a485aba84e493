use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::matcore::{Matrix, C64};

/// Node-radius nudges tried before declaring the pencil degenerate.
pub const MAX_NODE_RETRIES: usize = 32;

const NUDGE: f64 = 1.0 + 1.0 / (1u64 << 20) as f64;

fn adjugate_at(node: &Matrix) -> Option<DMatrix<C64>> {
    let inv = node.inverse().ok()?;
    let det = node.determinant().ok()?;
    Some(inv.into_dmatrix() * det)
}

/// Coefficients `[M_0, ..., M_{q-1}]` of `adj(lambda c + d) = sum_j lambda^j M_j`.
///
/// The adjugate is sampled at `q` nodes `rho * w^s` on a circle (`w` a
/// primitive q-th root of unity) and the coefficients recovered with the
/// inverse discrete Fourier transform, which is the closed-form solution of
/// that Vandermonde system.
pub fn adjugate_poly(c: &Matrix, d: &Matrix) -> Result<Vec<Matrix>> {
    let q = c.require_square("adjugate_poly")?;
    if d.nrows() != q || d.ncols() != q {
        return Err(Error::dims(
            "adjugate_poly",
            format!("{q}x{q}"),
            format!("{}x{}", d.nrows(), d.ncols()),
        ));
    }
    let field = c.field().join(d.field());
    if q == 1 {
        return Ok(vec![Matrix::identity(1)]);
    }
    let (nc, nd) = (c.frobenius_norm(), d.frobenius_norm());
    let mut rho = if nc > 0.0 {
        (nd / nc).max(1.0)
    } else {
        nd.max(1.0)
    };
    let roots: Vec<C64> = (0..q)
        .map(|s| C64::from_polar(1.0, 2.0 * PI * s as f64 / q as f64))
        .collect();

    'retry: for _ in 0..=MAX_NODE_RETRIES {
        let mut samples = Vec::with_capacity(q);
        for w in &roots {
            let node = c.scale_complex(*w * rho).add(d)?;
            match adjugate_at(&node) {
                Some(adj) => samples.push(adj),
                None => {
                    rho *= NUDGE;
                    continue 'retry;
                }
            }
        }
        let coeffs = (0..q)
            .map(|j| {
                let mut acc = DMatrix::<C64>::zeros(q, q);
                for (s, adj) in samples.iter().enumerate() {
                    acc += adj * roots[(s * j) % q].conj();
                }
                let scale = 1.0 / (q as f64 * rho.powi(j as i32));
                Matrix::from_dmatrix(acc * C64::new(scale, 0.0), field)
            })
            .collect();
        return Ok(coeffs);
    }
    Err(Error::DegeneratePencil {
        retries: MAX_NODE_RETRIES,
    })
}
