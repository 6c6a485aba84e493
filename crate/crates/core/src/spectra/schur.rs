use nalgebra::DMatrix;

use crate::matcore::C64;

const EXCEPTIONAL_PERIOD: usize = 10;
const EXCEPTIONAL_FACTOR: f64 = 0.75;

fn abs1(z: C64) -> f64 {
    z.re.abs() + z.im.abs()
}

/// Rotation `G = [[c, s], [-conj(s), c]]` with real `c` and `G [x; y] = [r; 0]`.
fn givens(x: C64, y: C64) -> (f64, C64) {
    let (ax, ay) = (x.norm(), y.norm());
    if ay == 0.0 {
        return (1.0, C64::new(0.0, 0.0));
    }
    if ax == 0.0 {
        return (0.0, y.conj() / ay);
    }
    let r = ax.hypot(ay);
    (ax / r, (x / ax) * y.conj() / r)
}

fn rotate_rows(h: &mut DMatrix<C64>, k: usize, c: f64, s: C64, cols: std::ops::Range<usize>) {
    for j in cols {
        let (u, v) = (h[(k, j)], h[(k + 1, j)]);
        h[(k, j)] = u * c + s * v;
        h[(k + 1, j)] = v * c - s.conj() * u;
    }
}

fn rotate_cols(h: &mut DMatrix<C64>, k: usize, c: f64, s: C64, rows: std::ops::Range<usize>) {
    for i in rows {
        let (u, v) = (h[(i, k)], h[(i, k + 1)]);
        h[(i, k)] = u * c + s.conj() * v;
        h[(i, k + 1)] = v * c - s * u;
    }
}

/// Eigenvalue of the trailing 2x2 block closest to its last diagonal entry.
fn wilkinson_shift(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let mid = (a + d) * 0.5;
    let (l1, l2) = (mid + disc, mid - disc);
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// Complex Schur form `a = q t q^H` by single-shift QR on the Hessenberg form.
///
/// Returns `None` when the total sweep count exceeds `max_sweeps`.
pub(super) fn complex_schur(
    a: DMatrix<C64>,
    max_sweeps: usize,
) -> Option<(DMatrix<C64>, DMatrix<C64>)> {
    let n = a.nrows();
    if n <= 1 {
        return Some((DMatrix::identity(n, n), a));
    }
    let (mut q, mut h) = a.hessenberg().unpack();
    for j in 0..n {
        for i in (j + 2)..n {
            h[(i, j)] = C64::new(0.0, 0.0);
        }
    }
    let eps = f64::EPSILON;
    let tiny = f64::MIN_POSITIVE * (n as f64 / eps);
    let mut hi = n - 1;
    let mut sweeps = 0;
    let mut since_deflation = 0;

    while hi > 0 {
        let mut lo = hi;
        while lo > 0 {
            let sub = abs1(h[(lo, lo - 1)]);
            if sub <= tiny {
                break;
            }
            let mut local = abs1(h[(lo - 1, lo - 1)]) + abs1(h[(lo, lo)]);
            if local == 0.0 {
                local = (lo.saturating_sub(1)..=hi.min(lo + 1))
                    .flat_map(|i| (lo.saturating_sub(1)..=hi).map(move |j| (i, j)))
                    .map(|(i, j)| abs1(h[(i, j)]))
                    .sum();
            }
            if sub <= eps * local {
                break;
            }
            lo -= 1;
        }
        if lo > 0 {
            h[(lo, lo - 1)] = C64::new(0.0, 0.0);
        }
        if lo == hi {
            hi -= 1;
            since_deflation = 0;
            continue;
        }

        sweeps += 1;
        since_deflation += 1;
        if sweeps > max_sweeps {
            return None;
        }
        let shift = if since_deflation % EXCEPTIONAL_PERIOD == 0 {
            h[(hi, hi)] + EXCEPTIONAL_FACTOR * abs1(h[(hi, hi - 1)])
        } else {
            wilkinson_shift(
                h[(hi - 1, hi - 1)],
                h[(hi - 1, hi)],
                h[(hi, hi - 1)],
                h[(hi, hi)],
            )
        };

        for k in lo..hi {
            let (x, y) = if k == lo {
                (h[(lo, lo)] - shift, h[(lo + 1, lo)])
            } else {
                (h[(k, k - 1)], h[(k + 1, k - 1)])
            };
            let (c, s) = givens(x, y);
            let first = if k == lo { lo } else { k - 1 };
            rotate_rows(&mut h, k, c, s, first..n);
            rotate_cols(&mut h, k, c, s, 0..(k + 3).min(hi + 1));
            rotate_cols(&mut q, k, c, s, 0..n);
            if k > lo {
                h[(k + 1, k - 1)] = C64::new(0.0, 0.0);
            }
        }
    }
    for j in 0..n {
        for i in (j + 1)..n {
            h[(i, j)] = C64::new(0.0, 0.0);
        }
    }
    Some((q, h))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::{sample_gaussian, FieldTag, RandomSource};

    fn check(a: &DMatrix<C64>) {
        let n = a.nrows();
        let (q, t) = complex_schur(a.clone(), 30 * n.max(10) * n).expect("converges");
        let scale = a.norm().max(1.0);
        assert!((&q * &t * q.adjoint() - a).norm() <= 1e-12 * scale * n as f64);
        assert!((q.adjoint() * &q - DMatrix::<C64>::identity(n, n)).norm() <= 1e-12 * n as f64);
        for j in 0..n {
            for i in (j + 1)..n {
                assert_eq!(t[(i, j)], C64::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn random_matrices() {
        let mut rng = RandomSource::new(5);
        for n in 1..=12 {
            for field in [FieldTag::Real, FieldTag::Complex] {
                check(sample_gaussian(n, field, &mut rng).as_dmatrix());
            }
        }
    }

    #[test]
    fn near_identity_and_structured() {
        let mut rng = RandomSource::new(6);
        for n in 2..=8 {
            let e = sample_gaussian(n, FieldTag::Complex, &mut rng).into_dmatrix()
                * C64::new(1e-14, 0.0);
            check(&(DMatrix::identity(n, n) + e));
            check(&DMatrix::zeros(n, n));
            // cyclic shift: eigenvalues on the unit circle, stalls unshifted QR
            let mut p = DMatrix::<C64>::zeros(n, n);
            for i in 0..n {
                p[((i + 1) % n, i)] = C64::new(1.0, 0.0);
            }
            check(&p);
            let mut jordan = DMatrix::<C64>::identity(n, n) * C64::new(2.0, 0.0);
            for i in 0..n - 1 {
                jordan[(i, i + 1)] = C64::new(1.0, 0.0);
            }
            check(&jordan.transpose());
        }
    }
}
