use kronspec::kron::{
    binomial_inverse, evaluate_binomial, kron_product, kron_rank, rearrange, reconstruct,
    InverseOptions, KroneckerBinomial,
};
use kronspec::matcore::{format_matrix_market, parse_matrix_market, sample_gaussian};
use kronspec::perturb::{perturb_pair_inverse, perturb_tuple, PerturbSpec, SelfMap};
use kronspec::spectra::{eigendecompose, simplicity_report, TOL_EIG};
use kronspec::{FieldTag, Matrix, RandomSource, C64};
use proptest::prelude::*;

fn field() -> impl Strategy<Value = FieldTag> {
    prop_oneof![Just(FieldTag::Real), Just(FieldTag::Complex)]
}

fn gaussian(n: usize, field: FieldTag, seed: u64) -> Matrix {
    sample_gaussian(n, field, &mut RandomSource::new(seed))
}

fn dist(a: &Matrix, b: &Matrix) -> f64 {
    a.sub(b).unwrap().frobenius_norm()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn norm_axioms(n in 1usize..7, f in field(), s1 in any::<u64>(), s2 in any::<u64>(), alpha in -5.0f64..5.0) {
        let a = gaussian(n, f, s1);
        let b = gaussian(n, f, s2);
        let sum = a.add(&b).unwrap();
        prop_assert!(sum.frobenius_norm() <= a.frobenius_norm() + b.frobenius_norm() + 1e-12);
        prop_assert!(sum.spectral_norm() <= a.spectral_norm() + b.spectral_norm() + 1e-12);
        prop_assert!((a.scale(alpha).frobenius_norm() - alpha.abs() * a.frobenius_norm()).abs() <= 1e-12 * (1.0 + a.frobenius_norm()));
        prop_assert!(a.spectral_norm() <= a.frobenius_norm() + 1e-12);
        prop_assert!(a.frobenius_norm() <= (n as f64).sqrt() * a.spectral_norm() + 1e-12);
        let ab = a.multiply(&b).unwrap();
        prop_assert!(ab.spectral_norm() <= a.spectral_norm() * b.spectral_norm() * (1.0 + 1e-12));
    }

    #[test]
    fn inverse_identity(n in 1usize..8, f in field(), seed in any::<u64>()) {
        let a = gaussian(n, f, seed);
        prop_assume!(a.condition_number() < 1e8);
        let inv = a.inverse().unwrap();
        let tol = 1e-12 * a.condition_number() * n as f64;
        prop_assert!(dist(&a.multiply(&inv).unwrap(), &Matrix::identity(n)) <= tol);
        prop_assert!(dist(&inv.multiply(&a).unwrap(), &Matrix::identity(n)) <= tol);
        prop_assert_eq!(inv.field(), f);
    }

    #[test]
    fn matrix_market_round_trip(n in 1usize..6, f in field(), seed in any::<u64>()) {
        let a = gaussian(n, f, seed);
        prop_assert_eq!(parse_matrix_market(&format_matrix_market(&a)).unwrap(), a);
    }

    #[test]
    fn eigen_residuals(n in 1usize..10, f in field(), seed in any::<u64>()) {
        let a = gaussian(n, f, seed);
        let eig = eigendecompose(&a).unwrap();
        let v = eig.eigenvectors.as_dmatrix();
        for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
            let col = v.column(k).into_owned();
            let r = a.as_dmatrix() * &col - &col * lambda;
            prop_assert!(r.norm() <= TOL_EIG * a.spectral_norm());
        }
        let trace: C64 = eig.eigenvalues.iter().sum();
        prop_assert!((trace - a.trace()).norm() <= 1e-10 * (1.0 + a.frobenius_norm()));
    }

    #[test]
    fn rearrange_is_linear(p in 1usize..4, q in 1usize..4, s1 in any::<u64>(), s2 in any::<u64>(), alpha in -3.0f64..3.0) {
        let x = gaussian(p * q, FieldTag::Complex, s1);
        let y = gaussian(p * q, FieldTag::Complex, s2);
        let lhs = rearrange(&x.scale(alpha).add(&y).unwrap(), p, q).unwrap();
        let rhs = rearrange(&x, p, q).unwrap().scale(alpha).add(&rearrange(&y, p, q).unwrap()).unwrap();
        prop_assert!(dist(&lhs, &rhs) <= 1e-12 * (1.0 + lhs.frobenius_norm()));
    }

    #[test]
    fn kron_mixed_product(p in 1usize..4, q in 1usize..4, seed in any::<u64>()) {
        let mut rng = RandomSource::new(seed);
        let a = sample_gaussian(p, FieldTag::Complex, &mut rng);
        let c = sample_gaussian(p, FieldTag::Complex, &mut rng);
        let b = sample_gaussian(q, FieldTag::Complex, &mut rng);
        let d = sample_gaussian(q, FieldTag::Complex, &mut rng);
        let lhs = kron_product(&a, &b).multiply(&kron_product(&c, &d)).unwrap();
        let rhs = kron_product(&a.multiply(&c).unwrap(), &b.multiply(&d).unwrap());
        prop_assert!(dist(&lhs, &rhs) <= 1e-12 * (1.0 + lhs.frobenius_norm()));
        prop_assert_eq!(kron_rank(&kron_product(&a, &b), p, q, 1e-9).unwrap().numeric_rank, 1);
    }

    #[test]
    fn kron_rank_bounded_by_terms(p in 1usize..4, q in 1usize..4, k in 1usize..4, seed in any::<u64>()) {
        let mut rng = RandomSource::new(seed);
        let mut x = Matrix::zeros(p * q, p * q, FieldTag::Complex);
        for _ in 0..k {
            let l = sample_gaussian(p, FieldTag::Complex, &mut rng);
            let r = sample_gaussian(q, FieldTag::Complex, &mut rng);
            x = x.add(&kron_product(&l, &r)).unwrap();
        }
        let report = kron_rank(&x, p, q, 1e-9).unwrap();
        prop_assert!(report.numeric_rank <= k.min(p * p).min(q * q));
        prop_assert_eq!(report.singular_values.len(), (p * p).min(q * q));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn pair_search_certifies(n in 1usize..6, seed in any::<u64>(), eps_exp in 1i32..7, kind in 0usize..4) {
        let eps = 10f64.powi(-eps_exp);
        let (a, b) = match kind {
            0 => (Matrix::identity(n), Matrix::identity(n)),
            1 => (Matrix::zeros(n, n, FieldTag::Real), Matrix::zeros(n, n, FieldTag::Real)),
            _ => (gaussian(n, FieldTag::Complex, seed), gaussian(n, FieldTag::Real, seed ^ 1)),
        };
        let spec = PerturbSpec { eps, seed, ..PerturbSpec::default() };
        let out = perturb_pair_inverse(&a, &b, &spec).unwrap();
        prop_assert!(dist(&out.perturbed[0], &a) < eps);
        prop_assert!(dist(&out.perturbed[1], &b) < eps);
        let product = out.perturbed[0].multiply(&out.perturbed[1].inverse().unwrap()).unwrap();
        prop_assert!(simplicity_report(&product, spec.gap_tol).unwrap().is_simple);
        prop_assert!(out.attempts_used >= 1);
    }

    #[test]
    fn search_is_deterministic(n in 2usize..5, seed in any::<u64>()) {
        let mats = vec![Matrix::identity(n); 3];
        let maps = [SelfMap::Transpose, SelfMap::Inverse, SelfMap::Identity];
        let spec = PerturbSpec { seed, ..PerturbSpec::default() };
        prop_assert_eq!(perturb_tuple(&mats, &maps, &spec).unwrap(), perturb_tuple(&mats, &maps, &spec).unwrap());
    }

    #[test]
    fn binomial_inverse_terms_and_residual(p in 1usize..5, q in 1usize..5, seed in any::<u64>()) {
        let mut rng = RandomSource::new(seed);
        let b = KroneckerBinomial::new(
            sample_gaussian(p, FieldTag::Complex, &mut rng),
            sample_gaussian(p, FieldTag::Complex, &mut rng),
            sample_gaussian(q, FieldTag::Complex, &mut rng),
            sample_gaussian(q, FieldTag::Complex, &mut rng),
        ).unwrap();
        let x = evaluate_binomial(&b);
        match binomial_inverse(&b, &InverseOptions::default()) {
            Ok(dec) => {
                prop_assert!(dec.len() <= p.min(q));
                let residual = dist(&x.multiply(&reconstruct(&dec).unwrap()).unwrap(), &Matrix::identity(p * q));
                prop_assert!(residual <= 1e-8 * x.condition_number());
            }
            // Gaussian pencils are simple with probability one; anything else is a bug.
            Err(e) => prop_assert!(false, "unexpected error {e}"),
        }
    }
}
