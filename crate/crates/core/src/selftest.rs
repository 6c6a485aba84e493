//! Scaled-down property suites behind `kronspec selftest`.

use serde::Serialize;

use crate::error::Result;
use crate::kron::{
    binomial_inverse_with_diagnostics, evaluate_binomial, kron_rank, preprocess_binomial,
    InverseOptions, KroneckerBinomial,
};
use crate::matcore::{sample_gaussian, FieldTag, Matrix, RandomSource};
use crate::perturb::{perturb_tuple, PerturbOutcome, PerturbSpec, SelfMap};
use crate::spectra::{
    certify_openness, char_poly_discriminant, discriminant_2x2, simplicity_report,
};

#[derive(Clone, Debug)]
pub struct SelftestConfig {
    /// Cases per suite and size.
    pub trials: usize,
    pub nmax: usize,
    pub seed: u64,
    /// Appends a suite that always fails.
    pub inject_failure: bool,
}

impl Default for SelftestConfig {
    fn default() -> Self {
        SelftestConfig {
            trials: 10,
            nmax: 5,
            seed: 0,
            inject_failure: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteResult {
    pub name: String,
    pub cases: usize,
    pub failures: usize,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SelftestSummary {
    pub suites: Vec<SuiteResult>,
    pub passed: bool,
}

type Suite = fn(&SelftestConfig) -> Tally;

#[derive(Default)]
struct Tally {
    cases: usize,
    failures: usize,
}

impl Tally {
    fn record(&mut self, ok: Result<bool>) {
        self.cases += 1;
        if !matches!(ok, Ok(true)) {
            self.failures += 1;
        }
    }
}

fn rng(cfg: &SelftestConfig, suite: u64, keys: &[u64]) -> RandomSource {
    let mut all = vec![suite];
    all.extend_from_slice(keys);
    RandomSource::derived(cfg.seed, &all)
}

fn jordan(n: usize) -> Matrix {
    let mut entries = vec![0.0; n * n];
    for i in 0..n.saturating_sub(1) {
        entries[i * n + i + 1] = 1.0;
    }
    Matrix::real(n, n, &entries).expect("square")
}

fn sizes(cfg: &SelftestConfig) -> std::ops::RangeInclusive<usize> {
    2..=cfg.nmax.max(2)
}

fn density(cfg: &SelftestConfig) -> Tally {
    let mut t = Tally::default();
    for n in sizes(cfg) {
        for trial in 0..cfg.trials {
            let a = sample_gaussian(
                n,
                FieldTag::Complex,
                &mut rng(cfg, 1, &[n as u64, trial as u64]),
            );
            t.record(simplicity_report(&a, 1e-10).map(|r| r.is_simple && r.is_invertible));
        }
    }
    t
}

fn openness(cfg: &SelftestConfig) -> Tally {
    let mut t = Tally::default();
    for n in sizes(cfg) {
        for trial in 0..cfg.trials {
            let mut r = rng(cfg, 2, &[n as u64, trial as u64]);
            let a = sample_gaussian(n, FieldTag::Complex, &mut r);
            t.record(
                simplicity_report(&a, 1e-10).and_then(|rep| certify_openness(&a, &rep, 10, &mut r)),
            );
        }
    }
    t
}

/// Independent check of an outcome: budgets, invertibility and the product.
fn recertify(
    inputs: &[Matrix],
    maps: &[SelfMap],
    out: &PerturbOutcome,
    spec: &PerturbSpec,
) -> Result<bool> {
    let n = inputs[0].nrows();
    let mut product = Matrix::identity(n);
    for ((a, p), f) in inputs.iter().zip(&out.perturbed).zip(maps) {
        if p.sub(a)?.frobenius_norm() >= spec.eps {
            return Ok(false);
        }
        let rep = simplicity_report(p, spec.gap_tol)?;
        if !(rep.is_simple && rep.is_invertible) {
            return Ok(false);
        }
        product = product.multiply(&f.apply(p)?)?;
    }
    let scale = product.frobenius_norm().max(1.0);
    if product.sub(&out.product)?.frobenius_norm() > 1e-9 * scale {
        return Ok(false);
    }
    Ok(simplicity_report(&product, spec.gap_tol)?.is_simple)
}

fn perturb_pair_suite(cfg: &SelftestConfig) -> Tally {
    let mut t = Tally::default();
    let maps = [SelfMap::Identity, SelfMap::Inverse];
    for n in sizes(cfg) {
        for (e, eps) in [1e-1, 1e-3, 1e-6].into_iter().enumerate() {
            for trial in 0..cfg.trials {
                let mut r = rng(cfg, 3, &[n as u64, e as u64, trial as u64]);
                let (a, b) = match trial % 5 {
                    0 => (Matrix::identity(n), Matrix::identity(n)),
                    1 => (
                        Matrix::zeros(n, n, FieldTag::Real),
                        sample_gaussian(n, FieldTag::Complex, &mut r),
                    ),
                    2 => (
                        sample_gaussian(n, FieldTag::Complex, &mut r),
                        Matrix::zeros(n, n, FieldTag::Real),
                    ),
                    3 => (jordan(n), jordan(n)),
                    _ => (
                        sample_gaussian(n, FieldTag::Complex, &mut r),
                        sample_gaussian(n, FieldTag::Complex, &mut r),
                    ),
                };
                let spec = PerturbSpec {
                    eps,
                    seed: r.next_u64(),
                    ..PerturbSpec::default()
                };
                let inputs = [a, b];
                t.record(
                    perturb_tuple(&inputs, &maps, &spec)
                        .and_then(|o| recertify(&inputs, &maps, &o, &spec)),
                );
            }
        }
    }
    t
}

fn perturb_triple_suite(cfg: &SelftestConfig) -> Tally {
    let mut t = Tally::default();
    let maps = [SelfMap::Transpose, SelfMap::Inverse, SelfMap::Identity];
    for n in [3, cfg.nmax.clamp(3, 5)] {
        for trial in 0..cfg.trials {
            let mut r = rng(cfg, 4, &[n as u64, trial as u64]);
            let inputs: Vec<Matrix> = (0..3)
                .map(|_| sample_gaussian(n, FieldTag::Complex, &mut r))
                .collect();
            let spec = PerturbSpec {
                seed: r.next_u64(),
                ..PerturbSpec::default()
            };
            t.record(
                perturb_tuple(&inputs, &maps, &spec)
                    .and_then(|o| recertify(&inputs, &maps, &o, &spec)),
            );
        }
    }
    t
}

fn kron_inverse_suite(cfg: &SelftestConfig) -> Tally {
    let mut t = Tally::default();
    let opts = InverseOptions::default();
    for p in sizes(cfg) {
        for q in sizes(cfg) {
            for trial in 0..cfg.trials {
                let mut r = rng(cfg, 5, &[p as u64, q as u64, trial as u64]);
                let b = KroneckerBinomial::new(
                    sample_gaussian(p, FieldTag::Complex, &mut r),
                    sample_gaussian(p, FieldTag::Complex, &mut r),
                    sample_gaussian(q, FieldTag::Complex, &mut r),
                    sample_gaussian(q, FieldTag::Complex, &mut r),
                );
                t.record(b.and_then(|b| {
                    let (dec, diag) = binomial_inverse_with_diagnostics(&b, &opts)?;
                    let inv = evaluate_binomial(&b).inverse()?;
                    let rank = kron_rank(&inv, p, q, 1e-8)?.numeric_rank;
                    Ok(dec.len() <= p.min(q) && diag.residual <= diag.bound && rank <= p.min(q))
                }));
            }
        }
    }
    t
}

fn preprocess_suite(cfg: &SelftestConfig) -> Tally {
    let mut t = Tally::default();
    let delta = 1e-4;
    for p in sizes(cfg) {
        for trial in 0..cfg.trials {
            let mut r = rng(cfg, 6, &[p as u64, trial as u64]);
            let q = 2 + trial % 3;
            let b = KroneckerBinomial::new(
                Matrix::identity(p),
                Matrix::identity(p),
                sample_gaussian(q, FieldTag::Complex, &mut r),
                sample_gaussian(q, FieldTag::Complex, &mut r),
            );
            let spec = PerturbSpec {
                seed: r.next_u64(),
                ..PerturbSpec::default()
            };
            t.record(b.and_then(|b| {
                let (fixed, _) = preprocess_binomial(&b, delta, &spec)?;
                let (_, diag) =
                    binomial_inverse_with_diagnostics(&fixed, &InverseOptions::default())?;
                let moved = evaluate_binomial(&b)
                    .sub(&evaluate_binomial(&fixed))?
                    .frobenius_norm();
                let allowed =
                    delta * (b.c().frobenius_norm() + b.d().frobenius_norm()) * (p as f64).sqrt();
                Ok(diag.residual <= diag.bound && moved <= allowed)
            }));
        }
    }
    t
}

fn discriminant_suite(cfg: &SelftestConfig) -> Tally {
    let mut t = Tally::default();
    for trial in 0..cfg.trials * 10 {
        let a = sample_gaussian(2, FieldTag::Complex, &mut rng(cfg, 7, &[trial as u64]));
        t.record((|| {
            let via_roots = char_poly_discriminant(&a)?;
            let closed = discriminant_2x2(&a)?;
            Ok((via_roots - closed).norm() <= 1e-9 * closed.norm().max(1.0))
        })());
    }
    t
}

pub fn run_selftest(cfg: &SelftestConfig) -> SelftestSummary {
    let suites: [(&str, Suite); 7] = [
        ("density", density),
        ("openness", openness),
        ("perturb-pair", perturb_pair_suite),
        ("perturb-triple", perturb_triple_suite),
        ("kron-inverse", kron_inverse_suite),
        ("preprocess", preprocess_suite),
        ("discriminant", discriminant_suite),
    ];
    let mut results: Vec<SuiteResult> = suites
        .iter()
        .map(|(name, suite)| {
            let t = suite(cfg);
            SuiteResult {
                name: name.to_string(),
                cases: t.cases,
                failures: t.failures,
                passed: t.failures == 0,
            }
        })
        .collect();
    if cfg.inject_failure {
        results.push(SuiteResult {
            name: "injected-failure".into(),
            cases: 1,
            failures: 1,
            passed: false,
        });
    }
    let passed = results.iter().all(|s| s.passed);
    SelftestSummary {
        suites: results,
        passed,
    }
}
