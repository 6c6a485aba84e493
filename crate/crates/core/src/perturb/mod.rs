//! Certified simple-spectrum perturbations of matrix tuples.
//!
//! The search follows a two-stage structure. Stage 1 moves every matrix to a
//! nearby invertible matrix with a simple spectrum; the designated matrix is
//! held to half the budget. Stage 2 then searches a small ball around the
//! designated matrix, keeping the others fixed, until the mapped product
//! `f_1(A_1) ... f_k(A_k)` has a simple spectrum. If a round cannot finish,
//! stage 1 is redrawn from a fresh stream.
//!
//! All randomness is derived from `(seed, stream, round, index)` keys, so an
//! outcome depends only on the inputs and the [`PerturbSpec`].

mod selfmap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matcore::{sample_gaussian, FieldTag, Matrix, RandomSource};
use crate::spectra::{simplicity_report, SpectrumReport, DEFAULT_GAP_TOL};

pub use selfmap::{apply_selfmap, SelfMap};

const STREAM_SINGLE: u64 = 1;
const STREAM_STAGE1: u64 = 2;
const STREAM_STAGE2: u64 = 3;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PerturbSpec {
    /// Frobenius-norm budget; every returned matrix is strictly within it.
    pub eps: f64,
    pub gap_tol: f64,
    pub max_attempts: usize,
    /// Factor in (0, 1) applied to the stage-2 radius, initially and on each rejected candidate.
    pub stage2_shrink: f64,
    pub seed: u64,
    /// Field of the random perturbation directions.
    pub field: FieldTag,
    /// Index of the matrix searched in stage 2.
    pub designated: usize,
}

impl Default for PerturbSpec {
    fn default() -> Self {
        PerturbSpec {
            eps: 1e-2,
            gap_tol: DEFAULT_GAP_TOL,
            max_attempts: 64,
            stage2_shrink: 0.5,
            seed: 0,
            field: FieldTag::Complex,
            designated: 0,
        }
    }
}

impl PerturbSpec {
    pub fn with_eps(eps: f64) -> PerturbSpec {
        PerturbSpec {
            eps,
            ..PerturbSpec::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::Precondition(format!(
                "eps must be positive and finite, got {}",
                self.eps
            )));
        }
        if !(self.gap_tol > 0.0) {
            return Err(Error::Precondition(format!(
                "gap_tol must be positive, got {}",
                self.gap_tol
            )));
        }
        if self.max_attempts == 0 {
            return Err(Error::Precondition(
                "max_attempts must be at least 1".into(),
            ));
        }
        if !(self.stage2_shrink > 0.0 && self.stage2_shrink < 1.0) {
            return Err(Error::Precondition(format!(
                "stage2_shrink must lie in (0, 1), got {}",
                self.stage2_shrink
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Stage1Record {
    pub index: usize,
    pub budget: f64,
    /// Frobenius distance from the input; absent when the search failed.
    pub delta: Option<f64>,
    /// Candidates evaluated, including the unperturbed input.
    pub attempts: usize,
    pub succeeded: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Stage2Record {
    pub designated: usize,
    /// Stage-1 result for the designated matrix; the ball is centred here.
    pub center: Matrix,
    pub center_safe_radius: f64,
    pub initial_radius: f64,
    pub final_radius: f64,
    pub probes: usize,
    /// Candidates rejected because they were not simple and invertible.
    pub candidate_rejections: usize,
    /// Candidates whose mapped product was not simple.
    pub product_rejections: usize,
    /// Frobenius distance from the centre to the accepted matrix.
    pub offset: Option<f64>,
    pub succeeded: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RoundTrace {
    pub round: usize,
    pub stage1: Vec<Stage1Record>,
    pub stage2: Option<Stage2Record>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct PerturbTrace {
    pub maps: Vec<String>,
    pub rounds: Vec<RoundTrace>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PerturbOutcome {
    pub perturbed: Vec<Matrix>,
    pub deltas: Vec<f64>,
    pub product: Matrix,
    pub product_report: SpectrumReport,
    pub per_matrix_reports: Vec<SpectrumReport>,
    pub attempts_used: usize,
    pub trace: PerturbTrace,
}

struct SingleFound {
    matrix: Matrix,
    report: SpectrumReport,
    delta: f64,
}

/// Draws `a + (budget * u / ||G||_F) G` until the result is simple and
/// invertible, trying `a` itself first when `try_original` is set.
fn single_search(
    a: &Matrix,
    budget: f64,
    spec: &PerturbSpec,
    keys: &[u64],
    try_original: bool,
) -> Result<(Option<SingleFound>, usize)> {
    let n = a.require_square("perturb")?;
    let mut attempts = 0;
    if try_original {
        attempts += 1;
        let report = simplicity_report(a, spec.gap_tol)?;
        if report.is_simple && report.is_invertible {
            return Ok((
                Some(SingleFound {
                    matrix: a.clone(),
                    report,
                    delta: 0.0,
                }),
                attempts,
            ));
        }
    }
    let mut stream = keys.to_vec();
    stream.push(0);
    for attempt in 1..=spec.max_attempts {
        attempts += 1;
        *stream.last_mut().unwrap() = attempt as u64;
        let mut rng = RandomSource::derived(spec.seed, &stream);
        let g = sample_gaussian(n, spec.field, &mut rng);
        let u = rng.uniform_open();
        let candidate = a.add(&g.scale(budget * u / g.frobenius_norm()))?;
        let delta = candidate.sub(a)?.frobenius_norm();
        if delta >= budget {
            continue;
        }
        let report = simplicity_report(&candidate, spec.gap_tol)?;
        if report.is_simple && report.is_invertible {
            return Ok((
                Some(SingleFound {
                    matrix: candidate,
                    report,
                    delta,
                }),
                attempts,
            ));
        }
    }
    Ok((None, attempts))
}

/// Nearby invertible matrix with a simple spectrum, `||a - a_eps||_F < eps`.
pub fn perturb_single(a: &Matrix, spec: &PerturbSpec) -> Result<(Matrix, SpectrumReport)> {
    spec.validate()?;
    let (found, attempts) = single_search(a, spec.eps, spec, &[STREAM_SINGLE], true)?;
    match found {
        Some(f) => Ok((f.matrix, f.report)),
        None => Err(Error::AttemptsExhausted {
            attempts,
            trace: Box::new(PerturbTrace {
                maps: Vec::new(),
                rounds: vec![RoundTrace {
                    round: 0,
                    stage1: vec![Stage1Record {
                        index: 0,
                        budget: spec.eps,
                        delta: None,
                        attempts,
                        succeeded: false,
                    }],
                    stage2: None,
                }],
            }),
        }),
    }
}

fn product_of(factors: &[Matrix], n: usize) -> Result<Matrix> {
    factors
        .iter()
        .try_fold(Matrix::identity(n), |acc, m| acc.multiply(m))
}

/// Pair version of [`perturb_tuple`]: `f(A_eps) g(B_eps)` is simple.
pub fn perturb_pair(
    a: &Matrix,
    b: &Matrix,
    f: &SelfMap,
    g: &SelfMap,
    spec: &PerturbSpec,
) -> Result<PerturbOutcome> {
    perturb_tuple(&[a.clone(), b.clone()], &[f.clone(), g.clone()], spec)
}

/// `A_eps B_eps^-1` is simple.
pub fn perturb_pair_inverse(a: &Matrix, b: &Matrix, spec: &PerturbSpec) -> Result<PerturbOutcome> {
    perturb_pair(a, b, &SelfMap::Identity, &SelfMap::Inverse, spec)
}

/// Perturbs every matrix by less than `spec.eps` (Frobenius) so that each is
/// invertible with a simple spectrum and `f_1(A_1) ... f_k(A_k)` is simple.
pub fn perturb_tuple(
    mats: &[Matrix],
    maps: &[SelfMap],
    spec: &PerturbSpec,
) -> Result<PerturbOutcome> {
    spec.validate()?;
    let k = mats.len();
    if k == 0 {
        return Err(Error::Precondition(
            "perturb_tuple needs at least one matrix".into(),
        ));
    }
    if maps.len() != k {
        return Err(Error::dims(
            "perturb_tuple",
            format!("{k} self-maps"),
            maps.len(),
        ));
    }
    let n = mats[0].require_square("perturb_tuple")?;
    for m in mats {
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::dims(
                "perturb_tuple",
                format!("{n}x{n}"),
                format!("{}x{}", m.nrows(), m.ncols()),
            ));
        }
    }
    for f in maps {
        f.validate(n)?;
    }
    let d = spec.designated;
    if d >= k {
        return Err(Error::Precondition(format!(
            "designated index {d} out of range for {k} matrices"
        )));
    }

    let mut trace = PerturbTrace {
        maps: maps.iter().map(|f| f.name().to_string()).collect(),
        rounds: Vec::new(),
    };
    let mut attempts_used = 0;

    for round in 0..spec.max_attempts {
        // Round 0 keeps inputs that already qualify; later rounds redraw everything.
        let try_original = round == 0;
        let mut record = RoundTrace {
            round,
            stage1: Vec::with_capacity(k),
            stage2: None,
        };
        let mut stage1: Vec<SingleFound> = Vec::with_capacity(k);
        for (i, a) in mats.iter().enumerate() {
            let budget = if i == d { spec.eps / 2.0 } else { spec.eps };
            let keys = [STREAM_STAGE1, round as u64, i as u64];
            let (found, attempts) = single_search(a, budget, spec, &keys, try_original)?;
            record.stage1.push(Stage1Record {
                index: i,
                budget,
                delta: found.as_ref().map(|f| f.delta),
                attempts,
                succeeded: found.is_some(),
            });
            match found {
                Some(f) => stage1.push(f),
                None => break,
            }
        }
        if stage1.len() < k {
            trace.rounds.push(record);
            continue;
        }

        let mut mapped = Vec::with_capacity(k);
        for (f, s) in maps.iter().zip(&stage1) {
            mapped.push(f.apply(&s.matrix)?);
        }
        let left = product_of(&mapped[..d], n)?;
        let right = product_of(&mapped[d + 1..], n)?;

        let center = &stage1[d];
        let sigma_min = center
            .matrix
            .singular_values()
            .last()
            .copied()
            .unwrap_or(0.0);
        let initial_radius = spec.stage2_shrink
            * (spec.eps / 2.0)
                .min(center.report.safe_radius / (n as f64).sqrt())
                .min(sigma_min);
        let mut radius = initial_radius;
        let mut stage2 = Stage2Record {
            designated: d,
            center: center.matrix.clone(),
            center_safe_radius: center.report.safe_radius,
            initial_radius,
            final_radius: radius,
            probes: 0,
            candidate_rejections: 0,
            product_rejections: 0,
            offset: None,
            succeeded: false,
        };

        for probe in 0..spec.max_attempts {
            attempts_used += 1;
            stage2.probes += 1;
            let (candidate, report) = if probe == 0 {
                (center.matrix.clone(), center.report.clone())
            } else {
                let mut rng =
                    RandomSource::derived(spec.seed, &[STREAM_STAGE2, round as u64, probe as u64]);
                let g = sample_gaussian(n, spec.field, &mut rng);
                let u = rng.uniform_open();
                let candidate = center
                    .matrix
                    .add(&g.scale(radius * u / g.frobenius_norm()))?;
                let report = simplicity_report(&candidate, spec.gap_tol)?;
                (candidate, report)
            };
            let delta = candidate.sub(&mats[d])?.frobenius_norm();
            if !(report.is_simple && report.is_invertible) || delta >= spec.eps {
                stage2.candidate_rejections += 1;
                radius *= spec.stage2_shrink;
                continue;
            }
            let image = match maps[d].apply(&candidate) {
                Ok(m) => m,
                Err(Error::SingularMatrix { .. }) => {
                    stage2.candidate_rejections += 1;
                    radius *= spec.stage2_shrink;
                    continue;
                }
                Err(e) => return Err(e),
            };
            let product = left.multiply(&image)?.multiply(&right)?;
            let product_report = simplicity_report(&product, spec.gap_tol)?;
            if !product_report.is_simple {
                stage2.product_rejections += 1;
                continue;
            }

            stage2.offset = Some(candidate.sub(&center.matrix)?.frobenius_norm());
            stage2.succeeded = true;
            stage2.final_radius = radius;
            record.stage2 = Some(stage2);
            trace.rounds.push(record);

            let mut perturbed = Vec::with_capacity(k);
            let mut deltas = Vec::with_capacity(k);
            let mut per_matrix_reports = Vec::with_capacity(k);
            for (i, s) in stage1.into_iter().enumerate() {
                if i == d {
                    perturbed.push(candidate.clone());
                    deltas.push(delta);
                    per_matrix_reports.push(report.clone());
                } else {
                    perturbed.push(s.matrix);
                    deltas.push(s.delta);
                    per_matrix_reports.push(s.report);
                }
            }
            return Ok(PerturbOutcome {
                perturbed,
                deltas,
                product,
                product_report,
                per_matrix_reports,
                attempts_used,
                trace,
            });
        }
        stage2.final_radius = radius;
        record.stage2 = Some(stage2);
        trace.rounds.push(record);
    }

    Err(Error::AttemptsExhausted {
        attempts: attempts_used,
        trace: Box::new(trace),
    })
}
