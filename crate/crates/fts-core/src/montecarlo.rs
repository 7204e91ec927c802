//! Seeded Monte Carlo experiments for the distributional limits of scaled
//! DFTs: second-moment recovery, circular symmetry, Gaussian projection
//! diagnostics, the real boundary limit, and asymptotic independence across
//! distinct Fourier frequencies.
//!
//! Every experiment draws replication `r` from stream id `r` of the
//! experiment seed (stream 0 is reserved for auxiliary material such as the
//! random test vector, pilot references use streams above `reps`), so reports
//! are byte-for-byte reproducible for a given `(seed, config)` regardless of
//! thread count: replications are collected in index order and aggregated by
//! a fixed pairwise reduction tree.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::dft::{dft_at, grid_frequency};
use crate::error::{Error, Result};
use crate::hilbert::{tensor, FunctionVector, LinOperator};
use crate::models::ProcessModel;
use crate::numeric::{
    excess_kurtosis, ks_distance_centred_normal, mean, pairwise_reduce, pearson_corr,
    sample_variance, skewness,
};
use crate::rng::RngStream;
use crate::spectral::{spectral_density_closed_for, spectral_density_lagsum, LagCovariances, Provenance};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;
/// Frequencies this close to `0` or `±pi` get the real limiting regime.
const BOUNDARY_TOL: f64 = 1e-12;

/// How a frequency is specified: directly in radians, or as a Fourier-grid
/// index `j` (meaning `theta = 2 pi j / n`). Grid indices are exact about
/// membership in the grid, which matters for boundary detection and for the
/// cross-frequency experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ThetaSpec {
    Radians(f64),
    GridIndex(i64),
}

impl ThetaSpec {
    /// Resolve to `(theta, grid index if exact)` for path length `n`.
    pub fn resolve(&self, n: usize) -> Result<(f64, Option<i64>)> {
        match *self {
            ThetaSpec::Radians(theta) => {
                if !theta.is_finite() || !(-std::f64::consts::PI..=std::f64::consts::PI).contains(&theta) {
                    return Err(Error::InvalidParameter {
                        name: "theta",
                        reason: format!("must lie in [-pi, pi], got {theta}"),
                    });
                }
                Ok((theta, None))
            }
            ThetaSpec::GridIndex(j) => {
                if n == 0 || 2 * j.unsigned_abs() as usize > n {
                    return Err(Error::InvalidParameter {
                        name: "freq_index",
                        reason: format!("|j| must be at most n/2 = {}, got {j}", n / 2),
                    });
                }
                Ok((grid_frequency(n, j), Some(j)))
            }
        }
    }
}

fn is_real_boundary(theta: f64) -> bool {
    theta.abs() <= BOUNDARY_TOL || (theta.abs() - std::f64::consts::PI).abs() <= BOUNDARY_TOL
}

/// Which Gaussian limit applies at the requested frequency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LimitMode {
    /// Interior frequency: complex Gaussian with vanishing relation operator,
    /// Re/Im parts each of variance `pi <F u, u>`.
    ComplexCircular,
    /// `theta` in `{0, ±pi}`: real Gaussian with covariance `T = 2 pi F_theta`.
    Real,
}

impl LimitMode {
    pub fn label(&self) -> &'static str {
        match self {
            LimitMode::ComplexCircular => "complex-circular",
            LimitMode::Real => "real",
        }
    }
}

/// Where the reference (limit) covariance operator comes from. The Fejér
/// estimate is deliberately not accepted here: it carries an `O(1/n)` bias at
/// the very scale the experiments measure, so it cannot arbitrate them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ReferenceProvenance {
    ClosedForm,
    LagSum { max_lag: usize },
    /// Pilot simulation on dedicated streams (`reps+1 ..= reps+pilot_reps`);
    /// the only option for models without a closed second-order structure.
    MonteCarlo { pilot_reps: usize },
}

/// A labelled unit vector used for scalar projections of the DFT.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestVector {
    label: String,
    vector: FunctionVector,
}

impl TestVector {
    /// Normalizes the direction; zero vectors are rejected.
    pub fn new(label: impl Into<String>, vector: &FunctionVector) -> Result<Self> {
        Ok(TestVector {
            label: label.into(),
            vector: vector.normalized()?,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn vector(&self) -> &FunctionVector {
        &self.vector
    }
}

/// The default projection directions: the first basis vector, the normalized
/// all-ones vector, and one seeded random direction (drawn from the reserved
/// stream 0 so it never collides with replication draws).
pub fn default_test_vectors(dim: usize, seed: u64) -> Vec<TestVector> {
    let e1 = TestVector::new("e1", &FunctionVector::basis(dim, 0).expect("dim >= 1"))
        .expect("basis vector is unit");
    let ones = TestVector::new("ones", &FunctionVector::from_real(&vec![1.0; dim]))
        .expect("ones vector is nonzero");
    let mut rng = RngStream::new(seed, 0);
    let coords: Vec<f64> = (0..dim).map(|_| rng.standard_normal()).collect();
    let rand = TestVector::new("rand", &FunctionVector::from_real(&coords))
        .expect("gaussian vector is nonzero");
    vec![e1, ones, rand]
}

/// Moment and distribution diagnostics of a scalar sample against a centred
/// normal reference with known variance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalityDiagnostics {
    pub sample_size: usize,
    /// Sample mean over the reference standard deviation.
    pub standardized_mean: f64,
    /// Sample variance over the reference variance.
    pub variance_ratio: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    /// Kolmogorov–Smirnov distance to `N(0, reference_variance)`.
    pub ks_distance: f64,
    /// Set when the sample is constant (zero sample variance).
    pub degenerate: bool,
}

/// Compare a sample against `N(0, reference_variance)`. Requires at least
/// 100 samples and a strictly positive reference variance.
pub fn normality_diagnostics(samples: &[f64], reference_variance: f64) -> Result<NormalityDiagnostics> {
    if samples.len() < 100 {
        return Err(Error::InvalidParameter {
            name: "samples",
            reason: format!("at least 100 samples required, got {}", samples.len()),
        });
    }
    if !(reference_variance > 0.0) {
        return Err(Error::InvalidParameter {
            name: "reference_variance",
            reason: format!("must be strictly positive, got {reference_variance}"),
        });
    }
    let var = sample_variance(samples);
    let sd_ref = reference_variance.sqrt();
    Ok(NormalityDiagnostics {
        sample_size: samples.len(),
        standardized_mean: mean(samples) / sd_ref,
        variance_ratio: var / reference_variance,
        skewness: skewness(samples),
        excess_kurtosis: excess_kurtosis(samples),
        ks_distance: ks_distance_centred_normal(samples, sd_ref),
        degenerate: var == 0.0,
    })
}

/// Distributional statistics of one scalar projection `<S_n/sqrt(n), u>`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProjectionStats {
    pub label: String,
    /// Per-component reference variance: `pi <F u, u>` in complex-circular
    /// mode, `<T u, u>` in real mode.
    pub ref_variance: f64,
    pub mean_re: f64,
    pub mean_im: f64,
    pub var_re: f64,
    pub var_im: f64,
    /// `var / ref_variance`; `Some(0)` for an exactly degenerate pair,
    /// `None` only if the sample varies against a zero reference.
    pub var_ratio_re: Option<f64>,
    pub var_ratio_im: Option<f64>,
    pub corr_re_im: f64,
    /// Against `N(0, ref_variance)`; absent when the reference is degenerate.
    pub diag_re: Option<NormalityDiagnostics>,
    /// Absent in real mode (the limit has no imaginary component) and for
    /// degenerate references.
    pub diag_im: Option<NormalityDiagnostics>,
}

/// Full record of one CLT experiment at a single frequency.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CltReport {
    pub experiment: String,
    pub model_id: String,
    pub model_kind: String,
    pub theta: f64,
    pub freq_index: Option<i64>,
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    pub mode: LimitMode,
    /// Set when a nominally interior request landed on `{0, ±pi}` and the
    /// experiment switched to the real limiting regime.
    pub mode_switched: bool,
    pub reference_provenance: String,
    /// The limit covariance: `2 pi F_theta` (equivalently `T` at the
    /// boundary).
    pub reference: LinOperator,
    /// Mean of `tensor(s, s)` over replications, `s = S_n(theta)/sqrt(n)`.
    pub gamma_hat: LinOperator,
    /// Mean of `tensor(s, conj(s))`: the relation operator, which must vanish
    /// in complex-circular mode.
    pub relation_hat: LinOperator,
    /// `||gamma_hat - reference|| / ||reference||` (absolute when the
    /// reference vanishes).
    pub gamma_rel_err: f64,
    /// `||relation_hat|| / ||gamma_hat||` (0 for the zero model).
    pub relation_rel_norm: f64,
    /// Mean and standard error of `||S_n||^2 / n`, with `tr(reference)`.
    pub trace_mean: f64,
    pub trace_se: f64,
    pub trace_ref: f64,
    pub trace_rel_err: f64,
    pub projections: Vec<ProjectionStats>,
}

/// Configuration of a CLT experiment.
#[derive(Debug, Clone)]
pub struct CltConfig<'a> {
    pub model: &'a ProcessModel,
    pub model_id: String,
    pub theta: ThetaSpec,
    pub n: usize,
    pub reps: usize,
    /// Empty means the defaults from [`default_test_vectors`].
    pub test_vectors: Vec<TestVector>,
    pub reference: ReferenceProvenance,
    pub seed: u64,
}

fn validate_run_size(n: usize, reps: usize) -> Result<()> {
    if reps < 100 {
        return Err(Error::InvalidParameter {
            name: "R",
            reason: "R ≥ 100 required".into(),
        });
    }
    if n < 8 {
        return Err(Error::InvalidParameter {
            name: "n",
            reason: format!("n ≥ 8 required, got {n}"),
        });
    }
    Ok(())
}

/// Simulate `reps` paths on streams `stream_lo ..` and return, in replication
/// order, the scaled DFTs `S_n(theta)/sqrt(n)` at each requested frequency.
fn scaled_dfts(
    model: &ProcessModel,
    thetas: &[f64],
    n: usize,
    reps: usize,
    seed: u64,
    stream_lo: u64,
) -> Result<Vec<Vec<FunctionVector>>> {
    let scale = Complex64::new(1.0 / (n as f64).sqrt(), 0.0);
    (0..reps as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = RngStream::new(seed, stream_lo + i);
            let path = model.simulate(n, &mut rng)?;
            Ok(thetas
                .iter()
                .map(|&theta| dft_at(&path, theta).value.scale(scale))
                .collect())
        })
        .collect()
}

fn mean_tensor<F>(samples: &[Vec<FunctionVector>], dim: usize, map: F) -> LinOperator
where
    F: Fn(&Vec<FunctionVector>) -> LinOperator + Sync,
{
    let terms: Vec<LinOperator> = samples.iter().map(map).collect();
    pairwise_reduce(&terms, &|a, b| a.add(b))
        .unwrap_or_else(|| LinOperator::zeros(dim))
        .scale_real(1.0 / samples.len() as f64)
}

/// The limit covariance `2 pi F_theta` from the requested provenance.
fn reference_operator(
    model: &ProcessModel,
    theta: f64,
    provenance: ReferenceProvenance,
    n: usize,
    reps: usize,
    seed: u64,
) -> Result<(LinOperator, Provenance)> {
    match provenance {
        ReferenceProvenance::ClosedForm => Ok((
            spectral_density_closed_for(model, theta)?.scale_real(TWO_PI),
            Provenance::ClosedForm,
        )),
        ReferenceProvenance::LagSum { max_lag } => {
            let covs = LagCovariances::theoretical(model, max_lag)?;
            Ok((
                spectral_density_lagsum(&covs, theta).scale_real(TWO_PI),
                Provenance::LagSum {
                    max_lag: max_lag as i64,
                },
            ))
        }
        ReferenceProvenance::MonteCarlo { pilot_reps } => {
            if pilot_reps == 0 {
                return Err(Error::InvalidParameter {
                    name: "pilot_reps",
                    reason: "pilot reference needs at least one replication".into(),
                });
            }
            let samples = scaled_dfts(model, &[theta], n, pilot_reps, seed, reps as u64 + 1)?;
            let op = mean_tensor(&samples, model.dim(), |s| {
                tensor(&s[0], &s[0]).expect("uniform dims")
            });
            Ok((
                op,
                Provenance::MonteCarlo {
                    reps: pilot_reps,
                    n,
                },
            ))
        }
    }
}

fn ratio_or_flag(var: f64, reference: f64) -> Option<f64> {
    if reference > 0.0 {
        Some(var / reference)
    } else if var == 0.0 {
        Some(0.0)
    } else {
        None
    }
}

fn projection_stats(
    u: &TestVector,
    samples: &[Vec<FunctionVector>],
    reference: &LinOperator,
    mode: LimitMode,
) -> Result<ProjectionStats> {
    let z: Vec<Complex64> = samples
        .iter()
        .map(|s| s[0].inner(u.vector()).expect("dims validated"))
        .collect();
    let re: Vec<f64> = z.iter().map(|v| v.re).collect();
    let im: Vec<f64> = z.iter().map(|v| v.im).collect();
    let quad = reference
        .apply(u.vector())
        .expect("dims validated")
        .inner(u.vector())
        .expect("dims validated")
        .re;
    let ref_variance = match mode {
        LimitMode::ComplexCircular => quad / 2.0,
        LimitMode::Real => quad,
    };
    let var_re = sample_variance(&re);
    let var_im = sample_variance(&im);
    let diag_re = if ref_variance > 0.0 {
        Some(normality_diagnostics(&re, ref_variance)?)
    } else {
        None
    };
    let diag_im = if ref_variance > 0.0 && mode == LimitMode::ComplexCircular {
        Some(normality_diagnostics(&im, ref_variance)?)
    } else {
        None
    };
    Ok(ProjectionStats {
        label: u.label().to_string(),
        ref_variance,
        mean_re: mean(&re),
        mean_im: mean(&im),
        var_re,
        var_im,
        var_ratio_re: ratio_or_flag(var_re, ref_variance),
        var_ratio_im: ratio_or_flag(var_im, ref_variance),
        corr_re_im: pearson_corr(&re, &im),
        diag_re,
        diag_im,
    })
}

fn run_clt_inner(cfg: &CltConfig, experiment: &str) -> Result<CltReport> {
    validate_run_size(cfg.n, cfg.reps)?;
    let (theta, freq_index) = cfg.theta.resolve(cfg.n)?;
    let boundary = is_real_boundary(theta);
    let mode = if boundary {
        LimitMode::Real
    } else {
        LimitMode::ComplexCircular
    };
    let mode_switched = boundary && experiment == "clt";

    let dim = cfg.model.dim();
    let test_vectors = if cfg.test_vectors.is_empty() {
        default_test_vectors(dim, cfg.seed)
    } else {
        for u in &cfg.test_vectors {
            if u.vector().dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: u.vector().dim(),
                });
            }
        }
        cfg.test_vectors.clone()
    };

    let (reference, provenance) =
        reference_operator(cfg.model, theta, cfg.reference, cfg.n, cfg.reps, cfg.seed)?;

    let samples = scaled_dfts(cfg.model, &[theta], cfg.n, cfg.reps, cfg.seed, 1)?;
    let gamma_hat = mean_tensor(&samples, dim, |s| tensor(&s[0], &s[0]).expect("uniform dims"));
    let relation_hat = mean_tensor(&samples, dim, |s| {
        tensor(&s[0], &s[0].conj()).expect("uniform dims")
    });

    let ref_norm = reference.hs_norm();
    let gamma_rel_err = if ref_norm > 0.0 {
        gamma_hat.sub(&reference).hs_norm() / ref_norm
    } else {
        gamma_hat.hs_norm()
    };
    let gamma_norm = gamma_hat.hs_norm();
    let relation_rel_norm = if gamma_norm > 0.0 {
        relation_hat.hs_norm() / gamma_norm
    } else {
        0.0
    };

    let traces: Vec<f64> = samples.iter().map(|s| s[0].norm_sq()).collect();
    let trace_mean = mean(&traces);
    let trace_se = (sample_variance(&traces) / traces.len() as f64).sqrt();
    let trace_ref = reference.trace().re;
    let trace_rel_err = if trace_ref.abs() > 0.0 {
        (trace_mean - trace_ref).abs() / trace_ref.abs()
    } else {
        trace_mean.abs()
    };

    let projections = test_vectors
        .iter()
        .map(|u| projection_stats(u, &samples, &reference, mode))
        .collect::<Result<Vec<_>>>()?;

    Ok(CltReport {
        experiment: experiment.to_string(),
        model_id: cfg.model_id.clone(),
        model_kind: cfg.model.label().to_string(),
        theta,
        freq_index,
        n: cfg.n,
        reps: cfg.reps,
        seed: cfg.seed,
        mode,
        mode_switched,
        reference_provenance: provenance.to_string(),
        reference,
        gamma_hat,
        relation_hat,
        gamma_rel_err,
        relation_rel_norm,
        trace_mean,
        trace_se,
        trace_ref,
        trace_rel_err,
        projections,
    })
}

/// Run the single-frequency CLT experiment. Requests that land on the
/// boundary frequencies `{0, ±pi}` switch to the real limiting regime and
/// record that they did.
pub fn run_clt(cfg: &CltConfig) -> Result<CltReport> {
    run_clt_inner(cfg, "clt")
}

/// The real-limit experiment at `theta = 0`: `S_n/sqrt(n)` against
/// `N(0, T)`, `T = 2 pi F_0`. Same machinery as [`run_clt`], real mode by
/// construction rather than by boundary detection.
pub fn run_theta0(cfg: &CltConfig) -> Result<CltReport> {
    let mut cfg = cfg.clone();
    cfg.theta = ThetaSpec::GridIndex(0);
    run_clt_inner(&cfg, "theta0")
}

/// One projection's cross-frequency correlation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossProjection {
    pub label: String,
    /// `|mean(z conj(z'))| / sqrt(mean |z|^2 mean |z'|^2)`.
    pub cross_corr: f64,
}

/// Record of the asymptotic-independence experiment at two distinct Fourier
/// frequencies.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossFreqReport {
    pub model_id: String,
    pub model_kind: String,
    pub freq_index: i64,
    pub freq_index_prime: i64,
    pub theta: f64,
    pub theta_prime: f64,
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    pub gamma_theta: LinOperator,
    pub gamma_theta_prime: LinOperator,
    /// Mean of `tensor(s, s')` over replications.
    pub cross_cov: LinOperator,
    /// `||cross_cov|| / sqrt(||gamma_theta|| ||gamma_theta_prime||)`.
    pub normalized_cross_hs: f64,
    pub projections: Vec<CrossProjection>,
}

/// Configuration of the cross-frequency experiment. Frequencies must be
/// given as Fourier-grid indices: only exact grid membership makes "distinct
/// frequencies" well defined for finite `n`.
#[derive(Debug, Clone)]
pub struct CrossFreqConfig<'a> {
    pub model: &'a ProcessModel,
    pub model_id: String,
    pub freq_index: i64,
    pub freq_index_prime: i64,
    pub n: usize,
    pub reps: usize,
    pub test_vectors: Vec<TestVector>,
    pub seed: u64,
}

/// Estimate the joint second-order structure of scaled DFTs at two distinct
/// grid frequencies from paths shared between them.
pub fn run_cross_freq(cfg: &CrossFreqConfig) -> Result<CrossFreqReport> {
    validate_run_size(cfg.n, cfg.reps)?;
    let (theta, _) = ThetaSpec::GridIndex(cfg.freq_index).resolve(cfg.n)?;
    let (theta_prime, _) = ThetaSpec::GridIndex(cfg.freq_index_prime).resolve(cfg.n)?;
    if (cfg.freq_index - cfg.freq_index_prime).rem_euclid(cfg.n as i64) == 0 {
        return Err(Error::EqualFrequencies(cfg.freq_index, cfg.freq_index_prime));
    }
    let dim = cfg.model.dim();
    let test_vectors = if cfg.test_vectors.is_empty() {
        default_test_vectors(dim, cfg.seed)
    } else {
        for u in &cfg.test_vectors {
            if u.vector().dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: u.vector().dim(),
                });
            }
        }
        cfg.test_vectors.clone()
    };

    let samples = scaled_dfts(cfg.model, &[theta, theta_prime], cfg.n, cfg.reps, cfg.seed, 1)?;
    let gamma_theta = mean_tensor(&samples, dim, |s| tensor(&s[0], &s[0]).expect("uniform dims"));
    let gamma_theta_prime =
        mean_tensor(&samples, dim, |s| tensor(&s[1], &s[1]).expect("uniform dims"));
    let cross_cov = mean_tensor(&samples, dim, |s| tensor(&s[0], &s[1]).expect("uniform dims"));

    let denom = (gamma_theta.hs_norm() * gamma_theta_prime.hs_norm()).sqrt();
    let normalized_cross_hs = if denom > 0.0 {
        cross_cov.hs_norm() / denom
    } else {
        0.0
    };

    let projections = test_vectors
        .iter()
        .map(|u| {
            let pairs: Vec<(Complex64, Complex64)> = samples
                .iter()
                .map(|s| {
                    (
                        s[0].inner(u.vector()).expect("dims validated"),
                        s[1].inner(u.vector()).expect("dims validated"),
                    )
                })
                .collect();
            let cross = pairs
                .iter()
                .map(|(a, b)| a * b.conj())
                .sum::<Complex64>()
                / pairs.len() as f64;
            let p1 = mean(&pairs.iter().map(|(a, _)| a.norm_sqr()).collect::<Vec<_>>());
            let p2 = mean(&pairs.iter().map(|(_, b)| b.norm_sqr()).collect::<Vec<_>>());
            let denom = (p1 * p2).sqrt();
            CrossProjection {
                label: u.label().to_string(),
                cross_corr: if denom > 0.0 { cross.norm() / denom } else { 0.0 },
            }
        })
        .collect();

    Ok(CrossFreqReport {
        model_id: cfg.model_id.clone(),
        model_kind: cfg.model.label().to_string(),
        freq_index: cfg.freq_index,
        freq_index_prime: cfg.freq_index_prime,
        theta,
        theta_prime,
        n: cfg.n,
        reps: cfg.reps,
        seed: cfg.seed,
        gamma_theta,
        gamma_theta_prime,
        cross_cov,
        normalized_cross_hs,
        projections,
    })
}
