//! Spectral density operators, built three independent ways, plus lag
//! covariances and the inverse Fourier relation between them.
//!
//! For a stationary sequence with lag covariances `C_h = E[X_h (tensor) X_0]`
//! the spectral density operator at frequency `theta` is
//! `F_theta = (1/2pi) sum_h C_h exp(-i h theta)`. This module materializes it
//! through
//!
//! * the closed form `(1/2pi) Psi(theta) V Psi(theta)*` for linear models
//!   (with the driver spectrum spliced in for dependent-error models),
//! * truncated lag sums over a symmetric range of lags,
//! * Fejér (Cesàro) averages `(1/2pi) sum_{|h|<n} (1 - |h|/n) C_h e^{-ih theta}`,
//!   which equal `E[S_n (tensor) S_n] / (2pi n)` exactly and are non-negative
//!   by construction,
//!
//! each tagged with its [`Provenance`]. Lag covariances are recovered from a
//! spectral estimate by periodic-trapezoid quadrature of
//! `C_h = integral F_theta e^{i h theta} d theta`, which is exact (to
//! rounding) for trigonometric-polynomial spectra once the grid is fine
//! enough.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::dft::{dft_at, periodogram_op};
use crate::error::{Error, Result};
use crate::hilbert::{tensor, LinOperator};
use crate::models::{DependentErrorLinearModel, LinearModel, ProcessModel, SamplePath};
use crate::numeric::pairwise_reduce;
use crate::rng::RngStream;

/// How a spectral estimate was constructed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Provenance {
    ClosedForm,
    LagSum { max_lag: i64 },
    Fejer { n: usize },
    MonteCarlo { reps: usize, n: usize },
}

impl std::fmt::Display for Provenance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Provenance::ClosedForm => write!(f, "closed-form"),
            Provenance::LagSum { max_lag } => write!(f, "lag-sum(H={max_lag})"),
            Provenance::Fejer { n } => write!(f, "fejer(n={n})"),
            Provenance::MonteCarlo { reps, n } => write!(f, "monte-carlo(R={reps},n={n})"),
        }
    }
}

/// Transfer function `Psi(theta) = sum_{k=0}^K Psi_k exp(-i k theta)`.
pub fn transfer_function(model: &LinearModel, theta: f64) -> LinOperator {
    let mut acc = LinOperator::zeros(model.dim());
    for (k, psi_k) in model.psi().iter().enumerate() {
        acc.add_assign_scaled(psi_k, Complex64::cis(-(k as f64) * theta));
    }
    acc
}

/// Closed-form spectral density `(1/2pi) Psi(theta) V Psi(theta)*` of a
/// linear model.
pub fn spectral_density_closed(model: &LinearModel, theta: f64) -> LinOperator {
    let psi = transfer_function(model, theta);
    psi.compose(model.innovations().covariance())
        .and_then(|pv| pv.compose(&psi.adjoint()))
        .expect("dimensions fixed by the model")
        .scale_real(1.0 / (2.0 * PI))
}

/// Closed-form spectral density of a linear filter with dependent errors:
/// `(1/2pi) Psi(theta) [2pi F^err_theta] Psi(theta)*`, where the bracket is
/// the driver's spectral density.
pub fn spectral_density_closed_dependent(
    model: &DependentErrorLinearModel,
    theta: f64,
) -> LinOperator {
    let mut psi = LinOperator::zeros(model.dim());
    for (k, psi_k) in model.psi().iter().enumerate() {
        psi.add_assign_scaled(psi_k, Complex64::cis(-(k as f64) * theta));
    }
    let driver_sd = spectral_density_closed(model.driver(), theta);
    psi.compose(&driver_sd.scale_real(2.0 * PI))
        .and_then(|m| m.compose(&psi.adjoint()))
        .expect("dimensions fixed by the model")
        .scale_real(1.0 / (2.0 * PI))
}

/// Closed-form spectral density for any model that admits one; errors for
/// ARCH, which has no closed form here.
pub fn spectral_density_closed_for(model: &ProcessModel, theta: f64) -> Result<LinOperator> {
    match model {
        ProcessModel::Linear(m) => Ok(spectral_density_closed(m, theta)),
        ProcessModel::DependentError(m) => Ok(spectral_density_closed_dependent(m, theta)),
        ProcessModel::Arch(_) => Err(Error::UnsupportedReference {
            wanted: "closed-form spectral density",
            model: "arch",
        }),
    }
}

/// Lag covariances `C_h` on a symmetric range `|h| <= H`, keyed by lag.
#[derive(Debug, Clone)]
pub struct LagCovariances {
    dim: usize,
    covs: BTreeMap<i64, LinOperator>,
}

impl LagCovariances {
    /// Validates that the lag range is symmetric and all operators share one
    /// dimension. (Adjoint symmetry `C_{-h} = C_h^*` is a property of genuine
    /// covariance sequences; the constructors below produce it exactly.)
    pub fn new(covs: BTreeMap<i64, LinOperator>) -> Result<Self> {
        let first = covs.values().next().ok_or(Error::InvalidParameter {
            name: "covs",
            reason: "at least the lag-0 covariance is required".into(),
        })?;
        let dim = first.dim();
        for (h, op) in &covs {
            if op.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: op.dim(),
                });
            }
            if !covs.contains_key(&-h) {
                return Err(Error::AsymmetricLagRange { h: *h, minus_h: -h });
            }
        }
        Ok(LagCovariances { dim, covs })
    }

    /// Exact model covariances for `|h| <= max_lag` (linear families only).
    pub fn theoretical(model: &ProcessModel, max_lag: usize) -> Result<Self> {
        let mut covs = BTreeMap::new();
        for h in -(max_lag as i64)..=(max_lag as i64) {
            covs.insert(h, model.theoretical_cov(h)?);
        }
        LagCovariances::new(covs)
    }

    /// Sample covariances of one path for `|h| <= max_lag`.
    pub fn empirical(path: &SamplePath, max_lag: usize) -> Result<Self> {
        let mut covs = BTreeMap::new();
        for h in 0..=(max_lag as i64) {
            let c = empirical_cov(path, h)?;
            covs.insert(-h, c.adjoint());
            covs.insert(h, c);
        }
        LagCovariances::new(covs)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_lag(&self) -> i64 {
        self.covs.keys().next_back().copied().unwrap_or(0)
    }

    /// `C_h`, or `None` beyond the stored range (interpreted as zero).
    pub fn get(&self, h: i64) -> Option<&LinOperator> {
        self.covs.get(&h)
    }

    /// Fejér truncation-error bound `(1/2pi n) sum_h |h| ||C_h||_HS`, valid
    /// for every `n >= 1` (weights `min(|h|/n, 1)` are dominated by `|h|/n`).
    pub fn fejer_error_bound(&self, n: usize) -> f64 {
        let sum: f64 = self
            .covs
            .iter()
            .map(|(h, c)| h.unsigned_abs() as f64 * c.hs_norm())
            .sum();
        sum / (2.0 * PI * n as f64)
    }
}

/// Truncated lag-sum spectral density `(1/2pi) sum_{|h|<=H} C_h e^{-ih theta}`.
pub fn spectral_density_lagsum(covs: &LagCovariances, theta: f64) -> LinOperator {
    let mut acc = LinOperator::zeros(covs.dim());
    for (h, c) in &covs.covs {
        acc.add_assign_scaled(c, Complex64::cis(-(*h as f64) * theta));
    }
    acc.scale_real(1.0 / (2.0 * PI))
}

/// Fejér average `(1/2pi) sum_{|h|<n} (1 - |h|/n) C_h e^{-ih theta}`; equals
/// `E[S_n (tensor) S_n] / (2pi n)` exactly and is non-negative by the Fejér
/// kernel structure. Lags beyond the stored range contribute zero.
pub fn fejer_spectral(covs: &LagCovariances, n: usize, theta: f64) -> Result<LinOperator> {
    if n == 0 {
        return Err(Error::InvalidParameter {
            name: "n",
            reason: "Fejér average requires n >= 1".into(),
        });
    }
    let mut acc = LinOperator::zeros(covs.dim());
    for (h, c) in &covs.covs {
        let weight = 1.0 - h.unsigned_abs() as f64 / n as f64;
        if weight <= 0.0 {
            continue;
        }
        acc.add_assign_scaled(c, Complex64::cis(-(*h as f64) * theta) * weight);
    }
    Ok(acc.scale_real(1.0 / (2.0 * PI)))
}

/// Sample lag covariance with divisor `n` (which keeps the implied Fejér
/// estimate non-negative): `(1/n) sum_{t=1}^{n-h} X_{t+h} (tensor) X_t` for
/// `h >= 0`, and the adjoint — exactly — for `h < 0`.
pub fn empirical_cov(path: &SamplePath, h: i64) -> Result<LinOperator> {
    let n = path.len();
    if h.unsigned_abs() as usize >= n {
        return Err(Error::LagOutOfRange { h, n });
    }
    if h < 0 {
        return Ok(empirical_cov(path, -h)?.adjoint());
    }
    let h = h as usize;
    let obs = path.observations();
    let mut acc = LinOperator::zeros(path.dim());
    for t in 0..(n - h) {
        acc.add_assign(&tensor(&obs[t + h], &obs[t])?);
    }
    Ok(acc.scale_real(1.0 / n as f64))
}

/// Uniform symmetric frequency grid `theta_g = -pi + 2 pi g / G`,
/// `g = 0, ..., G-1` (half-open at `+pi`; doubling `G` refines the grid).
pub fn symmetric_grid(g: usize) -> Vec<f64> {
    (0..g)
        .map(|i| -PI + 2.0 * PI * i as f64 / g as f64)
        .collect()
}

/// A spectral density evaluated on a frequency grid, tagged with how it was
/// built. Closed-form and Fejér estimates are validated non-negative
/// self-adjoint at construction.
#[derive(Debug, Clone)]
pub struct SpectralEstimate {
    frequencies: Vec<f64>,
    operators: Vec<LinOperator>,
    provenance: Provenance,
}

impl SpectralEstimate {
    pub fn new(
        frequencies: Vec<f64>,
        operators: Vec<LinOperator>,
        provenance: Provenance,
    ) -> Result<Self> {
        if frequencies.is_empty() || frequencies.len() != operators.len() {
            return Err(Error::InvalidParameter {
                name: "frequencies",
                reason: format!(
                    "need matching nonempty grids, got {} frequencies and {} operators",
                    frequencies.len(),
                    operators.len()
                ),
            });
        }
        let dim = operators[0].dim();
        for op in &operators {
            if op.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: op.dim(),
                });
            }
        }
        if matches!(provenance, Provenance::ClosedForm | Provenance::Fejer { .. }) {
            for (theta, op) in frequencies.iter().zip(&operators) {
                if !op.is_nonneg_selfadjoint(1e-8)? {
                    return Err(Error::InvalidCovariance {
                        reason: format!(
                            "{provenance} spectral density at theta = {theta} is not \
                             non-negative self-adjoint within 1e-8"
                        ),
                    });
                }
            }
        }
        Ok(SpectralEstimate {
            frequencies,
            operators,
            provenance,
        })
    }

    /// Closed-form spectrum of a linear-family model on the `G`-point grid.
    pub fn closed_form(model: &ProcessModel, g: usize) -> Result<Self> {
        let grid = symmetric_grid(require_grid(g)?);
        let ops = grid
            .iter()
            .map(|&theta| spectral_density_closed_for(model, theta))
            .collect::<Result<Vec<_>>>()?;
        SpectralEstimate::new(grid, ops, Provenance::ClosedForm)
    }

    /// Lag-sum spectrum on the `G`-point grid.
    pub fn lag_sum(covs: &LagCovariances, g: usize) -> Result<Self> {
        let grid = symmetric_grid(require_grid(g)?);
        let ops = grid
            .iter()
            .map(|&theta| spectral_density_lagsum(covs, theta))
            .collect();
        SpectralEstimate::new(
            grid,
            ops,
            Provenance::LagSum {
                max_lag: covs.max_lag(),
            },
        )
    }

    /// Fejér spectrum at horizon `n` on the `G`-point grid.
    pub fn fejer(covs: &LagCovariances, n: usize, g: usize) -> Result<Self> {
        let grid = symmetric_grid(require_grid(g)?);
        let ops = grid
            .iter()
            .map(|&theta| fejer_spectral(covs, n, theta))
            .collect::<Result<Vec<_>>>()?;
        SpectralEstimate::new(grid, ops, Provenance::Fejer { n })
    }

    /// Mean periodogram over `reps` simulated paths of length `n`, one
    /// replication per stream id `1..=reps`; deterministic for any thread
    /// count (ordered pairwise reduction).
    pub fn monte_carlo(
        model: &ProcessModel,
        g: usize,
        n: usize,
        reps: usize,
        seed: u64,
    ) -> Result<Self> {
        if reps == 0 || n == 0 {
            return Err(Error::InvalidParameter {
                name: "reps",
                reason: "Monte Carlo spectrum needs reps >= 1 and n >= 1".into(),
            });
        }
        let grid = symmetric_grid(require_grid(g)?);
        let per_rep: Vec<Vec<LinOperator>> = (1..=reps as u64)
            .into_par_iter()
            .map(|r| {
                let mut rng = RngStream::new(seed, r);
                let path = model.simulate(n, &mut rng)?;
                grid.iter()
                    .map(|&theta| periodogram_op(&dft_at(&path, theta)))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let ops: Vec<LinOperator> = (0..grid.len())
            .map(|i| {
                let slices: Vec<LinOperator> =
                    per_rep.iter().map(|rep| rep[i].clone()).collect();
                pairwise_reduce(&slices, &|a: &LinOperator, b: &LinOperator| a.add(b))
                    .expect("reps >= 1")
                    .scale_real(1.0 / reps as f64)
            })
            .collect();
        SpectralEstimate::new(grid, ops, Provenance::MonteCarlo { reps, n })
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn operators(&self) -> &[LinOperator] {
        &self.operators
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn dim(&self) -> usize {
        self.operators[0].dim()
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }
}

fn require_grid(g: usize) -> Result<usize> {
    if g == 0 {
        Err(Error::InvalidParameter {
            name: "g",
            reason: "frequency grid must contain at least one point".into(),
        })
    } else {
        Ok(g)
    }
}

/// Recover `C_h = integral F_theta e^{ih theta} d theta` by the periodic
/// trapezoid rule `(2pi/G) sum_g F(theta_g) e^{ih theta_g}`, exact (to
/// rounding) when the spectrum is a trigonometric polynomial of degree below
/// `G - |h|`. The estimate must sit on the uniform symmetric grid and satisfy
/// `G >= 2|h| + 2`.
pub fn inverse_fourier_cov(est: &SpectralEstimate, h: i64) -> Result<LinOperator> {
    let g = est.len();
    let required = 2 * h.unsigned_abs() as usize + 2;
    if g < required {
        return Err(Error::GridTooCoarse { h, required, got: g });
    }
    let reference = symmetric_grid(g);
    for (a, b) in est.frequencies().iter().zip(&reference) {
        if (a - b).abs() > 1e-9 {
            return Err(Error::InvalidParameter {
                name: "est",
                reason: format!(
                    "inverse Fourier recovery needs the uniform symmetric grid; \
                     found frequency {a}, expected {b}"
                ),
            });
        }
    }
    let mut acc = LinOperator::zeros(est.dim());
    for (&theta, op) in est.frequencies().iter().zip(est.operators()) {
        acc.add_assign_scaled(op, Complex64::cis(h as f64 * theta));
    }
    Ok(acc.scale_real(2.0 * PI / g as f64))
}
