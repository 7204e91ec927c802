//! Martingale-difference projections of linear processes and the exact
//! decomposition of the DFT into a martingale part plus a conditional
//! remainder.
//!
//! With the innovation filtration `G_k = sigma(e_k, e_{k-1}, ...)`, the
//! projection `P_k = E[. | G_k] - E[. | G_{k-1}]` applied to a linear process
//! gives `P_0(X_t) = Psi_t(e_0)` (zero for `t < 0` or beyond the model
//! order). Two index conventions coexist on purpose, both documented: the
//! partial sums `sqrt(2pi) Z_n(theta) = sum_{t=0}^{n} P_0(X_t) e^{-it theta}`
//! run over `t = 0..n` inclusive, while the decomposition
//!
//! `S_n(theta) = sqrt(2pi) sum_{k=1}^{n} Z^{(k)}_{n-k}(theta) e^{-ik theta}
//!  + E[S_n(theta) | G_0]`
//!
//! sums over `k = 1..n`. For finite-order models every conditional
//! expectation is a finite sum over retained innovations, so both sides are
//! computed exactly — no nested simulation anywhere.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::dft::dft_at;
use crate::error::{Error, Result};
use crate::hilbert::{FunctionVector, LinOperator};
use crate::models::{LinearModel, ProcessModel};
use crate::numeric::{least_squares_slope, mean, pairwise_sum};
use crate::rng::RngStream;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Value of `P_0(X_t)` for a linear model, together with a flag marking the
/// pre-sample case `t < 0` where adaptedness forces the projection to vanish.
#[derive(Debug, Clone, PartialEq)]
pub struct P0Term {
    pub vector: FunctionVector,
    /// `true` iff `t < 0` (the value is then exactly zero).
    pub vanishes_by_adaptedness: bool,
}

/// `P_0(X_t) = Psi_t(eps0)`; exactly zero beyond the model order, and zero
/// with the adaptedness flag set for `t < 0`.
pub fn p0_linear(model: &LinearModel, t: i64, eps0: &FunctionVector) -> Result<P0Term> {
    if eps0.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: eps0.dim(),
        });
    }
    if t < 0 {
        return Ok(P0Term {
            vector: FunctionVector::zeros(model.dim()),
            vanishes_by_adaptedness: true,
        });
    }
    let vector = if (t as usize) <= model.order() {
        model.psi()[t as usize].apply(eps0)?
    } else {
        FunctionVector::zeros(model.dim())
    };
    Ok(P0Term {
        vector,
        vanishes_by_adaptedness: false,
    })
}

/// The projection series at one frequency: `terms[t] = P_0(X_t) e^{-it theta}`
/// for `t = 0..=n`, with cumulative sums scaled by `1/sqrt(2pi)` so that
/// `partial_sums[t]` is the partial-sum process `Z_t(theta)`.
#[derive(Debug, Clone)]
pub struct ProjectionSeries {
    pub theta: f64,
    pub terms: Vec<FunctionVector>,
    pub partial_sums: Vec<FunctionVector>,
}

impl ProjectionSeries {
    pub fn for_linear(
        model: &LinearModel,
        theta: f64,
        n: usize,
        eps0: &FunctionVector,
    ) -> Result<Self> {
        let scale = Complex64::new(1.0 / TWO_PI.sqrt(), 0.0);
        let mut terms = Vec::with_capacity(n + 1);
        let mut partial_sums = Vec::with_capacity(n + 1);
        let mut acc = FunctionVector::zeros(model.dim());
        for t in 0..=n {
            let term = p0_linear(model, t as i64, eps0)?
                .vector
                .scale(Complex64::cis(-(t as f64) * theta));
            acc = acc.add(&term);
            terms.push(term);
            partial_sums.push(acc.scale(scale));
        }
        Ok(ProjectionSeries {
            theta,
            terms,
            partial_sums,
        })
    }
}

/// `Z_n(theta) = (1/sqrt(2pi)) sum_{t=0}^{n} Psi_t(eps0) e^{-it theta}`;
/// stabilizes exactly once `n` reaches the model order.
pub fn z_n(model: &LinearModel, theta: f64, n: usize, eps0: &FunctionVector) -> Result<FunctionVector> {
    let mut acc = FunctionVector::zeros(model.dim());
    for t in 0..=n.min(model.order()) {
        let term = p0_linear(model, t as i64, eps0)?.vector;
        acc.add_assign_scaled(&term, Complex64::cis(-(t as f64) * theta));
    }
    Ok(acc.scale(Complex64::new(1.0 / TWO_PI.sqrt(), 0.0)))
}

/// Covariance of the limit `Z^{(0)}(theta)`: the double sum
/// `(1/2pi) sum_{s,t} e^{-i(t-s)theta} Psi_t V Psi_s^*`.
///
/// This is the same operator as the closed-form spectral density, computed
/// through a deliberately different code path (term-by-term double sum versus
/// factored transfer function); the two must agree to 1e-14.
pub fn z_limit_variance(model: &LinearModel, theta: f64) -> LinOperator {
    let v = model.innovations().covariance();
    let k = model.order();
    let mut acc = LinOperator::zeros(model.dim());
    for t in 0..=k {
        let left = model.psi()[t].compose(v).expect("model dims");
        for s in 0..=k {
            let term = left
                .compose(&model.psi()[s].adjoint())
                .expect("model dims");
            let phase = Complex64::cis(-((t as f64) - (s as f64)) * theta);
            acc.add_assign_scaled(&term, phase);
        }
    }
    acc.scale_real(1.0 / TWO_PI)
}

/// The (A3) diagnostic: the sequence `nu_2(P_0(X_t))`, `t = 0..=t_max`, its
/// partial sum, and a fitted log-linear decay slope (over the strictly
/// positive terms; `None` if fewer than two).
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct A3Report {
    pub terms: Vec<f64>,
    pub partial_sum: f64,
    pub fitted_log_slope: Option<f64>,
}

fn fit_log_slope(terms: &[f64], offset: usize) -> Option<f64> {
    let pts: Vec<(f64, f64)> = terms
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > 0.0)
        .map(|(i, &v)| ((i + offset) as f64, v.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    least_squares_slope(&xs, &ys)
}

/// Estimate `nu_2(X_0 - X_0^(m)) = sqrt(E ||X_0 - X_0^(m)||^2)` from `reps`
/// coupled draws on stream ids `stream_base + 1 ..= stream_base + reps`.
fn coupled_nu2(model: &ProcessModel, m: usize, reps: usize, seed: u64, stream_base: u64) -> f64 {
    let sq: Vec<f64> = (1..=reps as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = RngStream::new(seed, stream_base + r);
            let (x, x_m) = model.couple_with_shared(m, &mut rng);
            x.sub(&x_m).norm_sq()
        })
        .collect();
    mean(&sq).sqrt()
}

/// The summability condition (A3): `sum_t nu_2(P_0(X_t)) < infinity`.
///
/// Linear families get the exact terms `sqrt(tr(Psi_t V Psi_t^*))` (and
/// `reps` is ignored); for ARCH the terms are the dominating bound
/// `2 nu_2(X_0 - X_0^(t))` estimated from `reps` coupled draws per `t`
/// (`t = 0` uses fully independent copies).
pub fn a3_sum(model: &ProcessModel, t_max: usize, reps: usize, seed: u64) -> Result<A3Report> {
    if t_max == 0 {
        return Err(Error::InvalidParameter {
            name: "t_max",
            reason: "need at least the terms t = 0 and t = 1".into(),
        });
    }
    let terms: Vec<f64> = match model {
        ProcessModel::Linear(_) | ProcessModel::DependentError(_) => {
            let linear = match model {
                ProcessModel::Linear(m) => m,
                ProcessModel::DependentError(m) => m.composed(),
                _ => unreachable!(),
            };
            let v = linear.innovations().covariance();
            (0..=t_max)
                .map(|t| {
                    if t > linear.order() {
                        return 0.0;
                    }
                    let psi_t = &linear.psi()[t];
                    let sq = psi_t
                        .compose(v)
                        .and_then(|pv| pv.compose(&psi_t.adjoint()))
                        .expect("model dims")
                        .trace()
                        .re;
                    sq.max(0.0).sqrt()
                })
                .collect()
        }
        ProcessModel::Arch(_) => {
            if reps == 0 {
                return Err(Error::InvalidParameter {
                    name: "reps",
                    reason: "ARCH (A3) terms need at least one coupled draw".into(),
                });
            }
            (0..=t_max)
                .map(|t| {
                    let base = (t as u64) * reps as u64;
                    2.0 * coupled_nu2(model, t, reps, seed, base)
                })
                .collect()
        }
    };
    let partial_sum = pairwise_sum(&terms);
    let fitted_log_slope = fit_log_slope(&terms, 0);
    Ok(A3Report {
        terms,
        partial_sum,
        fitted_log_slope,
    })
}

/// Both sides of the decomposition of `S_n(theta)` for one simulated path,
/// reconstructed exactly from the retained innovations.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct DecompositionReport {
    pub theta: f64,
    pub n: usize,
    pub dft_norm: f64,
    pub martingale_norm: f64,
    pub conditional_norm: f64,
    /// `||S_n - (martingale + conditional)|| / (1 + ||S_n||)`.
    pub residual_rel: f64,
    /// `||E[S_n | G_0]||^2 / n`, the (A2) ratio for this path.
    pub conditional_ratio: f64,
}

/// Simulate one path with its innovations and evaluate both sides of the
/// decomposition: the martingale part
/// `sum_{k=1}^n e^{-ik theta} sum_{u=0}^{min(n-k, K)} Psi_u(e_k) e^{-iu theta}`
/// and the conditional part
/// `E[S_n | G_0] = sum_{t=1}^n e^{-it theta} sum_{j=t}^{K} Psi_j(e_{t-j})`
/// (all referenced innovations have index <= 0, hence are G_0-measurable).
pub fn decomposition_check(
    model: &LinearModel,
    theta: f64,
    n: usize,
    rng: &mut RngStream,
) -> Result<DecompositionReport> {
    let (path, eps) = model.simulate_with_innovations(n, rng)?;
    let k = model.order();
    let d = model.dim();
    // eps[i] holds e_{i + 1 - K}
    let eps_at = |idx: i64| -> &FunctionVector { &eps[(idx + k as i64 - 1) as usize] };

    let s_n = dft_at(&path, theta).value;

    let mut martingale = FunctionVector::zeros(d);
    for t in 1..=n {
        let e_t = eps_at(t as i64);
        let mut z_term = FunctionVector::zeros(d);
        for u in 0..=(n - t).min(k) {
            z_term.add_assign_scaled(
                &model.psi()[u].apply(e_t)?,
                Complex64::cis(-(u as f64) * theta),
            );
        }
        martingale.add_assign_scaled(&z_term, Complex64::cis(-(t as f64) * theta));
    }

    let mut conditional = FunctionVector::zeros(d);
    for t in 1..=n.min(k) {
        let mut inner = FunctionVector::zeros(d);
        for j in t..=k {
            inner = inner.add(&model.psi()[j].apply(eps_at(t as i64 - j as i64))?);
        }
        conditional.add_assign_scaled(&inner, Complex64::cis(-(t as f64) * theta));
    }

    let recombined = martingale.add(&conditional);
    let residual_rel = s_n.sub(&recombined).norm() / (1.0 + s_n.norm());
    Ok(DecompositionReport {
        theta,
        n,
        dft_norm: s_n.norm(),
        martingale_norm: martingale.norm(),
        conditional_norm: conditional.norm(),
        residual_rel,
        conditional_ratio: conditional.norm_sq() / n as f64,
    })
}

/// Mean of the (A2) ratio `||E[S_n | G_0]||^2 / n` over `reps` paths at one
/// `n`, with the finite-order envelope `4 kappa^2 tr(V) / n` for context.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct A2Point {
    pub n: usize,
    pub mean_ratio: f64,
    pub envelope: f64,
}

/// The (A2) decay diagnostic: `n |-> mean ||E[S_n | G_0]||^2 / n` across the
/// given path lengths, `reps` independent paths each. Replication `r` at the
/// `i`-th length draws from stream id `i * reps + r`.
pub fn a2_decay(
    model: &LinearModel,
    theta: f64,
    ns: &[usize],
    reps: usize,
    seed: u64,
) -> Result<Vec<A2Point>> {
    if ns.is_empty() || reps == 0 {
        return Err(Error::InvalidParameter {
            name: "ns",
            reason: "need at least one path length and one replication".into(),
        });
    }
    let envelope_scale =
        4.0 * model.kappa()?.powi(2) * model.innovations().covariance().trace().re;
    ns.iter()
        .enumerate()
        .map(|(i, &n)| {
            let ratios: Vec<f64> = (1..=reps as u64)
                .into_par_iter()
                .map(|r| {
                    let mut rng = RngStream::new(seed, i as u64 * reps as u64 + r);
                    decomposition_check(model, theta, n, &mut rng).map(|rep| rep.conditional_ratio)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(A2Point {
                n,
                mean_ratio: mean(&ratios),
                envelope: envelope_scale / n as f64,
            })
        })
        .collect()
}

/// The m-approximability decay diagnostic: `nu_2(X_0 - X_0^(m))` across the
/// given coupling orders, with a fitted log-linear slope.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct MApproxReport {
    pub ms: Vec<usize>,
    pub nu2: Vec<f64>,
    pub fitted_log_slope: Option<f64>,
}

/// Estimate the coupling errors `nu_2(X_0 - X_0^(m))` for each `m` in `ms`
/// (each `m >= 1`) from `reps` coupled draws; the slope is fitted on
/// `ln nu_2` against `m` over the strictly positive entries.
pub fn m_approx_decay(
    model: &ProcessModel,
    ms: &[usize],
    reps: usize,
    seed: u64,
) -> Result<MApproxReport> {
    if ms.is_empty() || reps == 0 {
        return Err(Error::InvalidParameter {
            name: "ms",
            reason: "need at least one coupling order and one replication".into(),
        });
    }
    if ms.contains(&0) {
        return Err(Error::InvalidParameter {
            name: "ms",
            reason: "coupling order must be at least 1".into(),
        });
    }
    let nu2: Vec<f64> = ms
        .iter()
        .enumerate()
        .map(|(i, &m)| coupled_nu2(model, m, reps, seed, i as u64 * reps as u64))
        .collect();
    let pts: Vec<(f64, f64)> = ms
        .iter()
        .zip(&nu2)
        .filter(|(_, &v)| v > 0.0)
        .map(|(&m, &v)| (m as f64, v.ln()))
        .collect();
    let fitted_log_slope = if pts.len() < 2 {
        None
    } else {
        let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
        least_squares_slope(&xs, &ys)
    };
    Ok(MApproxReport {
        ms: ms.to_vec(),
        nu2,
        fitted_log_slope,
    })
}
