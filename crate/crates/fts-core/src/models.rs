//! Simulators for the stationary process families under study.
//!
//! All models produce mean-zero stationary sequences in `C^d` (with real
//! sample paths) driven by iid innovations:
//!
//! * [`LinearModel`] — finite-order moving averages `X_t = sum_k Psi_k e_{t-k}`,
//!   including white noise and geometrically decaying coefficient sequences;
//! * [`DependentErrorLinearModel`] — a linear filter applied to errors that
//!   are themselves a linear process; simulation and second-order quantities
//!   go through the exact composed (convolved) coefficient sequence;
//! * [`ArchModel`] — a coordinatewise ARCH recursion `X_t = e_t ⊙ s_t`,
//!   `s_t^2 = delta + B X_{t-1}^2`, stationary under a mean-square
//!   contraction condition.
//!
//! Innovation draws are always made in chronological order and exactly as
//! many as needed, so paths are reproducible from `(seed, stream)` alone and
//! martingale decompositions can re-associate each draw with its time index.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::hilbert::{CovarianceFactor, FunctionVector, LinOperator, COVARIANCE_TOL};
use crate::rng::RngStream;

/// Marginal law of the standardized innovation coordinates (each has mean 0
/// and variance 1; the covariance structure comes from the
/// [`InnovationSpec`] factor).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InnovationDistribution {
    Gaussian,
    /// Uniform on `[-sqrt(3), sqrt(3)]`.
    ScaledUniform,
    /// Symmetric signs `±1`.
    ScaledRademacher,
}

impl InnovationDistribution {
    pub fn label(&self) -> &'static str {
        match self {
            InnovationDistribution::Gaussian => "gaussian",
            InnovationDistribution::ScaledUniform => "scaled-uniform",
            InnovationDistribution::ScaledRademacher => "scaled-rademacher",
        }
    }
}

/// Distribution of one innovation `e_t`: a real covariance operator together
/// with the marginal law of the standardized coordinates.
#[derive(Debug, Clone)]
pub struct InnovationSpec {
    covariance: LinOperator,
    distribution: InnovationDistribution,
    factor: CovarianceFactor,
}

impl InnovationSpec {
    /// Validates that `covariance` is real, self-adjoint and non-negative
    /// (within the crate-wide covariance tolerance) and precomputes its
    /// square-root factor.
    pub fn new(covariance: LinOperator, distribution: InnovationDistribution) -> Result<Self> {
        let factor = CovarianceFactor::new(&covariance, COVARIANCE_TOL)?;
        Ok(InnovationSpec {
            covariance,
            distribution,
            factor,
        })
    }

    /// Identity covariance with the given marginal law.
    pub fn standard(dim: usize, distribution: InnovationDistribution) -> Self {
        InnovationSpec::new(LinOperator::identity(dim), distribution)
            .expect("identity covariance is always valid")
    }

    pub fn dim(&self) -> usize {
        self.covariance.dim()
    }

    pub fn covariance(&self) -> &LinOperator {
        &self.covariance
    }

    pub fn distribution(&self) -> InnovationDistribution {
        self.distribution
    }

    /// Draw one innovation as real coordinates.
    pub fn sample_coords(&self, rng: &mut RngStream) -> Vec<f64> {
        let d = self.dim();
        let w: Vec<f64> = (0..d)
            .map(|_| match self.distribution {
                InnovationDistribution::Gaussian => rng.standard_normal(),
                InnovationDistribution::ScaledUniform => rng.scaled_uniform(),
                InnovationDistribution::ScaledRademacher => rng.rademacher(),
            })
            .collect();
        self.factor.apply(&w)
    }

    pub fn sample(&self, rng: &mut RngStream) -> FunctionVector {
        FunctionVector::from_real(&self.sample_coords(rng))
    }
}

/// One simulated stretch `X_1, ..., X_n`; index `s` of [`observations`]
/// holds `X_{s+1}`.
///
/// [`observations`]: SamplePath::observations
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    observations: Vec<FunctionVector>,
}

impl SamplePath {
    pub fn new(observations: Vec<FunctionVector>) -> Result<Self> {
        let n = observations.len();
        if n == 0 {
            return Err(Error::InvalidParameter {
                name: "observations",
                reason: "a sample path must contain at least one observation".into(),
            });
        }
        let d = observations[0].dim();
        for (t, x) in observations.iter().enumerate() {
            if x.dim() != d {
                return Err(Error::InvalidParameter {
                    name: "observations",
                    reason: format!("observation {t} has dimension {}, expected {d}", x.dim()),
                });
            }
        }
        Ok(SamplePath { observations })
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.observations[0].dim()
    }

    pub fn observations(&self) -> &[FunctionVector] {
        &self.observations
    }
}

/// Finite-order linear process `X_t = sum_{k=0}^K Psi_k e_{t-k}` with iid
/// innovations.
#[derive(Debug, Clone)]
pub struct LinearModel {
    psi: Vec<LinOperator>,
    innovations: InnovationSpec,
}

impl LinearModel {
    /// `psi[k]` is the coefficient of lag `k`; the order is `psi.len() - 1`.
    pub fn new(psi: Vec<LinOperator>, innovations: InnovationSpec) -> Result<Self> {
        if psi.is_empty() {
            return Err(Error::InvalidParameter {
                name: "psi",
                reason: "at least one coefficient (lag 0) is required".into(),
            });
        }
        let d = innovations.dim();
        for (k, op) in psi.iter().enumerate() {
            if op.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: op.dim(),
                });
            }
            let _ = k;
        }
        Ok(LinearModel { psi, innovations })
    }

    /// `X_t = e_t`.
    pub fn white_noise(innovations: InnovationSpec) -> Self {
        let d = innovations.dim();
        LinearModel {
            psi: vec![LinOperator::identity(d)],
            innovations,
        }
    }

    /// Geometrically decaying coefficients `Psi_k = rho^k * base`, truncated
    /// at the smallest order `K` whose operator-norm tail
    /// `||base|| rho^(K+1) / (1 - rho)` falls below `tail_tol`.
    pub fn geometric(
        base: LinOperator,
        rho: f64,
        innovations: InnovationSpec,
        tail_tol: f64,
    ) -> Result<Self> {
        if !(0.0 < rho && rho < 1.0) {
            return Err(Error::InvalidParameter {
                name: "rho",
                reason: format!("decay rate must lie in (0, 1), got {rho}"),
            });
        }
        if tail_tol <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "tail_tol",
                reason: format!("tail tolerance must be positive, got {tail_tol}"),
            });
        }
        let base_norm = base.op_norm()?;
        let mut order = 0usize;
        let mut tail = base_norm * rho / (1.0 - rho); // tail beyond lag `order`
        while tail > tail_tol {
            order += 1;
            tail *= rho;
            if order > 100_000 {
                return Err(Error::InvalidParameter {
                    name: "tail_tol",
                    reason: "tail tolerance unreachable within 100000 lags".into(),
                });
            }
        }
        let mut psi = Vec::with_capacity(order + 1);
        let mut coeff = 1.0;
        for _ in 0..=order {
            psi.push(base.scale_real(coeff));
            coeff *= rho;
        }
        LinearModel::new(psi, innovations)
    }

    /// Moving-average order `K` (index of the last coefficient).
    pub fn order(&self) -> usize {
        self.psi.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.innovations.dim()
    }

    pub fn psi(&self) -> &[LinOperator] {
        &self.psi
    }

    pub fn innovations(&self) -> &InnovationSpec {
        &self.innovations
    }

    /// Coefficient summability functional `sum_k ||Psi_k||_op`.
    pub fn kappa(&self) -> Result<f64> {
        let mut s = 0.0;
        for op in &self.psi {
            s += op.op_norm()?;
        }
        Ok(s)
    }

    /// Exact lag covariance `C_h = E[X_h (tensor) X_0] = sum_k Psi_{k+h} V Psi_k^*`;
    /// zero beyond the model order, adjoint symmetry `C_{-h} = C_h^*` exact by
    /// construction.
    pub fn theoretical_cov(&self, h: i64) -> LinOperator {
        let d = self.dim();
        let k_max = self.order() as i64;
        if h < 0 {
            return self.theoretical_cov(-h).adjoint();
        }
        if h > k_max {
            return LinOperator::zeros(d);
        }
        let v = self.innovations.covariance();
        let mut acc = LinOperator::zeros(d);
        for k in 0..=(k_max - h) {
            let left = &self.psi[(k + h) as usize];
            let right = &self.psi[k as usize];
            let term = left
                .compose(v)
                .and_then(|lv| lv.compose(&right.adjoint()))
                .expect("dimensions validated at construction");
            acc.add_assign(&term);
        }
        acc
    }

    /// Simulate `X_1, ..., X_n` using exactly `order + n` innovation draws
    /// `e_{1-K}, ..., e_n` in chronological order.
    pub fn simulate(&self, n: usize, rng: &mut RngStream) -> Result<SamplePath> {
        Ok(self.simulate_with_innovations(n, rng)?.0)
    }

    /// Like [`simulate`](Self::simulate) but also returns the innovations;
    /// entry `i` of the returned vector is `e_{i + 1 - K}`.
    pub fn simulate_with_innovations(
        &self,
        n: usize,
        rng: &mut RngStream,
    ) -> Result<(SamplePath, Vec<FunctionVector>)> {
        if n == 0 {
            return Err(Error::InvalidParameter {
                name: "n",
                reason: "path length must be at least 1".into(),
            });
        }
        let k = self.order();
        let eps: Vec<FunctionVector> = (0..k + n)
            .map(|_| self.innovations.sample(rng))
            .collect();
        let mut observations = Vec::with_capacity(n);
        for t in 1..=n {
            // X_t = sum_j Psi_j e_{t-j}; eps[i] holds e_{i+1-K}
            let mut x = FunctionVector::zeros(self.dim());
            for (j, psi_j) in self.psi.iter().enumerate() {
                let idx = t + k - 1 - j; // (t - j) + K - 1
                x = x.add(&psi_j.apply(&eps[idx])?);
            }
            observations.push(x);
        }
        Ok((SamplePath::new(observations)?, eps))
    }

    /// Draw `(X_0, X_0^(m))`: `X_0` together with its `m`-dependent coupling
    /// that shares the `m` most recent innovations and replaces all older
    /// ones by independent copies. For `m > K` the two outputs coincide.
    pub(crate) fn couple_with_shared(
        &self,
        m: usize,
        rng: &mut RngStream,
    ) -> (FunctionVector, FunctionVector) {
        let k = self.order();
        let d = self.dim();
        // lag index j contributes Psi_j e_{-j}; lags j < m are shared
        let n_shared = m.min(k + 1);
        let shared: Vec<FunctionVector> = (0..n_shared)
            .map(|_| self.innovations.sample(rng))
            .collect();
        let n_indep = (k + 1).saturating_sub(m);
        let tail_a: Vec<FunctionVector> = (0..n_indep)
            .map(|_| self.innovations.sample(rng))
            .collect();
        let tail_b: Vec<FunctionVector> = (0..n_indep)
            .map(|_| self.innovations.sample(rng))
            .collect();
        let mut x = FunctionVector::zeros(d);
        let mut x_m = FunctionVector::zeros(d);
        for (j, psi_j) in self.psi.iter().enumerate() {
            let (ea, eb) = if j < m {
                (&shared[j], &shared[j])
            } else {
                (&tail_a[j - m], &tail_b[j - m])
            };
            x = x.add(&psi_j.apply(ea).expect("dims validated"));
            x_m = x_m.add(&psi_j.apply(eb).expect("dims validated"));
        }
        (x, x_m)
    }
}

/// Linear filter applied to errors that are themselves a linear process:
/// `X_t = sum_k Psi_k d_{t-k}` with `d_t = sum_j Phi_j e_{t-j}`.
///
/// Substituting the driver gives an exact finite-order linear model in the
/// iid innovations with convolved coefficients
/// `Theta_m = sum_{k+j=m} Psi_k Phi_j`; all simulation and second-order
/// structure is delegated to that composition.
#[derive(Debug, Clone)]
pub struct DependentErrorLinearModel {
    psi: Vec<LinOperator>,
    driver: LinearModel,
    composed: LinearModel,
}

impl DependentErrorLinearModel {
    pub fn new(psi: Vec<LinOperator>, driver: LinearModel) -> Result<Self> {
        if psi.is_empty() {
            return Err(Error::InvalidParameter {
                name: "psi",
                reason: "at least one filter coefficient (lag 0) is required".into(),
            });
        }
        let d = driver.dim();
        for op in &psi {
            if op.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: op.dim(),
                });
            }
        }
        let order = psi.len() - 1 + driver.order();
        let mut theta = vec![LinOperator::zeros(d); order + 1];
        for (k, psi_k) in psi.iter().enumerate() {
            for (j, phi_j) in driver.psi().iter().enumerate() {
                theta[k + j].add_assign(&psi_k.compose(phi_j)?);
            }
        }
        let composed = LinearModel::new(theta, driver.innovations().clone())?;
        Ok(DependentErrorLinearModel {
            psi,
            driver,
            composed,
        })
    }

    pub fn dim(&self) -> usize {
        self.driver.dim()
    }

    pub fn psi(&self) -> &[LinOperator] {
        &self.psi
    }

    pub fn driver(&self) -> &LinearModel {
        &self.driver
    }

    /// The equivalent finite-order linear model in the iid innovations.
    pub fn composed(&self) -> &LinearModel {
        &self.composed
    }

    pub fn theoretical_cov(&self, h: i64) -> LinOperator {
        self.composed.theoretical_cov(h)
    }

    pub fn simulate(&self, n: usize, rng: &mut RngStream) -> Result<SamplePath> {
        self.composed.simulate(n, rng)
    }
}

/// Coordinatewise ARCH recursion `X_t = e_t ⊙ s_t`,
/// `s_t^2 = delta + B (X_{t-1}^2)` (squares taken coordinatewise).
///
/// Requires the mean-square contraction `||B||_op * max_j V_jj < 1`, which
/// guarantees a stationary solution with `E||X_t||^2 < ∞`; simulation runs a
/// burn-in (default 500 steps) from the stationary mean of `s_t^2`.
#[derive(Debug, Clone)]
pub struct ArchModel {
    delta: Vec<f64>,
    beta: Array2<f64>,
    innovations: InnovationSpec,
    burn_in: usize,
    contraction: f64,
    sigma2_mean: Vec<f64>,
}

pub const ARCH_DEFAULT_BURN_IN: usize = 500;

impl ArchModel {
    pub fn new(delta: Vec<f64>, beta: LinOperator, innovations: InnovationSpec) -> Result<Self> {
        let d = innovations.dim();
        if delta.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: delta.len(),
            });
        }
        if beta.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: beta.dim(),
            });
        }
        if delta.iter().any(|&x| !(x > 0.0)) {
            return Err(Error::InvalidParameter {
                name: "delta",
                reason: "baseline volatility must be strictly positive in every coordinate".into(),
            });
        }
        if beta.max_abs_imag() > 0.0 {
            return Err(Error::InvalidParameter {
                name: "beta",
                reason: "ARCH coefficient operator must be real".into(),
            });
        }
        let beta_real = Array2::from_shape_fn((d, d), |(i, j)| beta.entry(i, j).re);
        if beta_real.iter().any(|&x| x < 0.0) {
            return Err(Error::InvalidParameter {
                name: "beta",
                reason: "ARCH coefficient operator must have non-negative entries".into(),
            });
        }
        let v_diag: Vec<f64> = (0..d).map(|j| innovations.covariance().entry(j, j).re).collect();
        let v_max = v_diag.iter().cloned().fold(0.0f64, f64::max);
        let contraction = beta.op_norm()? * v_max;
        if contraction >= 1.0 {
            return Err(Error::ArchNotContractive {
                factor: contraction,
            });
        }
        // stationary mean of s^2: mu = delta + B (v ⊙ mu), a contraction
        let mut mu = delta.clone();
        for _ in 0..10_000 {
            let mut next = delta.clone();
            for i in 0..d {
                let mut acc = 0.0;
                for j in 0..d {
                    acc += beta_real[(i, j)] * v_diag[j] * mu[j];
                }
                next[i] += acc;
            }
            let diff: f64 = next
                .iter()
                .zip(&mu)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            mu = next;
            if diff < 1e-14 {
                break;
            }
        }
        Ok(ArchModel {
            delta,
            beta: beta_real,
            innovations,
            burn_in: ARCH_DEFAULT_BURN_IN,
            contraction,
            sigma2_mean: mu,
        })
    }

    pub fn with_burn_in(mut self, burn_in: usize) -> Self {
        self.burn_in = burn_in;
        self
    }

    pub fn dim(&self) -> usize {
        self.innovations.dim()
    }

    pub fn innovations(&self) -> &InnovationSpec {
        &self.innovations
    }

    pub fn burn_in(&self) -> usize {
        self.burn_in
    }

    /// `||B||_op * max_j V_jj`, strictly below 1 for valid models.
    pub fn contraction_factor(&self) -> f64 {
        self.contraction
    }

    /// Stationary mean of the squared volatility `s_t^2`.
    pub fn sigma2_mean(&self) -> &[f64] {
        &self.sigma2_mean
    }

    fn step(&self, sigma2: &mut [f64], eps: &[f64]) -> Vec<f64> {
        let d = self.dim();
        let x: Vec<f64> = (0..d).map(|j| eps[j] * sigma2[j].sqrt()).collect();
        let mut next = self.delta.clone();
        for i in 0..d {
            let mut acc = 0.0;
            for j in 0..d {
                acc += self.beta[(i, j)] * x[j] * x[j];
            }
            next[i] += acc;
        }
        sigma2.copy_from_slice(&next);
        x
    }

    /// Simulate `X_1, ..., X_n` after a burn-in from the stationary mean of
    /// `s_t^2`; uses exactly `burn_in + n` innovation draws.
    pub fn simulate(&self, n: usize, rng: &mut RngStream) -> Result<SamplePath> {
        if n == 0 {
            return Err(Error::InvalidParameter {
                name: "n",
                reason: "path length must be at least 1".into(),
            });
        }
        let mut sigma2 = self.sigma2_mean.clone();
        for _ in 0..self.burn_in {
            let eps = self.innovations.sample_coords(rng);
            let _ = self.step(&mut sigma2, &eps);
        }
        let mut observations = Vec::with_capacity(n);
        for _ in 0..n {
            let eps = self.innovations.sample_coords(rng);
            observations.push(FunctionVector::from_real(&self.step(&mut sigma2, &eps)));
        }
        Ok(SamplePath::new(observations)?)
    }

    /// Draw `(X_0, X_0^(m))`: two copies of the recursion sharing the `m`
    /// most recent innovations and independent before that, both started
    /// `burn_in + 1` steps back from the stationary mean of `s_t^2`. `m = 0`
    /// produces fully independent copies; `m > burn_in` identical ones.
    pub(crate) fn couple_with_shared(
        &self,
        m: usize,
        rng: &mut RngStream,
    ) -> (FunctionVector, FunctionVector) {
        let total = self.burn_in + 1; // innovations at times -burn_in .. 0
        let n_shared = m.min(total);
        let n_indep = total - n_shared;
        let indep_a: Vec<Vec<f64>> = (0..n_indep)
            .map(|_| self.innovations.sample_coords(rng))
            .collect();
        let indep_b: Vec<Vec<f64>> = (0..n_indep)
            .map(|_| self.innovations.sample_coords(rng))
            .collect();
        let shared: Vec<Vec<f64>> = (0..n_shared)
            .map(|_| self.innovations.sample_coords(rng))
            .collect();
        let run = |head: &[Vec<f64>]| -> FunctionVector {
            let mut sigma2 = self.sigma2_mean.clone();
            let mut last = vec![0.0; self.dim()];
            for eps in head.iter().chain(shared.iter()) {
                last = self.step(&mut sigma2, eps);
            }
            FunctionVector::from_real(&last)
        };
        (run(&indep_a), run(&indep_b))
    }
}

/// Any of the supported process families, for APIs that are generic over the
/// data-generating mechanism.
#[derive(Debug, Clone)]
pub enum ProcessModel {
    Linear(LinearModel),
    DependentError(DependentErrorLinearModel),
    Arch(ArchModel),
}

impl ProcessModel {
    pub fn dim(&self) -> usize {
        match self {
            ProcessModel::Linear(m) => m.dim(),
            ProcessModel::DependentError(m) => m.dim(),
            ProcessModel::Arch(m) => m.dim(),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            ProcessModel::Linear(_) => "linear",
            ProcessModel::DependentError(_) => "dependent-error",
            ProcessModel::Arch(_) => "arch",
        }
    }

    pub fn simulate(&self, n: usize, rng: &mut RngStream) -> Result<SamplePath> {
        match self {
            ProcessModel::Linear(m) => m.simulate(n, rng),
            ProcessModel::DependentError(m) => m.simulate(n, rng),
            ProcessModel::Arch(m) => m.simulate(n, rng),
        }
    }

    /// Exact lag covariance where one is available (linear families).
    pub fn theoretical_cov(&self, h: i64) -> Result<LinOperator> {
        match self {
            ProcessModel::Linear(m) => Ok(m.theoretical_cov(h)),
            ProcessModel::DependentError(m) => Ok(m.theoretical_cov(h)),
            ProcessModel::Arch(_) => Err(Error::UnsupportedReference {
                wanted: "exact lag covariance",
                model: "arch",
            }),
        }
    }

    /// Draw `(X_0, X_0^(m))` with the `m` most recent innovations shared.
    /// Requires `m >= 1`; fully independent copies are not part of the
    /// public coupling contract.
    pub fn couple_m_approximation(
        &self,
        m: usize,
        rng: &mut RngStream,
    ) -> Result<(FunctionVector, FunctionVector)> {
        if m == 0 {
            return Err(Error::InvalidParameter {
                name: "m",
                reason: "coupling order must be at least 1".into(),
            });
        }
        Ok(self.couple_with_shared(m, rng))
    }

    pub(crate) fn couple_with_shared(
        &self,
        m: usize,
        rng: &mut RngStream,
    ) -> (FunctionVector, FunctionVector) {
        match self {
            ProcessModel::Linear(model) => model.couple_with_shared(m, rng),
            ProcessModel::DependentError(model) => model.composed().couple_with_shared(m, rng),
            ProcessModel::Arch(model) => model.couple_with_shared(m, rng),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::tensor;

    /// Empirical mean of `X_t (tensor) X_t` over a path (the `h = 0` sample
    /// covariance with divisor `n`).
    fn path_second_moment(path: &SamplePath) -> LinOperator {
        let mut acc = LinOperator::zeros(path.dim());
        for x in path.observations() {
            acc.add_assign(&tensor(x, x).expect("path dims are uniform"));
        }
        acc.scale_real(1.0 / path.len() as f64)
    }

    fn scalar_op(x: f64) -> LinOperator {
        LinOperator::from_real_rows(&[vec![x]]).unwrap()
    }

    /// Scalar MA(1) with psi = (1, 0.5) and unit innovation variance.
    fn scalar_ma1() -> LinearModel {
        LinearModel::new(
            vec![scalar_op(1.0), scalar_op(0.5)],
            InnovationSpec::standard(1, InnovationDistribution::Gaussian),
        )
        .unwrap()
    }

    #[test]
    fn scalar_ma1_covariances_match_the_convolution_oracle() {
        // oracle: C_h = sum_k psi_{k+h} psi_k for psi = (1, 0.5)
        let psi = [1.0, 0.5];
        let oracle = |h: usize| -> f64 {
            (0..psi.len() - h).map(|k| psi[k + h] * psi[k]).sum()
        };
        let model = scalar_ma1();
        assert_eq!(model.theoretical_cov(0).entry(0, 0).re, oracle(0)); // 1.25
        assert_eq!(model.theoretical_cov(1).entry(0, 0).re, oracle(1)); // 0.5
        assert_eq!(model.theoretical_cov(2).hs_norm(), 0.0);
        assert_eq!(
            model.theoretical_cov(-1).entry(0, 0),
            model.theoretical_cov(1).adjoint().entry(0, 0)
        );
    }

    #[test]
    fn simulation_consumes_exactly_order_plus_n_draws_in_order() {
        let model = scalar_ma1();
        let n = 17;
        let (path, eps) = model
            .simulate_with_innovations(n, &mut RngStream::new(5, 3))
            .unwrap();
        assert_eq!(eps.len(), model.order() + n);
        // rebuild the path from an identical stream drawn by hand
        let mut rng = RngStream::new(5, 3);
        let manual: Vec<f64> = (0..model.order() + n)
            .map(|_| model.innovations().sample(&mut rng).coeff(0).re)
            .collect();
        for t in 1..=n {
            let expect = manual[t] + 0.5 * manual[t - 1];
            let got = path.observations()[t - 1].coeff(0).re;
            assert_eq!(got, expect, "path diverges at t = {t}");
        }
    }

    #[test]
    fn geometric_truncation_respects_the_tail_bound() {
        let innov = InnovationSpec::standard(2, InnovationDistribution::Gaussian);
        let base = LinOperator::identity(2);
        let rho = 0.6;
        let tol = 1e-13;
        let model = LinearModel::geometric(base, rho, innov, tol).unwrap();
        let k = model.order();
        let tail = rho.powi(k as i32 + 1) / (1.0 - rho);
        let tail_prev = rho.powi(k as i32) / (1.0 - rho);
        assert!(tail <= tol, "tail {tail} above tolerance");
        assert!(tail_prev > tol, "order {k} is not minimal");
        assert!((model.psi()[3].entry(0, 0).re - rho.powi(3)).abs() < 1e-15);

        assert!(LinearModel::geometric(
            LinOperator::identity(2),
            1.0,
            InnovationSpec::standard(2, InnovationDistribution::Gaussian),
            1e-6
        )
        .is_err());
    }

    #[test]
    fn ergodic_averages_match_the_model_second_moments() {
        let model = scalar_ma1();
        let mut rng = RngStream::new(99, 1);
        let n = 40_000;
        let path = model.simulate(n, &mut rng).unwrap();
        let mean: f64 = path.observations().iter().map(|x| x.coeff(0).re).sum::<f64>() / n as f64;
        // sd of the mean ≈ sqrt(sum_h C_h / n) = sqrt(2.25 / n)
        assert!(mean.abs() < 4.0 * (2.25f64 / n as f64).sqrt(), "mean {mean}");
        let second = path_second_moment(&path).entry(0, 0).re;
        assert!(
            (second - 1.25).abs() < 0.05,
            "second moment {second} vs 1.25"
        );
        // stationarity: the two halves agree on their second moment
        let halves: Vec<f64> = path
            .observations()
            .chunks(n / 2)
            .map(|c| c.iter().map(|x| x.norm_sq()).sum::<f64>() / c.len() as f64)
            .collect();
        assert!((halves[0] - halves[1]).abs() < 0.1);
    }

    #[test]
    fn innovation_marginals_are_standardized() {
        let v = LinOperator::from_real_rows(&[vec![1.5, 0.4], vec![0.4, 0.8]]).unwrap();
        for dist in [
            InnovationDistribution::Gaussian,
            InnovationDistribution::ScaledUniform,
            InnovationDistribution::ScaledRademacher,
        ] {
            let spec = InnovationSpec::new(v.clone(), dist).unwrap();
            let mut rng = RngStream::new(7, 0);
            let reps = 60_000;
            let mut acc = LinOperator::zeros(2);
            for _ in 0..reps {
                let e = spec.sample(&mut rng);
                acc.add_assign(&tensor(&e, &e).unwrap());
            }
            let emp = acc.scale_real(1.0 / reps as f64);
            assert!(
                emp.sub(&v).hs_norm() < 0.05,
                "{}: empirical covariance off by {}",
                dist.label(),
                emp.sub(&v).hs_norm()
            );
        }
    }

    #[test]
    fn rademacher_white_noise_has_unit_magnitude_coordinates() {
        let spec = InnovationSpec::standard(3, InnovationDistribution::ScaledRademacher);
        let mut rng = RngStream::new(1, 1);
        for _ in 0..100 {
            let e = spec.sample(&mut rng);
            for j in 0..3 {
                assert_eq!(e.coeff(j).re.abs(), 1.0);
                assert_eq!(e.coeff(j).im, 0.0);
            }
        }
    }

    #[test]
    fn dependent_error_composition_is_the_exact_convolution() {
        // psi = (I, A), driver phi = (I, B) => theta = (I, A + B, A B)
        let a = LinOperator::from_real_rows(&[vec![0.5, 0.1], vec![0.0, 0.3]]).unwrap();
        let b = LinOperator::from_real_rows(&[vec![0.2, 0.0], vec![0.4, 0.1]]).unwrap();
        let innov = InnovationSpec::standard(2, InnovationDistribution::Gaussian);
        let driver = LinearModel::new(vec![LinOperator::identity(2), b.clone()], innov).unwrap();
        let model =
            DependentErrorLinearModel::new(vec![LinOperator::identity(2), a.clone()], driver)
                .unwrap();
        let theta = model.composed().psi();
        assert_eq!(theta.len(), 3);
        assert_eq!(theta[0], LinOperator::identity(2));
        assert_eq!(theta[1], a.add(&b));
        assert_eq!(theta[2], a.compose(&b).unwrap());
    }

    #[test]
    fn linear_coupling_shares_recent_innovations_exactly() {
        let model = scalar_ma1(); // order 1
        // m = 2 > K: the two draws must coincide bit for bit
        let (x, x_m) = ProcessModel::Linear(model.clone())
            .couple_m_approximation(2, &mut RngStream::new(4, 9))
            .unwrap();
        assert_eq!(x, x_m);
        // m = 1: difference only through the lag-1 innovation
        let (y, y_m) = ProcessModel::Linear(model)
            .couple_m_approximation(1, &mut RngStream::new(4, 10))
            .unwrap();
        assert_ne!(y, y_m);
        assert!(ProcessModel::Linear(scalar_ma1())
            .couple_m_approximation(0, &mut RngStream::new(4, 11))
            .is_err());
    }

    fn small_arch() -> ArchModel {
        let delta = vec![0.2, 0.3];
        let beta =
            LinOperator::from_real_rows(&[vec![0.2, 0.1], vec![0.1, 0.2]]).unwrap();
        ArchModel::new(
            delta,
            beta,
            InnovationSpec::standard(2, InnovationDistribution::Gaussian),
        )
        .unwrap()
    }

    #[test]
    fn arch_rejects_non_contractive_coefficients() {
        let delta = vec![0.1];
        let beta = scalar_op(1.2);
        let err = ArchModel::new(
            delta,
            beta,
            InnovationSpec::standard(1, InnovationDistribution::Gaussian),
        )
        .unwrap_err();
        assert!(matches!(err, Error::ArchNotContractive { .. }));
    }

    #[test]
    fn arch_stationary_mean_solves_the_fixed_point() {
        let model = small_arch();
        let mu = model.sigma2_mean();
        // mu = delta + B (v ⊙ mu) with v = diag(V) = (1, 1)
        let lhs0 = mu[0];
        let rhs0 = 0.2 + 0.2 * mu[0] + 0.1 * mu[1];
        assert!((lhs0 - rhs0).abs() < 1e-12);
        let lhs1 = mu[1];
        let rhs1 = 0.3 + 0.1 * mu[0] + 0.2 * mu[1];
        assert!((lhs1 - rhs1).abs() < 1e-12);
    }

    #[test]
    fn arch_empirical_moments_match_the_stationary_mean() {
        let model = small_arch();
        let mut rng = RngStream::new(31, 1);
        let n = 60_000;
        let path = model.simulate(n, &mut rng).unwrap();
        for j in 0..2 {
            let m2: f64 = path
                .observations()
                .iter()
                .map(|x| x.coeff(j).re.powi(2))
                .sum::<f64>()
                / n as f64;
            let target = model.sigma2_mean()[j]; // V_jj = 1
            assert!(
                (m2 / target - 1.0).abs() < 0.1,
                "coordinate {j}: {m2} vs {target}"
            );
        }
        let mean_abs: f64 = path
            .observations()
            .iter()
            .map(|x| x.coeff(0).re)
            .sum::<f64>()
            .abs()
            / n as f64;
        assert!(mean_abs < 0.02);
    }

    #[test]
    fn arch_coupling_shares_recent_history() {
        let model = small_arch().with_burn_in(50);
        let total = model.burn_in() + 1;
        let (x, x_m) = ProcessModel::Arch(model.clone())
            .couple_m_approximation(total + 5, &mut RngStream::new(8, 2))
            .unwrap();
        assert_eq!(x, x_m, "sharing the whole history must give equal draws");
        let (y, y_m) = ProcessModel::Arch(model)
            .couple_m_approximation(1, &mut RngStream::new(8, 3))
            .unwrap();
        assert_ne!(y, y_m);
    }

    #[test]
    fn zero_path_is_rejected_and_dims_checked() {
        assert!(SamplePath::new(vec![]).is_err());
        assert!(SamplePath::new(vec![
            FunctionVector::zeros(2),
            FunctionVector::zeros(3)
        ])
        .is_err());
        assert!(LinearModel::new(
            vec![],
            InnovationSpec::standard(1, InnovationDistribution::Gaussian)
        )
        .is_err());
        assert!(LinearModel::new(
            vec![LinOperator::identity(3)],
            InnovationSpec::standard(2, InnovationDistribution::Gaussian)
        )
        .is_err());
    }
}
