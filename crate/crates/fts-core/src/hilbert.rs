//! Finite-dimensional complex Hilbert-space primitives.
//!
//! The ambient space is `C^d` for a fixed basis dimension `d`, with the inner
//! product `<x, y> = sum_j x_j * conj(y_j)` — linear in the *first* argument
//! and conjugate-linear in the second. Curve-valued data enter as coefficient
//! vectors with respect to an orthonormal basis, so Hilbert–Schmidt norms and
//! traces of the dense operators below coincide with the corresponding
//! operator quantities on the original function space.
//!
//! Self-adjoint spectral decompositions are computed by a cyclic Jacobi
//! iteration. The rotation phase is taken as `a_pq / |a_pq|` (an exact unit
//! complex number), which keeps every intermediate exactly real when the
//! input matrix is real — real covariances therefore factor without picking
//! up imaginary dust.

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use serde::ser::{Serialize, SerializeStruct, Serializer};

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Default tolerance for validating covariance operators (self-adjointness,
/// eigenvalue clipping), relative to `max(1, ||A||_HS)`.
pub const COVARIANCE_TOL: f64 = 1e-10;

/// An element of the truncated Hilbert space: a coefficient vector in `C^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionVector(Array1<Complex64>);

impl FunctionVector {
    pub fn new(coeffs: Array1<Complex64>) -> Self {
        FunctionVector(coeffs)
    }

    pub fn from_complex(coeffs: Vec<Complex64>) -> Self {
        FunctionVector(Array1::from_vec(coeffs))
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        FunctionVector(coeffs.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn zeros(dim: usize) -> Self {
        FunctionVector(Array1::zeros(dim))
    }

    /// The `k`-th (0-based) standard basis vector of `C^dim`.
    pub fn basis(dim: usize, k: usize) -> Result<Self> {
        if k >= dim {
            return Err(Error::InvalidParameter {
                name: "k",
                reason: format!("basis index {k} out of range for dimension {dim}"),
            });
        }
        let mut v = Array1::zeros(dim);
        v[k] = Complex64::new(1.0, 0.0);
        Ok(FunctionVector(v))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coeffs(&self) -> &Array1<Complex64> {
        &self.0
    }

    pub fn coeff(&self, j: usize) -> Complex64 {
        self.0[j]
    }

    /// `<self, other>`, linear in `self`, conjugate-linear in `other`.
    pub fn inner(&self, other: &FunctionVector) -> Result<Complex64> {
        check_dim(self.dim(), other.dim())?;
        Ok(self
            .0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| a * b.conj())
            .sum())
    }

    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn conj(&self) -> FunctionVector {
        FunctionVector(self.0.mapv(|z| z.conj()))
    }

    pub fn scale(&self, factor: Complex64) -> FunctionVector {
        FunctionVector(self.0.mapv(|z| z * factor))
    }

    /// Elementwise sum; panics on dimension mismatch (internal arithmetic —
    /// the fallible contract surface is `inner`/`tensor`/`apply`/`compose`).
    pub fn add(&self, other: &FunctionVector) -> FunctionVector {
        FunctionVector(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &FunctionVector) -> FunctionVector {
        FunctionVector(&self.0 - &other.0)
    }

    /// Unit vector in the same direction; errors on the zero vector.
    pub fn normalized(&self) -> Result<FunctionVector> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::InvalidParameter {
                name: "vector",
                reason: "cannot normalize the zero vector".into(),
            });
        }
        Ok(self.scale(Complex64::new(1.0 / n, 0.0)))
    }

    pub(crate) fn add_assign_scaled(&mut self, other: &FunctionVector, factor: Complex64) {
        for (a, b) in self.0.iter_mut().zip(other.0.iter()) {
            *a += b * factor;
        }
    }

    pub fn max_abs_imag(&self) -> f64 {
        self.0.iter().fold(0.0, |m, z| m.max(z.im.abs()))
    }
}

impl Serialize for FunctionVector {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("FunctionVector", 3)?;
        s.serialize_field("dim", &self.dim())?;
        s.serialize_field("re", &self.0.iter().map(|z| z.re).collect::<Vec<_>>())?;
        s.serialize_field("im", &self.0.iter().map(|z| z.im).collect::<Vec<_>>())?;
        s.end()
    }
}

/// Rank-one operator `x (tensor) y`, acting as `u -> x * <u, y>`.
/// Its matrix entries are `x_i * conj(y_j)`.
pub fn tensor(x: &FunctionVector, y: &FunctionVector) -> Result<LinOperator> {
    check_dim(x.dim(), y.dim())?;
    let d = x.dim();
    let entries = Array2::from_shape_fn((d, d), |(i, j)| x.coeff(i) * y.coeff(j).conj());
    Ok(LinOperator(entries))
}

/// A bounded linear operator on the truncated space: a dense `d x d` complex
/// matrix acting on coefficient vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct LinOperator(Array2<Complex64>);

impl LinOperator {
    pub fn new(entries: Array2<Complex64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::InvalidParameter {
                name: "entries",
                reason: format!(
                    "operator matrix must be square, got {}x{}",
                    entries.nrows(),
                    entries.ncols()
                ),
            });
        }
        Ok(LinOperator(entries))
    }

    /// Build from real-valued rows (the form model parameters arrive in).
    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(Error::InvalidParameter {
                    name: "rows",
                    reason: format!("row {i} has length {}, expected {d}", row.len()),
                });
            }
        }
        let entries = Array2::from_shape_fn((d, d), |(i, j)| Complex64::new(rows[i][j], 0.0));
        Ok(LinOperator(entries))
    }

    pub fn zeros(dim: usize) -> Self {
        LinOperator(Array2::zeros((dim, dim)))
    }

    pub fn identity(dim: usize) -> Self {
        LinOperator(Array2::from_shape_fn((dim, dim), |(i, j)| {
            if i == j {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        }))
    }

    pub fn diag_real(diag: &[f64]) -> Self {
        let d = diag.len();
        LinOperator(Array2::from_shape_fn((d, d), |(i, j)| {
            if i == j {
                Complex64::new(diag[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        }))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn entries(&self) -> &Array2<Complex64> {
        &self.0
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.0[(i, j)]
    }

    pub fn apply(&self, x: &FunctionVector) -> Result<FunctionVector> {
        check_dim(self.dim(), x.dim())?;
        Ok(FunctionVector(self.0.dot(x.coeffs())))
    }

    /// Operator composition `self . other` (matrix product).
    pub fn compose(&self, other: &LinOperator) -> Result<LinOperator> {
        check_dim(self.dim(), other.dim())?;
        Ok(LinOperator(self.0.dot(&other.0)))
    }

    /// Adjoint (conjugate transpose): `<A x, y> = <x, A* y>`.
    pub fn adjoint(&self) -> LinOperator {
        let d = self.dim();
        LinOperator(Array2::from_shape_fn((d, d), |(i, j)| self.0[(j, i)].conj()))
    }

    pub fn add(&self, other: &LinOperator) -> LinOperator {
        LinOperator(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &LinOperator) -> LinOperator {
        LinOperator(&self.0 - &other.0)
    }

    pub fn scale(&self, factor: Complex64) -> LinOperator {
        LinOperator(self.0.mapv(|z| z * factor))
    }

    pub fn scale_real(&self, factor: f64) -> LinOperator {
        LinOperator(self.0.mapv(|z| z * factor))
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim()).map(|i| self.0[(i, i)]).sum()
    }

    /// Hilbert–Schmidt (Frobenius) norm.
    pub fn hs_norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Operator norm = largest singular value, via the spectrum of `A* A`.
    pub fn op_norm(&self) -> Result<f64> {
        let gram = self.adjoint().compose(self)?;
        let eig = gram.self_adjoint_eigen()?;
        let top = eig.values.last().copied().unwrap_or(0.0).max(0.0);
        Ok(top.sqrt())
    }

    pub fn max_abs_imag(&self) -> f64 {
        self.0.iter().fold(0.0, |m, z| m.max(z.im.abs()))
    }

    pub fn is_self_adjoint(&self, tol: f64) -> bool {
        self.sub(&self.adjoint()).hs_norm() <= tol * self.hs_norm().max(1.0)
    }

    /// Self-adjoint within `tol` and with spectrum bounded below by
    /// `-tol * max(1, ||A||_HS)`.
    pub fn is_nonneg_selfadjoint(&self, tol: f64) -> Result<bool> {
        if !self.is_self_adjoint(tol) {
            return Ok(false);
        }
        let eig = self.self_adjoint_eigen()?;
        let scale = self.hs_norm().max(1.0);
        Ok(eig.values.first().copied().unwrap_or(0.0) >= -tol * scale)
    }

    /// Spectral decomposition of the self-adjoint part `(A + A*) / 2`.
    ///
    /// Eigenvalues are returned in ascending order; the columns of `vectors`
    /// are the matching orthonormal eigenvectors.
    pub fn self_adjoint_eigen(&self) -> Result<SelfAdjointEigen> {
        let d = self.dim();
        let half = Complex64::new(0.5, 0.0);
        let sym = Array2::from_shape_fn((d, d), |(i, j)| {
            (self.0[(i, j)] + self.0[(j, i)].conj()) * half
        });
        jacobi_hermitian_eigen(sym)
    }

    pub(crate) fn add_assign(&mut self, other: &LinOperator) {
        self.0 += &other.0;
    }

    pub(crate) fn add_assign_scaled(&mut self, other: &LinOperator, factor: Complex64) {
        for (a, b) in self.0.iter_mut().zip(other.0.iter()) {
            *a += b * factor;
        }
    }
}

impl Serialize for LinOperator {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("LinOperator", 3)?;
        s.serialize_field("dim", &self.dim())?;
        s.serialize_field("re", &self.0.iter().map(|z| z.re).collect::<Vec<_>>())?;
        s.serialize_field("im", &self.0.iter().map(|z| z.im).collect::<Vec<_>>())?;
        s.end()
    }
}

/// Eigensystem of a self-adjoint operator.
#[derive(Debug, Clone)]
pub struct SelfAdjointEigen {
    /// Ascending real eigenvalues.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors, one per column, ordered like `values`.
    pub vectors: Array2<Complex64>,
}

const JACOBI_MAX_SWEEPS: usize = 64;

/// Cyclic Jacobi iteration for a Hermitian matrix.
///
/// Each rotation annihilates one off-diagonal pair exactly; convergence is
/// quadratic once the off-diagonal mass is small. The unit phase of the pivot
/// entry is computed as `a_pq / |a_pq|`, so real symmetric inputs stay exactly
/// real throughout.
fn jacobi_hermitian_eigen(mut m: Array2<Complex64>) -> Result<SelfAdjointEigen> {
    let d = m.nrows();
    let mut v: Array2<Complex64> = Array2::from_shape_fn((d, d), |(i, j)| {
        if i == j {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    if d > 1 {
        let scale: f64 = m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt().max(1.0);
        let target = 1e-15 * scale;
        let mut converged = false;
        let mut off = 0.0;
        for _sweep in 0..JACOBI_MAX_SWEEPS {
            off = 0.0;
            for p in 0..d {
                for q in (p + 1)..d {
                    off += 2.0 * m[(p, q)].norm_sqr();
                }
            }
            off = off.sqrt();
            if off <= target {
                converged = true;
                break;
            }
            for p in 0..d {
                for q in (p + 1)..d {
                    let apq = m[(p, q)];
                    let b = apq.norm();
                    if b == 0.0 {
                        continue;
                    }
                    let phase = apq / b; // exact unit complex; ±1 for real input
                    let alpha = m[(p, p)].re;
                    let gamma = m[(q, q)].re;
                    let phi = 0.5 * (2.0 * b).atan2(alpha - gamma);
                    let (s, c) = phi.sin_cos();
                    let sph = phase * s; // s * phase
                    let sphc = phase.conj() * s; // s * conj(phase)

                    // rows p, q  (left-multiply by R*)
                    for k in 0..d {
                        let mp = m[(p, k)];
                        let mq = m[(q, k)];
                        m[(p, k)] = mp * c + mq * sph;
                        m[(q, k)] = mq * c - mp * sphc;
                    }
                    // columns p, q  (right-multiply by R)
                    for k in 0..d {
                        let mp = m[(k, p)];
                        let mq = m[(k, q)];
                        m[(k, p)] = mp * c + mq * sphc;
                        m[(k, q)] = mq * c - mp * sph;
                    }
                    // the 2x2 pivot block, written directly for exactness
                    let twocs = 2.0 * c * s * b;
                    m[(p, p)] = Complex64::new(alpha * c * c + gamma * s * s + twocs, 0.0);
                    m[(q, q)] = Complex64::new(alpha * s * s + gamma * c * c - twocs, 0.0);
                    m[(p, q)] = Complex64::new(0.0, 0.0);
                    m[(q, p)] = Complex64::new(0.0, 0.0);

                    // accumulate eigenvectors: V <- V R
                    for k in 0..d {
                        let vp = v[(k, p)];
                        let vq = v[(k, q)];
                        v[(k, p)] = vp * c + vq * sphc;
                        v[(k, q)] = vq * c - vp * sph;
                    }
                }
            }
        }
        if !converged {
            return Err(Error::EigFailure {
                sweeps: JACOBI_MAX_SWEEPS,
                offdiag: off,
            });
        }
    }

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| {
        m[(a, a)]
            .re
            .partial_cmp(&m[(b, b)].re)
            .expect("non-finite eigenvalue")
    });
    let values: Vec<f64> = order.iter().map(|&k| m[(k, k)].re).collect();
    let vectors = Array2::from_shape_fn((d, d), |(i, j)| v[(i, order[j])]);
    Ok(SelfAdjointEigen { values, vectors })
}

fn validate_covariance_shape(sigma: &LinOperator, tol: f64, want_real: bool) -> Result<()> {
    if !sigma.is_self_adjoint(tol) {
        return Err(Error::InvalidCovariance {
            reason: format!(
                "matrix is not self-adjoint within tolerance {tol:.1e} (||A - A*|| = {:.3e})",
                sigma.sub(&sigma.adjoint()).hs_norm()
            ),
        });
    }
    if want_real {
        let max_im = sigma.max_abs_imag();
        if max_im > tol * sigma.hs_norm().max(1.0) {
            return Err(Error::InvalidCovariance {
                reason: format!(
                    "real covariance required, but entries carry imaginary parts up to {max_im:.3e}"
                ),
            });
        }
    }
    Ok(())
}

fn clipped_sqrt_eigenvalues(eig: &SelfAdjointEigen, scale: f64, tol: f64) -> Result<Vec<f64>> {
    let mut roots = Vec::with_capacity(eig.values.len());
    for &lambda in &eig.values {
        if lambda < -tol * scale {
            return Err(Error::InvalidCovariance {
                reason: format!("negative eigenvalue {lambda:.6e} beyond clipping tolerance"),
            });
        }
        roots.push(lambda.max(0.0).sqrt());
    }
    Ok(roots)
}

/// Square-root factor of a real self-adjoint non-negative covariance.
///
/// Stores `F = U sqrt(Λ)` with real entries; `F w` has covariance `Σ` for any
/// iid standardized coordinates `w`. Eigendecomposition (not Cholesky) is used
/// so rank-deficient covariances factor cleanly, with eigenvalues in
/// `[-tol, 0)` clipped to zero.
#[derive(Debug, Clone)]
pub struct CovarianceFactor {
    factor: Array2<f64>,
}

impl CovarianceFactor {
    pub fn new(sigma: &LinOperator, tol: f64) -> Result<Self> {
        validate_covariance_shape(sigma, tol, true)?;
        let eig = sigma.self_adjoint_eigen()?;
        let scale = sigma.hs_norm().max(1.0);
        let roots = clipped_sqrt_eigenvalues(&eig, scale, tol)?;
        let d = sigma.dim();
        // real input => exactly real eigenvectors (see the Jacobi phase note)
        let factor = Array2::from_shape_fn((d, d), |(i, j)| eig.vectors[(i, j)].re * roots[j]);
        Ok(CovarianceFactor { factor })
    }

    pub fn dim(&self) -> usize {
        self.factor.nrows()
    }

    /// Apply the factor to standardized coordinates: `x = F w`.
    pub fn apply(&self, w: &[f64]) -> Vec<f64> {
        let d = self.dim();
        debug_assert_eq!(w.len(), d);
        let mut out = vec![0.0; d];
        for (j, &wj) in w.iter().enumerate() {
            if wj != 0.0 {
                for i in 0..d {
                    out[i] += self.factor[(i, j)] * wj;
                }
            }
        }
        out
    }

    /// Draw `F g` with `g` standard normal: a real Gaussian with covariance `Σ`.
    pub fn sample_gaussian(&self, rng: &mut RngStream) -> FunctionVector {
        let w: Vec<f64> = (0..self.dim()).map(|_| rng.standard_normal()).collect();
        FunctionVector::from_real(&self.apply(&w))
    }
}

/// Square-root factor `F = U sqrt(Λ)` of a complex self-adjoint non-negative
/// operator, for drawing circularly-symmetric complex Gaussians.
#[derive(Debug, Clone)]
pub struct ComplexCovarianceFactor {
    factor: Array2<Complex64>,
}

impl ComplexCovarianceFactor {
    pub fn new(gamma: &LinOperator, tol: f64) -> Result<Self> {
        validate_covariance_shape(gamma, tol, false)?;
        let eig = gamma.self_adjoint_eigen()?;
        let scale = gamma.hs_norm().max(1.0);
        let roots = clipped_sqrt_eigenvalues(&eig, scale, tol)?;
        let d = gamma.dim();
        let factor = Array2::from_shape_fn((d, d), |(i, j)| eig.vectors[(i, j)] * roots[j]);
        Ok(ComplexCovarianceFactor { factor })
    }

    pub fn dim(&self) -> usize {
        self.factor.nrows()
    }

    /// Draw `F w` with `w_j = (g + i g') / sqrt(2)`, `g, g'` standard normal:
    /// a circularly-symmetric complex Gaussian with covariance `Γ` and
    /// vanishing relation operator `E[Z (tensor) conj(Z)] = 0`.
    pub fn sample(&self, rng: &mut RngStream) -> FunctionVector {
        let d = self.dim();
        let w: Vec<Complex64> = (0..d)
            .map(|_| {
                Complex64::new(
                    rng.standard_normal() * std::f64::consts::FRAC_1_SQRT_2,
                    rng.standard_normal() * std::f64::consts::FRAC_1_SQRT_2,
                )
            })
            .collect();
        let mut out = vec![Complex64::new(0.0, 0.0); d];
        for (j, wj) in w.iter().enumerate() {
            for (i, o) in out.iter_mut().enumerate() {
                *o += self.factor[(i, j)] * wj;
            }
        }
        FunctionVector::from_complex(out)
    }
}

/// One-shot real Gaussian draw with covariance `sigma`.
pub fn sample_real_gaussian(sigma: &LinOperator, rng: &mut RngStream) -> Result<FunctionVector> {
    Ok(CovarianceFactor::new(sigma, COVARIANCE_TOL)?.sample_gaussian(rng))
}

/// One-shot circularly-symmetric complex Gaussian draw with covariance `gamma`.
pub fn sample_complex_gaussian(
    gamma: &LinOperator,
    rng: &mut RngStream,
) -> Result<FunctionVector> {
    Ok(ComplexCovarianceFactor::new(gamma, COVARIANCE_TOL)?.sample(rng))
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        Err(Error::DimensionMismatch { expected, got })
    } else {
        Ok(())
    }
}
