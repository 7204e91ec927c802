//! Discrete Fourier transforms of Hilbert-space-valued paths.
//!
//! For a path `X_1, ..., X_n` the transform at frequency `theta` is
//! `S_n(theta) = sum_{t=1}^n X_t exp(-i t theta)`. Besides direct evaluation
//! at arbitrary frequencies, the whole canonical grid
//! `theta_j = 2 pi j / n`, `j = -floor(n/2), ..., floor(n/2)`, is computed
//! with one length-`n` FFT per coordinate: the standard 0-based transform
//! `Y_k = sum_s x_s exp(-2 pi i s k / n)` of `x_s = X_{s+1}` satisfies
//! `S_n(theta_j) = exp(-i theta_j) Y_{j mod n}`.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::hilbert::{tensor, FunctionVector, LinOperator};
use crate::models::SamplePath;

/// The transform value at one frequency, tagged with the path length that
/// produced it.
#[derive(Debug, Clone)]
pub struct DftResult {
    pub theta: f64,
    pub value: FunctionVector,
    pub n: usize,
}

/// The `j`-th canonical grid frequency `2 pi j / n`.
pub fn grid_frequency(n: usize, j: i64) -> f64 {
    2.0 * std::f64::consts::PI * j as f64 / n as f64
}

/// Direct evaluation of `S_n(theta)`; the frequency is interpreted modulo
/// `2 pi`, with `[-pi, pi]` the canonical range.
pub fn dft_at(path: &SamplePath, theta: f64) -> DftResult {
    let n = path.len();
    let mut acc = FunctionVector::zeros(path.dim());
    for (s, x) in path.observations().iter().enumerate() {
        let t = (s + 1) as f64;
        acc.add_assign_scaled(x, Complex64::cis(-t * theta));
    }
    DftResult {
        theta,
        value: acc,
        n,
    }
}

/// All transforms on the canonical grid, indexed `j = -floor(n/2), ...,
/// floor(n/2)` (so `2*floor(n/2) + 1` entries, with the two endpoints equal
/// for even `n`). Runs one FFT per coordinate, `O(d n log n)` overall.
pub fn dft_fourier_grid(path: &SamplePath) -> Vec<DftResult> {
    let n = path.len();
    let d = path.dim();
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(n);
    // spectra[k][coord] = Y_k for coordinate `coord`
    let mut spectra = vec![vec![Complex64::new(0.0, 0.0); d]; n];
    let mut buffer = vec![Complex64::new(0.0, 0.0); n];
    for coord in 0..d {
        for (s, x) in path.observations().iter().enumerate() {
            buffer[s] = x.coeff(coord);
        }
        fft.process(&mut buffer);
        for (k, y) in buffer.iter().enumerate() {
            spectra[k][coord] = *y;
        }
    }
    let half = (n / 2) as i64;
    (-half..=half)
        .map(|j| {
            let theta = grid_frequency(n, j);
            let k = (j.rem_euclid(n as i64)) as usize;
            let phase = Complex64::cis(-theta);
            let value =
                FunctionVector::from_complex(spectra[k].iter().map(|y| y * phase).collect());
            DftResult { theta, value, n }
        })
        .collect()
}

/// Periodogram operator `S_n(theta) (tensor) S_n(theta) / (2 pi n)`; its
/// expectation converges to the spectral density operator at `theta`.
pub fn periodogram_op(dft: &DftResult) -> Result<LinOperator> {
    if dft.n == 0 {
        return Err(Error::InvalidParameter {
            name: "dft",
            reason: "periodogram requires a transform of a nonempty path".into(),
        });
    }
    let scale = 1.0 / (2.0 * std::f64::consts::PI * dft.n as f64);
    Ok(tensor(&dft.value, &dft.value)?.scale_real(scale))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{InnovationDistribution, InnovationSpec, LinearModel};
    use crate::rng::RngStream;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn random_real_path(n: usize, d: usize, seed: u64) -> SamplePath {
        let innov = InnovationSpec::standard(d, InnovationDistribution::Gaussian);
        LinearModel::white_noise(innov)
            .simulate(n, &mut RngStream::new(seed, 0))
            .unwrap()
    }

    fn random_complex_path(n: usize, d: usize, seed: u64) -> SamplePath {
        let mut rng = RngStream::new(seed, 1);
        SamplePath::new(
            (0..n)
                .map(|_| {
                    FunctionVector::from_complex(
                        (0..d)
                            .map(|_| Complex64::new(rng.standard_normal(), rng.standard_normal()))
                            .collect(),
                    )
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn single_observation_transform_is_a_rotation_of_it() {
        let path = SamplePath::new(vec![FunctionVector::from_real(&[2.0, -1.0])]).unwrap();
        let theta = 0.7;
        let s = dft_at(&path, theta);
        let expected = path.observations()[0].scale(Complex64::cis(-theta));
        assert!(s.value.sub(&expected).norm() < 1e-15);
    }

    #[test]
    fn grid_frequencies_hit_zero_and_pi() {
        assert_eq!(grid_frequency(8, 0), 0.0);
        assert!((grid_frequency(8, 4) - PI).abs() < 1e-15);
        assert!((grid_frequency(8, -4) + PI).abs() < 1e-15);
        assert!((grid_frequency(256, 10) - 2.0 * PI * 10.0 / 256.0).abs() < 1e-15);
    }

    #[test]
    fn fast_grid_matches_direct_evaluation_including_prime_lengths() {
        for &n in &[2usize, 3, 4, 5, 7, 8, 11, 16, 127, 128, 251, 256, 257] {
            let path = random_complex_path(n, 3, n as u64);
            let grid = dft_fourier_grid(&path);
            let half = (n / 2) as i64;
            assert_eq!(grid.len(), (2 * half + 1) as usize);
            let mut worst: f64 = 0.0;
            for (idx, j) in (-half..=half).enumerate() {
                let direct = dft_at(&path, grid_frequency(n, j));
                let rel = grid[idx].value.sub(&direct.value).norm()
                    / direct.value.norm().max(1e-300);
                worst = worst.max(rel);
            }
            assert!(worst <= 1e-10, "n = {n}: max relative error {worst:e}");
        }
    }

    #[test]
    fn parseval_identity_on_the_grid() {
        for &n in &[8usize, 9, 64, 127, 256] {
            let path = random_real_path(n, 2, 3 * n as u64 + 1);
            let grid = dft_fourier_grid(&path);
            let half = (n / 2) as i64;
            // n consecutive indices cover each residue class exactly once;
            // for even n drop j = half (same residue as -half)
            let time_side: f64 = path.observations().iter().map(|x| x.norm_sq()).sum();
            let freq_side: f64 = grid
                .iter()
                .zip(-half..=half)
                .filter(|(_, j)| !(n % 2 == 0 && *j == half))
                .map(|(r, _)| r.value.norm_sq())
                .sum::<f64>()
                / n as f64;
            let rel = (time_side - freq_side).abs() / time_side;
            assert!(rel <= 1e-8, "n = {n}: Parseval relative error {rel:e}");
        }
    }

    #[test]
    fn real_paths_have_exactly_conjugate_symmetric_transforms() {
        let path = random_real_path(31, 2, 77);
        for &theta in &[0.3, 1.1, 2.9] {
            let plus = dft_at(&path, theta);
            let minus = dft_at(&path, -theta);
            // exact, not just approximate: same products with conjugated phases
            assert_eq!(minus.value, plus.value.conj());
        }
    }

    #[test]
    fn periodogram_trace_is_the_normalized_energy() {
        let path = random_real_path(50, 3, 5);
        let s = dft_at(&path, 0.9);
        let p = periodogram_op(&s).unwrap();
        let expected = s.value.norm_sq() / (2.0 * PI * 50.0);
        assert!((p.trace().re - expected).abs() < 1e-12);
        assert!(p.trace().im.abs() < 1e-15);
        assert!(p.is_nonneg_selfadjoint(1e-10).unwrap());
    }

    proptest! {
        #[test]
        fn prop_dft_is_linear_in_the_path(seed in 0u64..200, n in 2usize..40, theta in -3.1f64..3.1) {
            let d = 2;
            let a = random_complex_path(n, d, seed);
            let b = random_complex_path(n, d, seed + 1000);
            let alpha = Complex64::new(0.7, -0.4);
            let combined = SamplePath::new(
                a.observations()
                    .iter()
                    .zip(b.observations())
                    .map(|(x, y)| x.scale(alpha).add(y))
                    .collect(),
            )
            .unwrap();
            let lhs = dft_at(&combined, theta).value;
            let rhs = dft_at(&a, theta).value.scale(alpha).add(&dft_at(&b, theta).value);
            let scale = lhs.norm().max(1.0);
            prop_assert!(lhs.sub(&rhs).norm() <= 1e-12 * scale);
        }

        #[test]
        fn prop_fast_grid_matches_direct_on_random_lengths(n in 2usize..130, seed in 0u64..100) {
            let path = random_real_path(n, 2, seed + 5000);
            let grid = dft_fourier_grid(&path);
            let half = (n / 2) as i64;
            for (idx, j) in (-half..=half).enumerate() {
                let direct = dft_at(&path, grid_frequency(n, j));
                let err = grid[idx].value.sub(&direct.value).norm();
                prop_assert!(err <= 1e-10 * direct.value.norm().max(1.0));
            }
        }
    }
}
