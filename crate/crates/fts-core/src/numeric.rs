//! Small numeric helpers: compensated reductions, sample moments, a
//! Kolmogorov–Smirnov distance against a centred normal, and least-squares
//! slopes for decay-rate fits.

use std::f64::consts::SQRT_2;

/// Pairwise (tree) summation; deterministic and far more accurate than a
/// running sum on long inputs.
pub(crate) fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        2 => xs[0] + xs[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
        }
    }
}

/// Pairwise reduction of arbitrary summands (vectors, operators). The
/// combination order depends only on `items.len()`, never on thread count.
pub(crate) fn pairwise_reduce<T, F>(items: &[T], add: &F) -> Option<T>
where
    T: Clone,
    F: Fn(&T, &T) -> T,
{
    match items.len() {
        0 => None,
        1 => Some(items[0].clone()),
        n => {
            let mid = n / 2;
            let left = pairwise_reduce(&items[..mid], add)?;
            let right = pairwise_reduce(&items[mid..], add)?;
            Some(add(&left, &right))
        }
    }
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    pairwise_sum(xs) / xs.len() as f64
}

/// Unbiased sample variance (denominator `n - 1`).
pub(crate) fn sample_variance(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let sq: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
    pairwise_sum(&sq) / (n - 1) as f64
}

/// Central moment of order `p` with denominator `n`.
fn central_moment(xs: &[f64], m: f64, p: u32) -> f64 {
    let v: Vec<f64> = xs.iter().map(|x| (x - m).powi(p as i32)).collect();
    mean(&v)
}

/// Sample skewness `m3 / m2^(3/2)`; 0 for degenerate samples.
pub(crate) fn skewness(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let m2 = central_moment(xs, m, 2);
    if m2 <= 0.0 {
        return 0.0;
    }
    central_moment(xs, m, 3) / m2.powf(1.5)
}

/// Sample excess kurtosis `m4 / m2^2 - 3`; 0 for degenerate samples.
pub(crate) fn excess_kurtosis(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let m2 = central_moment(xs, m, 2);
    if m2 <= 0.0 {
        return 0.0;
    }
    central_moment(xs, m, 4) / (m2 * m2) - 3.0
}

/// Pearson correlation; 0 when either marginal is degenerate.
pub(crate) fn pearson_corr(xs: &[f64], ys: &[f64]) -> f64 {
    debug_assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let mx = mean(xs);
    let my = mean(ys);
    let prod: Vec<f64> = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (x - mx) * (y - my))
        .collect();
    let cov = pairwise_sum(&prod);
    let vx: Vec<f64> = xs.iter().map(|x| (x - mx) * (x - mx)).collect();
    let vy: Vec<f64> = ys.iter().map(|y| (y - my) * (y - my)).collect();
    let denom = (pairwise_sum(&vx) * pairwise_sum(&vy)).sqrt();
    if denom <= 0.0 {
        0.0
    } else {
        cov / denom
    }
}

/// Standard normal distribution function.
pub(crate) fn standard_normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + libm::erf(x / SQRT_2))
}

/// Kolmogorov–Smirnov distance between the empirical distribution of `xs`
/// and a centred normal with standard deviation `sigma > 0`.
pub(crate) fn ks_distance_centred_normal(xs: &[f64], sigma: f64) -> f64 {
    let n = xs.len();
    if n == 0 || sigma <= 0.0 {
        return 1.0;
    }
    let mut z: Vec<f64> = xs.iter().map(|x| x / sigma).collect();
    z.sort_by(|a, b| a.partial_cmp(b).expect("non-finite sample"));
    let nf = n as f64;
    let mut d: f64 = 0.0;
    for (i, zi) in z.iter().enumerate() {
        let cdf = standard_normal_cdf(*zi);
        let upper = (i + 1) as f64 / nf - cdf;
        let lower = cdf - i as f64 / nf;
        d = d.max(upper.abs()).max(lower.abs());
    }
    d
}

/// Least-squares slope of `ys` against `xs`; `None` when fewer than two
/// distinct abscissae are available.
pub(crate) fn least_squares_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    debug_assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    if n < 2 {
        return None;
    }
    let mx = mean(xs);
    let my = mean(ys);
    let num: Vec<f64> = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (x - mx) * (y - my))
        .collect();
    let den: Vec<f64> = xs.iter().map(|x| (x - mx) * (x - mx)).collect();
    let den = pairwise_sum(&den);
    if den <= 0.0 {
        None
    } else {
        Some(pairwise_sum(&num) / den)
    }
}
