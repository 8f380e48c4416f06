//! Small deterministic estimators shared by the experiment drivers.

use rand::Rng;

use crate::rng::StreamKey;

/// Pairwise summation; the result depends only on the order of `xs`.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    pairwise_sum(xs) / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let sq: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
    pairwise_sum(&sq) / (n - 1) as f64
}

/// Standard error of the sample mean.
pub fn std_error(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    (variance(xs) / xs.len() as f64).sqrt()
}

/// Mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        Estimate { value: mean(xs), se: std_error(xs) }
    }
}

/// Bootstrap of a statistic over contiguous blocks of samples.
///
/// Returns the standard deviation of the statistic across `n_boot`
/// block-resampled replicates.
pub fn block_bootstrap_se<F>(xs: &[f64], n_blocks: usize, n_boot: usize, key: StreamKey, stat: F) -> f64
where
    F: Fn(&[f64]) -> f64,
{
    let n_blocks = n_blocks.clamp(1, xs.len().max(1));
    if xs.len() < 2 || n_boot < 2 {
        return 0.0;
    }
    let block_len = xs.len() / n_blocks;
    let mut rng = key.stream(0);
    let mut buf = Vec::with_capacity(block_len * n_blocks);
    let replicates: Vec<f64> = (0..n_boot)
        .map(|_| {
            buf.clear();
            for _ in 0..n_blocks {
                let b = rng.random_range(0..n_blocks);
                buf.extend_from_slice(&xs[b * block_len..(b + 1) * block_len]);
            }
            stat(&buf)
        })
        .collect();
    variance(&replicates).sqrt()
}

/// Least-squares line `y = intercept + slope x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
}

pub fn fit_line(xs: &[f64], ys: &[f64]) -> LineFit {
    assert_eq!(xs.len(), ys.len());
    let mx = mean(xs);
    let my = mean(ys);
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    LineFit { slope, intercept: my - slope * mx }
}

/// Slope of `log y` against `log x`, skipping non-positive entries.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let (lx, ly): (Vec<f64>, Vec<f64>) =
        xs.iter().zip(ys).filter(|(x, y)| **x > 0.0 && **y > 0.0).map(|(x, y)| (x.ln(), y.ln())).unzip();
    if lx.len() < 2 {
        return f64::NAN;
    }
    fit_line(&lx, &ly).slope
}

/// Standard normal CDF.
pub fn norm_cdf(z: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-z / std::f64::consts::SQRT_2)
}

/// Standard normal density.
pub fn norm_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_sum_matches_naive_on_integers() {
        let xs: Vec<f64> = (1..=1000).map(f64::from).collect();
        assert_eq!(pairwise_sum(&xs), 500_500.0);
    }

    #[test]
    fn line_fit_recovers_slope() {
        let xs: Vec<f64> = (0..10).map(f64::from).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 - 2.0 * x).collect();
        let fit = fit_line(&xs, &ys);
        assert!((fit.slope + 2.0).abs() < 1e-12);
        assert!((fit.intercept - 3.0).abs() < 1e-12);
    }

    #[test]
    fn normal_cdf_reference_points() {
        assert!((norm_cdf(0.0) - 0.5).abs() < 1e-15);
        let z = norm_cdf(1.959963984540054);
        assert!((z - 0.975).abs() < 1e-10, "{z}");
        assert!((norm_cdf(-1.0) - 0.15865525393145707).abs() < 1e-10);
    }
}
