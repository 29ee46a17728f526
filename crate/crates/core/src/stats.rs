//! Small statistics helpers shared by the trajectory and estimator layers.

/// Two-sided 99% normal quantile.
pub const Z99: f64 = 2.575_829_303_548_900_4;

/// Normal-approximation confidence interval for a sample mean.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MeanCi {
    pub mean: f64,
    pub half_width: f64,
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

pub fn mean_ci(values: &[f64], z: f64) -> MeanCi {
    assert!(!values.is_empty(), "mean of an empty sample");
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let half_width = if n < 2 {
        f64::INFINITY
    } else {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        z * (var / n as f64).sqrt()
    };
    MeanCi {
        mean,
        half_width,
        lo: mean - half_width,
        hi: mean + half_width,
        n,
    }
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_ci(successes: u64, n: u64, z: f64) -> (f64, f64) {
    assert!(n > 0, "Wilson interval needs at least one observation");
    let n = n as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * ((p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt()) / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Ordinary least-squares slope of `y` against `x`.
pub fn ols_slope(points: &[(f64, f64)]) -> f64 {
    assert!(points.len() >= 2, "slope needs at least two points");
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}
