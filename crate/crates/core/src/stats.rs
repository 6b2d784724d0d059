//! Small statistics toolbox shared by the experiments, verification suites
//! and tests: moments, least squares, chi-square and Kolmogorov-Smirnov.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Sample moments of a replicate series.
#[derive(Debug, Clone, Copy)]
pub struct Moments {
    pub count: usize,
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    /// Standard error of `variance`, from the fourth central moment.
    pub variance_se: f64,
}

impl Moments {
    pub fn from_samples(xs: &[f64]) -> Self {
        let r = xs.len();
        let rf = r as f64;
        let mean = xs.iter().sum::<f64>() / rf;
        let (mut m2, mut m4) = (0.0, 0.0);
        for &x in xs {
            let c = x - mean;
            let c2 = c * c;
            m2 += c2;
            m4 += c2 * c2;
        }
        let variance = if r > 1 { m2 / (rf - 1.0) } else { 0.0 };
        let m4 = m4 / rf;
        let s4 = variance * variance;
        let var_of_var = if r > 3 {
            (m4 - s4 * (rf - 3.0) / (rf - 1.0)) / rf
        } else {
            f64::NAN
        };
        Self {
            count: r,
            mean,
            variance,
            variance_se: var_of_var.max(0.0).sqrt(),
        }
    }

    pub fn mean_se(&self) -> f64 {
        (self.variance / self.count as f64).sqrt()
    }
}

/// Ordinary least-squares line `y = intercept + slope * x`.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
}

pub fn least_squares(xs: &[f64], ys: &[f64]) -> LineFit {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let slope_se = if xs.len() > 2 {
        (rss / (n - 2.0) / sxx).sqrt()
    } else {
        f64::NAN
    };
    LineFit {
        slope,
        intercept,
        slope_se,
    }
}

/// Result of a chi-square goodness-of-fit test.
#[derive(Debug, Clone, Copy)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson goodness of fit. Cells with expected count below `min_expected`
/// are pooled into one cell so the asymptotic law applies.
pub fn chi_square(observed: &[u64], probabilities: &[f64], min_expected: f64) -> ChiSquare {
    assert_eq!(observed.len(), probabilities.len());
    let total: u64 = observed.iter().sum();
    let total = total as f64;
    let (mut stat, mut cells) = (0.0, 0usize);
    let (mut pooled_obs, mut pooled_exp) = (0.0, 0.0);
    for (&o, &p) in observed.iter().zip(probabilities) {
        let e = p * total;
        if e < min_expected {
            pooled_obs += o as f64;
            pooled_exp += e;
        } else {
            stat += (o as f64 - e).powi(2) / e;
            cells += 1;
        }
    }
    if pooled_exp > 0.0 {
        stat += (pooled_obs - pooled_exp).powi(2) / pooled_exp;
        cells += 1;
    } else if pooled_obs > 0.0 {
        stat = f64::INFINITY;
    }
    let dof = cells.saturating_sub(1).max(1);
    let p_value = if stat.is_finite() {
        1.0 - ChiSquared::new(dof as f64).unwrap().cdf(stat)
    } else {
        0.0
    };
    ChiSquare {
        statistic: stat,
        dof,
        p_value,
    }
}

/// One-sample Kolmogorov-Smirnov test against Uniform(0,1); returns
/// `(D, asymptotic p-value)`.
pub fn ks_uniform(samples: &mut [f64]) -> (f64, f64) {
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = samples.len() as f64;
    let mut dmax = 0.0f64;
    for (i, &x) in samples.iter().enumerate() {
        let lo = x - i as f64 / n;
        let hi = (i + 1) as f64 / n - x;
        dmax = dmax.max(lo).max(hi);
    }
    let lambda = (n.sqrt() + 0.12 + 0.11 / n.sqrt()) * dmax;
    let mut p = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        p += 2.0 * (-1f64).powf(k - 1.0) * (-2.0 * k * k * lambda * lambda).exp();
    }
    (dmax, p.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let xs: Vec<f64> = (1..8).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 / 3.0 * x - 1.0).collect();
        let fit = least_squares(&xs, &ys);
        assert!((fit.slope - 2.0 / 3.0).abs() < 1e-12);
        assert!((fit.intercept + 1.0).abs() < 1e-12);
        assert!(fit.slope_se < 1e-12);
    }

    #[test]
    fn moments_of_known_series() {
        let m = Moments::from_samples(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m.mean, 2.5);
        assert!((m.variance - 5.0 / 3.0).abs() < 1e-15);
        assert!(m.variance_se.is_finite());
    }

    #[test]
    fn chi_square_perfect_fit() {
        let r = chi_square(&[25, 25, 25, 25], &[0.25; 4], 5.0);
        assert_eq!(r.statistic, 0.0);
        assert!(r.p_value > 0.99);
        let bad = chi_square(&[100, 0, 0, 0], &[0.25; 4], 5.0);
        assert!(bad.p_value < 1e-10);
    }

    #[test]
    fn ks_on_grid() {
        let mut xs: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        let (d, p) = ks_uniform(&mut xs);
        assert!(d < 0.001);
        assert!(p > 0.99);
    }
}
