//! Small sample statistics used by the experiments.

use statrs::statistics::{Data, OrderStatistics, Statistics};

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.mean()
}

/// Standard error of the sample mean.
pub fn std_error(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return f64::NAN;
    }
    (xs.variance() / xs.len() as f64).sqrt()
}

/// Sample quantile (statrs' median-unbiased estimator, R type 8).
pub fn quantile(xs: &[f64], tau: f64) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    Data::new(xs.to_vec()).quantile(tau)
}

pub fn median(xs: &[f64]) -> f64 {
    quantile(xs, 0.5)
}

/// Asymptotic standard error of the sample median, estimated from the
/// interquartile range under a locally normal density.
pub fn median_std_error(xs: &[f64]) -> f64 {
    let iqr = quantile(xs, 0.75) - quantile(xs, 0.25);
    1.2533 * (iqr / 1.349) / (xs.len() as f64).sqrt()
}

/// `(mean |x|^p)^{1/p}` and its delta-method standard error.
pub fn moment_norm(xs: &[f64], p: f64) -> (f64, f64) {
    let powers: Vec<f64> = xs.iter().map(|x| x.abs().powf(p)).collect();
    let s = mean(&powers);
    if s == 0.0 {
        return (0.0, 0.0);
    }
    let m = s.powf(1.0 / p);
    (m, m / p * std_error(&powers) / s)
}

/// `(max - min) / min`; zero for a constant sequence.
pub fn relative_drift(xs: &[f64]) -> f64 {
    let (lo, hi) = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
        (lo.min(x), hi.max(x))
    });
    if hi == lo {
        0.0
    } else {
        (hi - lo) / lo
    }
}

/// Number of increases in a sequence that should be non-increasing.
pub fn inversions(xs: &[f64]) -> usize {
    xs.windows(2).filter(|w| w[1] > w[0]).count()
}

/// `|a - b| / max(|a|, |b|)`, zero when both vanish.
pub fn relative_change(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares `y = intercept + slope x`. `None` with fewer than
/// two distinct abscissae.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let (mx, my) = (mean(x), mean(y));
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some(LinearFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
    })
}

/// `E|Z|^p` for a standard normal `Z`.
pub fn gaussian_abs_moment(p: f64) -> f64 {
    use statrs::function::gamma::gamma;
    2f64.powf(p / 2.0) * gamma((p + 1.0) / 2.0) / std::f64::consts::PI.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn fit_recovers_a_line() {
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 - 0.5 * v).collect();
        let fit = linear_fit(&x, &y).unwrap();
        assert_relative_eq!(fit.slope, -0.5, max_relative = 1e-14);
        assert_relative_eq!(fit.intercept, 3.0, max_relative = 1e-14);
        assert_relative_eq!(fit.r_squared, 1.0, max_relative = 1e-14);
        assert!(linear_fit(&[1.0, 1.0], &[0.0, 1.0]).is_none());
    }

    #[test]
    fn gaussian_moments() {
        assert_relative_eq!(
            gaussian_abs_moment(1.0),
            (2.0 / std::f64::consts::PI).sqrt(),
            max_relative = 1e-13
        );
        assert_relative_eq!(gaussian_abs_moment(2.0), 1.0, max_relative = 1e-13);
        assert_relative_eq!(gaussian_abs_moment(4.0), 3.0, max_relative = 1e-13);
        assert_relative_eq!(gaussian_abs_moment(8.0), 105.0, max_relative = 1e-12);
    }

    #[test]
    fn order_statistics_and_drift() {
        let xs = [4.0, 1.0, 3.0, 2.0, 5.0];
        assert_eq!(median(&xs), 3.0);
        assert_eq!(relative_drift(&[2.0, 2.5, 2.2]), 0.25);
        assert_eq!(inversions(&[5.0, 4.0, 4.5, 3.0, 3.5]), 2);
        assert_eq!(relative_change(0.0, 0.0), 0.0);
        let (m, se) = moment_norm(&[1.0, -1.0, 1.0, -1.0], 2.0);
        assert_eq!((m, se), (1.0, 0.0));
    }
}
