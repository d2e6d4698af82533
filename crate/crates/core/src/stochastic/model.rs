use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A diagonal generator `A = diag(-lambda_k)` with semigroup
/// `S(t) = diag(exp(-lambda_k t))` and `Q(t) = int_0^t S = diag((1 - e^{-lambda_k t}) / lambda_k)`.
///
/// `shift` is the `mu` of the stabilised semigroup `U(t) = e^{mu t} S(t)`,
/// used as a pathwise multiplier by
/// [`deterministic_convolution_shifted`](crate::stochastic::deterministic_convolution_shifted).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagonalModel {
    eigenvalues: Vec<f64>,
    #[serde(default)]
    shift: f64,
}

impl DiagonalModel {
    pub fn new(eigenvalues: Vec<f64>) -> Result<Self> {
        Self::with_shift(eigenvalues, 0.0)
    }

    pub fn with_shift(eigenvalues: Vec<f64>, shift: f64) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::param("a diagonal model needs at least one mode"));
        }
        if let Some(l) = eigenvalues.iter().find(|l| !l.is_finite() || **l < 0.0) {
            return Err(Error::param(format!("eigenvalues must be finite and >= 0, got {l}")));
        }
        if !shift.is_finite() {
            return Err(Error::param("shift must be finite"));
        }
        if let Some(l) = eigenvalues.iter().find(|&&l| l - shift < 0.0) {
            return Err(Error::param(format!(
                "shift {shift} leaves the stabilised eigenvalue {l} - shift negative"
            )));
        }
        Ok(Self { eigenvalues, shift })
    }

    /// Dirichlet Laplacian on (0, 1): `lambda_k = (pi k)^2`, `k = 1..=d`.
    pub fn heat(d: usize) -> Result<Self> {
        Self::new((1..=d).map(|k| (std::f64::consts::PI * k as f64).powi(2)).collect())
    }

    pub fn scalar(lambda: f64) -> Result<Self> {
        Self::new(vec![lambda])
    }

    pub fn zero(d: usize) -> Result<Self> {
        Self::new(vec![0.0; d])
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub(crate) fn step_coefficients(&self, dt: f64) -> Vec<StepCoefficients> {
        self.eigenvalues.iter().map(|&l| StepCoefficients::new(l, dt)).collect()
    }
}

/// Per-mode constants of the exact one-step recursions over `dt`.
///
/// With `a = e^{-lambda dt}`, `phi1 = int_0^dt e^{-lambda r} dr`,
/// `phi2 = int_0^dt e^{-2 lambda r} dr`:
/// the convolution innovation `g = int e^{-lambda(t_{i+1}-s)} dW` splits as
/// `rho dW + sqrt(resid) xi` with `rho = phi1 / dt` and
/// `resid = phi2 - phi1^2 / dt`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct StepCoefficients {
    pub decay: f64,
    pub phi1: f64,
    pub rho: f64,
    pub resid_sd: f64,
    /// `(1 - rho) / lambda`, weight of `f dW` in the `Q`-convolution step.
    pub q_drive: f64,
    /// `sqrt(resid) / lambda`, weight of the corrector in the `Q`-convolution step.
    pub q_corrector: f64,
}

/// Below this `x = lambda dt` the cancelling differences use Taylor series.
const SERIES_CUTOFF: f64 = 0.2;

/// `(phi2 / dt - rho^2) / x^2`.
const RESID_SERIES: [f64; 12] = [
    1.0 / 12.0,
    -1.0 / 12.0,
    17.0 / 360.0,
    -7.0 / 360.0,
    43.0 / 6720.0,
    -107.0 / 60480.0,
    769.0 / 1814400.0,
    -163.0 / 1814400.0,
    4097.0 / 239500800.0,
    -709.0 / 239500800.0,
    6827.0 / 14529715200.0,
    -15019.0 / 217945728000.0,
];

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// `(x - (1 - e^{-x})) / x^2 = sum_n (-x)^n / (n + 2)!`.
fn drive_ratio(x: f64) -> f64 {
    if x < SERIES_CUTOFF {
        let mut term = 0.5;
        let mut acc = 0.0;
        for n in 0..14 {
            acc += term;
            term *= -x / (n as f64 + 3.0);
        }
        acc
    } else {
        (x + (-x).exp_m1()) / (x * x)
    }
}

fn resid_ratio(x: f64) -> f64 {
    if x < SERIES_CUTOFF {
        horner(&RESID_SERIES, x)
    } else {
        let rho = -(-x).exp_m1() / x;
        let phi2 = -(-2.0 * x).exp_m1() / (2.0 * x);
        ((phi2 - rho * rho) / (x * x)).max(0.0)
    }
}

impl StepCoefficients {
    pub fn new(lambda: f64, dt: f64) -> Self {
        let x = lambda * dt;
        let rho = if x == 0.0 { 1.0 } else { -(-x).exp_m1() / x };
        let r = resid_ratio(x);
        Self {
            decay: (-x).exp(),
            phi1: rho * dt,
            rho,
            resid_sd: x * (r * dt).sqrt(),
            q_drive: dt * drive_ratio(x),
            q_corrector: dt * (r * dt).sqrt(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn validation() {
        assert!(DiagonalModel::new(vec![]).is_err());
        assert!(DiagonalModel::new(vec![1.0, -1.0]).is_err());
        assert!(DiagonalModel::with_shift(vec![1.0], 2.0).is_err());
        assert!(DiagonalModel::with_shift(vec![0.0, 1.0], -1.0).is_ok());
        let heat = DiagonalModel::heat(32).unwrap();
        assert_eq!(heat.dim(), 32);
        assert_relative_eq!(heat.eigenvalues()[1], 4.0 * std::f64::consts::PI.powi(2));
    }

    #[test]
    fn coefficients_match_definitions_away_from_zero() {
        let (lambda, dt) = (3.0, 0.25);
        let c = StepCoefficients::new(lambda, dt);
        let a = (-lambda * dt).exp();
        let phi1 = (1.0 - a) / lambda;
        let phi2 = (1.0 - a * a) / (2.0 * lambda);
        assert_relative_eq!(c.decay, a, max_relative = 1e-15);
        assert_relative_eq!(c.phi1, phi1, max_relative = 1e-14);
        assert_relative_eq!(c.resid_sd.powi(2), phi2 - phi1 * phi1 / dt, max_relative = 1e-12);
        assert_relative_eq!(c.q_drive, (1.0 - phi1 / dt) / lambda, max_relative = 1e-13);
        assert_relative_eq!(c.q_corrector, c.resid_sd / lambda, max_relative = 1e-14);
    }

    #[test]
    fn coefficients_are_continuous_at_the_series_cutoff() {
        let dt = 1.0;
        let below = StepCoefficients::new(SERIES_CUTOFF * (1.0 - 1e-12), dt);
        let above = StepCoefficients::new(SERIES_CUTOFF * (1.0 + 1e-12), dt);
        assert_relative_eq!(below.resid_sd, above.resid_sd, max_relative = 1e-11);
        assert_relative_eq!(below.q_drive, above.q_drive, max_relative = 1e-11);
        assert_relative_eq!(below.q_corrector, above.q_corrector, max_relative = 1e-11);
    }

    #[test]
    fn zero_eigenvalue_limits() {
        let dt = 0.01;
        let c = StepCoefficients::new(0.0, dt);
        assert_eq!((c.decay, c.rho, c.phi1, c.resid_sd), (1.0, 1.0, dt, 0.0));
        assert_relative_eq!(c.q_drive, dt / 2.0, max_relative = 1e-15);
        assert_relative_eq!(c.q_corrector, dt.powf(1.5) / 12f64.sqrt(), max_relative = 1e-15);
    }
}
