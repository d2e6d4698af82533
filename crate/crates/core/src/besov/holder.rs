//! Pointwise regularity functionals: Hölder seminorms, the Lévy ratio and
//! the modulus `zeta` of the Garsia-Rodemich-Rumsey embedding.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::path::SampledPath;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HolderMode {
    /// Every pair of nodes, O(n^2).
    #[default]
    Exact,
    /// Pairs at separations `2^m` only, O(n log n); a lower bound.
    DyadicPairs,
}

/// `max_{i < k} ||f(t_k) - f(t_i)|| / |t_k - t_i|^alpha` over grid nodes.
pub fn holder_seminorm(path: &SampledPath, alpha: f64, mode: HolderMode) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::param(format!("Hölder exponent must lie in (0, 1], got {alpha}")));
    }
    let cells = path.cells();
    let dt = path.dt();
    let separations: Vec<usize> = match mode {
        HolderMode::Exact => (1..=cells).collect(),
        HolderMode::DyadicPairs => (0..).map(|m| 1usize << m).take_while(|&s| s <= cells).collect(),
    };
    let per_separation: Vec<f64> = separations
        .into_par_iter()
        .map(|s| max_increment(path, s) / (s as f64 * dt).powf(alpha))
        .collect();
    Ok(per_separation.into_iter().fold(0.0, f64::max))
}

/// `max_i ||f(t_{i+s}) - f(t_i)||` over every node pair at separation `s`.
pub(crate) fn max_increment(path: &SampledPath, s: usize) -> f64 {
    (0..path.nodes().saturating_sub(s))
        .map(|i| path.dist(i + s, i))
        .fold(0.0, f64::max)
}

/// `max_h sup_s ||f(s + h) - f(s)|| / sqrt(2 h log(1/h))` over the dyadic
/// shifts `h = 2^{-k} |I|`, `ceil(2J/3) <= k <= J`, with `h < 1`.
///
/// Coarser shifts are excluded: at desk-scale `J` the sup over few
/// increments sits well below Lévy's asymptotic constant there.
pub fn levy_ratio(path: &SampledPath) -> Result<f64> {
    let j = path
        .resolution()
        .ok_or_else(|| Error::GridMismatch("the Lévy ratio needs a 2^J grid".into()))?;
    if j < 4 {
        return Err(Error::Resolution(format!("the Lévy ratio needs J >= 4, got {j}")));
    }
    let k_min = (2 * j).div_ceil(3);
    let dt = path.dt();
    let ratio = (k_min..=j)
        .map(|k| {
            let s = 1usize << (j - k);
            let h = s as f64 * dt;
            if h >= 1.0 {
                return 0.0;
            }
            max_increment(path, s) / (2.0 * h * (1.0 / h).ln()).sqrt()
        })
        .fold(0.0, f64::max);
    Ok(ratio)
}

/// `8 alpha int_0^r u^{alpha-1} Phi_beta^{-1}(2 |I| u^{-2}) du`.
///
/// With `u = r v^{1/alpha}` this is `8 r^alpha int_0^1 Phi_beta^{-1}(2|I| r^{-2} v^{-2/alpha}) dv`,
/// whose integrand has only a logarithmic endpoint singularity; it is
/// integrated by double-exponential quadrature in log-space.
pub fn grr_zeta(r: f64, alpha: f64, beta: f64, interval_length: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::param(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if !(beta >= 1.0 && beta.is_finite()) {
        return Err(Error::param(format!("beta must be finite and >= 1, got {beta}")));
    }
    if !(interval_length > 0.0 && interval_length.is_finite()) {
        return Err(Error::param(format!(
            "interval length must be positive, got {interval_length}"
        )));
    }
    if !(r >= 0.0) || r > interval_length * (1.0 + 1e-12) {
        return Err(Error::domain(format!("r must lie in [0, |I|], got {r}")));
    }
    if r == 0.0 {
        return Ok(0.0);
    }
    let ln_c = (2.0 * interval_length).ln() - 2.0 * r.ln();
    let integrand = |v: f64| {
        if v <= 0.0 {
            return 0.0;
        }
        // Phi^{-1}(y) = ln(1 + y)^{1/beta}, ln(1 + y) = softplus(ln y).
        let x = ln_c - 2.0 / alpha * v.ln();
        let softplus = if x > 0.0 {
            x + (-x).exp().ln_1p()
        } else {
            x.exp().ln_1p()
        };
        softplus.powf(1.0 / beta)
    };
    let out = quadrature::integrate(integrand, 0.0, 1.0, 1e-13);
    Ok(8.0 * r.powf(alpha) * out.integral)
}

/// `lim_{r -> 0} zeta(r) / (r^alpha |log r|^{1/beta})`.
pub fn grr_zeta_limit(beta: f64) -> f64 {
    8.0 * 2f64.powf(1.0 / beta)
}
