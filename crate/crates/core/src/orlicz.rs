//! Young functions and Luxemburg norms on finite discrete measure spaces.
//!
//! Every other module reduces its Orlicz-type quantities to
//! [`luxemburg_norm`] over a [`DiscreteMeasure`] (quadrature weights), so the
//! root finder here is the inner loop of the whole crate.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Arguments above this threshold switch the modular sum to log-sum-exp.
const EXP_OVERFLOW_ARG: f64 = 700.0;
/// Absolute tolerance on `ln(1/lambda)` for the Luxemburg root.
const LOG_SCALE_TOL: f64 = 1e-12;
/// Largest `x` for which `e^x` is evaluated directly in the exp-power solver.
const EXP_SAFE_BRACKET: f64 = 600.0;
/// Relative tolerance of the `PLog` inverse.
const PLOG_INVERSE_RTOL: f64 = 1e-12;

/// A parametric Young function `N: [0, inf) -> [0, inf)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "param", rename_all = "snake_case")]
pub enum YoungFunction {
    /// `N(x) = x^p`.
    Power(f64),
    /// `N(x) = exp(x^beta) - 1`.
    ExpPower(f64),
    /// `N(t) = t^p log^{p/2}(t + 1)`.
    PLog(f64),
}

impl YoungFunction {
    /// `exp(x^2) - 1`, the sub-Gaussian Young function.
    pub const PHI2: YoungFunction = YoungFunction::ExpPower(2.0);

    pub fn validate(self) -> Result<Self> {
        let (name, param) = match self {
            YoungFunction::Power(p) => ("power exponent", p),
            YoungFunction::ExpPower(b) => ("exp-power exponent", b),
            YoungFunction::PLog(p) => ("plog exponent", p),
        };
        if !param.is_finite() || param < 1.0 {
            return Err(Error::param(format!("{name} must be finite and >= 1, got {param}")));
        }
        Ok(self)
    }

    /// Evaluates `N(x)`; negative or non-finite `x` is a domain error.
    pub fn eval(self, x: f64) -> Result<f64> {
        if x.is_nan() || x < 0.0 {
            return Err(Error::domain(format!("Young function argument must be >= 0, got {x}")));
        }
        Ok(self.value(x))
    }

    /// `N(x)` for `x >= 0` without argument checks. Overflows to `+inf`.
    pub fn value(self, x: f64) -> f64 {
        if x == 0.0 {
            return 0.0;
        }
        match self {
            YoungFunction::Power(p) => x.powf(p),
            YoungFunction::ExpPower(b) => x.powf(b).exp_m1(),
            YoungFunction::PLog(p) => x.powf(p) * x.ln_1p().powf(0.5 * p),
        }
    }

    /// `ln N(x)` for `x > 0`; finite far beyond the range where `value` overflows.
    pub fn ln_value(self, x: f64) -> f64 {
        match self {
            YoungFunction::Power(p) => p * x.ln(),
            YoungFunction::ExpPower(b) => {
                let y = x.powf(b);
                if y > 30.0 {
                    y + (-(-y).exp()).ln_1p()
                } else {
                    y.exp_m1().ln()
                }
            }
            YoungFunction::PLog(p) => p * x.ln() + 0.5 * p * x.ln_1p().ln(),
        }
    }

    /// The inverse `N^{-1}(y)`: closed form for `Power` and `ExpPower`,
    /// bracketed bisection for `PLog`.
    pub fn inverse(self, y: f64) -> Result<f64> {
        if y.is_nan() || y < 0.0 {
            return Err(Error::domain(format!("Young inverse argument must be >= 0, got {y}")));
        }
        Ok(self.inverse_unchecked(y))
    }

    pub(crate) fn inverse_unchecked(self, y: f64) -> f64 {
        if y == 0.0 {
            return 0.0;
        }
        if y.is_infinite() {
            return f64::INFINITY;
        }
        match self {
            YoungFunction::Power(p) => y.powf(1.0 / p),
            YoungFunction::ExpPower(b) => y.ln_1p().powf(1.0 / b),
            YoungFunction::PLog(_) => {
                let mut hi = 1.0_f64;
                while self.value(hi) < y {
                    hi *= 2.0;
                }
                let mut lo = hi;
                while self.value(lo) > y {
                    lo *= 0.5;
                }
                while hi - lo > PLOG_INVERSE_RTOL * hi {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if self.value(mid) < y {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            }
        }
    }
}

impl fmt::Display for YoungFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            YoungFunction::Power(p) => write!(f, "power:{p}"),
            YoungFunction::ExpPower(b) => write!(f, "exp:{b}"),
            YoungFunction::PLog(p) => write!(f, "plog:{p}"),
        }
    }
}

impl FromStr for YoungFunction {
    type Err = Error;

    /// Parses `power:<p>`, `exp:<beta>`, `plog:<p>` or the alias `phi2`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("phi2") {
            return Ok(Self::PHI2);
        }
        let (kind, param) = s
            .split_once(':')
            .ok_or_else(|| Error::param(format!("expected <kind>:<param>, got `{s}`")))?;
        let param: f64 = param
            .trim()
            .parse()
            .map_err(|_| Error::param(format!("bad Young function parameter `{param}`")))?;
        let young = match kind.trim() {
            "power" | "p" => YoungFunction::Power(param),
            "exp" | "phi" => YoungFunction::ExpPower(param),
            "plog" => YoungFunction::PLog(param),
            other => return Err(Error::param(format!("unknown Young function kind `{other}`"))),
        };
        young.validate()
    }
}

/// Non-negative quadrature weights of a finite measure.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteMeasure {
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::domain(format!(
                "measure weights must be finite and >= 0, got {w}"
            )));
        }
        Ok(Self { weights })
    }

    pub fn uniform(len: usize, weight: f64) -> Result<Self> {
        Self::new(vec![weight; len])
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// The same measure with every weight multiplied by `factor[i]`.
    pub fn reweighted(&self, factor: &[f64]) -> Result<Self> {
        if factor.len() != self.len() {
            return Err(Error::LengthMismatch {
                what: "reweighting density",
                left: factor.len(),
                right: self.len(),
            });
        }
        Self::new(self.weights.iter().zip(factor).map(|(w, c)| w * c).collect())
    }
}

/// Atoms `(value, weight)` of a function on a discrete measure space.
#[derive(Clone, Copy)]
pub(crate) enum Atoms<'a> {
    Uniform { values: &'a [f64], weight: f64 },
    Weighted { values: &'a [f64], weights: &'a [f64] },
}

impl Atoms<'_> {
    fn for_each(&self, mut f: impl FnMut(f64, f64)) {
        match *self {
            Atoms::Uniform { values, weight } => {
                if weight > 0.0 {
                    values.iter().for_each(|&v| f(v, weight));
                }
            }
            Atoms::Weighted { values, weights } => values
                .iter()
                .zip(weights)
                .filter(|(_, w)| **w > 0.0)
                .for_each(|(&v, &w)| f(v, w)),
        }
    }

    fn max_value_and_mass(&self) -> (f64, f64) {
        let (mut vmax, mut mass) = (0.0_f64, 0.0);
        self.for_each(|v, w| {
            vmax = vmax.max(v);
            mass += w;
        });
        (vmax, mass)
    }

    /// `ln sum_i w_i N(u v_i)`.
    fn log_modular(&self, young: YoungFunction, u: f64, vmax: f64) -> f64 {
        let overflow = match young {
            YoungFunction::ExpPower(b) => (vmax * u).powf(b) > EXP_OVERFLOW_ARG,
            _ => false,
        };
        if overflow {
            let mut peak = f64::NEG_INFINITY;
            self.for_each(|v, w| {
                if v > 0.0 {
                    peak = peak.max(w.ln() + young.ln_value(u * v));
                }
            });
            let mut acc = 0.0;
            self.for_each(|v, w| {
                if v > 0.0 {
                    acc += (w.ln() + young.ln_value(u * v) - peak).exp();
                }
            });
            peak + acc.ln()
        } else {
            let mut acc = 0.0;
            self.for_each(|v, w| {
                if v > 0.0 {
                    acc += w * young.value(u * v);
                }
            });
            acc.ln()
        }
    }
}

fn check_values(values: &[f64]) -> Result<()> {
    match values.iter().find(|v| !v.is_finite() || **v < 0.0) {
        Some(v) => Err(Error::domain(format!(
            "norm arguments must be finite and >= 0, got {v}"
        ))),
        None => Ok(()),
    }
}

fn checked_atoms<'a>(values: &'a [f64], mu: &'a DiscreteMeasure) -> Result<Atoms<'a>> {
    if values.len() != mu.len() {
        return Err(Error::LengthMismatch {
            what: "values and measure weights",
            left: values.len(),
            right: mu.len(),
        });
    }
    check_values(values)?;
    Ok(Atoms::Weighted {
        values,
        weights: mu.weights(),
    })
}

/// `inf { lambda > 0 : sum_i N(values_i / lambda) w_i <= 1 }`.
///
/// Zero-weight atoms are ignored; an empty or identically zero input has norm 0.
pub fn luxemburg_norm(values: &[f64], mu: &DiscreteMeasure, young: YoungFunction) -> Result<f64> {
    let atoms = checked_atoms(values, mu)?;
    Ok(solve_luxemburg(atoms, young))
}

/// Luxemburg norm on the uniform measure `weight * counting`.
/// Callers guarantee finite non-negative values.
pub(crate) fn luxemburg_uniform(values: &[f64], weight: f64, young: YoungFunction) -> f64 {
    solve_luxemburg(Atoms::Uniform { values, weight }, young)
}

pub(crate) fn solve_luxemburg(atoms: Atoms<'_>, young: YoungFunction) -> f64 {
    let (vmax, mass) = atoms.max_value_and_mass();
    if vmax == 0.0 || mass == 0.0 {
        return 0.0;
    }
    if let YoungFunction::Power(p) = young {
        let mut acc = 0.0;
        if p == 1.0 {
            atoms.for_each(|v, w| acc += w * v);
            return acc;
        }
        if p == 2.0 {
            atoms.for_each(|v, w| acc += w * (v / vmax) * (v / vmax));
            return vmax * acc.sqrt();
        }
        atoms.for_each(|v, w| acc += w * (v / vmax).powf(p));
        return vmax * acc.powf(1.0 / p);
    }

    if let YoungFunction::ExpPower(beta) = young {
        if let Some(norm) = solve_exp_power(atoms, beta, vmax, mass) {
            return norm;
        }
    }

    // Root of g(theta) = ln sum w N(e^theta v), theta = ln(1/lambda); g is
    // increasing with slope >= 1 by convexity of N.
    let g = |theta: f64| atoms.log_modular(young, theta.exp(), vmax);
    let lambda_hi = vmax * (mass + 1.0) * 10.0;
    let lambda_lo = vmax / (10.0 * (1.0 + young.inverse_unchecked(1.0 / mass)));
    let (mut a, mut b) = (-lambda_hi.ln(), -lambda_lo.ln());
    let mut fa = g(a);
    while fa > 0.0 {
        a -= std::f64::consts::LN_2;
        fa = g(a);
    }
    let mut fb = g(b);
    while fb < 0.0 {
        b += std::f64::consts::LN_2;
        fb = g(b);
    }

    // Illinois false position with a bisection fallback.
    let mut retained = 0_i8;
    let mut width = b - a;
    for iter in 0..200 {
        if b - a <= LOG_SCALE_TOL {
            break;
        }
        let mut c = b - fb * (b - a) / (fb - fa);
        if !(c > a && c < b) || (iter % 4 == 3 && b - a > 0.5 * width) {
            c = 0.5 * (a + b);
        }
        if iter % 4 == 3 {
            width = b - a;
        }
        let fc = g(c);
        if fc.abs() < 1e-14 {
            return (-c).exp();
        }
        if fc < 0.0 {
            a = c;
            fa = fc;
            if retained == -1 {
                fb *= 0.5;
            }
            retained = -1;
        } else {
            b = c;
            fb = fc;
            if retained == 1 {
                fa *= 0.5;
            }
            retained = 1;
        }
    }
    (-0.5 * (a + b)).exp()
}

/// `N = exp(x^beta) - 1`: with `t_i = (v_i / vmax)^beta` and `x = (vmax / lambda)^beta`
/// the constraint reads `sum w_i (e^{x t_i} - 1) = 1`. The root lies in
/// `[ln(1 + 1/M), ln(1 + 1/M) / t_mean]` (`M` the mass, Jensen for the upper
/// end); safeguarded Newton on `ln sum w (e^{x t} - 1)` converges in a few
/// steps. `None` when the bracket reaches the overflow range.
fn solve_exp_power(atoms: Atoms<'_>, beta: f64, vmax: f64, mass: f64) -> Option<f64> {
    let mut scaled = Vec::new();
    let mut t_mass = 0.0;
    atoms.for_each(|v, w| {
        if v > 0.0 {
            let t = (v / vmax).powf(beta);
            t_mass += w * t;
            scaled.push((w, t));
        }
    });
    let base = (1.0 / mass).ln_1p();
    let (mut lo, mut hi) = (base, base * mass / t_mass);
    if !(hi <= EXP_SAFE_BRACKET) {
        return None;
    }
    let mut x = lo;
    for _ in 0..100 {
        let (mut s, mut ds) = (0.0, 0.0);
        for &(w, t) in &scaled {
            let e = (x * t).exp_m1();
            s += w * e;
            ds += w * t * (e + 1.0);
        }
        let h = s.ln();
        if h == 0.0 {
            break;
        }
        if h < 0.0 {
            lo = lo.max(x);
        } else {
            hi = hi.min(x);
        }
        let mut next = x - h * s / ds;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let done = (next - x).abs() <= 4.0 * f64::EPSILON * x;
        x = next;
        if done || hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
    }
    Some(vmax / x.powf(1.0 / beta))
}

/// `inf_{lambda > 0} (1/lambda) [1 + sum_i N(lambda values_i) w_i]`, the
/// Amemiya-type companion of the Luxemburg norm. It lies in
/// `[||f||, 2 ||f||]`. Returns 0 for the zero function.
pub fn lux_equivalence_mid(values: &[f64], mu: &DiscreteMeasure, young: YoungFunction) -> Result<f64> {
    let atoms = checked_atoms(values, mu)?;
    let norm = solve_luxemburg(atoms, young);
    if norm == 0.0 {
        return Ok(0.0);
    }
    let (vmax, _) = atoms.max_value_and_mass();
    // Minimise over s = ln(lambda), working with the log of the objective.
    let objective = |s: f64| {
        let g = atoms.log_modular(young, s.exp(), vmax);
        let softplus = if g > 0.0 {
            g + (-g).exp().ln_1p()
        } else {
            g.exp().ln_1p()
        };
        -s + softplus
    };
    let start = -norm.ln();
    let mut best = objective(start);

    let mut lo = start - 1.0;
    let mut hi = start + 1.0;
    let (mut f_lo, mut f_hi) = (objective(lo), objective(hi));
    let mut step = 1.0;
    while f_lo < best && start - lo < 700.0 {
        best = f_lo;
        step *= 2.0;
        lo -= step;
        f_lo = objective(lo);
    }
    step = 1.0;
    while f_hi < best && hi - start < 700.0 {
        best = f_hi;
        step *= 2.0;
        hi += step;
        f_hi = objective(hi);
    }

    // Golden-section search; the objective is unimodal in s.
    let inv_phi = 0.5 * (5.0_f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let (mut f1, mut f2) = (objective(x1), objective(x2));
    while b - a > 1e-10 * (1.0 + a.abs().max(b.abs())) {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = objective(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = objective(x2);
        }
    }
    best = best.min(f1).min(f2);
    Ok(best.exp())
}
