use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::modulus::{check_exhaustive, increment_norm_unchecked, increments, lebesgue_norm, modulus_table, NormMode};
use super::path::SampledPath;
use crate::error::{Error, Result};
use crate::orlicz::YoungFunction;

/// The summability index `q` of `B^alpha_{N,q}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Summability {
    Finite(f64),
    Infinite,
}

impl Summability {
    pub fn value(self) -> f64 {
        match self {
            Summability::Finite(q) => q,
            Summability::Infinite => f64::INFINITY,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Summability::Infinite)
    }

    /// `||terms||_{l^q}`.
    pub fn combine(self, terms: impl Iterator<Item = f64>) -> f64 {
        match self {
            Summability::Infinite => terms.fold(0.0, f64::max),
            Summability::Finite(q) => {
                let terms: Vec<f64> = terms.collect();
                let peak = terms.iter().copied().fold(0.0, f64::max);
                if peak == 0.0 {
                    return 0.0;
                }
                peak * terms.iter().map(|t| (t / peak).powf(q)).sum::<f64>().powf(1.0 / q)
            }
        }
    }
}

impl fmt::Display for Summability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Summability::Finite(q) => write!(f, "{q}"),
            Summability::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Summability {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "∞" => Ok(Summability::Infinite),
            other => match other.parse::<f64>() {
                Ok(q) if q.is_infinite() && q > 0.0 => Ok(Summability::Infinite),
                Ok(q) if q >= 1.0 => Ok(Summability::Finite(q)),
                _ => Err(Error::param(format!("q must be a number >= 1 or `inf`, got `{other}`"))),
            },
        }
    }
}

/// Smoothness, summability and Young function of `B^alpha_{N,q}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BesovParams {
    pub alpha: f64,
    pub q: Summability,
    pub young: YoungFunction,
}

impl BesovParams {
    pub fn new(alpha: f64, q: Summability, young: YoungFunction) -> Result<Self> {
        let params = Self { alpha, q, young };
        params.validate()?;
        Ok(params)
    }

    /// `B^alpha_{N,inf}`.
    pub fn sup(alpha: f64, young: YoungFunction) -> Result<Self> {
        Self::new(alpha, Summability::Infinite, young)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::param(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if let Summability::Finite(q) = self.q {
            if !(q >= 1.0 && q.is_finite()) {
                return Err(Error::param(format!("q must be >= 1, got {q}")));
            }
        }
        self.young.validate()?;
        Ok(())
    }
}

/// One dyadic level `h = 2^m dt` of the seminorm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelTerm {
    /// `m` in `h = 2^m dt`; with `2^J` cells on a unit interval, `j = J - m`.
    pub exponent: u32,
    pub shift: usize,
    pub h: f64,
    /// Single-shift increment norm at `h`.
    pub increment: f64,
    /// Grid modulus `omega(f, h)`; exhaustive mode only.
    pub omega: Option<f64>,
    /// `h^{-alpha}` times the level quantity of the chosen mode.
    pub term: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModulusProfile {
    pub mode: NormMode,
    pub alpha: f64,
    pub levels: Vec<LevelTerm>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BesovNorm {
    pub value: f64,
    pub lebesgue: f64,
    pub seminorm: f64,
    pub profile: ModulusProfile,
}

/// Dyadic shifts `2^m`, `m = 0 ..= ceil(log2 cells)`. The last one reaches the
/// whole interval, so the profile covers every scale the grid resolves.
fn dyadic_exponents(cells: usize) -> std::ops::RangeInclusive<u32> {
    0..=cells.next_power_of_two().trailing_zeros()
}

/// `||f||_{L^N} + || (h_m^{-alpha} w_m)_m ||_{l^q}` over the dyadic shifts
/// `h_m = 2^m dt`, with `w_m` the increment norm (fast) or the grid modulus
/// (exhaustive) at `h_m`.
pub fn dyadic_besov_norm(path: &SampledPath, params: &BesovParams, mode: NormMode) -> Result<BesovNorm> {
    params.validate()?;
    let (lebesgue, profile) = rayon::join(
        || lebesgue_norm(path, params.young),
        || dyadic_profile(path, params, mode),
    );
    let profile = profile?;
    let seminorm = params.q.combine(profile.levels.iter().map(|l| l.term));
    Ok(BesovNorm {
        value: lebesgue + seminorm,
        lebesgue,
        seminorm,
        profile,
    })
}

pub fn dyadic_profile(path: &SampledPath, params: &BesovParams, mode: NormMode) -> Result<ModulusProfile> {
    params.validate()?;
    let cells = path.cells();
    let dt = path.dt();
    let omega = match mode {
        NormMode::Fast => None,
        NormMode::Exhaustive => Some(modulus_table(path, params.young)?),
    };
    let levels = dyadic_exponents(cells)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|m| {
            let shift = 1usize << m;
            let h = shift as f64 * dt;
            let increment = if shift < cells {
                increment_norm_unchecked(path, shift, params.young)
            } else {
                0.0
            };
            let omega_m = omega.as_ref().map(|t| t[shift.min(cells)]);
            let level_value = omega_m.unwrap_or(increment);
            LevelTerm {
                exponent: m,
                shift,
                h,
                increment,
                omega: omega_m,
                term: h.powf(-params.alpha) * level_value,
            }
        })
        .collect();
    Ok(ModulusProfile {
        mode,
        alpha: params.alpha,
        levels,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FullNorm {
    pub value: f64,
    pub lebesgue: f64,
    pub seminorm: f64,
    /// Grid shift attaining the supremum.
    pub argmax_shift: usize,
}

/// `||f||_{L^N} + sup_t t^{-alpha} omega(f, t)` over every grid multiple `t`
/// (`q = inf` only).
pub fn full_besov_norm(path: &SampledPath, params: &BesovParams) -> Result<FullNorm> {
    params.validate()?;
    if !params.q.is_infinite() {
        return Err(Error::UnsupportedMode(
            "the continuous-t norm is implemented for q = inf only; use dyadic_besov_norm".into(),
        ));
    }
    let omega = modulus_table(path, params.young)?;
    let (seminorm, argmax_shift) = sup_seminorm_from_modulus(&omega, path.dt(), params.alpha);
    let lebesgue = lebesgue_norm(path, params.young);
    Ok(FullNorm {
        value: lebesgue + seminorm,
        lebesgue,
        seminorm,
        argmax_shift,
    })
}

/// `max_s (s dt)^{-alpha} omega[s]` and its argmax.
pub fn sup_seminorm_from_modulus(omega: &[f64], dt: f64, alpha: f64) -> (f64, usize) {
    omega
        .iter()
        .enumerate()
        .skip(1)
        .map(|(s, w)| ((s as f64 * dt).powf(-alpha) * w, s))
        .fold((0.0, 0), |best, cur| if cur.0 > best.0 { cur } else { best })
}

/// Double-sum quadrature of the `W^{s,p}` Gagliardo seminorm,
/// `(sum_{i != k} ||f_i - f_k||^p / |t_i - t_k|^{sp+1} dt^2)^{1/p}`, over the
/// left endpoints `0 .. cells`.
pub fn gagliardo_seminorm(path: &SampledPath, s: f64, p: f64) -> Result<f64> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::param(format!("smoothness must lie in (0, 1), got {s}")));
    }
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::param(format!("p must be finite and >= 1, got {p}")));
    }
    check_exhaustive(path)?;
    let dt = path.dt();
    let cells = path.cells();
    // Sum by separation; each separation occurs twice in the ordered double sum.
    let per_shift: Vec<f64> = (1..cells)
        .into_par_iter()
        .map(|k| {
            let inner: f64 = increments(path, k).iter().map(|x| x.powf(p)).sum();
            2.0 * inner * (k as f64 * dt).powf(-(s * p + 1.0)) * dt * dt
        })
        .collect();
    Ok(per_shift.iter().sum::<f64>().powf(1.0 / p))
}
