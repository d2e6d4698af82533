use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::path::{euclid_dist, SampledPath};
use crate::error::{Error, Result};
use crate::orlicz::{luxemburg_uniform, YoungFunction};

/// Largest grid (in cells) on which O(n^2) exhaustive kernels are allowed.
pub const EXHAUSTIVE_MAX_CELLS: usize = 1 << 12;

/// How a level quantity of the modulus is evaluated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormMode {
    /// One increment norm per dyadic shift.
    #[default]
    Fast,
    /// Supremum over every grid shift up to the dyadic one.
    Exhaustive,
}

impl std::fmt::Display for NormMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            NormMode::Fast => "fast",
            NormMode::Exhaustive => "exhaustive",
        })
    }
}

impl std::str::FromStr for NormMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "fast" => Ok(NormMode::Fast),
            "exhaustive" => Ok(NormMode::Exhaustive),
            other => Err(Error::param(format!("unknown norm mode `{other}`"))),
        }
    }
}

pub(crate) fn check_exhaustive(path: &SampledPath) -> Result<()> {
    if path.cells() > EXHAUSTIVE_MAX_CELLS {
        return Err(Error::UnsupportedMode(format!(
            "exhaustive kernels are limited to {EXHAUSTIVE_MAX_CELLS} cells, path has {}",
            path.cells()
        )));
    }
    Ok(())
}

/// `||f(t_{i+s}) - f(t_i)||` for the left endpoints `i = 0 .. cells - s`.
pub(crate) fn increments(path: &SampledPath, steps: usize) -> Vec<f64> {
    let cells = path.cells();
    if steps >= cells {
        return Vec::new();
    }
    let d = path.dim();
    let data = path.data();
    if d == 1 {
        return (0..cells - steps).map(|i| (data[i + steps] - data[i]).abs()).collect();
    }
    (0..cells - steps)
        .map(|i| euclid_dist(&data[(i + steps) * d..(i + steps + 1) * d], &data[i * d..(i + 1) * d]))
        .collect()
}

/// `||f||_{L^N(I)}` with left-endpoint weights `dt` on nodes `0 .. cells`.
pub fn lebesgue_norm(path: &SampledPath, young: YoungFunction) -> f64 {
    let mut norms = path.norms();
    norms.pop();
    luxemburg_uniform(&norms, path.dt(), young)
}

/// Luxemburg norm of `s -> ||f(s + h) - f(s)||` over `I(h) = [t0, t1 - h]`,
/// `h = h_steps * dt`. Shifts reaching past the interval give 0.
pub fn increment_norm(path: &SampledPath, h_steps: usize, young: YoungFunction) -> Result<f64> {
    if h_steps == 0 {
        return Err(Error::param("increment shift must be at least one grid step"));
    }
    young.validate()?;
    Ok(increment_norm_unchecked(path, h_steps, young))
}

pub(crate) fn increment_norm_unchecked(path: &SampledPath, h_steps: usize, young: YoungFunction) -> f64 {
    luxemburg_uniform(&increments(path, h_steps), path.dt(), young)
}

/// Increment norms for every shift `s = 0 ..= cells` (entries 0 and `cells`
/// are 0). Parallel over shifts; the output does not depend on thread count.
pub fn increment_norm_table(path: &SampledPath, young: YoungFunction) -> Result<Vec<f64>> {
    young.validate()?;
    check_exhaustive(path)?;
    let cells = path.cells();
    let mut table: Vec<f64> = (0..=cells)
        .into_par_iter()
        .map(|s| {
            if s == 0 {
                0.0
            } else {
                increment_norm_unchecked(path, s, young)
            }
        })
        .collect();
    table[0] = 0.0;
    Ok(table)
}

/// Running maximum of [`increment_norm_table`]: `omega[s]` is the grid
/// modulus `omega(f, s dt)`.
pub fn modulus_table(path: &SampledPath, young: YoungFunction) -> Result<Vec<f64>> {
    let mut table = increment_norm_table(path, young)?;
    for s in 1..table.len() {
        table[s] = table[s].max(table[s - 1]);
    }
    Ok(table)
}

/// Modulus at `t = 2^{-j} |I|`: the exhaustive mode takes the sup over all
/// shifts `s dt <= t`, the fast mode evaluates the single largest shift.
pub fn modulus(path: &SampledPath, j: u32, young: YoungFunction, mode: NormMode) -> Result<f64> {
    young.validate()?;
    let max_steps = if j >= usize::BITS { 0 } else { path.cells() >> j };
    if max_steps == 0 {
        return Err(Error::Resolution(format!(
            "level {j} is finer than the grid of {} cells",
            path.cells()
        )));
    }
    match mode {
        NormMode::Fast => Ok(increment_norm_unchecked(path, max_steps, young)),
        NormMode::Exhaustive => modulus_steps(path, max_steps, young),
    }
}

/// `omega(f, max_steps * dt)` as an exact sup over grid shifts.
pub fn modulus_steps(path: &SampledPath, max_steps: usize, young: YoungFunction) -> Result<f64> {
    young.validate()?;
    check_exhaustive(path)?;
    let top = max_steps.min(path.cells().saturating_sub(1));
    Ok((1..=top)
        .into_par_iter()
        .map(|s| increment_norm_unchecked(path, s, young))
        .collect::<Vec<_>>()
        .into_iter()
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn heaviside(j: u32) -> SampledPath {
        SampledPath::from_scalar_fn(0.0, 1.0, j, |t| if t >= 0.5 { 1.0 } else { 0.0 }).unwrap()
    }

    #[test]
    fn constant_path_has_zero_increments() {
        let p = SampledPath::from_fn(0.0, 1.0, 6, 3, |_, k| k as f64).unwrap();
        for s in 1..=64 {
            assert_eq!(increment_norm(&p, s, YoungFunction::PHI2).unwrap(), 0.0);
        }
        assert_eq!(
            modulus(&p, 1, YoungFunction::Power(2.0), NormMode::Exhaustive).unwrap(),
            0.0
        );
    }

    #[test]
    fn ramp_increment_norm_matches_closed_form() {
        let p = SampledPath::from_scalar_fn(0.0, 1.0, 10, |t| t).unwrap();
        for pp in [1.0, 2.0, 3.0] {
            for s in [1usize, 7, 256, 512, 1000] {
                let h = s as f64 / 1024.0;
                let expected = h * (1.0 - h).powf(1.0 / pp);
                let got = increment_norm(&p, s, YoungFunction::Power(pp)).unwrap();
                assert_relative_eq!(got, expected, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn heaviside_increment_norm_matches_closed_form() {
        let p = heaviside(10);
        for pp in [1.0, 2.0, 4.0] {
            for s in [1usize, 3, 100, 512] {
                let h = s as f64 / 1024.0;
                let got = increment_norm(&p, s, YoungFunction::Power(pp)).unwrap();
                assert_relative_eq!(got, h.powf(1.0 / pp), max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn shifts_past_the_interval_are_empty() {
        let p = heaviside(4);
        assert_eq!(increment_norm(&p, 16, YoungFunction::PHI2).unwrap(), 0.0);
        assert_eq!(increment_norm(&p, 40, YoungFunction::PHI2).unwrap(), 0.0);
        assert!(increment_norm(&p, 0, YoungFunction::PHI2).is_err());
    }

    #[test]
    fn exhaustive_and_fast_agree_on_the_ramp_at_fine_levels() {
        // h (1 - h)^{1/p} increases for h <= p / (p + 1).
        let p = SampledPath::from_scalar_fn(0.0, 1.0, 8, |t| t).unwrap();
        for j in 2..=8 {
            let fast = modulus(&p, j, YoungFunction::Power(2.0), NormMode::Fast).unwrap();
            let full = modulus(&p, j, YoungFunction::Power(2.0), NormMode::Exhaustive).unwrap();
            assert_relative_eq!(fast, full, max_relative = 1e-14);
        }
    }

    #[test]
    fn modulus_dominates_the_dyadic_increment() {
        let p = SampledPath::from_scalar_fn(0.0, 1.0, 8, |t| (17.0 * t).sin() + t * t).unwrap();
        for j in 0..=8 {
            let fast = modulus(&p, j, YoungFunction::PHI2, NormMode::Fast).unwrap();
            let full = modulus(&p, j, YoungFunction::PHI2, NormMode::Exhaustive).unwrap();
            assert!(full >= fast);
        }
        assert!(matches!(
            modulus(&p, 9, YoungFunction::PHI2, NormMode::Fast),
            Err(Error::Resolution(_))
        ));
    }

    #[test]
    fn exhaustive_kernels_are_gated() {
        let p = SampledPath::zeros(0.0, 1.0, 13, 1).unwrap();
        assert!(matches!(
            modulus_table(&p, YoungFunction::PHI2),
            Err(Error::UnsupportedMode(_))
        ));
    }
}
