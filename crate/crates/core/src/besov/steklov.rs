use serde::{Deserialize, Serialize};

use super::path::SampledPath;
use crate::error::{Error, Result};
use crate::orlicz::{luxemburg_uniform, YoungFunction};

/// The two parts of `||f - g_t||_{L^N} + t ||g_t'||_{L^N}` for the Steklov
/// mean `g_t(x) = (1/t) int_x^{x+t} f`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteklovEstimate {
    pub value: f64,
    pub approximation: f64,
    pub derivative: f64,
    /// `t` in grid steps.
    pub shift: usize,
}

/// Grid shifts `s` (with `t = s dt`) for which the estimator is defined.
pub fn steklov_shifts(path: &SampledPath) -> std::ops::RangeInclusive<usize> {
    1..=path.cells().saturating_sub(2)
}

/// Upper bound for the K-functional `K(f, t)` between `L^N` and `W^{1,N}`.
///
/// `t` is rounded to the nearest grid multiple `s dt`. The mean uses the
/// trapezoid rule on the nodes `i ..= i + s`, the derivative a forward
/// difference, and both norms run over the left endpoints `0 .. cells - s - 1`
/// where every ingredient is defined. On this domain both parts are bounded
/// by the grid modulus `omega(f, t)`.
pub fn steklov_k_estimate(path: &SampledPath, t: f64, young: YoungFunction) -> Result<SteklovEstimate> {
    young.validate()?;
    let dt = path.dt();
    if !(t >= dt * (1.0 - 1e-9)) {
        return Err(Error::Resolution(format!("t = {t} is below the grid step {dt}")));
    }
    let s = (t / dt).round() as usize;
    if !steklov_shifts(path).contains(&s) {
        return Err(Error::Resolution(format!(
            "t = {t} leaves no room for the Steklov mean on {} cells",
            path.cells()
        )));
    }
    let d = path.dim();
    let data = path.data();
    let cells = path.cells();
    let inv_s = 1.0 / s as f64;
    let means_len = cells - s; // g_i for i = 0 ..= cells - s - 1

    // Prefix sums per coordinate: prefix[i * d + k] = sum_{l < i} f_{l,k}.
    let mut prefix = vec![0.0; (cells + 2) * d];
    for i in 0..=cells {
        for k in 0..d {
            prefix[(i + 1) * d + k] = prefix[i * d + k] + data[i * d + k];
        }
    }
    let mean = |i: usize, k: usize| {
        let interior = prefix[(i + s) * d + k] - prefix[(i + 1) * d + k];
        inv_s * (0.5 * (data[i * d + k] + data[(i + s) * d + k]) + interior)
    };

    let domain = means_len - 1;
    let mut approx = Vec::with_capacity(domain);
    let mut deriv = Vec::with_capacity(domain);
    let mut g_next: Vec<f64> = (0..d).map(|k| mean(0, k)).collect();
    for i in 0..domain {
        let g = std::mem::replace(&mut g_next, (0..d).map(|k| mean(i + 1, k)).collect());
        let (mut a2, mut b2) = (0.0, 0.0);
        for k in 0..d {
            let a = data[i * d + k] - g[k];
            let b = (g_next[k] - g[k]) / dt;
            a2 += a * a;
            b2 += b * b;
        }
        approx.push(a2.sqrt());
        deriv.push(b2.sqrt());
    }
    let approximation = luxemburg_uniform(&approx, dt, young);
    let derivative = s as f64 * dt * luxemburg_uniform(&deriv, dt, young);
    Ok(SteklovEstimate {
        value: approximation + derivative,
        approximation,
        derivative,
        shift: s,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::besov::modulus::modulus_steps;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn constant_path_is_zero() {
        let p = SampledPath::from_fn(0.0, 1.0, 6, 2, |_, k| k as f64 + 0.5).unwrap();
        let e = steklov_k_estimate(&p, 0.25, YoungFunction::PHI2).unwrap();
        assert!(e.value.abs() < 1e-14);
    }

    #[test]
    fn ramp_matches_closed_form() {
        let p = SampledPath::from_scalar_fn(0.0, 1.0, 10, |t| t).unwrap();
        for pp in [1.0, 2.0, 5.0] {
            for s in [1usize, 10, 300, 1000] {
                let t = s as f64 / 1024.0;
                let len = (1024 - s - 1) as f64 / 1024.0;
                let e = steklov_k_estimate(&p, t, YoungFunction::Power(pp)).unwrap();
                assert_relative_eq!(e.approximation, 0.5 * t * len.powf(1.0 / pp), max_relative = 1e-9);
                assert_relative_eq!(e.derivative, t * len.powf(1.0 / pp), max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn resolution_errors() {
        let p = SampledPath::zeros(0.0, 1.0, 4, 1).unwrap();
        assert!(matches!(
            steklov_k_estimate(&p, 0.01, YoungFunction::PHI2),
            Err(Error::Resolution(_))
        ));
        assert!(matches!(
            steklov_k_estimate(&p, 1.0, YoungFunction::PHI2),
            Err(Error::Resolution(_))
        ));
        assert!(steklov_k_estimate(&p, 14.0 / 16.0, YoungFunction::PHI2).is_ok());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn bounded_by_twice_the_modulus(
            v in prop::collection::vec(-3.0f64..3.0, 33 * 2),
            s in 1usize..31,
            phi in any::<bool>(),
        ) {
            let p = SampledPath::from_fn(0.0, 2.0, 5, 2, |t, k| v[(t * 16.0).round() as usize * 2 + k]).unwrap();
            let young = if phi { YoungFunction::PHI2 } else { YoungFunction::Power(1.5) };
            let e = steklov_k_estimate(&p, s as f64 * p.dt(), young).unwrap();
            let omega = modulus_steps(&p, s, young).unwrap();
            prop_assert!(e.approximation <= omega * (1.0 + 1e-9) + 1e-300);
            prop_assert!(e.derivative <= omega * (1.0 + 1e-9) + 1e-300);
        }
    }
}
