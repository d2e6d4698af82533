//! Gaussian-type tails of `||f.W||` and `||S<>f||` in `B^alpha_{Phi2,inf}`.

use super::{halves, model_for, preset_integrand, ReportBuilder};
use crate::besov::{dyadic_besov_norm, BesovParams, NormMode};
use crate::error::Result;
use crate::harness::config::ExperimentConfig;
use crate::harness::report::{Check, ExperimentReport, FittedConstant, Table};
use crate::harness::stats::{linear_fit, quantile, relative_change};
use crate::orlicz::{luxemburg_norm, DiscreteMeasure, YoungFunction};
use crate::stochastic::{ito_integral, stochastic_convolution, WienerIncrements};

#[derive(Clone, Debug)]
pub(crate) struct TailFit {
    /// Points `(eps, q(eps))` inside the frequency window.
    pub points: Vec<(f64, f64)>,
    pub c: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

fn exceedance(sorted: &[f64], eps: f64) -> f64 {
    let below = sorted.partition_point(|&v| v <= eps);
    (sorted.len() - below) as f64 / sorted.len() as f64
}

/// Least-squares fit of `ln q(eps) = b - c eps^2` over an `eps` grid spanning
/// the empirical quantiles of the frequency window `[lo, hi]`. If fewer than
/// three grid points carry exceedances the grid is widened downwards.
pub(crate) fn fit_tail(norms: &[f64], points: usize, lo: f64, hi: f64) -> Option<TailFit> {
    let mut sorted = norms.to_vec();
    sorted.sort_by(f64::total_cmp);
    let top = quantile(&sorted, 1.0 - lo);
    let mut bottom = quantile(&sorted, 1.0 - hi);
    for _ in 0..8 {
        let grid: Vec<(f64, f64)> = (0..points)
            .map(|i| bottom + (top - bottom) * i as f64 / (points - 1) as f64)
            .map(|eps| (eps, exceedance(&sorted, eps)))
            .filter(|&(eps, q)| eps > 0.0 && q > 0.0 && q >= lo && q <= hi)
            .collect();
        if grid.len() >= 3 {
            let x: Vec<f64> = grid.iter().map(|(e, _)| e * e).collect();
            let y: Vec<f64> = grid.iter().map(|(_, q)| q.ln()).collect();
            let fit = linear_fit(&x, &y)?;
            return Some(TailFit {
                points: grid,
                c: -fit.slope,
                intercept: fit.intercept,
                r_squared: fit.r_squared,
            });
        }
        bottom *= 0.5;
    }
    None
}

/// Smallest `C` with `q(eps) <= 2 exp(-eps^2 / (C delta)^2)` at every point.
fn tail_constant(fit: &TailFit, delta: f64) -> f64 {
    fit.points
        .iter()
        .map(|&(eps, q)| eps / (delta * (2.0 / q).ln().sqrt()))
        .fold(0.0, f64::max)
}

const MAPS: [&str; 2] = ["integral", "convolution"];

pub(crate) fn run(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut report = ReportBuilder::new(config);
    let model = model_for(config)?;
    let params = BesovParams::sup(config.alpha, config.young)?;
    let r = config.replicas;
    let (lo, hi) = (config.tol("window_lo"), config.tol("window_hi"));
    let deltas = [config.scale, 0.5 * config.scale];

    // norms[delta][map][replica]
    let mut norms = Vec::new();
    let mut f_norms = Vec::new();
    for (s, &delta) in deltas.iter().enumerate() {
        let f = preset_integrand(config.integrand, delta, config.j, config.d, config.m)?;
        f_norms.push(f.lq_norm(config.q)?);
        let label = if s == 0 { "delta" } else { "half_delta" };
        let pairs = report.replicate(label, (s * r) as u64, r, |spec| {
            let inc = WienerIncrements::sample(0.0, 1.0, config.j, config.m, spec)?;
            let m = ito_integral(&f, &inc)?;
            let u = stochastic_convolution(&f, &model, &inc)?;
            Ok([
                dyadic_besov_norm(&m, &params, NormMode::Fast)?.value,
                dyadic_besov_norm(&u, &params, NormMode::Fast)?.value,
            ])
        })?;
        norms.push([0, 1].map(|k| pairs.iter().map(|p| p[k]).collect::<Vec<f64>>()));
    }

    for (k, map) in MAPS.iter().enumerate() {
        if f_norms[0] == 0.0 {
            let hits = norms[0][k].iter().filter(|&&v| v > 0.0).count();
            report.check(Check::none(
                &format!("{map}_zero_exceedance"),
                "f = 0: no exceedance at any eps > 0",
                hits,
            ));
            continue;
        }
        let mut cs = Vec::new();
        for (s, &delta) in f_norms.iter().enumerate() {
            let tag = if s == 0 { "delta" } else { "half_delta" };
            let Some(fit) = fit_tail(&norms[s][k], config.eps_points, lo, hi) else {
                report.check(Check::at_least(
                    &format!("{map}_{tag}_fit"),
                    "the exceedance window holds at least three grid points",
                    0.0,
                    3.0,
                ));
                cs.push(f64::NAN);
                continue;
            };
            let mut table = Table::new(
                &format!("tail_{map}_{tag}"),
                &["eps", "eps_squared", "frequency", "log_frequency"],
            )
            .with_plot("eps_squared", &["log_frequency"], false);
            for &(eps, q) in &fit.points {
                table.push(vec![eps, eps * eps, q, q.ln()]);
            }
            report.table(table);
            report.check(Check::at_least(
                &format!("{map}_{tag}_decay"),
                "log q(eps) = b - c eps^2 has c > 0",
                fit.c,
                f64::MIN_POSITIVE,
            ));
            report.check(Check::at_least(
                &format!("{map}_{tag}_r_squared"),
                "Gaussian-type decay: the quadratic-exponent fit explains the tail",
                fit.r_squared,
                config.tol("r_squared"),
            ));
            let (first, second) = halves(&norms[s][k]);
            let c_t = tail_constant(&fit, delta);
            let refit: Vec<f64> = [first, second]
                .iter()
                .map(|h| fit_tail(h, config.eps_points, lo, hi).map_or(f64::NAN, |f| tail_constant(&f, delta)))
                .collect();
            report.constant(
                FittedConstant::new(&format!("c_{map}_{tag}"), fit.c)
                    .with("intercept", fit.intercept)
                    .with("r_squared", fit.r_squared)
                    .with("points", fit.points.len() as f64),
            );
            report.constant(
                FittedConstant::new(&format!("C_T_{map}_{tag}"), c_t)
                    .with("first_half", refit[0])
                    .with("second_half", refit[1])
                    .with("delta", delta),
            );
            report.check(Check::at_most(
                &format!("{map}_{tag}_refit"),
                "the fitted tail constant is stable under a disjoint seed set",
                relative_change(refit[0], refit[1]),
                config.tol("refit"),
            ));
            cs.push(fit.c);
        }
        let h = config.tol("halving");
        report.check(Check::within(
            &format!("{map}_halving"),
            "halving delta quadruples the decay rate (delta^-2 scaling)",
            cs[1] / cs[0],
            4.0 * (1.0 - h),
            4.0 * (1.0 + h),
        ));
        let mu = DiscreteMeasure::uniform(r, 1.0 / r as f64)?;
        let omega = luxemburg_norm(&norms[0][k], &mu, YoungFunction::PHI2)?;
        report.constant(FittedConstant::new(&format!("lphi2_omega_{map}"), omega).with("norm_of_f", f_norms[0]));
    }
    report.note("lphi2_omega_* is the empirical L^Phi2(Omega) norm of the path norm; reported, not asserted");
    Ok(report.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn fit_on_a_half_normal_sample() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let xs: Vec<f64> = (0..20_000)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                z.abs()
            })
            .collect();
        let fit = fit_tail(&xs, 20, 1e-3, 0.5).unwrap();
        // ln P(|Z| > e) ~ -e^2 / 2 up to a slowly varying factor.
        assert!(fit.c > 0.3 && fit.c < 0.7, "{fit:?}");
        assert!(fit.r_squared > 0.97);
        let doubled: Vec<f64> = xs.iter().map(|x| 2.0 * x).collect();
        let fit2 = fit_tail(&doubled, 20, 1e-3, 0.5).unwrap();
        assert!((fit.c / fit2.c - 4.0).abs() < 1e-9);
    }

    #[test]
    fn degenerate_samples_do_not_fit() {
        assert!(fit_tail(&[0.0; 100], 20, 1e-3, 0.5).is_none());
    }
}
