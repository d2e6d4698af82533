use std::fs;
use std::path::Path;

use ndarray::{Array2, Array3};
use serde::{Deserialize, Serialize};

use super::integrand::StepIntegrand;
use super::model::DiagonalModel;
use super::rng::{fill_normals, Purpose, RngSpec};
use crate::besov::SampledPath;
use crate::error::{Error, Result};

/// Increments `W(t_{i+1}) - W(t_i)` of an `R^m`-valued Brownian motion
/// (the truncation of a cylindrical one to `m` modes).
#[derive(Clone, Debug, PartialEq)]
pub struct WienerIncrements {
    t0: f64,
    t1: f64,
    cells: usize,
    noise_dim: usize,
    data: Vec<f64>,
    provenance: Option<RngSpec>,
}

impl WienerIncrements {
    /// Exact-in-law increments on `2^J` cells of `[t0, t1]`.
    pub fn sample(t0: f64, t1: f64, j: u32, noise_dim: usize, spec: RngSpec) -> Result<Self> {
        if !(t0.is_finite() && t1.is_finite() && t1 > t0) || noise_dim == 0 {
            return Err(Error::param("increments need a proper interval and m >= 1"));
        }
        let cells = 1usize << j;
        let dt = (t1 - t0) / cells as f64;
        let mut data = vec![0.0; cells * noise_dim];
        fill_normals(&mut spec.rng(Purpose::Increments), &mut data, dt.sqrt());
        Ok(Self {
            t0,
            t1,
            cells,
            noise_dim,
            data,
            provenance: Some(spec),
        })
    }

    /// User-supplied increments, shape `(cells, m)`; no provenance.
    pub fn from_array(t0: f64, t1: f64, increments: Array2<f64>) -> Result<Self> {
        let (cells, noise_dim) = increments.dim();
        if !(t0.is_finite() && t1.is_finite() && t1 > t0) || cells == 0 || noise_dim == 0 {
            return Err(Error::param("increments need a proper interval and a non-empty array"));
        }
        if increments.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("increments must be finite"));
        }
        Ok(Self {
            t0,
            t1,
            cells,
            noise_dim,
            data: increments.as_standard_layout().iter().copied().collect(),
            provenance: None,
        })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t1(&self) -> f64 {
        self.t1
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn noise_dim(&self) -> usize {
        self.noise_dim
    }

    pub fn dt(&self) -> f64 {
        (self.t1 - self.t0) / self.cells as f64
    }

    pub fn provenance(&self) -> Option<RngSpec> {
        self.provenance
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.noise_dim..(i + 1) * self.noise_dim]
    }

    /// The Brownian path `W(t_i)`, `W(t0) = 0`.
    pub fn brownian(&self) -> SampledPath {
        let m = self.noise_dim;
        let mut values = Array2::zeros((self.cells + 1, m));
        for i in 0..self.cells {
            for l in 0..m {
                values[[i + 1, l]] = values[[i, l]] + self.data[i * m + l];
            }
        }
        SampledPath::new(self.t0, self.t1, values).expect("finite increments")
    }

    fn check_integrand(&self, f: &StepIntegrand) -> Result<()> {
        if (f.t0(), f.t1(), f.cells(), f.noise_dim()) != (self.t0, self.t1, self.cells, self.noise_dim) {
            return Err(Error::GridMismatch(format!(
                "integrand on [{}, {}] with {} cells and m = {} does not match increments on [{}, {}] with {} cells and m = {}",
                f.t0(),
                f.t1(),
                f.cells(),
                f.noise_dim(),
                self.t0,
                self.t1,
                self.cells,
                self.noise_dim
            )));
        }
        Ok(())
    }

    /// Standard normal correctors, one per `(cell, noise channel)`, from the
    /// corrector stream of this replica.
    fn correctors(&self) -> Result<Vec<f64>> {
        let spec = self
            .provenance
            .ok_or_else(|| Error::Provenance("increments without an RngSpec need explicit corrector normals".into()))?;
        let mut xi = vec![0.0; self.cells * self.noise_dim];
        fill_normals(&mut spec.rng(Purpose::Corrector), &mut xi, 1.0);
        Ok(xi)
    }
}

/// Brownian motion in `R^d` on `[0, 1]` at resolution `2^J`.
pub fn sample_brownian(j: u32, d: usize, spec: RngSpec) -> Result<SampledPath> {
    if j == 0 {
        return Err(Error::param("J must be >= 1"));
    }
    Ok(WienerIncrements::sample(0.0, 1.0, j, d, spec)?.brownian())
}

/// `M(t_{i+1}) = M(t_i) + f_i dW_i`.
pub fn ito_integral(f: &StepIntegrand, increments: &WienerIncrements) -> Result<SampledPath> {
    increments.check_integrand(f)?;
    let d = f.dim();
    let mut values = Array2::zeros((f.cells() + 1, d));
    let mut step = vec![0.0; d];
    for i in 0..f.cells() {
        f.apply(i, increments.row(i), &mut step);
        for k in 0..d {
            values[[i + 1, k]] = values[[i, k]] + step[k];
        }
    }
    SampledPath::new(f.t0(), f.t1(), values)
}

/// Adapted feedback integrand `f_i = sigma(||M(t_i)||) Id` generated on-line
/// together with its integral `M` (`d = m`).
pub fn feedback_integral(
    increments: &WienerIncrements,
    sigma: impl Fn(f64) -> f64,
) -> Result<(StepIntegrand, SampledPath)> {
    let (cells, m) = (increments.cells(), increments.noise_dim());
    let mut values = Array2::zeros((cells + 1, m));
    let mut blocks = Array3::zeros((cells, m, m));
    for i in 0..cells {
        let norm = values.row(i).iter().map(|x: &f64| x * x).sum::<f64>().sqrt();
        let s = sigma(norm);
        for l in 0..m {
            blocks[[i, l, l]] = s;
            values[[i + 1, l]] = values[[i, l]] + s * increments.row(i)[l];
        }
    }
    let f = StepIntegrand::new(increments.t0(), increments.t1(), blocks)?;
    Ok((f, SampledPath::new(increments.t0(), increments.t1(), values)?))
}

struct Convolutions {
    u: Array2<f64>,
    v: Array2<f64>,
}

/// Joint exact recursions for `u = S <> f` and `v = int Q(t - s) f dW`.
///
/// Per mode `k`: `g = rho (f_k . dW) + sqrt(resid) (f_k . xi)` and
/// `u' = a u + g`, `v' = v + phi1 u + (f_k . dW - g) / lambda`, with one
/// corrector normal per noise channel and cell. Both maps are linear in `f`;
/// each mode's path is exact in law, and modes loaded by disjoint noise
/// channels are jointly exact.
fn convolve(
    f: &StepIntegrand,
    model: &DiagonalModel,
    increments: &WienerIncrements,
    correctors: &[f64],
) -> Result<Convolutions> {
    increments.check_integrand(f)?;
    let d = f.dim();
    if model.dim() != d {
        return Err(Error::GridMismatch(format!(
            "model has {} modes, integrand maps into R^{d}",
            model.dim()
        )));
    }
    let m = f.noise_dim();
    if correctors.len() != f.cells() * m {
        return Err(Error::LengthMismatch {
            what: "corrector normals",
            left: correctors.len(),
            right: f.cells() * m,
        });
    }
    let coeffs = model.step_coefficients(f.dt());
    let mut u = Array2::zeros((f.cells() + 1, d));
    let mut v = Array2::zeros((f.cells() + 1, d));
    let mut drive = vec![0.0; d];
    let mut residual = vec![0.0; d];
    for i in 0..f.cells() {
        f.apply(i, increments.row(i), &mut drive);
        f.apply(i, &correctors[i * m..(i + 1) * m], &mut residual);
        for (k, c) in coeffs.iter().enumerate() {
            let noise = residual[k];
            let g = c.rho * drive[k] + c.resid_sd * noise;
            let (ui, vi) = (u[[i, k]], v[[i, k]]);
            u[[i + 1, k]] = c.decay * ui + g;
            v[[i + 1, k]] = vi + c.phi1 * ui + c.q_drive * drive[k] - c.q_corrector * noise;
        }
    }
    Ok(Convolutions { u, v })
}

/// `u = int_0^t S(t - s) f(s) dW(s)` at the nodes, exact in law per mode.
/// Zero eigenvalues reproduce [`ito_integral`] exactly.
pub fn stochastic_convolution(
    f: &StepIntegrand,
    model: &DiagonalModel,
    increments: &WienerIncrements,
) -> Result<SampledPath> {
    let xi = increments.correctors()?;
    stochastic_convolution_with_correctors(f, model, increments, &xi)
}

/// As [`stochastic_convolution`] with caller-supplied standard normals,
/// laid out `(cell, noise channel)`.
pub fn stochastic_convolution_with_correctors(
    f: &StepIntegrand,
    model: &DiagonalModel,
    increments: &WienerIncrements,
    correctors: &[f64],
) -> Result<SampledPath> {
    let c = convolve(f, model, increments, correctors)?;
    SampledPath::new(f.t0(), f.t1(), c.u)
}

/// `u(t) = int_0^t S(t - s) g(s) ds`, with the cell average `(g_i + g_{i+1}) / 2`
/// integrated exactly against the kernel. Exact for constant `g`.
pub fn deterministic_convolution(g: &SampledPath, model: &DiagonalModel) -> Result<SampledPath> {
    let d = g.dim();
    if model.dim() != d {
        return Err(Error::GridMismatch(format!(
            "model has {} modes, path has {d}",
            model.dim()
        )));
    }
    let coeffs = model.step_coefficients(g.dt());
    let mut u = Array2::zeros((g.nodes(), d));
    for i in 0..g.cells() {
        let (left, right) = (g.row(i), g.row(i + 1));
        for (k, c) in coeffs.iter().enumerate() {
            u[[i + 1, k]] = c.decay * u[[i, k]] + c.phi1 * 0.5 * (left[k] + right[k]);
        }
    }
    SampledPath::new(g.t0(), g.t1(), u)
}

/// [`deterministic_convolution`] routed through the stabilised semigroup
/// `U(t) = e^{mu t} S(t)`: `u(t) = e^{-mu t} (U * (e^{mu .} g))(t)` with
/// `mu = model.shift()`. Agrees with the direct route up to quadrature error.
pub fn deterministic_convolution_shifted(g: &SampledPath, model: &DiagonalModel) -> Result<SampledPath> {
    let mu = model.shift();
    if mu == 0.0 {
        return deterministic_convolution(g, model);
    }
    let stabilised = DiagonalModel::new(model.eigenvalues().iter().map(|l| l - mu).collect())?;
    let mut weighted = g.values().to_owned();
    for (i, mut row) in weighted.rows_mut().into_iter().enumerate() {
        row *= (mu * (g.time(i) - g.t0())).exp();
    }
    let weighted = SampledPath::new(g.t0(), g.t1(), weighted)?;
    let mut u = deterministic_convolution(&weighted, &stabilised)?.into_values();
    for (i, mut row) in u.rows_mut().into_iter().enumerate() {
        row *= (-mu * (g.time(i) - g.t0())).exp();
    }
    SampledPath::new(g.t0(), g.t1(), u)
}

/// Wiener increments with the integral `M = f . W`, the convolution
/// `u = S <> f` and `v = int Q(t - s) f dW`, all driven by the same normals.
#[derive(Clone, Debug)]
pub struct PathBundle {
    pub increments: WienerIncrements,
    pub integral: SampledPath,
    pub convolution: SampledPath,
    pub q_convolution: SampledPath,
    pub model: DiagonalModel,
    pub provenance: Option<RngSpec>,
}

pub fn simulate_bundle(f: &StepIntegrand, model: &DiagonalModel, increments: &WienerIncrements) -> Result<PathBundle> {
    let xi = increments.correctors()?;
    let c = convolve(f, model, increments, &xi)?;
    Ok(PathBundle {
        integral: ito_integral(f, increments)?,
        convolution: SampledPath::new(f.t0(), f.t1(), c.u)?,
        q_convolution: SampledPath::new(f.t0(), f.t1(), c.v)?,
        increments: increments.clone(),
        model: model.clone(),
        provenance: increments.provenance(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepresentationDefect {
    /// `max_i ||u(t_i) - (A v(t_i) + M(t_i))||`.
    pub absolute: f64,
    /// `absolute / (1 + max_i ||u(t_i)||)`.
    pub relative: f64,
}

/// Checks `S <> f = A v + f . W` node by node on one bundle.
pub fn representation_check(bundle: &PathBundle, model: &DiagonalModel) -> Result<RepresentationDefect> {
    if bundle.model != *model {
        return Err(Error::Provenance("bundle was simulated under a different model".into()));
    }
    if bundle.provenance != bundle.increments.provenance() {
        return Err(Error::Provenance(
            "bundle paths and increments come from different streams".into(),
        ));
    }
    let (u, v, m) = (&bundle.convolution, &bundle.q_convolution, &bundle.integral);
    if !(u.same_grid(v) && u.same_grid(m)) {
        return Err(Error::GridMismatch("bundle paths live on different grids".into()));
    }
    let lambdas = model.eigenvalues();
    let mut absolute: f64 = 0.0;
    let mut peak: f64 = 0.0;
    for i in 0..u.nodes() {
        let (ur, vr, mr) = (u.row(i), v.row(i), m.row(i));
        let mut sq = 0.0;
        let mut un = 0.0;
        for k in 0..u.dim() {
            let e = ur[k] - (-lambdas[k] * vr[k] + mr[k]);
            sq += e * e;
            un += ur[k] * ur[k];
        }
        absolute = absolute.max(sq.sqrt());
        peak = peak.max(un.sqrt());
    }
    Ok(RepresentationDefect {
        absolute,
        relative: absolute / (1.0 + peak),
    })
}

/// The JSON sidecar written next to a bundle's CSV files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BundleSidecar {
    pub seed: Option<u64>,
    pub stream: Option<u64>,
    #[serde(rename = "J")]
    pub j: Option<u32>,
    pub d: usize,
    pub m: usize,
    pub eigenvalues: Vec<f64>,
    pub shift: f64,
    pub integrand_preset: String,
}

impl PathBundle {
    pub fn sidecar(&self, integrand_preset: &str) -> BundleSidecar {
        BundleSidecar {
            seed: self.provenance.map(|p| p.master_seed),
            stream: self.provenance.map(|p| p.stream_id),
            j: self.integral.resolution(),
            d: self.integral.dim(),
            m: self.increments.noise_dim(),
            eigenvalues: self.model.eigenvalues().to_vec(),
            shift: self.model.shift(),
            integrand_preset: integrand_preset.to_string(),
        }
    }

    /// Writes `brownian.csv`, `integral.csv`, `convolution.csv`,
    /// `q_convolution.csv` and `bundle.json` into `dir`.
    pub fn write_dir(&self, dir: impl AsRef<Path>, integrand_preset: &str) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        self.increments.brownian().save_csv(dir.join("brownian.csv"))?;
        self.integral.save_csv(dir.join("integral.csv"))?;
        self.convolution.save_csv(dir.join("convolution.csv"))?;
        self.q_convolution.save_csv(dir.join("q_convolution.csv"))?;
        let json = serde_json::to_string_pretty(&self.sidecar(integrand_preset))?;
        fs::write(dir.join("bundle.json"), json + "\n")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn spec(stream: u64) -> RngSpec {
        RngSpec::new(20240917, stream)
    }

    #[test]
    fn brownian_is_reproducible() {
        let a = sample_brownian(8, 3, spec(5)).unwrap();
        let b = sample_brownian(8, 3, spec(5)).unwrap();
        let c = sample_brownian(8, 3, spec(6)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.row(0).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn ito_identity_and_zero_cases() {
        let inc = WienerIncrements::sample(0.0, 1.0, 8, 1, spec(1)).unwrap();
        let one = StepIntegrand::scalar(0.0, 1.0, 8, |_| 1.0).unwrap();
        assert_eq!(ito_integral(&one, &inc).unwrap(), inc.brownian());
        let zero = StepIntegrand::zeros(0.0, 1.0, 8, 1, 1).unwrap();
        assert!(ito_integral(&zero, &inc).unwrap().values().iter().all(|&x| x == 0.0));
        let model = DiagonalModel::scalar(2.0).unwrap();
        let u = stochastic_convolution(&zero, &model, &inc).unwrap();
        assert!(u.values().iter().all(|&x| x == 0.0));
        let wrong = StepIntegrand::scalar(0.0, 1.0, 7, |_| 1.0).unwrap();
        assert!(matches!(ito_integral(&wrong, &inc), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn zero_eigenvalues_reproduce_the_integral_bitwise() {
        let inc = WienerIncrements::sample(0.0, 1.0, 7, 4, spec(2)).unwrap();
        let f = StepIntegrand::from_fn(0.0, 1.0, 7, 3, 4, |t, k, l| (t + k as f64 - l as f64).sin()).unwrap();
        let model = DiagonalModel::zero(3).unwrap();
        let b = simulate_bundle(&f, &model, &inc).unwrap();
        assert_eq!(b.convolution, b.integral);
        let defect = representation_check(&b, &model).unwrap();
        assert_eq!(defect.absolute, 0.0);
    }

    #[test]
    fn representation_identity_on_the_heat_model() {
        let model = DiagonalModel::heat(32).unwrap();
        let weights: Vec<f64> = (1..=32).map(|k| 1.0 / k as f64).collect();
        let f = StepIntegrand::diagonal(0.0, 1.0, 9, &weights, |t| 1.0 + t).unwrap();
        for stream in 0..4 {
            let inc = WienerIncrements::sample(0.0, 1.0, 9, 32, spec(stream)).unwrap();
            let b = simulate_bundle(&f, &model, &inc).unwrap();
            let defect = representation_check(&b, &model).unwrap();
            assert!(defect.relative <= 1e-12, "{defect:?}");
        }
    }

    #[test]
    fn representation_check_rejects_foreign_models() {
        let inc = WienerIncrements::sample(0.0, 1.0, 4, 1, spec(0)).unwrap();
        let f = StepIntegrand::scalar(0.0, 1.0, 4, |_| 1.0).unwrap();
        let b = simulate_bundle(&f, &DiagonalModel::scalar(1.0).unwrap(), &inc).unwrap();
        assert!(matches!(
            representation_check(&b, &DiagonalModel::scalar(2.0).unwrap()),
            Err(Error::Provenance(_))
        ));
        let plain = WienerIncrements::from_array(0.0, 1.0, Array2::ones((16, 1))).unwrap();
        assert!(matches!(
            stochastic_convolution(&f, &DiagonalModel::scalar(1.0).unwrap(), &plain),
            Err(Error::Provenance(_))
        ));
    }

    #[test]
    fn deterministic_convolution_closed_forms() {
        let c = 1.5;
        let g = SampledPath::from_scalar_fn(0.0, 2.0, 6, |_| c).unwrap();
        for lambda in [0.0, 1e-9, 0.7, 40.0] {
            let u = deterministic_convolution(&g, &DiagonalModel::scalar(lambda).unwrap()).unwrap();
            for i in 0..u.nodes() {
                let t = u.time(i);
                let exact = if lambda == 0.0 {
                    c * t
                } else {
                    c * -(-lambda * t).exp_m1() / lambda
                };
                assert_relative_eq!(u.row(i)[0], exact, max_relative = 1e-12, epsilon = 1e-300);
            }
        }
        let zero = SampledPath::zeros(0.0, 1.0, 5, 2).unwrap();
        let u = deterministic_convolution(&zero, &DiagonalModel::heat(2).unwrap()).unwrap();
        assert!(u.values().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn deterministic_convolution_of_a_sine() {
        // u' = -u + sin(2 pi t), u(0) = 0.
        let w = 2.0 * std::f64::consts::PI;
        let exact = |t: f64| (t.sin() * 0.0 + (w * t).sin() - w * (w * t).cos() + w * (-t).exp()) / (1.0 + w * w);
        let g = SampledPath::from_scalar_fn(0.0, 1.0, 12, |t| (w * t).sin()).unwrap();
        let u = deterministic_convolution(&g, &DiagonalModel::scalar(1.0).unwrap()).unwrap();
        let err = (0..u.nodes())
            .map(|i| (u.row(i)[0] - exact(u.time(i))).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn shifted_route_matches_direct_route() {
        let g = SampledPath::from_fn(0.0, 1.0, 11, 2, |t, k| (3.0 * t + k as f64).cos()).unwrap();
        let direct = deterministic_convolution(&g, &DiagonalModel::new(vec![0.0, 5.0]).unwrap()).unwrap();
        let shifted =
            deterministic_convolution_shifted(&g, &DiagonalModel::with_shift(vec![0.0, 5.0], -2.0).unwrap()).unwrap();
        let err = direct
            .try_sub(&shifted)
            .unwrap()
            .norms()
            .into_iter()
            .fold(0.0, f64::max);
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn feedback_integrand_is_adapted() {
        let inc = WienerIncrements::sample(0.0, 1.0, 8, 2, spec(9)).unwrap();
        let (f, m) = feedback_integral(&inc, |x| 1.0 / (1.0 + x)).unwrap();
        assert_eq!(f.block(0), &[1.0, 0.0, 0.0, 1.0]);
        let again = ito_integral(&f, &inc).unwrap();
        let err = again.try_sub(&m).unwrap().norms().into_iter().fold(0.0, f64::max);
        assert!(err < 1e-14);
    }

    #[test]
    fn bundle_round_trips_through_files() {
        let dir = tempfile::tempdir().unwrap();
        let inc = WienerIncrements::sample(0.0, 1.0, 5, 2, spec(3)).unwrap();
        let f = StepIntegrand::diagonal(0.0, 1.0, 5, &[1.0, 0.5], |_| 1.0).unwrap();
        let b = simulate_bundle(&f, &DiagonalModel::heat(2).unwrap(), &inc).unwrap();
        b.write_dir(dir.path(), "diag").unwrap();
        let back = SampledPath::load_csv(dir.path().join("convolution.csv")).unwrap();
        assert_eq!(back, b.convolution);
        let side: BundleSidecar =
            serde_json::from_str(&fs::read_to_string(dir.path().join("bundle.json")).unwrap()).unwrap();
        assert_eq!(side, b.sidecar("diag"));
        assert_eq!((side.seed, side.stream, side.j), (Some(20240917), Some(3), Some(5)));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn integral_and_convolution_are_linear(a in -3.0f64..3.0, b in -3.0f64..3.0, stream in 0u64..1000) {
            let inc = WienerIncrements::sample(0.0, 1.0, 6, 2, spec(stream)).unwrap();
            let model = DiagonalModel::new(vec![0.5, 30.0]).unwrap();
            let f = StepIntegrand::from_fn(0.0, 1.0, 6, 2, 2, |t, k, l| (t * (k + 2 * l + 1) as f64).cos()).unwrap();
            let g = StepIntegrand::from_fn(0.0, 1.0, 6, 2, 2, |t, k, l| t * (k as f64 - l as f64)).unwrap();
            let combo = f.scaled(a).try_add(&g.scaled(b)).unwrap();
            for map in [0, 1] {
                let run = |h: &StepIntegrand| if map == 0 {
                    ito_integral(h, &inc).unwrap()
                } else {
                    stochastic_convolution(h, &model, &inc).unwrap()
                };
                let lhs = run(&combo);
                let rhs = run(&f).scaled(a).unwrap().try_add(&run(&g).scaled(b).unwrap()).unwrap();
                let err = lhs.try_sub(&rhs).unwrap().norms().into_iter().fold(0.0, f64::max);
                prop_assert!(err <= 1e-12 * (1.0 + a.abs() + b.abs()));
            }
        }
    }
}
