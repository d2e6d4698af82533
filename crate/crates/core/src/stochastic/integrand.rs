use ndarray::{Array2, Array3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::orlicz::{luxemburg_uniform, YoungFunction};

/// A step process `f(t) = f_i` on `[t_i, t_{i+1})` with values in the
/// Hilbert-Schmidt operators `R^m -> R^d`.
///
/// Block `i` is stored row-major as a `d x m` matrix; the operator norm of
/// `gamma(H, X)` is the Frobenius norm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepIntegrand {
    t0: f64,
    t1: f64,
    cells: usize,
    dim: usize,
    noise_dim: usize,
    blocks: Vec<f64>,
}

impl StepIntegrand {
    /// `blocks` has shape `(cells, d, m)`.
    pub fn new(t0: f64, t1: f64, blocks: Array3<f64>) -> Result<Self> {
        let (cells, dim, noise_dim) = blocks.dim();
        if !(t0.is_finite() && t1.is_finite() && t1 > t0) {
            return Err(Error::param(format!("integrand interval [{t0}, {t1}] is degenerate")));
        }
        if cells == 0 || dim == 0 || noise_dim == 0 {
            return Err(Error::param(
                "integrand needs at least one cell, state and noise dimension",
            ));
        }
        if blocks.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("integrand values must be finite"));
        }
        Ok(Self {
            t0,
            t1,
            cells,
            dim,
            noise_dim,
            blocks: blocks.as_standard_layout().iter().copied().collect(),
        })
    }

    /// `f(t_i)[k][l] = g(t_i, k, l)` on a `2^J` grid.
    pub fn from_fn(
        t0: f64,
        t1: f64,
        j: u32,
        dim: usize,
        noise_dim: usize,
        g: impl Fn(f64, usize, usize) -> f64,
    ) -> Result<Self> {
        let cells = 1usize << j;
        let dt = (t1 - t0) / cells as f64;
        let blocks = Array3::from_shape_fn((cells, dim, noise_dim), |(i, k, l)| g(t0 + i as f64 * dt, k, l));
        Self::new(t0, t1, blocks)
    }

    /// The same matrix on every cell.
    pub fn constant(t0: f64, t1: f64, j: u32, matrix: &Array2<f64>) -> Result<Self> {
        Self::from_fn(t0, t1, j, matrix.nrows(), matrix.ncols(), |_, k, l| matrix[[k, l]])
    }

    /// Scalar (`d = m = 1`) integrand `f(t_i) = g(t_i)`.
    pub fn scalar(t0: f64, t1: f64, j: u32, g: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_fn(t0, t1, j, 1, 1, |t, _, _| g(t))
    }

    /// `f(t_i) = profile(t_i) diag(weights)`, `d = m = weights.len()`.
    pub fn diagonal(t0: f64, t1: f64, j: u32, weights: &[f64], profile: impl Fn(f64) -> f64) -> Result<Self> {
        let d = weights.len();
        Self::from_fn(
            t0,
            t1,
            j,
            d,
            d,
            |t, k, l| if k == l { weights[k] * profile(t) } else { 0.0 },
        )
    }

    pub fn zeros(t0: f64, t1: f64, j: u32, dim: usize, noise_dim: usize) -> Result<Self> {
        Self::from_fn(t0, t1, j, dim, noise_dim, |_, _, _| 0.0)
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

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn noise_dim(&self) -> usize {
        self.noise_dim
    }

    pub fn dt(&self) -> f64 {
        (self.t1 - self.t0) / self.cells as f64
    }

    /// The `d x m` block on cell `i`, row-major.
    pub fn block(&self, i: usize) -> &[f64] {
        let size = self.dim * self.noise_dim;
        &self.blocks[i * size..(i + 1) * size]
    }

    /// `||f(t_i)||_{gamma(H,X)}`.
    pub fn hs_norm(&self, i: usize) -> f64 {
        self.block(i).iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn hs_norms(&self) -> Vec<f64> {
        (0..self.cells).map(|i| self.hs_norm(i)).collect()
    }

    /// Euclidean norm of row `k` of block `i`.
    pub fn row_norm(&self, i: usize, k: usize) -> f64 {
        let m = self.noise_dim;
        self.block(i)[k * m..(k + 1) * m]
            .iter()
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }

    /// `out = f(t_i) dw`.
    pub fn apply(&self, i: usize, dw: &[f64], out: &mut [f64]) {
        let m = self.noise_dim;
        for (k, row) in self.block(i).chunks_exact(m).enumerate() {
            out[k] = row.iter().zip(dw).map(|(a, b)| a * b).sum();
        }
    }

    /// `sup_t ||f(t)||_gamma`.
    pub fn sup_norm(&self) -> f64 {
        self.hs_norms().into_iter().fold(0.0, f64::max)
    }

    /// `|| t -> ||f(t)||_gamma ||_{L^q(I)}`, `q = inf` allowed.
    pub fn lq_norm(&self, q: f64) -> Result<f64> {
        if q.is_infinite() {
            return Ok(self.sup_norm());
        }
        YoungFunction::Power(q).validate()?;
        Ok(self.orlicz_norm(YoungFunction::Power(q)))
    }

    /// `|| t -> ||f(t)||_gamma ||_{L^N(I)}`.
    pub fn orlicz_norm(&self, young: YoungFunction) -> f64 {
        luxemburg_uniform(&self.hs_norms(), self.dt(), young)
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if (self.t0, self.t1, self.cells, self.dim, self.noise_dim)
            != (other.t0, other.t1, other.cells, other.dim, other.noise_dim)
        {
            return Err(Error::GridMismatch(
                "integrands live on different grids or spaces".into(),
            ));
        }
        Ok(())
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let blocks = self.blocks.iter().zip(&other.blocks).map(|(a, b)| a - b).collect();
        Ok(Self { blocks, ..self.clone() })
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let blocks = self.blocks.iter().zip(&other.blocks).map(|(a, b)| a + b).collect();
        Ok(Self { blocks, ..self.clone() })
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            blocks: self.blocks.iter().map(|x| c * x).collect(),
            ..self.clone()
        }
    }

    /// Restriction to a coarser grid; requires every merged cell to carry one value.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        if factor == 0 || self.cells % factor != 0 {
            return Err(Error::GridMismatch(format!(
                "factor {factor} does not divide {} cells",
                self.cells
            )));
        }
        let size = self.dim * self.noise_dim;
        let mut blocks = Vec::with_capacity(self.blocks.len() / factor);
        for c in (0..self.cells).step_by(factor) {
            if (c..c + factor).any(|i| self.block(i) != self.block(c)) {
                return Err(Error::GridMismatch(
                    "integrand is not constant on the coarse cells".into(),
                ));
            }
            blocks.extend_from_slice(&self.blocks[c * size..(c + 1) * size]);
        }
        Ok(Self {
            cells: self.cells / factor,
            blocks,
            ..self.clone()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn norms_and_application() {
        let m = Array2::from_shape_vec((2, 3), vec![1.0, 2.0, 2.0, 0.0, 3.0, 4.0]).unwrap();
        let f = StepIntegrand::constant(0.0, 1.0, 3, &m).unwrap();
        assert_relative_eq!(f.hs_norm(5), (1.0f64 + 4.0 + 4.0 + 9.0 + 16.0).sqrt());
        assert_relative_eq!(f.row_norm(0, 1), 5.0);
        let mut out = [0.0; 2];
        f.apply(2, &[1.0, 1.0, -1.0], &mut out);
        assert_eq!(out, [1.0, -1.0]);
        assert_relative_eq!(f.lq_norm(2.0).unwrap(), f.hs_norm(0), max_relative = 1e-14);
        assert_eq!(f.lq_norm(f64::INFINITY).unwrap(), f.hs_norm(0));
    }

    #[test]
    fn indicator_norms() {
        let f = StepIntegrand::scalar(0.0, 1.0, 6, |t| if t < 0.5 { 1.0 } else { 0.0 }).unwrap();
        assert_relative_eq!(f.lq_norm(2.0).unwrap(), 0.5f64.sqrt(), max_relative = 1e-13);
        assert_eq!(f.sup_norm(), 1.0);
    }

    #[test]
    fn arithmetic_checks_shapes() {
        let a = StepIntegrand::scalar(0.0, 1.0, 3, |t| t).unwrap();
        let b = StepIntegrand::scalar(0.0, 1.0, 4, |t| t).unwrap();
        assert!(a.try_sub(&b).is_err());
        let z = a.try_sub(&a).unwrap();
        assert_eq!(z.sup_norm(), 0.0);
        assert_eq!(a.scaled(2.0).try_sub(&a).unwrap(), a);
    }

    #[test]
    fn coarsening() {
        let f = StepIntegrand::scalar(0.0, 1.0, 4, |t| if t < 0.5 { 2.0 } else { 1.0 }).unwrap();
        let c = f.coarsen(8).unwrap();
        assert_eq!(c.cells(), 2);
        assert_eq!(c.block(1), &[1.0]);
        let g = StepIntegrand::scalar(0.0, 1.0, 4, |t| t).unwrap();
        assert!(g.coarsen(2).is_err());
    }
}
