use ndarray::Array2;

use super::path::SampledPath;
use crate::error::{Error, Result};

/// Even reflection at both endpoints onto `[2 t0 - t1, 2 t1 - t0]`.
pub fn extend_reflect(path: &SampledPath) -> Result<SampledPath> {
    let c = path.cells();
    let source = |m: usize| {
        if m <= c {
            c - m
        } else if m <= 2 * c {
            m - c
        } else {
            3 * c - m
        }
    };
    let values = Array2::from_shape_fn((3 * c + 1, path.dim()), |(m, k)| path.row(source(m))[k]);
    SampledPath::new(2.0 * path.t0() - path.t1(), 2.0 * path.t1() - path.t0(), values)
}

/// Extension by zero onto `[t0 - |I|, t1]`; requires `f(t0) = 0`.
pub fn extend_zero(path: &SampledPath) -> Result<SampledPath> {
    if path.row(0).iter().any(|&v| v != 0.0) {
        return Err(Error::Precondition("extension by zero needs f(t0) = 0".into()));
    }
    let c = path.cells();
    let values = Array2::from_shape_fn(
        (2 * c + 1, path.dim()),
        |(m, k)| {
            if m < c {
                0.0
            } else {
                path.row(m - c)[k]
            }
        },
    );
    SampledPath::new(path.t0() - path.length(), path.t1(), values)
}

/// Affine change of time onto `[a, b]`, keeping orientation and samples.
pub fn scale_affine(path: &SampledPath, a: f64, b: f64) -> Result<SampledPath> {
    if !(a.is_finite() && b.is_finite() && b > a) {
        return Err(Error::param(format!("target interval [{a}, {b}] is degenerate")));
    }
    path.with_interval(a, b)
}

/// `[min, max]` of `{|I'|^{-1}, |I'|^alpha}`: the admissible range of
/// `||f||_{(0,1)} / ||f o g^{-1}||_{I'}` under an affine change of time.
pub fn scaling_bounds(target_length: f64, alpha: f64) -> (f64, f64) {
    let (a, b) = (target_length.recip(), target_length.powf(alpha));
    (a.min(b), a.max(b))
}
