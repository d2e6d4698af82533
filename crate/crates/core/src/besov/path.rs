use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};

/// A vector-valued path sampled on a uniform grid of `[t0, t1]`.
///
/// Values are stored row-major, one row per node, in `R^d` with the
/// Euclidean norm. Between nodes the path is read as the right-continuous
/// step function, so every integral over the interval is a left-endpoint sum.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledPath {
    t0: f64,
    t1: f64,
    values: Array2<f64>,
}

impl SampledPath {
    /// Any number of cells >= 1; see [`SampledPath::dyadic`] for `2^J` grids.
    pub fn new(t0: f64, t1: f64, values: Array2<f64>) -> Result<Self> {
        if !t0.is_finite() || !t1.is_finite() || t1 <= t0 {
            return Err(Error::param(format!("path interval [{t0}, {t1}] is degenerate")));
        }
        if values.nrows() < 2 || values.ncols() == 0 {
            return Err(Error::param(format!(
                "path needs >= 2 nodes and >= 1 coordinate, got {}x{}",
                values.nrows(),
                values.ncols()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("path values must be finite"));
        }
        let values = values.as_standard_layout().into_owned();
        Ok(Self { t0, t1, values })
    }

    /// A path on `2^J + 1` nodes, `J >= 1`.
    pub fn dyadic(t0: f64, t1: f64, values: Array2<f64>) -> Result<Self> {
        let path = Self::new(t0, t1, values)?;
        match path.resolution() {
            Some(j) if j >= 1 => Ok(path),
            _ => Err(Error::param(format!(
                "dyadic path needs 2^J + 1 nodes with J >= 1, got {}",
                path.nodes()
            ))),
        }
    }

    /// Samples `f(t, coordinate)` on the `2^J + 1` nodes of `[t0, t1]`.
    pub fn from_fn(t0: f64, t1: f64, j: u32, dim: usize, f: impl Fn(f64, usize) -> f64) -> Result<Self> {
        let cells = 1usize << j;
        let dt = (t1 - t0) / cells as f64;
        let values = Array2::from_shape_fn((cells + 1, dim), |(i, k)| f(t0 + i as f64 * dt, k));
        Self::dyadic(t0, t1, values)
    }

    pub fn from_scalar_fn(t0: f64, t1: f64, j: u32, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_fn(t0, t1, j, 1, |t, _| f(t))
    }

    pub fn zeros(t0: f64, t1: f64, j: u32, dim: usize) -> Result<Self> {
        Self::from_fn(t0, t1, j, dim, |_, _| 0.0)
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t1(&self) -> f64 {
        self.t1
    }

    /// Interval length `|I|`.
    pub fn length(&self) -> f64 {
        self.t1 - self.t0
    }

    pub fn cells(&self) -> usize {
        self.values.nrows() - 1
    }

    pub fn nodes(&self) -> usize {
        self.values.nrows()
    }

    pub fn dim(&self) -> usize {
        self.values.ncols()
    }

    pub fn dt(&self) -> f64 {
        self.length() / self.cells() as f64
    }

    /// `J` when the grid has `2^J` cells.
    pub fn resolution(&self) -> Option<u32> {
        let cells = self.cells();
        cells.is_power_of_two().then(|| cells.trailing_zeros())
    }

    pub fn time(&self, i: usize) -> f64 {
        if i == self.cells() {
            self.t1
        } else {
            self.t0 + i as f64 * self.dt()
        }
    }

    pub fn values(&self) -> ArrayView2<'_, f64> {
        self.values.view()
    }

    pub fn into_values(self) -> Array2<f64> {
        self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.data()[i * d..(i + 1) * d]
    }

    pub(crate) fn data(&self) -> &[f64] {
        self.values.as_slice().expect("standard layout")
    }

    /// `||f(t_i) - f(t_k)||`.
    pub fn dist(&self, i: usize, k: usize) -> f64 {
        euclid_dist(self.row(i), self.row(k))
    }

    /// Row norms `||f(t_i)||`.
    pub fn norms(&self) -> Vec<f64> {
        self.data()
            .chunks_exact(self.dim())
            .map(|r| r.iter().map(|x| x * x).sum::<f64>().sqrt())
            .collect()
    }

    /// Keeps every `stride`-th node.
    pub fn subsample(&self, stride: usize) -> Result<Self> {
        if stride == 0 || self.cells() % stride != 0 {
            return Err(Error::GridMismatch(format!(
                "stride {stride} does not divide {} cells",
                self.cells()
            )));
        }
        let rows: Vec<usize> = (0..self.nodes()).step_by(stride).collect();
        let values = self.values.select(ndarray::Axis(0), &rows);
        Self::new(self.t0, self.t1, values)
    }

    /// Same values on another interval of the same orientation.
    pub fn with_interval(&self, t0: f64, t1: f64) -> Result<Self> {
        Self::new(t0, t1, self.values.clone())
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        self.t0 == other.t0 && self.t1 == other.t1 && self.values.dim() == other.values.dim()
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        if !self.same_grid(other) {
            return Err(Error::GridMismatch("paths live on different grids".into()));
        }
        Self::new(self.t0, self.t1, &self.values - &other.values)
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        if !self.same_grid(other) {
            return Err(Error::GridMismatch("paths live on different grids".into()));
        }
        Self::new(self.t0, self.t1, &self.values + &other.values)
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.t0, self.t1, &self.values * c)
    }

    /// Writes `t,x0,...,x{d-1}` with 17 significant digits.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut out = BufWriter::new(out);
        let header: Vec<String> = std::iter::once("t".to_string())
            .chain((0..self.dim()).map(|k| format!("x{k}")))
            .collect();
        writeln!(out, "{}", header.join(","))?;
        for i in 0..self.nodes() {
            write!(out, "{:.16e}", self.time(i))?;
            for v in self.row(i) {
                write!(out, ",{v:.16e}")?;
            }
            writeln!(out)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(File::create(path)?)
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(BufReader::new(File::open(path)?))
    }

    /// Parses the CSV schema written by [`SampledPath::write_csv`]. Node
    /// times must be equispaced; errors carry 1-based line numbers.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(input);
        let header = reader.headers().map_err(csv_error)?.clone();
        let names: Vec<&str> = header.iter().collect();
        if names.first() != Some(&"t") {
            return Err(Error::Parse {
                line: 1,
                message: "missing column `t`".into(),
            });
        }
        for (k, name) in names[1..].iter().enumerate() {
            let expected = format!("x{k}");
            if *name != expected {
                return Err(Error::Parse {
                    line: 1,
                    message: format!("missing column `{expected}` (found `{name}`)"),
                });
            }
        }
        let dim = names.len() - 1;
        if dim == 0 {
            return Err(Error::Parse {
                line: 1,
                message: "missing column `x0`".into(),
            });
        }

        let mut times = Vec::new();
        let mut data = Vec::new();
        let mut lines = Vec::new();
        for record in reader.records() {
            let record = record.map_err(csv_error)?;
            let line = record.position().map_or(0, |p| p.line() as usize);
            for (k, field) in record.iter().enumerate() {
                let v: f64 = field.parse().map_err(|_| Error::Parse {
                    line,
                    message: format!("column `{}`: `{field}` is not a number", names[k]),
                })?;
                if !v.is_finite() {
                    return Err(Error::Parse {
                        line,
                        message: format!("column `{}`: non-finite value", names[k]),
                    });
                }
                if k == 0 {
                    times.push(v);
                } else {
                    data.push(v);
                }
            }
            lines.push(line);
        }
        if times.len() < 2 {
            return Err(Error::Parse {
                line: lines.last().copied().unwrap_or(1),
                message: "a path needs at least two rows".into(),
            });
        }
        let (t0, t1) = (times[0], times[times.len() - 1]);
        let dt = (t1 - t0) / (times.len() - 1) as f64;
        let tol = 1e-9 * (t0.abs() + t1.abs() + dt.abs());
        for (i, (&t, &line)) in times.iter().zip(&lines).enumerate() {
            if (t - (t0 + i as f64 * dt)).abs() > tol || dt <= 0.0 {
                return Err(Error::Parse {
                    line,
                    message: format!("time {t} breaks the uniform grid"),
                });
            }
        }
        let values = Array2::from_shape_vec((times.len(), dim), data).expect("rectangular records");
        Self::new(t0, t1, values)
    }
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.kind() {
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => Error::Parse {
            line,
            message: format!("expected {expected_len} fields, found {len}"),
        },
        _ => Error::Parse {
            line,
            message: e.to_string(),
        },
    }
}

#[inline]
pub(crate) fn euclid_dist(a: &[f64], b: &[f64]) -> f64 {
    if a.len() == 1 {
        return (a[0] - b[0]).abs();
    }
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dyadic_constructor_checks_node_count() {
        let ok = SampledPath::dyadic(0.0, 1.0, Array2::zeros((9, 2))).unwrap();
        assert_eq!(ok.resolution(), Some(3));
        assert_eq!(ok.dt(), 0.125);
        assert!(SampledPath::dyadic(0.0, 1.0, Array2::zeros((10, 1))).is_err());
        assert!(SampledPath::new(1.0, 1.0, Array2::zeros((3, 1))).is_err());
        let mut bad = Array2::zeros((3, 1));
        bad[[1, 0]] = f64::NAN;
        assert!(matches!(SampledPath::new(0.0, 1.0, bad), Err(Error::Domain(_))));
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let p = SampledPath::from_fn(-0.5, 2.0, 5, 3, |t, k| (t * (k + 1) as f64).sin() / 3.0).unwrap();
        let back = SampledPath::read_csv(p.to_csv_string().as_bytes()).unwrap();
        assert_eq!(back.values(), p.values());
        assert_eq!((back.t0(), back.t1()), (p.t0(), p.t1()));
    }

    #[test]
    fn csv_errors_name_line_and_column() {
        let missing = "t,x0,x2\n0,1,2\n1,1,2\n";
        match SampledPath::read_csv(missing.as_bytes()) {
            Err(Error::Parse { line: 1, message }) => assert!(message.contains("`x1`"), "{message}"),
            other => panic!("unexpected {other:?}"),
        }
        let no_t = "x0\n1\n2\n";
        assert!(matches!(
            SampledPath::read_csv(no_t.as_bytes()),
            Err(Error::Parse { line: 1, .. })
        ));
        let garbage = "t,x0\n0,1\n0.5,abc\n1,2\n";
        match SampledPath::read_csv(garbage.as_bytes()) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 3);
                assert!(message.contains("x0"));
            }
            other => panic!("unexpected {other:?}"),
        }
        let ragged = "t,x0\n0,1\n0.5,1,3\n1,2\n";
        assert!(matches!(
            SampledPath::read_csv(ragged.as_bytes()),
            Err(Error::Parse { line: 3, .. })
        ));
        let uneven = "t,x0\n0,1\n0.7,1\n1,2\n";
        assert!(matches!(
            SampledPath::read_csv(uneven.as_bytes()),
            Err(Error::Parse { line: 3, .. })
        ));
    }

    #[test]
    fn subsample_keeps_endpoints() {
        let p = SampledPath::from_scalar_fn(0.0, 1.0, 4, |t| t * t).unwrap();
        let q = p.subsample(4).unwrap();
        assert_eq!(q.cells(), 4);
        assert_eq!(q.row(4), p.row(16));
        assert!(p.subsample(3).is_err());
    }
}
