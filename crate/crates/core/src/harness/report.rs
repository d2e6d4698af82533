use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentId;
use crate::error::Result;

/// One assertion: `lower <= observed <= upper`, citing the property it tests.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub invariant: String,
    pub observed: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub passed: bool,
    /// `false` in smoke runs, where a failed check is only a warning.
    pub enforced: bool,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, invariant: &str, observed: f64, lower: Option<f64>, upper: Option<f64>) -> Self {
        let passed =
            observed.is_finite() && lower.is_none_or(|lo| observed >= lo) && upper.is_none_or(|hi| observed <= hi);
        Self {
            name: name.into(),
            invariant: invariant.into(),
            observed,
            lower,
            upper,
            passed,
            enforced: true,
            detail: String::new(),
        }
    }

    pub fn at_most(name: &str, invariant: &str, observed: f64, bound: f64) -> Self {
        Self::new(name, invariant, observed, None, Some(bound))
    }

    pub fn at_least(name: &str, invariant: &str, observed: f64, bound: f64) -> Self {
        Self::new(name, invariant, observed, Some(bound), None)
    }

    pub fn within(name: &str, invariant: &str, observed: f64, lower: f64, upper: f64) -> Self {
        Self::new(name, invariant, observed, Some(lower), Some(upper))
    }

    /// A count that must be zero.
    pub fn none(name: &str, invariant: &str, count: usize) -> Self {
        Self::at_most(name, invariant, count as f64, 0.0)
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }

    pub fn status(&self) -> &'static str {
        match (self.passed, self.enforced) {
            (true, _) => "PASS",
            (false, true) => "FAIL",
            (false, false) => "WARN",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Plot {
    pub x: String,
    pub y: Vec<String>,
    #[serde(default)]
    pub log_y: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plot: Option<Plot>,
}

impl Table {
    pub fn new<C: AsRef<str>>(name: &str, columns: &[C]) -> Self {
        Self {
            name: name.into(),
            columns: columns.iter().map(|c| c.as_ref().to_string()).collect(),
            rows: Vec::new(),
            plot: None,
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn with_plot(mut self, x: &str, y: &[&str], log_y: bool) -> Self {
        self.plot = Some(Plot {
            x: x.into(),
            y: y.iter().map(|c| c.to_string()).collect(),
            log_y,
        });
        self
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    /// A static line plot of `plot.y` against `plot.x`.
    pub fn to_svg(&self) -> Option<String> {
        let plot = self.plot.as_ref()?;
        let xs = self.column(&plot.x)?;
        let series: Vec<(String, Vec<f64>)> = plot
            .y
            .iter()
            .filter_map(|name| self.column(name).map(|c| (name.clone(), c)))
            .collect();
        let transform = |v: f64| if plot.log_y { v.ln() } else { v };
        let points: Vec<(f64, f64)> = series
            .iter()
            .flat_map(|(_, ys)| xs.iter().zip(ys).map(|(&x, &y)| (x, transform(y))))
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .collect();
        if points.is_empty() {
            return None;
        }
        let bounds = |f: fn(&(f64, f64)) -> f64| {
            let (lo, hi) = points
                .iter()
                .map(f)
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
            if hi > lo {
                (lo, hi)
            } else {
                (lo - 0.5, hi + 0.5)
            }
        };
        let (x0, x1) = bounds(|p| p.0);
        let (y0, y1) = bounds(|p| p.1);
        let (w, h, pad) = (640.0, 400.0, 50.0);
        let sx = |x: f64| pad + (x - x0) / (x1 - x0) * (w - 2.0 * pad);
        let sy = |y: f64| h - pad - (y - y0) / (y1 - y0) * (h - 2.0 * pad);

        let mut svg = String::new();
        let _ = writeln!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
        let _ = writeln!(
            svg,
            r#"<path d="M{pad} {pad} V{} H{}" fill="none" stroke="black"/>"#,
            h - pad,
            w - pad
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            w / 2.0,
            h - 12.0,
            plot.x
        );
        let y_label = if plot.log_y { "log" } else { "" };
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}">{} [{x0:.3}, {x1:.3}] x [{y0:.3}, {y1:.3}] {y_label}</text>"#,
            pad,
            pad - 20.0,
            self.name
        );
        const COLOURS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];
        for (k, (name, ys)) in series.iter().enumerate() {
            let colour = COLOURS[k % COLOURS.len()];
            let coords: Vec<String> = xs
                .iter()
                .zip(ys)
                .map(|(&x, &y)| (x, transform(y)))
                .filter(|(x, y)| x.is_finite() && y.is_finite())
                .map(|(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                .collect();
            let _ = writeln!(
                svg,
                r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="1.5"/>"#,
                coords.join(" ")
            );
            let _ = writeln!(
                svg,
                r#"<text x="{}" y="{}" fill="{colour}">{name}</text>"#,
                w - pad - 120.0,
                pad + 14.0 * k as f64
            );
        }
        svg.push_str("</svg>\n");
        Some(svg)
    }
}

/// A constant the theory only proves to exist, estimated from data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FittedConstant {
    pub name: String,
    pub value: f64,
    #[serde(default)]
    pub diagnostics: BTreeMap<String, f64>,
}

impl FittedConstant {
    pub fn new(name: &str, value: f64) -> Self {
        Self {
            name: name.into(),
            value,
            diagnostics: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.diagnostics.insert(key.into(), value);
        self
    }
}

/// A contiguous block of RNG streams under one master seed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamBlock {
    pub label: String,
    pub first: u64,
    pub count: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: ExperimentId,
    /// The resolved configuration as `key = value` pairs.
    pub config: BTreeMap<String, String>,
    pub smoke: bool,
    pub master_seed: u64,
    pub streams: Vec<StreamBlock>,
    pub checks: Vec<Check>,
    pub tables: Vec<Table>,
    pub constants: Vec<FittedConstant>,
    #[serde(default)]
    pub notes: Vec<String>,
    pub wall_clock_seconds: f64,
}

impl ExperimentReport {
    /// True when every enforced check passed.
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed || !c.enforced)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn constant(&self, name: &str) -> Option<&FittedConstant> {
        self.constants.iter().find(|c| c.name == name)
    }

    /// The report with its one non-reproducible field cleared.
    pub fn without_timing(&self) -> Self {
        Self {
            wall_clock_seconds: 0.0,
            ..self.clone()
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Writes `report.json`, one CSV per table and an SVG per plotted table.
    pub fn write_dir(&self, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let json = dir.join("report.json");
        fs::write(&json, self.to_json()?)?;
        written.push(json);
        for table in &self.tables {
            let csv = dir.join(format!("{}.csv", table.name));
            fs::write(&csv, table.to_csv())?;
            written.push(csv);
            if let Some(svg) = table.to_svg() {
                let file = dir.join(format!("{}.svg", table.name));
                fs::write(&file, svg)?;
                written.push(file);
            }
        }
        Ok(written)
    }

    /// One line per check.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let bounds = match (c.lower, c.upper) {
                (Some(lo), Some(hi)) => format!("in [{lo:.6}, {hi:.6}]"),
                (Some(lo), None) => format!(">= {lo:.6}"),
                (None, Some(hi)) => format!("<= {hi:.6}"),
                (None, None) => String::new(),
            };
            let _ = writeln!(
                out,
                "{} {}/{}: {:.6} {bounds} ({})",
                c.status(),
                self.experiment,
                c.name,
                c.observed,
                c.invariant
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn check_bounds() {
        assert!(Check::within("a", "x", 1.0, 0.5, 1.5).passed);
        assert!(!Check::at_most("b", "x", 2.0, 1.0).passed);
        assert!(!Check::at_least("c", "x", f64::NAN, 0.0).passed);
        assert!(Check::none("d", "x", 0).passed);
    }

    #[test]
    fn table_csv_and_svg() {
        let mut t = Table::new("growth", &["J", "median"]).with_plot("J", &["median"], false);
        t.push(vec![8.0, 1.0]);
        t.push(vec![10.0, 1.5]);
        let csv = t.to_csv();
        assert!(csv.starts_with("J,median\n8.0000000000000000e0,"));
        let svg = t.to_svg().unwrap();
        assert!(svg.contains("<polyline"));
        assert!(Table::new("bare", &["x"]).to_svg().is_none());
    }
}
