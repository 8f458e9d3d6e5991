//! Static SVG line charts from metrics CSVs.
//!
//! For every metric column, one chart per x-axis column present
//! (`measurements` and `seconds` for trainer logs, `step` for in-silico
//! logs). Output depends only on the input bytes and labels.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

const X_COLUMNS: [&str; 3] = ["measurements", "seconds", "step"];
const SKIP_COLUMNS: [&str; 1] = ["round"];
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];
const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: (f64, f64, f64, f64) = (60.0, 20.0, 30.0, 50.0); // left, right, top, bottom

/// A parsed metrics CSV; empty cells are `None`.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsTable {
    pub label: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
}

impl MetricsTable {
    pub fn parse(text: &str, label: impl Into<String>) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
        let line_of = |e: &csv::Error| e.position().map_or(1, |p| p.line());
        let headers = reader.headers().map_err(|e| Error::Line {
            line: line_of(&e),
            message: e.to_string(),
        })?;
        let columns: Vec<String> = headers.iter().map(|h| h.trim().to_string()).collect();
        if columns.iter().all(|c| c.is_empty()) {
            return Err(Error::Line {
                line: 1,
                message: "missing header".into(),
            });
        }
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| Error::Line {
                line: line_of(&e),
                message: e.to_string(),
            })?;
            let line = record.position().map_or(0, |p| p.line());
            let row = record
                .iter()
                .map(|cell| {
                    let cell = cell.trim();
                    if cell.is_empty() {
                        return Ok(None);
                    }
                    cell.parse::<f64>().map(Some).map_err(|_| Error::Line {
                        line,
                        message: format!("not a number: {cell:?}"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Ok(MetricsTable {
            label: label.into(),
            columns,
            rows,
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::parse(&text, series_label(path))
    }

    fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// `(x, y)` pairs where both cells are present.
    pub fn series(&self, x: &str, y: &str) -> Option<Vec<(f64, f64)>> {
        let (xi, yi) = (self.column(x)?, self.column(y)?);
        Some(self.rows.iter().filter_map(|r| Some((r[xi]?, r[yi]?))).collect())
    }
}

/// Last two directory components above the file, e.g. `ppo/seed-0`.
fn series_label(path: &Path) -> String {
    let parts: Vec<String> = path
        .parent()
        .map(|p| {
            p.components()
                .rev()
                .take(2)
                .map(|c| c.as_os_str().to_string_lossy().into_owned())
                .collect()
        })
        .unwrap_or_default();
    if parts.is_empty() {
        path.display().to_string()
    } else {
        parts.into_iter().rev().collect::<Vec<_>>().join("/")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

fn nice_range(lo: f64, hi: f64) -> (f64, f64) {
    if !(lo.is_finite() && hi.is_finite()) {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        let pad = if lo.abs() > 0.0 { lo.abs() * 0.1 } else { 1.0 };
        return (lo - pad, hi + pad);
    }
    (lo, hi)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// One line chart with axes, five ticks per axis and a legend.
pub fn render_svg(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let (ml, mr, mt, mb) = MARGIN;
    let (pw, ph) = (WIDTH - ml - mr, HEIGHT - mt - mb);
    let all = series.iter().flat_map(|s| s.points.iter());
    let (xlo, xhi, ylo, yhi) = all.fold(
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
        |(a, b, c, d), &(x, y)| (a.min(x), b.max(x), c.min(y), d.max(y)),
    );
    let (xlo, xhi) = nice_range(xlo, xhi);
    let (ylo, yhi) = nice_range(ylo, yhi);
    let sx = |x: f64| ml + (x - xlo) / (xhi - xlo) * pw;
    let sy = |y: f64| mt + ph - (y - ylo) / (yhi - ylo) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"11\">"
    );
    let _ = writeln!(s, "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>");
    let _ = writeln!(s, "<text x=\"{:.1}\" y=\"18\" text-anchor=\"middle\" font-size=\"13\">{}</text>", WIDTH / 2.0, escape(title));
    let _ = writeln!(
        s,
        "<path d=\"M{ml:.1},{mt:.1} V{:.1} H{:.1}\" fill=\"none\" stroke=\"black\"/>",
        mt + ph,
        ml + pw
    );
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let (xv, yv) = (xlo + f * (xhi - xlo), ylo + f * (yhi - ylo));
        let (px, py) = (sx(xv), sy(yv));
        let _ = writeln!(
            s,
            "<line x1=\"{px:.1}\" y1=\"{:.1}\" x2=\"{px:.1}\" y2=\"{:.1}\" stroke=\"black\"/><text x=\"{px:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{xv:.4}</text>",
            mt + ph,
            mt + ph + 4.0,
            mt + ph + 16.0
        );
        let _ = writeln!(
            s,
            "<line x1=\"{:.1}\" y1=\"{py:.1}\" x2=\"{ml:.1}\" y2=\"{py:.1}\" stroke=\"black\"/><text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{yv:.4}</text>",
            ml - 4.0,
            ml - 6.0,
            py + 4.0
        );
    }
    let _ = writeln!(
        s,
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>",
        ml + pw / 2.0,
        HEIGHT - 12.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        "<text x=\"14\" y=\"{:.1}\" text-anchor=\"middle\" transform=\"rotate(-90 14 {:.1})\">{}</text>",
        mt + ph / 2.0,
        mt + ph / 2.0,
        escape(y_label)
    );
    for (i, ser) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if !ser.points.is_empty() {
            let pts: Vec<String> = ser.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
            let _ = writeln!(
                s,
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>",
                pts.join(" ")
            );
        }
        let ly = mt + 14.0 * (i as f64 + 1.0);
        let _ = writeln!(
            s,
            "<line x1=\"{:.1}\" y1=\"{ly:.1}\" x2=\"{:.1}\" y2=\"{ly:.1}\" stroke=\"{color}\" stroke-width=\"2\"/><text x=\"{:.1}\" y=\"{:.1}\">{}</text>",
            ml + pw - 150.0,
            ml + pw - 130.0,
            ml + pw - 125.0,
            ly + 4.0,
            escape(&ser.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Render `<metric>-vs-<x>.svg` charts for every metric column found in the
/// given CSVs into `out_dir`; returns the written paths in a fixed order.
pub fn emit_plots(paths: &[PathBuf], out_dir: &Path) -> Result<Vec<PathBuf>> {
    let tables = paths.iter().map(|p| MetricsTable::read(p)).collect::<Result<Vec<_>>>()?;
    plot_tables(&tables, out_dir)
}

pub fn plot_tables(tables: &[MetricsTable], out_dir: &Path) -> Result<Vec<PathBuf>> {
    let mut xs: Vec<&str> = Vec::new();
    let mut ys: Vec<&str> = Vec::new();
    for t in tables {
        for c in &t.columns {
            let c = c.as_str();
            if X_COLUMNS.contains(&c) {
                if !xs.contains(&c) {
                    xs.push(c);
                }
            } else if !SKIP_COLUMNS.contains(&c) && !ys.contains(&c) {
                ys.push(c);
            }
        }
    }
    fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    for y in &ys {
        for x in &xs {
            let series: Vec<Series> = tables
                .iter()
                .filter_map(|t| {
                    t.series(x, y).map(|points| Series {
                        label: t.label.clone(),
                        points,
                    })
                })
                .collect();
            if series.is_empty() && tables.iter().any(|t| t.column(y).is_some()) {
                continue;
            }
            let path = out_dir.join(format!("{y}-vs-{x}.svg"));
            fs::write(&path, render_svg(&format!("{y} vs {x}"), x, y, &series))?;
            written.push(path);
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn malformed_cell_reports_its_line() {
        let text = "round,measurements,metric\n0,0,0.1\n1,32,abc\n";
        match MetricsTable::parse(text, "x") {
            Err(Error::Line { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected line error, got {other:?}"),
        }
    }

    #[test]
    fn ragged_row_reports_its_line() {
        let text = "round,measurements,metric\n0,0,0.1\n1,32\n";
        assert!(matches!(MetricsTable::parse(text, "x"), Err(Error::Line { line: 3, .. })));
    }

    #[test]
    fn empty_cells_are_skipped_in_series() {
        let t = MetricsTable::parse("measurements,metric\n0,\n32,0.5\n", "x").unwrap();
        assert_eq!(t.series("measurements", "metric").unwrap(), vec![(32.0, 0.5)]);
    }

    #[test]
    fn label_uses_parent_directories() {
        assert_eq!(series_label(Path::new("runs/focus/ppo/seed-0/metrics.csv")), "ppo/seed-0");
    }
}
