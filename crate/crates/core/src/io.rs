//! Plain CSV and SVG I/O.
//!
//! Numbers are written with Rust's shortest round-trip formatting, so a
//! write-then-read reproduces every `f64` bit for bit and output bytes do not
//! depend on locale or platform.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{CovError, Result};
use crate::experiment::{ExperimentReport, ObservationSet};
use crate::matops::{Matrix, SymMatrix};
use crate::spectral::SpectrumGrid;

/// Parses a headerless numeric CSV into rows. Blank lines are skipped.
pub fn parse_rows(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|f| {
                let f = f.trim();
                f.parse::<f64>().map_err(|_| CovError::Parse {
                    line: i + 1,
                    msg: format!("not a number: '{f}'"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CovError::Empty);
    }
    Ok(rows)
}

fn format_rows<'a>(rows: impl Iterator<Item = &'a [f64]>) -> String {
    let mut out = String::new();
    for row in rows {
        let mut first = true;
        for v in row {
            if !first {
                out.push(',');
            }
            first = false;
            write!(out, "{v}").expect("write to string");
        }
        out.push('\n');
    }
    out
}

pub fn matrix_to_csv(m: &Matrix) -> String {
    format_rows((0..m.rows()).map(|i| m.row(i)))
}

pub fn matrix_from_csv(text: &str) -> Result<Matrix> {
    let rows = parse_rows(text)?;
    let cols = rows[0].len();
    if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
        return Err(CovError::DimensionMismatch {
            expected: cols,
            got: bad.len(),
        });
    }
    Matrix::from_rows(&rows)
}

/// Reads a square matrix; it must be symmetric up to `1e-12` relative.
pub fn sym_from_csv(text: &str) -> Result<SymMatrix> {
    let m = matrix_from_csv(text)?;
    if !m.is_square() {
        return Err(CovError::DimensionMismatch {
            expected: m.rows(),
            got: m.cols(),
        });
    }
    let asym = m.sub(&m.transpose()).max_abs();
    if asym > 1e-12 * m.max_abs().max(1.0) {
        return Err(CovError::InvalidArgument(format!(
            "matrix is not symmetric (max asymmetry {asym:e})"
        )));
    }
    SymMatrix::from_matrix(&m)
}

pub fn read_matrix(path: &Path) -> Result<SymMatrix> {
    sym_from_csv(&fs::read_to_string(path)?)
}

pub fn write_matrix(path: &Path, m: &Matrix) -> Result<()> {
    Ok(fs::write(path, matrix_to_csv(m))?)
}

/// One record per row.
pub fn observations_from_csv(text: &str) -> Result<ObservationSet> {
    ObservationSet::new(parse_rows(text)?)
}

pub fn observations_to_csv(obs: &ObservationSet) -> String {
    format_rows(obs.records().iter().map(|r| r.as_slice()))
}

pub fn read_observations(path: &Path) -> Result<ObservationSet> {
    observations_from_csv(&fs::read_to_string(path)?)
}

/// Columns `omega,psd,log10_psd`.
pub fn spectrum_to_csv(g: &SpectrumGrid) -> String {
    let mut out = String::from("omega,psd,log10_psd\n");
    for (w, p) in g.freqs.iter().zip(&g.psd) {
        writeln!(out, "{w},{p},{}", p.log10()).expect("write to string");
    }
    out
}

fn csv_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Header of [`summary_rows`].
pub const SUMMARY_HEADER: &str = "phase,method,status,iterations,objective,primal_residual,dual_residual,r0,truncated_at,top_peak_index,top_peak_omega,interior_peaks,likelihood,kl,log_deviation,hellinger,wasserstein2,error";

/// One CSV row per method: peak locations, solver diagnostics and distances
/// from `T̂` (empty where undefined).
pub fn summary_rows(phase: &str, rep: &ExperimentReport) -> String {
    let mut out = String::new();
    for r in &rep.results {
        let method = r.method.name();
        match &r.outcome {
            Ok(o) => {
                let (status, iters, obj, pr, dr) = match &o.solver {
                    Some(s) => (
                        s.status.name().to_string(),
                        s.iterations.to_string(),
                        s.objective.to_string(),
                        s.primal_residual.to_string(),
                        s.dual_residual.to_string(),
                    ),
                    None => (
                        "direct".into(),
                        String::new(),
                        String::new(),
                        String::new(),
                        String::new(),
                    ),
                };
                let top = o.spectrum.top_peak();
                let interior: Vec<String> = o
                    .spectrum
                    .interior_peaks()
                    .iter()
                    .map(|p| p.index.to_string())
                    .collect();
                let dists: Vec<String> = o.distances.iter().map(|(_, v)| csv_opt(*v)).collect();
                writeln!(
                    out,
                    "{phase},{method},{status},{iters},{obj},{pr},{dr},{},{},{},{},{},{},",
                    o.estimate.get(0, 0),
                    o.truncated_at.map(|k| k.to_string()).unwrap_or_default(),
                    top.map(|p| p.index.to_string()).unwrap_or_default(),
                    top.map(|p| p.freq.to_string()).unwrap_or_default(),
                    interior.join(" "),
                    dists.join(","),
                )
                .expect("write to string");
            }
            Err(e) => {
                let msg = e.to_string().replace([',', '\n'], ";");
                writeln!(out, "{phase},{method},error,,,,,,,,,,,,,,,{msg}")
                    .expect("write to string");
            }
        }
    }
    out
}

/// A labelled curve for [`spectra_svg`].
pub struct Panel<'a> {
    pub label: String,
    pub grid: &'a SpectrumGrid,
}

const PANEL_W: f64 = 640.0;
const PANEL_H: f64 = 200.0;
const MARGIN_L: f64 = 60.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 30.0;
const GAP: f64 = 50.0;

/// Stacked panels of `log10` PSD against `ω ∈ [0, π]`, each with its own
/// vertical range and a red arrow marking `mark` (radians).
pub fn spectra_svg(title: &str, panels: &[Panel], mark: f64) -> String {
    let height = MARGIN_T + panels.len() as f64 * (PANEL_H + GAP);
    let width = MARGIN_L + PANEL_W + MARGIN_R;
    let mut s = String::new();
    writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{width:.0}\" height=\"{height:.0}\" viewBox=\"0 0 {width:.0} {height:.0}\">"
    )
    .unwrap();
    s.push_str("<defs><marker id=\"arrow\" markerWidth=\"8\" markerHeight=\"8\" refX=\"8\" refY=\"4\" orient=\"auto\"><path d=\"M0,0 L8,4 L0,8 z\" fill=\"red\"/></marker></defs>\n");
    s.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    writeln!(
        s,
        "<text x=\"{:.1}\" y=\"18\" font-family=\"sans-serif\" font-size=\"14\">{}</text>",
        MARGIN_L,
        escape(title)
    )
    .unwrap();
    for (k, p) in panels.iter().enumerate() {
        let top = MARGIN_T + k as f64 * (PANEL_H + GAP) + 10.0;
        let bottom = top + PANEL_H;
        let ys: Vec<f64> = p
            .grid
            .psd
            .iter()
            .map(|v| v.max(f64::MIN_POSITIVE).log10())
            .collect();
        let lo = ys.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let span = if hi - lo > 1e-12 { hi - lo } else { 1.0 };
        let xpos = |w: f64| MARGIN_L + PANEL_W * w / std::f64::consts::PI;
        let ypos = |y: f64| bottom - PANEL_H * (y - lo) / span;
        writeln!(
            s,
            "<rect x=\"{MARGIN_L:.1}\" y=\"{top:.1}\" width=\"{PANEL_W:.1}\" height=\"{PANEL_H:.1}\" fill=\"none\" stroke=\"black\"/>"
        )
        .unwrap();
        writeln!(
            s,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>",
            MARGIN_L + 4.0,
            top + 14.0,
            escape(&p.label)
        )
        .unwrap();
        for (frac, lbl) in [
            (0.0, "0"),
            (0.25, "π/4"),
            (0.5, "π/2"),
            (0.75, "3π/4"),
            (1.0, "π"),
        ] {
            let x = MARGIN_L + PANEL_W * frac;
            writeln!(s, "<line x1=\"{x:.1}\" y1=\"{bottom:.1}\" x2=\"{x:.1}\" y2=\"{:.1}\" stroke=\"black\"/>", bottom + 4.0).unwrap();
            writeln!(s, "<text x=\"{x:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{lbl}</text>", bottom + 16.0).unwrap();
        }
        for (y, lbl) in [(lo, lo), (hi, hi)] {
            writeln!(s, "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{lbl:.2}</text>", MARGIN_L - 4.0, ypos(y) + 4.0).unwrap();
        }
        s.push_str("<polyline fill=\"none\" stroke=\"blue\" stroke-width=\"1.2\" points=\"");
        for (i, (w, y)) in p.grid.freqs.iter().zip(&ys).enumerate() {
            if i > 0 {
                s.push(' ');
            }
            write!(s, "{:.2},{:.2}", xpos(*w), ypos(*y)).unwrap();
        }
        s.push_str("\"/>\n");
        let ax = xpos(mark);
        writeln!(s, "<line x1=\"{ax:.2}\" y1=\"{:.2}\" x2=\"{ax:.2}\" y2=\"{:.2}\" stroke=\"red\" stroke-width=\"1.5\" marker-end=\"url(#arrow)\"/>", top + 2.0, top + 24.0).unwrap();
    }
    s.push_str("</svg>\n");
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
