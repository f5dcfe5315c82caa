//! Trace, metrics and figure files.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::SimConfig;
use crate::metrics::MetricsReport;
use crate::pqmap::PqPoint;
use crate::sim::{TraceRow, TRACE_HEADER};

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> OutputError + '_ {
    move |source| OutputError::Io { path: path.to_owned(), source }
}

/// Writes the trace as CSV to any writer.
pub fn write_trace<W: Write>(w: W, trace: &[TraceRow]) -> Result<(), csv::Error> {
    let mut wr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    wr.write_record(TRACE_HEADER)?;
    for row in trace {
        wr.serialize(row)?;
    }
    wr.flush()?;
    Ok(())
}

/// SHA-256 of the CSV encoding of a trace, fed row by row.
pub struct TraceHasher {
    wr: csv::Writer<Sha256>,
}

impl TraceHasher {
    pub fn new() -> Self {
        let mut wr = csv::WriterBuilder::new().has_headers(false).from_writer(Sha256::new());
        wr.write_record(TRACE_HEADER).expect("hashing cannot fail");
        Self { wr }
    }

    pub fn push(&mut self, row: &TraceRow) {
        self.wr.serialize(row).expect("hashing cannot fail");
    }

    /// Lowercase hex digest.
    pub fn finish(self) -> String {
        let digest = self.wr.into_inner().expect("hashing cannot fail").finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

impl Default for TraceHasher {
    fn default() -> Self {
        Self::new()
    }
}

/// Digest of the file [`write_trace`] would produce.
pub fn trace_hash(trace: &[TraceRow]) -> String {
    let mut h = TraceHasher::new();
    trace.iter().for_each(|r| h.push(r));
    h.finish()
}

pub fn write_trace_csv(path: &Path, trace: &[TraceRow]) -> Result<(), OutputError> {
    let f = std::fs::File::create(path).map_err(io_err(path))?;
    write_trace(std::io::BufWriter::new(f), trace).map_err(|source| OutputError::Csv { path: path.to_owned(), source })
}

#[derive(Serialize)]
struct MetricsFile<'a> {
    metrics: &'a MetricsReport,
    config: &'a SimConfig,
}

pub fn write_metrics_json(path: &Path, metrics: &MetricsReport, cfg: &SimConfig) -> Result<(), OutputError> {
    let text = serde_json::to_string_pretty(&MetricsFile { metrics, config: cfg })
        .map_err(|source| OutputError::Json { path: path.to_owned(), source })?;
    std::fs::write(path, text + "\n").map_err(io_err(path))
}

pub fn write_pqmap_csv(path: &Path, map: &[PqPoint]) -> Result<(), OutputError> {
    let csv_err = |source| OutputError::Csv { path: path.to_owned(), source };
    let f = std::fs::File::create(path).map_err(io_err(path))?;
    let mut wr = csv::WriterBuilder::new().has_headers(false).from_writer(std::io::BufWriter::new(f));
    wr.write_record([
        "p [W]",
        "q_lo [var]",
        "q_hi [var]",
        "current_lo [var]",
        "current_hi [var]",
        "modulation_lo [var]",
        "modulation_hi [var]",
        "status",
    ])
    .map_err(csv_err)?;
    let opt = |x: Option<f64>| x.map_or(String::new(), |v| v.to_string());
    for p in map {
        wr.write_record([
            p.p.to_string(),
            opt(p.q_lo),
            opt(p.q_hi),
            opt(p.current_lo),
            opt(p.current_hi),
            opt(p.modulation_lo),
            opt(p.modulation_hi),
            format!("{:?}", p.status),
        ])
        .map_err(csv_err)?;
    }
    wr.flush().map_err(io_err(path))
}

/// One plotted signal: trace column, display scale and colour.
struct Series {
    column: &'static str,
    get: fn(&TraceRow) -> f64,
    color: &'static str,
    dashed: bool,
}

struct Panel {
    title: &'static str,
    series: Vec<Series>,
}

fn panels() -> Vec<Panel> {
    let s = |column, get, color, dashed| Series { column, get, color, dashed };
    vec![
        Panel {
            title: "speed and DC-link voltage [pu]",
            series: vec![
                s("w", |r| r.w / r.w_ref.abs().max(1e-9), "#1f77b4", false),
                s("w_ref", |_| 1.0, "#000000", true),
                s("v_dc", |r| r.v_dc, "#d62728", false),
            ],
        },
        Panel {
            title: "torques [N m]",
            series: vec![s("tau_m", |r| r.tau_m, "#1f77b4", false), s("tau_l", |r| r.tau_l, "#000000", true)],
        },
        Panel {
            title: "modulation [-]",
            series: vec![
                s("m_norm", |r| r.m_norm, "#1f77b4", false),
                s("m_raw_norm", |r| r.m_raw_norm, "#ff7f0e", false),
                s("m_limit", |r| r.m_limit, "#000000", true),
            ],
        },
        Panel {
            title: "grid current [A]",
            series: vec![
                s("i_norm", |r| r.i_norm, "#1f77b4", false),
                s("i_star_norm", |r| r.i_star_norm, "#2ca02c", false),
                s("i_g_max", |r| r.i_g_max, "#000000", true),
            ],
        },
        Panel {
            title: "reactive power [var]",
            series: vec![
                s("q_meas", |r| r.q_meas, "#17becf", false),
                s("q_ref", |r| r.q_ref, "#000000", true),
                s("q_star", |r| r.q_star, "#9467bd", false),
            ],
        },
    ]
}

/// Trace columns drawn by [`render_svg`].
pub fn plotted_columns() -> Vec<&'static str> {
    panels().iter().flat_map(|p| p.series.iter().map(|s| s.column)).collect()
}

/// Five stacked panels sharing the time axis. The DC-link voltage is drawn
/// relative to its first sample so it shares the speed axis.
pub fn render_svg(trace: &[TraceRow], title: &str) -> String {
    const W: f64 = 900.0;
    const PH: f64 = 170.0;
    const LEFT: f64 = 80.0;
    const TOP: f64 = 40.0;
    const GAP: f64 = 30.0;
    let panels = panels();
    let height = TOP + panels.len() as f64 * (PH + GAP) + 20.0;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<text x="{LEFT}" y="20" font-size="14">{}</text>"#, xml_escape(title));
    let (t0, t1) = match (trace.first(), trace.last()) {
        (Some(a), Some(b)) if b.t > a.t => (a.t, b.t),
        _ => (0.0, 1.0),
    };
    let v0 = trace.first().map_or(1.0, |r| r.v_dc.abs().max(1e-9));
    let stride = (trace.len() / 3000).max(1);
    let plot_w = W - LEFT - 20.0;
    for (k, panel) in panels.iter().enumerate() {
        let y0 = TOP + k as f64 * (PH + GAP);
        let value = |s: &Series, r: &TraceRow| if s.column == "v_dc" { r.v_dc / v0 } else { (s.get)(r) };
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for s in &panel.series {
            for r in trace.iter() {
                let v = value(s, r);
                if v.is_finite() {
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
            }
        }
        if !(lo.is_finite() && hi.is_finite()) {
            lo = 0.0;
            hi = 1.0;
        }
        if hi - lo < 1e-12 * hi.abs().max(1.0) {
            lo -= 0.5;
            hi += 0.5;
        }
        let pad = 0.05 * (hi - lo);
        let (lo, hi) = (lo - pad, hi + pad);
        let _ =
            writeln!(svg, r##"<rect x="{LEFT}" y="{y0}" width="{plot_w}" height="{PH}" fill="none" stroke="#888"/>"##);
        let _ = writeln!(svg, r#"<text x="{LEFT}" y="{}">{}</text>"#, y0 - 4.0, xml_escape(panel.title));
        let _ = writeln!(svg, r#"<text x="4" y="{}">{}</text>"#, y0 + 10.0, fmt_tick(hi));
        let _ = writeln!(svg, r#"<text x="4" y="{}">{}</text>"#, y0 + PH, fmt_tick(lo));
        for s in &panel.series {
            let mut pts = String::new();
            for r in trace.iter().step_by(stride).chain(trace.last()) {
                let v = value(s, r);
                if !v.is_finite() {
                    continue;
                }
                let x = LEFT + (r.t - t0) / (t1 - t0) * plot_w;
                let y = y0 + PH - (v - lo) / (hi - lo) * PH;
                let _ = write!(pts, "{x:.1},{y:.1} ");
            }
            let dash = if s.dashed { r#" stroke-dasharray="5,3""# } else { "" };
            let _ = writeln!(
                svg,
                r#"<polyline data-column="{}" fill="none" stroke="{}" stroke-width="1"{dash} points="{}"/>"#,
                s.column,
                s.color,
                pts.trim_end()
            );
        }
        let legend: Vec<&str> = panel.series.iter().map(|s| s.column).collect();
        let _ = writeln!(svg, r#"<text x="{}" y="{}">{}</text>"#, W - 260.0, y0 - 4.0, legend.join(", "));
    }
    let _ =
        writeln!(svg, r#"<text x="{}" y="{}">t [s]: {} .. {}</text>"#, LEFT, height - 6.0, fmt_tick(t0), fmt_tick(t1));
    svg.push_str("</svg>\n");
    svg
}

fn fmt_tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.3e}")
    } else {
        format!("{v:.3}")
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Paths of the files written for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct WrittenFiles {
    pub trace: PathBuf,
    pub metrics: PathBuf,
    pub plot: Option<PathBuf>,
}

/// Writes `<stem>.csv`, `<stem>.metrics.json` and optionally `<stem>.svg`
/// into the configured output directory.
pub fn write_outputs(
    trace: &[TraceRow],
    metrics: &MetricsReport,
    cfg: &SimConfig,
    stem: &str,
) -> Result<WrittenFiles, OutputError> {
    let dir = &cfg.output.dir;
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let trace_path = dir.join(format!("{stem}.csv"));
    write_trace_csv(&trace_path, trace)?;
    let metrics_path = dir.join(format!("{stem}.metrics.json"));
    write_metrics_json(&metrics_path, metrics, cfg)?;
    let plot = if cfg.output.plot {
        let p = dir.join(format!("{stem}.svg"));
        std::fs::write(&p, render_svg(trace, stem)).map_err(io_err(&p))?;
        Some(p)
    } else {
        None
    };
    Ok(WrittenFiles { trace: trace_path, metrics: metrics_path, plot })
}
