//! Static SVG charts: scatter, line, histogram, box, QQ and
//! residuals-vs-fitted.
//!
//! Output is a pure function of the input values, so identical data give
//! byte-identical files.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::metrics::qq_points;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    Scatter,
    Line,
    Histogram,
    Box,
    Qq,
    ResidualsVsFitted,
}

impl PlotKind {
    pub const ALL: [PlotKind; 6] = [
        PlotKind::Scatter,
        PlotKind::Line,
        PlotKind::Histogram,
        PlotKind::Box,
        PlotKind::Qq,
        PlotKind::ResidualsVsFitted,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PlotKind::Scatter => "scatter",
            PlotKind::Line => "line",
            PlotKind::Histogram => "histogram",
            PlotKind::Box => "box",
            PlotKind::Qq => "qq",
            PlotKind::ResidualsVsFitted => "residuals_vs_fitted",
        }
    }

    /// Number of series the plot consumes.
    pub fn arity(self) -> usize {
        match self {
            PlotKind::Scatter | PlotKind::Line | PlotKind::ResidualsVsFitted => 2,
            PlotKind::Histogram | PlotKind::Box | PlotKind::Qq => 1,
        }
    }
}

impl FromStr for PlotKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| {
            Error::InvalidConfig(format!(
                "unknown plot kind `{s}`; expected one of {}",
                Self::ALL.map(PlotKind::name).join(", ")
            ))
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotRequest {
    pub kind: PlotKind,
    /// Names of the series, used as axis labels.
    pub columns: Vec<String>,
    pub output_path: PathBuf,
}

/// Renders `series` and writes the SVG to `req.output_path`.
pub fn emit_plot(req: &PlotRequest, series: &[&[f64]]) -> Result<()> {
    let svg = render(req.kind, &req.columns, series)?;
    std::fs::write(&req.output_path, svg)
        .map_err(|e| Error::WriteError(format!("{}: {e}", req.output_path.display())))
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;

pub fn render(kind: PlotKind, columns: &[String], series: &[&[f64]]) -> Result<String> {
    if series.len() != kind.arity() {
        return Err(Error::InvalidConfig(format!(
            "{} plot needs {} series, got {}",
            kind.name(),
            kind.arity(),
            series.len()
        )));
    }
    if series.iter().any(|s| s.is_empty()) {
        return Err(Error::EmptyData);
    }
    if series.iter().any(|s| s.len() != series[0].len()) {
        return Err(Error::ShapeMismatch("plot series differ in length".into()));
    }
    if series.iter().flat_map(|s| s.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("plot data".into()));
    }
    let label = |i: usize, fallback: &str| columns.get(i).cloned().unwrap_or_else(|| fallback.to_string());

    match kind {
        PlotKind::Scatter => Ok(xy_chart(kind, series[0], series[1], &label(0, "x"), &label(1, "y"), Mark::Points, false)),
        PlotKind::Line => Ok(xy_chart(kind, series[0], series[1], &label(0, "x"), &label(1, "y"), Mark::Polyline, false)),
        PlotKind::ResidualsVsFitted => Ok(xy_chart(kind, series[0], series[1], "fitted", "residual", Mark::Points, true)),
        PlotKind::Qq => {
            let qq = qq_points(series[0]);
            let t: Vec<f64> = qq.iter().map(|p| p.theoretical).collect();
            let s: Vec<f64> = qq.iter().map(|p| p.sample).collect();
            Ok(xy_chart(kind, &t, &s, "normal quantile", &label(0, "sample"), Mark::PointsWithIdentity, false))
        }
        PlotKind::Histogram => Ok(histogram_chart(series[0], &label(0, "value"))),
        PlotKind::Box => Ok(box_chart(series[0], &label(0, "value"))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Mark {
    Points,
    PointsWithIdentity,
    Polyline,
}

/// Data range padded by 5% on each side; a zero-width range is widened.
fn padded_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let span = hi - lo;
    if span > 0.0 {
        (lo - 0.05 * span, hi + 0.05 * span)
    } else {
        let pad = if lo == 0.0 { 0.5 } else { 0.05 * lo.abs() };
        (lo - pad, hi + pad)
    }
}

/// Five to ten "nice" tick values (1, 2 or 5 × 10^k spacing) inside `[lo, hi]`.
fn ticks(lo: f64, hi: f64) -> (Vec<f64>, usize) {
    let raw = (hi - lo) / 8.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .into_iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let decimals = (-(step.log10().floor())).max(0.0) as usize;
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    ((first..=last).map(|k| k as f64 * step).collect(), decimals)
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn px(&self, v: f64) -> f64 {
        LEFT + (v - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, v: f64) -> f64 {
        HEIGHT - BOTTOM - (v - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - TOP - BOTTOM)
    }
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="18" text-anchor="middle" font-size="13">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
}

fn axes(out: &mut String, f: &Frame, x_label: &str, y_label: &str, x_ticks: bool) {
    let (x0, x1) = (LEFT, WIDTH - RIGHT);
    let (y0, y1) = (HEIGHT - BOTTOM, TOP);
    let _ = writeln!(out, r#"<g stroke="black" stroke-width="1">"#);
    let _ = writeln!(out, r#"<line x1="{x0:.2}" y1="{y0:.2}" x2="{x1:.2}" y2="{y0:.2}"/>"#);
    let _ = writeln!(out, r#"<line x1="{x0:.2}" y1="{y0:.2}" x2="{x0:.2}" y2="{y1:.2}"/>"#);
    let _ = writeln!(out, "</g>");

    if x_ticks {
        let (xt, xd) = ticks(f.x.0, f.x.1);
        for t in xt {
            let p = f.px(t);
            let _ = writeln!(out, r#"<line x1="{p:.2}" y1="{y0:.2}" x2="{p:.2}" y2="{:.2}" stroke="black"/>"#, y0 + 5.0);
            let _ = writeln!(out, r#"<text x="{p:.2}" y="{:.2}" text-anchor="middle">{t:.xd$}</text>"#, y0 + 18.0);
        }
    }
    let (yt, yd) = ticks(f.y.0, f.y.1);
    for t in yt {
        let p = f.py(t);
        let _ = writeln!(out, r#"<line x1="{:.2}" y1="{p:.2}" x2="{x0:.2}" y2="{p:.2}" stroke="black"/>"#, x0 - 5.0);
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{t:.yd$}</text>"#, x0 - 8.0, p + 4.0);
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 12.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(y_label)
    );
}

fn xy_chart(kind: PlotKind, x: &[f64], y: &[f64], x_label: &str, y_label: &str, mark: Mark, zero_line: bool) -> String {
    let frame = if mark == Mark::PointsWithIdentity {
        // Shared range so the identity line is the diagonal.
        let r = padded_range(x.iter().chain(y).copied());
        Frame { x: r, y: r }
    } else {
        Frame {
            x: padded_range(x.iter().copied()),
            y: padded_range(y.iter().copied()),
        }
    };
    let mut out = String::new();
    header(&mut out, kind.name());
    axes(&mut out, &frame, x_label, y_label, true);

    if zero_line && frame.y.0 < 0.0 && frame.y.1 > 0.0 {
        let p = frame.py(0.0);
        let _ = writeln!(
            out,
            r#"<line x1="{LEFT:.2}" y1="{p:.2}" x2="{:.2}" y2="{p:.2}" stroke="gray" stroke-dasharray="4 3"/>"#,
            WIDTH - RIGHT
        );
    }
    if mark == Mark::PointsWithIdentity {
        let (lo, hi) = frame.x;
        let _ = writeln!(
            out,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="red"/>"#,
            frame.px(lo),
            frame.py(lo),
            frame.px(hi),
            frame.py(hi)
        );
    }
    match mark {
        Mark::Points | Mark::PointsWithIdentity => {
            let _ = writeln!(out, r#"<g fill="steelblue">"#);
            for (a, b) in x.iter().zip(y) {
                let _ = writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="3"/>"#, frame.px(*a), frame.py(*b));
            }
            let _ = writeln!(out, "</g>");
        }
        Mark::Polyline => {
            let pts: Vec<String> = x
                .iter()
                .zip(y)
                .map(|(a, b)| format!("{:.2},{:.2}", frame.px(*a), frame.py(*b)))
                .collect();
            let _ = writeln!(
                out,
                r#"<polyline fill="none" stroke="steelblue" stroke-width="1.5" points="{}"/>"#,
                pts.join(" ")
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

/// Quantile by linear interpolation between order statistics of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

/// Freedman-Diaconis bins (`h = 2·IQR·n^{-1/3}`); Sturges when the IQR is 0.
pub fn histogram_bins(values: &[f64]) -> Vec<Bin> {
    const MAX_BINS: usize = 1000;
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    let (min, max) = (s[0], s[n - 1]);
    if max == min {
        return vec![Bin { lo: min - 0.5, hi: max + 0.5, count: n }];
    }
    let iqr = quantile(&s, 0.75) - quantile(&s, 0.25);
    let k = if iqr > 0.0 {
        let h = 2.0 * iqr / (n as f64).cbrt();
        ((max - min) / h).ceil() as usize
    } else {
        (n as f64).log2().ceil() as usize + 1
    }
    .clamp(1, MAX_BINS);
    let width = (max - min) / k as f64;
    let mut bins: Vec<Bin> = (0..k)
        .map(|i| Bin {
            lo: min + i as f64 * width,
            hi: if i + 1 == k { max } else { min + (i + 1) as f64 * width },
            count: 0,
        })
        .collect();
    for v in s {
        let i = (((v - min) / width) as usize).min(k - 1);
        bins[i].count += 1;
    }
    bins
}

fn histogram_chart(values: &[f64], label: &str) -> String {
    let bins = histogram_bins(values);
    let top = bins.iter().map(|b| b.count).max().unwrap_or(1) as f64;
    let frame = Frame {
        x: padded_range([bins[0].lo, bins[bins.len() - 1].hi].into_iter()),
        y: (0.0, top * 1.05),
    };
    let mut out = String::new();
    header(&mut out, "histogram");
    axes(&mut out, &frame, label, "count", true);
    let _ = writeln!(out, r#"<g fill="steelblue" stroke="white">"#);
    for b in &bins {
        let (x0, x1) = (frame.px(b.lo), frame.px(b.hi));
        let (y0, y1) = (frame.py(b.count as f64), frame.py(0.0));
        let _ = writeln!(
            out,
            r#"<rect x="{x0:.2}" y="{y0:.2}" width="{:.2}" height="{:.2}"/>"#,
            x1 - x0,
            y1 - y0
        );
    }
    let _ = writeln!(out, "</g>");
    out.push_str("</svg>\n");
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxSummary {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    /// Most extreme values within 1.5·IQR of the quartiles.
    pub whisker_lo: f64,
    pub whisker_hi: f64,
    pub outliers: Vec<f64>,
}

pub fn box_summary(values: &[f64]) -> BoxSummary {
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    let q1 = quantile(&s, 0.25);
    let q3 = quantile(&s, 0.75);
    let iqr = q3 - q1;
    let (fence_lo, fence_hi) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
    let inside: Vec<f64> = s.iter().copied().filter(|v| *v >= fence_lo && *v <= fence_hi).collect();
    BoxSummary {
        min: s[0],
        q1,
        median: quantile(&s, 0.5),
        q3,
        max: s[s.len() - 1],
        whisker_lo: inside.first().copied().unwrap_or(q1),
        whisker_hi: inside.last().copied().unwrap_or(q3),
        outliers: s.iter().copied().filter(|v| *v < fence_lo || *v > fence_hi).collect(),
    }
}

fn box_chart(values: &[f64], label: &str) -> String {
    let b = box_summary(values);
    let frame = Frame {
        x: (0.0, 1.0),
        y: padded_range([b.min, b.max].into_iter()),
    };
    let mut out = String::new();
    header(&mut out, "box");
    axes(&mut out, &frame, "", label, false);
    let (cx, half) = (frame.px(0.5), 60.0);
    let _ = writeln!(out, r#"<g stroke="black" fill="none">"#);
    let _ = writeln!(
        out,
        r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="lightsteelblue"/>"#,
        cx - half,
        frame.py(b.q3),
        2.0 * half,
        frame.py(b.q1) - frame.py(b.q3)
    );
    let hline = |out: &mut String, v: f64, w: f64| {
        let _ = writeln!(
            out,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}"/>"#,
            cx - w,
            frame.py(v),
            cx + w,
            frame.py(v)
        );
    };
    hline(&mut out, b.median, half);
    hline(&mut out, b.whisker_lo, half / 2.0);
    hline(&mut out, b.whisker_hi, half / 2.0);
    let _ = writeln!(
        out,
        r#"<line x1="{cx:.2}" y1="{:.2}" x2="{cx:.2}" y2="{:.2}"/>"#,
        frame.py(b.q1),
        frame.py(b.whisker_lo)
    );
    let _ = writeln!(
        out,
        r#"<line x1="{cx:.2}" y1="{:.2}" x2="{cx:.2}" y2="{:.2}"/>"#,
        frame.py(b.q3),
        frame.py(b.whisker_hi)
    );
    let _ = writeln!(out, "</g>");
    for o in &b.outliers {
        let _ = writeln!(out, r#"<circle cx="{cx:.2}" cy="{:.2}" r="3" fill="none" stroke="black"/>"#, frame.py(*o));
    }
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
