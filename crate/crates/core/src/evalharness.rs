//! Exact-match error, word error rate and error-vs-rejection curves, plus
//! CSV/SVG emitters and the results file format.
//!
//! Results files hold one `gold<TAB>predicted<TAB>confidence<TAB>source`
//! line per sample.

use std::fmt::Write as _;
use std::io::BufRead;
use std::path::Path;

use crate::baseline::levenshtein;
use crate::error::{Error, Result};
use crate::hypothesis::{Prediction, Source};

pub const DEFAULT_ER_POINTS: usize = 101;

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredResult {
    pub prediction: Prediction,
    pub gold: String,
    pub correct: bool,
}

fn normalize(s: &str) -> String {
    s.trim().to_lowercase()
}

impl ScoredResult {
    pub fn new(prediction: Prediction, gold: impl Into<String>) -> Self {
        let gold = gold.into();
        let correct = normalize(&prediction.name) == normalize(&gold);
        Self {
            prediction,
            gold,
            correct,
        }
    }

    pub fn confidence(&self) -> f64 {
        self.prediction.confidence
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErPoint {
    pub rejection_rate: f64,
    pub error_rate: f64,
    /// Lowest confidence still accepted at this point.
    pub threshold: f64,
}

pub fn exact_match_error(results: &[ScoredResult]) -> Result<f64> {
    if results.is_empty() {
        return Err(Error::Contract("no results".into()));
    }
    let wrong = results.iter().filter(|r| !r.correct).count();
    Ok(wrong as f64 / results.len() as f64)
}

/// `(S + I + D) / |ref|` from a word-level alignment.
pub fn word_error_rate<S: AsRef<str>>(hyp: &[S], reference: &[S]) -> Result<f64> {
    if reference.is_empty() {
        return Err(Error::Contract("empty reference".into()));
    }
    let hyp: Vec<&str> = hyp.iter().map(AsRef::as_ref).collect();
    let reference: Vec<&str> = reference.iter().map(AsRef::as_ref).collect();
    Ok(levenshtein(&hyp, &reference) as f64 / reference.len() as f64)
}

/// Rejection counts swept by [`er_curve`].
pub fn rejection_grid(total: usize, n_points: usize) -> Vec<usize> {
    if total == 0 || n_points == 0 {
        return Vec::new();
    }
    if n_points == 1 {
        return vec![0];
    }
    if n_points >= total {
        return (0..total).collect();
    }
    let span = (total - 1) as f64;
    (0..n_points)
        .map(|i| (i as f64 * span / (n_points - 1) as f64).round() as usize)
        .collect()
}

/// Error over the accepted samples after rejecting the `r` lowest-confidence
/// ones, for `r` on an even grid over `0..total`. Equal confidences are
/// rejected in input order.
pub fn er_curve(results: &[ScoredResult], n_points: usize) -> Result<Vec<ErPoint>> {
    if results.len() < 2 {
        return Err(Error::Contract("er_curve needs at least two results".into()));
    }
    if results.iter().any(|r| !r.confidence().is_finite()) {
        return Err(Error::Contract("non-finite confidence".into()));
    }
    let total = results.len();
    let mut order: Vec<usize> = (0..total).collect();
    // stable sort keeps input order among ties
    order.sort_by(|&a, &b| results[a].confidence().total_cmp(&results[b].confidence()));

    // wrong_from[k] = incorrect samples among order[k..]
    let mut wrong_from = vec![0usize; total + 1];
    for k in (0..total).rev() {
        wrong_from[k] = wrong_from[k + 1] + usize::from(!results[order[k]].correct);
    }

    Ok(rejection_grid(total, n_points)
        .into_iter()
        .map(|r| ErPoint {
            rejection_rate: r as f64 / total as f64,
            error_rate: wrong_from[r] as f64 / (total - r) as f64,
            threshold: results[order[r]].confidence(),
        })
        .collect())
}

/// Error at the grid point whose rejection rate is closest to `rate`.
pub fn error_at_rejection(points: &[ErPoint], rate: f64) -> Option<f64> {
    points
        .iter()
        .min_by(|a, b| {
            (a.rejection_rate - rate)
                .abs()
                .total_cmp(&(b.rejection_rate - rate).abs())
        })
        .map(|p| p.error_rate)
}

pub fn format_csv(points: &[ErPoint]) -> String {
    let mut out = String::from("rejection_rate,error_rate,threshold\n");
    for p in points {
        writeln!(
            out,
            "{:.6},{:.6},{:.6}",
            p.rejection_rate, p.error_rate, p.threshold
        )
        .unwrap();
    }
    out
}

pub fn emit_csv(points: &[ErPoint], path: &Path) -> Result<()> {
    if points.is_empty() {
        return Err(Error::Contract("no points to write".into()));
    }
    std::fs::write(path, format_csv(points)).map_err(|e| Error::io(path, e))
}

pub fn parse_csv(text: &str) -> Result<Vec<ErPoint>> {
    text.lines()
        .enumerate()
        .skip(1)
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            let vals: Vec<f64> = line
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::parse(i + 1, e.to_string()))?;
            match vals[..] {
                [rejection_rate, error_rate, threshold] => Ok(ErPoint {
                    rejection_rate,
                    error_rate,
                    threshold,
                }),
                _ => Err(Error::parse(i + 1, "expected three columns")),
            }
        })
        .collect()
}

const PALETTE: [&str; 6] = ["#1f77b4", "#2ca02c", "#d62728", "#ff7f0e", "#9467bd", "#8c564b"];

/// Renders labeled ER curves as a standalone SVG with axes and a legend.
pub fn render_svg(sets: &[(String, Vec<ErPoint>)]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 440.0;
    const LEFT: f64 = 70.0;
    const RIGHT: f64 = 20.0;
    const TOP: f64 = 40.0;
    const BOTTOM: f64 = 60.0;
    let plot_w = W - LEFT - RIGHT;
    let plot_h = H - TOP - BOTTOM;

    let x_max = sets
        .iter()
        .flat_map(|(_, pts)| pts.iter().map(|p| p.rejection_rate))
        .fold(0.0f64, f64::max)
        .max(1e-9);
    let y_max = sets
        .iter()
        .flat_map(|(_, pts)| pts.iter().map(|p| p.error_rate))
        .fold(0.0f64, f64::max);
    let y_max = if y_max <= 0.0 { 1.0 } else { (y_max * 1.1).min(1.0) };
    let sx = |x: f64| LEFT + x / x_max * plot_w;
    let sy = |y: f64| TOP + plot_h - y / y_max * plot_h;

    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#).unwrap();
    writeln!(
        s,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="14">Error vs reject rate</text>"#,
        W / 2.0
    )
    .unwrap();
    // axes
    writeln!(
        s,
        r#"<line class="axis" x1="{LEFT}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
        TOP + plot_h,
        LEFT + plot_w,
        TOP + plot_h
    )
    .unwrap();
    writeln!(
        s,
        r#"<line class="axis" x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{}" stroke="black"/>"#,
        TOP + plot_h
    )
    .unwrap();
    for i in 0..=5 {
        let fx = x_max * i as f64 / 5.0;
        let fy = y_max * i as f64 / 5.0;
        let (x, y) = (sx(fx), sy(fy));
        writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{0:.2}" x2="{x:.2}" y2="{1:.2}" stroke="black"/><text x="{x:.2}" y="{2:.2}" text-anchor="middle">{3:.0}%</text>"#,
            TOP + plot_h,
            TOP + plot_h + 5.0,
            TOP + plot_h + 20.0,
            fx * 100.0
        )
        .unwrap();
        writeln!(
            s,
            r#"<line x1="{0:.2}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/><text x="{1:.2}" y="{2:.2}" text-anchor="end">{3:.1}%</text>"#,
            LEFT - 5.0,
            LEFT - 8.0,
            y + 4.0,
            fy * 100.0
        )
        .unwrap();
    }
    writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">Rejection rate</text>"#,
        LEFT + plot_w / 2.0,
        H - 15.0
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="18" y="{0}" text-anchor="middle" transform="rotate(-90 18 {0})">Error rate</text>"#,
        TOP + plot_h / 2.0
    )
    .unwrap();

    for (i, (label, pts)) in sets.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let coords: Vec<String> = pts
            .iter()
            .map(|p| format!("{:.2},{:.2}", sx(p.rejection_rate), sy(p.error_rate)))
            .collect();
        writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            coords.join(" ")
        )
        .unwrap();
        let ly = TOP + 10.0 + 18.0 * i as f64;
        let lx = LEFT + plot_w - 160.0;
        writeln!(
            s,
            r#"<g class="legend"><line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text></g>"#,
            lx + 24.0,
            lx + 30.0,
            ly + 4.0,
            xml_escape(label)
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    s
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

pub fn emit_plot(sets: &[(String, Vec<ErPoint>)], path: &Path) -> Result<()> {
    if sets.iter().all(|(_, pts)| pts.is_empty()) {
        return Err(Error::Contract("no points to plot".into()));
    }
    std::fs::write(path, render_svg(sets)).map_err(|e| Error::io(path, e))
}

/// Confidence at 10 decimals with trailing zeros dropped, so float noise
/// such as `0.6499999999999999` prints as `0.65`.
pub fn format_confidence(x: f64) -> String {
    let s = format!("{x:.10}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    match s {
        "-0" | "" => "0".to_string(),
        _ => s.to_string(),
    }
}

pub fn format_result_line(gold: &str, p: &Prediction) -> String {
    format!("{}\t{}\t{}\t{}", gold, p.name, format_confidence(p.confidence), p.source)
}

pub fn parse_results<R: BufRead>(reader: R) -> Result<Vec<ScoredResult>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::parse(lineno, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let [gold, name, conf, source] = fields[..] else {
            return Err(Error::parse(lineno, "expected 4 tab-separated fields"));
        };
        let confidence: f64 = conf
            .parse()
            .map_err(|_| Error::parse(lineno, format!("bad confidence {conf:?}")))?;
        let source: Source = source.parse().map_err(|m: String| Error::parse(lineno, m))?;
        out.push(ScoredResult::new(
            Prediction::new(name, confidence, source),
            gold,
        ));
    }
    Ok(out)
}

pub fn read_results(path: &Path) -> Result<Vec<ScoredResult>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_results(std::io::BufReader::new(file))
}
