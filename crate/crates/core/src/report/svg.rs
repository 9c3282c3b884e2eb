//! Minimal standalone SVG charts: scatter points, polylines and bars on
//! linear axes. Output is deterministic for identical input.

use std::fmt::Write as _;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mark {
    Points,
    Line,
    Bars,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub mark: Mark,
    pub color: &'static str,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Horizontal reference lines.
    pub hlines: Vec<f64>,
    /// Tick labels for categorical x axes, placed at x = 0, 1, 2, ...
    pub x_categories: Vec<String>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Roughly five "nice" tick positions spanning `[lo, hi]`.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    if !(span > 0.0) {
        return vec![lo];
    }
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= 6.0)
        .unwrap_or(10.0 * mag);
    let start = (lo / step).ceil() as i64;
    let end = (hi / step).floor() as i64;
    (start..=end).map(|k| k as f64 * step).collect()
}

fn tick_label(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

impl Chart {
    fn bounds(&self) -> (f64, f64, f64, f64) {
        let pts = self.series.iter().flat_map(|s| s.points.iter());
        let (mut x0, mut x1, mut y0, mut y1) = (
            f64::INFINITY,
            f64::NEG_INFINITY,
            f64::INFINITY,
            f64::NEG_INFINITY,
        );
        for &(x, y) in pts.filter(|(x, y)| x.is_finite() && y.is_finite()) {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        for &h in &self.hlines {
            y0 = y0.min(h);
            y1 = y1.max(h);
        }
        if self.series.iter().any(|s| s.mark == Mark::Bars) {
            y0 = y0.min(0.0);
            x0 -= 0.5;
            x1 += 0.5;
        }
        if !x0.is_finite() {
            return (0.0, 1.0, 0.0, 1.0);
        }
        let pad = |a: f64, b: f64| {
            let d = if b > a { (b - a) * 0.05 } else { 0.5 };
            (a - d, b + d)
        };
        let (x0, x1) = pad(x0, x1);
        let (y0, y1) = pad(y0, y1);
        (x0, x1, y0, y1)
    }

    pub fn render(&self) -> String {
        let (x0, x1, y0, y1) = self.bounds();
        let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
        let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
        let sx = |x: f64| MARGIN_LEFT + (x - x0) / (x1 - x0) * plot_w;
        let sy = |y: f64| MARGIN_TOP + (y1 - y) / (y1 - y0) * plot_h;

        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(
            out,
            r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
            WIDTH / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            out,
            r#"<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
        );

        if self.x_categories.is_empty() {
            for t in ticks(x0, x1) {
                let _ = writeln!(
                    out,
                    r#"<line x1="{0:.2}" y1="{1:.2}" x2="{0:.2}" y2="{2:.2}" stroke="black"/><text x="{0:.2}" y="{3:.2}" text-anchor="middle">{4}</text>"#,
                    sx(t),
                    MARGIN_TOP + plot_h,
                    MARGIN_TOP + plot_h + 5.0,
                    MARGIN_TOP + plot_h + 18.0,
                    tick_label(t)
                );
            }
        } else {
            for (i, label) in self.x_categories.iter().enumerate() {
                let _ = writeln!(
                    out,
                    r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                    sx(i as f64),
                    MARGIN_TOP + plot_h + 18.0,
                    escape(label)
                );
            }
        }
        for t in ticks(y0, y1) {
            let _ = writeln!(
                out,
                r#"<line x1="{0:.2}" y1="{1:.2}" x2="{2:.2}" y2="{1:.2}" stroke="black"/><text x="{3:.2}" y="{4:.2}" text-anchor="end">{5}</text>"#,
                MARGIN_LEFT - 5.0,
                sy(t),
                MARGIN_LEFT,
                MARGIN_LEFT - 8.0,
                sy(t) + 4.0,
                tick_label(t)
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            MARGIN_LEFT + plot_w / 2.0,
            HEIGHT - 15.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="18" y="{0:.2}" text-anchor="middle" transform="rotate(-90 18 {0:.2})">{1}</text>"#,
            MARGIN_TOP + plot_h / 2.0,
            escape(&self.y_label)
        );
        for &h in &self.hlines {
            let _ = writeln!(
                out,
                r#"<line x1="{:.2}" y1="{2:.2}" x2="{:.2}" y2="{2:.2}" stroke="gray" stroke-dasharray="4 3"/>"#,
                MARGIN_LEFT,
                MARGIN_LEFT + plot_w,
                sy(h)
            );
        }

        let n_bars = self
            .series
            .iter()
            .filter(|s| s.mark == Mark::Bars)
            .count()
            .max(1);
        let mut bar_idx = 0;
        for s in &self.series {
            let _ = writeln!(out, r#"<g class="series" data-name="{}">"#, escape(&s.name));
            let finite = s
                .points
                .iter()
                .filter(|(x, y)| x.is_finite() && y.is_finite());
            match s.mark {
                Mark::Points => {
                    for &(x, y) in finite {
                        let _ = writeln!(
                            out,
                            r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{}" fill-opacity="0.6"/>"#,
                            sx(x),
                            sy(y),
                            s.color
                        );
                    }
                }
                Mark::Line => {
                    let coords: Vec<String> = finite
                        .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                        .collect();
                    let _ = writeln!(
                        out,
                        r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#,
                        coords.join(" "),
                        s.color
                    );
                }
                Mark::Bars => {
                    let slot = 0.8 / n_bars as f64;
                    for &(x, y) in finite {
                        let left = x - 0.4 + slot * bar_idx as f64;
                        let (top, bottom) = (sy(y.max(0.0)), sy(y.min(0.0)));
                        let _ = writeln!(
                            out,
                            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                            sx(left),
                            top,
                            sx(left + slot) - sx(left),
                            bottom - top,
                            s.color
                        );
                    }
                    bar_idx += 1;
                }
            }
            let _ = writeln!(out, "</g>");
        }

        for (i, s) in self.series.iter().enumerate() {
            let y = MARGIN_TOP + 14.0 + 16.0 * i as f64;
            let x = MARGIN_LEFT + plot_w - 150.0;
            let _ = writeln!(
                out,
                r#"<rect x="{x:.2}" y="{:.2}" width="10" height="10" fill="{}"/><text x="{:.2}" y="{y:.2}">{}</text>"#,
                y - 9.0,
                s.color,
                x + 15.0,
                escape(&s.name)
            );
        }
        out.push_str("</svg>\n");
        out
    }
}
