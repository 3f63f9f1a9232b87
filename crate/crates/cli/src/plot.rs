//! Minimal static SVG line plots.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

pub struct Series<'a> {
    pub label: &'a str,
    pub color: &'a str,
    pub x: &'a [f64],
    pub y: &'a [f64],
}

/// Shaded region between `lower` and `upper` over `x`.
pub struct Band<'a> {
    pub x: &'a [f64],
    pub lower: &'a [f64],
    pub upper: &'a [f64],
    pub color: &'a str,
}

pub struct Plot<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    pub series: Vec<Series<'a>>,
    pub band: Option<Band<'a>>,
    /// Clamp the y axis to this range when the data exceed it.
    pub y_clamp: Option<(f64, f64)>,
    pub markers: bool,
}

/// Round tick step giving roughly `target` intervals over `span`.
fn tick_step(span: f64, target: f64) -> f64 {
    let raw = span / target;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let nice = if norm < 1.5 {
        1.0
    } else if norm < 3.5 {
        2.0
    } else if norm < 7.5 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn extent(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 * lo.abs().max(1.0) {
        return (lo - 0.5, hi + 0.5);
    }
    (lo, hi)
}

fn fmt_tick(v: f64, step: f64) -> String {
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    format!("{v:.decimals$}")
}

impl Plot<'_> {
    pub fn render(&self) -> String {
        let xs = self.series.iter().flat_map(|s| s.x.iter().copied());
        let (x0, x1) = extent(xs);
        let mut ys: Vec<f64> = self.series.iter().flat_map(|s| s.y.iter().copied()).collect();
        if let Some(b) = &self.band {
            ys.extend(b.lower.iter().chain(b.upper));
        }
        let (mut y0, mut y1) = extent(ys.into_iter());
        if let Some((lo, hi)) = self.y_clamp {
            y0 = y0.max(lo);
            y1 = y1.min(hi);
        }
        let pad = 0.05 * (y1 - y0);
        let (y0, y1) = (y0 - pad, y1 + pad);

        let pw = WIDTH - LEFT - RIGHT;
        let ph = HEIGHT - TOP - BOTTOM;
        let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| TOP + (1.0 - (y.clamp(y0, y1) - y0) / (y1 - y0)) * ph;

        let mut svg = String::new();
        let _ = writeln!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
            WIDTH / 2.0,
            escape(self.title)
        );

        let xstep = tick_step(x1 - x0, 8.0);
        let mut t = (x0 / xstep).ceil() * xstep;
        while t <= x1 + 1e-9 * xstep {
            let _ = writeln!(
                svg,
                r##"<line x1="{0:.1}" y1="{1:.1}" x2="{0:.1}" y2="{2:.1}" stroke="#e5e5e5"/><text x="{0:.1}" y="{3:.1}" text-anchor="middle">{4}</text>"##,
                sx(t),
                TOP,
                TOP + ph,
                TOP + ph + 16.0,
                fmt_tick(t, xstep)
            );
            t += xstep;
        }
        let ystep = tick_step(y1 - y0, 6.0);
        let mut t = (y0 / ystep).ceil() * ystep;
        while t <= y1 + 1e-9 * ystep {
            let _ = writeln!(
                svg,
                r##"<line x1="{0:.1}" y1="{1:.1}" x2="{2:.1}" y2="{1:.1}" stroke="#e5e5e5"/><text x="{3:.1}" y="{4:.1}" text-anchor="end">{5}</text>"##,
                LEFT,
                sy(t),
                LEFT + pw,
                LEFT - 6.0,
                sy(t) + 4.0,
                fmt_tick(t, ystep)
            );
            t += ystep;
        }
        let _ = writeln!(
            svg,
            r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            HEIGHT - 10.0,
            escape(self.x_label)
        );
        let _ = writeln!(
            svg,
            r#"<text transform="translate(16 {:.1}) rotate(-90)" text-anchor="middle">{}</text>"#,
            TOP + ph / 2.0,
            escape(self.y_label)
        );

        if let Some(b) = &self.band {
            let mut pts: Vec<String> = b.x.iter().zip(b.upper).map(|(&x, &y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
            pts.extend(b.x.iter().zip(b.lower).rev().map(|(&x, &y)| format!("{:.2},{:.2}", sx(x), sy(y))));
            let _ = writeln!(
                svg,
                r#"<polygon points="{}" fill="{}" fill-opacity="0.25" stroke="none"/>"#,
                pts.join(" "),
                b.color
            );
        }
        for (i, s) in self.series.iter().enumerate() {
            let pts: Vec<String> = s
                .x
                .iter()
                .zip(s.y)
                .filter(|(_, y)| y.is_finite())
                .map(|(&x, &y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                .collect();
            let _ = writeln!(
                svg,
                r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#,
                pts.join(" "),
                s.color
            );
            if self.markers {
                for p in &pts {
                    let (cx, cy) = p.split_once(',').unwrap();
                    let _ = writeln!(svg, r#"<circle cx="{cx}" cy="{cy}" r="3" fill="{}"/>"#, s.color);
                }
            }
            let ly = TOP + 16.0 + 16.0 * i as f64;
            let _ = writeln!(
                svg,
                r#"<line x1="{0:.1}" y1="{1:.1}" x2="{2:.1}" y2="{1:.1}" stroke="{3}" stroke-width="2"/><text x="{4:.1}" y="{5:.1}">{6}</text>"#,
                LEFT + pw - 150.0,
                ly,
                LEFT + pw - 130.0,
                s.color,
                LEFT + pw - 124.0,
                ly + 4.0,
                escape(s.label)
            );
        }
        svg.push_str("</svg>\n");
        svg
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Keeps at most `max_points` samples, preserving each bucket's extremes.
pub fn decimate(y: &[f64], max_points: usize) -> (Vec<f64>, Vec<f64>) {
    if y.len() <= max_points {
        return ((0..y.len()).map(|i| i as f64).collect(), y.to_vec());
    }
    let buckets = (max_points / 2).max(1);
    let size = y.len().div_ceil(buckets);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (b, chunk) in y.chunks(size).enumerate() {
        let base = b * size;
        let (imin, imax) = chunk.iter().enumerate().fold((0, 0), |(lo, hi), (i, &v)| {
            (if v < chunk[lo] { i } else { lo }, if v > chunk[hi] { i } else { hi })
        });
        for i in if imin <= imax { [imin, imax] } else { [imax, imin] } {
            xs.push((base + i) as f64);
            ys.push(chunk[i]);
        }
    }
    (xs, ys)
}
