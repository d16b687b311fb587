//! Minimal static SVG line charts.

use std::fmt::Write as _;
use std::io::{self, Write};

const W: f64 = 720.0;
const H: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 4] = ["#1f6feb", "#d1242f", "#1a7f37", "#8250df"];

#[derive(Clone, Copy, PartialEq)]
pub enum Style {
    Line,
    /// Right-continuous steps, for jump processes and histograms.
    Step,
    Dots,
}

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub style: Style,
}

pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<Series>,
}

impl Plot {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            log_x: false,
            log_y: false,
            series: Vec::new(),
        }
    }

    pub fn log_x(mut self) -> Self {
        self.log_x = true;
        self
    }

    pub fn log_y(mut self) -> Self {
        self.log_y = true;
        self
    }

    pub fn with(mut self, label: &str, points: Vec<(f64, f64)>, style: Style) -> Self {
        self.series.push(Series {
            label: label.into(),
            points,
            style,
        });
        self
    }

    fn tx(&self, x: f64) -> f64 {
        if self.log_x {
            x.log10()
        } else {
            x
        }
    }

    fn ty(&self, y: f64) -> f64 {
        if self.log_y {
            y.log10()
        } else {
            y
        }
    }

    fn visible(&self, (x, y): (f64, f64)) -> bool {
        let (x, y) = (self.tx(x), self.ty(y));
        x.is_finite() && y.is_finite()
    }

    pub fn write(&self, mut out: impl Write) -> io::Result<()> {
        out.write_all(self.render().as_bytes())
    }

    pub fn render(&self) -> String {
        let pts = || {
            self.series
                .iter()
                .flat_map(|s| s.points.iter().copied())
                .filter(|&p| self.visible(p))
        };
        let (mut x0, mut x1) = range(pts().map(|p| self.tx(p.0)));
        let (mut y0, mut y1) = range(pts().map(|p| self.ty(p.1)));
        if !self.log_y && y0 > 0.0 && y0 < 0.5 * y1 {
            y0 = 0.0;
        }
        pad(&mut x0, &mut x1, 0.0);
        pad(&mut y0, &mut y1, 0.05);
        let pw = W - LEFT - RIGHT;
        let ph = H - TOP - BOTTOM;
        let sx = |x: f64| LEFT + (self.tx(x) - x0) / (x1 - x0) * pw;
        let sy = |y: f64| TOP + ph - (self.ty(y) - y0) / (y1 - y0) * ph;

        let mut s = String::new();
        let _ = write!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">
<rect width="{W}" height="{H}" fill="white"/>
<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>
"#,
            W / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            s,
            r##"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>"##
        );
        for (v, label) in ticks(x0, x1, self.log_x) {
            let px = LEFT + (v - x0) / (x1 - x0) * pw;
            let _ = writeln!(
                s,
                r##"<line x1="{px:.1}" y1="{}" x2="{px:.1}" y2="{}" stroke="#444"/><text x="{px:.1}" y="{}" text-anchor="middle">{label}</text>"##,
                TOP + ph,
                TOP + ph + 5.0,
                TOP + ph + 18.0
            );
        }
        for (v, label) in ticks(y0, y1, self.log_y) {
            let py = TOP + ph - (v - y0) / (y1 - y0) * ph;
            let _ = writeln!(
                s,
                r##"<line x1="{}" y1="{py:.1}" x2="{LEFT}" y2="{py:.1}" stroke="#444"/><text x="{}" y="{:.1}" text-anchor="end">{label}</text>"##,
                LEFT - 5.0,
                LEFT - 8.0,
                py + 4.0
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            H - 12.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
            TOP + ph / 2.0,
            TOP + ph / 2.0,
            escape(&self.y_label)
        );

        for (k, series) in self.series.iter().enumerate() {
            let color = COLORS[k % COLORS.len()];
            let visible: Vec<(f64, f64)> = series
                .points
                .iter()
                .copied()
                .filter(|&p| self.visible(p))
                .collect();
            match series.style {
                Style::Dots => {
                    for &(x, y) in &visible {
                        let _ = writeln!(
                            s,
                            r#"<circle cx="{:.1}" cy="{:.1}" r="3" fill="{color}"/>"#,
                            sx(x),
                            sy(y)
                        );
                    }
                }
                Style::Line | Style::Step => {
                    let mut d = String::new();
                    let mut prev: Option<(f64, f64)> = None;
                    for (i, &(x, y)) in thin(&visible).iter().enumerate() {
                        if i == 0 {
                            let _ = write!(d, "M{:.1},{:.1}", sx(x), sy(y));
                        } else {
                            if series.style == Style::Step {
                                let _ = write!(d, " L{:.1},{:.1}", sx(x), sy(prev.unwrap().1));
                            }
                            let _ = write!(d, " L{:.1},{:.1}", sx(x), sy(y));
                        }
                        prev = Some((x, y));
                    }
                    let _ = writeln!(
                        s,
                        r#"<path d="{d}" fill="none" stroke="{color}" stroke-width="1.5"/>"#
                    );
                }
            }
            let ly = TOP + 16.0 + 16.0 * k as f64;
            let lx = W - RIGHT - 170.0;
            let _ = writeln!(
                s,
                r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="3"/><text x="{}" y="{}">{}</text>"#,
                lx + 18.0,
                lx + 24.0,
                ly + 4.0,
                escape(&series.label)
            );
        }
        s += "</svg>\n";
        s
    }
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    })
}

fn pad(lo: &mut f64, hi: &mut f64, frac: f64) {
    if !lo.is_finite() || !hi.is_finite() {
        (*lo, *hi) = (0.0, 1.0);
    } else if hi <= lo {
        *lo -= 0.5;
        *hi += 0.5;
    } else {
        let d = (*hi - *lo) * frac;
        *lo -= d;
        *hi += d;
    }
}

// Keeps at most a few thousand vertices; long Euler paths otherwise produce
// multi-megabyte files.
fn thin(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    const MAX: usize = 4000;
    if points.len() <= MAX {
        return points.to_vec();
    }
    let stride = points.len().div_ceil(MAX);
    let mut out: Vec<(f64, f64)> = points.iter().copied().step_by(stride).collect();
    out.push(*points.last().unwrap());
    out
}

// Tick positions in transformed coordinates, with labels in data units.
fn ticks(lo: f64, hi: f64, log: bool) -> Vec<(f64, String)> {
    if log {
        return (lo.ceil() as i32..=hi.floor() as i32)
            .map(|e| (e as f64, format!("1e{e}")))
            .collect();
    }
    let raw = (hi - lo) / 6.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(mag * 10.0);
    let mut v = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while v <= hi + 1e-9 * step {
        out.push((v, trim_float(&format!("{}", (v / step).round() * step))));
        v += step;
    }
    out
}

fn trim_float(s: &str) -> String {
    match s.parse::<f64>() {
        Ok(v) if v.abs() >= 1e5 || (v != 0.0 && v.abs() < 1e-3) => format!("{v:.0e}"),
        Ok(v) => format!("{}", (v * 1e6).round() / 1e6 + 0.0),
        Err(_) => s.to_string(),
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
