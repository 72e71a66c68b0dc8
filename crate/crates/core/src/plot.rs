//! Minimal SVG scatter and polyline output.

use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mark {
    Dots,
    Line,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub color: String,
    pub points: Vec<(f64, f64)>,
    pub mark: Mark,
}

impl Series {
    pub fn dots(label: impl Into<String>, color: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self {
            label: label.into(),
            color: color.into(),
            points,
            mark: Mark::Dots,
        }
    }

    pub fn line(label: impl Into<String>, color: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self {
            mark: Mark::Line,
            ..Self::dots(label, color, points)
        }
    }
}

#[derive(Debug, Clone)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    pub width: f64,
    pub height: f64,
    /// Draw the y = x diagonal.
    pub diagonal: bool,
}

impl Plot {
    pub fn new(title: impl Into<String>, x_label: impl Into<String>, y_label: impl Into<String>) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            series: Vec::new(),
            width: 640.0,
            height: 480.0,
            diagonal: false,
        }
    }

    pub fn with(mut self, s: Series) -> Self {
        self.series.push(s);
        self
    }

    fn bounds(&self) -> (f64, f64, f64, f64) {
        let mut b = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for &(x, y) in self.series.iter().flat_map(|s| &s.points) {
            if x.is_finite() && y.is_finite() {
                b = (b.0.min(x), b.1.max(x), b.2.min(y), b.3.max(y));
            }
        }
        if !b.0.is_finite() {
            return (0.0, 1.0, 0.0, 1.0);
        }
        if self.diagonal {
            let lo = b.0.min(b.2);
            let hi = b.1.max(b.3);
            b = (lo, hi, lo, hi);
        }
        let pad = |lo: f64, hi: f64| {
            let w = if hi > lo { hi - lo } else { 1.0 };
            (lo - 0.05 * w, hi + 0.05 * w)
        };
        let (x0, x1) = pad(b.0, b.1);
        let (y0, y1) = pad(b.2, b.3);
        (x0, x1, y0, y1)
    }

    pub fn render(&self) -> String {
        let (m_left, m_right, m_top, m_bottom) = (60.0, 130.0, 30.0, 45.0);
        let pw = self.width - m_left - m_right;
        let ph = self.height - m_top - m_bottom;
        let (x0, x1, y0, y1) = self.bounds();
        let sx = |x: f64| m_left + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| m_top + ph - (y - y0) / (y1 - y0) * ph;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#,
            w = self.width,
            h = self.height
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<rect x="{m_left}" y="{m_top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="18" text-anchor="middle">{}</text>"#,
            m_left + pw / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            m_left + pw / 2.0,
            self.height - 8.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
            m_top + ph / 2.0,
            m_top + ph / 2.0,
            escape(&self.y_label)
        );
        for i in 0..=4 {
            let fx = x0 + (x1 - x0) * i as f64 / 4.0;
            let fy = y0 + (y1 - y0) * i as f64 / 4.0;
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
                sx(fx),
                m_top + ph + 16.0,
                tick(fx)
            );
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
                m_left - 4.0,
                sy(fy) + 4.0,
                tick(fy)
            );
        }
        if self.diagonal {
            let (lo, hi) = (x0.max(y0), x1.min(y1));
            let _ = writeln!(
                s,
                r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="gray" stroke-dasharray="4 3"/>"#,
                sx(lo),
                sy(lo),
                sx(hi),
                sy(hi)
            );
        }
        for (k, series) in self.series.iter().enumerate() {
            match series.mark {
                Mark::Dots => {
                    let _ = writeln!(s, r#"<g fill="{}" fill-opacity="0.6">"#, series.color);
                    for &(x, y) in &series.points {
                        if x.is_finite() && y.is_finite() {
                            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="1.6"/>"#, sx(x), sy(y));
                        }
                    }
                    let _ = writeln!(s, "</g>");
                }
                Mark::Line => {
                    let pts: Vec<String> = series
                        .points
                        .iter()
                        .filter(|(x, y)| x.is_finite() && y.is_finite())
                        .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                        .collect();
                    let _ = writeln!(
                        s,
                        r#"<polyline fill="none" stroke="{}" stroke-width="0.8" points="{}"/>"#,
                        series.color,
                        pts.join(" ")
                    );
                }
            }
            let ly = m_top + 14.0 + 18.0 * k as f64;
            let lx = m_left + pw + 12.0;
            let _ = writeln!(
                s,
                r#"<rect x="{lx}" y="{}" width="10" height="10" fill="{}"/><text x="{}" y="{}">{}</text>"#,
                ly - 9.0,
                series.color,
                lx + 16.0,
                ly,
                escape(&series.label)
            );
        }
        s.push_str("</svg>\n");
        s
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.render())
    }
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.1e}")
    } else {
        format!("{v:.2}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_series() {
        let p = Plot::new("t<1>", "x", "y")
            .with(Series::dots("a", "blue", vec![(0.0, 0.0), (1.0, 2.0)]))
            .with(Series::line("b", "red", vec![(0.0, 1.0), (1.0, f64::NAN), (2.0, 0.5)]));
        let svg = p.render();
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<circle").count(), 2);
        assert!(svg.contains("t&lt;1&gt;"));
    }

    #[test]
    fn empty_plot_renders() {
        let svg = Plot::new("", "", "").render();
        assert!(svg.contains("</svg>"));
    }
}
