//! Minimal SVG line/scatter plotting: axes, ticks, polylines, markers,
//! error bars and a legend. Byte-deterministic output, no display
//! dependencies.

use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesStyle {
    Line,
    DashedLine,
    Points,
    LinePoints,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub color: &'static str,
    pub style: SeriesStyle,
    pub points: Vec<(f64, f64)>,
    /// Symmetric vertical error bars, index-aligned with `points`.
    pub errors: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub width: f64,
    pub height: f64,
    pub series: Vec<Series>,
}

impl Plot {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Plot {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            width: 720.0,
            height: 480.0,
            series: Vec::new(),
        }
    }

    pub fn add(&mut self, series: Series) -> &mut Self {
        self.series.push(series);
        self
    }

    fn data_bounds(&self) -> ((f64, f64), (f64, f64)) {
        let mut x = (f64::MAX, f64::MIN);
        let mut y = (f64::MAX, f64::MIN);
        for s in &self.series {
            for (i, &(px, py)) in s.points.iter().enumerate() {
                let err = s.errors.as_ref().map_or(0.0, |e| e[i]);
                x = (x.0.min(px), x.1.max(px));
                y = (y.0.min(py - err), y.1.max(py + err));
            }
        }
        if x.0 > x.1 {
            x = (0.0, 1.0);
        }
        if y.0 > y.1 {
            y = (0.0, 1.0);
        }
        if x.0 == x.1 {
            x = (x.0 - 0.5, x.1 + 0.5);
        }
        if y.0 == y.1 {
            y = (y.0 - 0.5, y.1 + 0.5);
        }
        // small margins
        let dx = 0.04 * (x.1 - x.0);
        let dy = 0.08 * (y.1 - y.0);
        ((x.0 - dx, x.1 + dx), (y.0 - dy, y.1 + dy))
    }

    pub fn render(&self) -> String {
        let ((x0, x1), (y0, y1)) = self.data_bounds();
        let (ml, mr, mt, mb) = (72.0, 16.0, 36.0, 56.0);
        let pw = self.width - ml - mr;
        let ph = self.height - mt - mb;
        let sx = |x: f64| ml + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| mt + (y1 - y) / (y1 - y0) * ph;

        let mut out = String::new();
        let _ = writeln!(
            out,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0}\" height=\"{:.0}\" viewBox=\"0 0 {:.0} {:.0}\">",
            self.width, self.height, self.width, self.height
        );
        let _ = writeln!(out, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"20\" font-family=\"sans-serif\" font-size=\"15\" text-anchor=\"middle\">{}</text>",
            ml + pw / 2.0,
            escape(&self.title)
        );

        // frame
        let _ = writeln!(
            out,
            "<rect x=\"{ml:.1}\" y=\"{mt:.1}\" width=\"{pw:.1}\" height=\"{ph:.1}\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>"
        );

        for (t, label) in ticks(x0, x1) {
            let x = sx(t);
            let _ = writeln!(
                out,
                "<line x1=\"{x:.1}\" y1=\"{:.1}\" x2=\"{x:.1}\" y2=\"{:.1}\" stroke=\"black\"/>",
                mt + ph,
                mt + ph + 5.0
            );
            let _ = writeln!(
                out,
                "<text x=\"{x:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{label}</text>",
                mt + ph + 18.0
            );
        }
        for (t, label) in ticks(y0, y1) {
            let y = sy(t);
            let _ = writeln!(
                out,
                "<line x1=\"{:.1}\" y1=\"{y:.1}\" x2=\"{ml:.1}\" y2=\"{y:.1}\" stroke=\"black\"/>",
                ml - 5.0
            );
            let _ = writeln!(
                out,
                "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{label}</text>",
                ml - 8.0,
                y + 4.0
            );
        }
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">{}</text>",
            ml + pw / 2.0,
            self.height - 14.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            out,
            "<text x=\"18\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 18 {:.1})\">{}</text>",
            mt + ph / 2.0,
            mt + ph / 2.0,
            escape(&self.y_label)
        );

        for s in &self.series {
            if let Some(errors) = &s.errors {
                for (&(px, py), &err) in s.points.iter().zip(errors) {
                    if err <= 0.0 {
                        continue;
                    }
                    let (x, ylo, yhi) = (sx(px), sy(py - err), sy(py + err));
                    let _ = writeln!(
                        out,
                        "<line x1=\"{x:.1}\" y1=\"{ylo:.1}\" x2=\"{x:.1}\" y2=\"{yhi:.1}\" stroke=\"{}\" stroke-width=\"1\"/>",
                        s.color
                    );
                    for ye in [ylo, yhi] {
                        let _ = writeln!(
                            out,
                            "<line x1=\"{:.1}\" y1=\"{ye:.1}\" x2=\"{:.1}\" y2=\"{ye:.1}\" stroke=\"{}\" stroke-width=\"1\"/>",
                            x - 3.0,
                            x + 3.0,
                            s.color
                        );
                    }
                }
            }
            let draw_line = matches!(s.style, SeriesStyle::Line | SeriesStyle::DashedLine | SeriesStyle::LinePoints);
            if draw_line && s.points.len() > 1 {
                let mut path = String::new();
                for &(px, py) in &s.points {
                    let _ = write!(path, "{:.1},{:.1} ", sx(px), sy(py));
                }
                let dash = if s.style == SeriesStyle::DashedLine { " stroke-dasharray=\"6 4\"" } else { "" };
                let _ = writeln!(
                    out,
                    "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.6\"{dash}/>",
                    path.trim_end(),
                    s.color
                );
            }
            if matches!(s.style, SeriesStyle::Points | SeriesStyle::LinePoints) {
                for &(px, py) in &s.points {
                    let _ = writeln!(
                        out,
                        "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"2.6\" fill=\"{}\"/>",
                        sx(px),
                        sy(py),
                        s.color
                    );
                }
            }
        }

        // legend
        for (i, s) in self.series.iter().enumerate() {
            let y = mt + 16.0 + 16.0 * i as f64;
            let x = ml + pw - 150.0;
            let dash = if s.style == SeriesStyle::DashedLine { " stroke-dasharray=\"6 4\"" } else { "" };
            let _ = writeln!(
                out,
                "<line x1=\"{x:.1}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" stroke=\"{}\" stroke-width=\"1.6\"{dash}/>",
                x + 22.0,
                s.color
            );
            let _ = writeln!(
                out,
                "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\">{}</text>",
                x + 28.0,
                y + 4.0,
                escape(&s.label)
            );
        }
        out.push_str("</svg>\n");
        out
    }
}

/// About five round-valued ticks across [lo, hi].
fn ticks(lo: f64, hi: f64) -> Vec<(f64, String)> {
    let span = hi - lo;
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|&s| span / s <= 6.0)
        .unwrap_or(mag * 10.0);
    let first = (lo / step).ceil() * step;
    let mut out = Vec::new();
    let mut t = first;
    while t <= hi + 1e-9 * span {
        let value = if t.abs() < 1e-12 * span { 0.0 } else { t };
        out.push((value, format_tick(value, step)));
        t += step;
    }
    out
}

fn format_tick(value: f64, step: f64) -> String {
    if step >= 1.0 {
        format!("{value:.0}")
    } else if step >= 0.1 {
        format!("{value:.1}")
    } else if step >= 0.01 {
        format!("{value:.2}")
    } else {
        format!("{value:.3}")
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
