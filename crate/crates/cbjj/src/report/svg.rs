//! Minimal native SVG plotting: line series, scatter with error bars,
//! heatmaps and axis furniture. No external renderer; output is a plain
//! string with fixed formatting so identical inputs give identical bytes
//! (up to the version comment).

use std::fmt::Write as _;

const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 25.0;
const MARGIN_TOP: f64 = 45.0;
const MARGIN_BOTTOM: f64 = 55.0;

#[derive(Debug, Clone)]
enum Element {
    Line {
        points: Vec<(f64, f64)>,
        color: String,
    },
    Scatter {
        points: Vec<(f64, f64)>,
        color: String,
    },
    ErrorBars {
        points: Vec<(f64, f64, f64)>,
        color: String,
    },
    Heatmap {
        x_edges: Vec<f64>,
        y_edges: Vec<f64>,
        values: Vec<Vec<f64>>,
    },
}

/// A single-panel figure.
#[derive(Debug, Clone)]
pub struct Figure {
    width: f64,
    height: f64,
    title: String,
    x_label: String,
    y_label: String,
    x_log: bool,
    y_log: bool,
    elements: Vec<Element>,
    top_labels: Vec<(f64, String)>,
}

impl Figure {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Self {
            width: 640.0,
            height: 440.0,
            title: title.to_string(),
            x_label: x_label.to_string(),
            y_label: y_label.to_string(),
            x_log: false,
            y_log: false,
            elements: Vec::new(),
            top_labels: Vec::new(),
        }
    }

    /// Plot the y axis logarithmically (data must be positive).
    pub fn log_y(mut self) -> Self {
        self.y_log = true;
        self
    }

    /// Plot the x axis logarithmically (data must be positive).
    pub fn log_x(mut self) -> Self {
        self.x_log = true;
        self
    }

    pub fn line(&mut self, points: &[(f64, f64)], color: &str) -> &mut Self {
        self.elements.push(Element::Line {
            points: points.to_vec(),
            color: color.to_string(),
        });
        self
    }

    pub fn scatter(&mut self, points: &[(f64, f64)], color: &str) -> &mut Self {
        self.elements.push(Element::Scatter {
            points: points.to_vec(),
            color: color.to_string(),
        });
        self
    }

    /// Points with symmetric 1σ vertical error bars: (x, y, σ).
    pub fn error_bars(&mut self, points: &[(f64, f64, f64)], color: &str) -> &mut Self {
        self.elements.push(Element::ErrorBars {
            points: points.to_vec(),
            color: color.to_string(),
        });
        self
    }

    /// Cell-centered heatmap: `values[i][j]` spans
    /// `x_edges[i]..x_edges[i+1]` × `y_edges[j]..y_edges[j+1]`.
    pub fn heatmap(&mut self, x_edges: &[f64], y_edges: &[f64], values: &[Vec<f64>]) -> &mut Self {
        self.elements.push(Element::Heatmap {
            x_edges: x_edges.to_vec(),
            y_edges: y_edges.to_vec(),
            values: values.to_vec(),
        });
        self
    }

    /// Secondary labels drawn along the top edge at the given x positions.
    pub fn top_axis_labels(&mut self, labels: &[(f64, String)]) -> &mut Self {
        self.top_labels = labels.to_vec();
        self
    }

    fn data_bounds(&self) -> ((f64, f64), (f64, f64)) {
        let mut xb = (f64::INFINITY, f64::NEG_INFINITY);
        let mut yb = (f64::INFINITY, f64::NEG_INFINITY);
        let mut cover = |x: f64, y: f64| {
            let usable_x = if self.x_log { x > 0.0 } else { true };
            if x.is_finite() && usable_x {
                xb.0 = xb.0.min(x);
                xb.1 = xb.1.max(x);
            }
            let usable_y = if self.y_log { y > 0.0 } else { true };
            if y.is_finite() && usable_y {
                yb.0 = yb.0.min(y);
                yb.1 = yb.1.max(y);
            }
        };
        for e in &self.elements {
            match e {
                Element::Line { points, .. } | Element::Scatter { points, .. } => {
                    for &(x, y) in points {
                        cover(x, y);
                    }
                }
                Element::ErrorBars { points, .. } => {
                    for &(x, y, s) in points {
                        cover(x, y - s);
                        cover(x, y + s);
                    }
                }
                Element::Heatmap {
                    x_edges, y_edges, ..
                } => {
                    for &x in x_edges {
                        cover(x, f64::NAN);
                    }
                    for &y in y_edges {
                        cover(f64::NAN, y);
                    }
                }
            }
        }
        if !xb.0.is_finite() {
            xb = (0.0, 1.0);
        }
        if !yb.0.is_finite() {
            yb = (0.0, 1.0);
        }
        if xb.0 == xb.1 {
            xb = (xb.0 - 0.5, xb.1 + 0.5);
        }
        if yb.0 == yb.1 {
            yb = (yb.0 - 0.5, yb.1 + 0.5);
        }
        (xb, yb)
    }

    pub fn render(&self) -> String {
        let ((xb0, xb1), (yb0, yb1)) = self.data_bounds();
        let (x0, x1) = if self.x_log {
            (xb0.log10(), xb1.log10())
        } else {
            (xb0, xb1)
        };
        let (y0, y1) = if self.y_log {
            (yb0.log10(), yb1.log10())
        } else {
            (yb0, yb1)
        };
        let plot_w = self.width - MARGIN_LEFT - MARGIN_RIGHT;
        let plot_h = self.height - MARGIN_TOP - MARGIN_BOTTOM;
        let pad_x = 0.04 * (x1 - x0);
        let pad_y = 0.06 * (y1 - y0);
        let (x0, x1) = (x0 - pad_x, x1 + pad_x);
        let (y0, y1) = (y0 - pad_y, y1 + pad_y);
        let tx = |x: f64| {
            let v = if self.x_log { x.log10() } else { x };
            MARGIN_LEFT + (v - x0) / (x1 - x0) * plot_w
        };
        let ty = |y: f64| {
            let v = if self.y_log { y.log10() } else { y };
            MARGIN_TOP + plot_h - (v - y0) / (y1 - y0) * plot_h
        };

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}">"#,
            self.width, self.height, self.width, self.height
        );
        let _ = writeln!(s, "<!-- cbjj {} -->", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(
            s,
            r##"<rect width="{}" height="{}" fill="#ffffff"/>"##,
            self.width, self.height
        );

        // Heatmaps go under everything else.
        for e in &self.elements {
            if let Element::Heatmap {
                x_edges,
                y_edges,
                values,
            } = e
            {
                let (lo, hi) = values
                    .iter()
                    .flatten()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                        (lo.min(v), hi.max(v))
                    });
                let span = (hi - lo).max(1e-12);
                for (i, row) in values.iter().enumerate() {
                    for (j, &v) in row.iter().enumerate() {
                        let t = ((v - lo) / span).clamp(0.0, 1.0);
                        let xl = tx(x_edges[i]);
                        let xr = tx(x_edges[i + 1]);
                        let yt = ty(y_edges[j + 1]);
                        let yb = ty(y_edges[j]);
                        let _ = writeln!(
                            s,
                            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                            xl,
                            yt,
                            xr - xl,
                            yb - yt,
                            heat_color(t)
                        );
                    }
                }
            }
        }

        // Frame and axes.
        let _ = writeln!(
            s,
            r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#333333"/>"##,
            MARGIN_LEFT, MARGIN_TOP, plot_w, plot_h
        );
        for k in 0..=5 {
            let fx = k as f64 / 5.0;
            let x = x0 + fx * (x1 - x0);
            let px = MARGIN_LEFT + fx * plot_w;
            let x_label = if self.x_log {
                format_tick_log(x)
            } else {
                format_tick(x)
            };
            let _ = writeln!(
                s,
                r##"<line x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="#333333"/>"##,
                MARGIN_TOP + plot_h,
                MARGIN_TOP + plot_h + 5.0
            );
            let _ = writeln!(
                s,
                r##"<text x="{px:.2}" y="{:.2}" font-size="11" text-anchor="middle">{}</text>"##,
                MARGIN_TOP + plot_h + 18.0,
                x_label
            );
            let y = y0 + fx * (y1 - y0);
            let py = MARGIN_TOP + plot_h - fx * plot_h;
            let label = if self.y_log {
                format_tick_log(y)
            } else {
                format_tick(y)
            };
            let _ = writeln!(
                s,
                r##"<line x1="{:.2}" y1="{py:.2}" x2="{:.2}" y2="{py:.2}" stroke="#333333"/>"##,
                MARGIN_LEFT - 5.0,
                MARGIN_LEFT
            );
            let _ = writeln!(
                s,
                r##"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">{label}</text>"##,
                MARGIN_LEFT - 8.0,
                py + 4.0
            );
        }
        for (x, label) in &self.top_labels {
            let px = tx(*x);
            if px >= MARGIN_LEFT && px <= MARGIN_LEFT + plot_w {
                let _ = writeln!(
                    s,
                    r##"<text x="{px:.2}" y="{:.2}" font-size="10" text-anchor="middle" fill="#555555">{label}</text>"##,
                    MARGIN_TOP - 6.0
                );
            }
        }

        for e in &self.elements {
            match e {
                Element::Line { points, color } => {
                    let path: Vec<String> = points
                        .iter()
                        .filter(|(x, y)| {
                            x.is_finite() && y.is_finite() && (!self.y_log || *y > 0.0)
                        })
                        .map(|&(x, y)| format!("{:.2},{:.2}", tx(x), ty(y)))
                        .collect();
                    if path.len() > 1 {
                        let _ = writeln!(
                            s,
                            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.6"/>"#,
                            path.join(" ")
                        );
                    }
                }
                Element::Scatter { points, color } => {
                    for &(x, y) in points {
                        if !x.is_finite() || !y.is_finite() || (self.y_log && y <= 0.0) {
                            continue;
                        }
                        let _ = writeln!(
                            s,
                            r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                            tx(x),
                            ty(y)
                        );
                    }
                }
                Element::ErrorBars { points, color } => {
                    for &(x, y, sig) in points {
                        if !x.is_finite() || !y.is_finite() {
                            continue;
                        }
                        let px = tx(x);
                        let lo = if self.y_log { (y - sig).max(y * 1e-3) } else { y - sig };
                        let _ = writeln!(
                            s,
                            r#"<line x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="{color}"/>"#,
                            ty(lo),
                            ty(y + sig)
                        );
                        let _ = writeln!(
                            s,
                            r#"<circle cx="{px:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                            ty(y)
                        );
                    }
                }
                Element::Heatmap { .. } => {}
            }
        }

        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="20" font-size="14" text-anchor="middle">{}</text>"#,
            self.width / 2.0,
            xml_escape(&self.title)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">{}</text>"#,
            MARGIN_LEFT + plot_w / 2.0,
            self.height - 12.0,
            xml_escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="16" y="{:.2}" font-size="12" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
            MARGIN_TOP + plot_h / 2.0,
            MARGIN_TOP + plot_h / 2.0,
            xml_escape(&self.y_label)
        );
        s.push_str("</svg>\n");
        s
    }
}

/// Two-stop colormap from deep blue to yellow.
fn heat_color(t: f64) -> String {
    let r = (25.0 + t * 225.0) as u8;
    let g = (35.0 + t * 190.0) as u8;
    let b = (110.0 * (1.0 - t) + 35.0) as u8;
    format!("#{r:02x}{g:02x}{b:02x}")
}

fn format_tick(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 {
        "0".to_string()
    } else if a >= 1e4 || a < 1e-3 {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

fn format_tick_log(log10_v: f64) -> String {
    format!("1e{log10_v:.1}")
}

fn xml_escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_expected_elements() {
        let mut fig = Figure::new("rates", "bias (uA)", "rate (Hz)").log_y();
        fig.scatter(&[(2.86, 10.0), (2.90, 1000.0)], "#d62728");
        fig.line(&[(2.86, 12.0), (2.90, 900.0)], "#1f77b4");
        let svg = fig.render();
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("<circle"));
        assert!(svg.contains("<polyline"));
        assert!(svg.contains("rates"));
        assert!(svg.ends_with("</svg>\n"));
    }

    #[test]
    fn render_is_deterministic() {
        let build = || {
            let mut fig = Figure::new("t", "x", "y");
            fig.error_bars(&[(0.0, 1.0, 0.1), (1.0, 2.0, 0.2)], "#000000");
            fig.heatmap(
                &[0.0, 1.0, 2.0],
                &[0.0, 1.0],
                &[vec![0.2], vec![0.9]],
            );
            fig.render()
        };
        assert_eq!(build(), build());
    }

    #[test]
    fn log_axis_skips_nonpositive_values() {
        let mut fig = Figure::new("t", "x", "y").log_y();
        fig.scatter(&[(0.0, 0.0), (1.0, 10.0), (2.0, 100.0)], "#123456");
        let svg = fig.render();
        assert_eq!(svg.matches("<circle").count(), 2);
    }
}
