//! Minimal log-log line chart writer.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 220.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
}

/// Log-log chart with optional guide lines `y ∝ x^{−k}`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LogLogChart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Orders `k` of the guide lines.
    pub guide_orders: Vec<u32>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

impl LogLogChart {
    fn bounds(&self) -> Option<(f64, f64, f64, f64)> {
        let pts = self
            .series
            .iter()
            .flat_map(|s| s.points.iter())
            .filter(|(x, y)| *x > 0.0 && *y > 0.0 && x.is_finite() && y.is_finite());
        let mut b: Option<(f64, f64, f64, f64)> = None;
        for &(x, y) in pts {
            let (lx, ly) = (x.log10(), y.log10());
            b = Some(match b {
                None => (lx, lx, ly, ly),
                Some((x0, x1, y0, y1)) => (x0.min(lx), x1.max(lx), y0.min(ly), y1.max(ly)),
            });
        }
        b.map(|(x0, x1, y0, y1)| {
            (
                x0.floor(),
                x1.ceil().max(x0.floor() + 1.0),
                y0.floor(),
                y1.ceil().max(y0.floor() + 1.0),
            )
        })
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            out,
            r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
            LEFT + (WIDTH - LEFT - RIGHT) / 2.0,
            escape(&self.title)
        );
        let Some((x0, x1, y0, y1)) = self.bounds() else {
            out.push_str("</svg>\n");
            return out;
        };
        let pw = WIDTH - LEFT - RIGHT;
        let ph = HEIGHT - TOP - BOTTOM;
        let sx = |lx: f64| LEFT + (lx - x0) / (x1 - x0) * pw;
        let sy = |ly: f64| TOP + (y1 - ly) / (y1 - y0) * ph;

        let _ = writeln!(
            out,
            r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
        );
        for d in (x0 as i32)..=(x1 as i32) {
            let x = sx(d as f64);
            let _ = writeln!(
                out,
                r##"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{:.2}" stroke="#ddd"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">1e{d}</text>"##,
                TOP + ph,
                TOP + ph + 16.0
            );
        }
        for d in (y0 as i32)..=(y1 as i32) {
            let y = sy(d as f64);
            let _ = writeln!(
                out,
                r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">1e{d}</text>"##,
                LEFT + pw,
                LEFT - 6.0,
                y + 4.0
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            HEIGHT - 16.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">{}</text>"#,
            TOP + ph / 2.0,
            TOP + ph / 2.0,
            escape(&self.y_label)
        );

        let _ = writeln!(out, r#"<g clip-path="url(#plot)">"#);
        let _ = writeln!(
            out,
            r#"<clipPath id="plot"><rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}"/></clipPath>"#
        );
        // Guides pass through the top-left corner of the data range.
        for &k in &self.guide_orders {
            let (ax, ay) = (x0, y1);
            let bx = x1;
            let by = ay - k as f64 * (bx - ax);
            let _ = writeln!(
                out,
                r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#999" stroke-dasharray="2,4"/>"##,
                sx(ax),
                sy(ay),
                sx(bx),
                sy(by)
            );
        }
        for (i, s) in self.series.iter().enumerate() {
            let colour = PALETTE[i % PALETTE.len()];
            let pts: Vec<String> = s
                .points
                .iter()
                .filter(|(x, y)| *x > 0.0 && *y > 0.0 && x.is_finite() && y.is_finite())
                .map(|(x, y)| format!("{:.2},{:.2}", sx(x.log10()), sy(y.log10())))
                .collect();
            let dash = if s.dashed {
                r#" stroke-dasharray="6,3""#
            } else {
                ""
            };
            let _ = writeln!(
                out,
                r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="1.5"{dash}/>"#,
                pts.join(" ")
            );
        }
        out.push_str("</g>\n");
        for (i, s) in self.series.iter().enumerate() {
            let colour = PALETTE[i % PALETTE.len()];
            let y = TOP + 14.0 + 18.0 * i as f64;
            let x = LEFT + pw + 12.0;
            let dash = if s.dashed {
                r#" stroke-dasharray="6,3""#
            } else {
                ""
            };
            let _ = writeln!(
                out,
                r#"<line x1="{x:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{colour}" stroke-width="1.5"{dash}/><text x="{:.2}" y="{y:.2}">{}</text>"#,
                y - 4.0,
                x + 24.0,
                y - 4.0,
                x + 30.0,
                escape(&s.label)
            );
        }
        out.push_str("</svg>\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_series_and_guides() {
        let chart = LogLogChart {
            title: "a < b".into(),
            x_label: "evaluations".into(),
            y_label: "error".into(),
            series: vec![Series {
                label: "q=1".into(),
                points: vec![(10.0, 1e-2), (100.0, 1e-4), (1000.0, 0.0)],
                dashed: false,
            }],
            guide_orders: vec![1, 2],
        };
        let svg = chart.render();
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert_eq!(svg.matches("stroke-dasharray=\"2,4\"").count(), 2);
        assert!(svg.contains("a &lt; b"));
    }

    #[test]
    fn empty_chart_is_valid() {
        let svg = LogLogChart::default().render();
        assert!(svg.trim_end().ends_with("</svg>"));
    }
}
