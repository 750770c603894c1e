//! Minimal SVG plots over the CSV data.

use std::fmt::Write as _;

const W: f64 = 640.0;
const H: f64 = 420.0;
const PAD: f64 = 50.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    /// Draw markers only instead of a polyline.
    pub scatter: bool,
}

pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<Series>,
    /// Horizontal bands `(lo, hi)` shaded across the plot.
    pub bands: Vec<(f64, f64)>,
}

impl Plot {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            log_x: false,
            log_y: false,
            series: vec![],
            bands: vec![],
        }
    }

    pub fn render(&self) -> String {
        let tx = |v: f64| if self.log_x { v.log10() } else { v };
        let ty = |v: f64| if self.log_y { v.log10() } else { v };
        let pts: Vec<(f64, f64)> = self
            .series
            .iter()
            .flat_map(|s| s.points.iter().map(|&(x, y)| (tx(x), ty(y))))
            .chain(
                self.bands
                    .iter()
                    .flat_map(|&(lo, hi)| [(f64::NAN, ty(lo)), (f64::NAN, ty(hi))]),
            )
            .collect();
        let range = |vals: &mut dyn Iterator<Item = f64>| {
            let (lo, hi) = vals
                .filter(|v| v.is_finite())
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
            if !lo.is_finite() {
                (0.0, 1.0)
            } else if hi - lo < 1e-12 {
                (lo - 0.5, hi + 0.5)
            } else {
                (lo, hi)
            }
        };
        let (x0, x1) = range(&mut pts.iter().map(|p| p.0));
        let (y0, y1) = range(&mut pts.iter().map(|p| p.1));
        let px = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
        let py = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);

        let mut s = String::new();
        writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
        )
        .unwrap();
        writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#).unwrap();
        for &(lo, hi) in &self.bands {
            let (a, b) = (py(ty(hi)), py(ty(lo)));
            writeln!(
                s,
                r##"<rect x="{PAD}" y="{a:.2}" width="{:.2}" height="{:.2}" fill="#c6dbef" opacity="0.6"/>"##,
                W - 2.0 * PAD,
                (b - a).max(0.5)
            )
            .unwrap();
        }
        writeln!(
            s,
            r#"<rect x="{PAD}" y="{PAD}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
            W - 2.0 * PAD,
            H - 2.0 * PAD
        )
        .unwrap();
        for (i, ser) in self.series.iter().enumerate() {
            let color = COLORS[i % COLORS.len()];
            // non-finite points split a polyline into pieces
            let mut pieces: Vec<Vec<String>> = vec![vec![]];
            for &(x, y) in &ser.points {
                let (x, y) = (tx(x), ty(y));
                if x.is_finite() && y.is_finite() {
                    pieces.last_mut().unwrap().push(format!("{:.2},{:.2}", px(x), py(y)));
                } else if !pieces.last().unwrap().is_empty() {
                    pieces.push(vec![]);
                }
            }
            for coords in pieces.iter().filter(|c| !c.is_empty()) {
                if ser.scatter {
                    for c in coords {
                        let (cx, cy) = c.split_once(',').unwrap();
                        writeln!(s, r#"<circle cx="{cx}" cy="{cy}" r="2.5" fill="{color}"/>"#).unwrap();
                    }
                } else {
                    writeln!(
                        s,
                        r#"<polyline fill="none" stroke="{color}" stroke-width="1" points="{}"/>"#,
                        coords.join(" ")
                    )
                    .unwrap();
                }
            }
            writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" font-size="11" fill="{color}">{}</text>"#,
                W - PAD + 4.0,
                PAD + 14.0 * i as f64 + 10.0,
                escape(&ser.name)
            )
            .unwrap();
        }
        let axis = |v: f64, log: bool| if log { format!("1e{v:.2}") } else { format!("{v:.4}") };
        for (v, x, y, anchor) in [(x0, PAD, H - PAD + 16.0, "start"), (x1, W - PAD, H - PAD + 16.0, "end")] {
            writeln!(
                s,
                r#"<text x="{x:.2}" y="{y:.2}" font-size="11" text-anchor="{anchor}">{}</text>"#,
                axis(v, self.log_x)
            )
            .unwrap();
        }
        for (v, y) in [(y0, H - PAD), (y1, PAD + 10.0)] {
            writeln!(
                s,
                r#"<text x="{:.2}" y="{y:.2}" font-size="11" text-anchor="end">{}</text>"#,
                PAD - 4.0,
                axis(v, self.log_y)
            )
            .unwrap();
        }
        writeln!(
            s,
            r#"<text x="{:.2}" y="24" font-size="14" text-anchor="middle">{}</text>"#,
            W / 2.0,
            escape(&self.title)
        )
        .unwrap();
        writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">{}</text>"#,
            W / 2.0,
            H - 12.0,
            escape(&self.x_label)
        )
        .unwrap();
        writeln!(
            s,
            r#"<text x="14" y="{:.2}" font-size="12" text-anchor="middle" transform="rotate(-90 14 {:.2})">{}</text>"#,
            H / 2.0,
            H / 2.0,
            escape(&self.y_label)
        )
        .unwrap();
        s.push_str("</svg>\n");
        s
    }
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_series_and_bands() {
        let mut p = Plot::new("a < b", "x", "y");
        p.series.push(Series {
            name: "s".into(),
            points: vec![(0.0, 0.0), (1.0, 2.0)],
            scatter: false,
        });
        p.series.push(Series {
            name: "t".into(),
            points: vec![(0.5, 1.0)],
            scatter: true,
        });
        p.bands.push((0.5, 1.5));
        let s = p.render();
        assert!(s.starts_with("<svg") && s.ends_with("</svg>\n"));
        assert!(s.contains("<polyline") && s.contains("<circle") && s.contains("a &lt; b"));
        assert_eq!(s, p.render());
    }

    #[test]
    fn log_axes_skip_nonpositive_values() {
        let mut p = Plot::new("t", "x", "y");
        p.log_y = true;
        p.series.push(Series {
            name: "s".into(),
            points: vec![(1.0, 0.0), (2.0, 10.0), (3.0, 100.0)],
            scatter: true,
        });
        assert_eq!(p.render().matches("<circle").count(), 2);
    }

    #[test]
    fn nan_points_split_polylines() {
        let mut p = Plot::new("t", "x", "y");
        let nan = f64::NAN;
        p.series.push(Series {
            name: "s".into(),
            points: vec![(0.0, 0.0), (1.0, 1.0), (nan, nan), (2.0, 0.0), (3.0, 1.0)],
            scatter: false,
        });
        assert_eq!(p.render().matches("<polyline").count(), 2);
    }
}
