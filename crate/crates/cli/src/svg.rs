//! Self-contained SVG charts. Output depends only on the input rows, and every
//! number is printed with a fixed precision, so equal input gives equal bytes.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];
/// Scatter plots keep at most this many points per series, taking every j-th.
pub const MAX_SCATTER_POINTS: usize = 60_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mark {
    /// Polyline with a marker at every point.
    Line,
    /// Dots only.
    Scatter,
    /// Side-by-side bars at integer x positions.
    Bars,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    /// Fixed y range; otherwise fitted to the data (from 0 for bars).
    pub y_range: Option<(f64, f64)>,
    pub integer_x: bool,
    pub mark: Mark,
    pub series: Vec<Series>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmptyChart;

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Tick positions on a "nice" 1-2-5 grid.
fn ticks(lo: f64, hi: f64, integer: bool) -> Vec<f64> {
    let raw = (hi - lo) / 6.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let step = if integer { step.max(1.0).round() } else { step };
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-9 * step {
        out.push(if t.abs() < 1e-12 * step { 0.0 } else { t });
        t += step;
    }
    out
}

fn label(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

fn range(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    values.fold(None, |acc, v| match acc {
        None => Some((v, v)),
        Some((a, b)) => Some((a.min(v), b.max(v))),
    })
}

/// Render `chart`; a chart without any point is an error.
pub fn render(chart: &Chart) -> Result<String, EmptyChart> {
    if chart.series.iter().all(|s| s.points.is_empty()) {
        return Err(EmptyChart);
    }
    let all = || chart.series.iter().flat_map(|s| s.points.iter().copied());
    let (mut x0, mut x1) = range(all().map(|p| p.0)).expect("non-empty");
    // A single x position gets a unit pad either side.
    if x1 - x0 < 1e-12 {
        x0 -= 1.0;
        x1 += 1.0;
    } else if chart.mark == Mark::Bars {
        x0 -= 0.5;
        x1 += 0.5;
    }
    let (y0, y1) = match chart.y_range {
        Some(r) => r,
        None => {
            let (a, b) = range(all().map(|p| p.1)).expect("non-empty");
            let a = if chart.mark == Mark::Bars { 0.0 } else { a };
            if b - a < 1e-12 {
                (a - 1.0, b + 1.0)
            } else {
                (a, b + 0.05 * (b - a))
            }
        }
    };
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + (1.0 - (y - y0) / (y1 - y0)) * ph;

    let mut s = String::new();
    let w = &mut s;
    writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(w, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#).unwrap();
    writeln!(w, r#"<text x="{:.2}" y="22" text-anchor="middle" font-size="15">{}</text>"#, LEFT + pw / 2.0, esc(&chart.title)).unwrap();
    // Grid and ticks.
    for t in ticks(x0, x1, chart.integer_x) {
        let x = sx(t);
        writeln!(w, r##"<line x1="{x:.2}" y1="{TOP:.2}" x2="{x:.2}" y2="{:.2}" stroke="#e5e5e5"/>"##, TOP + ph).unwrap();
        writeln!(w, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, TOP + ph + 18.0, label(t)).unwrap();
    }
    for t in ticks(y0, y1, false) {
        let y = sy(t);
        writeln!(w, r##"<line x1="{LEFT:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#e5e5e5"/>"##, LEFT + pw).unwrap();
        writeln!(w, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 8.0, y + 4.0, label(t)).unwrap();
    }
    writeln!(
        w,
        r#"<rect x="{LEFT:.2}" y="{TOP:.2}" width="{pw:.2}" height="{ph:.2}" fill="none" stroke="black"/>"#
    )
    .unwrap();
    writeln!(w, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, LEFT + pw / 2.0, HEIGHT - 18.0, esc(&chart.x_label)).unwrap();
    writeln!(
        w,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        esc(&chart.y_label)
    )
    .unwrap();

    let n = chart.series.len();
    for (i, series) in chart.series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        writeln!(w, r#"<g class="series" data-label="{}">"#, esc(&series.label)).unwrap();
        match chart.mark {
            Mark::Line => {
                if series.points.len() > 1 {
                    let pts: Vec<String> = series.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
                    writeln!(w, r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#, pts.join(" ")).unwrap();
                }
                for &(x, y) in &series.points {
                    writeln!(w, r#"<circle cx="{:.2}" cy="{:.2}" r="3.5" fill="{color}"/>"#, sx(x), sy(y)).unwrap();
                }
            }
            Mark::Scatter => {
                let step = series.points.len().div_ceil(MAX_SCATTER_POINTS).max(1);
                for &(x, y) in series.points.iter().step_by(step) {
                    writeln!(w, r#"<circle cx="{:.2}" cy="{:.2}" r="1" fill="{color}"/>"#, sx(x), sy(y)).unwrap();
                }
            }
            Mark::Bars => {
                let slot = pw / (x1 - x0) * 0.8;
                let bw = slot / n as f64;
                for &(x, y) in &series.points {
                    let left = sx(x) - slot / 2.0 + i as f64 * bw;
                    let top = sy(y.max(y0));
                    writeln!(
                        w,
                        r#"<rect x="{left:.2}" y="{top:.2}" width="{bw:.2}" height="{:.2}" fill="{color}"/>"#,
                        (sy(y0) - top).max(0.0)
                    )
                    .unwrap();
                }
            }
        }
        writeln!(w, "</g>").unwrap();
        // Legend entry.
        let ly = TOP + 10.0 + 20.0 * i as f64;
        let lx = LEFT + pw + 16.0;
        writeln!(w, r#"<rect x="{lx:.2}" y="{:.2}" width="14" height="10" fill="{color}"/>"#, ly - 9.0).unwrap();
        writeln!(w, r#"<text x="{:.2}" y="{ly:.2}">{}</text>"#, lx + 20.0, esc(&series.label)).unwrap();
    }
    writeln!(w, "</svg>").unwrap();
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chart(points: Vec<(f64, f64)>) -> Chart {
        Chart {
            title: "t".into(),
            x_label: "x".into(),
            y_label: "y".into(),
            y_range: Some((0.0, 1.0)),
            integer_x: true,
            mark: Mark::Line,
            series: vec![Series { label: "a".into(), points }],
        }
    }

    #[test]
    fn empty_is_rejected() {
        assert_eq!(render(&chart(vec![])), Err(EmptyChart));
    }

    #[test]
    fn single_point_gets_one_marker_and_padded_axis() {
        let svg = render(&chart(vec![(5.0, 0.5)])).unwrap();
        assert_eq!(svg.matches("<circle").count(), 1);
        assert!(!svg.contains("<polyline"));
        // ticks at 4, 5, 6 from the unit pad
        for t in [">4<", ">5<", ">6<"] {
            assert!(svg.contains(t), "{t}");
        }
    }

    #[test]
    fn deterministic() {
        let c = chart(vec![(5.0, 0.5), (6.0, 0.25), (7.0, 0.75)]);
        assert_eq!(render(&c).unwrap(), render(&c).unwrap());
        assert_eq!(render(&c).unwrap().matches("<polyline").count(), 1);
    }

    #[test]
    fn tick_grid() {
        assert_eq!(ticks(0.0, 1.0, false), vec![0.0, 0.2, 0.4, 0.6000000000000001, 0.8, 1.0]);
        assert_eq!(ticks(5.0, 11.0, true), vec![5.0, 6.0, 7.0, 8.0, 9.0, 10.0, 11.0]);
    }
}
