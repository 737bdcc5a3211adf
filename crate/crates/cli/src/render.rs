//! CSV samples and SVG plots, written by hand: a polyline, markers and
//! axes need no plotting library.

use std::fmt::Write;

use dp_core::{CurveReport, PiecewiseLinearDP};

use crate::json::sig17;

pub const CSV_SAMPLES: usize = 201;
pub const WIDTH: f64 = 1000.0;
pub const HEIGHT: f64 = 600.0;
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 30.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 60.0;

/// `P, D(P), slope` at `P = i / 200`, evaluated by the curve itself.
pub fn curve_csv(curve: &PiecewiseLinearDP) -> String {
    let mut out = String::from("P,D,slope\n");
    for i in 0..CSV_SAMPLES {
        let p = i as f64 / (CSV_SAMPLES - 1) as f64;
        writeln!(out, "{},{},{}", sig17(p), sig17(curve.value(p)), sig17(curve.slope(p))).unwrap();
    }
    out
}

/// Maps data coordinates into the plotting area.
struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn new(x: (f64, f64), y: (f64, f64)) -> Self {
        let pad = |(lo, hi): (f64, f64)| {
            if hi - lo > 1e-12 {
                let m = 0.05 * (hi - lo);
                (lo - m, hi + m)
            } else {
                (lo - 0.5, hi + 0.5)
            }
        };
        Self { x: pad(x), y: pad(y) }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN_LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN_BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    }
}

fn ticks((lo, hi): (f64, f64), count: usize) -> Vec<f64> {
    (0..=count).map(|i| lo + (hi - lo) * i as f64 / count as f64).collect()
}

fn header(out: &mut String, title: &str) {
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="13">"#
    )
    .unwrap();
    writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(out, r#"<text x="{}" y="24" text-anchor="middle" font-size="16">{}</text>"#, WIDTH / 2.0, escape(title)).unwrap();
}

fn axes(out: &mut String, f: &Frame, x_label: &str, y_label: &str) {
    let (x0, x1) = (f.px(f.x.0), f.px(f.x.1));
    let (y0, y1) = (f.py(f.y.0), f.py(f.y.1));
    writeln!(out, r#"<g id="axes" stroke="black" stroke-width="1">"#).unwrap();
    writeln!(out, r#"<line x1="{x0:.2}" y1="{y0:.2}" x2="{x1:.2}" y2="{y0:.2}"/>"#).unwrap();
    writeln!(out, r#"<line x1="{x0:.2}" y1="{y0:.2}" x2="{x0:.2}" y2="{y1:.2}"/>"#).unwrap();
    for t in ticks(f.x, 5) {
        let x = f.px(t);
        writeln!(out, r#"<line x1="{x:.2}" y1="{y0:.2}" x2="{x:.2}" y2="{:.2}"/>"#, y0 + 5.0).unwrap();
        writeln!(out, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle" stroke="none">{t:.3}</text>"#, y0 + 20.0)
            .unwrap();
    }
    for t in ticks(f.y, 5) {
        let y = f.py(t);
        writeln!(out, r#"<line x1="{:.2}" y1="{y:.2}" x2="{x0:.2}" y2="{y:.2}"/>"#, x0 - 5.0).unwrap();
        writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="end" stroke="none">{t:.4}</text>"#, x0 - 8.0, y + 4.0)
            .unwrap();
    }
    writeln!(out, "</g>").unwrap();
    writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 15.0,
        escape(x_label)
    )
    .unwrap();
    writeln!(
        out,
        r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">{}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(y_label)
    )
    .unwrap();
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// `D(P)` on `[0, 1]` as a polyline through its breakpoints, with the
/// breakpoints marked.
pub fn curve_svg(curve: &PiecewiseLinearDP, title: &str) -> String {
    let mut knots = vec![0.0];
    knots.extend(curve.breakpoints().iter().copied().filter(|&b| b > 0.0 && b < 1.0));
    knots.push(1.0);
    let values: Vec<f64> = knots.iter().map(|&p| curve.value(p)).collect();
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min).min(0.0);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let f = Frame::new((0.0, 1.0), (lo, hi));

    let mut out = String::new();
    header(&mut out, title);
    axes(&mut out, &f, "perception P", "distortion D(P)");
    let pts: Vec<String> = knots.iter().zip(&values).map(|(&p, &d)| format!("{:.2},{:.2}", f.px(p), f.py(d))).collect();
    writeln!(out, r#"<polyline id="curve" fill="none" stroke="steelblue" stroke-width="2" points="{}"/>"#, pts.join(" "))
        .unwrap();
    writeln!(out, r#"<g id="breakpoints" fill="crimson">"#).unwrap();
    for &b in curve.breakpoints() {
        let d = curve.value(b);
        writeln!(
            out,
            r#"<circle cx="{:.2}" cy="{:.2}" r="5"><title>P = {}, D = {}</title></circle>"#,
            f.px(b),
            f.py(d),
            sig17(b),
            sig17(d)
        )
        .unwrap();
    }
    writeln!(out, "</g>").unwrap();
    writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="end">D* = {:.6}, P* = {:.6}</text>"#,
        WIDTH - MARGIN_RIGHT,
        MARGIN_TOP + 15.0,
        curve.d_star(),
        curve.p_star()
    )
    .unwrap();
    out.push_str("</svg>\n");
    out
}

/// Projected dual points `(p1, p0)` with their convex hull drawn and the
/// extreme points and envelope-active points marked.
pub fn s2_svg(report: &CurveReport, title: &str) -> String {
    let pts = &report.s2_points;
    let xs = pts.iter().map(|p| p.p1);
    let ys = pts.iter().map(|p| p.p0);
    let x = (xs.clone().fold(f64::INFINITY, f64::min), xs.fold(f64::NEG_INFINITY, f64::max));
    let y = (ys.clone().fold(f64::INFINITY, f64::min), ys.fold(f64::NEG_INFINITY, f64::max));
    let f = Frame::new(x, y);

    let mut out = String::new();
    header(&mut out, title);
    axes(&mut out, &f, "p1 (slope)", "p0 (intercept)");
    let hull: Vec<String> = report
        .hull_extremes
        .iter()
        .map(|&i| format!("{:.2},{:.2}", f.px(pts[i].p1), f.py(pts[i].p0)))
        .collect();
    writeln!(out, r#"<polygon id="hull" fill="none" stroke="gray" stroke-dasharray="4 3" points="{}"/>"#, hull.join(" "))
        .unwrap();
    writeln!(out, r#"<g id="points" fill="gray" fill-opacity="0.6">"#).unwrap();
    for p in pts {
        writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="3"/>"#, f.px(p.p1), f.py(p.p0)).unwrap();
    }
    writeln!(out, "</g>").unwrap();
    writeln!(out, r#"<g id="extremes" fill="none" stroke="black" stroke-width="1.5">"#).unwrap();
    for &i in &report.hull_extremes {
        writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="6"/>"#, f.px(pts[i].p1), f.py(pts[i].p0)).unwrap();
    }
    writeln!(out, "</g>").unwrap();
    writeln!(out, r#"<g id="active" fill="crimson">"#).unwrap();
    for p in report.active_points() {
        writeln!(
            out,
            r#"<circle cx="{:.2}" cy="{:.2}" r="4"><title>p0 = {}, p1 = {}</title></circle>"#,
            f.px(p.p1),
            f.py(p.p0),
            sig17(p.p0),
            sig17(p.p1)
        )
        .unwrap();
    }
    writeln!(out, "</g>").unwrap();
    out.push_str("</svg>\n");
    out
}
