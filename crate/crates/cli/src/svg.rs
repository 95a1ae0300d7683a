//! Minimal static SVG charts built from polylines.

use std::fmt::Write;

use lqg_walk::planner::FootstepPlan;

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 60.0;

pub struct Series<'a> {
    pub name: &'a str,
    pub color: &'a str,
    pub dashed: bool,
    pub points: Vec<(f64, f64)>,
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn fit<'a>(points: impl Iterator<Item = &'a (f64, f64)>) -> Frame {
        let (mut x, mut y) = ((f64::INFINITY, f64::NEG_INFINITY), (f64::INFINITY, f64::NEG_INFINITY));
        for &(px, py) in points.filter(|(a, b)| a.is_finite() && b.is_finite()) {
            x = (x.0.min(px), x.1.max(px));
            y = (y.0.min(py), y.1.max(py));
        }
        let pad = |r: (f64, f64)| {
            if !r.0.is_finite() {
                (0.0, 1.0)
            } else if r.1 - r.0 < 1e-9 {
                (r.0 - 0.5, r.1 + 0.5)
            } else {
                let m = 0.05 * (r.1 - r.0);
                (r.0 - m, r.1 + m)
            }
        };
        Frame { x: pad(x), y: pad(y) }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - 2.0 * MARGIN)
    }
}

fn header(out: &mut String, title: &str, frame: &Frame, x_label: &str, y_label: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );
    let _ = writeln!(out, r#"<text x="{}" y="30" text-anchor="middle" font-size="15">{title}</text>"#, WIDTH / 2.0);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{x_label}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        out,
        r#"<text x="15" y="{}" text-anchor="middle" transform="rotate(-90 15 {})">{y_label}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );
    for (v, anchor) in [(frame.x.0, "start"), (frame.x.1, "end")] {
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{}" text-anchor="{anchor}">{v:.3}</text>"#,
            frame.px(v),
            HEIGHT - MARGIN + 16.0
        );
    }
    for v in [frame.y.0, frame.y.1] {
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{:.1}" text-anchor="end">{v:.3}</text>"#,
            MARGIN - 5.0,
            frame.py(v) + 4.0
        );
    }
}

fn legend(out: &mut String, entries: &[(&str, &str, bool)]) {
    for (i, (name, color, dashed)) in entries.iter().enumerate() {
        let y = MARGIN + 15.0 + 16.0 * i as f64;
        let x = WIDTH - MARGIN - 150.0;
        let dash = if *dashed { r#" stroke-dasharray="6 3""# } else { "" };
        let _ = writeln!(
            out,
            r#"<line x1="{x}" y1="{y}" x2="{}" y2="{y}" stroke="{color}" stroke-width="2"{dash}/>"#,
            x + 25.0
        );
        let _ = writeln!(out, r#"<text x="{}" y="{}">{name}</text>"#, x + 30.0, y + 4.0);
    }
}

pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let frame = Frame::fit(series.iter().flat_map(|s| s.points.iter()));
    let mut out = String::new();
    header(&mut out, title, &frame, x_label, y_label);
    for s in series {
        let points: Vec<String> = s
            .points
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", frame.px(x), frame.py(y)))
            .collect();
        let dash = if s.dashed { r#" stroke-dasharray="6 3""# } else { "" };
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{}" stroke-width="1.5"{dash} points="{}"/>"#,
            s.color,
            points.join(" ")
        );
    }
    legend(
        &mut out,
        &series.iter().map(|s| (s.name, s.color, s.dashed)).collect::<Vec<_>>(),
    );
    out.push_str("</svg>\n");
    out
}

/// Top view: planned footprints, adjusted footprints and the COM path.
pub fn top_view(planned: &FootstepPlan, executed: &FootstepPlan, foot: [f64; 2], com: &[(f64, f64)]) -> String {
    let feet = |plan: &FootstepPlan| -> Vec<(f64, f64)> {
        std::iter::once(&plan.trailing)
            .chain(plan.steps.iter())
            .chain(std::iter::once(&plan.terminal))
            .map(|f| (f.x, f.y))
            .collect()
    };
    let (before, after) = (feet(planned), feet(executed));
    let corners: Vec<(f64, f64)> = before
        .iter()
        .chain(after.iter())
        .flat_map(|&(x, y)| [(x - foot[0] / 2.0, y - foot[1] / 2.0), (x + foot[0] / 2.0, y + foot[1] / 2.0)])
        .chain(com.iter().copied())
        .collect();
    let mut frame = Frame::fit(corners.iter());
    // equal scale on both axes
    let sx = (frame.x.1 - frame.x.0) / (WIDTH - 2.0 * MARGIN);
    let sy = (frame.y.1 - frame.y.0) / (HEIGHT - 2.0 * MARGIN);
    let scale = sx.max(sy);
    let (cx, cy) = ((frame.x.0 + frame.x.1) / 2.0, (frame.y.0 + frame.y.1) / 2.0);
    frame.x = (cx - scale * (WIDTH - 2.0 * MARGIN) / 2.0, cx + scale * (WIDTH - 2.0 * MARGIN) / 2.0);
    frame.y = (cy - scale * (HEIGHT - 2.0 * MARGIN) / 2.0, cy + scale * (HEIGHT - 2.0 * MARGIN) / 2.0);

    let mut out = String::new();
    header(&mut out, "Top view", &frame, "x (m)", "y (m)");
    let rect = |out: &mut String, (x, y): (f64, f64), stroke: &str, fill: &str, dashed: bool| {
        let dash = if dashed { r#" stroke-dasharray="4 3""# } else { "" };
        let _ = writeln!(
            out,
            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{fill}" stroke="{stroke}"{dash}/>"#,
            frame.px(x - foot[0] / 2.0),
            frame.py(y + foot[1] / 2.0),
            frame.px(x + foot[0] / 2.0) - frame.px(x - foot[0] / 2.0),
            frame.py(y - foot[1] / 2.0) - frame.py(y + foot[1] / 2.0)
        );
    };
    for (&p, &a) in before.iter().zip(after.iter()) {
        if p == a {
            rect(&mut out, a, "steelblue", "lightsteelblue", false);
        } else {
            rect(&mut out, p, "gray", "none", true);
            rect(&mut out, a, "crimson", "mistyrose", false);
        }
    }
    let points: Vec<String> = com
        .iter()
        .map(|&(x, y)| format!("{:.2},{:.2}", frame.px(x), frame.py(y)))
        .collect();
    let _ = writeln!(
        out,
        r#"<polyline fill="none" stroke="black" stroke-width="1.2" points="{}"/>"#,
        points.join(" ")
    );
    legend(
        &mut out,
        &[("COM", "black", false), ("planned", "gray", true), ("adjusted", "crimson", false)],
    );
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chart_is_well_formed() {
        let svg = line_chart(
            "t",
            "x",
            "y",
            &[Series {
                name: "a",
                color: "red",
                dashed: false,
                points: vec![(0.0, 1.0), (1.0, 2.0), (2.0, f64::NAN)],
            }],
        );
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert!(!svg.contains("NaN"));
    }

    #[test]
    fn flat_series_does_not_divide_by_zero() {
        let svg = line_chart(
            "flat",
            "x",
            "y",
            &[Series {
                name: "c",
                color: "blue",
                dashed: true,
                points: vec![(0.0, 0.3), (0.0, 0.3)],
            }],
        );
        assert!(!svg.contains("inf") && !svg.contains("NaN"));
    }
}
