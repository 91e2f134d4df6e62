//! Self-contained SVG rendering of a bifurcation diagram.

use std::fmt::Write;

use modnod::continuation::{BifurcationEvent, Diagram, EventKind};
use modnod::Singularity;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;

const PALETTE: [&str; 8] = ["#222222", "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

struct Frame {
    u_lo: f64,
    u_hi: f64,
    y_lo: f64,
    y_hi: f64,
}

impl Frame {
    fn px(&self, u0: f64) -> f64 {
        LEFT + (u0 - self.u_lo) / (self.u_hi - self.u_lo) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y_lo) / (self.y_hi - self.y_lo) * (HEIGHT - TOP - BOTTOM)
    }
}

fn nice_step(span: f64) -> f64 {
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let f = raw / mag;
    let nice = if f < 1.5 {
        1.0
    } else if f < 3.5 {
        2.0
    } else if f < 7.5 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let step = nice_step(hi - lo);
    let start = (lo / step).ceil() as i64;
    let end = (hi / step).floor() as i64;
    (start..=end).map(|k| k as f64 * step).collect()
}

fn tick_label(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

/// Marker fill and stroke for an event.
fn marker(ev: &BifurcationEvent) -> (&'static str, &'static str) {
    match (ev.kind, ev.singularity()) {
        (EventKind::Pitchfork, Some(Singularity::SubcriticalPitchfork)) => ("white", "#1f4fd8"),
        (EventKind::Pitchfork, _) => ("#1f4fd8", "#1f4fd8"),
        (EventKind::SaddleNode, _) => ("#2a9d3a", "#2a9d3a"),
        (EventKind::Transcritical, _) => ("#f08c00", "#f08c00"),
        (EventKind::Unclassified, _) => ("#888888", "#888888"),
    }
}

/// Renders `diagram` with `u0` on the horizontal axis and `project(x)` on the
/// vertical one. Stable stretches are drawn thick and unstable ones thin.
pub fn render(diagram: &Diagram, u0_range: (f64, f64), project: impl Fn(&[f64]) -> f64, y_label: &str) -> String {
    let mut y_lo = f64::INFINITY;
    let mut y_hi = f64::NEG_INFINITY;
    let projected: Vec<Vec<f64>> = diagram
        .branches
        .iter()
        .map(|b| b.points.iter().map(|p| project(p.x.as_slice())).collect())
        .collect();
    for y in projected.iter().flatten() {
        y_lo = y_lo.min(*y);
        y_hi = y_hi.max(*y);
    }
    if !(y_lo.is_finite() && y_hi.is_finite()) {
        y_lo = -1.0;
        y_hi = 1.0;
    }
    let pad = if y_hi - y_lo > 1e-9 { 0.05 * (y_hi - y_lo) } else { 1.0 };
    let frame = Frame { u_lo: u0_range.0, u_hi: u0_range.1, y_lo: y_lo - pad, y_hi: y_hi + pad };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);

    let (x0, x1) = (LEFT, WIDTH - RIGHT);
    let (y0, y1) = (TOP, HEIGHT - BOTTOM);
    let _ = writeln!(s, r##"<g stroke="#999999" stroke-width="1" fill="none">"##);
    let _ = writeln!(s, r#"<rect x="{x0}" y="{y0}" width="{}" height="{}"/>"#, x1 - x0, y1 - y0);
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, r##"<g fill="#333333">"##);
    for u in ticks(frame.u_lo, frame.u_hi) {
        let x = frame.px(u);
        let _ = writeln!(s, r##"<line x1="{x:.2}" y1="{y1}" x2="{x:.2}" y2="{}" stroke="#999999"/>"##, y1 + 5.0);
        let _ = writeln!(s, r#"<text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"#, y1 + 18.0, tick_label(u));
    }
    for v in ticks(frame.y_lo, frame.y_hi) {
        let y = frame.py(v);
        let _ = writeln!(s, r##"<line x1="{}" y1="{y:.2}" x2="{x0}" y2="{y:.2}" stroke="#999999"/>"##, x0 - 5.0);
        let _ = writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, x0 - 8.0, y + 4.0, tick_label(v));
    }
    let _ = writeln!(s, r#"<text x="{:.2}" y="{}" text-anchor="middle">u0</text>"#, 0.5 * (x0 + x1), HEIGHT - 12.0);
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        0.5 * (y0 + y1),
        0.5 * (y0 + y1),
        escape(y_label)
    );
    let _ = writeln!(s, "</g>");

    for (bi, (b, ys)) in diagram.branches.iter().zip(&projected).enumerate() {
        let color = PALETTE[bi % PALETTE.len()];
        let _ = writeln!(s, r#"<g class="branch" data-label="{}" stroke="{color}" fill="none">"#, escape(&b.label));
        let mut start = 0;
        while start + 1 < b.points.len() {
            let stable = b.points[start + 1].stable;
            let mut end = start + 1;
            while end + 1 < b.points.len() && b.points[end + 1].stable == stable {
                end += 1;
            }
            let pts: Vec<String> = (start..=end)
                .map(|i| format!("{:.2},{:.2}", frame.px(b.points[i].u0), frame.py(ys[i])))
                .collect();
            let width = if stable { 2.0 } else { 0.75 };
            let _ = writeln!(s, r#"<polyline stroke-width="{width}" points="{}"/>"#, pts.join(" "));
            start = end;
        }
        let _ = writeln!(s, "</g>");
    }

    for (b, ys) in diagram.branches.iter().zip(&projected) {
        for ev in &b.events {
            let (fill, stroke) = marker(ev);
            let _ = writeln!(
                s,
                r#"<circle class="event" data-kind="{}" cx="{:.2}" cy="{:.2}" r="4.5" fill="{fill}" stroke="{stroke}" stroke-width="1.5"/>"#,
                ev.label(),
                frame.px(ev.u0),
                frame.py(ys[ev.point_index])
            );
        }
    }
    let _ = writeln!(s, "</svg>");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tick_spacing() {
        assert_eq!(ticks(0.0, 1.5), vec![0.0, 0.2, 0.4, 0.6000000000000001, 0.8, 1.0, 1.2000000000000002, 1.4000000000000001]);
        assert_eq!(tick_label(0.6000000000000001), "0.6");
        assert_eq!(tick_label(-0.0), "0");
        assert_eq!(nice_step(12.0), 2.0);
    }
}
