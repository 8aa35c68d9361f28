//! Box plots written as plain SVG text.

use std::fmt::Write;

/// Quartiles and extremes of one box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxStats {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

const WIDTH: f64 = 360.0;
const HEIGHT: f64 = 300.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 260.0;
const LEFT: f64 = 70.0;

/// Side-by-side boxes with whiskers to the extremes and an optional
/// dashed reference line.
pub fn box_plot(title: &str, boxes: &[(&str, BoxStats)], reference: Option<f64>) -> String {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (_, b) in boxes {
        lo = lo.min(b.min);
        hi = hi.max(b.max);
    }
    if let Some(r) = reference {
        lo = lo.min(r);
        hi = hi.max(r);
    }
    if !(lo.is_finite() && hi.is_finite()) {
        lo = 0.0;
        hi = 1.0;
    }
    if hi - lo < 1e-12 {
        lo -= 0.5;
        hi += 0.5;
    }
    let pad = 0.05 * (hi - lo);
    let (lo, hi) = (lo - pad, hi + pad);
    let y = |v: f64| BOTTOM - (v - lo) / (hi - lo) * (BOTTOM - TOP);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle">{}</text>"#, WIDTH / 2.0, escape(title));
    let _ = writeln!(s, r#"<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{BOTTOM}" stroke="black"/>"#);
    for k in 0..=4 {
        let v = lo + (hi - lo) * k as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 6.0,
            y(v) + 4.0,
            format_tick(v)
        );
    }
    if let Some(r) = reference {
        let _ = writeln!(
            s,
            r#"<line x1="{LEFT}" y1="{0:.2}" x2="{1}" y2="{0:.2}" stroke="gray" stroke-dasharray="4 3"/>"#,
            y(r),
            WIDTH - 10.0
        );
    }
    let slot = (WIDTH - LEFT - 10.0) / boxes.len().max(1) as f64;
    for (i, (name, b)) in boxes.iter().enumerate() {
        let cx = LEFT + slot * (i as f64 + 0.5);
        let half = slot * 0.25;
        if b.min.is_finite() {
            let _ = writeln!(
                s,
                r#"<line x1="{cx:.2}" y1="{:.2}" x2="{cx:.2}" y2="{:.2}" stroke="black"/>"#,
                y(b.max),
                y(b.min)
            );
            for v in [b.min, b.max] {
                let _ = writeln!(
                    s,
                    r#"<line x1="{0:.2}" y1="{1:.2}" x2="{2:.2}" y2="{1:.2}" stroke="black"/>"#,
                    cx - half / 2.0,
                    y(v),
                    cx + half / 2.0
                );
            }
            let _ = writeln!(
                s,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="lightsteelblue" stroke="black"/>"#,
                cx - half,
                y(b.q3),
                2.0 * half,
                (y(b.q1) - y(b.q3)).max(0.5)
            );
            let _ = writeln!(
                s,
                r#"<line x1="{:.2}" y1="{2:.2}" x2="{:.2}" y2="{2:.2}" stroke="firebrick" stroke-width="2"/>"#,
                cx - half,
                cx + half,
                y(b.median)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{cx:.2}" y="{}" text-anchor="middle">{}</text>"#,
            BOTTOM + 20.0,
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn format_tick(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-2 || v.abs() >= 1e3) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
