//! Minimal self-contained SVG line plots with the plotted data embedded.

use std::fmt::Write;

pub struct Series<'a> {
    pub label: &'a str,
    pub color: &'a str,
    /// Seconds.
    pub t: &'a [f64],
    pub values: &'a [f64],
}

const W: f64 = 800.0;
const H: f64 = 360.0;
const MARGIN: f64 = 50.0;

fn bounds<'a>(it: impl Iterator<Item = &'a f64>) -> (f64, f64) {
    let (lo, hi) = it.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-9 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

/// Scatter-line plot of one quantity over time; every series is also written
/// as CSV inside a `<metadata>` element.
pub fn bearing_plot_svg(title: &str, series: &[Series]) -> String {
    let (t0, t1) = bounds(series.iter().flat_map(|s| s.t.iter()));
    let (v0, v1) = bounds(series.iter().flat_map(|s| s.values.iter()));
    let px = |t: f64| MARGIN + (t - t0) / (t1 - t0) * (W - 2.0 * MARGIN);
    let py = |v: f64| H - MARGIN - (v - v0) / (v1 - v0) * (H - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    s.push_str("<metadata>\n");
    for se in series {
        let _ = writeln!(s, "# {}\nt,value", se.label);
        for (t, v) in se.t.iter().zip(se.values) {
            let _ = writeln!(s, "{t},{v}");
        }
    }
    s.push_str("</metadata>\n");
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * MARGIN,
        H - 2.0 * MARGIN
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="30" text-anchor="middle">{title}</text>"#,
        W / 2.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">time [s]</text>"#,
        W / 2.0,
        H - 12.0
    );
    for (v, y) in [(v0, H - MARGIN), (v1, MARGIN)] {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end">{v:.1}</text>"#,
            MARGIN - 4.0,
            y + 4.0
        );
    }
    for (t, x) in [(t0, MARGIN), (t1, W - MARGIN)] {
        let _ = writeln!(
            s,
            r#"<text x="{x}" y="{}" text-anchor="middle">{t:.1}</text>"#,
            H - MARGIN + 16.0
        );
    }
    for (k, se) in series.iter().enumerate() {
        let _ = write!(s, r#"<g fill="{}">"#, se.color);
        for (t, v) in se.t.iter().zip(se.values) {
            let _ = write!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="1.5"/>"#, px(*t), py(*v));
        }
        s.push_str("</g>\n");
        let ly = MARGIN + 16.0 + 16.0 * k as f64;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{ly}" fill="{}">{}</text>"#,
            W - MARGIN - 60.0,
            se.color,
            se.label
        );
    }
    s.push_str("</svg>\n");
    s
}
