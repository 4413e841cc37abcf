//! Minimal SVG line and scatter plots.

use std::fmt::Write;

use super::metrics::{ParetoPoint, PerformanceProfile};

const W: f64 = 720.0;
const H: f64 = 480.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 220.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn px(u: f64) -> f64 {
    LEFT + u * (W - LEFT - RIGHT)
}

fn py(v: f64) -> f64 {
    H - BOTTOM - v * (H - TOP - BOTTOM)
}

/// Frame, ticks on [0, 1] for both axes, labels and title.
fn frame(out: &mut String, title: &str, xlabel: &str, ylabel: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="18" text-anchor="middle" font-size="14">{}</text>"#,
        px(0.5),
        escape(title)
    );
    let _ = writeln!(
        out,
        r#"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        px(0.0),
        py(1.0),
        px(1.0) - px(0.0),
        py(0.0) - py(1.0)
    );
    for k in 0..=5 {
        let t = k as f64 / 5.0;
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{t:.1}</text>"#,
            px(t),
            py(0.0) + 16.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{t:.1}</text>"#,
            px(0.0) - 6.0,
            py(t) + 4.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        px(0.5),
        H - 12.0,
        escape(xlabel)
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        py(0.5),
        py(0.5),
        escape(ylabel)
    );
}

/// Step curves of the profiles with an AUC legend in profile order.
pub fn profile_plot(profiles: &[PerformanceProfile], title: &str) -> String {
    let mut out = String::new();
    frame(&mut out, title, "τ", "p(τ)");
    for (i, p) in profiles.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut pts = format!("{:.2},{:.2}", px(0.0), py(0.0));
        for (t, v) in p.tau.iter().zip(&p.p) {
            let _ = write!(pts, " {:.2},{:.2}", px(*t), py(*v));
        }
        let _ = writeln!(
            out,
            r#"<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>"#
        );
        let y = TOP + 14.0 * i as f64 + 10.0;
        let _ = writeln!(
            out,
            r#"<line x1="{:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="{color}" stroke-width="2"/>"#,
            W - RIGHT + 12.0,
            W - RIGHT + 30.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}">{} ({:.3})</text>"#,
            W - RIGHT + 34.0,
            y + 4.0,
            escape(&p.method),
            p.auc
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Time AUC against RRMSE AUC; front points are filled.
pub fn pareto_plot(points: &[ParetoPoint]) -> String {
    let mut out = String::new();
    frame(&mut out, "Time vs accuracy", "AUC (fit time)", "AUC (RRMSE)");
    for p in points {
        let fill = if p.is_front { "black" } else { "white" };
        let (x, y) = (px(p.auc_time), py(p.auc_rrmse));
        let _ = writeln!(
            out,
            r#"<circle cx="{x:.2}" cy="{y:.2}" r="4" fill="{fill}" stroke="black"/>"#
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-size="10">{}</text>"#,
            x + 6.0,
            y - 6.0,
            escape(&p.method)
        );
    }
    out.push_str("</svg>\n");
    out
}
