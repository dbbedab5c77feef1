//! Region map in the `(γ, β)` plane: admissible cone, Felli-Schneider
//! hyperbola, σ curve and shading by region.

use std::fmt::Write;

use cknwfd::spectral::{beta_fs, sigma};

use crate::sweep::{Row, SweepSpec};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 40.0;
const SAMPLES: usize = 400;

struct Frame {
    gamma: (f64, f64),
    beta: (f64, f64),
}

impl Frame {
    fn x(&self, g: f64) -> f64 {
        MARGIN + (g - self.gamma.0) / (self.gamma.1 - self.gamma.0) * (WIDTH - 2.0 * MARGIN)
    }
    fn y(&self, b: f64) -> f64 {
        HEIGHT - MARGIN - (b - self.beta.0) / (self.beta.1 - self.beta.0) * (HEIGHT - 2.0 * MARGIN)
    }
    fn inside(&self, g: f64, b: f64) -> bool {
        g >= self.gamma.0 && g <= self.gamma.1 && b >= self.beta.0 && b <= self.beta.1
    }
}

fn shade(region: Option<&str>) -> &'static str {
    match region {
        Some("1") => "#4d4d4d",
        Some("2") => "#8c8c8c",
        Some("3") => "#c8c8c8",
        Some(_) => "#202020",
        None => "none",
    }
}

/// Sampled curve split into the pieces that stay inside the frame.
fn polylines(frame: &Frame, curve: impl Fn(f64) -> Option<f64>) -> Vec<Vec<(f64, f64)>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    for k in 0..=SAMPLES {
        let g = frame.gamma.0 + (frame.gamma.1 - frame.gamma.0) * k as f64 / SAMPLES as f64;
        match curve(g) {
            Some(b) if b.is_finite() && frame.inside(g, b) => cur.push((frame.x(g), frame.y(b))),
            _ => {
                if cur.len() > 1 {
                    out.push(std::mem::take(&mut cur));
                }
                cur.clear();
            }
        }
    }
    if cur.len() > 1 {
        out.push(cur);
    }
    out
}

fn path(points: &[(f64, f64)]) -> String {
    let mut s = String::new();
    for (k, (x, y)) in points.iter().enumerate() {
        let _ = write!(s, "{}{x:.2},{y:.2}", if k == 0 { "M" } else { " L" });
    }
    s
}

pub fn render(spec: &SweepSpec, rows: &[Row]) -> String {
    let frame = Frame { gamma: spec.gamma, beta: spec.beta };
    let n = spec.resolution;
    let cw = (WIDTH - 2.0 * MARGIN) / n as f64;
    let ch = (HEIGHT - 2.0 * MARGIN) / n as f64;
    let df = spec.d as f64;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(s, r#"<g id="regions" stroke="none">"#);
    for (k, r) in rows.iter().enumerate() {
        if !r.admissible {
            continue;
        }
        let (i, j) = (k / n, k % n);
        let x = frame.x(spec.gamma_at(i)) - 0.5 * cw;
        let y = frame.y(spec.beta_at(j)) - 0.5 * ch;
        let _ = writeln!(
            s,
            r#"<rect x="{x:.2}" y="{y:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
            cw + 0.05,
            ch + 0.05,
            shade(r.region)
        );
    }
    let _ = writeln!(s, "</g>");

    let lower = polylines(&frame, |g| (g < df).then_some(g - 2.0));
    let upper = polylines(&frame, |g| (g < df).then_some((df - 2.0) / df * g));
    let _ = writeln!(s, r#"<g id="cone" fill="none" stroke="black" stroke-width="1.2">"#);
    for p in lower.iter().chain(&upper) {
        let _ = writeln!(s, r#"<path d="{}"/>"#, path(p));
    }
    let _ = writeln!(s, "</g>");

    let fs = polylines(&frame, |g| if g < 0.0 { beta_fs(g, spec.d).ok() } else { None });
    let _ = writeln!(s, r#"<g id="felli-schneider" fill="none" stroke="crimson" stroke-width="1.5">"#);
    for p in &fs {
        let _ = writeln!(s, r#"<path d="{}"/>"#, path(p));
    }
    let _ = writeln!(s, "</g>");

    if let Some(p) = spec.p {
        let sg = polylines(&frame, |g| (g < df).then(|| sigma(g, p, spec.d)));
        let _ = writeln!(s, r#"<g id="sigma" fill="none" stroke="navy" stroke-width="1.2" stroke-dasharray="3,3">"#);
        for q in &sg {
            let _ = writeln!(s, r#"<path d="{}"/>"#, path(q));
        }
        let _ = writeln!(s, "</g>");
    }

    let _ = writeln!(s, r#"<g id="axes" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">gamma</text>"#, WIDTH / 2.0, HEIGHT - 10.0);
    let _ = writeln!(s, r#"<text x="12" y="{}" text-anchor="middle">beta</text>"#, HEIGHT / 2.0);
    for (v, anchor, x, y) in [
        (spec.gamma.0, "start", MARGIN, HEIGHT - MARGIN + 14.0),
        (spec.gamma.1, "end", WIDTH - MARGIN, HEIGHT - MARGIN + 14.0),
    ] {
        let _ = writeln!(s, r#"<text x="{x}" y="{y}" text-anchor="{anchor}">{v}</text>"#);
    }
    for (v, y) in [(spec.beta.0, HEIGHT - MARGIN), (spec.beta.1, MARGIN + 10.0)] {
        let _ = writeln!(s, r#"<text x="{}" y="{y}" text-anchor="end">{v}</text>"#, MARGIN - 4.0);
    }
    let _ = writeln!(s, "</g>");
    s.push_str("</svg>\n");
    s
}
