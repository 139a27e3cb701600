//! Minimal SVG scatter plots with overlay curves.

use std::fmt::Write;

use num_complex::Complex64;

const SIZE: f64 = 600.0;

/// Scatter of `points` in the square `[-extent, extent]^2`, with each
/// overlay drawn as an open polyline.
pub fn scatter(points: &[Complex64], overlays: &[Vec<Complex64>], extent: f64, title: &str) -> String {
    let map = |z: Complex64| ((z.re + extent) / (2.0 * extent) * SIZE, (extent - z.im) / (2.0 * extent) * SIZE);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{0}" height="{0}" viewBox="0 0 {0} {0}">"#,
        SIZE
    );
    let _ = writeln!(s, r#"<title>{}</title>"#, escape(title));
    let _ = writeln!(s, r##"<rect width="100%" height="100%" fill="#ffffff"/>"##);
    let (cx, cy) = map(Complex64::new(0.0, 0.0));
    let _ = writeln!(s, r##"<line x1="0" y1="{cy:.2}" x2="{SIZE}" y2="{cy:.2}" stroke="#cccccc"/>"##);
    let _ = writeln!(s, r##"<line x1="{cx:.2}" y1="0" x2="{cx:.2}" y2="{SIZE}" stroke="#cccccc"/>"##);
    for path in overlays {
        if path.len() < 2 {
            continue;
        }
        let pts: Vec<String> = path
            .iter()
            .map(|&z| {
                let (x, y) = map(z);
                format!("{:.2},{:.2}", x, y)
            })
            .collect();
        let _ = writeln!(s, r##"<polyline points="{}" fill="none" stroke="#d62728" stroke-width="1.5"/>"##, pts.join(" "));
    }
    for &z in points {
        let (x, y) = map(z);
        if (0.0..=SIZE).contains(&x) && (0.0..=SIZE).contains(&y) {
            let _ = writeln!(s, r##"<circle cx="{:.2}" cy="{:.2}" r="1.5" fill="#1f77b4"/>"##, x, y);
        }
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Closed polyline of an ellipse with semi-axes `a` (along `rot`) and `b`.
pub fn ellipse_path(a: f64, b: f64, rot: Complex64) -> Vec<Complex64> {
    (0..=256)
        .map(|k| {
            let th = std::f64::consts::TAU * k as f64 / 256.0;
            Complex64::new(a * th.cos(), b * th.sin()) * rot
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scatter_is_well_formed() {
        let s = scatter(&[Complex64::new(0.5, 0.5), Complex64::new(9.0, 0.0)], &[ellipse_path(1.0, 0.5, Complex64::new(1.0, 0.0))], 2.0, "a<b");
        assert!(s.starts_with("<svg") && s.ends_with("</svg>\n"));
        assert_eq!(s.matches("<circle").count(), 1);
        assert_eq!(s.matches("<polyline").count(), 1);
        assert!(s.contains("a&lt;b"));
    }
}
