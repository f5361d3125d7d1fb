use std::fmt::Write;

use super::RescaledBoundary;

/// SVG with one stroke-only path per trace, the unit circle, and a small
/// circle at each marker `φ_T(1)`. The imaginary axis points up.
pub fn boundary_svg(traces: &[RescaledBoundary]) -> String {
    let (mut x0, mut x1, mut y0, mut y1) = (-1.0f64, 1.0f64, -1.0f64, 1.0f64);
    for z in traces.iter().flat_map(|t| &t.polyline) {
        x0 = x0.min(z.re);
        x1 = x1.max(z.re);
        y0 = y0.min(0.0 - z.im);
        y1 = y1.max(0.0 - z.im);
    }
    let pad = 0.05 * (x1 - x0).max(y1 - y0);
    let stroke = 0.002 * (x1 - x0).max(y1 - y0);
    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{:.6} {:.6} {:.6} {:.6}">"#,
        x0 - pad,
        y0 - pad,
        x1 - x0 + 2.0 * pad,
        y1 - y0 + 2.0 * pad
    )
    .unwrap();
    writeln!(
        svg,
        r#"<circle cx="0.000000" cy="0.000000" r="1.000000" fill="none" stroke="gray" stroke-width="{stroke:.6}"/>"#
    )
    .unwrap();
    for trace in traces {
        let mut d = String::new();
        for (i, z) in trace.polyline.iter().enumerate() {
            let cmd = if i == 0 { 'M' } else { 'L' };
            write!(d, "{cmd}{:.6},{:.6} ", z.re, 0.0 - z.im).unwrap();
        }
        writeln!(svg, r#"<path d="{}" fill="none" stroke="black" stroke-width="{stroke:.6}"/>"#, d.trim_end()).unwrap();
        writeln!(
            svg,
            r#"<circle cx="{:.6}" cy="{:.6}" r="{:.6}" fill="none" stroke="red" stroke-width="{stroke:.6}"/>"#,
            trace.marker.re,
            0.0 - trace.marker.im,
            4.0 * stroke
        )
        .unwrap();
    }
    svg.push_str("</svg>\n");
    svg
}

/// `T,re,im` rows for every polyline vertex.
pub fn boundary_csv(traces: &[RescaledBoundary]) -> String {
    let mut out = String::from("T,re,im\n");
    for trace in traces {
        for z in &trace.polyline {
            writeln!(out, "{},{:.12e},{:.12e}", trace.t_scale, z.re, z.im).unwrap();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Complex;

    #[test]
    fn svg_is_stroke_only() {
        let trace = RescaledBoundary {
            t_scale: 1.0,
            scale: 1.0,
            marker: Complex::new(1.0, 0.0),
            polyline: vec![Complex::new(0.0, 0.0), Complex::new(1.0, 1.0), Complex::new(0.0, 0.0)],
            offset: 0.05,
        };
        let svg = boundary_svg(std::slice::from_ref(&trace));
        assert!(svg.contains("M0.000000,0.000000 L1.000000,-1.000000 L0.000000,0.000000"));
        assert!(!svg.contains("fill=\"black\""));
        let csv = boundary_csv(&[trace]);
        assert_eq!(csv.lines().count(), 4);
    }
}
