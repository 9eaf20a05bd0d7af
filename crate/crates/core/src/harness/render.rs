//! SVG heatmaps and CSV dumps of nodal fields.

use std::fmt::Write;

use nalgebra::DVector;

use crate::error::{check_len, check_finite, Result};
use crate::mesh::Mesh;

const ANCHORS: [[f64; 3]; 9] = [
    [68.0, 1.0, 84.0],
    [71.0, 44.0, 122.0],
    [59.0, 81.0, 139.0],
    [44.0, 113.0, 142.0],
    [33.0, 144.0, 141.0],
    [39.0, 173.0, 129.0],
    [92.0, 200.0, 99.0],
    [170.0, 220.0, 50.0],
    [253.0, 231.0, 37.0],
];

/// Number of colors in the ramp.
pub const RAMP_STEPS: usize = 256;
const SIZE: f64 = 512.0;
const MARGIN: f64 = 16.0;

/// Color `k` of the 256-step ramp.
pub fn ramp_color(k: usize) -> [u8; 3] {
    let t = k.min(RAMP_STEPS - 1) as f64 / (RAMP_STEPS - 1) as f64 * (ANCHORS.len() - 1) as f64;
    let i = (t.floor() as usize).min(ANCHORS.len() - 2);
    let s = t - i as f64;
    let (a, b) = (ANCHORS[i], ANCHORS[i + 1]);
    [0, 1, 2].map(|c| (a[c] + s * (b[c] - a[c])).round() as u8)
}

/// Ramp index of `value` within `[lo, hi]`; a degenerate range maps to 0.
pub fn ramp_index(value: f64, lo: f64, hi: f64) -> usize {
    if hi <= lo {
        return 0;
    }
    let t = ((value - lo) / (hi - lo)).clamp(0.0, 1.0);
    ((t * RAMP_STEPS as f64) as usize).min(RAMP_STEPS - 1)
}

/// Smallest and largest nodal value.
pub fn extrema(field: &DVector<f64>) -> (f64, f64) {
    field
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

/// Heatmap with each element filled by the color of its mean nodal value,
/// annotated with the field extrema.
pub fn render_svg(mesh: &Mesh, field: &DVector<f64>, title: &str) -> Result<String> {
    check_len(field.len(), mesh.node_count(), "rendered field")?;
    check_finite(field.as_slice(), "rendered field")?;
    let (lo, hi) = extrema(field);
    let px = |p: [f64; 2]| (MARGIN + p[0] * SIZE, MARGIN + (1.0 - p[1]) * SIZE);
    let width = SIZE + 2.0 * MARGIN;
    let height = SIZE + 2.0 * MARGIN + 40.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = writeln!(s, "<title>{}</title>", escape(title));
    for el in mesh.elements() {
        let mean = el.iter().map(|&n| field[n]).sum::<f64>() / el.len() as f64;
        let [r, g, b] = ramp_color(ramp_index(mean, lo, hi));
        let points: Vec<String> = el
            .iter()
            .map(|&n| {
                let (x, y) = px(mesh.node(n));
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let _ = writeln!(
            s,
            r##"<polygon points="{}" fill="#{r:02x}{g:02x}{b:02x}" stroke="none"/>"##,
            points.join(" ")
        );
    }
    let y = SIZE + 2.0 * MARGIN + 20.0;
    let _ = writeln!(s, r#"<text x="{MARGIN}" y="{y}" font-size="14" class="min">min = {lo:e}</text>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{y}" font-size="14" class="max">max = {hi:e}</text>"#,
        MARGIN + SIZE / 2.0
    );
    s.push_str("</svg>\n");
    Ok(s)
}

/// `x,y,value` per node.
pub fn nodal_csv(mesh: &Mesh, field: &DVector<f64>) -> Result<String> {
    check_len(field.len(), mesh.node_count(), "field dump")?;
    let mut s = String::from("x,y,value\n");
    for (p, v) in mesh.nodes().iter().zip(field.iter()) {
        let _ = writeln!(s, "{:e},{:e},{:e}", p[0], p[1], v);
    }
    Ok(s)
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ramp_endpoints() {
        assert_eq!(ramp_color(0), [68, 1, 84]);
        assert_eq!(ramp_color(255), [253, 231, 37]);
        assert_eq!(ramp_index(1.0, 0.0, 1.0), 255);
        assert_eq!(ramp_index(0.0, 0.0, 1.0), 0);
        assert_eq!(ramp_index(3.0, 3.0, 3.0), 0);
    }
}
