//! Reference elements and quadrature rules.

use crate::mesh::Point;

const G3: f64 = 0.774_596_669_241_483_4; // sqrt(3/5)

/// 3×3 Gauss–Legendre rule on `[-1, 1]²` as `(xi, eta, weight)`.
pub fn quad_gauss_points() -> [(f64, f64, f64); 9] {
    let p = [(-G3, 5.0 / 9.0), (0.0, 8.0 / 9.0), (G3, 5.0 / 9.0)];
    let mut out = [(0.0, 0.0, 0.0); 9];
    for (j, &(eta, wj)) in p.iter().enumerate() {
        for (i, &(xi, wi)) in p.iter().enumerate() {
            out[3 * j + i] = (xi, eta, wi * wj);
        }
    }
    out
}

/// Six-point degree-4 rule on the reference triangle as `(l1, l2, l3, weight)`,
/// barycentric coordinates, weights summing to one.
pub fn tri_degree4_points() -> [([f64; 3], f64); 6] {
    const A: f64 = 0.108_103_018_168_070;
    const B: f64 = 0.445_948_490_915_965;
    const WA: f64 = 0.223_381_589_678_011;
    const C: f64 = 0.816_847_572_980_459;
    const D: f64 = 0.091_576_213_509_771;
    const WC: f64 = 0.109_951_743_655_322;
    [
        ([A, B, B], WA),
        ([B, A, B], WA),
        ([B, B, A], WA),
        ([C, D, D], WC),
        ([D, C, D], WC),
        ([D, D, C], WC),
    ]
}

/// Bilinear shape functions and their reference derivatives at `(xi, eta)`.
pub fn quad4_shape(xi: f64, eta: f64) -> ([f64; 4], [[f64; 2]; 4]) {
    let n = [
        0.25 * (1.0 - xi) * (1.0 - eta),
        0.25 * (1.0 + xi) * (1.0 - eta),
        0.25 * (1.0 + xi) * (1.0 + eta),
        0.25 * (1.0 - xi) * (1.0 + eta),
    ];
    let dn = [
        [-0.25 * (1.0 - eta), -0.25 * (1.0 - xi)],
        [0.25 * (1.0 - eta), -0.25 * (1.0 + xi)],
        [0.25 * (1.0 + eta), 0.25 * (1.0 + xi)],
        [-0.25 * (1.0 + eta), 0.25 * (1.0 - xi)],
    ];
    (n, dn)
}

fn quad4_jacobian(coords: &[Point], dn: &[[f64; 2]; 4]) -> [[f64; 2]; 2] {
    let mut j = [[0.0; 2]; 2];
    for (p, d) in coords.iter().zip(dn) {
        for r in 0..2 {
            for c in 0..2 {
                j[r][c] += p[r] * d[c];
            }
        }
    }
    j
}

pub fn quad4_jacobian_det(coords: &[Point], xi: f64, eta: f64) -> f64 {
    let (_, dn) = quad4_shape(xi, eta);
    let j = quad4_jacobian(coords, &dn);
    j[0][0] * j[1][1] - j[0][1] * j[1][0]
}

/// Data of one physical quadrature point. Unused shape slots are zero.
#[derive(Debug, Clone, Copy)]
pub struct QuadPoint {
    pub x: Point,
    /// Quadrature weight times Jacobian determinant.
    pub wdet: f64,
    pub n: [f64; 4],
    pub grad: [[f64; 2]; 4],
}

/// Physical quadrature data at reference point `(xi, eta)` with weight `w`.
pub fn quad4_point(coords: &[Point], xi: f64, eta: f64, w: f64) -> QuadPoint {
    let (n, dn) = quad4_shape(xi, eta);
    let j = quad4_jacobian(coords, &dn);
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    let inv = [[j[1][1] / det, -j[0][1] / det], [-j[1][0] / det, j[0][0] / det]];
    let mut grad = [[0.0; 2]; 4];
    for a in 0..4 {
        // grad_x N = J^{-T} grad_xi N
        grad[a][0] = inv[0][0] * dn[a][0] + inv[1][0] * dn[a][1];
        grad[a][1] = inv[0][1] * dn[a][0] + inv[1][1] * dn[a][1];
    }
    let mut x = [0.0; 2];
    for (p, &na) in coords.iter().zip(&n) {
        x[0] += na * p[0];
        x[1] += na * p[1];
    }
    QuadPoint {
        x,
        wdet: w * det,
        n,
        grad,
    }
}

pub fn quad4_points(coords: &[Point]) -> Vec<QuadPoint> {
    quad_gauss_points()
        .iter()
        .map(|&(xi, eta, w)| quad4_point(coords, xi, eta, w))
        .collect()
}

pub fn tri3_gradients(coords: &[Point]) -> (f64, [[f64; 2]; 4]) {
    let [a, b, c] = [coords[0], coords[1], coords[2]];
    let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
    let mut grad = [[0.0; 2]; 4];
    grad[0] = [(b[1] - c[1]) / det, (c[0] - b[0]) / det];
    grad[1] = [(c[1] - a[1]) / det, (a[0] - c[0]) / det];
    grad[2] = [(a[1] - b[1]) / det, (b[0] - a[0]) / det];
    (0.5 * det, grad)
}

pub fn tri3_points(coords: &[Point]) -> Vec<QuadPoint> {
    let (area, grad) = tri3_gradients(coords);
    tri_degree4_points()
        .iter()
        .map(|&(l, w)| {
            let x = [
                l[0] * coords[0][0] + l[1] * coords[1][0] + l[2] * coords[2][0],
                l[0] * coords[0][1] + l[1] * coords[1][1] + l[2] * coords[2][1],
            ];
            QuadPoint {
                x,
                wdet: w * area,
                n: [l[0], l[1], l[2], 0.0],
                grad,
            }
        })
        .collect()
}

/// Two-point Gauss rule on `[0, 1]` as `(t, weight)`.
pub fn edge_gauss_points() -> [(f64, f64); 2] {
    let d = 0.5 / 3f64.sqrt();
    [(0.5 - d, 0.5), (0.5 + d, 0.5)]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_rule_integrates_quartics() {
        // ∫_T l1^a l2^b l3^c = 2|T| a! b! c! / (a+b+c+2)!, reference |T| = 1/2
        let integrate = |f: &dyn Fn(&[f64; 3]) -> f64| -> f64 {
            tri_degree4_points().iter().map(|(l, w)| w * 0.5 * f(l)).sum()
        };
        assert!((integrate(&|l| l[0].powi(4)) - 24.0 / 720.0).abs() < 1e-12);
        assert!((integrate(&|l| l[0] * l[0] * l[1] * l[2]) - 2.0 / 720.0).abs() < 1e-12);
        assert!((integrate(&|l| l[1] * l[1] * l[2] * l[2]) - 4.0 / 720.0).abs() < 1e-12);
    }

    #[test]
    fn quad_rule_integrates_degree_five() {
        let q: f64 = quad_gauss_points()
            .iter()
            .map(|&(x, y, w)| w * x.powi(4) * y.powi(4))
            .sum();
        assert!((q - 4.0 / 25.0).abs() < 1e-12);
    }

    #[test]
    fn shape_functions_partition_unity() {
        let coords = [[0.0, 0.0], [2.0, 0.1], [2.2, 1.0], [-0.1, 1.2]];
        for qp in quad4_points(&coords) {
            let s: f64 = qp.n.iter().sum();
            let g: [f64; 2] = qp.grad.iter().fold([0.0, 0.0], |a, g| [a[0] + g[0], a[1] + g[1]]);
            assert!((s - 1.0).abs() < 1e-14);
            assert!(g[0].abs() < 1e-13 && g[1].abs() < 1e-13);
        }
    }
}
