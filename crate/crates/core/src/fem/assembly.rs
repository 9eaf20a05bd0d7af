//! Assembly of residuals, Jacobians and auxiliary operators.
//!
//! Nonlinear coefficients are evaluated at quadrature points from the
//! interpolated nodal values. The residual at a Dirichlet dof reports the
//! constraint violation `u_i - 0`.

use nalgebra::DVector;

use super::element::{self, edge_gauss_points, QuadPoint};
use super::problem::ProblemDef;
use super::space::FunctionSpace;
use super::sparse::CsrMatrix;
use crate::error::{check_finite, check_len, Error, Result};
use crate::mesh::{BoundaryTag, ElementKind, Facet, Mesh, Point};

#[derive(Debug, Clone, Copy)]
pub enum Coefficient<'a> {
    Constant(f64),
    Nodal(&'a DVector<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    /// Euclidean norm of the coefficient vector.
    L2Coeff,
    L2,
    H1,
}

#[inline]
fn interp(qp: &QuadPoint, nodes: &[usize], v: &DVector<f64>) -> f64 {
    nodes.iter().zip(&qp.n).map(|(&i, n)| n * v[i]).sum()
}

#[inline]
fn interp_grad(qp: &QuadPoint, nodes: &[usize], v: &DVector<f64>) -> [f64; 2] {
    let mut g = [0.0; 2];
    for (&i, d) in nodes.iter().zip(&qp.grad) {
        g[0] += d[0] * v[i];
        g[1] += d[1] * v[i];
    }
    g
}

fn check_field(space: &FunctionSpace, v: &DVector<f64>, context: &'static str) -> Result<()> {
    check_len(v.len(), space.dim(), context)?;
    check_finite(v.as_slice(), context)
}

/// Rejects diffusivities below the problem's lower bound.
pub fn check_admissible(problem: &ProblemDef, m: &DVector<f64>) -> Result<()> {
    if let Some(lw) = problem.m_lower {
        let min = m.min();
        if min < lw * (1.0 - 1e-12) {
            return Err(Error::invalid(format!(
                "parameter field minimum {min} is below the admissible bound {lw}"
            )));
        }
    }
    Ok(())
}

/// Outward unit normal of a facet (the owning element lies to its left).
pub fn facet_normal(mesh: &Mesh, f: &Facet) -> Point {
    let a = mesh.node(f.nodes[0]);
    let b = mesh.node(f.nodes[1]);
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len = dx.hypot(dy);
    [dy / len, -dx / len]
}

/// Visit the two-point Gauss rule on every facet tagged with one of `tags`,
/// passing `(facet, x, weight·length, [N_a, N_b])`.
fn for_each_facet_point(
    mesh: &Mesh,
    tags: &[BoundaryTag],
    mut visit: impl FnMut(&Facet, Point, f64, [f64; 2]),
) {
    for f in mesh.facets().iter().filter(|f| tags.contains(&f.tag)) {
        let a = mesh.node(f.nodes[0]);
        let b = mesh.node(f.nodes[1]);
        let len = mesh.facet_length(f);
        for (t, w) in edge_gauss_points() {
            let x = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
            visit(f, x, w * len, [1.0 - t, t]);
        }
    }
}

/// `l(ψ_i) = ∫ f ψ_i dx + ∫_Γ g ψ_i dS`, before constraints.
pub fn assemble_load(problem: &ProblemDef, space: &FunctionSpace) -> DVector<f64> {
    let mesh = space.mesh();
    let mut load = space.zeros();
    if !problem.source.is_zero() {
        for (e, nodes) in mesh.elements().enumerate() {
            for qp in space.element_qp(e) {
                let f = problem.source.eval(qp.x) * qp.wdet;
                for (&i, n) in nodes.iter().zip(&qp.n) {
                    load[i] += f * n;
                }
            }
        }
    }
    if let Some(flux) = &problem.flux {
        for_each_facet_point(mesh, &flux.tags, |facet, x, w, n| {
            let g = flux.density.eval(x, facet_normal(mesh, facet)) * w;
            load[facet.nodes[0]] += g * n[0];
            load[facet.nodes[1]] += g * n[1];
        });
    }
    load
}

/// `⟨ψ_i, R(m, u)⟩` for free dofs, `u_i` at Dirichlet dofs.
pub fn assemble_residual(
    problem: &ProblemDef,
    space: &FunctionSpace,
    m: &DVector<f64>,
    u: &DVector<f64>,
) -> Result<DVector<f64>> {
    check_field(space, m, "parameter field")?;
    check_field(space, u, "state field")?;
    let mut r = assemble_load(problem, space);
    r.neg_mut();
    for (e, nodes) in space.mesh().elements().enumerate() {
        for qp in space.element_qp(e) {
            let kappa = problem.kappa(interp(qp, nodes, m)) * qp.wdet;
            let uq = interp(qp, nodes, u);
            let react = problem.alpha * uq * uq * uq * qp.wdet;
            let gu = interp_grad(qp, nodes, u);
            for ((&i, n), d) in nodes.iter().zip(&qp.n).zip(&qp.grad) {
                r[i] += kappa * (gu[0] * d[0] + gu[1] * d[1]) + react * n;
            }
        }
    }
    for &d in space.dirichlet_dofs() {
        r[d] = u[d];
    }
    check_finite(r.as_slice(), "residual")?;
    Ok(r)
}

/// `⟨ψ_i, δ_u R(m, u)(ψ_j)⟩` without boundary conditions applied.
pub fn assemble_jacobian_unconstrained(
    problem: &ProblemDef,
    space: &FunctionSpace,
    m: &DVector<f64>,
    u: &DVector<f64>,
) -> Result<CsrMatrix> {
    check_field(space, m, "parameter field")?;
    check_field(space, u, "state field")?;
    let mut j = CsrMatrix::zeros(space.pattern().clone());
    for (e, nodes) in space.mesh().elements().enumerate() {
        for qp in space.element_qp(e) {
            let kappa = problem.kappa(interp(qp, nodes, m)) * qp.wdet;
            let uq = interp(qp, nodes, u);
            let react = 3.0 * problem.alpha * uq * uq * qp.wdet;
            for (a, &ia) in nodes.iter().enumerate() {
                for (b, &ib) in nodes.iter().enumerate() {
                    let ga = qp.grad[a];
                    let gb = qp.grad[b];
                    let v = kappa * (ga[0] * gb[0] + ga[1] * gb[1]) + react * qp.n[a] * qp.n[b];
                    j.add(ia, ib, v);
                }
            }
        }
    }
    if !j.is_finite() {
        return Err(Error::NonFinite("jacobian"));
    }
    Ok(j)
}

/// Jacobian with Dirichlet rows and columns replaced by identity.
pub fn assemble_jacobian(
    problem: &ProblemDef,
    space: &FunctionSpace,
    m: &DVector<f64>,
    u: &DVector<f64>,
) -> Result<CsrMatrix> {
    let full = assemble_jacobian_unconstrained(problem, space, m, u)?;
    let mut scratch = space.zeros();
    let zeros = vec![0.0; space.dirichlet_dofs().len()];
    Ok(full.constrain(&mut scratch, space.dirichlet_dofs(), &zeros))
}

/// `⟨ψ_i, δ²_u R(m, u)(p, q)⟩ = ∫ 6 α u p q ψ_i dx`, zero at Dirichlet dofs.
pub fn apply_second_derivative(
    problem: &ProblemDef,
    space: &FunctionSpace,
    m: &DVector<f64>,
    u: &DVector<f64>,
    p: &DVector<f64>,
    q: &DVector<f64>,
) -> Result<DVector<f64>> {
    check_field(space, m, "parameter field")?;
    check_field(space, u, "state field")?;
    check_field(space, p, "direction p")?;
    check_field(space, q, "direction q")?;
    let mut out = space.zeros();
    for (e, nodes) in space.mesh().elements().enumerate() {
        for qp in space.element_qp(e) {
            let pq = interp(qp, nodes, p) * interp(qp, nodes, q);
            let s = 6.0 * problem.alpha * interp(qp, nodes, u) * pq * qp.wdet;
            for (&i, n) in nodes.iter().zip(&qp.n) {
                out[i] += s * n;
            }
        }
    }
    space.zero_dirichlet(&mut out);
    Ok(out)
}

/// Consistent mass matrix.
pub fn assemble_mass(space: &FunctionSpace) -> CsrMatrix {
    let mut m = CsrMatrix::zeros(space.pattern().clone());
    for (e, nodes) in space.mesh().elements().enumerate() {
        for qp in space.element_qp(e) {
            for (a, &ia) in nodes.iter().enumerate() {
                for (b, &ib) in nodes.iter().enumerate() {
                    m.add(ia, ib, qp.n[a] * qp.n[b] * qp.wdet);
                }
            }
        }
    }
    m
}

/// Stiffness matrix `∫ c ∇ψ_j·∇ψ_i`, with `c` constant or interpolated from nodes.
pub fn assemble_stiffness(space: &FunctionSpace, coefficient: Coefficient<'_>) -> CsrMatrix {
    let mut k = CsrMatrix::zeros(space.pattern().clone());
    for (e, nodes) in space.mesh().elements().enumerate() {
        for qp in space.element_qp(e) {
            let c = match coefficient {
                Coefficient::Constant(c) => c,
                Coefficient::Nodal(v) => interp(qp, nodes, v),
            } * qp.wdet;
            for (a, &ia) in nodes.iter().enumerate() {
                for (b, &ib) in nodes.iter().enumerate() {
                    let ga = qp.grad[a];
                    let gb = qp.grad[b];
                    k.add(ia, ib, c * (ga[0] * gb[0] + ga[1] * gb[1]));
                }
            }
        }
    }
    k
}

/// Boundary mass `∫_Γ ψ_j ψ_i dS` over facets with the given tags (all facets for `None`).
pub fn assemble_boundary_mass(space: &FunctionSpace, tags: Option<&[BoundaryTag]>) -> CsrMatrix {
    let all = [
        BoundaryTag::GammaBottom,
        BoundaryTag::GammaIn,
        BoundaryTag::GammaOut,
        BoundaryTag::GammaOther,
    ];
    let mut mb = CsrMatrix::zeros(space.pattern().clone());
    for_each_facet_point(space.mesh(), tags.unwrap_or(&all), |f, _, w, n| {
        for a in 0..2 {
            for b in 0..2 {
                mb.add(f.nodes[a], f.nodes[b], w * n[a] * n[b]);
            }
        }
    });
    mb
}

/// `∫_{Γ_tag} weight · field dS`.
pub fn boundary_integral(
    space: &FunctionSpace,
    field: &DVector<f64>,
    tag: BoundaryTag,
    weight: f64,
) -> Result<f64> {
    check_field(space, field, "boundary integrand")?;
    let mesh = space.mesh();
    if !mesh.has_tag(tag) {
        return Err(Error::invalid(format!("mesh has no facets tagged `{tag}`")));
    }
    let mut total = 0.0;
    for_each_facet_point(mesh, &[tag], |f, _, w, n| {
        total += w * weight * (n[0] * field[f.nodes[0]] + n[1] * field[f.nodes[1]]);
    });
    Ok(total)
}

pub fn norm(space: &FunctionSpace, field: &DVector<f64>, kind: NormKind) -> f64 {
    match kind {
        NormKind::L2Coeff => field.norm(),
        NormKind::L2 => space.mass().quadratic_form(field).max(0.0).sqrt(),
        NormKind::H1 => (space.mass().quadratic_form(field) + space.stiffness().quadratic_form(field))
            .max(0.0)
            .sqrt(),
    }
}

/// `∫ κ(m) |∇u|² + α u⁴ dx`; equals the flux working at a solved state.
pub fn energy_identity_volume(
    problem: &ProblemDef,
    space: &FunctionSpace,
    m: &DVector<f64>,
    u: &DVector<f64>,
) -> Result<f64> {
    check_field(space, m, "parameter field")?;
    check_field(space, u, "state field")?;
    let mut total = 0.0;
    for (e, nodes) in space.mesh().elements().enumerate() {
        for qp in space.element_qp(e) {
            let g = interp_grad(qp, nodes, u);
            let uq = interp(qp, nodes, u);
            total += (problem.kappa(interp(qp, nodes, m)) * (g[0] * g[0] + g[1] * g[1])
                + problem.alpha * uq.powi(4))
                * qp.wdet;
        }
    }
    Ok(total)
}

/// Integrate a pointwise function of `(x, value, gradient)` of a field.
pub fn integrate_field(
    space: &FunctionSpace,
    v: &DVector<f64>,
    f: impl Fn(Point, f64, [f64; 2]) -> f64,
) -> f64 {
    let mut total = 0.0;
    for (e, nodes) in space.mesh().elements().enumerate() {
        for qp in space.element_qp(e) {
            total += f(qp.x, interp(qp, nodes, v), interp_grad(qp, nodes, v)) * qp.wdet;
        }
    }
    total
}

/// Per-element `(value, gradient)` of a field at the element centroid.
pub(crate) fn centroid_samples(space: &FunctionSpace, v: &DVector<f64>) -> Vec<(f64, [f64; 2])> {
    let mesh = space.mesh();
    mesh.elements()
        .map(|nodes| {
            let coords: Vec<Point> = nodes.iter().map(|&i| mesh.node(i)).collect();
            let qp = match mesh.kind() {
                ElementKind::Quad4 => element::quad4_point(&coords, 0.0, 0.0, 0.0),
                ElementKind::Tri3 => {
                    let (_, grad) = element::tri3_gradients(&coords);
                    let third = 1.0 / 3.0;
                    QuadPoint {
                        x: [0.0; 2],
                        wdet: 0.0,
                        n: [third, third, third, 0.0],
                        grad,
                    }
                }
            };
            (interp(&qp, nodes, v), interp_grad(&qp, nodes, v))
        })
        .collect()
}

/// `∫_e ψ_a dx` for every element and local node, flattened element-major.
pub(crate) fn element_basis_integrals(space: &FunctionSpace) -> Vec<f64> {
    let mesh = space.mesh();
    let npe = mesh.kind().nodes_per_element();
    let mut out = vec![0.0; mesh.element_count() * npe];
    for e in 0..mesh.element_count() {
        for qp in space.element_qp(e) {
            for a in 0..npe {
                out[e * npe + a] += qp.n[a] * qp.wdet;
            }
        }
    }
    out
}
