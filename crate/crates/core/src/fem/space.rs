use std::sync::{Arc, OnceLock};

use nalgebra::DVector;

use super::element::{self, QuadPoint};
use super::sparse::{CsrMatrix, CsrPattern};
use crate::mesh::{BoundaryTag, ElementKind, Mesh};

/// First-order Lagrange space on a mesh, with the Dirichlet dofs of one problem.
///
/// Quadrature data and the sparsity pattern are computed once; mass and
/// stiffness matrices are built lazily and cached.
#[derive(Debug)]
pub struct FunctionSpace {
    mesh: Arc<Mesh>,
    dirichlet: Vec<usize>,
    is_dirichlet: Vec<bool>,
    qp: Vec<QuadPoint>,
    qp_per_element: usize,
    pattern: Arc<CsrPattern>,
    mass: OnceLock<CsrMatrix>,
    stiffness: OnceLock<CsrMatrix>,
    lumped: OnceLock<DVector<f64>>,
}

impl FunctionSpace {
    /// Space whose Dirichlet dofs are the nodes on facets tagged with any of `dirichlet_tags`.
    pub fn new(mesh: Arc<Mesh>, dirichlet_tags: &[BoundaryTag]) -> Self {
        let mut dirichlet: Vec<usize> = dirichlet_tags
            .iter()
            .flat_map(|&t| mesh.nodes_on_tag(t))
            .collect();
        dirichlet.sort_unstable();
        dirichlet.dedup();
        let mut is_dirichlet = vec![false; mesh.node_count()];
        for &d in &dirichlet {
            is_dirichlet[d] = true;
        }
        let mut qp = Vec::new();
        for e in 0..mesh.element_count() {
            let coords: Vec<_> = mesh.element(e).iter().map(|&i| mesh.node(i)).collect();
            match mesh.kind() {
                ElementKind::Quad4 => qp.extend(element::quad4_points(&coords)),
                ElementKind::Tri3 => qp.extend(element::tri3_points(&coords)),
            }
        }
        let qp_per_element = match mesh.kind() {
            ElementKind::Quad4 => 9,
            ElementKind::Tri3 => 6,
        };
        let pattern = Arc::new(CsrPattern::from_mesh(&mesh));
        FunctionSpace {
            mesh,
            dirichlet,
            is_dirichlet,
            qp,
            qp_per_element,
            pattern,
            mass: OnceLock::new(),
            stiffness: OnceLock::new(),
            lumped: OnceLock::new(),
        }
    }

    /// Space without constrained dofs (parameter fields).
    pub fn unconstrained(mesh: Arc<Mesh>) -> Self {
        Self::new(mesh, &[])
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn dim(&self) -> usize {
        self.mesh.node_count()
    }

    pub fn dirichlet_dofs(&self) -> &[usize] {
        &self.dirichlet
    }

    pub fn is_dirichlet(&self, i: usize) -> bool {
        self.is_dirichlet[i]
    }

    pub fn pattern(&self) -> &Arc<CsrPattern> {
        &self.pattern
    }

    pub(crate) fn element_qp(&self, e: usize) -> &[QuadPoint] {
        &self.qp[e * self.qp_per_element..(e + 1) * self.qp_per_element]
    }

    pub fn zeros(&self) -> DVector<f64> {
        DVector::zeros(self.dim())
    }

    /// Nodal interpolation of `f`.
    pub fn interpolate(&self, f: impl Fn([f64; 2]) -> f64) -> DVector<f64> {
        DVector::from_iterator(self.dim(), self.mesh.nodes().iter().map(|&p| f(p)))
    }

    /// Zero the constrained coefficients.
    pub fn zero_dirichlet(&self, v: &mut DVector<f64>) {
        for &d in &self.dirichlet {
            v[d] = 0.0;
        }
    }

    pub fn mass(&self) -> &CsrMatrix {
        self.mass.get_or_init(|| super::assembly::assemble_mass(self))
    }

    /// Stiffness with unit coefficient.
    pub fn stiffness(&self) -> &CsrMatrix {
        self.stiffness
            .get_or_init(|| super::assembly::assemble_stiffness(self, super::Coefficient::Constant(1.0)))
    }

    /// Row-sum lumped mass, i.e. `∫ ψ_i dx`.
    pub fn lumped_mass(&self) -> &DVector<f64> {
        self.lumped.get_or_init(|| self.mass().row_sums())
    }

    /// `|Ω|`
    pub fn measure(&self) -> f64 {
        self.lumped_mass().sum()
    }

    /// `(1/|Ω|) ∫ v dx`
    pub fn average(&self, v: &DVector<f64>) -> f64 {
        self.lumped_mass().dot(v) / self.measure()
    }
}
