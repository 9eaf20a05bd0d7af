//! Finite element discretization of the nonlinear diffusion-reaction problems.

pub mod assembly;
pub mod element;
pub mod field;
pub mod problem;
pub mod space;
pub mod sparse;

pub use assembly::{
    apply_second_derivative, assemble_boundary_mass, assemble_jacobian,
    assemble_jacobian_unconstrained, assemble_load, assemble_mass, assemble_residual,
    assemble_stiffness, boundary_integral, check_admissible, energy_identity_volume,
    facet_normal, integrate_field, norm, Coefficient, NormKind,
};
pub use field::{field_from_text, field_to_text, read_field, write_field};
pub use problem::{manufactured_exact, Diffusivity, Flux, FluxDensity, ProblemDef, ProblemId, Source, M_LOWER, P2_FLUX};
pub use space::FunctionSpace;
pub use sparse::{CsrMatrix, CsrPattern};
