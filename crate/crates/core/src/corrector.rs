//! One-step Newton corrector for approximate states.
//!
//! Given any approximation `ũ`, the corrected state is
//! `u_c = ũ − J(m, ũ)⁻¹ R(m, ũ)`. The constrained rows force the update to
//! cancel whatever Dirichlet values `ũ` carries.

use std::fmt::Write as _;

use nalgebra::DVector;
use rayon::prelude::*;

use crate::error::{check_len, Error, Result};
use crate::fem::{
    assemble_residual, boundary_integral, check_admissible, norm, FluxDensity, FunctionSpace, NormKind,
    ProblemDef,
};
use crate::mesh::BoundaryTag;
use crate::solver::{newton_step, residual_norm, LinearSolveConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrectorConfig {
    pub linear: LinearSolveConfig,
    /// Inputs whose residual norm is at most this are returned unchanged.
    pub converged_tol: f64,
}

impl Default for CorrectorConfig {
    fn default() -> Self {
        Self {
            linear: LinearSolveConfig::default(),
            converged_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateNorms {
    pub l2_coeff: f64,
    pub l2: f64,
    pub h1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrectionResult {
    pub u_c: DVector<f64>,
    pub update: DVector<f64>,
    pub update_norms: UpdateNorms,
    pub residual_before: f64,
    pub residual_after: f64,
    pub linear_iterations: usize,
}

/// Apply the corrector once to `u_tilde`.
pub fn correct(
    problem: &ProblemDef,
    space: &FunctionSpace,
    m: &DVector<f64>,
    u_tilde: &DVector<f64>,
    cfg: &CorrectorConfig,
) -> Result<CorrectionResult> {
    check_admissible(problem, m)?;
    let r = assemble_residual(problem, space, m, u_tilde)?;
    let residual_before = residual_norm(&r);
    if residual_before <= cfg.converged_tol {
        return Ok(CorrectionResult {
            u_c: u_tilde.clone(),
            update: space.zeros(),
            update_norms: UpdateNorms {
                l2_coeff: 0.0,
                l2: 0.0,
                h1: 0.0,
            },
            residual_before,
            residual_after: residual_before,
            linear_iterations: 0,
        });
    }
    let step = newton_step(problem, space, m, u_tilde, &r, &cfg.linear)?;
    let u_c = u_tilde + &step.x;
    let residual_after = residual_norm(&assemble_residual(problem, space, m, &u_c)?);
    Ok(CorrectionResult {
        update_norms: UpdateNorms {
            l2_coeff: norm(space, &step.x, NormKind::L2Coeff),
            l2: norm(space, &step.x, NormKind::L2),
            h1: norm(space, &step.x, NormKind::H1),
        },
        u_c,
        update: step.x,
        residual_before,
        residual_after,
        linear_iterations: step.iterations,
    })
}

/// `k` successive corrections starting from `u_tilde`.
pub fn correct_k(
    problem: &ProblemDef,
    space: &FunctionSpace,
    m: &DVector<f64>,
    u_tilde: &DVector<f64>,
    k: usize,
    cfg: &CorrectorConfig,
) -> Result<Vec<CorrectionResult>> {
    if k == 0 {
        return Err(Error::invalid("number of corrections must be at least 1"));
    }
    let mut out: Vec<CorrectionResult> = Vec::with_capacity(k);
    for _ in 0..k {
        let start = out.last().map_or(u_tilde, |r| &r.u_c);
        let next = correct(problem, space, m, start, cfg)?;
        out.push(next);
    }
    Ok(out)
}

/// Correct many `(m, ũ)` pairs in parallel.
pub fn correct_many(
    problem: &ProblemDef,
    space: &FunctionSpace,
    ms: &[DVector<f64>],
    us: &[DVector<f64>],
    cfg: &CorrectorConfig,
) -> Result<Vec<CorrectionResult>> {
    check_len(us.len(), ms.len(), "approximate states")?;
    ms.par_iter()
        .zip(us)
        .map(|(m, u)| correct(problem, space, m, u, cfg))
        .collect()
}

/// Constant outer-boundary flux of a compliance problem.
pub(crate) fn constant_flux(problem: &ProblemDef) -> Result<f64> {
    match &problem.flux {
        Some(f) if f.tags.contains(&BoundaryTag::GammaOut) => match f.density {
            FluxDensity::Constant(g) => Ok(g),
            FluxDensity::Custom(_) => Err(Error::invalid("compliance needs a constant boundary flux")),
        },
        _ => Err(Error::invalid("problem has no flux on the outer boundary")),
    }
}

/// Estimate of `Q(u) − Q(ũ)` for the compliance `Q(u) = ∫_{Γ_out} g u dS`,
/// obtained by applying the (linear) functional to the corrector update.
pub fn estimate_qoi_error(
    problem: &ProblemDef,
    space: &FunctionSpace,
    m: &DVector<f64>,
    u_tilde: &DVector<f64>,
    cfg: &CorrectorConfig,
) -> Result<f64> {
    let g = constant_flux(problem)?;
    let c = correct(problem, space, m, u_tilde, cfg)?;
    boundary_integral(space, &c.update, BoundaryTag::GammaOut, g)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeRow {
    pub eps: f64,
    pub err_before: f64,
    pub err_after: f64,
    pub residual_before: f64,
    pub residual_after: f64,
}

/// Perturb a solution `u_star` along `w` by each `eps`, correct once and
/// record the l2 errors before and after.
pub fn error_scaling_probe(
    problem: &ProblemDef,
    space: &FunctionSpace,
    m: &DVector<f64>,
    u_star: &DVector<f64>,
    w: &DVector<f64>,
    eps_list: &[f64],
    cfg: &CorrectorConfig,
) -> Result<Vec<ProbeRow>> {
    check_len(w.len(), space.dim(), "probe direction")?;
    if w.norm() == 0.0 {
        return Err(Error::invalid("probe direction must be nonzero"));
    }
    if space.dirichlet_dofs().iter().any(|&d| w[d] != 0.0) {
        return Err(Error::invalid("probe direction must vanish on the Dirichlet boundary"));
    }
    eps_list
        .iter()
        .map(|&eps| {
            let u_tilde = u_star + eps * w;
            let c = correct(problem, space, m, &u_tilde, cfg)?;
            Ok(ProbeRow {
                eps,
                err_before: (&u_tilde - u_star).norm(),
                err_after: (&c.u_c - u_star).norm(),
                residual_before: c.residual_before,
                residual_after: c.residual_after,
            })
        })
        .collect()
}

/// Least-squares slope of `log err_after` against `log err_before`.
pub fn fit_slope(rows: &[ProbeRow]) -> f64 {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.err_before > 0.0 && r.err_after > 0.0)
        .map(|r| (r.err_before.ln(), r.err_after.ln()))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

pub fn probe_to_csv(rows: &[ProbeRow]) -> String {
    let mut s = String::from("eps,err_before,err_after\n");
    for r in rows {
        let _ = writeln!(s, "{:e},{:e},{:e}", r.eps, r.err_before, r.err_after);
    }
    s
}
