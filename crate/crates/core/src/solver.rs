//! Sparse symmetric linear solves and the Newton iteration for `R(m, u) = 0`.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use crate::error::{check_finite, check_len, Error, Result};
use crate::fem::{
    assemble_jacobian_unconstrained, assemble_residual, check_admissible, CsrMatrix,
    FunctionSpace, ProblemDef,
};

/// Largest system the dense fallback accepts.
pub const DENSE_LIMIT: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LinearMethod {
    /// Conjugate gradients with Jacobi preconditioning.
    #[default]
    Cg,
    /// Dense Cholesky factorization, for small debugging runs.
    Dense,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearSolveConfig {
    pub method: LinearMethod,
    pub rel_tol: f64,
    /// Defaults to ten times the system size when `None`.
    pub max_iter: Option<usize>,
}

impl Default for LinearSolveConfig {
    fn default() -> Self {
        Self {
            method: LinearMethod::Cg,
            rel_tol: 1e-10,
            max_iter: None,
        }
    }
}

impl LinearSolveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(Error::invalid("linear rel_tol must lie in (0, 1)"));
        }
        if self.max_iter == Some(0) {
            return Err(Error::invalid("linear max_iter must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearSolution {
    pub x: DVector<f64>,
    pub iterations: usize,
    /// `‖Ax − b‖ / ‖b‖` measured after the solve.
    pub relative_residual: f64,
}

/// Solve `A x = b` for symmetric positive definite `A`.
pub fn solve_linear(a: &CsrMatrix, b: &DVector<f64>, cfg: &LinearSolveConfig) -> Result<LinearSolution> {
    cfg.validate()?;
    check_len(b.len(), a.nrows(), "right-hand side")?;
    check_finite(b.as_slice(), "right-hand side")?;
    if !a.is_finite() {
        return Err(Error::NonFinite("system matrix"));
    }
    let bnorm = b.norm();
    if bnorm == 0.0 {
        return Ok(LinearSolution {
            x: DVector::zeros(b.len()),
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let (x, iterations) = match cfg.method {
        LinearMethod::Cg => pcg(a, b, cfg)?,
        LinearMethod::Dense => (dense_solve(a, b)?, 1),
    };
    let relative_residual = (a.mul_vec(&x) - b).norm() / bnorm;
    if !relative_residual.is_finite() {
        return Err(Error::NonFinite("linear solution"));
    }
    Ok(LinearSolution {
        x,
        iterations,
        relative_residual,
    })
}

fn pcg(a: &CsrMatrix, b: &DVector<f64>, cfg: &LinearSolveConfig) -> Result<(DVector<f64>, usize)> {
    let n = b.len();
    let max_iter = cfg.max_iter.unwrap_or(10 * n.max(1));
    let inv_diag = a.diagonal().map(|d| if d > 0.0 { 1.0 / d } else { 1.0 });
    let target = cfg.rel_tol * b.norm();
    let mut x = DVector::zeros(n);
    let mut r = b.clone();
    let mut z = r.component_mul(&inv_diag);
    let mut p = z.clone();
    let mut rz = r.dot(&z);
    let mut ap = DVector::zeros(n);
    let mut rnorm = r.norm();
    for it in 0..max_iter {
        if rnorm <= target {
            return Ok((x, it));
        }
        a.mul_vec_into(&p, &mut ap);
        let pap = p.dot(&ap);
        if !(pap > 0.0) {
            return Err(Error::LinearSolve {
                iterations: it,
                residual: rnorm,
            });
        }
        let step = rz / pap;
        x.axpy(step, &p, 1.0);
        r.axpy(-step, &ap, 1.0);
        rnorm = r.norm();
        z = r.component_mul(&inv_diag);
        let rz_new = r.dot(&z);
        p.axpy(1.0, &z, rz_new / rz);
        rz = rz_new;
    }
    if rnorm <= target {
        return Ok((x, max_iter));
    }
    Err(Error::LinearSolve {
        iterations: max_iter,
        residual: rnorm,
    })
}

fn dense_solve(a: &CsrMatrix, b: &DVector<f64>) -> Result<DVector<f64>> {
    if a.nrows() > DENSE_LIMIT {
        return Err(Error::invalid(format!(
            "dense solver is limited to {DENSE_LIMIT} unknowns, got {}",
            a.nrows()
        )));
    }
    let dense: DMatrix<f64> = a.to_dense();
    let chol = dense.cholesky().ok_or(Error::LinearSolve {
        iterations: 0,
        residual: b.norm(),
    })?;
    Ok(chol.solve(b))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonConfig {
    /// Absolute tolerance on the l2 norm of the residual vector.
    pub residual_tol: f64,
    pub max_iter: usize,
    pub line_search: bool,
    pub max_halvings: usize,
    pub linear: LinearSolveConfig,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self {
            residual_tol: 1e-10,
            max_iter: 25,
            line_search: true,
            max_halvings: 20,
            linear: LinearSolveConfig::default(),
        }
    }
}

impl NewtonConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.residual_tol > 0.0) {
            return Err(Error::invalid("newton residual_tol must be positive"));
        }
        self.linear.validate()
    }
}

/// Per-iteration record of a Newton solve. Entry 0 is the initial state.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NewtonStats {
    pub residuals: Vec<f64>,
    pub step_lengths: Vec<f64>,
    pub linear_iterations: Vec<usize>,
}

impl NewtonStats {
    /// Number of accepted Newton updates.
    pub fn updates(&self) -> usize {
        self.step_lengths.len()
    }

    pub fn final_residual(&self) -> f64 {
        self.residuals.last().copied().unwrap_or(f64::NAN)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("iter,residual\n");
        for (i, r) in self.residuals.iter().enumerate() {
            let _ = writeln!(s, "{i},{r:e}");
        }
        s
    }
}

/// Norm used for Newton convergence: free-dof residual plus constraint violation.
pub fn residual_norm(r: &DVector<f64>) -> f64 {
    r.norm()
}

/// The Newton update `−J(u)⁻¹ R(u)`, with the constrained rows forcing the
/// update to restore the homogeneous Dirichlet values.
pub fn newton_step(
    problem: &ProblemDef,
    space: &FunctionSpace,
    m: &DVector<f64>,
    u: &DVector<f64>,
    residual: &DVector<f64>,
    linear: &LinearSolveConfig,
) -> Result<LinearSolution> {
    let jac = assemble_jacobian_unconstrained(problem, space, m, u)?;
    let mut rhs = -residual;
    let dofs = space.dirichlet_dofs();
    let values: Vec<f64> = dofs.iter().map(|&d| -u[d]).collect();
    let constrained = jac.constrain(&mut rhs, dofs, &values);
    let sol = solve_linear(&constrained, &rhs, linear)?;
    let mut sol = sol;
    for (&d, &v) in dofs.iter().zip(&values) {
        sol.x[d] = v;
    }
    Ok(sol)
}

/// Newton iteration from `u0`, returning the solution and its history.
pub fn newton_solve(
    problem: &ProblemDef,
    space: &FunctionSpace,
    m: &DVector<f64>,
    u0: &DVector<f64>,
    cfg: &NewtonConfig,
) -> Result<(DVector<f64>, NewtonStats)> {
    newton_solve_observed(problem, space, m, u0, cfg, |_, _| {})
}

/// [`newton_solve`] calling `observe(k, u_k)` after every accepted update.
pub fn newton_solve_observed(
    problem: &ProblemDef,
    space: &FunctionSpace,
    m: &DVector<f64>,
    u0: &DVector<f64>,
    cfg: &NewtonConfig,
    mut observe: impl FnMut(usize, &DVector<f64>),
) -> Result<(DVector<f64>, NewtonStats)> {
    cfg.validate()?;
    check_admissible(problem, m)?;
    let mut u = u0.clone();
    let mut r = assemble_residual(problem, space, m, &u)?;
    let mut rnorm = residual_norm(&r);
    let mut stats = NewtonStats {
        residuals: vec![rnorm],
        ..Default::default()
    };
    for it in 0..cfg.max_iter {
        if rnorm <= cfg.residual_tol {
            return Ok((u, stats));
        }
        let step = newton_step(problem, space, m, &u, &r, &cfg.linear)?;
        let mut t = 1.0;
        let mut halvings = 0;
        loop {
            let trial = &u + t * &step.x;
            let r_trial = assemble_residual(problem, space, m, &trial)?;
            let n_trial = residual_norm(&r_trial);
            if !cfg.line_search || n_trial < rnorm {
                u = trial;
                r = r_trial;
                rnorm = n_trial;
                break;
            }
            halvings += 1;
            if halvings > cfg.max_halvings {
                return Err(Error::LineSearch {
                    iteration: it,
                    residual: rnorm,
                });
            }
            t *= 0.5;
        }
        observe(it + 1, &u);
        stats.residuals.push(rnorm);
        stats.step_lengths.push(t);
        stats.linear_iterations.push(step.iterations);
    }
    if rnorm <= cfg.residual_tol {
        return Ok((u, stats));
    }
    Err(Error::NewtonDiverged {
        iterations: cfg.max_iter,
        residual: rnorm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_and_two_by_two() {
        let b = DVector::from_vec(vec![1.0, -2.0, 3.0]);
        let x = solve_linear(&CsrMatrix::identity(3), &b, &Default::default()).unwrap();
        assert_eq!(x.x, b);
        let a = CsrMatrix::from_dense(&dmatrix![2.0, 1.0; 1.0, 2.0]);
        let b = DVector::from_vec(vec![3.0, 3.0]);
        for method in [LinearMethod::Cg, LinearMethod::Dense] {
            let cfg = LinearSolveConfig {
                method,
                ..Default::default()
            };
            let x = solve_linear(&a, &b, &cfg).unwrap().x;
            assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn random_spd_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let g = DMatrix::from_fn(20, 20, |_, _| rng.random_range(-1.0..1.0));
        let a = &g * g.transpose() + DMatrix::identity(20, 20);
        let b = DVector::from_fn(20, |_, _| rng.random_range(-1.0..1.0));
        let sol = solve_linear(&CsrMatrix::from_dense(&a), &b, &Default::default()).unwrap();
        assert!((&a * &sol.x - &b).norm() / b.norm() <= 1e-10);
    }

    #[test]
    fn rejects_bad_input() {
        let a = CsrMatrix::identity(2);
        assert!(solve_linear(&a, &DVector::from_vec(vec![1.0]), &Default::default()).is_err());
        assert!(solve_linear(&a, &DVector::from_vec(vec![1.0, f64::NAN]), &Default::default()).is_err());
        let indefinite = CsrMatrix::from_dense(&dmatrix![1.0, 0.0; 0.0, -1.0]);
        let b = DVector::from_vec(vec![0.0, 1.0]);
        assert!(solve_linear(&indefinite, &b, &Default::default()).is_err());
        let cfg = LinearSolveConfig {
            rel_tol: 0.0,
            ..Default::default()
        };
        assert!(solve_linear(&a, &b, &cfg).is_err());
    }

    #[test]
    fn csv_has_one_row_per_state() {
        let stats = NewtonStats {
            residuals: vec![1.0, 0.5],
            step_lengths: vec![1.0],
            linear_iterations: vec![3],
        };
        assert_eq!(stats.to_csv().lines().count(), 3);
        assert_eq!(stats.updates(), 1);
    }
}
