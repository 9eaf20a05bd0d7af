//! Compliance minimization over the diffusivity field.
//!
//! Each outer step freezes the state `u_k`, computes the flux energy
//! `e = |m ∇u|²` and solves for the diffusivity and volume multiplier with the
//! pointwise update `m = clamp(√(e/λ), m_lw, 1)` and a bisection on `λ`. The
//! state is then recomputed with one of three forward models.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::corrector::{constant_flux, correct, CorrectorConfig};
use crate::error::{check_len, Error, Result};
use crate::fem::assembly::{centroid_samples, element_basis_integrals};
use crate::fem::{boundary_integral, energy_identity_volume, norm, FunctionSpace, NormKind, ProblemDef};
use crate::mesh::BoundaryTag;
use crate::metrics::percent_error;
use crate::network::Surrogate;
use crate::solver::{newton_solve, NewtonConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForwardMode {
    #[default]
    Fem,
    Nn,
    NnCorrected,
}

impl ForwardMode {
    pub const ALL: [ForwardMode; 3] = [ForwardMode::Fem, ForwardMode::Nn, ForwardMode::NnCorrected];

    pub fn name(self) -> &'static str {
        match self {
            ForwardMode::Fem => "fem",
            ForwardMode::Nn => "nn",
            ForwardMode::NnCorrected => "nn_corrected",
        }
    }
}

impl fmt::Display for ForwardMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for ForwardMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ForwardMode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown forward mode `{s}` (fem, nn, nn_corrected)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopOptConfig {
    /// Target volume average of `m`.
    pub eta: f64,
    pub m_lower: f64,
    /// Relative tolerance on the volume constraint.
    pub m_tol: f64,
    /// Outer stopping tolerance on `‖m_{k+1} − m_k‖_{L²}`.
    pub gamma_tol: f64,
    pub n_max: usize,
    pub lambda0: f64,
    pub m0: f64,
    /// Limit on the doublings or halvings while bracketing `λ`.
    pub max_bracket: usize,
    pub max_bisection: usize,
    pub mode: ForwardMode,
}

impl Default for TopOptConfig {
    fn default() -> Self {
        Self {
            eta: 0.4,
            m_lower: 0.001,
            m_tol: 0.005,
            gamma_tol: 1e-3,
            n_max: 200,
            lambda0: 1.0,
            m0: 0.1,
            max_bracket: 60,
            max_bisection: 200,
            mode: ForwardMode::Fem,
        }
    }
}

impl TopOptConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.m_lower && self.m_lower < self.eta && self.eta <= 1.0) {
            return Err(Error::invalid("topopt bounds must satisfy 0 < m_lower < eta <= 1"));
        }
        if !(self.m_tol > 0.0 && self.gamma_tol > 0.0 && self.lambda0 > 0.0) {
            return Err(Error::invalid("topopt tolerances and lambda0 must be positive"));
        }
        if !(self.m_lower..=1.0).contains(&self.m0) {
            return Err(Error::invalid("initial diffusivity must lie within [m_lower, 1]"));
        }
        Ok(())
    }

    fn volume_ok(&self, avg: f64) -> bool {
        (avg - self.eta).abs() <= self.eta * self.m_tol
    }
}

/// `∫_{Γ_out} g u dS`.
pub fn compliance(problem: &ProblemDef, space: &FunctionSpace, u: &DVector<f64>) -> Result<f64> {
    boundary_integral(space, u, BoundaryTag::GammaOut, constant_flux(problem)?)
}

/// Nodal flux energy: `|m ∇u|²` sampled at element centroids, then projected
/// to the nodes with the lumped mass.
pub fn flux_energy(space: &FunctionSpace, m: &DVector<f64>, u: &DVector<f64>) -> Result<DVector<f64>> {
    check_len(m.len(), space.dim(), "diffusivity")?;
    check_len(u.len(), space.dim(), "state")?;
    let mesh = space.mesh();
    let npe = mesh.kind().nodes_per_element();
    let ms = centroid_samples(space, m);
    let us = centroid_samples(space, u);
    let weights = element_basis_integrals(space);
    let mut e = space.zeros();
    for (k, nodes) in mesh.elements().enumerate() {
        let g = us[k].1;
        let value = ms[k].0 * ms[k].0 * (g[0] * g[0] + g[1] * g[1]);
        for (a, &i) in nodes.iter().enumerate() {
            e[i] += value * weights[k * npe + a];
        }
    }
    Ok(e.component_div(space.lumped_mass()))
}

/// `clamp(√(e/λ), m_lower, 1)` nodewise.
pub fn update_m(e: &DVector<f64>, lambda: f64, m_lower: f64) -> Result<DVector<f64>> {
    if !(lambda > 0.0) {
        return Err(Error::invalid(format!("volume multiplier must be positive, got {lambda}")));
    }
    Ok(e.map(|x| (x.max(0.0) / lambda).sqrt().clamp(m_lower, 1.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct InnerStats {
    pub bracket_steps: usize,
    pub bisection_steps: usize,
}

/// Find `(m, λ)` with `|avg(m) − η| ≤ η m_tol` for a frozen flux energy.
///
/// The bracketing direction is chosen from the average of the incoming `m`;
/// when that guess leaves the far end unverified, the bracket is widened
/// until it encloses the target.
pub fn inner_iteration(
    space: &FunctionSpace,
    e: &DVector<f64>,
    m_k: &DVector<f64>,
    lambda_k: f64,
    cfg: &TopOptConfig,
) -> Result<(DVector<f64>, f64, InnerStats)> {
    let avg = |m: &DVector<f64>| space.average(m);
    let at = |lambda: f64| -> Result<(DVector<f64>, f64)> {
        let m = update_m(e, lambda, cfg.m_lower)?;
        let a = avg(&m);
        Ok((m, a))
    };
    let mut stats = InnerStats::default();
    let fail = || Error::Optimization("could not bracket the volume multiplier (flux energy is degenerate)".into());

    // `lo` gives an average below eta (large multiplier), `hi` one at or above.
    let (mut lo, mut hi);
    let mut current;
    if avg(m_k) < cfg.eta {
        lo = lambda_k;
        let mut lambda = lambda_k;
        let mut a = avg(m_k);
        let mut m = m_k.clone();
        while a < cfg.eta {
            if stats.bracket_steps == cfg.max_bracket {
                return Err(fail());
            }
            lambda *= 0.5;
            (m, a) = at(lambda)?;
            stats.bracket_steps += 1;
        }
        hi = lambda;
        current = (m, lambda, a);
    } else {
        hi = lambda_k;
        let mut lambda = lambda_k;
        let mut a = avg(m_k);
        let mut m = m_k.clone();
        while a > cfg.eta {
            if stats.bracket_steps == cfg.max_bracket {
                return Err(fail());
            }
            lambda *= 2.0;
            (m, a) = at(lambda)?;
            stats.bracket_steps += 1;
        }
        lo = lambda;
        current = (m, lambda, a);
    }
    // verify both ends against the update itself
    while at(lo)?.1 >= cfg.eta {
        if stats.bracket_steps >= 2 * cfg.max_bracket {
            return Err(fail());
        }
        lo *= 2.0;
        stats.bracket_steps += 1;
    }
    while at(hi)?.1 < cfg.eta {
        if stats.bracket_steps >= 2 * cfg.max_bracket {
            return Err(fail());
        }
        hi *= 0.5;
        stats.bracket_steps += 1;
    }

    while !cfg.volume_ok(current.2) {
        if stats.bisection_steps == cfg.max_bisection {
            return Err(Error::Optimization(format!(
                "volume bisection did not converge in {} steps",
                cfg.max_bisection
            )));
        }
        let lambda = 0.5 * (lo + hi);
        let (m, a) = at(lambda)?;
        if a < cfg.eta {
            lo = lambda;
        } else {
            hi = lambda;
        }
        current = (m, lambda, a);
        stats.bisection_steps += 1;
    }
    Ok((current.0, current.1, stats))
}

/// Source of states `u(m)` for the optimization loop.
pub trait ForwardModel {
    fn solve(&mut self, m: &DVector<f64>) -> Result<DVector<f64>>;
}

/// Newton solves, warm-started from the previous state.
pub struct FemForward<'a> {
    problem: &'a ProblemDef,
    space: &'a FunctionSpace,
    newton: NewtonConfig,
    previous: Option<DVector<f64>>,
    /// Apply the corrector to every converged state.
    pub then_correct: Option<CorrectorConfig>,
}

impl<'a> FemForward<'a> {
    pub fn new(problem: &'a ProblemDef, space: &'a FunctionSpace, newton: NewtonConfig) -> Self {
        Self {
            problem,
            space,
            newton,
            previous: None,
            then_correct: None,
        }
    }
}

impl ForwardModel for FemForward<'_> {
    fn solve(&mut self, m: &DVector<f64>) -> Result<DVector<f64>> {
        let start = self.previous.take().unwrap_or_else(|| self.space.zeros());
        let (mut u, _) = newton_solve(self.problem, self.space, m, &start, &self.newton)?;
        if let Some(cfg) = &self.then_correct {
            u = correct(self.problem, self.space, m, &u, cfg)?.u_c;
        }
        self.previous = Some(u.clone());
        Ok(u)
    }
}

/// Neural operator predictions, optionally followed by one correction.
pub struct SurrogateForward<'a> {
    net: &'a Surrogate,
    correction: Option<(&'a ProblemDef, &'a FunctionSpace, CorrectorConfig)>,
}

impl<'a> SurrogateForward<'a> {
    pub fn plain(net: &'a Surrogate) -> Self {
        Self { net, correction: None }
    }

    pub fn corrected(net: &'a Surrogate, problem: &'a ProblemDef, space: &'a FunctionSpace, cfg: CorrectorConfig) -> Self {
        Self {
            net,
            correction: Some((problem, space, cfg)),
        }
    }
}

impl ForwardModel for SurrogateForward<'_> {
    fn solve(&mut self, m: &DVector<f64>) -> Result<DVector<f64>> {
        let u = self.net.forward(m)?;
        match &self.correction {
            None => Ok(u),
            Some((problem, space, cfg)) => Ok(correct(problem, space, m, &u, cfg)?.u_c),
        }
    }
}

/// Build the forward model for `mode`; surrogate modes need a network.
pub fn forward_for<'a>(
    mode: ForwardMode,
    problem: &'a ProblemDef,
    space: &'a FunctionSpace,
    net: Option<&'a Surrogate>,
    newton: NewtonConfig,
    corrector: CorrectorConfig,
) -> Result<Box<dyn ForwardModel + 'a>> {
    let need = || Error::invalid(format!("forward mode `{mode}` needs a trained model"));
    Ok(match mode {
        ForwardMode::Fem => Box::new(FemForward::new(problem, space, newton)),
        ForwardMode::Nn => Box::new(SurrogateForward::plain(net.ok_or_else(need)?)),
        ForwardMode::NnCorrected => Box::new(SurrogateForward::corrected(net.ok_or_else(need)?, problem, space, corrector)),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OuterRecord {
    pub iter: usize,
    /// Boundary form of the compliance.
    pub compliance: f64,
    /// Volumetric form `∫ κ|∇u|² + u⁴`; matches at solved states.
    pub compliance_volume: f64,
    pub volume_average: f64,
    pub lambda: f64,
    pub m_min: f64,
    pub m_max: f64,
    /// `‖m_k − m_{k−1}‖_{L²}` (zero for the initial state).
    pub change: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopOptResult {
    pub m: DVector<f64>,
    pub u: DVector<f64>,
    pub lambda: f64,
    pub history: Vec<OuterRecord>,
    pub converged: bool,
}

impl TopOptResult {
    pub fn history_csv(&self) -> String {
        let mut s = String::from("iter,J,m_avg,lambda\n");
        for r in &self.history {
            let _ = writeln!(s, "{},{:e},{:e},{:e}", r.iter, r.compliance, r.volume_average, r.lambda);
        }
        s
    }
}

fn record(
    problem: &ProblemDef,
    space: &FunctionSpace,
    iter: usize,
    m: &DVector<f64>,
    u: &DVector<f64>,
    lambda: f64,
    change: f64,
) -> Result<OuterRecord> {
    Ok(OuterRecord {
        iter,
        compliance: compliance(problem, space, u)?,
        compliance_volume: energy_identity_volume(problem, space, m, u)?,
        volume_average: space.average(m),
        lambda,
        m_min: m.min(),
        m_max: m.max(),
        change,
    })
}

/// Outer iteration from the constant initial guess until the diffusivity
/// stops changing or `n_max` steps have been taken.
pub fn outer_iteration(
    problem: &ProblemDef,
    space: &FunctionSpace,
    forward: &mut dyn ForwardModel,
    cfg: &TopOptConfig,
) -> Result<TopOptResult> {
    cfg.validate()?;
    let mut m = DVector::from_element(space.dim(), cfg.m0);
    let mut lambda = cfg.lambda0;
    let mut u = forward.solve(&m)?;
    let mut e = flux_energy(space, &m, &u)?;
    let mut history = vec![record(problem, space, 0, &m, &u, lambda, 0.0)?];
    let mut converged = false;
    for k in 1..=cfg.n_max {
        let (m_next, lambda_next, _) = inner_iteration(space, &e, &m, lambda, cfg)?;
        let u_next = forward.solve(&m_next)?;
        let change = norm(space, &(&m_next - &m), NormKind::L2);
        m = m_next;
        lambda = lambda_next;
        u = u_next;
        e = flux_energy(space, &m, &u)?;
        history.push(record(problem, space, k, &m, &u, lambda, change)?);
        if change < cfg.gamma_tol {
            converged = true;
            break;
        }
    }
    Ok(TopOptResult {
        m,
        u,
        lambda,
        history,
        converged,
    })
}

/// Percentage differences between the reference minimizer and two surrogate
/// runs: `(ε_NN, ε_NN^c, e_NN, e_NN^c)` for the diffusivities and states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MinimizerErrors {
    pub eps_nn: f64,
    pub eps_nn_c: f64,
    pub e_nn: f64,
    pub e_nn_c: f64,
}

pub fn minimizer_errors(
    reference: &TopOptResult,
    nn: &TopOptResult,
    corrected: &TopOptResult,
) -> Result<MinimizerErrors> {
    Ok(MinimizerErrors {
        eps_nn: percent_error(&reference.m, &nn.m)?,
        eps_nn_c: percent_error(&reference.m, &corrected.m)?,
        e_nn: percent_error(&reference.u, &nn.u)?,
        e_nn_c: percent_error(&reference.u, &corrected.u)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn update_examples() {
        let e = DVector::from_vec(vec![4.0, 0.0, 0.16]);
        let m = update_m(&e, 1.0, 0.001).unwrap();
        assert_eq!(m.as_slice(), &[1.0, 0.001, 0.4]);
        assert!(update_m(&e, 0.0, 0.001).is_err());
    }

    #[test]
    fn mode_names() {
        for mode in ForwardMode::ALL {
            assert_eq!(mode.name().parse::<ForwardMode>().unwrap(), mode);
        }
        assert!("gpu".parse::<ForwardMode>().is_err());
    }
}
