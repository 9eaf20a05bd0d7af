//! Gaussian random field prior and the per-problem parameter transforms.
//!
//! Samples are `w = A⁻¹ (L ξ)` where `A = γK + δM + η M_∂Ω` is the elliptic
//! prior operator with a Robin boundary term, `L` is the square root of the
//! lumped mass matrix and `ξ` is standard normal white noise.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{assemble_boundary_mass, CsrMatrix, FunctionSpace, ProblemId, M_LOWER};
use crate::solver::{solve_linear, LinearSolveConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriorConfig {
    pub gamma: f64,
    pub delta: f64,
    pub robin: f64,
    /// Only the squared operator is supported.
    pub exponent: u32,
    pub seed: u64,
}

impl Default for PriorConfig {
    fn default() -> Self {
        Self {
            gamma: 0.08,
            delta: 2.0,
            robin: 1.0 / 1.42,
            exponent: 2,
            seed: 0,
        }
    }
}

impl PriorConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("gamma", self.gamma), ("delta", self.delta), ("robin", self.robin)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("prior {name} must be positive, got {v}")));
            }
        }
        if self.exponent != 2 {
            return Err(Error::invalid(format!(
                "prior exponent {} is not supported (only 2)",
                self.exponent
            )));
        }
        Ok(())
    }
}

/// `γK + δM + η M_∂Ω` with the boundary mass taken over all boundary facets.
pub fn assemble_prior_operator(space: &FunctionSpace, cfg: &PriorConfig) -> CsrMatrix {
    let mut a = space.stiffness().clone();
    a.scale(cfg.gamma);
    a.add_scaled(cfg.delta, space.mass());
    a.add_scaled(cfg.robin, &assemble_boundary_mass(space, None));
    a
}

/// Reusable sampler holding the assembled prior operator.
#[derive(Debug, Clone)]
pub struct PriorSampler {
    operator: CsrMatrix,
    noise_scale: DVector<f64>,
    seed: u64,
    linear: LinearSolveConfig,
}

impl PriorSampler {
    pub fn new(space: &FunctionSpace, cfg: &PriorConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            operator: assemble_prior_operator(space, cfg),
            noise_scale: space.lumped_mass().map(f64::sqrt),
            seed: cfg.seed,
            linear: LinearSolveConfig {
                rel_tol: 1e-12,
                ..Default::default()
            },
        })
    }

    pub fn operator(&self) -> &CsrMatrix {
        &self.operator
    }

    /// Sample number `index`, drawn from its own random stream.
    pub fn sample(&self, index: u64) -> Result<DVector<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        let noise = DVector::from_fn(self.noise_scale.len(), |i, _| {
            let xi: f64 = StandardNormal.sample(&mut rng);
            xi * self.noise_scale[i]
        });
        Ok(solve_linear(&self.operator, &noise, &self.linear)?.x)
    }

    /// Samples `start..start + count`, computed in parallel.
    pub fn samples(&self, start: u64, count: usize) -> Result<Vec<DVector<f64>>> {
        (0..count as u64)
            .into_par_iter()
            .map(|k| self.sample(start + k))
            .collect()
    }
}

/// First `count` samples of the prior with the configured seed.
pub fn sample(space: &FunctionSpace, cfg: &PriorConfig, count: usize) -> Result<Vec<DVector<f64>>> {
    if count == 0 {
        return Err(Error::invalid("sample count must be at least 1"));
    }
    PriorSampler::new(space, cfg)?.samples(0, count)
}

/// Map a prior sample to the parameter field of the given problem.
pub fn transform_parameter(w: &DVector<f64>, id: ProblemId) -> DVector<f64> {
    match id {
        ProblemId::P1 => w.clone(),
        ProblemId::P2 => w.map(|x| (0.25 * x.exp()).max(M_LOWER)),
    }
}
