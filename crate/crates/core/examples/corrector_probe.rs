//! Perturb a solution by `eps·w`, correct once, and fit the slope of the
//! corrected error against `eps`. A slope near 2 shows quadratic reduction.

use neurocorr::corrector::{error_scaling_probe, fit_slope, probe_to_csv, CorrectorConfig};
use neurocorr::fem::{ProblemDef, ProblemId};
use neurocorr::grf::{transform_parameter, PriorConfig, PriorSampler};
use neurocorr::harness::{build_mesh, MeshSpec, Setup};
use neurocorr::solver::{newton_solve, NewtonConfig};

fn main() -> neurocorr::Result<()> {
    let setup = Setup::from_mesh(ProblemDef::p2(), build_mesh(&MeshSpec::Voided { h: 0.03 }, ProblemId::P2)?);
    let sampler = PriorSampler::new(&setup.space, &PriorConfig::default())?;
    let m = transform_parameter(&sampler.sample(0)?, ProblemId::P2);
    let (u, _) = newton_solve(&setup.problem, &setup.space, &m, &setup.space.zeros(), &NewtonConfig::default())?;

    let mut w = sampler.sample(1)?;
    setup.space.zero_dirichlet(&mut w);
    let w = &w / w.amax();
    let cfg = CorrectorConfig {
        converged_tol: 0.0,
        ..Default::default()
    };
    let eps = [1e-1, 5e-2, 2e-2, 1e-2, 5e-3, 3e-3];
    let rows = error_scaling_probe(&setup.problem, &setup.space, &m, &u, &w, &eps, &cfg)?;
    print!("{}", probe_to_csv(&rows));
    println!("slope {:.3}", fit_slope(&rows));
    Ok(())
}
