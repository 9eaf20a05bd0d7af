//! Estimate the compliance error of a perturbed state from the corrector
//! update and compare with the true error.

use neurocorr::corrector::{estimate_qoi_error, CorrectorConfig};
use neurocorr::fem::{ProblemDef, ProblemId};
use neurocorr::grf::{transform_parameter, PriorConfig, PriorSampler};
use neurocorr::harness::{build_mesh, MeshSpec, Setup};
use neurocorr::solver::{newton_solve, NewtonConfig};
use neurocorr::topopt::compliance;

fn main() -> neurocorr::Result<()> {
    let setup = Setup::from_mesh(ProblemDef::p2(), build_mesh(&MeshSpec::Voided { h: 0.03 }, ProblemId::P2)?);
    let sampler = PriorSampler::new(&setup.space, &PriorConfig::default())?;
    let m = transform_parameter(&sampler.sample(3)?, ProblemId::P2);
    let (u, _) = newton_solve(&setup.problem, &setup.space, &m, &setup.space.zeros(), &NewtonConfig::default())?;
    let exact = compliance(&setup.problem, &setup.space, &u)?;

    let mut w = sampler.sample(4)?;
    setup.space.zero_dirichlet(&mut w);
    let w = &w / w.amax();
    println!("eps,true_error,estimate");
    for eps in [0.2, 0.1, 0.05, 0.02, 0.01] {
        let u_tilde = &u + eps * &w;
        let actual = exact - compliance(&setup.problem, &setup.space, &u_tilde)?;
        let estimate = estimate_qoi_error(&setup.problem, &setup.space, &m, &u_tilde, &CorrectorConfig::default())?;
        println!("{eps},{actual:.6e},{estimate:.6e}");
    }
    Ok(())
}
