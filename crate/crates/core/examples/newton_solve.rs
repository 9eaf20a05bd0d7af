//! Solve both nonlinear problems for one prior draw and print the Newton
//! residual history.

use neurocorr::fem::{ProblemDef, ProblemId};
use neurocorr::grf::{transform_parameter, PriorConfig, PriorSampler};
use neurocorr::harness::{build_mesh, MeshSpec, Setup};
use neurocorr::solver::{newton_solve, NewtonConfig};

fn main() -> neurocorr::Result<()> {
    for (id, spec) in [
        (ProblemId::P1, MeshSpec::UnitSquare { n: 64 }),
        (ProblemId::P2, MeshSpec::Voided { h: 0.02 }),
    ] {
        let setup = Setup::from_mesh(ProblemDef::for_id(id), build_mesh(&spec, id)?);
        let w = PriorSampler::new(&setup.space, &PriorConfig::default())?.sample(0)?;
        let m = transform_parameter(&w, id);
        let (u, stats) = newton_solve(&setup.problem, &setup.space, &m, &setup.space.zeros(), &NewtonConfig::default())?;
        println!("{id:?}: {} dofs, max u = {:.5}", setup.space.dim(), u.amax());
        print!("{}", stats.to_csv());
    }
    Ok(())
}
