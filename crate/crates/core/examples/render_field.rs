//! Write an SVG heatmap and a nodal CSV of one solution of the voided problem.
//!
//! `cargo run --example render_field [output_dir]`

use std::path::PathBuf;

use neurocorr::fem::{ProblemDef, ProblemId};
use neurocorr::grf::{transform_parameter, PriorConfig, PriorSampler};
use neurocorr::harness::render::{nodal_csv, render_svg};
use neurocorr::harness::{build_mesh, MeshSpec, Setup};
use neurocorr::solver::{newton_solve, NewtonConfig};

fn main() -> neurocorr::Result<()> {
    let dir = std::env::args().nth(1).map_or_else(std::env::temp_dir, PathBuf::from);
    let setup = Setup::from_mesh(ProblemDef::p2(), build_mesh(&MeshSpec::Voided { h: 0.02 }, ProblemId::P2)?);
    let w = PriorSampler::new(&setup.space, &PriorConfig::default())?.sample(0)?;
    let m = transform_parameter(&w, ProblemId::P2);
    let (u, _) = newton_solve(&setup.problem, &setup.space, &m, &setup.space.zeros(), &NewtonConfig::default())?;
    for (name, field) in [("parameter", &m), ("state", &u)] {
        let svg = dir.join(format!("{name}.svg"));
        std::fs::write(&svg, render_svg(setup.mesh(), field, name)?)?;
        std::fs::write(dir.join(format!("{name}.csv")), nodal_csv(setup.mesh(), field)?)?;
        println!("wrote {}", svg.display());
    }
    Ok(())
}
