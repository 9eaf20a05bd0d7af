//! Singular value decay of parameter and solution snapshots, with the
//! indices where the normalized spectrum crosses 0.1 and 0.01.

use neurocorr::fem::ProblemDef;
use neurocorr::grf::PriorConfig;
use neurocorr::harness::{generate_dataset, Setup};
use neurocorr::mesh::build_unit_square_quad;
use neurocorr::reduction::{center, compute_svd, reconstruction_error, spectrum_markers, Projector};
use neurocorr::solver::NewtonConfig;

fn main() -> neurocorr::Result<()> {
    let setup = Setup::from_mesh(ProblemDef::p1(), build_unit_square_quad(32)?);
    let data = generate_dataset(&setup, &PriorConfig::default(), 0, 256, &NewtonConfig::default())?;
    for (name, snapshots) in [("parameter", data.m()), ("solution", data.u())] {
        let (centered, mean) = center(snapshots);
        let svd = compute_svd(&centered)?;
        let full = Projector::truncate(&svd, mean, svd.rank)?;
        let [a, b] = spectrum_markers(&full.normalized_spectrum());
        println!("{name}: rank {}, index near 0.1: {a:?}, near 0.01: {b:?}", svd.rank);
        for r in [5, 25, 50, 100] {
            let p = Projector::truncate(&svd, snapshots.column_mean(), r)?;
            println!("  r = {r:3}: reconstruction error {:.3e}", reconstruction_error(p.basis(), &centered));
        }
    }
    Ok(())
}
