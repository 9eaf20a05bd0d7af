//! Draw parameter fields from the elliptic prior and report pointwise
//! statistics and the correlation between two points.

use neurocorr::fem::ProblemDef;
use neurocorr::grf::{PriorConfig, PriorSampler};
use neurocorr::harness::Setup;
use neurocorr::mesh::build_unit_square_quad;

fn main() -> neurocorr::Result<()> {
    let setup = Setup::from_mesh(ProblemDef::p1(), build_unit_square_quad(32)?);
    let sampler = PriorSampler::new(&setup.space, &PriorConfig::default())?;
    let samples = sampler.samples(0, 400)?;

    let mesh = setup.mesh();
    let nearest = |p: [f64; 2]| {
        (0..mesh.node_count())
            .min_by(|&a, &b| {
                let d = |i: usize| (mesh.node(i)[0] - p[0]).hypot(mesh.node(i)[1] - p[1]);
                d(a).total_cmp(&d(b))
            })
            .unwrap()
    };
    let centre = nearest([0.5, 0.5]);
    let n = samples.len() as f64;
    let mean = samples.iter().map(|s| s[centre]).sum::<f64>() / n;
    let var = samples.iter().map(|s| (s[centre] - mean).powi(2)).sum::<f64>() / n;
    println!("centre: mean {mean:.4}, variance {var:.4}");
    for d in [0.05, 0.1, 0.2, 0.4] {
        let other = nearest([0.5 + d, 0.5]);
        let cov = samples.iter().map(|s| s[centre] * s[other]).sum::<f64>() / n;
        let var_o = samples.iter().map(|s| s[other] * s[other]).sum::<f64>() / n;
        println!("distance {d}: correlation {:.3}", cov / (var * var_o).sqrt());
    }
    Ok(())
}
