//! Topology optimization of the voided square driven by the finite element
//! solver, the plain surrogate and the corrected surrogate.
//!
//! `cargo run --release --example topopt_comparison [h] [n_samples] [epochs]`

use std::time::Instant;

use neurocorr::corrector::CorrectorConfig;
use neurocorr::fem::ProblemDef;
use neurocorr::grf::PriorConfig;
use neurocorr::harness::{build_mesh, fit_projectors, generate_splits, run_topopt, train_surrogate, MeshSpec, Setup};
use neurocorr::fem::ProblemId;
use neurocorr::network::{NetConfig, TrainConfig};
use neurocorr::solver::NewtonConfig;
use neurocorr::topopt::{minimizer_errors, ForwardMode, TopOptConfig};

fn main() -> neurocorr::Result<()> {
    let mut args = std::env::args().skip(1);
    let h: f64 = args.next().map_or(0.03, |a| a.parse().expect("mesh size"));
    let n: usize = args.next().map_or(256, |a| a.parse().expect("sample count"));
    let epochs: usize = args.next().map_or(500, |a| a.parse().expect("epoch count"));

    let mesh = build_mesh(&MeshSpec::Voided { h }, ProblemId::P2)?;
    let setup = Setup::from_mesh(ProblemDef::p2(), mesh);
    let newton = NewtonConfig::default();
    let t = Instant::now();
    let (train, _) = generate_splits(&setup, &PriorConfig::default(), n, &newton)?;
    println!("data: {} samples, q = {} ({:.1?})", train.len(), train.q_u(), t.elapsed());

    let net_cfg = NetConfig::default();
    let (pm, pu) = fit_projectors(&train, &net_cfg)?;
    let cfg = TrainConfig { epochs, ..Default::default() };
    let (net, history) = train_surrogate(&train, pm, pu, &net_cfg, &cfg, None)?;
    println!("training: best epoch {}", history.best_epoch);

    let topopt = TopOptConfig::default();
    let corrector = CorrectorConfig::default();
    let mut results = Vec::new();
    for mode in ForwardMode::ALL {
        let t = Instant::now();
        let r = run_topopt(&setup, Some(&net), mode, &topopt, &newton, &corrector)?;
        let last = r.history.last().expect("nonempty history");
        println!(
            "{mode:>12}: {:3} steps, J = {:.5e}, average {:.4} ({:.1?})",
            r.history.len() - 1,
            last.compliance,
            last.volume_average,
            t.elapsed()
        );
        results.push(r);
    }
    let e = minimizer_errors(&results[0], &results[1], &results[2])?;
    println!("minimizer error: surrogate {:.3}%, corrected {:.3}%", e.eps_nn, e.eps_nn_c);
    println!("state error:     surrogate {:.3}%, corrected {:.3}%", e.e_nn, e.e_nn_c);
    Ok(())
}
