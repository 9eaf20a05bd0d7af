//! Train a reduced surrogate for the unit-square problem and compare its
//! test error before and after one corrector step.
//!
//! `cargo run --release --example surrogate_accuracy [n_mesh] [n_samples] [epochs]`

use std::time::Instant;

use neurocorr::corrector::CorrectorConfig;
use neurocorr::fem::ProblemDef;
use neurocorr::grf::PriorConfig;
use neurocorr::harness::{evaluate_corrected, fit_projectors, generate_splits, train_surrogate, Setup};
use neurocorr::mesh::build_unit_square_quad;
use neurocorr::network::{NetConfig, TrainConfig};
use neurocorr::solver::NewtonConfig;

fn main() -> neurocorr::Result<()> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<usize>().expect("integer argument"));
    let n_mesh = args.next().unwrap_or(32);
    let n = args.next().unwrap_or(256);
    let epochs = args.next().unwrap_or(500);

    let t = Instant::now();
    let setup = Setup::from_mesh(ProblemDef::p1(), build_unit_square_quad(n_mesh)?);
    let (train, test) = generate_splits(&setup, &PriorConfig::default(), n, &NewtonConfig::default())?;
    println!("data: {} + {} samples, q = {} ({:.1?})", train.len(), test.len(), train.q_u(), t.elapsed());

    let net = NetConfig::default();
    let (pm, pu) = fit_projectors(&train, &net)?;
    let cfg = TrainConfig { epochs, ..Default::default() };
    let t = Instant::now();
    let (surrogate, history) = train_surrogate(&train, pm, pu, &net, &cfg, None)?;
    println!("training: best epoch {} of {epochs} ({:.1?})", history.best_epoch, t.elapsed());

    let outcome = evaluate_corrected(&setup, &surrogate, &test, 20, &CorrectorConfig::default())?;
    let (enn, ecnn) = outcome.summaries()?;
    println!("surrogate error  min {:.4}% max {:.4}% mean {:.4}%", enn.min, enn.max, enn.mean);
    println!("corrected error  min {:.4}% max {:.4}% mean {:.4}%", ecnn.min, ecnn.max, ecnn.mean);
    println!("improvement factor {:.1}", enn.mean / ecnn.mean);
    Ok(())
}
