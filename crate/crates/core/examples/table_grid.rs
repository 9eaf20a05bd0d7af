//! Evaluation table over the rank pairs and training-set sizes, on a coarse
//! mesh so that the whole grid runs in a few minutes.
//!
//! `cargo run --release --example table_grid [n_mesh] [max_samples]`

use neurocorr::corrector::CorrectorConfig;
use neurocorr::fem::ProblemDef;
use neurocorr::grf::PriorConfig;
use neurocorr::harness::{evaluate_corrected, fit_projectors, generate_dataset, table_csv, test_split_size, train_surrogate, Dataset, Setup, TableRow};
use neurocorr::mesh::build_unit_square_quad;
use neurocorr::network::{NetConfig, TrainConfig};
use neurocorr::solver::NewtonConfig;

fn slice(pool: &Dataset, start: usize, count: usize) -> neurocorr::Result<Dataset> {
    Dataset::new(
        pool.m().columns(start, count).clone_owned(),
        pool.u().columns(start, count).clone_owned(),
    )
}

fn main() -> neurocorr::Result<()> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<usize>().expect("integer argument"));
    let n_mesh = args.next().unwrap_or(16);
    let max_n = args.next().unwrap_or(1024);
    let sizes: Vec<usize> = [256, 512, 1024, 2048, 4096].into_iter().filter(|&n| n <= max_n).collect();
    let largest = *sizes.last().expect("max_samples must be at least 256");

    let setup = Setup::from_mesh(ProblemDef::p1(), build_unit_square_quad(n_mesh)?);
    let pool = generate_dataset(&setup, &PriorConfig::default(), 0, largest + test_split_size(largest), &NewtonConfig::default())?;

    let mut rows = Vec::new();
    for (r_m, r_u) in [(50, 25), (50, 50), (100, 25), (100, 50)] {
        for &n in &sizes {
            let train = slice(&pool, 0, n)?;
            let test = slice(&pool, n, test_split_size(n))?;
            let net = NetConfig { r_m, r_u, ..Default::default() };
            let (pm, pu) = fit_projectors(&train, &net)?;
            let (surrogate, _) = train_surrogate(&train, pm, pu, &net, &TrainConfig::default(), None)?;
            let (enn, ecnn) = evaluate_corrected(&setup, &surrogate, &test, 0, &CorrectorConfig::default())?.summaries()?;
            rows.push(TableRow { number: rows.len() + 1, r_m, r_u, n, enn, ecnn });
            eprintln!("({r_m}, {r_u}) N = {n}: {:.3}% -> {:.4}%", enn.mean, ecnn.mean);
        }
    }
    print!("{}", table_csv(&rows));
    Ok(())
}
