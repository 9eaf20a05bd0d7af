//! Drive the command-line pipeline in-process on a small voided-square
//! experiment, from data generation to the summary tables.
//!
//! `cargo run --release --example cli_pipeline [output_dir]`

fn main() {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| std::env::temp_dir().join("neurocorr-demo").display().to_string());
    let common = [
        "--set".to_string(),
        format!("output_dir={out}"),
        "--set".into(),
        "problem=p2".into(),
        "--set".into(),
        "mesh.kind=voided".into(),
        "--set".into(),
        "mesh.h=0.04".into(),
        "--set".into(),
        "data.n_samples=128".into(),
        "--set".into(),
        "train.epochs=300".into(),
    ];
    let steps: [&[&str]; 7] = [
        &["gen-data"],
        &["svd"],
        &["train"],
        &["eval"],
        &["probe"],
        &["topopt", "--mode", "all"],
        &["report"],
    ];
    for step in steps {
        let args = std::iter::once("neurocorr".to_string())
            .chain(step.iter().map(|s| s.to_string()))
            .chain(common.iter().cloned());
        let code = neurocorr::harness::cli::run(args);
        if code != 0 {
            eprintln!("step {step:?} failed with exit code {code}");
            std::process::exit(code);
        }
    }
    println!("artifacts in {out}");
}
