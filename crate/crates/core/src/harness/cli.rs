//! Command-line front end.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use nalgebra::DVector;

use super::config::ExperimentConfig;
use super::dataset::Dataset;
use super::pipeline::*;
use super::render::{extrema, nodal_csv, render_svg};
use crate::corrector::{correct, error_scaling_probe, estimate_qoi_error, fit_slope, probe_to_csv};
use crate::error::{Error, Result};
use crate::fem::{read_field, write_field, ProblemId};
use crate::grf::PriorSampler;
use crate::mesh::Mesh;
use crate::metrics::percent_error;
use crate::network::Surrogate;
use crate::reduction::{spectrum_markers, Projector};
use crate::topopt::{minimizer_errors, ForwardMode};

/// Exit code for success.
pub const EXIT_OK: i32 = 0;
/// Exit code for bad input, configuration or missing files.
pub const EXIT_USER: i32 = 1;
/// Exit code for numerical or internal failures.
pub const EXIT_INTERNAL: i32 = 2;

const PROBE_EPS: [f64; 6] = [1e-1, 5e-2, 2e-2, 1e-2, 5e-3, 3e-3];

#[derive(Debug, Parser)]
#[command(name = "neurocorr", version, about = "Neural-operator surrogates with a one-step Newton corrector")]
pub struct Cli {
    /// Experiment configuration (TOML); defaults apply when omitted.
    #[arg(short, long, global = true)]
    pub config: Option<PathBuf>,
    /// Override a configuration entry, e.g. `--set network.r_m=100`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the mesh and write it as text and Gmsh.
    GenMesh,
    /// Sample parameters, solve, write train and test datasets.
    GenData,
    /// Compute projectors and normalized spectra from the training data.
    Svd,
    /// Train the surrogate on the reduced training data.
    Train,
    /// Evaluate surrogate and corrected errors on the test data.
    Eval,
    /// Correct one test prediction and dump the fields.
    Correct {
        #[arg(long)]
        sample: Option<usize>,
    },
    /// Measure the corrector's error scaling around one test solution.
    Probe {
        #[arg(long)]
        sample: Option<usize>,
    },
    /// Run the topology optimization (`fem`, `nn`, `nn_corrected` or `all`).
    Topopt {
        #[arg(long, default_value = "all")]
        mode: String,
    },
    /// Render a field dump as SVG and CSV.
    Render {
        #[arg(long)]
        field: PathBuf,
        /// Mesh text file; defaults to `mesh.txt` in the output directory.
        #[arg(long)]
        mesh: Option<PathBuf>,
    },
    /// Collect evaluation rows and spectra into summary tables.
    Report,
}

/// Run the command line with `args` (including the program name); returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USER } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_user_error() {
                EXIT_USER
            } else {
                EXIT_INTERNAL
            }
        }
    }
}

/// Artifact locations inside the output directory.
#[derive(Debug, Clone)]
pub struct Artifacts {
    pub dir: PathBuf,
}

impl Artifacts {
    pub fn file(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn eval_name(cfg: &ExperimentConfig) -> String {
        format!("eval_rm{}_ru{}_n{}.csv", cfg.network.r_m, cfg.network.r_u, cfg.data.n_samples)
    }
}

pub fn execute(cli: &Cli) -> Result<()> {
    let cfg = ExperimentConfig::load(cli.config.as_deref(), &cli.overrides)?;
    fs::create_dir_all(&cfg.output_dir)?;
    let out = Artifacts {
        dir: cfg.output_dir.clone(),
    };
    fs::write(out.file("config.toml"), cfg.to_toml())?;
    match &cli.command {
        Command::GenMesh => gen_mesh(&cfg, &out),
        Command::GenData => gen_data(&cfg, &out),
        Command::Svd => svd(&out, &cfg),
        Command::Train => train_cmd(&cfg, &out),
        Command::Eval => eval(&cfg, &out),
        Command::Correct { sample } => correct_cmd(&cfg, &out, sample.unwrap_or(cfg.eval.sample)),
        Command::Probe { sample } => probe(&cfg, &out, sample.unwrap_or(cfg.eval.sample)),
        Command::Topopt { mode } => topopt(&cfg, &out, mode),
        Command::Render { field, mesh } => render(&cfg, &out, field, mesh.as_deref()),
        Command::Report => report(&out),
    }
}

fn gen_mesh(cfg: &ExperimentConfig, out: &Artifacts) -> Result<()> {
    let mesh = build_mesh(&cfg.mesh_spec(), cfg.problem)?;
    fs::write(out.file("mesh.txt"), mesh.to_text())?;
    fs::write(out.file("mesh.msh"), mesh.to_gmsh_ascii())?;
    println!(
        "mesh: {} nodes, {} {} elements, {} boundary facets",
        mesh.node_count(),
        mesh.element_count(),
        mesh.kind().name(),
        mesh.facets().len()
    );
    Ok(())
}

fn gen_data(cfg: &ExperimentConfig, out: &Artifacts) -> Result<()> {
    let setup = Setup::new(cfg)?;
    fs::write(out.file("mesh.txt"), setup.mesh().to_text())?;
    let (train, test) = generate_splits(&setup, &cfg.prior, cfg.data.n_samples, &cfg.solver.newton())?;
    train.write(&out.file("train.nod"))?;
    test.write(&out.file("test.nod"))?;
    println!(
        "data: {} training and {} test samples, q = {} (seed {})",
        train.len(),
        test.len(),
        train.q_u(),
        cfg.prior.seed
    );
    Ok(())
}

fn read_data(out: &Artifacts, name: &str) -> Result<Dataset> {
    let path = out.file(name);
    require(&path, "neurocorr gen-data")?;
    Dataset::read(&path)
}

fn svd(out: &Artifacts, cfg: &ExperimentConfig) -> Result<()> {
    let train = read_data(out, "train.nod")?;
    let (pm, pu) = fit_projectors(&train, &cfg.network)?;
    pm.write(&out.file("proj_m.txt"))?;
    pu.write(&out.file("proj_u.txt"))?;
    for (name, p) in [("m", &pm), ("u", &pu)] {
        fs::write(out.file(&format!("spectrum_{name}.csv")), spectrum_csv(p))?;
        let [a, b] = spectrum_markers(&p.normalized_spectrum());
        println!("{name}: rank {}, index near 0.1: {a:?}, near 0.01: {b:?}", p.rank());
    }
    Ok(())
}

fn read_projectors(out: &Artifacts) -> Result<(Projector, Projector)> {
    let (pm, pu) = (out.file("proj_m.txt"), out.file("proj_u.txt"));
    require(&pm, "neurocorr svd")?;
    require(&pu, "neurocorr svd")?;
    Ok((Projector::read(&pm)?, Projector::read(&pu)?))
}

fn read_model(out: &Artifacts) -> Result<Surrogate> {
    let (pm, pu) = read_projectors(out)?;
    let path = out.file("model.txt");
    require(&path, "neurocorr train")?;
    Surrogate::read(&path, pm, pu)
}

fn train_cmd(cfg: &ExperimentConfig, out: &Artifacts) -> Result<()> {
    let train = read_data(out, "train.nod")?;
    let (pm, pu) = read_projectors(out)?;
    if pm.rank() != cfg.network.r_m || pu.rank() != cfg.network.r_u {
        return Err(Error::Config(format!(
            "projector ranks ({}, {}) differ from the configured ({}, {}); rerun `neurocorr svd`",
            pm.rank(),
            pu.rank(),
            cfg.network.r_m,
            cfg.network.r_u
        )));
    }
    let weight = match cfg.train.loss {
        crate::network::LossNorm::L2 => None,
        loss => loss_weight(&Setup::new(cfg)?.space, loss),
    };
    let (net, history) = train_surrogate(&train, pm, pu, &cfg.network, &cfg.train, weight.as_ref())?;
    net.write(&out.file("model.txt"))?;
    fs::write(out.file("train_history.csv"), history.to_csv())?;
    let last = history.epochs.last().expect("history holds the initial epoch");
    println!(
        "train: {} epochs, best epoch {}, final training loss {:e}",
        last.epoch, history.best_epoch, last.train_loss
    );
    Ok(())
}

fn eval(cfg: &ExperimentConfig, out: &Artifacts) -> Result<()> {
    let setup = Setup::new(cfg)?;
    let net = read_model(out)?;
    let test = read_data(out, "test.nod")?;
    let outcome = evaluate_corrected(&setup, &net, &test, cfg.eval.n_samples, &cfg.solver.corrector())?;
    let (enn, ecnn) = outcome.summaries()?;
    let row = TableRow {
        number: 1,
        r_m: cfg.network.r_m,
        r_u: cfg.network.r_u,
        n: cfg.data.n_samples,
        enn,
        ecnn,
    };
    let name = Artifacts::eval_name(cfg);
    fs::write(out.file(&name), table_csv(&[row]))?;
    fs::write(out.file(&name.replace("eval_", "eval_samples_")), outcome.samples_csv())?;
    println!(
        "eval: mean e_NN {:.5}%, mean corrected {:.5}% over {} samples",
        enn.mean,
        ecnn.mean,
        outcome.enn.len()
    );
    Ok(())
}

fn test_sample(out: &Artifacts, k: usize) -> Result<(DVector<f64>, DVector<f64>)> {
    let test = read_data(out, "test.nod")?;
    if k >= test.len() {
        return Err(Error::Config(format!("sample {k} is outside the {} test samples", test.len())));
    }
    Ok((test.m().column(k).clone_owned(), test.u().column(k).clone_owned()))
}

fn correct_cmd(cfg: &ExperimentConfig, out: &Artifacts, k: usize) -> Result<()> {
    let setup = Setup::new(cfg)?;
    let net = read_model(out)?;
    let (m, u) = test_sample(out, k)?;
    let u_nn = net.forward(&m)?;
    let c = correct(&setup.problem, &setup.space, &m, &u_nn, &cfg.solver.corrector())?;
    for (name, v) in [("m", &m), ("u", &u), ("u_nn", &u_nn), ("u_corr", &c.u_c), ("update", &c.update)] {
        write_field(&out.file(&format!("{name}_{k}.field")), v)?;
    }
    let mut csv = String::from("sample,enn,ecnn,residual_before,residual_after,linear_iterations");
    let mut row = format!(
        "{k},{:e},{:e},{:e},{:e},{}",
        percent_error(&u, &u_nn)?,
        percent_error(&u, &c.u_c)?,
        c.residual_before,
        c.residual_after,
        c.linear_iterations
    );
    if setup.problem.id == ProblemId::P2 {
        let estimate = estimate_qoi_error(&setup.problem, &setup.space, &m, &u_nn, &cfg.solver.corrector())?;
        let actual = crate::topopt::compliance(&setup.problem, &setup.space, &u)?
            - crate::topopt::compliance(&setup.problem, &setup.space, &u_nn)?;
        csv.push_str(",qoi_error,qoi_estimate");
        row.push_str(&format!(",{actual:e},{estimate:e}"));
    }
    fs::write(out.file(&format!("correct_{k}.csv")), format!("{csv}\n{row}\n"))?;
    println!("{csv}\n{row}");
    Ok(())
}

fn probe(cfg: &ExperimentConfig, out: &Artifacts, k: usize) -> Result<()> {
    let setup = Setup::new(cfg)?;
    let (m, u) = test_sample(out, k)?;
    let prior = crate::grf::PriorConfig {
        seed: cfg.eval.probe_seed,
        ..cfg.prior
    };
    let mut w = PriorSampler::new(&setup.space, &prior)?.sample(0)?;
    setup.space.zero_dirichlet(&mut w);
    let rows = error_scaling_probe(&setup.problem, &setup.space, &m, &u, &w, &PROBE_EPS, &cfg.solver.corrector())?;
    fs::write(out.file(&format!("probe_{k}.csv")), probe_to_csv(&rows))?;
    println!("probe: fitted slope {:.4}", fit_slope(&rows));
    Ok(())
}

fn topopt(cfg: &ExperimentConfig, out: &Artifacts, mode: &str) -> Result<()> {
    let modes: Vec<ForwardMode> = if mode == "all" {
        ForwardMode::ALL.to_vec()
    } else {
        vec![mode.parse()?]
    };
    let setup = Setup::new(cfg)?;
    if setup.problem.id != ProblemId::P2 {
        return Err(Error::Config("topology optimization needs problem p2".into()));
    }
    let net = if modes.iter().any(|&m| m != ForwardMode::Fem) {
        Some(read_model(out)?)
    } else {
        None
    };
    let mut results = Vec::new();
    for mode in modes {
        let r = run_topopt(
            &setup,
            net.as_ref(),
            mode,
            &cfg.topopt,
            &cfg.solver.newton(),
            &cfg.solver.corrector(),
        )?;
        fs::write(out.file(&format!("topopt_{mode}_history.csv")), r.history_csv())?;
        write_field(&out.file(&format!("topopt_{mode}_m.field")), &r.m)?;
        write_field(&out.file(&format!("topopt_{mode}_u.field")), &r.u)?;
        let last = r.history.last().expect("history holds the initial state");
        println!(
            "topopt {mode}: {} outer steps, converged {}, J = {:e}, average {:.5}",
            r.history.len() - 1,
            r.converged,
            last.compliance,
            last.volume_average
        );
        results.push((mode, r));
    }
    if let [(_, fem), (_, nn), (_, nnc)] = results.as_slice() {
        let errors = minimizer_errors(fem, nn, nnc)?;
        let csv = topopt_errors_csv(&errors);
        fs::write(out.file("topopt_errors.csv"), &csv)?;
        print!("{csv}");
    }
    Ok(())
}

fn render(cfg: &ExperimentConfig, out: &Artifacts, field: &Path, mesh: Option<&Path>) -> Result<()> {
    let values = read_field(field)?;
    let mesh = match mesh {
        Some(p) => Mesh::from_text(&fs::read_to_string(p)?)?,
        None if out.file("mesh.txt").exists() => Mesh::from_text(&fs::read_to_string(out.file("mesh.txt"))?)?,
        None => build_mesh(&cfg.mesh_spec(), cfg.problem)?,
    };
    let stem = field
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("field")
        .to_string();
    fs::write(out.file(&format!("{stem}.svg")), render_svg(&mesh, &values, &stem)?)?;
    fs::write(out.file(&format!("{stem}.csv")), nodal_csv(&mesh, &values)?)?;
    let (lo, hi) = extrema(&values);
    println!("render: {stem} (min {lo:e}, max {hi:e})");
    Ok(())
}

fn report(out: &Artifacts) -> Result<()> {
    let mut names: Vec<String> = fs::read_dir(&out.dir)?
        .filter_map(|e| e.ok())
        .filter_map(|e| e.file_name().into_string().ok())
        .filter(|n| n.starts_with("eval_rm") && n.ends_with(".csv"))
        .collect();
    names.sort();
    let mut rows = Vec::new();
    for name in &names {
        rows.extend(parse_table_csv(&fs::read_to_string(out.file(name))?)?);
    }
    rows.sort_by_key(|r| (r.r_m, r.r_u, r.n));
    for (i, r) in rows.iter_mut().enumerate() {
        r.number = i + 1;
    }
    let table = table_csv(&rows);
    fs::write(out.file("table1.csv"), &table)?;
    print!("{table}");
    for name in ["spectrum_m.csv", "spectrum_u.csv"] {
        if let Ok(text) = fs::read_to_string(out.file(name)) {
            for line in text.lines().filter(|l| l.ends_with(",0.1") || l.ends_with(",0.01")) {
                println!("{name}: {line}");
            }
        }
    }
    if let Ok(text) = fs::read_to_string(out.file("topopt_errors.csv")) {
        print!("{text}");
    }
    Ok(())
}
