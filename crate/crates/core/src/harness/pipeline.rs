//! Experiment drivers shared by the command line, the examples and the tests.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use nalgebra::DVector;
use rayon::prelude::*;

use super::config::{ExperimentConfig, MeshSpec};
use super::dataset::Dataset;
use crate::corrector::{correct_many, CorrectorConfig};
use crate::error::{Error, Result};
use crate::fem::{CsrMatrix, FunctionSpace, ProblemDef, ProblemId};
use crate::grf::{transform_parameter, PriorConfig, PriorSampler};
use crate::mesh::{build_unit_square_quad, build_voided_square_tri, classify_boundary, import_gmsh_ascii, Domain, Mesh};
use crate::metrics::{percent_error, Summary};
use crate::network::{train, LossNorm, NetConfig, ReducedSet, Surrogate, TrainConfig, TrainHistory};
use crate::reduction::{spectrum_markers, Projector};
use crate::solver::{newton_solve, NewtonConfig};
use crate::topopt::{forward_for, outer_iteration, ForwardMode, MinimizerErrors, TopOptConfig, TopOptResult};

/// Header of the evaluation table.
pub const EVAL_HEADER: &str = "number,r_m,r_u,N,enn_min,enn_max,enn_mean,ecnn_min,ecnn_max,ecnn_mean";
/// Header of the minimizer error table.
pub const TOPOPT_ERRORS_HEADER: &str = "eps_nn,eps_cnn,e_nn,e_cnn";

/// Distance used to match imported boundary facets to the domain geometry.
const CLASSIFY_TOL: f64 = 1e-3;

pub fn domain_of(problem: ProblemId) -> Domain {
    match problem {
        ProblemId::P1 => Domain::UnitSquare,
        ProblemId::P2 => Domain::paper_voided(),
    }
}

pub fn build_mesh(spec: &MeshSpec, problem: ProblemId) -> Result<Mesh> {
    match spec {
        MeshSpec::UnitSquare { n } => build_unit_square_quad(*n),
        MeshSpec::Voided { h } => match domain_of(ProblemId::P2) {
            Domain::VoidedSquare { circles } => build_voided_square_tri(*h, &circles),
            Domain::UnitSquare => unreachable!(),
        },
        MeshSpec::Gmsh { path } => {
            let raw = import_gmsh_ascii(&std::fs::read_to_string(path)?)?;
            classify_boundary(&raw, &domain_of(problem), CLASSIFY_TOL)
        }
    }
}

/// Problem definition together with its discrete space.
#[derive(Debug)]
pub struct Setup {
    pub problem: ProblemDef,
    pub space: FunctionSpace,
}

impl Setup {
    pub fn from_mesh(problem: ProblemDef, mesh: Mesh) -> Self {
        let space = FunctionSpace::new(Arc::new(mesh), &problem.dirichlet_tags);
        Self { problem, space }
    }

    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let mesh = build_mesh(&cfg.mesh_spec(), cfg.problem)?;
        Ok(Self::from_mesh(ProblemDef::for_id(cfg.problem), mesh))
    }

    pub fn mesh(&self) -> &Mesh {
        self.space.mesh()
    }
}

/// Number of extra test samples for `n` training samples.
pub fn test_split_size(n: usize) -> usize {
    n / 4
}

/// Samples `start..start + count`: prior draw, parameter transform, Newton solve.
pub fn generate_dataset(
    setup: &Setup,
    prior: &PriorConfig,
    start: u64,
    count: usize,
    newton: &NewtonConfig,
) -> Result<Dataset> {
    if count == 0 {
        return Err(Error::invalid("sample count must be at least 1"));
    }
    let sampler = PriorSampler::new(&setup.space, prior)?;
    let u0 = setup.space.zeros();
    let pairs: Vec<(DVector<f64>, DVector<f64>)> = (start..start + count as u64)
        .into_par_iter()
        .map(|index| {
            let fail = |e: Error| Error::Sample {
                index,
                seed: prior.seed,
                message: e.to_string(),
            };
            let w = sampler.sample(index).map_err(fail)?;
            let m = transform_parameter(&w, setup.problem.id);
            let (u, _) = newton_solve(&setup.problem, &setup.space, &m, &u0, newton).map_err(fail)?;
            Ok((m, u))
        })
        .collect::<Result<_>>()?;
    let (ms, us): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
    Dataset::from_columns(&ms, &us)
}

/// Training split `0..N` and test split `N..N + ⌊0.25N⌋`.
pub fn generate_splits(setup: &Setup, prior: &PriorConfig, n: usize, newton: &NewtonConfig) -> Result<(Dataset, Dataset)> {
    let train = generate_dataset(setup, prior, 0, n, newton)?;
    let n_test = test_split_size(n).max(1);
    let test = generate_dataset(setup, prior, n as u64, n_test, newton)?;
    Ok((train, test))
}

pub fn fit_projectors(data: &Dataset, net: &NetConfig) -> Result<(Projector, Projector)> {
    Ok((Projector::from_data(data.m(), net.r_m)?, Projector::from_data(data.u(), net.r_u)?))
}

/// Weight matrix of the training loss, `M + K` for the H1 loss.
pub fn loss_weight(space: &FunctionSpace, loss: LossNorm) -> Option<CsrMatrix> {
    match loss {
        LossNorm::L2 => None,
        LossNorm::H1 => {
            let mut w = space.mass().clone();
            w.add_scaled(1.0, space.stiffness());
            Some(w)
        }
    }
}

pub fn train_surrogate(
    data: &Dataset,
    input: Projector,
    output: Projector,
    net: &NetConfig,
    cfg: &TrainConfig,
    weight: Option<&CsrMatrix>,
) -> Result<(Surrogate, TrainHistory)> {
    let reduced = ReducedSet::new(&input, &output, data.m(), data.u(), weight)?;
    let mut surrogate = Surrogate::init(*net, input, output, cfg.init_seed)?;
    let history = train(&mut surrogate, &reduced, cfg)?;
    Ok((surrogate, history))
}

/// Per-sample errors of the surrogate before and after correction.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalOutcome {
    pub enn: Vec<f64>,
    pub ecnn: Vec<f64>,
    pub residual_before: Vec<f64>,
    pub residual_after: Vec<f64>,
}

impl EvalOutcome {
    pub fn summaries(&self) -> Result<(Summary, Summary)> {
        let empty = || Error::invalid("evaluation set is empty");
        Ok((
            Summary::of(&self.enn).ok_or_else(empty)?,
            Summary::of(&self.ecnn).ok_or_else(empty)?,
        ))
    }

    pub fn samples_csv(&self) -> String {
        let mut s = String::from("sample,enn,ecnn,residual_before,residual_after\n");
        for i in 0..self.enn.len() {
            let _ = writeln!(
                s,
                "{i},{:e},{:e},{:e},{:e}",
                self.enn[i], self.ecnn[i], self.residual_before[i], self.residual_after[i]
            );
        }
        s
    }
}

/// Evaluate on the first `count` test samples (`0` = all).
pub fn evaluate_corrected(
    setup: &Setup,
    net: &Surrogate,
    test: &Dataset,
    count: usize,
    corrector: &CorrectorConfig,
) -> Result<EvalOutcome> {
    let test = if count == 0 { test.clone() } else { test.head(count)? };
    let ms = test.m_columns();
    let us = test.u_columns();
    let preds = net.forward_many(&ms)?;
    let corrected = correct_many(&setup.problem, &setup.space, &ms, &preds, corrector)?;
    let errors = |approx: Vec<&DVector<f64>>| -> Result<Vec<f64>> {
        us.iter().zip(approx).map(|(u, a)| percent_error(u, a)).collect()
    };
    Ok(EvalOutcome {
        enn: errors(preds.iter().collect())?,
        ecnn: errors(corrected.iter().map(|c| &c.u_c).collect())?,
        residual_before: corrected.iter().map(|c| c.residual_before).collect(),
        residual_after: corrected.iter().map(|c| c.residual_after).collect(),
    })
}

/// One row of the evaluation table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableRow {
    pub number: usize,
    pub r_m: usize,
    pub r_u: usize,
    pub n: usize,
    pub enn: Summary,
    pub ecnn: Summary,
}

impl TableRow {
    fn to_line(self) -> String {
        format!(
            "{},{},{},{},{:.5},{:.5},{:.5},{:.5},{:.5},{:.5}",
            self.number,
            self.r_m,
            self.r_u,
            self.n,
            self.enn.min,
            self.enn.max,
            self.enn.mean,
            self.ecnn.min,
            self.ecnn.max,
            self.ecnn.mean
        )
    }
}

pub fn table_csv(rows: &[TableRow]) -> String {
    let mut s = format!("{EVAL_HEADER}\n");
    for r in rows {
        s.push_str(&r.to_line());
        s.push('\n');
    }
    s
}

pub fn parse_table_csv(text: &str) -> Result<Vec<TableRow>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == EVAL_HEADER => {}
        _ => return Err(Error::parse(1, "unexpected evaluation table header")),
    }
    lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(k, l)| {
            let f: Vec<&str> = l.split(',').map(str::trim).collect();
            if f.len() != 10 {
                return Err(Error::parse(k + 1, "expected 10 columns"));
            }
            let int = |i: usize| f[i].parse::<usize>().map_err(|e| Error::parse(k + 1, e.to_string()));
            let real = |i: usize| f[i].parse::<f64>().map_err(|e| Error::parse(k + 1, e.to_string()));
            Ok(TableRow {
                number: int(0)?,
                r_m: int(1)?,
                r_u: int(2)?,
                n: int(3)?,
                enn: Summary {
                    min: real(4)?,
                    max: real(5)?,
                    mean: real(6)?,
                },
                ecnn: Summary {
                    min: real(7)?,
                    max: real(8)?,
                    mean: real(9)?,
                },
            })
        })
        .collect()
}

/// Normalized singular values with the indices nearest 0.1 and 0.01 marked.
pub fn spectrum_csv(projector: &Projector) -> String {
    let spectrum = projector.normalized_spectrum();
    let markers = spectrum_markers(&spectrum);
    let mut s = String::from("index,normalized,marker\n");
    for (i, v) in spectrum.iter().enumerate() {
        let mark = match markers {
            [Some(a), _] if a == i + 1 => "0.1",
            [_, Some(b)] if b == i + 1 => "0.01",
            _ => "",
        };
        let _ = writeln!(s, "{},{:e},{mark}", i + 1, v);
    }
    s
}

/// Run the optimization with the forward model for `mode`.
pub fn run_topopt(
    setup: &Setup,
    net: Option<&Surrogate>,
    mode: ForwardMode,
    cfg: &TopOptConfig,
    newton: &NewtonConfig,
    corrector: &CorrectorConfig,
) -> Result<TopOptResult> {
    let cfg = TopOptConfig { mode, ..*cfg };
    let mut forward = forward_for(mode, &setup.problem, &setup.space, net, *newton, *corrector)?;
    outer_iteration(&setup.problem, &setup.space, forward.as_mut(), &cfg)
}

pub fn topopt_errors_csv(e: &MinimizerErrors) -> String {
    format!(
        "{TOPOPT_ERRORS_HEADER}\n{:.5},{:.5},{:.5},{:.5}\n",
        e.eps_nn, e.eps_nn_c, e.e_nn, e.e_nn_c
    )
}

/// Error unless `path` exists, naming the command that produces it.
pub fn require(path: &Path, producer: &str) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "missing input {}; run `{producer}` first",
            path.display()
        )))
    }
}
