use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use neurocorr::fem::FunctionSpace;
use neurocorr::grf::{assemble_prior_operator, sample, PriorConfig, PriorSampler};
use neurocorr::mesh::build_unit_square_quad;

fn space(n: usize) -> FunctionSpace {
    FunctionSpace::unconstrained(Arc::new(build_unit_square_quad(n).unwrap()))
}

fn node_at(s: &FunctionSpace, x: f64, y: f64) -> usize {
    (0..s.dim())
        .min_by(|&a, &b| {
            let da = (s.mesh().node(a)[0] - x).hypot(s.mesh().node(a)[1] - y);
            let db = (s.mesh().node(b)[0] - x).hypot(s.mesh().node(b)[1] - y);
            da.total_cmp(&db)
        })
        .unwrap()
}

fn correlation(samples: &[DVector<f64>], i: usize, j: usize) -> f64 {
    let n = samples.len() as f64;
    let mi = samples.iter().map(|s| s[i]).sum::<f64>() / n;
    let mj = samples.iter().map(|s| s[j]).sum::<f64>() / n;
    let cov = samples.iter().map(|s| (s[i] - mi) * (s[j] - mj)).sum::<f64>();
    let vi = samples.iter().map(|s| (s[i] - mi).powi(2)).sum::<f64>();
    let vj = samples.iter().map(|s| (s[j] - mj).powi(2)).sum::<f64>();
    cov / (vi * vj).sqrt()
}

#[test]
fn operator_is_symmetric_and_reduces_to_mass() {
    let s = space(8);
    let a = assemble_prior_operator(&s, &PriorConfig::default());
    assert!(a.asymmetry() <= 1e-12 * a.max_abs());
    let cfg = PriorConfig {
        gamma: 0.0,
        robin: 0.0,
        ..Default::default()
    };
    let a = assemble_prior_operator(&s, &cfg);
    for (x, y) in a.values().iter().zip(s.mass().values()) {
        assert!((x - 2.0 * y).abs() < 1e-15);
    }
}

#[test]
fn lanczos_ritz_values_are_positive() {
    let s = space(10);
    let a = assemble_prior_operator(&s, &PriorConfig::default());
    let steps = 20;
    let n = s.dim();
    let mut q_prev: DVector<f64> = DVector::zeros(n);
    let mut q = DVector::from_fn(n, |i, _| ((i * 7919) % 13) as f64 - 6.0);
    q /= q.norm();
    let mut t: DMatrix<f64> = DMatrix::zeros(steps, steps);
    let mut beta = 0.0;
    for k in 0..steps {
        let mut w: DVector<f64> = a.mul_vec(&q) - beta * &q_prev;
        let alpha = w.dot(&q);
        w -= alpha * &q;
        t[(k, k)] = alpha;
        beta = w.norm();
        if k + 1 < steps {
            t[(k, k + 1)] = beta;
            t[(k + 1, k)] = beta;
        }
        q_prev = std::mem::replace(&mut q, w / beta);
    }
    let ritz = t.symmetric_eigen().eigenvalues;
    assert!(ritz.min() > 0.0, "{ritz}");
}

#[test]
fn sampling_is_deterministic_per_seed() {
    let s = space(6);
    let cfg = PriorConfig {
        seed: 42,
        ..Default::default()
    };
    assert_eq!(sample(&s, &cfg, 3).unwrap(), sample(&s, &cfg, 3).unwrap());
    let other = PriorConfig { seed: 43, ..cfg };
    assert_ne!(sample(&s, &cfg, 1).unwrap(), sample(&s, &other, 1).unwrap());
    let sampler = PriorSampler::new(&s, &cfg).unwrap();
    assert_eq!(sampler.samples(2, 1).unwrap()[0], sample(&s, &cfg, 3).unwrap()[2]);
    assert!(sample(&s, &cfg, 0).is_err());
}

#[test]
fn samples_are_centered_and_correlation_decays() {
    let s = space(16);
    let cfg = PriorConfig {
        seed: 1,
        ..Default::default()
    };
    let samples = sample(&s, &cfg, 1000).unwrap();
    let n = samples.len() as f64;
    for (x, y) in [(0.5, 0.5), (0.1, 0.2), (0.9, 0.9), (0.3, 0.7), (0.0, 1.0)] {
        let i = node_at(&s, x, y);
        let mean = samples.iter().map(|v| v[i]).sum::<f64>() / n;
        let std = (samples.iter().map(|v| (v[i] - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!(mean.abs() <= 3.0 * std / n.sqrt(), "node {i}: mean {mean}, std {std}");
    }
    let c = node_at(&s, 0.5, 0.5);
    let near = node_at(&s, 0.5, 0.5625);
    let far = node_at(&s, 0.5, 1.0);
    assert!(correlation(&samples, c, near) > correlation(&samples, c, far));
}

#[test]
fn sum_of_independent_samples_doubles_variance() {
    let s = space(6);
    let a = PriorSampler::new(&s, &PriorConfig { seed: 10, ..Default::default() }).unwrap();
    let b = PriorSampler::new(&s, &PriorConfig { seed: 20, ..Default::default() }).unwrap();
    let draws = 2000;
    let xa = a.samples(0, draws).unwrap();
    let xb = b.samples(0, draws).unwrap();
    let var = |v: &[f64]| {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() as f64 - 1.0)
    };
    for node in [0, s.dim() / 2, s.dim() - 1] {
        let single: Vec<f64> = xa.iter().map(|v| v[node]).collect();
        let sum: Vec<f64> = xa.iter().zip(&xb).map(|(p, q)| p[node] + q[node]).collect();
        let ratio = var(&sum) / var(&single);
        assert!((ratio / 2.0 - 1.0).abs() <= 0.15, "node {node}: ratio {ratio}");
    }
}
