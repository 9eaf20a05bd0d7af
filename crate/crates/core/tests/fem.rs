use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DVector;
use neurocorr::fem::*;
use neurocorr::mesh::{build_unit_square_quad, build_voided_square_tri, BoundaryTag, Domain};
use neurocorr::solver::{newton_solve, solve_linear, LinearSolveConfig, NewtonConfig};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn square(n: usize, problem: &ProblemDef) -> FunctionSpace {
    FunctionSpace::new(Arc::new(build_unit_square_quad(n).unwrap()), &problem.dirichlet_tags)
}

fn voided(h: f64) -> FunctionSpace {
    let Domain::VoidedSquare { circles } = Domain::paper_voided() else { unreachable!() };
    let mesh = build_voided_square_tri(h, &circles).unwrap();
    FunctionSpace::new(Arc::new(mesh), &ProblemDef::p2().dirichlet_tags)
}

fn random_field(space: &FunctionSpace, rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> DVector<f64> {
    DVector::from_fn(space.dim(), |_, _| rng.random_range(lo..hi))
}

fn random_free(space: &FunctionSpace, rng: &mut ChaCha8Rng) -> DVector<f64> {
    let mut v = random_field(space, rng, -1.0, 1.0);
    space.zero_dirichlet(&mut v);
    v
}

#[test]
fn residual_at_zero_is_minus_load() {
    let p1 = ProblemDef::p1();
    let s1 = square(6, &p1);
    let r = assemble_residual(&p1, &s1, &s1.zeros(), &s1.zeros()).unwrap();
    let load = assemble_load(&p1, &s1);
    for i in 0..s1.dim() {
        let expected = if s1.is_dirichlet(i) { 0.0 } else { -load[i] };
        assert!((r[i] - expected).abs() < 1e-15);
    }
    // load integrates f against the partition of unity
    let total_f = integrate_field(&s1, &s1.zeros(), |x, _, _| Source::Gaussian.eval(x));
    assert!((load.sum() - total_f).abs() < 1e-13);

    let p2 = ProblemDef::p2();
    let s2 = voided(0.05);
    let m = DVector::from_element(s2.dim(), 0.25);
    let r = assemble_residual(&p2, &s2, &m, &s2.zeros()).unwrap();
    let ones = DVector::from_element(s2.dim(), 1.0);
    let bmass = assemble_boundary_mass(&s2, Some(&[BoundaryTag::GammaOut]));
    let expected = -0.1 * bmass.mul_vec(&ones);
    for i in 0..s2.dim() {
        if !s2.is_dirichlet(i) {
            assert!((r[i] - expected[i]).abs() < 1e-15);
        }
    }
    assert!((r.sum() + 0.4).abs() < 1e-12);
}

#[test]
fn jacobian_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for (problem, space) in [(ProblemDef::p1(), square(5, &ProblemDef::p1())), (ProblemDef::p2(), voided(0.05))] {
        let m = match problem.id {
            ProblemId::P1 => random_field(&space, &mut rng, -1.0, 1.0),
            ProblemId::P2 => random_field(&space, &mut rng, 0.1, 1.0),
        };
        let u = random_free(&space, &mut rng);
        let p = random_free(&space, &mut rng);
        let eps = 1e-6;
        let r0 = assemble_residual(&problem, &space, &m, &u).unwrap();
        let r1 = assemble_residual(&problem, &space, &m, &(&u + eps * &p)).unwrap();
        let fd = (r1 - r0) / eps;
        let jac = assemble_jacobian(&problem, &space, &m, &u).unwrap();
        let jp = jac.mul_vec(&p);
        assert!((&fd - &jp).norm() <= 1e-4 * jp.norm(), "{}", (&fd - &jp).norm() / jp.norm());
        assert!(jac.asymmetry() <= 1e-12 * jac.max_abs());
    }
}

#[test]
fn jacobian_at_zero_state_is_weighted_stiffness() {
    let problem = ProblemDef::p1();
    let space = square(4, &problem);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let m = random_field(&space, &mut rng, -0.5, 0.5);
    let jac = assemble_jacobian_unconstrained(&problem, &space, &m, &space.zeros()).unwrap();
    let x = random_field(&space, &mut rng, -1.0, 1.0);
    let em = m.map(f64::exp);
    let approx = assemble_stiffness(&space, Coefficient::Nodal(&em));
    // nodal interpolation of e^m differs from e^(interpolated m) only at O(h²)
    let rel = (jac.quadratic_form(&x) - approx.quadratic_form(&x)).abs() / jac.quadratic_form(&x);
    assert!(rel < 0.05, "{rel}");
    let ident = assemble_jacobian_unconstrained(&problem, &space, &space.zeros(), &space.zeros()).unwrap();
    let k = assemble_stiffness(&space, Coefficient::Constant(1.0));
    for (a, b) in ident.values().iter().zip(k.values()) {
        assert!((a - b).abs() < 1e-14);
    }
}

#[test]
fn second_derivative_checks() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let problem = ProblemDef::p1();
    let space = square(5, &problem);
    let m = random_field(&space, &mut rng, -1.0, 1.0);
    let u = random_free(&space, &mut rng);
    let p = random_free(&space, &mut rng);
    let q = random_free(&space, &mut rng);
    let zero = apply_second_derivative(&problem, &space, &m, &space.zeros(), &p, &q).unwrap();
    assert_eq!(zero.norm(), 0.0);
    let pq = apply_second_derivative(&problem, &space, &m, &u, &p, &q).unwrap();
    let qp = apply_second_derivative(&problem, &space, &m, &u, &q, &p).unwrap();
    assert_eq!(pq, qp);
    let eps = 1e-5;
    let j0 = assemble_jacobian(&problem, &space, &m, &u).unwrap();
    let j1 = assemble_jacobian(&problem, &space, &m, &(&u + eps * &q)).unwrap();
    let fd = (j1.mul_vec(&p) - j0.mul_vec(&p)) / eps;
    assert!((&fd - &pq).norm() <= 1e-4 * pq.norm());
}

#[test]
fn mass_and_stiffness_properties() {
    let space = square(7, &ProblemDef::p1());
    assert!((space.mass().row_sums().sum() - 1.0).abs() < 1e-12);
    assert!((space.lumped_mass().sum() - 1.0).abs() < 1e-12);
    let ones = DVector::from_element(space.dim(), 1.0);
    assert!(space.stiffness().mul_vec(&ones).amax() < 1e-12);
    assert!(space.mass().asymmetry() <= 1e-12 * space.mass().max_abs());

    let holes = 1.0 - PI * (0.1f64.powi(2) + 0.2f64.powi(2));
    let mut previous = f64::INFINITY;
    for h in [0.05, 0.025] {
        let s = voided(h);
        let err = (s.measure() - holes).abs();
        assert!(err < 2.0 * h * h, "h = {h}: area error {err}");
        assert!(err < previous);
        previous = err;
    }
}

#[test]
fn boundary_integral_and_norms() {
    let s = voided(0.05);
    let ones = DVector::from_element(s.dim(), 1.0);
    assert!((boundary_integral(&s, &ones, BoundaryTag::GammaOut, 0.1).unwrap() - 0.4).abs() < 1e-12);
    assert_eq!(boundary_integral(&s, &s.zeros(), BoundaryTag::GammaOut, 0.1).unwrap(), 0.0);
    let sq = square(4, &ProblemDef::p1());
    let ones = DVector::from_element(sq.dim(), 1.0);
    assert!(boundary_integral(&sq, &ones, BoundaryTag::GammaIn, 1.0).is_err());

    let mut e = sq.zeros();
    e[3] = 1.0;
    assert_eq!(norm(&sq, &e, NormKind::L2Coeff), 1.0);
    let c = DVector::from_element(sq.dim(), -2.5);
    assert!((norm(&sq, &c, NormKind::L2) - 2.5).abs() < 1e-12);
    assert!((norm(&sq, &c, NormKind::H1) - 2.5).abs() < 1e-12);
}

#[test]
fn space_mismatch_and_nonfinite_are_rejected() {
    let problem = ProblemDef::p1();
    let space = square(3, &problem);
    let short = DVector::zeros(space.dim() - 1);
    assert!(assemble_residual(&problem, &space, &short, &space.zeros()).is_err());
    let mut bad = space.zeros();
    bad[0] = f64::NAN;
    assert!(assemble_residual(&problem, &space, &space.zeros(), &bad).is_err());
    assert!(assemble_jacobian(&problem, &space, &bad, &space.zeros()).is_err());
}

#[test]
fn newton_converges_and_fixed_point_returns_immediately() {
    let problem = ProblemDef::p1();
    let space = square(16, &problem);
    let m = space.zeros();
    let cfg = NewtonConfig::default();
    let (u, stats) = newton_solve(&problem, &space, &m, &space.zeros(), &cfg).unwrap();
    assert!(stats.updates() <= 10, "{:?}", stats.residuals);
    assert!(stats.final_residual() <= cfg.residual_tol);
    for w in stats.residuals.windows(2) {
        assert!(w[1] <= w[0]);
    }
    for &d in space.dirichlet_dofs() {
        assert_eq!(u[d], 0.0);
    }
    let (u2, stats2) = newton_solve(&problem, &space, &m, &u, &cfg).unwrap();
    assert_eq!(stats2.updates(), 0);
    assert_eq!(u2, u);
    let (u3, stats3) = newton_solve(&problem, &space, &m, &space.zeros(), &cfg).unwrap();
    assert_eq!(u3, u);
    assert_eq!(stats3, stats);
}

#[test]
fn linear_problem_needs_one_update() {
    let problem = ProblemDef::p1().with_alpha(0.0);
    let space = square(8, &problem);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let m = random_field(&space, &mut rng, -1.0, 1.0);
    let u0 = random_field(&space, &mut rng, -3.0, 3.0);
    let cfg = NewtonConfig {
        residual_tol: 1e-9,
        linear: LinearSolveConfig {
            rel_tol: 1e-13,
            ..Default::default()
        },
        ..Default::default()
    };
    let (_, stats) = newton_solve(&problem, &space, &m, &u0, &cfg).unwrap();
    assert_eq!(stats.updates(), 1, "{:?}", stats.residuals);
}

#[test]
fn voided_problem_solves() {
    let problem = ProblemDef::p2();
    let space = voided(0.05);
    let m = DVector::from_element(space.dim(), 0.25);
    let (u, stats) = newton_solve(&problem, &space, &m, &space.zeros(), &NewtonConfig::default()).unwrap();
    assert!(stats.updates() <= 10);
    let boundary = boundary_integral(&space, &u, BoundaryTag::GammaOut, P2_FLUX).unwrap();
    let volume = energy_identity_volume(&problem, &space, &m, &u).unwrap();
    assert!((boundary - volume).abs() <= 1e-6 * boundary.abs());
    let below = DVector::from_element(space.dim(), 1e-4);
    assert!(newton_solve(&problem, &space, &below, &space.zeros(), &NewtonConfig::default()).is_err());
}

#[test]
fn jacobian_is_positive_definite() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let problem = ProblemDef::p2();
    let space = voided(0.05);
    let m = random_field(&space, &mut rng, M_LOWER, 1.0);
    let u = random_free(&space, &mut rng);
    let jac = assemble_jacobian(&problem, &space, &m, &u).unwrap();
    let b = random_field(&space, &mut rng, -1.0, 1.0);
    let sol = solve_linear(&jac, &b, &Default::default()).unwrap();
    assert!(sol.relative_residual <= 1e-10);
}

#[test]
fn manufactured_solution_converges_at_second_order() {
    let problem = ProblemDef::p1_manufactured();
    let mut errors = Vec::new();
    for n in [8, 16, 32] {
        let space = square(n, &problem);
        let (u, _) = newton_solve(&problem, &space, &space.zeros(), &space.zeros(), &NewtonConfig::default()).unwrap();
        let err = integrate_field(&space, &u, |x, v, _| (v - manufactured_exact(x)).powi(2)).sqrt();
        errors.push(err);
    }
    for w in errors.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order >= 1.9, "{errors:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn jacobian_symmetric_for_random_states(seed in 0u64..1000, n in 2usize..6) {
        let problem = ProblemDef::p1();
        let space = square(n, &problem);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_field(&space, &mut rng, -2.0, 2.0);
        let u = random_field(&space, &mut rng, -2.0, 2.0);
        let jac = assemble_jacobian(&problem, &space, &m, &u).unwrap();
        prop_assert!(jac.asymmetry() <= 1e-12 * jac.max_abs());
        let jac2 = assemble_jacobian(&problem, &space, &m, &u).unwrap();
        prop_assert_eq!(jac.values(), jac2.values());
    }

    #[test]
    fn dirichlet_dofs_sorted_unique(n in 1usize..12) {
        let space = square(n, &ProblemDef::p1());
        let d = space.dirichlet_dofs();
        prop_assert_eq!(d.len(), n + 1);
        prop_assert!(d.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(d.iter().all(|&i| i < space.dim()));
    }

    #[test]
    fn constant_field_norms(c in -10.0f64..10.0, n in 1usize..8) {
        let space = square(n, &ProblemDef::p1());
        let v = DVector::from_element(space.dim(), c);
        prop_assert!((norm(&space, &v, NormKind::L2) - c.abs()).abs() < 1e-11);
        prop_assert!((norm(&space, &v, NormKind::H1) - c.abs()).abs() < 1e-11);
    }
}
