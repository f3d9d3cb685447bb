use super::*;
use crate::problems::{build_problem, ProblemSpec};

fn v(xs: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(xs)
}

fn problem(spec: ProblemSpec) -> Problem {
    build_problem(&spec).unwrap()
}

fn square() -> Problem {
    problem(ProblemSpec::Quadratic { diag: vec![2.0] })
}

fn recorded() -> StopCriteria {
    StopCriteria { record_points: true, ..StopCriteria::default() }
}

/// Descent over accepted steps, and rejected steps leave the iterate unchanged.
fn assert_trace_invariants(t: &Trace) {
    for w in t.rows.windows(2) {
        if w[0].accepted {
            assert!(w[1].f <= w[0].f * (1.0 + 1e-15) + 1e-300, "{}: f increased at k={}", t.solver, w[0].k);
        } else {
            assert_eq!(w[0].x, w[1].x);
            assert_eq!(w[0].f, w[1].f);
        }
    }
}

#[test]
fn gd_constant_step_on_square() {
    let t = run_gd(&square(), &v(&[1.0]), &GdConfig::Constant { gamma: 0.25 }, &recorded()).unwrap();
    assert!(t.converged());
    for w in t.rows.windows(2).take(15) {
        assert!((w[1].f / w[0].f - 0.25).abs() < 1e-12);
    }
    assert_trace_invariants(&t);
}

#[test]
fn gd_quartic_is_sublinear() {
    let stop = StopCriteria { max_iters: 1000, ..StopCriteria::default() };
    let t = run_gd(&problem(ProblemSpec::Quartic1d), &v(&[1.0]), &GdConfig::Constant { gamma: 0.1 }, &stop).unwrap();
    assert_eq!(t.termination, Termination::MaxIters);
    assert!(t.last().dist_s.unwrap() > 1e-3);
}

#[test]
fn gd_starts_at_critical_point() {
    let t = run_gd(&square(), &v(&[0.0]), &GdConfig::Constant { gamma: 0.25 }, &StopCriteria::default()).unwrap();
    assert_eq!(t.iterations(), 0);
    assert!(t.converged());
}

#[test]
fn armijo_gd_on_circle() {
    let cfg = GdConfig::Armijo { alpha_bar: 1.0, beta: 0.5, sigma_a: 0.1 };
    let t = run_gd(&problem(ProblemSpec::Circle), &v(&[1.2, 0.3]), &cfg, &recorded()).unwrap();
    assert!(t.converged(), "{:?}", t.termination);
    assert!(t.last().dist_s.unwrap() < 1e-12);
    assert_trace_invariants(&t);
}

#[test]
fn newton_examples() {
    let p = problem(ProblemSpec::Quadratic { diag: vec![3.0] });
    let t = run_newton(&p, &v(&[5.0]), &NewtonConfig::default(), &StopCriteria::default()).unwrap();
    assert_eq!(t.iterations(), 1);
    assert!(t.converged());

    let trap = problem(ProblemSpec::NewtonTrap);
    let stop = StopCriteria { max_iters: 1, ..StopCriteria::default() };
    let t = run_newton(&trap, &v(&[0.33f64.sqrt(), 0.1]), &NewtonConfig::default(), &stop).unwrap();
    assert!((t.rows[1].dist_s.unwrap() - 6.6).abs() < 1e-9);

    let stop = StopCriteria { max_iters: 40, ..StopCriteria::default() };
    let t = run_newton(&problem(ProblemSpec::Quartic1d), &v(&[1.0]), &NewtonConfig::default(), &stop).unwrap();
    for w in t.rows.windows(2) {
        assert!((w[1].dist_s.unwrap() / w[0].dist_s.unwrap() - 2.0 / 3.0).abs() < 1e-10);
    }
}

#[test]
fn c1_problems_are_rejected_by_second_order_solvers() {
    let p = problem(ProblemSpec::CrossC1);
    let x0 = v(&[0.3, 0.2]);
    let stop = StopCriteria::default();
    assert!(matches!(run_newton(&p, &x0, &NewtonConfig::default(), &stop), Err(Error::Precondition(_))));
    assert!(matches!(run_arc(&p, &x0, &ArcConfig::default(), &stop), Err(Error::Precondition(_))));
    assert!(matches!(run_rtr(&p, &x0, &RtrConfig::default(), &stop), Err(Error::Precondition(_))));
}

#[test]
fn arc_on_circle() {
    let p = problem(ProblemSpec::Circle);
    for mode in [CubicMode::ExactSecular, CubicMode::InexactGradient] {
        let cfg = ArcConfig { subsolver: mode, ..ArcConfig::default() };
        let t = run_arc(&p, &v(&[1.3, 0.4]), &cfg, &recorded()).unwrap();
        assert!(t.converged(), "{mode:?}: {:?}", t.termination);
        assert!((t.final_point.norm() - 1.0).abs() <= 1e-10);
        assert_trace_invariants(&t);
        // vanishing steps with the Hessian at each iterate
        for (r, w) in t.rows.iter().zip(t.rows.iter().skip(1)) {
            let _ = w;
            let x = r.x.as_ref().unwrap();
            let lmin = SortedEigen::new(&p.hess(x).unwrap()).min();
            let bound = crate::subsolvers::cubic_step_bound(r.grad_norm, lmin, cfg.sigma_min, 0.0);
            assert!(r.step_norm <= bound);
        }
    }
}

#[test]
fn arc_on_quadratic_is_eventually_always_successful() {
    let p = problem(ProblemSpec::Quadratic { diag: vec![2.0, 8.0] });
    let t = run_arc(&p, &v(&[1.0, -1.0]), &ArcConfig::default(), &StopCriteria::default()).unwrap();
    assert!(t.converged());
    let first_reject = t.rows.iter().rposition(|r| !r.accepted && r.ratio.is_some());
    let tail = &t.rows[first_reject.map_or(0, |i| i + 1)..t.rows.len() - 1];
    assert!(!tail.is_empty());
    assert!(tail.iter().all(|r| r.ratio.unwrap() >= 0.9));
}

#[test]
fn arc_at_minimizer_stops_immediately() {
    let t = run_arc(&problem(ProblemSpec::Circle), &v(&[0.0, 1.0]), &ArcConfig::default(), &StopCriteria::default())
        .unwrap();
    assert_eq!(t.iterations(), 0);
    assert_eq!(t.last().step_norm, 0.0);
}

#[test]
fn arc_with_perturbed_hessian_still_converges() {
    let cfg = ArcConfig { beta_h_budget: 0.5, perturb_seed: 3, ..ArcConfig::default() };
    let t = run_arc(&problem(ProblemSpec::Circle), &v(&[1.1, 0.2]), &cfg, &StopCriteria::default()).unwrap();
    assert!(t.converged());
}

#[test]
fn rtr_cauchy_on_aniso_quad() {
    let p = problem(ProblemSpec::AnisoQuad { a: 2.0, b: 8.0 });
    let stop = StopCriteria { max_iters: 2000, ..StopCriteria::default() };
    let t = run_rtr(&p, &v(&[0.0, 1.0, 1.0]), &RtrConfig::default(), &stop).unwrap();
    assert!(t.converged(), "{:?}", t.termination);
    assert!(t.last().grad_norm <= 1e-12);
    let d = t.dist_sequence().unwrap();
    let n = d.len();
    let ratio = (d[n - 1] / d[n - 11]).powf(0.1);
    assert!(ratio <= (1.0f64 - 2.0 / 8.0).sqrt() + 0.02, "{ratio}");
    assert_trace_invariants(&t);
}

#[test]
fn rtr_exact_jumps_along_the_circle() {
    let t0 = 0.01;
    let cfg = RtrConfig { delta0: 0.5, subsolver: TrsSubsolver::Exact, ..RtrConfig::default() };
    let t = run_rtr(&problem(ProblemSpec::Circle), &v(&[0.0, 1.0 - t0]), &cfg, &recorded()).unwrap();
    assert!((t.rows[0].step_norm - 0.5).abs() < 1e-12);
    // the step runs along the level set, far from the nearby minimizer, and is rejected
    let p = problem(ProblemSpec::Circle);
    let x0 = v(&[0.0, 1.0 - t0]);
    let md = ModelData::new(p.grad(&x0), p.hess(&x0).unwrap()).unwrap();
    let s0 = solve_trs_exact(&md, 0.5, 1e-12).unwrap().s;
    assert!(s0[0].abs() >= 0.49);
    assert!(!t.rows[0].accepted);
    assert!(t.converged());
}

#[test]
fn rtr_subsolvers_all_converge_on_circle() {
    let p = problem(ProblemSpec::Circle);
    for sub in [TrsSubsolver::Cauchy, TrsSubsolver::Exact, TrsSubsolver::Tcg] {
        let cfg = RtrConfig { subsolver: sub, ..RtrConfig::default() };
        let stop = StopCriteria { max_iters: 2000, record_points: true, ..StopCriteria::default() };
        let t = run_rtr(&p, &v(&[1.2, 0.1]), &cfg, &stop).unwrap();
        assert!(t.converged(), "{sub:?}: {:?}", t.termination);
        assert_trace_invariants(&t);
    }
}

#[test]
fn sphere_band_arc_stays_on_sphere() {
    let p = problem(ProblemSpec::SphereBand);
    let x0 = v(&[0.8, 0.0, 0.6]);
    let t = run_arc(&p, &x0, &ArcConfig::default(), &recorded()).unwrap();
    assert!(t.converged(), "{:?}", t.termination);
    for r in &t.rows {
        assert!((r.x.as_ref().unwrap().norm() - 1.0).abs() < 1e-12);
    }
    assert!(t.last().dist_s.unwrap() < 1e-10);
}

#[test]
fn csv_layout() {
    let t = run_gd(&square(), &v(&[1.0]), &GdConfig::Constant { gamma: 0.25 }, &StopCriteria::default()).unwrap();
    let csv = t.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    assert_eq!(lines.next(), Some("0,1,2,1,0.5,,0.25,true"));
    assert_eq!(csv.lines().count(), t.rows.len() + 1);
    assert!(csv.lines().last().unwrap().ends_with(",0,,,false"));
}

#[test]
fn invalid_configs_are_rejected() {
    let p = square();
    let x0 = v(&[1.0]);
    let stop = StopCriteria::default();
    assert!(run_gd(&p, &x0, &GdConfig::Constant { gamma: 0.0 }, &stop).is_err());
    let bad = GdConfig::Armijo { alpha_bar: 1.0, beta: 1.0, sigma_a: 0.1 };
    assert!(run_gd(&p, &x0, &bad, &stop).is_err());
    assert!(run_arc(&p, &x0, &ArcConfig { gamma_inc: 1.0, ..ArcConfig::default() }, &stop).is_err());
    assert!(run_rtr(&p, &x0, &RtrConfig { rho_prime: 0.3, ..RtrConfig::default() }, &stop).is_err());
    let bad_stop = StopCriteria { grad_tol: 0.0, ..stop };
    assert!(run_gd(&p, &x0, &GdConfig::Constant { gamma: 0.1 }, &bad_stop).is_err());
}

#[test]
fn dispatch_uses_label() {
    let cfg = SolverConfig::new(Method::Gd(GdConfig::Constant { gamma: 0.25 })).with_label("gd_const");
    let t = run(&square(), &v(&[1.0]), &cfg).unwrap();
    assert_eq!(t.solver, "gd_const");
}
