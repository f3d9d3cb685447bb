use super::*;
use crate::problems::{build_problem, ProblemSpec};

fn problem(spec: ProblemSpec) -> Problem {
    build_problem(&spec).unwrap()
}

fn region(center: &[f64], r_inner: f64, r_outer: f64, n: usize) -> RegionSpec {
    RegionSpec::new(center, r_inner, r_outer, n, 7)
}

#[test]
fn region_validation() {
    let p = problem(ProblemSpec::Circle);
    assert!(sample_region(&p, &region(&[1.0, 0.0], 0.2, 0.1, 500)).is_err());
    assert!(sample_region(&p, &region(&[1.0, 0.0], 0.0, 0.1, 50)).is_err());
    let pts = sample_region(&p, &region(&[1.0, 0.0], 0.05, 0.1, 500)).unwrap();
    assert_eq!(pts.len(), 500);
    for x in &pts {
        let r = (x - DVector::from_column_slice(&[1.0, 0.0])).norm();
        assert!((0.05..=0.1 + 1e-15).contains(&r));
    }
}

#[test]
fn square_constants_are_exact() {
    let p = problem(ProblemSpec::Quadratic { diag: vec![2.0] });
    let r = region(&[0.0], 0.0, 1.0, 500);
    let all = estimate_all(&p, &r).unwrap();
    for e in [&all.pl, &all.eb, &all.qg, &all.rsi] {
        assert!((e.mu_hat - 2.0).abs() < 1e-12, "{e:?}");
    }
    assert!((all.loja.unwrap().theta_hat.unwrap() - 0.5).abs() < 0.02);
    let rep = verify_implications(&all_list(&p, &r), None, 0.9, p.smoothness()).unwrap();
    assert!(rep.edges.iter().all(|e| matches!(e.status, EdgeStatus::Pass | EdgeStatus::Skipped)));
}

fn all_list(p: &Problem, r: &RegionSpec) -> Vec<ConditionEstimate> {
    estimate_all(p, r).unwrap().as_list()
}

#[test]
fn quartic_is_not_pl() {
    let p = problem(ProblemSpec::Quartic1d);
    let pl = estimate_pl(&p, &region(&[0.0], 0.0, 0.1, 2000)).unwrap();
    assert!(pl.mu_hat <= 0.08);
    let smaller = estimate_pl(&p, &region(&[0.0], 0.0, 0.01, 2000)).unwrap();
    assert!(smaller.mu_hat < pl.mu_hat);
    let loja = fit_loja_exponent(&p, &region(&[0.0], 0.0, 0.1, 2000)).unwrap();
    assert!((loja.theta_hat.unwrap() - 0.75).abs() < 0.02);
}

#[test]
fn circle_constants() {
    let p = problem(ProblemSpec::Circle);
    let all = estimate_all(&p, &region(&[1.0, 0.0], 0.0, 0.1, 4000)).unwrap();
    assert!((6.4..=8.0).contains(&all.pl.mu_hat), "{:?}", all.pl);
    for e in [&all.eb, &all.qg] {
        assert!((6.4..=8.8).contains(&e.mu_hat), "{e:?}");
    }
    assert!((all.loja.unwrap().theta_hat.unwrap() - 0.5).abs() < 0.02);

    // shrinking never loses more than sampling noise
    let mut prev = 0.0;
    for r_out in [0.2, 0.1, 0.05, 0.02] {
        let qg = estimate_qg(&p, &region(&[1.0, 0.0], 0.0, r_out, 4000)).unwrap().mu_hat;
        assert!(qg >= 0.97 * prev);
        prev = qg;
    }
}

#[test]
fn circle_implications_pass() {
    let p = problem(ProblemSpec::Circle);
    let r = region(&[1.0, 0.0], 0.0, 0.05, 4000);
    let mb = check_mb(&p, &DVector::from_column_slice(&[1.0, 0.0]), 10, 1).unwrap();
    let rep = verify_implications(&all_list(&p, &r), Some(&mb), 0.9, p.smoothness()).unwrap();
    assert!(rep.all_pass, "{rep:?}");
    assert!(!rep.c1_counterexample);
}

#[test]
fn qg_not_eb_counterexample() {
    let p = problem(ProblemSpec::QgNotEb);
    for (a, b) in [(1e-3, 1e-2), (1e-4, 1e-3)] {
        let all = estimate_all(&p, &region(&[0.0], a, b, 10_000)).unwrap();
        assert!(all.qg.mu_hat >= 2.0 - 1e-9);
        assert!(all.eb.mu_hat < 0.1, "{:?}", all.eb);
        assert!(all.pl.mu_hat < 0.1, "{:?}", all.pl);
        let rep = verify_implications(&all.as_list(), None, 0.9, p.smoothness()).unwrap();
        assert!(rep.qg_holds && !rep.eb_holds && rep.c1_counterexample);
        let qg_eb = rep.edges.iter().find(|e| e.edge == "qg_implies_eb").unwrap();
        assert_eq!(qg_eb.status, EdgeStatus::NotApplicable);
    }
}

#[test]
fn cross_pl_is_stable() {
    let p = problem(ProblemSpec::CrossC1);
    let a = estimate_pl(&p, &region(&[0.0, 0.0], 0.0, 0.1, 4000)).unwrap().mu_hat;
    let b = estimate_pl(&p, &region(&[0.0, 0.0], 0.0, 0.01, 4000)).unwrap().mu_hat;
    assert!(a > 0.1 && b > 0.1);
    assert!((a - b).abs() <= 0.05 * a, "{a} {b}");
}

#[test]
fn mb_examples() {
    let p = problem(ProblemSpec::Circle);
    let r = check_mb(&p, &DVector::from_column_slice(&[1.0, 0.0]), 10, 1).unwrap();
    assert!((r.eigenvalues[0] - 8.0).abs() < 1e-12 && r.eigenvalues[1].abs() < 1e-12);
    assert_eq!((r.numerical_rank_d, r.kernel_dim, r.dim_s), (1, 1, 1));
    assert!((r.mu_mb - 8.0).abs() < 1e-12 && r.holds);

    let p = problem(ProblemSpec::NewtonTrap);
    let r = check_mb(&p, &DVector::from_column_slice(&[2.0, 0.0]), 10, 1).unwrap();
    assert!((r.eigenvalues[0] - 5.0).abs() < 1e-12);
    assert!(r.rank_constant_along_s && r.numerical_rank_d == 1 && r.holds);

    let p = problem(ProblemSpec::AnisoQuad { a: 2.0, b: 8.0 });
    let r = check_mb(&p, &DVector::from_column_slice(&[0.7, 0.0, 0.0]), 10, 1).unwrap();
    assert_eq!(r.eigenvalues, vec![8.0, 2.0, 0.0]);
    assert_eq!(r.mu_mb, 2.0);
    assert!(r.tangent_alignment_err < 1e-8);

    // flat minimum: kernel larger than S
    let p = problem(ProblemSpec::Quartic1d);
    let r = check_mb(&p, &DVector::from_column_slice(&[0.0]), 5, 1).unwrap();
    assert!(!r.holds && r.kernel_dim == 1 && r.dim_s == 0);

    let p = problem(ProblemSpec::Circle);
    let off = check_mb(&p, &DVector::from_column_slice(&[1.1, 0.0]), 5, 1);
    assert!(matches!(off, Err(Error::Precondition(_))));
}

#[test]
fn mb_on_generated_problems() {
    for spec in [
        ProblemSpec::OverparamRegression { m: 6, n: 3, seed: 2 },
        ProblemSpec::BurerMonteiro { p: 3, r: 2, seed: 2 },
        ProblemSpec::SphereBand,
    ] {
        let p = problem(spec);
        let anchor = match p.name() {
            "sphere_band" => DVector::from_column_slice(&[1.0, 0.0, 0.0]),
            _ => {
                let o = p.oracle().unwrap();
                let x0 = DVector::from_element(p.manifold().ambient_dim(), 0.3);
                o.project(&x0)
            }
        };
        let r = check_mb(&p, &anchor, 5, 3).unwrap();
        assert!(r.holds, "{}: {r:?}", p.name());
    }
}

#[test]
fn eigenvalues_bound_pl_from_above() {
    for (spec, center) in [(ProblemSpec::Circle, vec![1.0, 0.0]), (ProblemSpec::NewtonTrap, vec![2.0, 0.0])] {
        let p = problem(spec);
        let pl = estimate_pl(&p, &region(&center, 0.0, 0.05, 4000)).unwrap().mu_hat;
        let mb = check_mb(&p, &DVector::from_column_slice(&center), 10, 1).unwrap();
        assert!(mb.mu_mb >= 0.99 * pl, "{} {pl}", mb.mu_mb);
    }
}

#[test]
fn gradient_aligns_with_top_eigenspace() {
    let p = problem(ProblemSpec::Circle);
    for d in [1e-1, 1e-2, 1e-3, 1e-4] {
        let x = DVector::from_column_slice(&[0.6 + d, 0.8 - 0.5 * d]);
        let dist = p.dist_to_s(&x).unwrap();
        let g = p.grad(&x);
        let eig = SortedEigen::new(&p.hess(&x).unwrap());
        let top = eig.vectors.column(1).into_owned();
        let off = (&g - &top * top.dot(&g)).norm() / g.norm();
        assert!(off <= 2.0 * dist, "{off} at {dist}");
    }
}

#[test]
fn missing_estimates_are_rejected() {
    let p = problem(ProblemSpec::Circle);
    let pl = estimate_pl(&p, &region(&[1.0, 0.0], 0.0, 0.1, 200)).unwrap();
    assert!(matches!(verify_implications(&[pl], None, 0.9, p.smoothness()), Err(Error::IncompleteInput(_))));
}

#[test]
fn degenerate_loja_fit() {
    // all samples on one level set: a thin shell around the center of a ball
    let p = problem(ProblemSpec::Quadratic { diag: vec![2.0, 2.0] });
    let r = region(&[0.0, 0.0], 0.5, 0.5 + 1e-12, 200);
    assert!(matches!(fit_loja_exponent(&p, &r), Err(Error::IllConditionedFit(_))));
}
