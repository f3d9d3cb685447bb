//! Every catalog problem: dimension, smoothness, derivative check and the
//! distance from a random nearby point to the solution set.

use singopt::experiment::point_near_s;
use singopt::problems::{build_problem, check_derivatives, ProblemSpec};

fn main() -> singopt::Result<()> {
    let specs = [
        ProblemSpec::Quartic1d,
        ProblemSpec::NewtonTrap,
        ProblemSpec::Circle,
        ProblemSpec::AnisoQuad { a: 2.0, b: 8.0 },
        ProblemSpec::CrossC1,
        ProblemSpec::QgNotEb,
        ProblemSpec::Quadratic { diag: vec![1.0, 0.0, 3.0] },
        ProblemSpec::OverparamRegression { m: 6, n: 3, seed: 1 },
        ProblemSpec::BurerMonteiro { p: 3, r: 2, seed: 1 },
        ProblemSpec::SphereBand,
    ];
    println!("{:<22} {:>3} {:<9} {:>10} {:>10} {:>8}", "problem", "dim", "smooth", "grad err", "hess err", "dist_S");
    for spec in &specs {
        let p = build_problem(spec)?;
        let x = point_near_s(&p, 0.2, 7)?;
        let rep = check_derivatives(&p, &x, 1e-5)?;
        println!(
            "{:<22} {:>3} {:<9} {:>10.1e} {:>10} {:>8.3}",
            p.name(),
            p.manifold().dim(),
            format!("{:?}", p.smoothness()),
            rep.max_rel_err_grad,
            rep.max_rel_err_hess.map_or("-".into(), |e| format!("{e:.1e}")),
            p.dist_to_s(&x).unwrap_or(f64::NAN),
        );
    }
    Ok(())
}
