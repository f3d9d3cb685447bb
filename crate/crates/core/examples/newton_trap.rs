//! Pure Newton on `f(x, y) = (x^2 + 1) y^2 / 2` started near the curve
//! `3x^2 = 1` where the Hessian is singular: one step throws the iterate to
//! distance `2(1 - t) / (3 sqrt t)` from the minimizers.

use nalgebra::DVector;
use singopt::problems::{build_problem, ProblemSpec};
use singopt::solvers::{run_arc, run_newton, ArcConfig, NewtonConfig, StopCriteria};

fn main() -> singopt::Result<()> {
    let p = build_problem(&ProblemSpec::NewtonTrap)?;
    let stop = StopCriteria { max_iters: 1, ..StopCriteria::default() };
    for t in [1e-2f64, 1e-4] {
        let x0 = DVector::from_vec(vec![((1.0 - t) / 3.0).sqrt(), t.sqrt()]);
        let trace = run_newton(&p, &x0, &NewtonConfig::default(), &stop)?;
        let predicted = 2.0 * (1.0 - t) / (3.0 * t.sqrt());
        println!(
            "t={t:e}: dist_S {:.3e} -> {:.6} (closed form {predicted:.6})",
            trace.rows[0].dist_s.unwrap(),
            trace.rows[1].dist_s.unwrap()
        );
    }

    // the regularized method does not jump
    let x0 = DVector::from_vec(vec![(0.99f64 / 3.0).sqrt(), 0.1]);
    let arc = run_arc(&p, &x0, &ArcConfig::default(), &StopCriteria::default())?;
    let dists: Vec<String> = arc.rows.iter().map(|r| format!("{:.1e}", r.dist_s.unwrap())).collect();
    println!("ARC from the same start: {}", dists.join(" "));
    Ok(())
}
