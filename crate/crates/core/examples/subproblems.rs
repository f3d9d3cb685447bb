//! The local subproblem solvers on one indefinite model: Newton
//! (pseudo-inverse), Cauchy, exact trust region, truncated CG and both cubic
//! modes — then the trust-region hard case on the circle.

use nalgebra::{DMatrix, DVector};
use singopt::problems::{build_problem, ProblemSpec};
use singopt::subsolvers::{
    cauchy_step, newton_step, solve_cubic, solve_trs_exact, solve_trs_tcg, CubicMode, ModelData,
};

fn main() -> singopt::Result<()> {
    let h = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.0, 1.0, -1.0, 0.5, 0.0, 0.5, 2.0]);
    let md = ModelData::new(DVector::from_vec(vec![1.0, -0.5, 0.25]), h)?;
    let delta = 0.8;

    let report = |name: &str, s: &DVector<f64>| {
        println!("{name:<14} |s| = {:.4}  m(s) = {:+.6}", s.norm(), md.quadratic(s));
    };
    report("newton", &newton_step(&md, 1e-14)?);
    report("cauchy", &cauchy_step(&md, delta)?);
    let exact = solve_trs_exact(&md, delta, 1e-12)?;
    report("trs exact", &exact.s);
    println!("               lambda = {:.6}, boundary {}", exact.lambda, exact.on_boundary);
    let tcg = solve_trs_tcg(&md, delta, 0.1, 1.0, 50)?;
    report("trs tcg", &tcg.s);
    println!("               {:?} after {} inner iterations", tcg.exit, tcg.inner_iters);

    for mode in [CubicMode::ExactSecular, CubicMode::InexactGradient] {
        let c = solve_cubic(&md, 1.0, 0.1, mode)?;
        println!(
            "cubic {mode:?}: |s| = {:.4}, m(s) - m(0) = {:+.6}, |grad m| = {:.1e}, certified {}",
            c.s.norm(),
            c.model_value,
            c.model_grad_norm,
            c.decrease_ok && c.gradient_ok
        );
    }

    // hard case: at (0, 1 - t) on the circle the gradient has no component
    // along the bottom eigenvector, and the solution jumps sideways
    let p = build_problem(&ProblemSpec::Circle)?;
    for t in [1e-1, 1e-2, 1e-4] {
        let x = DVector::from_vec(vec![0.0, 1.0 - t]);
        let md = ModelData::new(p.grad(&x), p.hess(&x)?)?;
        let sol = solve_trs_exact(&md, 0.5, 1e-12)?;
        println!(
            "circle t={t:e}: lambda {:.6} (4t(2-t) = {:.6}), hard case {}, s = ({:.5}, {:.5})",
            sol.lambda,
            4.0 * t * (2.0 - t),
            sol.hard_case,
            sol.s[0],
            sol.s[1]
        );
    }
    Ok(())
}
