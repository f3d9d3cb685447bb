//! Riemannian trust regions with the three subproblem solvers on an
//! anisotropic quadratic whose minimizers form a line. With Cauchy steps the
//! distance to `S` contracts linearly; exact and tCG steps finish in one
//! or two iterations.

use nalgebra::DVector;
use singopt::analysis::verify_linear_rate;
use singopt::problems::{build_problem, ProblemSpec};
use singopt::solvers::{run_rtr, RtrConfig, StopCriteria, TrsSubsolver};

fn main() -> singopt::Result<()> {
    let (a, b) = (2.0, 8.0);
    let p = build_problem(&ProblemSpec::AnisoQuad { a, b })?;
    let x0 = DVector::from_vec(vec![0.0, 1.0, 1.0]);
    let stop = StopCriteria { max_iters: 2000, ..StopCriteria::default() };
    for sub in [TrsSubsolver::Cauchy, TrsSubsolver::Exact, TrsSubsolver::Tcg] {
        let cfg = RtrConfig { subsolver: sub, ..RtrConfig::default() };
        let trace = run_rtr(&p, &x0, &cfg, &stop)?;
        println!("{sub:?}: {} iterations, {:?}", trace.iterations(), trace.termination);
        if sub == TrsSubsolver::Cauchy {
            // mu = a (PL constant), omega = 1 / (2 b) (sufficient decrease)
            let chk = verify_linear_rate(&trace, 0.0, a, 1.0 / (2.0 * b))?;
            println!(
                "    f-gap ratio {:.4} <= {:.4}, dist ratio {:.4} <= {:.4}",
                chk.f_ratio,
                chk.f_bound,
                chk.dist_ratio.unwrap_or(f64::NAN),
                chk.dist_bound
            );
        }
    }
    Ok(())
}
