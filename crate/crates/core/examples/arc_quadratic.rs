//! Adaptive cubic regularization near non-isolated minima: distance to `S`
//! per iteration and the fitted convergence order, for both subsolver modes.

use singopt::analysis::{fit_rate, DEFAULT_TAIL};
use singopt::experiment::point_near_s;
use singopt::problems::{build_problem, ProblemSpec};
use singopt::solvers::{run_arc, ArcConfig, StopCriteria};
use singopt::subsolvers::CubicMode;

fn main() -> singopt::Result<()> {
    for spec in [
        ProblemSpec::Circle,
        ProblemSpec::NewtonTrap,
        ProblemSpec::OverparamRegression { m: 6, n: 3, seed: 1 },
        ProblemSpec::BurerMonteiro { p: 3, r: 2, seed: 1 },
        ProblemSpec::SphereBand,
    ] {
        let p = build_problem(&spec)?;
        let x0 = point_near_s(&p, 0.1, 14)?;
        for mode in [CubicMode::ExactSecular, CubicMode::InexactGradient] {
            let cfg = ArcConfig { subsolver: mode, ..ArcConfig::default() };
            let trace = run_arc(&p, &x0, &cfg, &StopCriteria::default())?;
            let dist = trace.dist_sequence().expect("catalog problems have oracles");
            let q = fit_rate(&dist, DEFAULT_TAIL).map(|r| r.order_q);
            let shown: Vec<String> = dist.iter().map(|d| format!("{d:.1e}")).collect();
            println!("{:<22} {mode:?}", p.name());
            println!("    dist_S: {}", shown.join(" "));
            match q {
                Ok(q) => println!("    order {q:.2}, {:?}", trace.termination),
                Err(e) => println!("    no fit ({e}), {:?}", trace.termination),
            }
        }
    }
    Ok(())
}
