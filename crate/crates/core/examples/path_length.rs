//! Path length of descent methods against the bound implied by the
//! Łojasiewicz inequality and strong decrease.

use nalgebra::DVector;
use singopt::analysis::{measure_decrease, LojaParams};
use singopt::conditions::{estimate_pl, RegionSpec};
use singopt::problems::{build_problem, ProblemSpec};
use singopt::solvers::{run_gd, run_rtr, GdConfig, RtrConfig, StopCriteria};

fn main() -> singopt::Result<()> {
    let p = build_problem(&ProblemSpec::Circle)?;
    let x0 = DVector::from_vec(vec![0.72, 0.96]);
    let mu = estimate_pl(&p, &RegionSpec::new(&[0.6, 0.8], 0.0, 0.25, 10_000, 9))?.mu_hat;
    let loja = LojaParams { theta: 0.5, mu };
    println!("dist(x0, S) = {:.3}, sampled mu_PL = {mu:.3}", p.dist_to_s(&x0).unwrap());

    let stop = StopCriteria { max_iters: 5000, record_points: true, ..StopCriteria::default() };
    let armijo = GdConfig::Armijo { alpha_bar: 1.0, beta: 0.5, sigma_a: 0.1 };
    let runs = [
        ("gd armijo", run_gd(&p, &x0, &armijo, &stop)?),
        ("gd constant", run_gd(&p, &x0, &GdConfig::Constant { gamma: 0.05 }, &stop)?),
        ("rtr cauchy", run_rtr(&p, &x0, &RtrConfig::default(), &stop)?),
    ];
    for (name, trace) in runs {
        let rep = measure_decrease(&trace, &p, Some(loja))?;
        println!(
            "{name:<12} path {:.4}, displacement {:.4}, bound {:.4} (omega {:.3}, sigma {:.3})",
            rep.path_length,
            rep.displacement.unwrap_or(f64::NAN),
            rep.bpl_bound.unwrap_or(f64::NAN),
            rep.omega_hat,
            rep.sigma_hat
        );
    }
    Ok(())
}
