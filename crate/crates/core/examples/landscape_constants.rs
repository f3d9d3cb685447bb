//! Sampled PL / EB / QG / RSI constants and the Łojasiewicz exponent, and the
//! implication cross-check, on a smooth problem and on the C¹ counterexample.

use nalgebra::DVector;
use singopt::conditions::{check_mb, estimate_all, verify_implications, RegionSpec, DEFAULT_SLACK};
use singopt::problems::{build_problem, ProblemSpec};

fn main() -> singopt::Result<()> {
    let circle = build_problem(&ProblemSpec::Circle)?;
    let region = RegionSpec::new(&[1.0, 0.0], 0.0, 0.05, 10_000, 1);
    let est = estimate_all(&circle, &region)?;
    for e in est.as_list() {
        println!("circle {:?}: mu = {:.3}, theta = {:?}", e.kind, e.mu_hat, e.theta_hat);
    }
    let mb = check_mb(&circle, &DVector::from_vec(vec![1.0, 0.0]), 10, 1)?;
    let rep = verify_implications(&est.as_list(), Some(&mb), DEFAULT_SLACK, circle.smoothness())?;
    for e in &rep.edges {
        println!("  {:<14} {:?}", e.edge, e.status);
    }

    // QG holds but PL and EB fail arbitrarily close to the minimizer
    let qg = build_problem(&ProblemSpec::QgNotEb)?;
    let est = estimate_all(&qg, &RegionSpec::new(&[0.0], 1e-4, 1e-3, 10_000, 1))?;
    println!("qg_not_eb: QG {:.3}, PL {:.1e}, EB {:.1e}", est.qg.mu_hat, est.pl.mu_hat, est.eb.mu_hat);
    let rep = verify_implications(&est.as_list(), None, DEFAULT_SLACK, qg.smoothness())?;
    println!("  C1 counterexample to QG => EB: {}", rep.c1_counterexample);
    Ok(())
}
