//! Morse–Bott structure at points of the solution set: Hessian rank, the
//! smallest positive eigenvalue and kernel alignment with the tangent of `S`.

use singopt::conditions::check_mb;
use singopt::problems::{build_problem, ProblemSpec};

fn main() -> singopt::Result<()> {
    for spec in [
        ProblemSpec::Circle,
        ProblemSpec::NewtonTrap,
        ProblemSpec::AnisoQuad { a: 2.0, b: 8.0 },
        ProblemSpec::OverparamRegression { m: 6, n: 3, seed: 1 },
        ProblemSpec::BurerMonteiro { p: 3, r: 2, seed: 1 },
        ProblemSpec::SphereBand,
        ProblemSpec::Quartic1d,
    ] {
        let p = build_problem(&spec)?;
        let center = singopt::experiment::default_center(&p)?;
        let anchor = nalgebra::DVector::from_vec(center);
        let mb = check_mb(&p, &anchor, 10, 3)?;
        println!(
            "{:<22} rank {} of {}, dim S {}, mu_MB {:.3e}, constant rank {}, align err {:.1e} -> {}",
            p.name(),
            mb.numerical_rank_d,
            p.manifold().dim(),
            mb.dim_s,
            mb.mu_mb,
            mb.rank_constant_along_s,
            mb.tangent_alignment_err,
            if mb.holds { "Morse–Bott" } else { "not Morse–Bott" },
        );
    }
    Ok(())
}
