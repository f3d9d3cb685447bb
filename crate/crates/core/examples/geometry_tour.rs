//! Exponential/logarithm maps, the two sphere retractions and transport.

use nalgebra::DVector;
use singopt::geometry::{Manifold, RetractionKind};

fn main() -> singopt::Result<()> {
    let x = DVector::from_vec(vec![1.0, 0.0, 0.0]);
    let v = DVector::from_vec(vec![0.0, 0.3, 0.4]);

    for kind in [RetractionKind::Exponential, RetractionKind::MetricProjection] {
        let s2 = Manifold::sphere(3, kind);
        let e = s2.exp(&x, &v)?;
        let r = s2.retract(&x, &v)?;
        println!(
            "{kind:?}: |exp - retract| = {:.2e}, dist(x, R(x,v)) / |v| = {:.4}",
            (&e - &r).norm(),
            s2.dist(&x, &r)? / v.norm()
        );
    }

    let s2 = Manifold::sphere(3, RetractionKind::Exponential);
    let y = s2.exp(&x, &v)?;
    let back = s2.log(&x, &y)?;
    println!("log(x, exp(x, v)) - v = {:.2e}", (&back - &v).norm());

    // transport keeps tangency and (for the sphere's parallel transport) length
    let w = DVector::from_vec(vec![0.0, -0.4, 0.3]);
    let tw = s2.transport(&x, &y, &w)?;
    println!("transported: <y, Tw> = {:.1e}, |Tw| - |w| = {:.1e}", y.dot(&tw), tw.norm() - w.norm());

    let r3 = Manifold::euclidean(3);
    println!("R^3: exp(x, v) = x + v = {:?}", r3.exp(&x, &v)?.as_slice());
    Ok(())
}
