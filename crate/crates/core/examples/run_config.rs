//! Batch runs from a TOML file, the same path the `singopt run` command takes.
//!
//! ```text
//! cargo run --example run_config -- crates/core/examples/circle_arc.toml
//! ```

use std::path::PathBuf;

use singopt::experiment::run_config_file;

fn main() -> singopt::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/circle_arc.toml")));
    let out = std::env::temp_dir().join("singopt_run_config");
    let summary = run_config_file(&path, Some(&out))?;
    for r in &summary.runs {
        println!(
            "{:<16} {:<6} {:>4} iterations, final dist_S {:.1e}, {:?}",
            r.label,
            r.algorithm,
            r.iterations,
            r.final_dist_s.unwrap_or(f64::NAN),
            r.termination
        );
    }
    println!("traces and summary.json written to {}", out.display());
    Ok(())
}
