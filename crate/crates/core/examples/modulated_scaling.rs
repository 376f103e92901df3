//! Renormalized kinetic energy at t = T/4 against ε, with the log-log fit.

use bubblelab::experiments::{preset, run_experiment, ExperimentKind};

fn main() -> bubblelab::Result<()> {
    let cfg = preset(ExperimentKind::ModulatedScaling);
    let out = run_experiment(&cfg)?;
    print!("{}", out.table.to_csv()?);
    for fit in &out.summary.fits {
        println!(
            "{}: slope {:.4} (r² {:.6}) over {} points",
            fit.name,
            fit.fit.exponent,
            fit.fit.r_squared,
            fit.fit.points.len()
        );
    }
    for c in &out.summary.criteria {
        println!("{}", c.line());
    }
    Ok(())
}
