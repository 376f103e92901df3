//! Ḣ^σ norms of the NLS solution at the coupling time τ, for a sweep of ε.

use bubblelab::experiments::{preset, run_experiment, EpsilonList, ExperimentKind};

fn main() -> bubblelab::Result<()> {
    let mut cfg = preset(ExperimentKind::NormInflation);
    cfg.epsilon_list = EpsilonList::Explicit(vec![0.2, 0.1, 0.05, 0.025]);
    cfg.sigma_list = vec![0.25, 0.5, 1.0];
    let out = run_experiment(&cfg)?;
    let eps = out.table.values("epsilon").unwrap();
    let sigma = out.table.values("sigma").unwrap();
    let norm = out.table.values("norm").unwrap();
    for i in 0..eps.len() {
        println!("eps={:<8} sigma={:<5} norm={:.6e}", eps[i], sigma[i], norm[i]);
    }
    for c in &out.summary.criteria {
        println!("{}", c.line());
    }
    Ok(())
}
