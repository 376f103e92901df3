//! The property suite behind `bubblelab check`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::ExperimentKind;
use super::presets::{preset, SCALING_AMPLITUDE};
use super::report::Criterion;
use super::run_experiment;
use crate::error::Result;
use crate::euler::{
    detect_lifespan, evolve, scaling_relation_check, snapshot, symmetrizer_defect, tame_reference, HydroState,
    SolverConfig,
};
use crate::initial_data::{rescale_to_semiclassical, BubbleLadder, FrameOptions, LadderConfig, ModelParams};
use crate::nls::{NlsConfig, NlsRun};
use crate::spectral::{Field, Grid};

/// Criteria whose failure is understood and recorded rather than fixed.
pub const KNOWN_DEVIATIONS: &[&str] = &["high_mode_exponent"];

fn model() -> ModelParams {
    ModelParams { dim: 1, m: 3, s: 0.1, sigma_target: 1.0 }
}

fn single_bubble(n: usize, length: f64) -> Result<Field> {
    let ladder = BubbleLadder::new(
        model(),
        LadderConfig { amplitude: SCALING_AMPLITUDE, ..LadderConfig::geometric(1, 1.0, 0.5) },
    )?;
    let grid = Grid::new(1, n, length)?;
    Ok(rescale_to_semiclassical(&ladder, &grid, 1, &FrameOptions::default())?.u0)
}

/// Relative mass drift over 10³ Strang steps on bubble data, N = 256.
pub fn mass_conservation() -> Result<Vec<Criterion>> {
    let u0 = single_bubble(256, 6.0)?;
    let mut run = NlsRun::new(&u0, 0.1, 3, NlsConfig::default())?;
    for _ in 0..1000 {
        let dt = run.dt;
        run.strang_step(dt)?;
    }
    let drift = (run.mass() - run.mass0).abs() / run.mass0;
    Ok(vec![Criterion::at_most("mass_drift", drift, 1e-10)])
}

/// `‖u_Δt − u_{Δt/2}‖ / ‖u_{Δt/2} − u_{Δt/4}‖` on bubble data.
pub fn strang_order() -> Result<Vec<Criterion>> {
    let u0 = single_bubble(512, 10.0)?;
    let at = |dt: f64| -> Result<Field> {
        let mut run = NlsRun::new(&u0, 0.05, 3, NlsConfig { dt: Some(dt), ..Default::default() })?;
        run.evolve(0.05, |_| Ok(()))?;
        Ok(run.u)
    };
    // the gauge phase dt·max|u|^{2m}/ε is about 1.3 rad at the coarsest level
    let (a, b, c) = (at(1e-3)?, at(5e-4)?, at(2.5e-4)?);
    let ratio = a.sub(&b)?.l2_norm() / b.sub(&c)?.l2_norm();
    Ok(vec![Criterion::within("strang_ratio", ratio, 4.0, 0.12 * 4.0)])
}

/// Largest asymmetry of `S·M_j` over 10³ random states, dimensions and powers.
pub fn symmetrizer_identity() -> Result<Vec<Criterion>> {
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let d = rng.gen_range(1..=3);
        let m = rng.gen_range(1..=5);
        let v: Vec<f64> = (0..d).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let xi: Vec<f64> = (0..d).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let (re, im) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        worst = worst.max(symmetrizer_defect(re, im, &v, &xi, m, 4.0, m as f64));
    }
    Ok(vec![Criterion::at_most("symmetrizer_defect", worst, 16.0 * f64::EPSILON)])
}

/// Adjacent rungs of a geometric ladder: profiles agree and lifespans scale by `λ`.
pub fn scaling_relation() -> Result<Vec<Criterion>> {
    let ladder = BubbleLadder::new(model(), LadderConfig::geometric(3, 1.0, 0.25))?;
    let cfg = SolverConfig::default();
    let mut out = Vec::new();
    for (l, k) in [(1, 2), (2, 3)] {
        let rep = scaling_relation_check(&ladder, l, k, 0.5, 256, 8.0, &cfg, Some(100.0))?;
        out.push(Criterion::at_most(format!("scaling_defect_{l}_{k}"), rep.defect_a.max(rep.defect_phi), 1e-4));
        let ratio = rep.lifespan_ratio.unwrap_or(f64::NAN) / rep.time_dilation;
        out.push(Criterion::within(format!("lifespan_ratio_{l}_{k}"), ratio, 1.0, 0.1));
    }
    Ok(out)
}

/// `max_t ‖|∇|^σ(V, A)(t)‖ / ‖|∇|^σ A(0)‖` over `[0, T/2]` for frames 1, 2, 3.
pub fn tame_surrogate() -> Result<Vec<Criterion>> {
    let ladder = BubbleLadder::new(model(), LadderConfig::geometric(3, 1.0, 0.5))?;
    let grid = Grid::new(1, 4096, 64.0)?;
    let cfg = SolverConfig::default();
    let mut out = Vec::new();
    for k in 1..=3 {
        let datum = rescale_to_semiclassical(&ladder, &grid, k, &FrameOptions::default())?;
        let h0 = HydroState::from_amplitude(&datum.u0, 3)?;
        let (t, _) = detect_lifespan(&h0, &cfg, 100.0)?;
        let tame0 = tame_reference(&h0)?;
        let mut worst = [0.0f64; 3];
        let mut err = None;
        evolve(&h0, t / 2.0, &cfg, |st| match snapshot(st, &[0.0], 0.0, &tame0) {
            Ok(s) => (0..3).for_each(|i| worst[i] = worst[i].max(s.tame_ratio[i])),
            Err(e) => err = Some(e),
        })?;
        if let Some(e) = err {
            return Err(e);
        }
        for (sigma, w) in worst.iter().enumerate() {
            out.push(Criterion::at_most(format!("tame_ratio_k{k}_sigma{sigma}"), *w, 10.0));
        }
    }
    Ok(out)
}

fn experiment(kind: ExperimentKind, names: &[&str]) -> Result<Vec<Criterion>> {
    let summary = run_experiment(&preset(kind))?.summary;
    Ok(summary
        .criteria
        .into_iter()
        .filter(|c| c.asserted && (names.is_empty() || names.contains(&c.name.as_str())))
        .collect())
}

pub fn zero_speed() -> Result<Vec<Criterion>> {
    experiment(ExperimentKind::ZeroSpeed, &["support_growth_cells"])
}

pub fn superposition() -> Result<Vec<Criterion>> {
    experiment(ExperimentKind::ZeroSpeed, &["superposition_defect"])
}

pub fn modulated_scaling() -> Result<Vec<Criterion>> {
    experiment(ExperimentKind::ModulatedScaling, &["modulated_exponent"])
}

pub fn norm_inflation() -> Result<Vec<Criterion>> {
    experiment(ExperimentKind::NormInflation, &[])
}

pub fn besov_vs_fourier() -> Result<Vec<Criterion>> {
    experiment(ExperimentKind::BesovVsFourier, &[])
}

pub fn commutator_law() -> Result<Vec<Criterion>> {
    experiment(ExperimentKind::CommutatorSweep, &[])
}

pub fn bubble_norms() -> Result<Vec<Criterion>> {
    experiment(ExperimentKind::BubbleNorms, &[])
}

pub type Check = fn() -> Result<Vec<Criterion>>;

/// Every check with its name, in the order `check` runs them.
pub fn all_checks() -> Vec<(&'static str, Check)> {
    vec![
        ("mass_conservation", mass_conservation as Check),
        ("strang_order", strang_order),
        ("zero_speed", zero_speed),
        ("superposition", superposition),
        ("symmetrizer", symmetrizer_identity),
        ("scaling_relation", scaling_relation),
        ("tame_surrogate", tame_surrogate),
        ("modulated_scaling", modulated_scaling),
        ("norm_inflation", norm_inflation),
        ("besov_vs_fourier", besov_vs_fourier),
        ("commutator_law", commutator_law),
        ("bubble_norms", bubble_norms),
    ]
}
