//! Ready-made configurations; the same values ship as TOML under `configs/`.

use std::path::PathBuf;

use super::config::*;
use crate::euler::SolverConfig;
use crate::initial_data::{Background, FrameOptions, LadderConfig, ModelParams};
use crate::nls::NlsConfig;
use crate::spectral::Dealias;

/// The raw bump peaks at `e^{-1}`, so this amplitude gives bubbles of height 2.
pub const SCALING_AMPLITUDE: f64 = 2.0 * std::f64::consts::E;

fn base(kind: ExperimentKind, ladder: Option<LadderConfig>, grid: GridSpec) -> ExperimentConfig {
    ExperimentConfig {
        experiment: kind,
        seed: 20_240_601,
        output_dir: PathBuf::from("results").join(kind.name()),
        model: ModelParams { dim: 1, m: 3, s: 0.1, sigma_target: 1.0 },
        ladder,
        frame_k: None,
        frame: FrameOptions::default(),
        grid,
        epsilon_list: EpsilonList::default(),
        t_grid: Vec::new(),
        sigma_list: vec![0.5, 1.0],
        hydro: SolverConfig::default(),
        nls: NlsConfig::default(),
        lifespan_horizon: 100.0,
        tau_floor: 0.1,
        zero_speed: ZeroSpeedSpec::default(),
        bubble_norms: BubbleNormSpec::default(),
        besov: BesovSpec::default(),
        commutator: CommutatorSpec::default(),
    }
}

fn scaling_ladder() -> LadderConfig {
    LadderConfig { amplitude: SCALING_AMPLITUDE, ..LadderConfig::geometric(2, 1.0, 0.25) }
}

pub fn preset(kind: ExperimentKind) -> ExperimentConfig {
    let scaling_grid = GridSpec { n: Some(4096), length: 32.0 };
    match kind {
        ExperimentKind::ModulatedScaling => {
            ExperimentConfig { t_grid: vec![0.0, 0.125], ..base(kind, Some(scaling_ladder()), scaling_grid) }
        }
        ExperimentKind::NormInflation => base(kind, Some(scaling_ladder()), scaling_grid),
        ExperimentKind::Theorem0Preset => {
            let ladder = LadderConfig {
                amplitude: SCALING_AMPLITUDE,
                background: Some(Background { amplitude: 0.5, radius: 0.5, center: vec![-3.0] }),
                ..LadderConfig::geometric(1, 1.0, 0.5)
            };
            ExperimentConfig { t_grid: vec![0.0], ..base(kind, Some(ladder), scaling_grid) }
        }
        ExperimentKind::ZeroSpeed => ExperimentConfig {
            hydro: SolverConfig {
                dealias: Dealias::ExponentialFilter { order: 36, strength: 36.0 },
                ..Default::default()
            },
            zero_speed: ZeroSpeedSpec { separation: 4.0, ..Default::default() },
            ..base(kind, Some(LadderConfig::geometric(1, 1.0, 0.5)), GridSpec { n: Some(256), length: 8.0 })
        },
        ExperimentKind::BubbleNorms => {
            base(kind, Some(LadderConfig::geometric(4, 1.0, 0.25)), GridSpec { n: None, length: 1.0 })
        }
        ExperimentKind::BesovVsFourier | ExperimentKind::CommutatorSweep => {
            base(kind, None, GridSpec { n: None, length: 1.0 })
        }
    }
}
