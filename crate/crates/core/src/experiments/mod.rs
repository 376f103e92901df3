//! Experiment configs, runners and their CSV / verdict outputs.

pub mod checks;
pub mod config;
pub mod fit;
pub mod presets;
pub mod report;
pub mod scaling;
pub mod suite;

pub use checks::{run_besov_vs_fourier, run_bubble_norms, run_commutator_sweep, run_zero_speed};
pub use config::{EpsilonList, ExperimentConfig, ExperimentKind, GridSpec};
pub use fit::{log_log_fit, FitResult};
pub use presets::preset;
pub use report::{exit_code_for, Criterion, ExperimentOutput, FitRecord, Params, Summary, Table};
pub use scaling::{
    frame_setup, run_modulated_scaling, run_norm_inflation, run_theorem0_preset, select_tau, FrameSetup, TauSelection,
};

use crate::error::Result;

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    match cfg.experiment {
        ExperimentKind::ModulatedScaling => run_modulated_scaling(cfg),
        ExperimentKind::NormInflation => run_norm_inflation(cfg),
        ExperimentKind::ZeroSpeed => run_zero_speed(cfg),
        ExperimentKind::BubbleNorms => run_bubble_norms(cfg),
        ExperimentKind::BesovVsFourier => run_besov_vs_fourier(cfg),
        ExperimentKind::CommutatorSweep => run_commutator_sweep(cfg),
        ExperimentKind::Theorem0Preset => run_theorem0_preset(cfg),
    }
}
