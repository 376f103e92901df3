pub mod checks;
pub mod solver;

pub use checks::{
    curl_defect, energy_flux, gradient_consistency, scaling_relation, scaling_relation_check, snapshot,
    superposition_defect, support_radius, symmetrizer_defect, tame_energy_monitor, tame_reference, HydroSnapshot,
    ScalingReport,
};
pub use solver::{
    cfl_dt, detect_lifespan, evolve, evolve_within_lifespan, hydro_rhs, step, HydroRhs, HydroState, LifespanCause,
    SolverConfig,
};
