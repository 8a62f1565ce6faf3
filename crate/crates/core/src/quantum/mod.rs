//! Driven single-atom cavity QED: master-equation oracle, quantum
//! regression, and mixed counting-plus-homodyne quantum trajectories.

mod master;
mod regression;
mod system;
mod trajectory;

pub use master::{evolve_master, is_positive_semidefinite, liouvillian, steady_state, DensityMatrix, MasterEquation};
pub use regression::{g2_regression, h_regression, mean_field_phase, regression, top_level_population, RegressionCurves, PHOTON_FLOOR};
pub use system::{annihilation, build_system, DriveTarget, OperatorSet, SystemParams};
pub use trajectory::{
    run_trajectories, triggered_statistics, unravel_mixed, MixedUnraveling, TrajectoryRecord, TriggeredStatistics, MAX_STEP_RATE,
};
