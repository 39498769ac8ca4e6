//! Time-domain simulation of the line under the three force controllers.

mod controller;
mod frf;
mod metrics;
mod plant;
mod run;
mod scenario;
mod signal;
mod tune;

pub use controller::{
    ControlLaw, ControlStrategy, Controller, ControllerConfig, ForcePiStrategy, Measurement, OpenLoopStrategy,
    PiController, PressurePiStrategy, StrategyContext, StrategyRegistry, DEFAULT_SAMPLE_RATE,
};
pub use frf::{
    default_frf_chirp, estimate_frf, estimate_frf_with, estimate_transfer, simulate_chirp_response, ChirpResponse, FrfOptions,
    FRF_SEGMENT_SECONDS,
};
pub use metrics::{OSCILLATION_WINDOW, detect_step, measure_metrics, oscillation_index, peak_deviation, rms_error, Metrics, Step, OSCILLATION_SPLIT_HZ};
pub use plant::{plant_derivative, plant_derivative_linear, rk4_step, PlantState};
pub use run::{run_simulation, Sample, SimMetadata, SimOptions, SimResult};
pub use scenario::{
    calibrate_disturbance, compare_controllers, drilling_scenario, drilling_with, ComparisonRow, DrillingConfig, DrillingOutcome,
};
pub use signal::{chirp_phase, generate_signal, Disturbance, SignalSpec};
pub use tune::{loop_transfer, tune_pi, PiTuning, KI_GRID, KP_GRID};
