//! Receiver localization and attitude sensing.

mod attitude;
mod bound;
mod estimate;
mod harness;
mod scan;

pub use attitude::{attitude_estimate, attitude_power_profile, dynamic_range_db, AttitudeSample};
pub use bound::{peb, signal_jacobian, Axis, FisherMatrix, SignalJacobian};
pub use estimate::{
    fs_estimate, fs_scores, ml_estimate, ml_objective, ml_scores, LocationEstimate, Method, MlModel, DEFAULT_NUM_L,
};
pub use harness::{
    draw_truth, reference_signal_power, rmse_harness, rmse_harness_sigma, sigma_for_snr, RmseReport, RmseRow,
    TrialRecord,
};
pub use scan::{
    add_noise, noise_row, simulate_scan, CandidateTable, ScanGrid, ScanLayout, ScanMeasurement, ScanSetup,
};
