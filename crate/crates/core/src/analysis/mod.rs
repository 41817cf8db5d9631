//! Mean-field free-energy landscape and the scaling experiments built on the
//! exact engine and the Monte Carlo couplings.

mod experiments;
mod landscape;

pub use experiments::{
    critical_drift_audit, critical_exponent_fit, cutoff_experiment, eta_from_moments, median_exit, metastability_fit,
    nonclt_compare, scaling_exponent_fit, CutoffRow, CutoffSummary, CutoffTable, DriftReport, ExitSummary, FitResult,
    MetastabilityReport, MonteCarlo, NonCltReport, BIN_RANGE, BIN_WIDTH,
};
pub use landscape::{
    count_minima, free_energy, free_energy_grad, free_energy_hessian, mean_field_jacobian, mean_field_map,
    mean_field_solve, FixedPoint, Landscape, MinimaCount, PointKind,
};
