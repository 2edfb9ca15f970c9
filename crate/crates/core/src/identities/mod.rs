//! Residuals of the tensor identities satisfied by the pressure `v`, and the
//! `J_α` energies.

mod battery;
mod energy;
mod harnack;
mod qequation;
mod report;

pub use battery::{
    convergence_sweep, run_battery, strictly_decreasing, BatteryConfig, BatteryOutcome, FROZEN_RADIUS,
    KR_CASES,
};
pub use energy::{dj_alpha_formula, f_alpha, j_alpha, j_monotonicity_report, JRow, JTable};
pub use harnack::{
    a_reduction_residual, fourth_order_check, fourth_order_d, harnack_a, remark_identity_residual,
    sentinel_residual,
};
pub use qequation::{
    b_operator, b_operator_with, q_field, q_field_with, q_lhs, q_lhs_with, q_residual, q_residual_with,
    q_rhs, q_rhs_terms, q_rhs_terms_with, q_scale, QOptions, QRhsTerms, TraceReading,
};
pub use report::{csv_number, reports_to_json, write_atomic, ResidualReport};
