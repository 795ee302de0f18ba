//! Geometry of the active set and pointwise estimators evaluated on solved
//! or exact fields.
//!
//! `∂Ω` is always the set of interface midpoints of the nodal mask, and
//! derivative-based measurements near it skip a band of nodes.

mod blowup;
mod estimates;
mod geometry;

pub use blowup::{blowup_fit, graph_fit, on_free_boundary, BlowupFit, BlowupRow, GraphFit, GraphRow, DIRECTION_NET};
pub use estimates::{
    monotonicity_check, monotonicity_threshold, nondegeneracy, quadratic_growth, time_decay, DecayRow, GrowthReport,
    MonotonicityReport, NondegeneracyCheck,
};
pub use geometry::{minimal_diameter, rescale_result, thickness, thickness_report, ThicknessReport, ThicknessRow};
