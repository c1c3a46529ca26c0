//! Episode metrics: localization and grasp success, trajectory quality,
//! time efficiency, per-frame grasp analysis and stratified aggregation.

mod formulas;
mod report;

pub use formulas::{grasp_rule, q_line, q_smooth, r_time};
pub use report::{
    duration_bucket, evaluate, grasping, holding, length_bucket, localization, path_length, per_frame_grasp_rate, phase_quality,
    rate_from_holding, render_table, stratify, GraspLevel, GraspRates, HoldRule, MetricsReport, Periodicity, Strata, Stratified,
    Summary,
};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("track needs at least two points, got {0}")]
    TooFewPoints(usize),
    #[error("completion frame {completion} outside 1..={frames}")]
    CompletionOutOfRange { completion: usize, frames: usize },
    #[error("evaluation frame {0} missing from the record")]
    MissingEvalFrame(usize),
    #[error("record has no frames")]
    EmptyRecord,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Localization {
    pub success: bool,
    /// Smallest palm-object distance.
    pub error: f64,
    pub first_success: Option<usize>,
}

impl Localization {
    pub fn from_distances(distances: &[f64], threshold: f64) -> Self {
        let error = distances.iter().copied().fold(f64::INFINITY, f64::min);
        let first_success = distances.iter().position(|&d| d <= threshold);
        Self { success: first_success.is_some(), error, first_success }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grasping {
    pub success: bool,
    /// Smallest fingertip-to-surface distance.
    pub error: f64,
}
