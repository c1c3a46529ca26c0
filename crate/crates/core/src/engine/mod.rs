//! Fixed-step episode loop: target motion, hand integration, attachment,
//! palm-camera observations and per-frame recording.

mod action;
pub mod agents;
mod camera;
mod config;
mod record;
mod sim;

pub use action::{Action, ACTION_DIM, GRAS_CAP, LOC_CAP};
pub use camera::{Camera, Projection};
pub use config::{
    EpisodeConfig, EpisodeOptions, Jitter, Thresholds, DEFAULT_JITTER_SIGMA, DEFAULT_LEAD_FRAMES, DEFAULT_OBS_FRAMES,
    DEFAULT_THRESHOLD, LENIENT_THRESHOLD,
};
pub use record::{EpisodeRecord, FinalState, FrameRecord, JitterLog};
pub use sim::{run_rollout, CameraObservation, Controller, Engine, Observation, Step};

use crate::motiongen::{CatalogError, MotionError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EngineError {
    #[error("invalid episode config: {0}")]
    InvalidConfig(String),
    #[error("infeasible episode: {0}")]
    Infeasible(String),
    #[error("step after the episode finished (frame {frame})")]
    StepAfterDone { frame: usize },
    #[error("episode stopped at frame {frame} of {frames}")]
    Incomplete { frame: usize, frames: usize },
    #[error("controller failed at frame {frame}: {message}")]
    Controller { frame: usize, message: String },
    #[error(transparent)]
    Motion(#[from] MotionError),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
}
