#![allow(dead_code)]

use hoigym::engine::{Camera, EpisodeConfig, Thresholds};
use hoigym::kinematics::{HandModel, HandState, ObjectShape, Vec3};
use hoigym::motiongen::{FamilyParams, MotionConfig};
use hoigym::DT;

pub type V = Vec3<f64>;

/// Hand-built episode: a sphere of radius 0.25 following `params`.
pub fn manual(params: FamilyParams<f64>, palm: V, frames: usize, obs_frames: usize, intercept_frame: usize) -> EpisodeConfig {
    EpisodeConfig {
        episode_id: 1,
        task_type: "manual".into(),
        motion: MotionConfig::new("manual", 1, frames as f64 * DT, params),
        object_id: "ball".into(),
        object: ObjectShape::sphere(V::zero(), 0.25).unwrap(),
        hand_start: HandState::open(&HandModel::default(), palm),
        camera: Camera::default(),
        instruction: "catch the ball".into(),
        frames,
        obs_frames,
        dt: DT,
        thresholds: Thresholds::default(),
        intercept_frame,
        lead_frames: 2,
        jitter: None,
    }
}

pub fn still(at: V) -> FamilyParams<f64> {
    FamilyParams::StraightLine { start: at, velocity: V::zero() }
}
