//! Headless, deterministic gym for intercepting and grasping moving targets
//! with an 18-DoF kinematic hand.
//!
//! The geometric, motion and metric layers are generic over [`Real`]
//! (`f32`/`f64`); the closed-loop engine, the scripted controllers and the
//! record types run on `f64`. Concrete aliases for both precisions live at
//! the crate root.

// `!(x > 0.0)` reads as "not positive" and also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod engine;
pub mod kinematics;
pub mod metrics;
pub mod motiongen;
pub mod oracle;
pub mod scalar;

pub use scalar::Real;

pub type Vec3d = kinematics::Vec3<f64>;
pub type Vec3f = kinematics::Vec3<f32>;
pub type Quatd = kinematics::Quat<f64>;
pub type Quatf = kinematics::Quat<f32>;
pub type HandModeld = kinematics::HandModel<f64>;
pub type HandModelf = kinematics::HandModel<f32>;
pub type HandStated = kinematics::HandState<f64>;
pub type HandStatef = kinematics::HandState<f32>;
pub type ObjectShaped = kinematics::ObjectShape<f64>;
pub type ObjectShapef = kinematics::ObjectShape<f32>;
pub type MotionConfigd = motiongen::MotionConfig<f64>;
pub type MotionConfigf = motiongen::MotionConfig<f32>;
pub type MotionGeneratord = motiongen::MotionGenerator<f64>;
pub type MotionGeneratorf = motiongen::MotionGenerator<f32>;
pub type FourierSpecd = motiongen::FourierSpec<f64>;
pub type FourierSpecf = motiongen::FourierSpec<f32>;

/// Fixed simulation step: 20 Hz.
pub const DT: f64 = 0.05;

/// Serializes `value` as compact JSON with object keys sorted, so equal
/// values always produce identical bytes.
pub fn canonical_json<T: serde::Serialize + ?Sized>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("value serializes to JSON");
    serde_json::to_string(&v).expect("JSON value renders")
}
