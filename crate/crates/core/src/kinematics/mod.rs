//! Kinematic model of the 18-DoF hand (3-DoF palm translation plus 15
//! finger flexion joints), fingertip forward kinematics, contact tests and
//! the distance primitives used by the metrics.

mod hand;
mod shape;
mod vec3;

pub use hand::{
    clamp_joint, FingerModel, HandModel, HandModelError, HandState, Pose, FINGERS, JOINTS, JOINTS_PER_FINGER, MAX_GRAB_ROTATION,
};
pub use shape::{contact_test, fingertip_surface_distance, palm_object_distance, ObjectShape, ShapeError, ShapeKind};
pub use vec3::{Quat, Vec3};

/// Fingertip poses for `palm` and `joints` under `model`.
pub fn fk_fingertips<T: crate::Real>(model: &HandModel<T>, palm: Vec3<T>, joints: &[T; JOINTS]) -> [Pose<T>; FINGERS] {
    model.fk_fingertips(palm, joints)
}

#[cfg(test)]
mod tests;
