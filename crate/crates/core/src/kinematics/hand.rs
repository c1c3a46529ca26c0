use serde::{Deserialize, Serialize};

use super::{Quat, Vec3};
use crate::Real;

pub const FINGERS: usize = 5;
pub const JOINTS_PER_FINGER: usize = 3;
/// Number of actuated finger joints.
pub const JOINTS: usize = FINGERS * JOINTS_PER_FINGER;
/// Closing limit of every joint (90 degrees).
pub const MAX_GRAB_ROTATION: f64 = std::f64::consts::FRAC_PI_2;

/// Geometry of one finger: a planar chain of three hinge segments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FingerModel<T> {
    /// Position of the proximal joint relative to the palm center.
    pub base_offset: Vec3<T>,
    /// Direction of the straightened finger.
    pub forward: Vec3<T>,
    /// Hinge axis shared by all three joints; curling rotates `forward`
    /// about this axis by positive angles.
    pub flexion_normal: Vec3<T>,
    pub segment_lengths: [T; JOINTS_PER_FINGER],
}

impl<T: Real> FingerModel<T> {
    /// Direction the finger curls toward (`flexion_normal x forward`).
    pub fn curl_direction(&self) -> Vec3<T> {
        self.flexion_normal.cross(self.forward)
    }

    pub fn length(&self) -> T {
        self.segment_lengths.iter().fold(T::zero(), |a, &l| a + l)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HandModel<T> {
    /// Thumb first, then index, middle, ring, pinky.
    pub fingers: [FingerModel<T>; FINGERS],
    pub contact_radius: T,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HandModelError {
    #[error("finger {finger}: segment lengths must be positive")]
    SegmentLength { finger: usize },
    #[error("finger {finger}: forward and flexion normal must be orthonormal")]
    Axes { finger: usize },
    #[error("contact radius must be positive")]
    ContactRadius,
}

impl<T: Real> Default for HandModel<T> {
    /// Five fingers with 0.04/0.03/0.02 m segments. The four fingers sit on
    /// the front edge of the palm pointing `+z` and curl toward `-y`; the
    /// thumb sits on the opposite side and points obliquely across.
    fn default() -> Self {
        let l = |x: f64| T::lit(x);
        let segs = [l(0.04), l(0.03), l(0.02)];
        let down = Vec3::new(T::zero(), -T::one(), T::zero());
        let finger = |bx: f64, by: f64, bz: f64, fwd: Vec3<T>| {
            let forward = fwd.normalized().expect("non-zero forward");
            FingerModel {
                base_offset: Vec3::new(l(bx), l(by), l(bz)),
                forward,
                flexion_normal: forward.cross(down),
                segment_lengths: segs,
            }
        };
        let ahead = Vec3::unit_z();
        Self {
            fingers: [
                finger(-0.04, -0.01, -0.01, Vec3::new(l(0.6), T::zero(), l(0.8))),
                finger(-0.03, 0.0, 0.04, ahead),
                finger(-0.01, 0.0, 0.045, ahead),
                finger(0.01, 0.0, 0.04, ahead),
                finger(0.03, 0.0, 0.035, ahead),
            ],
            contact_radius: l(0.01),
        }
    }
}

impl<T: Real> HandModel<T> {
    pub fn validate(&self) -> Result<(), HandModelError> {
        let tol = T::lit(1e-9);
        for (i, f) in self.fingers.iter().enumerate() {
            if f.segment_lengths.iter().any(|&s| !(s > T::zero())) {
                return Err(HandModelError::SegmentLength { finger: i });
            }
            let unit = |v: Vec3<T>| (v.norm() - T::one()).abs() <= tol;
            if !unit(f.forward) || !unit(f.flexion_normal) || f.forward.dot(f.flexion_normal).abs() > tol {
                return Err(HandModelError::Axes { finger: i });
            }
        }
        if !(self.contact_radius > T::zero()) {
            return Err(HandModelError::ContactRadius);
        }
        Ok(())
    }

    /// Upper bound on the distance between the palm center and any point of
    /// any finger.
    pub fn max_reach(&self) -> T {
        self.fingers.iter().map(|f| f.base_offset.norm() + f.length()).fold(T::zero(), T::max)
    }

    /// Fingertip poses for the given palm position and joint angles.
    pub fn fk_fingertips(&self, palm: Vec3<T>, joints: &[T; JOINTS]) -> [Pose<T>; FINGERS] {
        std::array::from_fn(|i| {
            let chain = self.finger_chain(i, palm, joints);
            chain[JOINTS_PER_FINGER]
        })
    }

    /// Poses along finger `finger`: the three joint pivots followed by the
    /// fingertip. Each pose's orientation maps the finger frame
    /// (forward, curl direction, flexion normal) into world space.
    pub fn finger_chain(&self, finger: usize, palm: Vec3<T>, joints: &[T; JOINTS]) -> [Pose<T>; JOINTS_PER_FINGER + 1] {
        debug_assert!(
            joints.iter().all(|&q| q >= T::zero() && q <= T::lit(MAX_GRAB_ROTATION) + T::lit(1e-12)),
            "joint angles outside [0, pi/2]"
        );
        let f = &self.fingers[finger];
        let base_rot = Quat::from_basis(f.forward, f.curl_direction(), f.flexion_normal);
        let mut position = palm + f.base_offset;
        let mut angle = T::zero();
        let mut out = [Pose { position, orientation: base_rot }; JOINTS_PER_FINGER + 1];
        for k in 0..JOINTS_PER_FINGER {
            out[k] = Pose { position, orientation: Quat::from_axis_angle(f.flexion_normal, angle).compose(base_rot) };
            angle = angle + joints[finger * JOINTS_PER_FINGER + k];
            let dir = f.forward * angle.cos() + f.curl_direction() * angle.sin();
            position += dir * f.segment_lengths[k];
        }
        out[JOINTS_PER_FINGER] = Pose { position, orientation: Quat::from_axis_angle(f.flexion_normal, angle).compose(base_rot) };
        out
    }

    /// Partial derivative of fingertip `finger`'s position with respect to
    /// joint `joint` (0..3 within the finger).
    pub fn fingertip_derivative(&self, finger: usize, joint: usize, palm: Vec3<T>, joints: &[T; JOINTS]) -> Vec3<T> {
        let chain = self.finger_chain(finger, palm, joints);
        let axis = self.fingers[finger].flexion_normal;
        axis.cross(chain[JOINTS_PER_FINGER].position - chain[joint].position)
    }
}

/// Position plus orientation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose<T> {
    pub position: Vec3<T>,
    pub orientation: Quat<T>,
}

/// Hand configuration: palm position, joint angles and the fingertip poses
/// derived from them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HandState<T> {
    pub palm: Vec3<T>,
    pub joints: [T; JOINTS],
    pub fingertips: [Pose<T>; FINGERS],
}

impl<T: Real> HandState<T> {
    /// Builds a state, clamping joints into `[0, pi/2]`.
    pub fn new(model: &HandModel<T>, palm: Vec3<T>, joints: [T; JOINTS]) -> Self {
        let joints = joints.map(clamp_joint);
        let fingertips = model.fk_fingertips(palm, &joints);
        Self { palm, joints, fingertips }
    }

    pub fn open(model: &HandModel<T>, palm: Vec3<T>) -> Self {
        Self::new(model, palm, [T::zero(); JOINTS])
    }

    /// 18-vector: palm xyz followed by the 15 joint angles.
    pub fn to_vector(&self) -> [T; 18] {
        let mut out = [T::zero(); 18];
        out[..3].copy_from_slice(&self.palm.to_array());
        out[3..].copy_from_slice(&self.joints);
        out
    }
}

pub fn clamp_joint<T: Real>(q: T) -> T {
    q.max(T::zero()).min(T::lit(MAX_GRAB_ROTATION))
}
