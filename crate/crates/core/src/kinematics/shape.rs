use serde::{Deserialize, Serialize};

use super::{HandModel, HandState, Quat, Vec3, FINGERS};
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShapeKind<T> {
    Sphere {
        radius: T,
    },
    Box {
        half_extents: Vec3<T>,
    },
    /// Axis along the local `y` axis.
    Cylinder {
        radius: T,
        half_height: T,
    },
}

/// Target object: a primitive at a pose.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectShape<T> {
    pub shape: ShapeKind<T>,
    pub position: Vec3<T>,
    pub orientation: Quat<T>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("object extents must be positive and finite")]
pub struct ShapeError;

impl<T: Real> ObjectShape<T> {
    pub fn new(shape: ShapeKind<T>, position: Vec3<T>, orientation: Quat<T>) -> Result<Self, ShapeError> {
        let ok = |v: T| v > T::zero() && v.is_finite();
        let valid = match shape {
            ShapeKind::Sphere { radius } => ok(radius),
            ShapeKind::Box { half_extents: h } => ok(h.x) && ok(h.y) && ok(h.z),
            ShapeKind::Cylinder { radius, half_height } => ok(radius) && ok(half_height),
        };
        if valid {
            Ok(Self { shape, position, orientation: orientation.normalized() })
        } else {
            Err(ShapeError)
        }
    }

    pub fn sphere(center: Vec3<T>, radius: T) -> Result<Self, ShapeError> {
        Self::new(ShapeKind::Sphere { radius }, center, Quat::identity())
    }

    pub fn at(mut self, position: Vec3<T>) -> Self {
        self.position = position;
        self
    }

    /// Radius of the largest ball centered at the object's origin that fits
    /// inside the object.
    pub fn inscribed_radius(&self) -> T {
        match self.shape {
            ShapeKind::Sphere { radius } => radius,
            ShapeKind::Box { half_extents: h } => h.x.min(h.y).min(h.z),
            ShapeKind::Cylinder { radius, half_height } => radius.min(half_height),
        }
    }

    /// Exact signed distance from `p` to the surface (negative inside).
    pub fn signed_distance(&self, p: Vec3<T>) -> T {
        let local = self.orientation.inverse_rotate(p - self.position);
        let zero = T::zero();
        match self.shape {
            ShapeKind::Sphere { radius } => local.norm() - radius,
            ShapeKind::Box { half_extents: h } => {
                let q = Vec3::new(local.x.abs() - h.x, local.y.abs() - h.y, local.z.abs() - h.z);
                let outside = Vec3::new(q.x.max(zero), q.y.max(zero), q.z.max(zero)).norm();
                let inside = q.x.max(q.y).max(q.z).min(zero);
                outside + inside
            }
            ShapeKind::Cylinder { radius, half_height } => {
                let radial = (local.x * local.x + local.z * local.z).sqrt() - radius;
                let axial = local.y.abs() - half_height;
                let outside = (radial.max(zero).powi(2) + axial.max(zero).powi(2)).sqrt();
                outside + radial.max(axial).min(zero)
            }
        }
    }

    /// Distance from `p` to the surface, zero inside.
    pub fn surface_distance(&self, p: Vec3<T>) -> T {
        self.signed_distance(p).max(T::zero())
    }
}

/// Per-finger contact flags: a fingertip is in contact when its signed
/// distance to the surface is at most the model's contact radius.
pub fn contact_test<T: Real>(model: &HandModel<T>, state: &HandState<T>, obj: &ObjectShape<T>) -> [bool; FINGERS] {
    std::array::from_fn(|i| obj.signed_distance(state.fingertips[i].position) <= model.contact_radius)
}

/// Euclidean distance between the palm center and the object center.
pub fn palm_object_distance<T: Real>(state: &HandState<T>, obj: &ObjectShape<T>) -> T {
    state.palm.distance(obj.position)
}

/// Smallest fingertip-to-surface distance, clamped at zero inside.
pub fn fingertip_surface_distance<T: Real>(state: &HandState<T>, obj: &ObjectShape<T>) -> T {
    state.fingertips.iter().map(|tip| obj.surface_distance(tip.position)).fold(T::infinity(), T::min)
}
