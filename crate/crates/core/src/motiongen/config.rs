use serde::{Deserialize, Serialize};

use super::FourierSpec;
use crate::kinematics::Vec3;
use crate::Real;

/// Standard gravity, m/s^2.
pub const GRAVITY: f64 = 9.81;

/// The eight major motion families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    StraightLine,
    SimpleHarmonic,
    CircularArc,
    Projectile,
    Pendulum,
    InclinedRolling,
    ImpactResponse,
    Hybrid,
}

impl Family {
    pub const ALL: [Family; 8] = [
        Family::StraightLine,
        Family::SimpleHarmonic,
        Family::CircularArc,
        Family::Projectile,
        Family::Pendulum,
        Family::InclinedRolling,
        Family::ImpactResponse,
        Family::Hybrid,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::StraightLine => "straight_line",
            Family::SimpleHarmonic => "simple_harmonic",
            Family::CircularArc => "circular_arc",
            Family::Projectile => "projectile",
            Family::Pendulum => "pendulum",
            Family::InclinedRolling => "inclined_rolling",
            Family::ImpactResponse => "impact_response",
            Family::Hybrid => "hybrid",
        }
    }
}

/// Family-specific trajectory parameters. Angles are radians, `y` is up.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FamilyParams<T> {
    StraightLine {
        start: Vec3<T>,
        velocity: Vec3<T>,
    },
    SimpleHarmonic {
        center: Vec3<T>,
        /// Unit oscillation axis.
        axis: Vec3<T>,
        amplitude: T,
        angular_frequency: T,
        phase: T,
    },
    CircularArc {
        center: Vec3<T>,
        radius: T,
        /// Orthonormal plane basis; the target sits at `center + radius * u1`
        /// when the angle is zero.
        u1: Vec3<T>,
        u2: Vec3<T>,
        angular_velocity: T,
        start_angle: T,
    },
    Projectile {
        start: Vec3<T>,
        speed: T,
        launch_angle: T,
        /// Heading in the ground plane: 0 is `+x`, pi/2 is `+z`.
        azimuth: T,
        gravity: T,
    },
    Pendulum {
        pivot: Vec3<T>,
        length: T,
        /// Horizontal unit vector spanning the swing plane with `-y`.
        swing_direction: Vec3<T>,
        initial_angle: T,
        initial_angular_velocity: T,
        gravity: T,
    },
    InclinedRolling {
        origin: Vec3<T>,
        /// Horizontal unit heading of the downhill direction.
        downhill: Vec3<T>,
        incline_angle: T,
        initial_speed: T,
        gravity: T,
    },
    ImpactResponse {
        start: Vec3<T>,
        speed: T,
        launch_angle: T,
        azimuth: T,
        gravity: T,
        ground_height: T,
        restitution: T,
    },
    Hybrid {
        segments: Vec<Segment<T>>,
        /// Optional small oscillation superimposed on the whole path.
        #[serde(default = "no_micro", skip_serializing_if = "Option::is_none")]
        micro: Option<MicroOscillation<T>>,
    },
}

fn no_micro<T>() -> Option<MicroOscillation<T>> {
    None
}

impl<T> FamilyParams<T> {
    pub fn family(&self) -> Family {
        match self {
            FamilyParams::StraightLine { .. } => Family::StraightLine,
            FamilyParams::SimpleHarmonic { .. } => Family::SimpleHarmonic,
            FamilyParams::CircularArc { .. } => Family::CircularArc,
            FamilyParams::Projectile { .. } => Family::Projectile,
            FamilyParams::Pendulum { .. } => Family::Pendulum,
            FamilyParams::InclinedRolling { .. } => Family::InclinedRolling,
            FamilyParams::ImpactResponse { .. } => Family::ImpactResponse,
            FamilyParams::Hybrid { .. } => Family::Hybrid,
        }
    }
}

impl<T: Real> FamilyParams<T> {
    /// Circular arc whose initial velocity equals `velocity` (direction and
    /// magnitude), turning about `normal` (counterclockwise by the right-hand
    /// rule when `counterclockwise`). The center is placed so the arc starts
    /// at the origin; hybrid composition shifts it.
    pub fn arc_tangent_to(velocity: Vec3<T>, normal: Vec3<T>, radius: T, counterclockwise: bool) -> Option<Self> {
        let speed = velocity.norm();
        let dir = velocity.normalized()?;
        let n = (normal - dir * normal.dot(dir)).normalized()?;
        // velocity at angle 0 is radius * w * u2
        let u2 = dir;
        // the path bends toward -u1
        let u1 = if counterclockwise { u2.cross(n) } else { n.cross(u2) };
        let w = speed / radius;
        Some(FamilyParams::CircularArc { center: -u1 * radius, radius, u1, u2, angular_velocity: w, start_angle: T::zero() })
    }
}

/// One piece of a hybrid trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment<T> {
    pub params: FamilyParams<T>,
    pub duration: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MicroOscillation<T> {
    pub axis: Vec3<T>,
    pub series: FourierSpec<T>,
}

/// A trajectory family with its parameters, the subcategory it was drawn
/// from and the seed of the draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionConfig<T> {
    pub subcategory: String,
    pub seed: u64,
    /// Seconds.
    pub duration: T,
    pub params: FamilyParams<T>,
}

impl<T: Real> MotionConfig<T> {
    pub fn new(subcategory: impl Into<String>, seed: u64, duration: T, params: FamilyParams<T>) -> Self {
        Self { subcategory: subcategory.into(), seed, duration, params }
    }

    pub fn family(&self) -> Family {
        self.params.family()
    }
}
