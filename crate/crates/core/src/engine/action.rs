use serde::{Deserialize, Serialize};

use crate::kinematics::{Vec3, JOINTS};

/// Palm translation cap, metres per frame.
pub const LOC_CAP: f64 = 0.1;
/// Joint rotation cap, radians per frame.
pub const GRAS_CAP: f64 = 0.2;
/// Length of the flat action vector: 3 translation + 15 joint deltas.
pub const ACTION_DIM: usize = 3 + JOINTS;

/// Per-frame command: palm translation and joint-angle deltas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Action {
    pub loc: Vec3<f64>,
    pub gras: [f64; JOINTS],
}

impl Default for Action {
    fn default() -> Self {
        Self::zero()
    }
}

impl Action {
    pub fn zero() -> Self {
        Self { loc: Vec3::zero(), gras: [0.0; JOINTS] }
    }

    pub fn translate(loc: Vec3<f64>) -> Self {
        Self { loc, ..Self::zero() }
    }

    pub fn close(delta: f64) -> Self {
        Self { loc: Vec3::zero(), gras: [delta; JOINTS] }
    }

    pub fn from_vector(v: &[f64; ACTION_DIM]) -> Self {
        let mut gras = [0.0; JOINTS];
        gras.copy_from_slice(&v[3..]);
        Self { loc: Vec3::new(v[0], v[1], v[2]), gras }
    }

    pub fn from_slice(v: &[f64]) -> Option<Self> {
        let arr: &[f64; ACTION_DIM] = v.try_into().ok()?;
        Some(Self::from_vector(arr))
    }

    pub fn to_vector(&self) -> [f64; ACTION_DIM] {
        let mut out = [0.0; ACTION_DIM];
        out[..3].copy_from_slice(&self.loc.to_array());
        out[3..].copy_from_slice(&self.gras);
        out
    }

    pub fn is_finite(&self) -> bool {
        self.loc.is_finite() && self.gras.iter().all(|g| g.is_finite())
    }

    pub fn is_zero(&self) -> bool {
        self.to_vector().iter().all(|&x| x == 0.0)
    }

    /// Scales the translation down to the cap (direction kept) and clips
    /// each joint delta. Non-finite components become zero.
    pub fn clamped(&self) -> Self {
        let loc = if self.loc.is_finite() { self.loc } else { Vec3::zero() };
        let n = loc.norm();
        let loc = if n > LOC_CAP { loc * (LOC_CAP / n) } else { loc };
        let gras = self.gras.map(|g| if g.is_finite() { g.clamp(-GRAS_CAP, GRAS_CAP) } else { 0.0 });
        Self { loc, gras }
    }
}
