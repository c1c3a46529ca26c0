use serde::{Deserialize, Serialize};

use crate::kinematics::Vec3;

/// Pinhole camera rigidly attached to the palm. The palm never rotates, so
/// the viewing direction is fixed for the whole episode.
///
/// Camera axes follow the usual vision convention: `x` right, `y` down,
/// `z` forward. Looking along world `+z` with `y` up, camera `x` is world
/// `-x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Camera {
    pub id: String,
    /// Camera center relative to the palm, world frame.
    pub offset: Vec3<f64>,
    /// Unit viewing direction, world frame. Must not be vertical.
    pub forward: Vec3<f64>,
    pub focal: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl Default for Camera {
    fn default() -> Self {
        Self {
            id: "pinhole-640x480-f160".into(),
            offset: Vec3::new(0.0, 0.15, -0.25),
            forward: Vec3::unit_z(),
            focal: 160.0,
            cx: 320.0,
            cy: 240.0,
            width: 640,
            height: 480,
        }
    }
}

/// Result of projecting a world point. Pixel coordinates are present only
/// when the point is visible.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    pub u: Option<f64>,
    pub v: Option<f64>,
    pub depth: f64,
    pub visible: bool,
}

impl Camera {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.focal > 0.0 && self.focal.is_finite()) {
            return Err("camera focal length must be positive".into());
        }
        if (self.forward.norm() - 1.0).abs() > 1e-9 || self.forward.horizontal().norm() < 1e-6 {
            return Err("camera forward must be a non-vertical unit vector".into());
        }
        if self.width == 0 || self.height == 0 {
            return Err("camera image must be non-empty".into());
        }
        Ok(())
    }

    pub fn center(&self, palm: Vec3<f64>) -> Vec3<f64> {
        palm + self.offset
    }

    /// Same camera turned to look from the palm at `palm` toward `point`.
    pub fn looking_at(mut self, palm: Vec3<f64>, point: Vec3<f64>) -> Self {
        if let Some(f) = (point - self.center(palm)).normalized() {
            if f.horizontal().norm() > 0.05 {
                self.forward = f;
            }
        }
        self
    }

    /// `(right, down, forward)` axes in world coordinates.
    pub fn basis(&self) -> (Vec3<f64>, Vec3<f64>, Vec3<f64>) {
        let f = self.forward;
        let right = f.cross(Vec3::unit_y()).normalized().unwrap_or_else(|| -Vec3::unit_x());
        (right, f.cross(right), f)
    }

    /// World point to camera coordinates.
    pub fn to_camera(&self, palm: Vec3<f64>, world: Vec3<f64>) -> Vec3<f64> {
        let d = world - self.center(palm);
        let (r, dn, f) = self.basis();
        Vec3::new(d.dot(r), d.dot(dn), d.dot(f))
    }

    pub fn from_camera(&self, palm: Vec3<f64>, cam: Vec3<f64>) -> Vec3<f64> {
        let (r, dn, f) = self.basis();
        self.center(palm) + r * cam.x + dn * cam.y + f * cam.z
    }

    /// Projects a point given in camera coordinates.
    pub fn project_camera(&self, p: Vec3<f64>) -> Projection {
        if !(p.z > 0.0) {
            return Projection { u: None, v: None, depth: p.z, visible: false };
        }
        let u = self.cx + self.focal * p.x / p.z;
        let v = self.cy + self.focal * p.y / p.z;
        let inside = u >= 0.0 && u < f64::from(self.width) && v >= 0.0 && v < f64::from(self.height);
        if inside {
            Projection { u: Some(u), v: Some(v), depth: p.z, visible: true }
        } else {
            Projection { u: None, v: None, depth: p.z, visible: false }
        }
    }

    pub fn project(&self, palm: Vec3<f64>, world: Vec3<f64>) -> Projection {
        self.project_camera(self.to_camera(palm, world))
    }

    /// Inverse of [`Camera::project`] for a visible observation.
    pub fn back_project(&self, palm: Vec3<f64>, proj: &Projection) -> Option<Vec3<f64>> {
        let (u, v) = (proj.u?, proj.v?);
        let z = proj.depth;
        let cam = Vec3::new((u - self.cx) * z / self.focal, (v - self.cy) * z / self.focal, z);
        Some(self.from_camera(palm, cam))
    }

    /// Schematic grayscale raster (binary PGM) with the target drawn as a
    /// disc whose radius shrinks with depth.
    pub fn raster_pgm(&self, proj: &Projection, object_radius: f64) -> Vec<u8> {
        let (w, h) = (self.width as usize, self.height as usize);
        let mut px = vec![16u8; w * h];
        if let (Some(u), Some(v)) = (proj.u, proj.v) {
            let r = (self.focal * object_radius / proj.depth).max(1.0);
            let (x0, x1) = ((u - r).floor().max(0.0) as usize, ((u + r).ceil() as usize).min(w));
            let (y0, y1) = ((v - r).floor().max(0.0) as usize, ((v + r).ceil() as usize).min(h));
            for y in y0..y1 {
                for x in x0..x1 {
                    let (dx, dy) = (x as f64 + 0.5 - u, y as f64 + 0.5 - v);
                    if dx * dx + dy * dy <= r * r {
                        px[y * w + x] = 230;
                    }
                }
            }
        }
        let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
        out.extend_from_slice(&px);
        out
    }
}
