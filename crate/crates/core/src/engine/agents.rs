//! Scripted baseline controllers that see only observations.

use super::{Action, Camera, Controller, Observation, LOC_CAP};
use crate::kinematics::{Vec3, MAX_GRAB_ROTATION};
use crate::oracle::CLOSE_DELTA;

/// Step budget the scripted agents allow themselves, below the engine cap.
const SPEED: f64 = 0.09;

fn close_or_hold(obs: &Observation) -> Action {
    if obs.joints.iter().all(|&q| q >= MAX_GRAB_ROTATION - 1e-9) {
        Action::zero()
    } else {
        Action::close(CLOSE_DELTA)
    }
}

/// Never moves.
#[derive(Debug, Default, Clone)]
pub struct ZeroAgent;

impl Controller for ZeroAgent {
    fn name(&self) -> &str {
        "zero"
    }

    fn act(&mut self, _obs: &Observation) -> Result<Action, String> {
        Ok(Action::zero())
    }
}

/// Heads for wherever the camera currently sees the target, at full speed.
#[derive(Debug, Clone, Default)]
pub struct Chaser {
    camera: Camera,
}

impl Chaser {
    pub fn new(camera: Camera) -> Self {
        Self { camera }
    }
}

impl Controller for Chaser {
    fn name(&self) -> &str {
        "chaser"
    }

    fn act(&mut self, obs: &Observation) -> Result<Action, String> {
        if obs.observing {
            return Ok(Action::zero());
        }
        if obs.attached {
            return Ok(close_or_hold(obs));
        }
        let Some(target) = self.camera.back_project(obs.palm, &obs.camera.projection) else {
            return Ok(Action::zero());
        };
        let d = target - obs.palm;
        let n = d.norm();
        Ok(Action::translate(if n > LOC_CAP { d * (LOC_CAP / n) } else { d }))
    }
}

/// Fits a constant velocity to the target positions seen while observing,
/// then commits to the earliest intercept it can reach under that model.
#[derive(Debug, Clone)]
pub struct Extrapolator {
    camera: Camera,
    frames: usize,
    dt: f64,
    samples: Vec<(f64, Vec3<f64>)>,
    plan: Option<(Vec3<f64>, usize)>,
}

impl Extrapolator {
    /// `frames` is the episode length in frames.
    pub fn new(camera: Camera, frames: usize, dt: f64) -> Self {
        Self { camera, frames, dt, samples: Vec::new(), plan: None }
    }

    fn record(&mut self, obs: &Observation) {
        if let Some(p) = self.camera.back_project(obs.palm, &obs.camera.projection) {
            self.samples.push((obs.time, p));
        }
    }

    /// Least-squares line through the samples: `(mean time, mean position,
    /// velocity)`.
    fn fit(&self) -> Option<(f64, Vec3<f64>, Vec3<f64>)> {
        if self.samples.len() < 2 {
            return None;
        }
        let n = self.samples.len() as f64;
        let tm = self.samples.iter().map(|s| s.0).sum::<f64>() / n;
        let pm = self.samples.iter().fold(Vec3::zero(), |a, s| a + s.1) * (1.0 / n);
        let (mut num, mut den) = (Vec3::zero(), 0.0);
        for &(t, p) in &self.samples {
            num += (p - pm) * (t - tm);
            den += (t - tm) * (t - tm);
        }
        Some((tm, pm, num * (1.0 / den)))
    }

    fn make_plan(&self, obs: &Observation) -> Option<(Vec3<f64>, usize)> {
        let (tm, pm, v) = self.fit()?;
        let predict = |k: usize| pm + v * (k as f64 * self.dt - tm);
        let start = obs.frame;
        let chosen = (start + 1..=self.frames)
            .find(|&k| predict(k).distance(obs.palm) <= SPEED * (k - start) as f64)
            .unwrap_or(self.frames);
        let m = chosen.saturating_sub(start).max(1);
        Some(((predict(chosen) - obs.palm) * (1.0 / m as f64), m))
    }
}

impl Controller for Extrapolator {
    fn name(&self) -> &str {
        "extrapolator"
    }

    fn act(&mut self, obs: &Observation) -> Result<Action, String> {
        if obs.observing {
            self.record(obs);
            return Ok(Action::zero());
        }
        if obs.attached {
            return Ok(close_or_hold(obs));
        }
        if self.plan.is_none() {
            self.record(obs);
            self.plan = Some(self.make_plan(obs).unwrap_or((Vec3::zero(), 0)));
        }
        match &mut self.plan {
            Some((step, left)) if *left > 0 => {
                *left -= 1;
                Ok(Action::translate(*step))
            }
            _ => Ok(Action::zero()),
        }
    }
}
