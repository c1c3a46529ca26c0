use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{Action, EpisodeConfig, Jitter, Observation};
use crate::kinematics::{Vec3, FINGERS, JOINTS};

/// One simulated frame: the observation the controller saw, the action the
/// engine applied, and ground-truth quantities at that frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub frame: usize,
    pub observation: Observation,
    /// Action after clamping (zero while observing).
    pub action: Action,
    pub target: Vec3<f64>,
    pub object_distance: f64,
    pub fingertip_distance: f64,
    pub contacts: [bool; FINGERS],
    pub attached: bool,
    /// Set once localization has succeeded at or before this frame.
    pub done: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase: Option<String>,
}

/// State after the last step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalState {
    pub palm: Vec3<f64>,
    pub joints: [f64; JOINTS],
    pub target: Vec3<f64>,
    pub object_distance: f64,
    pub fingertip_distance: f64,
    pub contacts: [bool; FINGERS],
    pub attached: bool,
}

/// Jittered logging schedule: sample `k` is taken at `times[k]` and holds the
/// latest frame completed by then, `frames[k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JitterLog {
    pub sigma: f64,
    pub times: Vec<f64>,
    pub frames: Vec<usize>,
}

impl JitterLog {
    pub fn sample(jitter: Jitter, n: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(jitter.seed ^ 0x6a69_7474_6572);
        let mut times = Vec::with_capacity(n);
        let mut frames = Vec::with_capacity(n);
        for k in 0..n {
            let z: f64 = StandardNormal.sample(&mut rng);
            let tau = k as f64 + 0.5 + jitter.sigma * z;
            times.push(tau * crate::DT);
            frames.push((tau.floor().max(0.0) as usize).min(n - 1));
        }
        Self { sigma: jitter.sigma, times, frames }
    }
}

/// Complete closed-loop rollout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub config: EpisodeConfig,
    pub controller: String,
    pub frames: Vec<FrameRecord>,
    pub final_state: FinalState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log: Option<JitterLog>,
}

impl EpisodeRecord {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Palm position at state index `k` (`k == len()` is the final state).
    pub fn palm_at(&self, k: usize) -> Vec3<f64> {
        self.frames.get(k).map_or(self.final_state.palm, |f| f.observation.palm)
    }

    /// Logged palm positions for samples `first..=last`. Without jitter these
    /// are the simulated states; with jitter each sample holds the frame
    /// its perturbed timestamp falls in.
    pub fn palm_track(&self, first: usize, last: usize) -> Vec<Vec3<f64>> {
        (first..=last)
            .map(|k| match &self.log {
                Some(log) if k < log.frames.len() => self.palm_at(log.frames[k]),
                _ => self.palm_at(k),
            })
            .collect()
    }

    /// Inclusive frame range labelled with `phase`, if any frame carries it.
    pub fn phase_span(&self, phase: &str) -> Option<(usize, usize)> {
        let mut it = self.frames.iter().filter(|f| f.phase.as_deref() == Some(phase)).map(|f| f.frame);
        let first = it.next()?;
        Some((first, it.next_back().unwrap_or(first)))
    }

    pub fn first_success(&self) -> Option<usize> {
        self.frames.iter().position(|f| f.object_distance <= self.config.thresholds.loc)
    }

    /// Canonical JSON (sorted keys), stable across runs and processes.
    pub fn to_canonical_json(&self) -> String {
        crate::canonical_json(self)
    }
}
