use hoigym::engine::{EpisodeRecord, GRAS_CAP, LOC_CAP};
use hoigym::kinematics::{JOINTS, MAX_GRAB_ROTATION};
use serde::{Deserialize, Serialize};

use crate::stats::ActionStats;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterConfig {
    /// Clip margin as a fraction of `q99 - q01`.
    pub margin: f64,
    /// Consecutive frames at an action cap that reject an episode.
    pub saturation_frames: usize,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self { margin: 0.05, saturation_frames: 10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectRule {
    /// An action dimension sits at its cap for too long.
    Saturation,
    /// The hand moves further between frames than one capped action allows.
    Jump,
    /// Frames missing, out of order or holding invalid values.
    InvalidFrames,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    pub episode_id: u64,
    pub rule: RejectRule,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutcome {
    pub kept: Vec<EpisodeRecord>,
    pub rejections: Vec<Rejection>,
    /// Action values moved by clipping.
    pub clipped: usize,
}

const TOL: f64 = 1e-9;

fn check_frames(rec: &EpisodeRecord) -> Result<(), String> {
    if rec.frames.len() != rec.config.frames {
        return Err(format!("{} frames, expected {}", rec.frames.len(), rec.config.frames));
    }
    for (k, f) in rec.frames.iter().enumerate() {
        if f.frame != k {
            return Err(format!("frame {k} is labelled {}", f.frame));
        }
        let o = &f.observation;
        let joints_ok = o.joints.iter().all(|q| (0.0..=MAX_GRAB_ROTATION).contains(q));
        if !o.palm.is_finite() || !joints_ok || !f.action.is_finite() || !f.target.is_finite() {
            return Err(format!("frame {k} holds invalid values"));
        }
    }
    Ok(())
}

fn check_jumps(rec: &EpisodeRecord) -> Result<(), String> {
    for w in rec.frames.windows(2) {
        let (a, b) = (&w[0].observation, &w[1].observation);
        let step = a.palm.distance(b.palm);
        if step > LOC_CAP + TOL {
            return Err(format!("palm jumps {step:.3} m into frame {}", w[1].frame));
        }
        if let Some(j) = (0..JOINTS).find(|&j| (a.joints[j] - b.joints[j]).abs() > GRAS_CAP + TOL) {
            return Err(format!("joint {j} jumps into frame {}", w[1].frame));
        }
    }
    Ok(())
}

fn check_saturation(rec: &EpisodeRecord, limit: usize) -> Result<(), String> {
    let mut runs = [0usize; 1 + JOINTS];
    for f in &rec.frames {
        let at_cap =
            std::iter::once(f.action.loc.norm() >= LOC_CAP - TOL).chain(f.action.gras.iter().map(|g| g.abs() >= GRAS_CAP - TOL));
        for (i, hit) in at_cap.enumerate() {
            runs[i] = if hit { runs[i] + 1 } else { 0 };
            if runs[i] >= limit {
                let what = if i == 0 { "palm speed".to_string() } else { format!("joint {}", i - 1) };
                return Err(format!("{what} saturated for {limit} frames up to frame {}", f.frame));
            }
        }
    }
    Ok(())
}

/// Rejects broken episodes and clips the remaining action values into
/// `[q01 - m, q99 + m]` per dimension.
pub fn filter_outliers(corpus: &[EpisodeRecord], stats: &ActionStats, cfg: &FilterConfig) -> FilterOutcome {
    let bounds: Vec<(f64, f64)> = stats
        .dims
        .iter()
        .map(|d| {
            let m = cfg.margin * (d.q99 - d.q01);
            (d.q01 - m, d.q99 + m)
        })
        .collect();
    let mut kept = Vec::new();
    let mut rejections = Vec::new();
    let mut clipped = 0;
    for rec in corpus {
        let verdict = check_frames(rec)
            .map_err(|d| (RejectRule::InvalidFrames, d))
            .and_then(|()| check_jumps(rec).map_err(|d| (RejectRule::Jump, d)))
            .and_then(|()| check_saturation(rec, cfg.saturation_frames).map_err(|d| (RejectRule::Saturation, d)));
        if let Err((rule, detail)) = verdict {
            rejections.push(Rejection { episode_id: rec.config.episode_id, rule, detail });
            continue;
        }
        let mut rec = rec.clone();
        for f in rec.frames.iter_mut().skip(rec.config.obs_frames) {
            let mut v = f.action.to_vector();
            for (x, &(lo, hi)) in v.iter_mut().zip(&bounds) {
                let c = x.clamp(lo, hi);
                if c != *x {
                    clipped += 1;
                    *x = c;
                }
            }
            f.action = hoigym::engine::Action::from_vector(&v);
        }
        kept.push(rec);
    }
    FilterOutcome { kept, rejections, clipped }
}
