use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Camera, EngineError};
use crate::kinematics::{HandModel, HandState, ObjectShape, Vec3};
use crate::motiongen::{Catalog, MotionConfig, MotionGenerator};
use crate::DT;

pub const DEFAULT_OBS_FRAMES: usize = 10;
pub const DEFAULT_LEAD_FRAMES: usize = 2;
pub const DEFAULT_THRESHOLD: f64 = 0.3;
pub const LENIENT_THRESHOLD: f64 = 1.0;
/// Default logging jitter, in frames, used when jitter is switched on
/// without an explicit sigma.
pub const DEFAULT_JITTER_SIGMA: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Localization threshold; also the attachment distance.
    pub loc: f64,
    pub lenient: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { loc: DEFAULT_THRESHOLD, lenient: LENIENT_THRESHOLD }
    }
}

/// Logging-time jitter. Only the logged sample times are perturbed; the
/// simulated dynamics are untouched.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jitter {
    /// Standard deviation of the sample-time offset, in frames.
    pub sigma: f64,
    pub seed: u64,
}

/// Everything needed to replay one episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeConfig {
    pub episode_id: u64,
    pub task_type: String,
    pub motion: MotionConfig<f64>,
    pub object_id: String,
    /// Object shape; its position is overwritten by the motion each frame.
    pub object: ObjectShape<f64>,
    pub hand_start: HandState<f64>,
    /// Palm camera; aimed at the target's observed positions.
    pub camera: Camera,
    pub instruction: String,
    pub frames: usize,
    pub obs_frames: usize,
    pub dt: f64,
    pub thresholds: Thresholds,
    /// Frame at which the scripted oracle meets the target.
    pub intercept_frame: usize,
    /// How many frames early the oracle arrives.
    pub lead_frames: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jitter: Option<Jitter>,
}

impl EpisodeConfig {
    pub fn validate(&self) -> Result<(), EngineError> {
        let bad = |m: &str| Err(EngineError::InvalidConfig(m.to_string()));
        if self.frames == 0 {
            return bad("episode needs at least one frame");
        }
        if self.obs_frames >= self.frames {
            return bad("observe frames must be fewer than total frames");
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("time step must be positive");
        }
        if !(self.thresholds.loc > 0.0) || self.thresholds.lenient < self.thresholds.loc {
            return bad("thresholds must satisfy 0 < loc <= lenient");
        }
        if self.motion.duration + 1e-9 < self.frames as f64 * self.dt {
            return bad("motion is shorter than the episode");
        }
        if self.intercept_frame > self.frames {
            return bad("intercept frame lies past the episode");
        }
        if let Some(j) = self.jitter {
            if !(j.sigma >= 0.0 && j.sigma.is_finite()) {
                return bad("jitter sigma must be non-negative");
            }
        }
        self.camera.validate().map_err(EngineError::InvalidConfig)?;
        MotionGenerator::new(&self.motion)?;
        Ok(())
    }

    pub fn time(&self, frame: usize) -> f64 {
        frame as f64 * self.dt
    }
}

/// Knobs for building episodes from the catalog.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeOptions {
    pub obs_frames: usize,
    pub lead_frames: usize,
    pub thresholds: Thresholds,
    /// Jitter sigma in frames; `None` disables jitter.
    pub jitter_sigma: Option<f64>,
    /// Caps the episode length (frames) when set.
    pub horizon: Option<usize>,
}

impl Default for EpisodeOptions {
    fn default() -> Self {
        Self {
            obs_frames: DEFAULT_OBS_FRAMES,
            lead_frames: DEFAULT_LEAD_FRAMES,
            thresholds: Thresholds::default(),
            jitter_sigma: None,
            horizon: None,
        }
    }
}

const HAND_DRAWS: usize = 64;
/// Fraction of the action cap the oracle may use when approaching.
const APPROACH_BUDGET: f64 = 0.09;

impl EpisodeConfig {
    /// Deterministically builds an episode for `subcategory` from `seed`:
    /// motion and object from the catalog, intercept frame from the
    /// subcategory's intercept fraction, and a hand start near the intercept
    /// point, clear of the target while observing, with the camera aimed at
    /// the observed stretch of the path.
    pub fn generate(catalog: &Catalog, subcategory: &str, seed: u64, opts: &EpisodeOptions) -> Result<Self, EngineError> {
        let entry = catalog.subcategory(subcategory)?;
        let mut motion = catalog.sample_config(subcategory, seed)?;
        let mut frames = (motion.duration / DT).round() as usize;
        if let Some(h) = opts.horizon {
            frames = frames.min(h);
        }
        motion.duration = frames as f64 * DT;
        if opts.obs_frames >= frames {
            return Err(EngineError::InvalidConfig(format!("{} observe frames leave no control frames", opts.obs_frames)));
        }
        let (object_id, object) = catalog.sample_object(seed);
        let gen = MotionGenerator::new(&motion)?;
        let remaining = (frames - opts.obs_frames) as f64;
        let intercept_frame = opts.obs_frames + (entry.intercept_fraction * remaining).round() as usize;
        let intercept_frame = intercept_frame.min(frames);
        let move_frames = intercept_frame
            .checked_sub(opts.obs_frames + opts.lead_frames)
            .filter(|&m| m > 0)
            .ok_or_else(|| EngineError::Infeasible(format!("intercept frame {intercept_frame} leaves no time to move")))?;
        let intercept = gen.position_at(intercept_frame as f64 * DT)?;
        let observed: Vec<Vec3<f64>> = (0..=opts.obs_frames).map(|k| gen.position_at(k as f64 * DT)).collect::<Result<_, _>>()?;

        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6861_6e64_5f73_7461);
        let reach = APPROACH_BUDGET * move_frames as f64;
        let clearance = opts.thresholds.loc + 0.05;
        let n = observed.len() as f64;
        let centroid = observed.iter().fold(Vec3::zero(), |a, &p| a + p) * (1.0 / n);
        // first draw clear of the target, and the first that also sees it
        // throughout the observation window
        let mut clear = None;
        for _ in 0..HAND_DRAWS {
            let azimuth: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let rise: f64 = rng.random_range(-0.3..0.3);
            let dir = Vec3::new(azimuth.cos(), rise, azimuth.sin()).normalized().expect("non-zero");
            let palm = intercept + dir * rng.random_range(0.5..1.1f64).min(reach);
            if observed.iter().any(|p| p.distance(palm) <= clearance) {
                continue;
            }
            let camera = Camera::default().looking_at(palm, centroid);
            let seen = observed.iter().all(|&p| camera.project(palm, p).visible);
            if seen {
                clear = Some((palm, camera));
                break;
            }
            clear.get_or_insert((palm, camera));
        }
        let (palm, camera) = clear
            .ok_or_else(|| EngineError::Infeasible(format!("{subcategory} seed {seed}: no hand start clear of the target")))?;
        let instruction =
            format!("Observe the {} as it moves ({}), then intercept and grasp it.", object_id, subcategory.replace('_', " "));
        let config = Self {
            episode_id: seed,
            task_type: subcategory.to_string(),
            motion,
            object_id: object_id.to_string(),
            object,
            hand_start: HandState::open(&HandModel::default(), palm),
            camera,
            instruction,
            frames,
            obs_frames: opts.obs_frames,
            dt: DT,
            thresholds: opts.thresholds,
            intercept_frame,
            lead_frames: opts.lead_frames,
            jitter: opts.jitter_sigma.map(|sigma| Jitter { sigma, seed }),
        };
        config.validate()?;
        Ok(config)
    }
}
