use serde::{Deserialize, Serialize};

use super::record::{EpisodeRecord, FinalState, FrameRecord, JitterLog};
use super::{Action, Camera, EngineError, EpisodeConfig, Projection};
use crate::kinematics::{
    contact_test, fingertip_surface_distance, palm_object_distance, HandModel, HandState, ObjectShape, Vec3, FINGERS, JOINTS,
};
use crate::motiongen::MotionGenerator;

/// What a controller sees at one frame. The target appears only through the
/// palm camera.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub frame: usize,
    pub time: f64,
    pub camera: CameraObservation,
    pub palm: Vec3<f64>,
    pub joints: [f64; JOINTS],
    pub fingertips: [Vec3<f64>; FINGERS],
    pub instruction: String,
    /// True while the hand is frozen for observation.
    pub observing: bool,
    /// True once the object is carried by the hand.
    pub attached: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraObservation {
    pub intrinsics: String,
    #[serde(flatten)]
    pub projection: Projection,
}

impl Observation {
    /// 18-vector of palm position and joint angles.
    pub fn state_vector(&self) -> [f64; 18] {
        let mut out = [0.0; 18];
        out[..3].copy_from_slice(&self.palm.to_array());
        out[3..].copy_from_slice(&self.joints);
        out
    }
}

/// Step-wise action source driven by the engine.
pub trait Controller {
    fn name(&self) -> &str;

    fn act(&mut self, obs: &Observation) -> Result<Action, String>;

    /// Label of the controller's internal phase for the last action, if any.
    fn phase(&self) -> Option<String> {
        None
    }
}

/// Fixed-step simulation of one episode. Records every frame as it goes.
#[derive(Debug, Clone)]
pub struct Engine {
    config: EpisodeConfig,
    model: HandModel<f64>,
    camera: Camera,
    motion: MotionGenerator<f64>,
    hand: HandState<f64>,
    object: ObjectShape<f64>,
    attach_offset: Option<Vec3<f64>>,
    frame: usize,
    first_success: Option<usize>,
    frames: Vec<FrameRecord>,
}

/// Result of one step.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub observation: Observation,
    pub applied: Action,
    pub done: bool,
}

impl Engine {
    pub fn reset(config: EpisodeConfig) -> Result<(Self, Observation), EngineError> {
        config.validate()?;
        let camera = config.camera.clone();
        let model = HandModel::default();
        let motion = MotionGenerator::new(&config.motion)?;
        let hand = HandState::new(&model, config.hand_start.palm, config.hand_start.joints);
        let object = config.object.at(motion.position_at(0.0)?);
        let mut engine = Self {
            config,
            model,
            camera,
            motion,
            hand,
            object,
            attach_offset: None,
            frame: 0,
            first_success: None,
            frames: Vec::new(),
        };
        engine.check_attach();
        let obs = engine.observe();
        Ok((engine, obs))
    }

    pub fn config(&self) -> &EpisodeConfig {
        &self.config
    }

    pub fn camera(&self) -> &Camera {
        &self.camera
    }

    pub fn frame(&self) -> usize {
        self.frame
    }

    pub fn is_done(&self) -> bool {
        self.frame >= self.config.frames
    }

    pub fn hand(&self) -> &HandState<f64> {
        &self.hand
    }

    pub fn object(&self) -> &ObjectShape<f64> {
        &self.object
    }

    pub fn attached(&self) -> bool {
        self.attach_offset.is_some()
    }

    fn observing(&self) -> bool {
        self.frame < self.config.obs_frames
    }

    fn check_attach(&mut self) {
        let d = palm_object_distance(&self.hand, &self.object);
        if self.attach_offset.is_none() && d <= self.config.thresholds.loc {
            self.attach_offset = Some(self.object.position - self.hand.palm);
        }
        if self.first_success.is_none() && d <= self.config.thresholds.loc {
            self.first_success = Some(self.frame);
        }
    }

    /// Observation of the current state. Depends only on the state at the
    /// current frame.
    pub fn observe(&self) -> Observation {
        Observation {
            frame: self.frame,
            time: self.config.time(self.frame),
            camera: CameraObservation {
                intrinsics: self.camera.id.clone(),
                projection: self.camera.project(self.hand.palm, self.object.position),
            },
            palm: self.hand.palm,
            joints: self.hand.joints,
            fingertips: self.hand.fingertips.map(|p| p.position),
            instruction: self.config.instruction.clone(),
            observing: self.observing(),
            attached: self.attached(),
        }
    }

    /// Applies one action. During observation the action is ignored.
    pub fn step(&mut self, action: &Action, phase: Option<String>) -> Result<Step, EngineError> {
        if self.is_done() {
            return Err(EngineError::StepAfterDone { frame: self.frame });
        }
        let applied = if self.observing() { Action::zero() } else { action.clamped() };
        let observation = self.observe();
        let contacts = contact_test(&self.model, &self.hand, &self.object);
        self.frames.push(FrameRecord {
            frame: self.frame,
            target: self.object.position,
            object_distance: palm_object_distance(&self.hand, &self.object),
            fingertip_distance: fingertip_surface_distance(&self.hand, &self.object),
            contacts,
            attached: self.attached(),
            done: self.first_success.is_some(),
            phase,
            observation,
            action: applied,
        });

        let palm = self.hand.palm + applied.loc;
        let mut joints = self.hand.joints;
        for (q, d) in joints.iter_mut().zip(applied.gras) {
            *q += d;
        }
        self.hand = HandState::new(&self.model, palm, joints);
        self.frame += 1;
        let position = match self.attach_offset {
            Some(offset) => self.hand.palm + offset,
            None => self.motion.position_at(self.config.time(self.frame))?,
        };
        self.object = self.object.at(position);
        self.check_attach();
        Ok(Step { observation: self.observe(), applied, done: self.is_done() })
    }

    /// Finishes the episode and returns its record. Fails unless all frames
    /// were stepped.
    pub fn into_record(self, controller: &str) -> Result<EpisodeRecord, EngineError> {
        if !self.is_done() {
            return Err(EngineError::Incomplete { frame: self.frame, frames: self.config.frames });
        }
        let final_state = FinalState {
            palm: self.hand.palm,
            joints: self.hand.joints,
            target: self.object.position,
            object_distance: palm_object_distance(&self.hand, &self.object),
            fingertip_distance: fingertip_surface_distance(&self.hand, &self.object),
            contacts: contact_test(&self.model, &self.hand, &self.object),
            attached: self.attached(),
        };
        let log = self.config.jitter.map(|j| JitterLog::sample(j, self.config.frames));
        Ok(EpisodeRecord { config: self.config, controller: controller.to_string(), frames: self.frames, final_state, log })
    }
}

/// Runs a full closed-loop episode.
pub fn run_rollout(config: &EpisodeConfig, controller: &mut dyn Controller) -> Result<EpisodeRecord, EngineError> {
    let (mut engine, mut obs) = Engine::reset(config.clone())?;
    while !engine.is_done() {
        let action = controller.act(&obs).map_err(|message| EngineError::Controller { frame: engine.frame(), message })?;
        obs = engine.step(&action, controller.phase())?.observation;
    }
    engine.into_record(controller.name())
}
