//! Scripted ground-truth controller. It plans one intercept from the true
//! motion model, then runs observe, move, wait and close in that order.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::engine::{run_rollout, Action, Controller, EngineError, EpisodeConfig, EpisodeRecord, Observation, LOC_CAP};
use crate::kinematics::{contact_test, HandModel, HandState, ObjectShape, Vec3, JOINTS, MAX_GRAB_ROTATION};
use crate::motiongen::{MotionConfig, MotionError, MotionGenerator};

/// Finger closing rate, rad/s.
pub const CLOSE_RATE: f64 = FRAC_PI_2;
/// Joint delta applied per frame while closing.
pub const CLOSE_DELTA: f64 = CLOSE_RATE * crate::DT;
/// Horizontal distance at which a waiting oracle starts closing.
pub const PLANAR_TOLERANCE: f64 = 0.05;

/// The reference grasp command: every joint closing at the oracle's rate.
pub fn gt_grasp() -> [f64; JOINTS] {
    [CLOSE_DELTA; JOINTS]
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error("infeasible intercept: {0}")]
    Infeasible(String),
    #[error(transparent)]
    Motion(#[from] MotionError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterceptPlan {
    pub observation_time: f64,
    pub intercept_time: f64,
    pub lead_time: f64,
    pub hand_start: Vec3<f64>,
    pub target_position: Vec3<f64>,
    /// Zero only for a wait-only plan.
    pub move_speed: f64,
    pub planar_tolerance: f64,
    /// True when the hand already sits at the intercept point.
    pub wait_only: bool,
}

impl InterceptPlan {
    pub fn travel_window(&self) -> f64 {
        self.intercept_time - self.observation_time - self.lead_time
    }
}

/// Plans a constant-speed approach that reaches `position_at(t_i)` exactly
/// `lead_time` before the target does.
pub fn plan_intercept(
    config: &MotionConfig<f64>,
    hand_start: Vec3<f64>,
    t_obs: f64,
    lead_time: f64,
    t_i: f64,
) -> Result<InterceptPlan, OracleError> {
    if !(t_obs >= 0.0 && lead_time >= 0.0) {
        return Err(OracleError::Infeasible("observation and lead times must be non-negative".into()));
    }
    let window = t_i - t_obs - lead_time;
    if !(window > 0.0) {
        return Err(OracleError::Infeasible(format!("no travel time: window {window} s")));
    }
    if t_i > config.duration + 1e-9 {
        return Err(OracleError::Infeasible(format!("intercept at {t_i} s is past the {} s horizon", config.duration)));
    }
    let target_position = MotionGenerator::new(config)?.position_at(t_i)?;
    let distance = target_position.distance(hand_start);
    let move_speed = distance / window;
    if move_speed * crate::DT > LOC_CAP + 1e-12 {
        return Err(OracleError::Infeasible(format!("needs {move_speed:.3} m/s, above the {:.3} m/s cap", LOC_CAP / crate::DT)));
    }
    Ok(InterceptPlan {
        observation_time: t_obs,
        intercept_time: t_i,
        lead_time,
        hand_start,
        target_position,
        move_speed,
        planar_tolerance: PLANAR_TOLERANCE,
        wait_only: distance == 0.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum OraclePhase {
    Observe,
    Move,
    Wait,
    Close,
    Done,
}

impl OraclePhase {
    pub fn name(self) -> &'static str {
        match self {
            OraclePhase::Observe => "observe",
            OraclePhase::Move => "move",
            OraclePhase::Wait => "wait",
            OraclePhase::Close => "close",
            OraclePhase::Done => "done",
        }
    }
}

impl fmt::Display for OraclePhase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OraclePhase {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [OraclePhase::Observe, OraclePhase::Move, OraclePhase::Wait, OraclePhase::Close, OraclePhase::Done]
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown oracle phase `{s}`"))
    }
}

/// What the oracle knows at one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleInput<'a> {
    pub hand: &'a HandState<f64>,
    /// Object at its current pose.
    pub object: &'a ObjectShape<f64>,
    pub time: f64,
    pub attached: bool,
    /// True only on the first frame the object is attached.
    pub just_attached: bool,
}

/// One step of the state machine. Returns the action and the phase that
/// produced it; phases only move forward.
pub fn oracle_step(
    plan: &InterceptPlan,
    phase: OraclePhase,
    input: &OracleInput,
    model: &HandModel<f64>,
) -> (Action, OraclePhase) {
    let started = phase;
    let mut phase = phase;
    loop {
        // the fingers close on entry and on the attachment frame, even when
        // already touching
        let must_close = phase == OraclePhase::Close && (started != OraclePhase::Close || input.just_attached);
        match phase {
            OraclePhase::Observe => {
                if input.time < plan.observation_time - 1e-9 {
                    return (Action::zero(), phase);
                }
                phase = if plan.wait_only { OraclePhase::Wait } else { OraclePhase::Move };
            }
            OraclePhase::Move => {
                if input.attached {
                    phase = OraclePhase::Close;
                    continue;
                }
                let to_go = plan.target_position - input.hand.palm;
                let remaining = to_go.norm();
                let step = plan.move_speed * crate::DT;
                if remaining <= 1e-12 {
                    phase = OraclePhase::Wait;
                    continue;
                }
                // snap the final step so the palm lands on the target exactly
                let delta = if remaining <= step + 1e-9 { to_go } else { to_go * (step / remaining) };
                return (Action::translate(delta), phase);
            }
            OraclePhase::Wait => {
                let planar = input.object.position.horizontal().distance(input.hand.palm.horizontal());
                if input.attached || planar <= plan.planar_tolerance {
                    phase = OraclePhase::Close;
                    continue;
                }
                return (Action::zero(), phase);
            }
            OraclePhase::Close if must_close => return (Action::close(CLOSE_DELTA), phase),
            OraclePhase::Close => {
                let all_contact = contact_test(model, input.hand, input.object).iter().all(|&c| c);
                let all_closed = input.hand.joints.iter().all(|&q| q >= MAX_GRAB_ROTATION - 1e-9);
                if (input.attached && all_contact) || all_closed {
                    phase = OraclePhase::Done;
                    continue;
                }
                return (Action::close(CLOSE_DELTA), phase);
            }
            OraclePhase::Done => return (Action::zero(), phase),
        }
    }
}

/// The oracle as an engine controller. It reads the palm, joints and the
/// attachment flag from observations and the target pose from the motion
/// model it was built with.
#[derive(Debug, Clone)]
pub struct Oracle {
    plan: InterceptPlan,
    phase: OraclePhase,
    model: HandModel<f64>,
    motion: MotionGenerator<f64>,
    object: ObjectShape<f64>,
    attach_offset: Option<Vec3<f64>>,
}

impl Oracle {
    pub fn new(config: &EpisodeConfig) -> Result<Self, OracleError> {
        let plan = plan_intercept(
            &config.motion,
            config.hand_start.palm,
            config.time(config.obs_frames),
            config.time(config.lead_frames),
            config.time(config.intercept_frame),
        )?;
        Ok(Self {
            plan,
            phase: OraclePhase::Observe,
            model: HandModel::default(),
            motion: MotionGenerator::new(&config.motion)?,
            object: config.object,
            attach_offset: None,
        })
    }

    pub fn plan(&self) -> &InterceptPlan {
        &self.plan
    }

    pub fn current_phase(&self) -> OraclePhase {
        self.phase
    }
}

impl Controller for Oracle {
    fn name(&self) -> &str {
        "oracle"
    }

    fn act(&mut self, obs: &Observation) -> Result<Action, String> {
        if obs.observing {
            self.phase = OraclePhase::Observe;
            return Ok(Action::zero());
        }
        let free = self.motion.position_at(obs.time).map_err(|e| e.to_string())?;
        let just_attached = obs.attached && self.attach_offset.is_none();
        if just_attached {
            self.attach_offset = Some(free - obs.palm);
        }
        let position = self.attach_offset.map_or(free, |o| obs.palm + o);
        let hand = HandState::new(&self.model, obs.palm, obs.joints);
        let object = self.object.at(position);
        let input = OracleInput { hand: &hand, object: &object, time: obs.time, attached: obs.attached, just_attached };
        let (action, phase) = oracle_step(&self.plan, self.phase, &input, &self.model);
        self.phase = phase;
        Ok(action)
    }

    fn phase(&self) -> Option<String> {
        Some(self.phase.name().to_string())
    }
}

/// Full oracle rollout. Infeasible plans fail before any frame is simulated.
pub fn run_gt_episode(config: &EpisodeConfig) -> Result<EpisodeRecord, OracleError> {
    let mut oracle = Oracle::new(config)?;
    Ok(run_rollout(config, &mut oracle)?)
}
