//! Skill programs: a JSON response naming a short sequence of parameterised
//! skills whose durations fill the action horizon, optionally with an
//! explicit per-frame rollout of absolute hand parameters.
//!
//! ```json
//! {
//!   "action_sequence": [
//!     {"skill": "APPROACH", "params": {"target_point": [0.4, 1.0, 0.6], "speed": 0.8}, "duration": 4},
//!     {"skill": "GRASP", "params": {"joint_targets": 1.2}, "duration": 6}
//!   ],
//!   "predicted_motion": [{"frame_index": 1, "hand_params": [18 numbers]}, ...]
//! }
//! ```
//!
//! Parameters by skill (all explicit numbers, nothing is predicted here):
//!
//! - `WAIT`: none.
//! - `APPROACH`, `INTERCEPT`: `target_point` [x, y, z]; optional `speed` in
//!   m/s, otherwise the speed that arrives at the end of the step.
//! - `GRASP`: `joint_targets`, one angle or 15 angles in radians.
//! - `LIFT`: `height` in metres, spread over the step.
//! - `ADJUST`: `palm_delta` [3] and/or `joint_delta` (one or 15 values),
//!   spread over the step.
//!
//! `terminate_if` is kept verbatim and never evaluated.

use std::fmt;
use std::str::FromStr;

use hoigym::engine::{Action, GRAS_CAP, LOC_CAP};
use hoigym::kinematics::{clamp_joint, Vec3, JOINTS};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::wire::STATE_DIM;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Skill {
    Wait,
    Approach,
    Intercept,
    Grasp,
    Lift,
    Adjust,
}

impl Skill {
    pub const ALL: [Skill; 6] = [Skill::Wait, Skill::Approach, Skill::Intercept, Skill::Grasp, Skill::Lift, Skill::Adjust];

    pub fn name(self) -> &'static str {
        match self {
            Skill::Wait => "WAIT",
            Skill::Approach => "APPROACH",
            Skill::Intercept => "INTERCEPT",
            Skill::Grasp => "GRASP",
            Skill::Lift => "LIFT",
            Skill::Adjust => "ADJUST",
        }
    }
}

impl fmt::Display for Skill {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Skill {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        Skill::ALL.into_iter().find(|k| k.name() == s).ok_or(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkillStep {
    pub skill: Skill,
    pub params: Map<String, Value>,
    pub duration: usize,
    /// Raw JSON of the predicate, if one was given.
    pub terminate_if: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkillProgram {
    pub horizon: usize,
    pub steps: Vec<SkillStep>,
    /// Absolute hand parameters for frames 1..=horizon.
    pub predicted_motion: Option<Vec<[f64; STATE_DIM]>>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SkillError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("{path}: {message}")]
    Semantic { path: String, message: String },
    #[error("step {step} ({skill}): {message}")]
    Expand { step: usize, skill: Skill, message: String },
}

fn semantic<T>(path: impl Into<String>, message: impl Into<String>) -> Result<T, SkillError> {
    Err(SkillError::Semantic { path: path.into(), message: message.into() })
}

/// Strictly parses a skill program for horizon `horizon`.
pub fn parse_skill_program(text: &str, horizon: usize) -> Result<SkillProgram, SkillError> {
    let value: Value = serde_json::from_str(text).map_err(|e| SkillError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let Some(root) = value.as_object() else {
        return semantic("$", "program must be a JSON object");
    };
    if let Some(k) = root.keys().find(|k| !matches!(k.as_str(), "action_sequence" | "predicted_motion")) {
        return semantic(format!("$.{k}"), "unknown field");
    }
    let Some(seq) = root.get("action_sequence") else {
        return semantic("$", "missing `action_sequence`");
    };
    let Some(seq) = seq.as_array() else {
        return semantic("$.action_sequence", "must be an array");
    };
    if seq.is_empty() {
        return semantic("$.action_sequence", "must contain at least one skill");
    }
    let steps = seq.iter().enumerate().map(|(i, v)| parse_step(i, v)).collect::<Result<Vec<_>, _>>()?;
    let total: usize = steps.iter().map(|s| s.duration).sum();
    if total != horizon {
        return semantic("$.action_sequence", format!("durations must sum to horizon: got {total}, expected {horizon}"));
    }
    let predicted_motion = match root.get("predicted_motion") {
        None => None,
        Some(v) => Some(parse_motion(v, horizon)?),
    };
    Ok(SkillProgram { horizon, steps, predicted_motion })
}

fn parse_step(i: usize, v: &Value) -> Result<SkillStep, SkillError> {
    let path = format!("$.action_sequence[{i}]");
    let Some(obj) = v.as_object() else {
        return semantic(path, "skill entry must be an object");
    };
    if let Some(k) = obj.keys().find(|k| !matches!(k.as_str(), "skill" | "params" | "duration" | "terminate_if")) {
        return semantic(format!("{path}.{k}"), "unknown field");
    }
    let skill = match obj.get("skill") {
        None => return semantic(path, "missing `skill`"),
        Some(Value::String(s)) => match s.parse::<Skill>() {
            Ok(k) => k,
            Err(()) => return semantic(format!("{path}.skill"), format!("invalid skill `{s}`")),
        },
        Some(_) => return semantic(format!("{path}.skill"), "must be a string"),
    };
    let params = match obj.get("params") {
        None => Map::new(),
        Some(Value::Object(m)) => m.clone(),
        Some(_) => return semantic(format!("{path}.params"), "must be an object"),
    };
    let duration = match obj.get("duration") {
        None => return semantic(path, "missing `duration`"),
        Some(d) => match d.as_u64() {
            Some(n) if n >= 1 => n as usize,
            _ => return semantic(format!("{path}.duration"), format!("must be a positive integer, got {d}")),
        },
    };
    let terminate_if = obj.get("terminate_if").map(Value::to_string);
    Ok(SkillStep { skill, params, duration, terminate_if })
}

fn parse_motion(v: &Value, horizon: usize) -> Result<Vec<[f64; STATE_DIM]>, SkillError> {
    let Some(rows) = v.as_array() else {
        return semantic("$.predicted_motion", "must be an array");
    };
    if rows.len() != horizon {
        return semantic("$.predicted_motion", format!("has {} frames, expected {horizon}", rows.len()));
    }
    let mut out = Vec::with_capacity(horizon);
    for (i, row) in rows.iter().enumerate() {
        let path = format!("$.predicted_motion[{i}]");
        let Some(obj) = row.as_object() else {
            return semantic(path, "frame entry must be an object");
        };
        if let Some(k) = obj.keys().find(|k| !matches!(k.as_str(), "frame_index" | "hand_params")) {
            return semantic(format!("{path}.{k}"), "unknown field");
        }
        match obj.get("frame_index").and_then(Value::as_u64) {
            Some(f) if f as usize == i + 1 => {}
            Some(f) => return semantic(format!("{path}.frame_index"), format!("expected {}, got {f}", i + 1)),
            None => return semantic(format!("{path}.frame_index"), "missing or not a positive integer"),
        }
        let Some(params) = obj.get("hand_params").and_then(Value::as_array) else {
            return semantic(format!("{path}.hand_params"), "missing or not an array");
        };
        if params.len() != STATE_DIM {
            return semantic(format!("{path}.hand_params"), format!("has {} values, expected {STATE_DIM}", params.len()));
        }
        let mut frame = [0.0; STATE_DIM];
        for (j, p) in params.iter().enumerate() {
            match p.as_f64() {
                Some(x) if x.is_finite() => frame[j] = x,
                _ => return semantic(format!("{path}.hand_params[{j}]"), "must be a finite number"),
            }
        }
        out.push(frame);
    }
    Ok(out)
}

struct Params<'a> {
    step: usize,
    skill: Skill,
    map: &'a Map<String, Value>,
}

impl Params<'_> {
    fn err<T>(&self, message: impl Into<String>) -> Result<T, SkillError> {
        Err(SkillError::Expand { step: self.step, skill: self.skill, message: message.into() })
    }

    fn numbers(&self, key: &str) -> Result<Option<Vec<f64>>, SkillError> {
        let Some(v) = self.map.get(key) else {
            return Ok(None);
        };
        let xs: Option<Vec<f64>> = match v {
            Value::Array(a) => a.iter().map(Value::as_f64).collect(),
            other => other.as_f64().map(|x| vec![x]),
        };
        match xs {
            Some(xs) if xs.iter().all(|x| x.is_finite()) => Ok(Some(xs)),
            _ => self.err(format!("`{key}` must be numeric")),
        }
    }

    fn vec3(&self, key: &str) -> Result<Option<Vec3<f64>>, SkillError> {
        match self.numbers(key)? {
            None => Ok(None),
            Some(xs) if xs.len() == 3 => Ok(Some(Vec3::new(xs[0], xs[1], xs[2]))),
            Some(xs) => self.err(format!("`{key}` needs 3 values, got {}", xs.len())),
        }
    }

    fn scalar(&self, key: &str) -> Result<Option<f64>, SkillError> {
        match self.numbers(key)? {
            None => Ok(None),
            Some(xs) if xs.len() == 1 && !self.map[key].is_array() => Ok(Some(xs[0])),
            Some(_) => self.err(format!("`{key}` must be a single number")),
        }
    }

    /// One value broadcast to every joint, or one value per joint.
    fn joints(&self, key: &str) -> Result<Option<[f64; JOINTS]>, SkillError> {
        match self.numbers(key)? {
            None => Ok(None),
            Some(xs) if xs.len() == 1 => Ok(Some([xs[0]; JOINTS])),
            Some(xs) if xs.len() == JOINTS => Ok(Some(std::array::from_fn(|i| xs[i]))),
            Some(xs) => self.err(format!("`{key}` needs 1 or {JOINTS} values, got {}", xs.len())),
        }
    }

    fn require<T>(&self, key: &str, v: Option<T>) -> Result<T, SkillError> {
        match v {
            Some(v) => Ok(v),
            None => self.err(format!("missing required parameter `{key}`")),
        }
    }
}

fn cap_loc(v: Vec3<f64>) -> Vec3<f64> {
    let n = v.norm();
    if n > LOC_CAP {
        v * (LOC_CAP / n)
    } else {
        v
    }
}

/// Turns a program into one action per frame of its horizon, starting from
/// the 18-value hand `state` (palm then joints). The output depends only on
/// the program and the state.
pub fn expand_skill_program(prog: &SkillProgram, state: &[f64; STATE_DIM], dt: f64) -> Result<Vec<Action>, SkillError> {
    if let Some(motion) = &prog.predicted_motion {
        let mut prev = *state;
        return Ok(motion
            .iter()
            .map(|next| {
                let delta: [f64; STATE_DIM] = std::array::from_fn(|i| next[i] - prev[i]);
                prev = *next;
                Action::from_vector(&delta)
            })
            .collect());
    }
    let mut palm = Vec3::new(state[0], state[1], state[2]);
    let mut joints: [f64; JOINTS] = std::array::from_fn(|i| state[3 + i]);
    let mut out = Vec::with_capacity(prog.horizon);
    for (step, s) in prog.steps.iter().enumerate() {
        let p = Params { step, skill: s.skill, map: &s.params };
        let n = s.duration as f64;
        let mut emit = |a: Action, palm: &mut Vec3<f64>, joints: &mut [f64; JOINTS]| {
            *palm += a.loc;
            for (q, d) in joints.iter_mut().zip(a.gras) {
                *q = clamp_joint(*q + d);
            }
            out.push(a);
        };
        match s.skill {
            Skill::Wait => (0..s.duration).for_each(|_| emit(Action::zero(), &mut palm, &mut joints)),
            Skill::Approach | Skill::Intercept => {
                let target = p.require("target_point", p.vec3("target_point")?)?;
                let speed = p.scalar("speed")?;
                if speed.is_some_and(|v| v <= 0.0) {
                    return p.err("`speed` must be positive");
                }
                let per_frame = speed.map(|v| v * dt).unwrap_or(target.distance(palm) / n).min(LOC_CAP);
                for _ in 0..s.duration {
                    let to_go = target - palm;
                    let len = to_go.norm();
                    let delta = if len <= per_frame { to_go } else { to_go * (per_frame / len) };
                    emit(Action::translate(delta), &mut palm, &mut joints);
                }
            }
            Skill::Grasp => {
                let targets = p.require("joint_targets", p.joints("joint_targets")?)?;
                let rate: [f64; JOINTS] =
                    std::array::from_fn(|i| ((clamp_joint(targets[i]) - joints[i]) / n).clamp(-GRAS_CAP, GRAS_CAP));
                for _ in 0..s.duration {
                    let mut a = Action::zero();
                    for i in 0..JOINTS {
                        let remaining = clamp_joint(targets[i]) - joints[i];
                        a.gras[i] = if remaining.abs() <= rate[i].abs() { remaining } else { rate[i] };
                    }
                    emit(a, &mut palm, &mut joints);
                }
            }
            Skill::Lift => {
                let height = p.require("height", p.scalar("height")?)?;
                let delta = cap_loc(Vec3::new(0.0, height / n, 0.0));
                (0..s.duration).for_each(|_| emit(Action::translate(delta), &mut palm, &mut joints));
            }
            Skill::Adjust => {
                let palm_delta = p.vec3("palm_delta")?;
                let joint_delta = p.joints("joint_delta")?;
                if palm_delta.is_none() && joint_delta.is_none() {
                    return p.err("needs `palm_delta` or `joint_delta`");
                }
                let mut a = Action::translate(cap_loc(palm_delta.unwrap_or_else(Vec3::zero) / n));
                if let Some(j) = joint_delta {
                    a.gras = j.map(|d| (d / n).clamp(-GRAS_CAP, GRAS_CAP));
                }
                (0..s.duration).for_each(|_| emit(a, &mut palm, &mut joints));
            }
        }
    }
    Ok(out)
}
