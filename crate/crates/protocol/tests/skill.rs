use hoigym::engine::{Action, Camera, Engine, EpisodeConfig, Thresholds};
use hoigym::kinematics::{HandModel, HandState, ObjectShape, Vec3, JOINTS};
use hoigym::motiongen::{FamilyParams, MotionConfig};
use hoigym::DT;
use hoigym_protocol::skill::*;
use proptest::prelude::*;

type V = Vec3<f64>;

fn rollout(t: usize, start: [f64; 18]) -> String {
    let rows: Vec<String> = (1..=t)
        .map(|k| {
            let mut p = start;
            p[2] += 0.02 * k as f64;
            for q in &mut p[3..] {
                *q += 0.05 * k as f64;
            }
            let vals: Vec<String> = p.iter().map(|x| format!("{x}")).collect();
            format!(r#"{{"frame_index": {k}, "hand_params": [{}]}}"#, vals.join(", "))
        })
        .collect();
    rows.join(",\n    ")
}

fn template() -> String {
    format!(
        r#"{{
  "action_sequence": [
    {{
      "skill": "APPROACH",
      "params": {{"target": "object", "target_point": [0.1, 1.0, 0.4], "speed": 0.6}},
      "duration": 4,
      "terminate_if": "palm_distance < 0.3"
    }},
    {{
      "skill": "GRASP",
      "params": {{"joint_targets": 1.0}},
      "duration": 6
    }}
  ],
  "predicted_motion": [
    {}
  ]
}}"#,
        rollout(10, [0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0])
    )
}

#[test]
fn template_is_accepted() {
    let prog = parse_skill_program(&template(), 10).unwrap();
    assert_eq!(prog.steps.len(), 2);
    assert_eq!((prog.steps[0].skill, prog.steps[0].duration), (Skill::Approach, 4));
    assert_eq!((prog.steps[1].skill, prog.steps[1].duration), (Skill::Grasp, 6));
    assert_eq!(prog.steps[0].terminate_if.as_deref(), Some("\"palm_distance < 0.3\""));
    assert_eq!(prog.steps[1].terminate_if, None);
    assert_eq!(prog.predicted_motion.as_ref().unwrap().len(), 10);
}

fn seq(steps: &str) -> String {
    format!(r#"{{"action_sequence": [{steps}]}}"#)
}

fn motion_rows(rows: &[(i64, usize)]) -> String {
    let body: Vec<String> =
        rows.iter().map(|&(k, n)| format!(r#"{{"frame_index": {k}, "hand_params": [{}]}}"#, vec!["0.0"; n].join(","))).collect();
    format!(r#"{{"action_sequence": [{{"skill": "WAIT", "duration": 3}}], "predicted_motion": [{}]}}"#, body.join(","))
}

#[test]
fn malformed_programs_are_diagnosed() {
    let wait10 = r#"{"skill": "WAIT", "duration": 10}"#;
    let cases: Vec<(String, &str)> = vec![
        // syntax
        (template().replace(r#""duration": 6"#, r#""duration": 6,"#), "syntax error at line"),
        (String::new(), "syntax error at line 1"),
        (r#"{"action_sequence": [}"#.into(), "syntax error"),
        // shape
        ("[1, 2]".into(), "$: program must be a JSON object"),
        ("{}".into(), "missing `action_sequence`"),
        (r#"{"action_sequence": {"skill": "WAIT"}}"#.into(), "$.action_sequence: must be an array"),
        (seq(""), "must contain at least one skill"),
        (format!(r#"{{"action_sequence": [{wait10}], "notes": "hi"}}"#), "$.notes: unknown field"),
        (seq(r#""WAIT""#), "$.action_sequence[0]: skill entry must be an object"),
        // skills
        (seq(r#"{"skill": "FLY", "duration": 10}"#), "$.action_sequence[0].skill: invalid skill `FLY`"),
        (seq(r#"{"skill": "approach", "duration": 10}"#), "invalid skill `approach`"),
        (seq(r#"{"skill": 4, "duration": 10}"#), "$.action_sequence[0].skill: must be a string"),
        (seq(r#"{"duration": 10}"#), "missing `skill`"),
        (seq(r#"{"skill": "WAIT", "duration": 10, "speed": 2}"#), "$.action_sequence[0].speed: unknown field"),
        (seq(r#"{"skill": "WAIT", "params": [1], "duration": 10}"#), "$.action_sequence[0].params: must be an object"),
        // durations
        (seq(r#"{"skill": "WAIT"}"#), "missing `duration`"),
        (seq(r#"{"skill": "WAIT", "duration": 0}"#), "duration: must be a positive integer"),
        (seq(r#"{"skill": "WAIT", "duration": -10}"#), "duration: must be a positive integer"),
        (seq(r#"{"skill": "WAIT", "duration": 2.5}"#), "duration: must be a positive integer"),
        (
            seq(r#"{"skill": "APPROACH", "duration": 4}, {"skill": "GRASP", "duration": 5}"#),
            "durations must sum to horizon: got 9, expected 10",
        ),
        // rollout
        (format!(r#"{{"action_sequence": [{wait10}], "predicted_motion": 3}}"#), "$.predicted_motion: must be an array"),
        (motion_rows(&[(1, 18), (2, 18)]), "$.predicted_motion: has 2 frames, expected 3"),
        (motion_rows(&[(1, 18), (2, 18), (4, 18)]), "$.predicted_motion[2].frame_index: expected 3, got 4"),
        (motion_rows(&[(0, 18), (1, 18), (2, 18)]), "$.predicted_motion[0].frame_index: expected 1, got 0"),
        (motion_rows(&[(1, 18), (2, 17), (3, 18)]), "$.predicted_motion[1].hand_params: has 17 values, expected 18"),
        (
            motion_rows(&[(1, 18), (2, 18), (3, 18)]).replacen("0.0", "\"x\"", 1),
            "$.predicted_motion[0].hand_params[0]: must be a finite number",
        ),
    ];
    assert!(cases.len() >= 20);
    for (text, expected) in &cases {
        let horizon = if text.contains("predicted_motion\": [{") { 3 } else { 10 };
        let err = parse_skill_program(text, horizon).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains(expected), "{text}\n  gave `{msg}`, wanted `{expected}`");
        match err {
            SkillError::Syntax { line, column, .. } => assert!(line >= 1 && column <= text.len() + 1),
            SkillError::Semantic { .. } => assert!(!expected.starts_with("syntax")),
            SkillError::Expand { .. } => panic!("parse produced an expansion error"),
        }
    }
}

fn state(palm: V) -> [f64; 18] {
    let mut s = [0.0; 18];
    s[..3].copy_from_slice(&palm.to_array());
    s
}

fn program(steps: &str, t: usize) -> SkillProgram {
    parse_skill_program(&seq(steps), t).unwrap()
}

#[test]
fn wait_is_all_zeros() {
    let acts = expand_skill_program(&program(r#"{"skill": "WAIT", "duration": 10}"#, 10), &state(V::zero()), DT).unwrap();
    assert_eq!(acts, vec![Action::zero(); 10]);
}

#[test]
fn approach_steps_at_speed() {
    let palm = V::new(0.2, 1.0, -0.1);
    let dir = V::new(0.0, 0.6, 0.8);
    let target = palm + dir * 0.5;
    let text = format!(
        r#"{{"skill": "APPROACH", "params": {{"target_point": [{}, {}, {}], "speed": 0.5}}, "duration": 10}}"#,
        target.x, target.y, target.z
    );
    let acts = expand_skill_program(&program(&text, 10), &state(palm), DT).unwrap();
    assert_eq!(acts.len(), 10);
    for a in &acts {
        assert!((a.loc.norm() - 0.025).abs() < 1e-12);
        assert!(a.loc.distance(dir * 0.025) < 1e-12);
        assert_eq!(a.gras, [0.0; JOINTS]);
    }
}

#[test]
fn approach_without_speed_arrives_and_stops() {
    let text = r#"{"skill": "INTERCEPT", "params": {"target_point": [0.3, 0.0, 0.0]}, "duration": 3},
                  {"skill": "APPROACH", "params": {"target_point": [0.3, 0.0, 0.0], "speed": 1.0}, "duration": 2}"#;
    let acts = expand_skill_program(&program(text, 5), &state(V::zero()), DT).unwrap();
    let end = acts.iter().fold(V::zero(), |p, a| p + a.loc);
    assert!(end.distance(V::new(0.3, 0.0, 0.0)) < 1e-12);
    assert!(acts[3].is_zero() && acts[4].is_zero());
}

#[test]
fn grasp_lift_adjust() {
    let text = r#"{"skill": "GRASP", "params": {"joint_targets": 0.6}, "duration": 4},
                  {"skill": "LIFT", "params": {"height": 0.2}, "duration": 2},
                  {"skill": "ADJUST", "params": {"palm_delta": [0.04, 0, 0], "joint_delta": -0.2}, "duration": 4}"#;
    let acts = expand_skill_program(&program(text, 10), &state(V::zero()), DT).unwrap();
    for a in &acts[..4] {
        assert!(a.gras.iter().all(|&d| (d - 0.15).abs() < 1e-12));
    }
    let q: f64 = acts[..4].iter().map(|a| a.gras[5]).sum();
    assert!((q - 0.6).abs() < 1e-12);
    assert!(acts[4].loc.distance(V::new(0.0, 0.1, 0.0)) < 1e-12);
    assert!(acts[9].loc.distance(V::new(0.01, 0.0, 0.0)) < 1e-12);
    assert!((acts[9].gras[0] + 0.05).abs() < 1e-12);
}

#[test]
fn missing_parameters_fail_expansion() {
    for (text, needle) in [
        (r#"{"skill": "APPROACH", "params": {"target": "object"}, "duration": 2}"#, "`target_point`"),
        (r#"{"skill": "GRASP", "duration": 2}"#, "`joint_targets`"),
        (r#"{"skill": "LIFT", "params": {"height": [1, 2]}, "duration": 2}"#, "single number"),
        (r#"{"skill": "ADJUST", "params": {}, "duration": 2}"#, "needs `palm_delta`"),
        (r#"{"skill": "APPROACH", "params": {"target_point": [1, 2]}, "duration": 2}"#, "3 values"),
        (r#"{"skill": "APPROACH", "params": {"target_point": [1, 2, 3], "speed": -1}, "duration": 2}"#, "positive"),
        (r#"{"skill": "GRASP", "params": {"joint_targets": [1, 2]}, "duration": 2}"#, "1 or 15"),
    ] {
        let err = expand_skill_program(&program(text, 2), &state(V::zero()), DT).unwrap_err();
        assert!(matches!(err, SkillError::Expand { step: 0, .. }));
        assert!(err.to_string().contains(needle), "{err}");
    }
}

#[test]
fn rollout_deltas_replay_to_the_absolutes() {
    let start = [0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
    let prog = parse_skill_program(&template(), 10).unwrap();
    let acts = expand_skill_program(&prog, &start, DT).unwrap();
    let mut s = start;
    for (a, target) in acts.iter().zip(prog.predicted_motion.as_ref().unwrap()) {
        for (x, d) in s.iter_mut().zip(a.to_vector()) {
            *x += d;
        }
        assert!(s.iter().zip(target).all(|(x, y)| (x - y).abs() < 1e-9));
    }
}

fn engine_with(params: FamilyParams<f64>) -> EpisodeConfig {
    let model = HandModel::default();
    EpisodeConfig {
        episode_id: 0,
        task_type: "manual".into(),
        motion: MotionConfig::new("manual", 0, 2.0, params),
        object_id: "ball".into(),
        object: ObjectShape::sphere(V::zero(), 0.25).unwrap(),
        hand_start: HandState::open(&model, V::new(0.0, 1.0, 0.0)),
        camera: Camera::default(),
        instruction: "catch".into(),
        frames: 40,
        obs_frames: 5,
        dt: DT,
        thresholds: Thresholds::default(),
        intercept_frame: 30,
        lead_frames: 2,
        jitter: None,
    }
}

#[test]
fn expansion_ignores_the_target_motion() {
    let a = engine_with(FamilyParams::StraightLine { start: V::new(1.0, 1.0, 2.0), velocity: V::new(-0.5, 0.0, 0.0) });
    let b = engine_with(FamilyParams::StraightLine { start: V::new(-2.0, 0.5, 3.0), velocity: V::new(0.3, 0.4, -1.0) });
    let prog = parse_skill_program(
        r#"{"action_sequence": [{"skill": "APPROACH", "params": {"target_point": [0.1, 1.0, 0.4], "speed": 0.6}, "duration": 4},
                                {"skill": "GRASP", "params": {"joint_targets": 1.0}, "duration": 6}]}"#,
        10,
    )
    .unwrap();
    let mut seqs = vec![];
    for cfg in [a, b] {
        let (mut engine, mut obs) = Engine::reset(cfg).unwrap();
        while obs.observing {
            obs = engine.step(&Action::zero(), None).unwrap().observation;
        }
        seqs.push(expand_skill_program(&prog, &obs.state_vector(), DT).unwrap());
    }
    assert_eq!(seqs[0], seqs[1]);
}

proptest! {
    #[test]
    fn parser_is_total(text in ".{0,200}") {
        let _ = parse_skill_program(&text, 10);
    }

    #[test]
    fn parser_is_total_on_json_like_text(
        parts in prop::collection::vec(prop::sample::select(vec![
            "{", "}", "[", "]", ",", ":", "\"skill\"", "\"WAIT\"", "\"duration\"", "10", "-1", "\"action_sequence\"",
            "\"predicted_motion\"", "\"frame_index\"", "\"hand_params\"", "1e400", "null", "true", "\"params\"",
        ]), 0..60)
    ) {
        let _ = parse_skill_program(&parts.concat(), 10);
    }
}
