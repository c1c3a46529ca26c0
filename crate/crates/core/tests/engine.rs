mod common;

use common::{manual, still, V};
use hoigym::engine::agents::{Chaser, Extrapolator, ZeroAgent};
use hoigym::engine::*;
use hoigym::kinematics::JOINTS;
use hoigym::metrics::{evaluate, phase_quality, Summary};
use hoigym::motiongen::{Catalog, FamilyParams, MotionGenerator};
use hoigym::oracle::{gt_grasp, run_gt_episode};
use proptest::prelude::*;

fn line_config() -> EpisodeConfig {
    let params = FamilyParams::StraightLine { start: V::new(0.0, 1.0, 2.0), velocity: V::new(0.5, 0.0, 0.0) };
    manual(params, V::new(0.0, 1.0, 0.5), 40, 10, 30)
}

#[test]
fn reset_is_deterministic() {
    let (_, a) = Engine::reset(line_config()).unwrap();
    let (_, b) = Engine::reset(line_config()).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.frame, 0);
    assert_eq!(a.palm, V::new(0.0, 1.0, 0.5));
}

#[test]
fn observe_frames_are_marked_and_frozen() {
    let cfg = line_config();
    let (mut engine, _) = Engine::reset(cfg.clone()).unwrap();
    let push = Action::translate(V::new(0.05, 0.0, 0.0));
    for _ in 0..cfg.frames {
        engine.step(&push, None).unwrap();
    }
    let rec = engine.into_record("pusher").unwrap();
    for f in &rec.frames {
        assert_eq!(f.observation.observing, f.frame < 10);
        if f.frame < 10 {
            assert!(f.action.is_zero());
            assert_eq!(f.observation.palm, cfg.hand_start.palm);
        } else {
            assert_eq!(f.action, push);
        }
    }
}

#[test]
fn pinhole_examples() {
    let cam = Camera::default();
    let palm = V::new(0.3, 1.0, -0.2);
    // on the optical axis, one metre ahead
    let p = cam.project(palm, cam.center(palm) + V::new(0.0, 0.0, 1.0));
    assert_eq!((p.u, p.v, p.depth, p.visible), (Some(cam.cx), Some(cam.cy), 1.0, true));
    // zero depth
    let p = cam.project_camera(V::new(0.1, 0.0, 0.0));
    assert!(!p.visible && p.u.is_none());
    // behind the camera
    let p = cam.project(palm, cam.center(palm) - V::new(0.0, 0.0, 1.0));
    assert!(!p.visible && p.u.is_none() && p.v.is_none() && p.depth < 0.0);
    // u = cx + f x / z
    let wide = Camera { focal: 500.0, ..Camera::default() };
    let p = wide.project_camera(V::new(0.1, 0.0, 1.0));
    assert!((p.u.unwrap() - 370.0).abs() < 1e-12);
    assert!((p.v.unwrap() - 240.0).abs() < 1e-12);
    // camera x points to world -x when looking along +z
    let q = cam.project(palm, cam.center(palm) + V::new(-0.1, 0.0, 1.0));
    assert!(q.u.unwrap() > cam.cx);
}

#[test]
fn looking_at_centres_the_point() {
    let palm = V::new(0.0, 1.0, 0.0);
    let target = V::new(1.5, 0.7, -0.8);
    let cam = Camera::default().looking_at(palm, target);
    let p = cam.project(palm, target);
    assert!(p.visible);
    assert!((p.u.unwrap() - cam.cx).abs() < 1e-9 && (p.v.unwrap() - cam.cy).abs() < 1e-9);
    assert!((p.depth - target.distance(cam.center(palm))).abs() < 1e-12);
}

proptest! {
    #[test]
    fn back_projection_inverts_projection(
        yaw in 0.0..std::f64::consts::TAU, x in -0.5..0.5f64, y in -0.4..0.4f64, z in 0.3..3.0f64,
    ) {
        let palm = V::new(0.2, 1.1, -0.3);
        let cam = Camera::default().looking_at(palm, palm + V::new(yaw.cos(), 0.0, yaw.sin()));
        let world = cam.from_camera(palm, V::new(x, y, z));
        let proj = cam.project(palm, world);
        prop_assume!(proj.visible);
        let back = cam.back_project(palm, &proj).unwrap();
        prop_assert!(back.distance(world) < 1e-9);
    }
}

#[test]
fn zero_action_moves_only_the_target() {
    let cfg = line_config();
    let gen = MotionGenerator::new(&cfg.motion).unwrap();
    let (mut engine, first) = Engine::reset(cfg.clone()).unwrap();
    for k in 0..cfg.frames {
        let step = engine.step(&Action::zero(), None).unwrap();
        assert_eq!(step.observation.palm, first.palm);
        assert_eq!(step.observation.joints, first.joints);
        assert_eq!(engine.object().position, gen.position_at(cfg.time(k + 1)).unwrap());
    }
}

#[test]
fn actions_are_clamped() {
    let cfg = manual(still(V::new(0.0, 1.0, 5.0)), V::new(0.0, 1.0, 0.0), 5, 0, 4);
    let (mut engine, _) = Engine::reset(cfg).unwrap();
    let dir = V::new(0.6, 0.0, 0.8);
    let mut a = Action::translate(dir * (2.0 * LOC_CAP));
    a.gras[0] = 1.0;
    a.gras[1] = -1.0;
    let step = engine.step(&a, None).unwrap();
    assert!((step.applied.loc.norm() - LOC_CAP).abs() < 1e-15);
    assert!(step.applied.loc.normalized().unwrap().distance(dir) < 1e-12);
    assert_eq!(step.applied.gras[0], GRAS_CAP);
    assert_eq!(step.applied.gras[1], -GRAS_CAP);
    assert_eq!(step.observation.joints[0], GRAS_CAP);
    // joints stay within [0, pi/2]
    assert_eq!(step.observation.joints[1], 0.0);
    let mut nan = Action::zero();
    nan.loc.x = f64::NAN;
    assert!(engine.step(&nan, None).unwrap().applied.is_finite());
}

#[test]
fn attachment_at_the_shell_crossing() {
    // palm walks straight at a still target in exactly representable steps
    let target = V::new(0.0, 1.0, 1.0);
    let cfg = manual(still(target), V::new(0.0, 1.0, 0.0), 16, 0, 14);
    let step = 0.0625;
    // distances 1, 0.9375, ... the first at or below 0.3 is frame 12
    let expected = (0..16).find(|&k| 1.0 - step * k as f64 <= 0.3).unwrap();
    assert_eq!(expected, 12);
    let (mut engine, obs) = Engine::reset(cfg).unwrap();
    assert!(!obs.attached);
    let mut flags = vec![];
    for _ in 0..16 {
        let s = engine.step(&Action::translate(V::new(0.0, 0.0, step)), None).unwrap();
        flags.push(s.observation.attached);
    }
    let rec = engine.into_record("walker").unwrap();
    let first = rec.frames.iter().position(|f| f.attached).unwrap();
    assert_eq!(first, expected);
    assert_eq!(rec.first_success(), Some(expected));
    assert!(rec.frames[first..].iter().all(|f| f.attached));
    assert!(rec.frames[..first].iter().all(|f| !f.attached));
    assert!(flags.iter().skip_while(|&&f| !f).all(|&f| f));
}

#[test]
fn attached_object_keeps_its_offset() {
    let cat = Catalog::builtin();
    for id in ["circular_fast", "projectile_low", "hybrid_zigzag"] {
        let cfg = EpisodeConfig::generate(&cat, id, 4, &EpisodeOptions::default()).unwrap();
        let rec = run_gt_episode(&cfg).unwrap();
        let k = rec.frames.iter().position(|f| f.attached).unwrap();
        let offset = rec.frames[k].target - rec.frames[k].observation.palm;
        for f in &rec.frames[k..] {
            assert!(f.attached);
            assert!((f.target - f.observation.palm - offset).norm() < 1e-12);
        }
    }
}

#[test]
fn stepping_past_the_end_fails() {
    let cfg = manual(still(V::new(0.0, 1.0, 3.0)), V::zero(), 3, 0, 2);
    let (mut engine, _) = Engine::reset(cfg).unwrap();
    for _ in 0..3 {
        engine.step(&Action::zero(), None).unwrap();
    }
    assert!(engine.is_done());
    assert_eq!(engine.step(&Action::zero(), None), Err(EngineError::StepAfterDone { frame: 3 }));
}

#[test]
fn incomplete_episode_has_no_record() {
    let cfg = manual(still(V::new(0.0, 1.0, 3.0)), V::zero(), 3, 0, 2);
    let (mut engine, _) = Engine::reset(cfg).unwrap();
    engine.step(&Action::zero(), None).unwrap();
    assert!(matches!(engine.into_record("x"), Err(EngineError::Incomplete { frame: 1, frames: 3 })));
}

#[test]
fn records_have_exactly_n_frames_after_early_success() {
    let cat = Catalog::builtin();
    let cfg = EpisodeConfig::generate(&cat, "line_slow", 2, &EpisodeOptions::default()).unwrap();
    let rec = run_gt_episode(&cfg).unwrap();
    assert_eq!(rec.len(), cfg.frames);
    let k = rec.first_success().unwrap();
    assert!(k < cfg.frames - 1);
    assert!(rec.frames[k..].iter().all(|f| f.done));
    assert!(rec.frames[..k].iter().all(|f| !f.done));
}

#[test]
fn observations_do_not_look_ahead() {
    let cat = Catalog::builtin();
    let cfg = EpisodeConfig::generate(&cat, "harmonic_fast", 9, &EpisodeOptions::default()).unwrap();
    let gen = MotionGenerator::new(&cfg.motion).unwrap();
    let mut chaser = Chaser::new(cfg.camera.clone());
    let rec = run_rollout(&cfg, &mut chaser).unwrap();
    for f in rec.frames.iter().filter(|f| !f.attached) {
        let truth = gen.position_at(cfg.time(f.frame)).unwrap();
        assert_eq!(f.target, truth);
        assert_eq!(f.observation.camera.projection, cfg.camera.project(f.observation.palm, truth));
        assert_eq!(f.observation.time, cfg.time(f.frame));
    }
}

#[test]
fn rollouts_are_byte_identical() {
    let cat = Catalog::builtin();
    for id in ["pendulum_large", "hybrid_stochastic", "bounce_damped"] {
        let opts = EpisodeOptions { jitter_sigma: Some(DEFAULT_JITTER_SIGMA), ..Default::default() };
        let cfg = EpisodeConfig::generate(&cat, id, 11, &opts).unwrap();
        let a = run_gt_episode(&cfg).unwrap().to_canonical_json();
        let b = run_gt_episode(&cfg).unwrap().to_canonical_json();
        assert_eq!(a, b);
        let mut e1 = Extrapolator::new(cfg.camera.clone(), cfg.frames, cfg.dt);
        let mut e2 = Extrapolator::new(cfg.camera.clone(), cfg.frames, cfg.dt);
        assert_eq!(run_rollout(&cfg, &mut e1).unwrap(), run_rollout(&cfg, &mut e2).unwrap());
    }
}

#[test]
fn zero_agent_localizes_only_when_target_passes_by() {
    let cat = Catalog::builtin();
    let mut passes = 0;
    for (i, s) in cat.subcategories().iter().enumerate() {
        let cfg = EpisodeConfig::generate(&cat, &s.id, i as u64, &EpisodeOptions::default()).unwrap();
        let gen = MotionGenerator::new(&cfg.motion).unwrap();
        let rec = run_rollout(&cfg, &mut ZeroAgent).unwrap();
        let report = evaluate(&rec, &gt_grasp()).unwrap();
        // once attached the object follows the still palm, so only the free
        // flight up to the first close pass matters
        let passes_by = (0..cfg.frames).any(|k| gen.position_at(cfg.time(k)).unwrap().distance(cfg.hand_start.palm) <= 0.3);
        assert_eq!(report.s_loc, passes_by, "{}", s.id);
        passes += usize::from(passes_by);
        assert!(!report.s_gra);
        assert_eq!(report.grasp_rates.loose, 0.0);
    }
    assert!(passes < cat.subcategories().len());
}

struct Failing;

impl Controller for Failing {
    fn name(&self) -> &str {
        "failing"
    }

    fn act(&mut self, obs: &Observation) -> Result<Action, String> {
        if obs.frame == 7 {
            Err("sensor unplugged".into())
        } else {
            Ok(Action::zero())
        }
    }
}

#[test]
fn controller_failure_names_the_frame() {
    let err = run_rollout(&line_config(), &mut Failing).unwrap_err();
    assert_eq!(err, EngineError::Controller { frame: 7, message: "sensor unplugged".into() });
}

#[test]
fn invalid_configs_are_rejected() {
    let mut cfg = line_config();
    cfg.obs_frames = cfg.frames;
    assert!(matches!(Engine::reset(cfg), Err(EngineError::InvalidConfig(_))));
    let mut cfg = line_config();
    cfg.frames = 0;
    assert!(Engine::reset(cfg).is_err());
    let mut cfg = line_config();
    cfg.dt = 0.0;
    assert!(Engine::reset(cfg).is_err());
    let mut cfg = line_config();
    cfg.frames = 1000;
    assert!(Engine::reset(cfg).is_err(), "motion shorter than the episode");
    let mut cfg = line_config();
    cfg.camera.focal = -1.0;
    assert!(Engine::reset(cfg).is_err());
}

#[test]
fn generated_episodes_are_deterministic_and_clear() {
    let cat = Catalog::builtin();
    let opts = EpisodeOptions::default();
    for s in cat.subcategories() {
        for seed in 0..15 {
            let a = EpisodeConfig::generate(&cat, &s.id, seed, &opts).unwrap();
            assert_eq!(a, EpisodeConfig::generate(&cat, &s.id, seed, &opts).unwrap());
            let gen = MotionGenerator::new(&a.motion).unwrap();
            for k in 0..=a.obs_frames {
                assert!(gen.position_at(a.time(k)).unwrap().distance(a.hand_start.palm) > 0.3);
            }
            assert!(a.intercept_frame > a.obs_frames + a.lead_frames && a.intercept_frame <= a.frames);
        }
    }
    assert!(EpisodeConfig::generate(&cat, "nope", 0, &opts).is_err());
    let direct = EpisodeOptions { obs_frames: 0, ..Default::default() };
    let cfg = EpisodeConfig::generate(&cat, "line_slow", 3, &direct).unwrap();
    assert_eq!(cfg.obs_frames, 0);
    let rec = run_gt_episode(&cfg).unwrap();
    assert!(!rec.frames[0].observation.observing);
    let capped = EpisodeOptions { horizon: Some(35), ..Default::default() };
    assert_eq!(EpisodeConfig::generate(&cat, "pendulum_small", 3, &capped).unwrap().frames, 35);
}

#[test]
fn jitter_lowers_logged_smoothness() {
    let cat = Catalog::builtin();
    let mut clean = vec![];
    let mut jittered = vec![];
    for s in cat.subcategories() {
        for seed in 0..3 {
            let cfg = EpisodeConfig::generate(&cat, &s.id, seed, &EpisodeOptions::default()).unwrap();
            let mut jcfg = cfg.clone();
            jcfg.jitter = Some(Jitter { sigma: DEFAULT_JITTER_SIGMA, seed });
            let a = run_gt_episode(&cfg).unwrap();
            let b = run_gt_episode(&jcfg).unwrap();
            // dynamics are untouched
            assert_eq!(a.frames, b.frames);
            let (qs, ql) = phase_quality(&a, "move").unwrap();
            assert!(qs > 1.0 - 1e-9 && ql > 1.0 - 1e-9, "{} {seed} {qs} {ql}", s.id);
            clean.push(evaluate(&a, &gt_grasp()).unwrap());
            jittered.push(evaluate(&b, &gt_grasp()).unwrap());
        }
    }
    assert!(Summary::of(&jittered).q_smooth < Summary::of(&clean).q_smooth);
}

#[test]
fn jitter_log_holds_valid_frames() {
    let log = JitterLog::sample(Jitter { sigma: 0.5, seed: 3 }, 50);
    assert_eq!(log.frames.len(), 50);
    assert!(log.frames.iter().all(|&f| f < 50));
    assert_eq!(log, JitterLog::sample(Jitter { sigma: 0.5, seed: 3 }, 50));
    let still = JitterLog::sample(Jitter { sigma: 0.0, seed: 3 }, 50);
    assert_eq!(still.frames, (0..50).collect::<Vec<_>>());
}

#[test]
fn action_vector_round_trip() {
    let mut v = [0.0; ACTION_DIM];
    for (i, x) in v.iter_mut().enumerate() {
        *x = i as f64 * 0.01;
    }
    let a = Action::from_vector(&v);
    assert_eq!(a.to_vector(), v);
    assert_eq!(Action::from_slice(&v[..17]), None);
    assert_eq!(a.gras.len(), JOINTS);
}

#[test]
fn pgm_raster_has_header_and_disc() {
    let cam = Camera::default();
    let proj = cam.project_camera(V::new(0.0, 0.0, 1.0));
    let img = cam.raster_pgm(&proj, 0.2);
    let header = b"P5\n640 480\n255\n";
    assert!(img.starts_with(header));
    assert_eq!(img.len(), header.len() + 640 * 480);
    let centre = header.len() + 240 * 640 + 320;
    assert_eq!(img[centre], 230);
    assert_eq!(img[header.len()], 16);
}
