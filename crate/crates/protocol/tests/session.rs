use std::net::TcpStream;
use std::thread;
use std::time::Duration;

use hoigym::engine::agents::Extrapolator;
use hoigym::engine::{run_rollout, Action, EpisodeConfig, EpisodeOptions};
use hoigym::metrics::{evaluate, MetricsReport};
use hoigym::motiongen::Catalog;
use hoigym::oracle::{gt_grasp, run_gt_episode, Oracle};
use hoigym_protocol::*;

fn server() -> ServerHandle {
    Server::bind("127.0.0.1:0", ServerConfig::new(Catalog::builtin())).unwrap().spawn().unwrap()
}

fn config(task: &str, seed: u64) -> EpisodeConfig {
    EpisodeConfig::generate(&Catalog::builtin(), task, seed, &EpisodeOptions::default()).unwrap()
}

fn start(cfg: &EpisodeConfig, controller: &str) -> StartEpisode {
    StartEpisode {
        episode_id: cfg.episode_id,
        task_type: cfg.task_type.clone(),
        length: cfg.frames,
        horizon: DEFAULT_HORIZON,
        controller: Some(controller.into()),
    }
}

fn remote_oracle(addr: std::net::SocketAddr, cfg: &EpisodeConfig) -> MetricsReport {
    let mut policy = PerFrame(Oracle::new(cfg).unwrap());
    run_remote(addr, start(cfg, "oracle"), &mut policy, Some(Duration::from_secs(30))).unwrap()
}

#[test]
fn oracle_over_the_wire_matches_in_process() {
    let srv = server();
    for (task, seed) in [("circular_slow", 1), ("line_fast", 2), ("projectile_high", 3), ("hybrid_stochastic", 4)] {
        let cfg = config(task, seed);
        let local = evaluate(&run_gt_episode(&cfg).unwrap(), &gt_grasp()).unwrap();
        let remote = remote_oracle(srv.addr(), &cfg);
        assert!(remote.s_loc && remote.s_gra);
        assert_eq!(remote, local, "{task}");
    }
    let results = srv.shutdown();
    assert_eq!(results.len(), 4);
    assert!(results.iter().all(|r| r.as_ref().unwrap().chunks.iter().all(|&c| c == 1)));
}

#[test]
fn concurrent_sessions_equal_serial_runs() {
    let jobs: Vec<(EpisodeConfig, bool)> =
        [("pendulum_small", 5, true), ("bounce_damped", 6, false), ("harmonic_fast", 7, true), ("incline_gentle", 8, false)]
            .into_iter()
            .map(|(t, s, oracle)| (config(t, s), oracle))
            .collect();
    let serial: Vec<MetricsReport> = jobs
        .iter()
        .map(|(cfg, oracle)| {
            let rec = if *oracle {
                run_gt_episode(cfg).unwrap()
            } else {
                let mut e = Extrapolator::new(cfg.camera.clone(), cfg.frames, cfg.dt);
                let mut rec = run_rollout(cfg, &mut e).unwrap();
                rec.controller = "extrapolator".into();
                rec
            };
            evaluate(&rec, &gt_grasp()).unwrap()
        })
        .collect();
    let srv = server();
    let addr = srv.addr();
    let handles: Vec<_> = jobs
        .into_iter()
        .map(|(cfg, oracle)| {
            thread::spawn(move || {
                if oracle {
                    remote_oracle(addr, &cfg)
                } else {
                    let mut policy = PerFrame(Extrapolator::new(cfg.camera.clone(), cfg.frames, cfg.dt));
                    run_remote(addr, start(&cfg, "extrapolator"), &mut policy, None).unwrap()
                }
            })
        })
        .collect();
    let concurrent: Vec<MetricsReport> = handles.into_iter().map(|h| h.join().unwrap()).collect();
    assert_eq!(concurrent, serial);
    assert_eq!(srv.shutdown().len(), 4);
}

#[test]
fn chunks_add_up_to_the_episode_length() {
    let srv = server();
    let cfg = config("circular_fast", 9);
    let mut sizes = [3usize, 10, 1, 7, 10, 4].into_iter().cycle();
    let mut policy = |_: &ImageAndState, horizon: usize| -> Result<Vec<Action>, String> {
        Ok(vec![Action::zero(); sizes.next().unwrap().min(horizon)])
    };
    let report = run_remote(srv.addr(), start(&cfg, "chunky"), &mut policy, None).unwrap();
    assert_eq!(report.frames, cfg.frames);
    let results = srv.shutdown();
    let summary = results[0].as_ref().unwrap();
    assert_eq!(summary.chunks.iter().sum::<usize>(), cfg.frames);
    assert_eq!(summary.record.len(), cfg.frames);
    // the final chunk was cut at the boundary
    assert!(summary.chunks.iter().all(|&c| (1..=DEFAULT_HORIZON).contains(&c)));
}

#[test]
fn oversized_chunk_is_rejected() {
    let srv = server();
    let cfg = config("line_slow", 1);
    let mut policy = |_: &ImageAndState, h: usize| -> Result<Vec<Action>, String> { Ok(vec![Action::zero(); h + 1]) };
    let err = run_remote(srv.addr(), start(&cfg, "greedy"), &mut policy, None).unwrap_err();
    assert!(matches!(err, ClientError::Server(ErrorMessage { code: ErrorCode::Schema, .. })), "{err}");
    assert!(srv.shutdown()[0].is_err());
}

fn raw(addr: std::net::SocketAddr) -> TcpStream {
    let s = TcpStream::connect(addr).unwrap();
    s.set_read_timeout(Some(Duration::from_secs(10))).unwrap();
    s
}

#[test]
fn actions_before_start_are_out_of_order() {
    let srv = server();
    let mut s = raw(srv.addr());
    write_message(&mut s, &WireMessage::ActionData(ActionData { actions: vec![vec![0.0; 18]] })).unwrap();
    match read_message(&mut s).unwrap() {
        WireMessage::Error(e) => assert_eq!(e.code, ErrorCode::OutOfOrder),
        other => panic!("{other:?}"),
    }
    // the session is closed
    assert_eq!(read_message(&mut s).unwrap_err().code, ErrorCode::Transport);
    let results = srv.shutdown();
    assert_eq!(results[0].as_ref().unwrap_err().code, ErrorCode::OutOfOrder);
}

#[test]
fn bad_episodes_are_reported() {
    let srv = server();
    let cfg = config("line_slow", 1);
    let mut zero = |_: &ImageAndState, _: usize| -> Result<Vec<Action>, String> { Ok(vec![Action::zero()]) };
    let unknown = StartEpisode { task_type: "teleport".into(), ..start(&cfg, "x") };
    let too_long = StartEpisode { length: cfg.frames + 1, ..start(&cfg, "x") };
    for bad in [unknown, too_long] {
        match run_remote(srv.addr(), bad, &mut zero, None).unwrap_err() {
            ClientError::Server(e) => assert_eq!(e.code, ErrorCode::InvalidEpisode),
            other => panic!("{other}"),
        }
    }
    // a shorter length truncates the episode
    let short = StartEpisode { length: cfg.frames - 5, ..start(&cfg, "x") };
    assert_eq!(run_remote(srv.addr(), short, &mut zero, None).unwrap().frames, cfg.frames - 5);
    srv.shutdown();
}

#[test]
fn stalled_clients_hit_the_deadline() {
    let config = ServerConfig { deadline: Duration::from_millis(1000), ..ServerConfig::new(Catalog::builtin()) };
    let srv = Server::bind("127.0.0.1:0", config).unwrap().spawn().unwrap();
    let cfg = self::config("line_slow", 1);
    let mut s = raw(srv.addr());
    write_message(&mut s, &WireMessage::StartEpisode(start(&cfg, "sleepy"))).unwrap();
    assert_eq!(read_message(&mut s).unwrap().tag(), "image_and_state");
    match read_message(&mut s).unwrap() {
        WireMessage::Error(e) => assert_eq!(e.code, ErrorCode::Deadline),
        other => panic!("{other:?}"),
    }
    // other sessions are unaffected
    let mut policy = PerFrame(Oracle::new(&cfg).unwrap());
    let start = StartEpisode { controller: Some("oracle".into()), ..start(&cfg, "oracle") };
    assert!(run_remote(srv.addr(), start, &mut policy, None).unwrap().s_loc);
    let results = srv.shutdown();
    assert!(results.iter().any(|r| r.as_ref().is_err_and(|e| e.code == ErrorCode::Deadline)));
}

#[test]
fn garbage_gets_a_malformed_error() {
    use std::io::Write;
    let srv = server();
    let mut s = raw(srv.addr());
    s.write_all(&[0, 0, 0, 3, b'{', b'{', b'{']).unwrap();
    match read_message(&mut s).unwrap() {
        WireMessage::Error(e) => assert_eq!(e.code, ErrorCode::Malformed),
        other => panic!("{other:?}"),
    }
    srv.shutdown();
}
