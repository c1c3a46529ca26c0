use std::collections::BTreeSet;
use std::fs;

use hoigym::engine::{EpisodeConfig, EpisodeOptions, EpisodeRecord, Jitter};
use hoigym::kinematics::HandModel;
use hoigym::metrics::evaluate;
use hoigym::motiongen::Catalog;
use hoigym::oracle::{gt_grasp, run_gt_episode, Oracle};
use hoigym_datapipe::*;

fn record(task: &str, seed: u64) -> EpisodeRecord {
    let cfg = EpisodeConfig::generate(&Catalog::builtin(), task, seed, &EpisodeOptions::default()).unwrap();
    run_gt_episode(&cfg).unwrap()
}

#[test]
fn write_then_read_is_lossless() {
    let dir = tempfile::tempdir().unwrap();
    let mut rec = record("pendulum_large", 4);
    rec.config.jitter = Some(Jitter { sigma: 0.2, seed: 4 });
    rec.log = Some(hoigym::engine::JitterLog::sample(rec.config.jitter.unwrap(), rec.len()));
    let plan = Oracle::new(&rec.config).unwrap().plan().clone();
    let path = write_archive(&rec, dir.path(), Some(&plan)).unwrap();
    assert_eq!(path, dir.path().join(format!("episode_{}", rec.config.episode_id)));
    let back = read_archive(&path).unwrap();
    assert_eq!(back, rec);
    assert_eq!(back.to_canonical_json(), rec.to_canonical_json());
    assert_eq!(evaluate(&back, &gt_grasp()).unwrap(), evaluate(&rec, &gt_grasp()).unwrap());

    let meta: Meta = serde_json::from_str(&fs::read_to_string(path.join("meta_data.json")).unwrap()).unwrap();
    assert_eq!(meta.target_position, Some(plan.target_position));
    assert_eq!(meta.move_speed, Some(plan.move_speed));
    assert_eq!(meta.frames, rec.len());
    let names: Vec<String> = (0..rec.len()).map(|t| format!("joints_{t:04}.json")).collect();
    for n in &names {
        assert!(path.join(n).is_file(), "{n}");
    }
    assert_eq!(fs::read_dir(&path).unwrap().count(), rec.len() + 1);
    assert!(matches!(write_archive(&rec, dir.path(), None), Err(ArchiveError::Exists(_))));
}

#[test]
fn frame_files_carry_tracked_transforms() {
    let dir = tempfile::tempdir().unwrap();
    let rec = record("circular_slow", 2);
    let path = write_archive(&rec, dir.path(), None).unwrap();
    let file: FrameFile = serde_json::from_str(&fs::read_to_string(path.join("joints_0030.json")).unwrap()).unwrap();
    assert_eq!(file.frame, 30);
    assert_eq!(file.img, None);
    let t = &file.transforms;
    assert_eq!(t.joints.len(), 15);
    assert_eq!(t.fingertips.len(), 5);
    let o = &rec.frames[30].observation;
    assert_eq!(t.palm.position, o.palm);
    let fk = HandModel::default().fk_fingertips(o.palm, &o.joints);
    for (a, b) in t.fingertips.iter().zip(&fk) {
        assert!(a.position.distance(b.position) < 1e-12);
    }
    assert!(t.camera.position.distance(rec.config.camera.center(o.palm)) < 1e-12);
    assert!((t.camera.orientation.norm() - 1.0).abs() < 1e-12);
}

#[test]
fn interrupted_writes_leave_no_archive() {
    let dir = tempfile::tempdir().unwrap();
    let rec = record("line_slow", 1);
    let id = rec.config.episode_id;
    let err = write_archive_with(&rec, dir.path(), None, Some(Fault::ErrorAfter(5))).unwrap_err();
    assert!(matches!(err, ArchiveError::Injected(5)));
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
    // a killed writer leaves only its hidden temporary directory
    write_archive_with(&rec, dir.path(), None, Some(Fault::AbortAfter(7))).unwrap_err();
    assert!(!dir.path().join(format!("episode_{id}")).exists());
    assert!(list_archives(dir.path()).unwrap().is_empty());
    assert!(read_corpus(dir.path()).unwrap().is_empty());
    // the episode can still be written afterwards
    write_archive(&rec, dir.path(), None).unwrap();
    assert_eq!(read_corpus(dir.path()).unwrap(), vec![rec]);
}

#[test]
fn damaged_archives_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let rec = record("harmonic_vertical", 6);
    let path = write_archive(&rec, dir.path(), None).unwrap();
    fs::remove_file(path.join("joints_0004.json")).unwrap();
    assert!(read_archive(&path).unwrap_err().to_string().contains("frame files"));
    fs::copy(path.join("joints_0005.json"), path.join("joints_0004.json")).unwrap();
    assert!(read_archive(&path).unwrap_err().to_string().contains("frame index"));
    fs::write(path.join("joints_0004.json"), "{").unwrap();
    assert!(read_archive(&path).is_err());
    fs::remove_file(path.join("meta_data.json")).unwrap();
    assert!(matches!(read_archive(&path), Err(ArchiveError::Io { .. })));
}

#[test]
fn hundred_episodes_hundred_archives() {
    let dir = tempfile::tempdir().unwrap();
    let cat = Catalog::builtin();
    let mut ids = BTreeSet::new();
    for (i, s) in cat.subcategories().iter().cycle().take(100).enumerate() {
        let cfg = EpisodeConfig::generate(&cat, &s.id, 1000 + i as u64, &EpisodeOptions::default()).unwrap();
        let rec = run_gt_episode(&cfg).unwrap();
        ids.insert(cfg.episode_id);
        write_archive(&rec, dir.path(), None).unwrap();
    }
    let dirs = list_archives(dir.path()).unwrap();
    assert_eq!(dirs.len(), 100);
    let corpus = read_corpus(dir.path()).unwrap();
    let read_ids: BTreeSet<u64> = corpus.iter().map(|r| r.config.episode_id).collect();
    assert_eq!(read_ids, ids);
    for (d, r) in dirs.iter().zip(&corpus) {
        assert!(d.ends_with(format!("episode_{}", r.config.episode_id)));
        assert_eq!(r.len(), r.config.frames);
    }
}
