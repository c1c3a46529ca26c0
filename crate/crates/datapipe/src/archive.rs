//! Archive layout, one directory per episode:
//!
//! ```text
//! episode_{id}/meta_data.json      configuration, plan and final state
//! episode_{id}/joints_0000.json    one file per frame, consecutive from 0
//! ```
//!
//! Each frame file holds the tracked transforms (15 joint pivots, 5
//! fingertips, wrist, palm, camera) next to the full frame record. Images
//! are not rendered; the `img` slot is reserved and always null.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use hoigym::engine::{EpisodeConfig, EpisodeRecord, FinalState, FrameRecord, JitterLog};
use hoigym::kinematics::{HandModel, Pose, Quat, Vec3, JOINTS, JOINTS_PER_FINGER, MAX_GRAB_ROTATION};
use hoigym::oracle::InterceptPlan;
use serde::{Deserialize, Serialize};

pub const ARCHIVE_FORMAT: u32 = 1;
const WRIST_OFFSET: f64 = -0.06;

#[derive(Debug, thiserror::Error)]
pub enum ArchiveError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {message}")]
    Invalid { path: PathBuf, message: String },
    #[error("archive {0} already exists")]
    Exists(PathBuf),
    #[error("injected failure after {0} frame files")]
    Injected(usize),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> ArchiveError + '_ {
    move |source| ArchiveError::Io { path: path.to_path_buf(), source }
}

fn invalid(path: &Path, message: impl Into<String>) -> ArchiveError {
    ArchiveError::Invalid { path: path.to_path_buf(), message: message.into() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub format: u32,
    pub episode_id: u64,
    pub task_type: String,
    pub controller: String,
    pub frames: usize,
    /// Planned intercept point, when the oracle produced the episode.
    pub target_position: Option<Vec3<f64>>,
    pub move_speed: Option<f64>,
    pub config: EpisodeConfig,
    pub final_state: FinalState,
    pub log: Option<JitterLog>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transforms {
    pub joints: Vec<Pose<f64>>,
    pub fingertips: Vec<Pose<f64>>,
    pub wrist: Pose<f64>,
    pub palm: Pose<f64>,
    pub camera: Pose<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameFile {
    pub frame: usize,
    pub time: f64,
    pub transforms: Transforms,
    pub record: FrameRecord,
    pub img: Option<String>,
}

/// Tracked transforms of the hand and palm camera at one frame.
pub fn transforms(config: &EpisodeConfig, palm: Vec3<f64>, joints: &[f64; JOINTS]) -> Transforms {
    let model = HandModel::default();
    let mut pivots = Vec::with_capacity(JOINTS);
    let mut tips = Vec::with_capacity(joints.len() / JOINTS_PER_FINGER);
    for f in 0..model.fingers.len() {
        let chain = model.finger_chain(f, palm, joints);
        pivots.extend_from_slice(&chain[..JOINTS_PER_FINGER]);
        tips.push(chain[JOINTS_PER_FINGER]);
    }
    let (right, down, forward) = config.camera.basis();
    Transforms {
        joints: pivots,
        fingertips: tips,
        wrist: Pose { position: palm + Vec3::new(0.0, 0.0, WRIST_OFFSET), orientation: Quat::identity() },
        palm: Pose { position: palm, orientation: Quat::identity() },
        camera: Pose { position: config.camera.center(palm), orientation: Quat::from_basis(right, down, forward) },
    }
}

/// Where a simulated write failure strikes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Return an error after this many frame files, cleaning up.
    ErrorAfter(usize),
    /// Stop after this many frame files and leave the temporary directory
    /// behind, as a killed process would.
    AbortAfter(usize),
}

static TEMP_COUNTER: AtomicU64 = AtomicU64::new(0);

fn archive_dir(root: &Path, id: u64) -> PathBuf {
    root.join(format!("episode_{id}"))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), ArchiveError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| invalid(path, e.to_string()))?;
    fs::write(path, text).map_err(io_err(path))
}

pub fn write_archive(record: &EpisodeRecord, root: &Path, plan: Option<&InterceptPlan>) -> Result<PathBuf, ArchiveError> {
    write_archive_with(record, root, plan, None)
}

/// Writes into a hidden temporary directory and renames it into place, so
/// an `episode_{id}` directory is always complete.
pub fn write_archive_with(
    record: &EpisodeRecord,
    root: &Path,
    plan: Option<&InterceptPlan>,
    fault: Option<Fault>,
) -> Result<PathBuf, ArchiveError> {
    let cfg = &record.config;
    let dest = archive_dir(root, cfg.episode_id);
    if dest.exists() {
        return Err(ArchiveError::Exists(dest));
    }
    fs::create_dir_all(root).map_err(io_err(root))?;
    let n = TEMP_COUNTER.fetch_add(1, Ordering::Relaxed);
    let tmp = root.join(format!(".tmp-episode_{}-{}-{n}", cfg.episode_id, std::process::id()));
    fs::create_dir(&tmp).map_err(io_err(&tmp))?;
    let result = fill(record, &tmp, plan, fault);
    match result {
        Ok(()) => {
            fs::rename(&tmp, &dest).map_err(io_err(&dest))?;
            Ok(dest)
        }
        Err(e) => {
            if !matches!(fault, Some(Fault::AbortAfter(_))) {
                let _ = fs::remove_dir_all(&tmp);
            }
            Err(e)
        }
    }
}

fn fill(record: &EpisodeRecord, dir: &Path, plan: Option<&InterceptPlan>, fault: Option<Fault>) -> Result<(), ArchiveError> {
    let cfg = &record.config;
    for (written, f) in record.frames.iter().enumerate() {
        if let Some(Fault::ErrorAfter(k) | Fault::AbortAfter(k)) = fault {
            if written == k {
                return Err(ArchiveError::Injected(k));
            }
        }
        let file = FrameFile {
            frame: f.frame,
            time: f.observation.time,
            transforms: transforms(cfg, f.observation.palm, &f.observation.joints),
            record: f.clone(),
            img: None,
        };
        write_json(&dir.join(format!("joints_{:04}.json", f.frame)), &file)?;
    }
    let meta = Meta {
        format: ARCHIVE_FORMAT,
        episode_id: cfg.episode_id,
        task_type: cfg.task_type.clone(),
        controller: record.controller.clone(),
        frames: record.len(),
        target_position: plan.map(|p| p.target_position),
        move_speed: plan.map(|p| p.move_speed),
        config: cfg.clone(),
        final_state: record.final_state.clone(),
        log: record.log.clone(),
    };
    write_json(&dir.join("meta_data.json"), &meta)
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, ArchiveError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| invalid(path, e.to_string()))
}

fn valid_state(palm: Vec3<f64>, joints: &[f64; JOINTS]) -> bool {
    palm.is_finite() && joints.iter().all(|q| (0.0..=MAX_GRAB_ROTATION).contains(q))
}

/// Reads an archive back into the record it was written from.
pub fn read_archive(dir: &Path) -> Result<EpisodeRecord, ArchiveError> {
    let meta: Meta = read_json(&dir.join("meta_data.json"))?;
    if meta.format != ARCHIVE_FORMAT {
        return Err(invalid(dir, format!("unsupported archive format {}", meta.format)));
    }
    let mut names: Vec<String> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.starts_with("joints_"))
        .collect();
    names.sort();
    if names.len() != meta.frames {
        return Err(invalid(dir, format!("{} frame files, meta says {}", names.len(), meta.frames)));
    }
    let mut frames = Vec::with_capacity(names.len());
    for (t, name) in names.iter().enumerate() {
        if *name != format!("joints_{t:04}.json") {
            return Err(invalid(dir, format!("expected joints_{t:04}.json, found {name}")));
        }
        let path = dir.join(name);
        let file: FrameFile = read_json(&path)?;
        if file.frame != t || file.record.frame != t {
            return Err(invalid(&path, format!("frame index {} in file {t}", file.frame)));
        }
        if !valid_state(file.record.observation.palm, &file.record.observation.joints) {
            return Err(invalid(&path, "hand state out of range"));
        }
        frames.push(file.record);
    }
    Ok(EpisodeRecord { config: meta.config, controller: meta.controller, frames, final_state: meta.final_state, log: meta.log })
}

fn episode_id(name: &str) -> Option<u64> {
    name.strip_prefix("episode_")?.parse().ok()
}

/// Archive directories under `root`, sorted by episode id. Temporary
/// directories of unfinished writes are skipped.
pub fn list_archives(root: &Path) -> Result<Vec<PathBuf>, ArchiveError> {
    let mut found: Vec<(u64, PathBuf)> = fs::read_dir(root)
        .map_err(io_err(root))?
        .filter_map(|e| e.ok())
        .filter(|e| e.path().is_dir())
        .filter_map(|e| episode_id(&e.file_name().to_string_lossy()).map(|id| (id, e.path())))
        .collect();
    found.sort();
    Ok(found.into_iter().map(|(_, p)| p).collect())
}

pub fn read_corpus(root: &Path) -> Result<Vec<EpisodeRecord>, ArchiveError> {
    list_archives(root)?.iter().map(|d| read_archive(d)).collect()
}
