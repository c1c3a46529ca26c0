use std::fs;
use std::path::Path;

use hoigym::engine::{EpisodeConfig, EpisodeOptions};
use hoigym::metrics::evaluate;
use hoigym::motiongen::{Catalog, CatalogError};
use hoigym::oracle::{gt_grasp, run_gt_episode, Oracle};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::archive::{write_archive_with, ArchiveError, Fault};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollectConfig {
    /// Subcategories to draw from; all of them when empty.
    pub selection: Vec<String>,
    pub episodes: usize,
    pub seed: u64,
    /// Extra attempts per episode after a failure.
    pub retries: usize,
    pub options: EpisodeOptions,
    /// Worker threads; the global pool when unset.
    pub threads: Option<usize>,
}

impl CollectConfig {
    pub fn new(episodes: usize, seed: u64) -> Self {
        Self { selection: Vec::new(), episodes, seed, retries: 3, options: EpisodeOptions::default(), threads: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlannedEpisode {
    pub index: usize,
    pub seed: u64,
    pub subcategory: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub index: usize,
    pub seed: u64,
    pub subcategory: String,
    pub status: Status,
    pub attempts: usize,
    pub episode_id: Option<u64>,
    pub archive: Option<String>,
    pub periodicity: Option<String>,
    pub duration: Option<String>,
    pub length: Option<String>,
    pub errors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub catalog_version: u32,
    pub catalog_checksum: String,
    pub config: CollectConfig,
    pub successes: usize,
    pub failures: usize,
    pub retries: usize,
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Seed used for a planned episode on its `attempt`-th try (0-based).
pub fn attempt_seed(seed: u64, attempt: usize) -> u64 {
    if attempt == 0 {
        seed
    } else {
        splitmix(seed ^ splitmix(attempt as u64))
    }
}

/// Seeds and weighted subcategory picks for every episode, without running
/// anything.
pub fn plan_dataset(catalog: &Catalog, cfg: &CollectConfig) -> Result<Vec<PlannedEpisode>, CatalogError> {
    (0..cfg.episodes)
        .map(|index| {
            let seed = splitmix(cfg.seed ^ splitmix(index as u64 + 1)) >> 12;
            let sub = catalog.pick(&cfg.selection, seed)?;
            Ok(PlannedEpisode { index, seed, subcategory: sub.id.clone() })
        })
        .collect()
}

/// First attempt (up to `retries` extra) whose episode generates and admits
/// a feasible oracle plan. Evaluation of any controller uses this so every
/// controller sees the same episodes.
pub fn episode_config(
    catalog: &Catalog,
    p: &PlannedEpisode,
    options: &EpisodeOptions,
    retries: usize,
) -> Result<EpisodeConfig, Vec<String>> {
    let mut errors = Vec::new();
    for attempt in 0..=retries {
        let built = EpisodeConfig::generate(catalog, &p.subcategory, attempt_seed(p.seed, attempt), options)
            .map_err(|e| e.to_string())
            .and_then(|c| Oracle::new(&c).map(|_| c).map_err(|e| e.to_string()));
        match built {
            Ok(c) => return Ok(c),
            Err(e) => errors.push(format!("attempt {}: {e}", attempt + 1)),
        }
    }
    Err(errors)
}

/// Runs the oracle on every planned episode and archives the successes
/// under `root`, then writes `root/manifest.json`.
pub fn collect_dataset(catalog: &Catalog, cfg: &CollectConfig, root: &Path) -> Result<Manifest, ArchiveError> {
    let build = |p: &PlannedEpisode, attempt: usize| {
        EpisodeConfig::generate(catalog, &p.subcategory, attempt_seed(p.seed, attempt), &cfg.options).map_err(|e| e.to_string())
    };
    collect_dataset_with(catalog, cfg, root, build, |_, _| None)
}

/// [`collect_dataset`] with a custom episode builder and simulated write
/// failures, both keyed by planned episode and attempt number.
pub fn collect_dataset_with(
    catalog: &Catalog,
    cfg: &CollectConfig,
    root: &Path,
    build: impl Fn(&PlannedEpisode, usize) -> Result<EpisodeConfig, String> + Sync,
    fault: impl Fn(&PlannedEpisode, usize) -> Option<Fault> + Sync,
) -> Result<Manifest, ArchiveError> {
    let plan =
        plan_dataset(catalog, cfg).map_err(|e| ArchiveError::Invalid { path: root.to_path_buf(), message: e.to_string() })?;
    fs::create_dir_all(root).map_err(|source| ArchiveError::Io { path: root.to_path_buf(), source })?;
    let run = || plan.par_iter().map(|p| collect_one(p, cfg.retries, root, &build, &fault)).collect::<Vec<_>>();
    let entries = match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| ArchiveError::Invalid { path: root.to_path_buf(), message: e.to_string() })?
            .install(run),
        None => run(),
    };
    let manifest = Manifest {
        catalog_version: catalog.version(),
        catalog_checksum: catalog.checksum().to_string(),
        config: cfg.clone(),
        successes: entries.iter().filter(|e| e.status == Status::Ok).count(),
        failures: entries.iter().filter(|e| e.status == Status::Failed).count(),
        retries: entries.iter().map(|e| e.attempts - 1).sum(),
        entries,
    };
    let path = root.join("manifest.json");
    fs::write(&path, manifest.to_json()).map_err(|source| ArchiveError::Io { path, source })?;
    Ok(manifest)
}

fn collect_one(
    p: &PlannedEpisode,
    retries: usize,
    root: &Path,
    build: &(impl Fn(&PlannedEpisode, usize) -> Result<EpisodeConfig, String> + Sync),
    fault: &(impl Fn(&PlannedEpisode, usize) -> Option<Fault> + Sync),
) -> ManifestEntry {
    let mut entry = ManifestEntry {
        index: p.index,
        seed: p.seed,
        subcategory: p.subcategory.clone(),
        status: Status::Failed,
        attempts: 0,
        episode_id: None,
        archive: None,
        periodicity: None,
        duration: None,
        length: None,
        errors: Vec::new(),
    };
    for attempt in 0..=retries {
        entry.attempts = attempt + 1;
        match attempt_once(p, attempt, root, build, fault) {
            Ok((config, dir, report)) => {
                entry.status = Status::Ok;
                entry.episode_id = Some(config.episode_id);
                entry.archive = dir.file_name().map(|n| n.to_string_lossy().into_owned());
                entry.periodicity = Some(report.strata.periodicity.name().to_string());
                entry.duration = Some(report.strata.duration);
                entry.length = Some(report.strata.length);
                return entry;
            }
            Err(e) => entry.errors.push(format!("attempt {}: {e}", attempt + 1)),
        }
    }
    entry
}

fn attempt_once(
    p: &PlannedEpisode,
    attempt: usize,
    root: &Path,
    build: &impl Fn(&PlannedEpisode, usize) -> Result<EpisodeConfig, String>,
    fault: &impl Fn(&PlannedEpisode, usize) -> Option<Fault>,
) -> Result<(EpisodeConfig, std::path::PathBuf, hoigym::metrics::MetricsReport), String> {
    let config = build(p, attempt)?;
    let oracle = Oracle::new(&config).map_err(|e| e.to_string())?;
    let record = run_gt_episode(&config).map_err(|e| e.to_string())?;
    let report = evaluate(&record, &gt_grasp()).map_err(|e| e.to_string())?;
    if !(report.s_loc && report.s_gra) {
        return Err(format!("oracle failed (S_loc {}, S_gra {})", report.s_loc, report.s_gra));
    }
    let dir = write_archive_with(&record, root, Some(oracle.plan()), fault(p, attempt)).map_err(|e| e.to_string())?;
    Ok((config, dir, report))
}
