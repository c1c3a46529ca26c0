//! Offline side of the gym: on-disk episode archives, per-dimension action
//! statistics, outlier filtering and oracle dataset collection.

// `!(x > 0.0)` reads as "not positive" and also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod archive;
mod collect;
mod filter;
mod stats;

pub use archive::{
    list_archives, read_archive, read_corpus, transforms, write_archive, write_archive_with, ArchiveError, Fault, FrameFile,
    Meta, Transforms, ARCHIVE_FORMAT,
};
pub use collect::{
    attempt_seed, collect_dataset, collect_dataset_with, episode_config, plan_dataset, CollectConfig, Manifest, ManifestEntry,
    PlannedEpisode, Status,
};
pub use filter::{filter_outliers, FilterConfig, FilterOutcome, RejectRule, Rejection};
pub use stats::{compute_action_stats, corpus_csv, histogram_csv, nearest_rank, ActionStats, DimStats, Histogram, StatsError};
