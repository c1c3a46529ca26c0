use std::collections::BTreeMap;
use std::fmt::Write;

use hoigym::engine::{EpisodeRecord, ACTION_DIM};
use hoigym::metrics::{duration_bucket, length_bucket, path_length};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StatsError {
    #[error("corpus has no control samples")]
    Empty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    fn of(sorted: &[f64], bins: usize) -> Self {
        let (lo, hi) = (sorted[0], sorted[sorted.len() - 1]);
        let mut counts = vec![0u64; bins.max(1)];
        let width = (hi - lo) / counts.len() as f64;
        for &x in sorted {
            let i = if width > 0.0 { ((x - lo) / width) as usize } else { 0 };
            counts[i.min(bins.max(1) - 1)] += 1;
        }
        Self { lo, hi, counts }
    }

    pub fn edges(&self, bin: usize) -> (f64, f64) {
        let w = (self.hi - self.lo) / self.counts.len() as f64;
        (self.lo + w * bin as f64, self.lo + w * (bin + 1) as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimStats {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub q01: f64,
    pub q99: f64,
    pub histogram: Histogram,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionStats {
    pub episodes: usize,
    pub samples: usize,
    pub dims: Vec<DimStats>,
}

/// Value at 0-based rank `floor(p * n)` of a sorted sample, clamped to the
/// last element. Exact and free of interpolation.
pub fn nearest_rank(sorted: &[f64], p: f64) -> f64 {
    let rank = (p * sorted.len() as f64 + 1e-9).floor() as usize;
    sorted[rank.min(sorted.len() - 1)]
}

pub(crate) fn dim_name(i: usize) -> String {
    match i {
        0..=2 => format!("palm_{}", ["x", "y", "z"][i]),
        _ => format!("joint_{:02}", i - 3),
    }
}

/// Order statistics of every action dimension over the control frames of
/// the corpus (observation frames carry no commands).
pub fn compute_action_stats(corpus: &[EpisodeRecord], bins: usize) -> Result<ActionStats, StatsError> {
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); ACTION_DIM];
    for rec in corpus {
        for f in rec.frames.iter().skip(rec.config.obs_frames) {
            for (c, x) in columns.iter_mut().zip(f.action.to_vector()) {
                c.push(x);
            }
        }
    }
    if columns[0].is_empty() {
        return Err(StatsError::Empty);
    }
    let samples = columns[0].len();
    let dims = columns
        .into_iter()
        .enumerate()
        .map(|(i, mut c)| {
            c.sort_by(f64::total_cmp);
            DimStats {
                name: dim_name(i),
                min: c[0],
                max: c[c.len() - 1],
                q01: nearest_rank(&c, 0.01),
                q99: nearest_rank(&c, 0.99),
                histogram: Histogram::of(&c, bins),
            }
        })
        .collect();
    Ok(ActionStats { episodes: corpus.len(), samples, dims })
}

/// One CSV row per histogram bin of every dimension.
pub fn histogram_csv(stats: &ActionStats) -> String {
    let mut out = String::from("dim,bin,lo,hi,count\n");
    for d in &stats.dims {
        for (b, c) in d.histogram.counts.iter().enumerate() {
            let (lo, hi) = d.histogram.edges(b);
            let _ = writeln!(out, "{},{b},{lo},{hi},{c}", d.name);
        }
    }
    out
}

/// Episode counts per duration bucket, path-length bucket and subcategory.
pub fn corpus_csv(corpus: &[EpisodeRecord]) -> String {
    let mut counts: BTreeMap<(&str, String), usize> = BTreeMap::new();
    for rec in corpus {
        *counts.entry(("duration", duration_bucket(rec.len()).to_string())).or_default() += 1;
        *counts.entry(("length", length_bucket(path_length(rec)).to_string())).or_default() += 1;
        *counts.entry(("subcategory", rec.config.task_type.clone())).or_default() += 1;
    }
    let mut out = String::from("dimension,bucket,count\n");
    for ((dim, bucket), n) in counts {
        let _ = writeln!(out, "{dim},{bucket},{n}");
    }
    out
}
