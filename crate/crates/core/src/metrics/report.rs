use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{formulas, Grasping, Localization, MetricsError};
use crate::engine::EpisodeRecord;
use crate::kinematics::{FINGERS, JOINTS, JOINTS_PER_FINGER};
use crate::motiongen::{Family, MotionGenerator};

/// Minimum number of holding fingers per level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraspLevel {
    Loose,
    Medium,
    Strict,
}

impl GraspLevel {
    pub const ALL: [GraspLevel; 3] = [GraspLevel::Loose, GraspLevel::Medium, GraspLevel::Strict];

    pub fn fingers(self) -> usize {
        match self {
            GraspLevel::Loose => 3,
            GraspLevel::Medium => 4,
            GraspLevel::Strict => 5,
        }
    }
}

/// How a finger counts as holding in the per-frame analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HoldRule {
    /// All three joint commands pass the grasp rule against the reference.
    Joint,
    /// The fingertip touches the object.
    Contact,
}

pub fn localization(record: &EpisodeRecord, threshold: f64) -> Localization {
    let d: Vec<f64> = record.frames.iter().map(|f| f.object_distance).collect();
    Localization::from_distances(&d, threshold)
}

/// Grasp success at `eval_frame` (the first localization frame) and the
/// closest fingertip approach over the episode.
pub fn grasping(record: &EpisodeRecord, gt: &[f64; JOINTS], eval_frame: Option<usize>) -> Result<Grasping, MetricsError> {
    let error = record.frames.iter().map(|f| f.fingertip_distance).fold(f64::INFINITY, f64::min);
    let success = match eval_frame {
        None => false,
        Some(k) => {
            let frame = record.frames.get(k).ok_or(MetricsError::MissingEvalFrame(k))?;
            formulas::grasp_rule(&frame.action.gras, gt)
        }
    };
    Ok(Grasping { success, error })
}

/// Per-finger holding flags for every frame.
pub fn holding(record: &EpisodeRecord, gt: &[f64; JOINTS], rule: HoldRule) -> Vec<[bool; FINGERS]> {
    record
        .frames
        .iter()
        .map(|f| match rule {
            HoldRule::Contact => f.contacts,
            HoldRule::Joint => std::array::from_fn(|i| {
                let r = i * JOINTS_PER_FINGER..(i + 1) * JOINTS_PER_FINGER;
                formulas::grasp_rule(&f.action.gras[r.clone()], &gt[r])
            }),
        })
        .collect()
}

/// Fraction of frames in which at least `level.fingers()` fingers hold.
pub fn rate_from_holding(holding: &[[bool; FINGERS]], level: GraspLevel) -> f64 {
    if holding.is_empty() {
        return 0.0;
    }
    let hits = holding.iter().filter(|h| h.iter().filter(|&&x| x).count() >= level.fingers()).count();
    hits as f64 / holding.len() as f64
}

pub fn per_frame_grasp_rate(record: &EpisodeRecord, gt: &[f64; JOINTS], level: GraspLevel, rule: HoldRule) -> f64 {
    rate_from_holding(&holding(record, gt, rule), level)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraspRates {
    pub loose: f64,
    pub medium: f64,
    pub strict: f64,
}

impl GraspRates {
    pub fn of(record: &EpisodeRecord, gt: &[f64; JOINTS], rule: HoldRule) -> Self {
        let h = holding(record, gt, rule);
        Self {
            loose: rate_from_holding(&h, GraspLevel::Loose),
            medium: rate_from_holding(&h, GraspLevel::Medium),
            strict: rate_from_holding(&h, GraspLevel::Strict),
        }
    }
}

/// Periodicity tier of a motion family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Periodicity {
    Circular,
    Periodic,
    Linear,
    Impact,
    Hybrid,
}

impl Periodicity {
    pub fn of(family: Family) -> Self {
        match family {
            Family::CircularArc => Periodicity::Circular,
            Family::SimpleHarmonic | Family::Pendulum => Periodicity::Periodic,
            Family::StraightLine | Family::Projectile | Family::InclinedRolling => Periodicity::Linear,
            Family::ImpactResponse => Periodicity::Impact,
            Family::Hybrid => Periodicity::Hybrid,
        }
    }

    /// Whether the tier takes part in the circular/periodic/linear
    /// comparison.
    pub fn is_tiered(self) -> bool {
        matches!(self, Periodicity::Circular | Periodicity::Periodic | Periodicity::Linear)
    }

    pub fn name(self) -> &'static str {
        match self {
            Periodicity::Circular => "circular",
            Periodicity::Periodic => "periodic",
            Periodicity::Linear => "linear",
            Periodicity::Impact => "impact",
            Periodicity::Hybrid => "hybrid",
        }
    }
}

/// Left-closed episode-length bucket in frames.
pub fn duration_bucket(frames: usize) -> &'static str {
    match frames {
        0..=19 => "<20",
        20..=39 => "20-40",
        40..=59 => "40-60",
        60..=79 => "60-80",
        80..=119 => "80-120",
        _ => ">=120",
    }
}

/// Left-closed target path-length bucket in metres.
pub fn length_bucket(metres: f64) -> &'static str {
    if metres < 0.5 {
        "0-0.5"
    } else if metres < 2.0 {
        "0.5-2"
    } else if metres < 4.0 {
        "2-4"
    } else {
        ">=4"
    }
}

/// Target path length over the episode, sampled at the frame rate.
pub fn path_length(record: &EpisodeRecord) -> f64 {
    let cfg = &record.config;
    let Ok(gen) = MotionGenerator::new(&cfg.motion) else {
        return 0.0;
    };
    let pts: Vec<_> = (0..=cfg.frames).filter_map(|k| gen.position_at(cfg.time(k)).ok()).collect();
    pts.windows(2).map(|w| w[0].distance(w[1])).sum()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Strata {
    pub periodicity: Periodicity,
    pub duration: String,
    pub length: String,
}

/// Per-episode metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub episode_id: u64,
    pub task_type: String,
    pub family: Family,
    pub controller: String,
    pub frames: usize,
    pub threshold: f64,
    pub s_loc: bool,
    pub s_loc_lenient: bool,
    pub e_loc: f64,
    pub first_success: Option<usize>,
    /// 1-based completion frame.
    pub completion: Option<usize>,
    pub s_gra: bool,
    pub e_gra: f64,
    /// Over the logged palm track from the first control frame to
    /// completion; absent when that track has fewer than two samples.
    pub q_smooth: Option<f64>,
    pub q_line: Option<f64>,
    pub r_time: f64,
    pub grasp_rates: GraspRates,
    pub contact_rates: GraspRates,
    pub path_length: f64,
    pub strata: Strata,
}

/// Scores one record against the reference grasp.
pub fn evaluate(record: &EpisodeRecord, gt: &[f64; JOINTS]) -> Result<MetricsReport, MetricsError> {
    if record.is_empty() {
        return Err(MetricsError::EmptyRecord);
    }
    let cfg = &record.config;
    let loc = localization(record, cfg.thresholds.loc);
    let lenient = localization(record, cfg.thresholds.lenient);
    let eval_frame = if loc.success { loc.first_success } else { None };
    let gra = grasping(record, gt, eval_frame)?;
    let completion = loc.first_success.map(|k| k + 1);
    let start = cfg.obs_frames.min(record.len() - 1);
    let end = loc.first_success.unwrap_or(record.len() - 1).max(start);
    let track = record.palm_track(start, end);
    let path = path_length(record);
    Ok(MetricsReport {
        episode_id: cfg.episode_id,
        task_type: cfg.task_type.clone(),
        family: cfg.motion.family(),
        controller: record.controller.clone(),
        frames: record.len(),
        threshold: cfg.thresholds.loc,
        s_loc: loc.success,
        s_loc_lenient: lenient.success,
        e_loc: loc.error,
        first_success: loc.first_success,
        completion,
        s_gra: loc.success && gra.success,
        e_gra: gra.error,
        q_smooth: formulas::q_smooth(&track).ok(),
        q_line: formulas::q_line(&track).ok(),
        r_time: formulas::r_time(record.len(), completion)?,
        grasp_rates: GraspRates::of(record, gt, HoldRule::Joint),
        contact_rates: GraspRates::of(record, gt, HoldRule::Contact),
        path_length: path,
        strata: Strata {
            periodicity: Periodicity::of(cfg.motion.family()),
            duration: duration_bucket(record.len()).to_string(),
            length: length_bucket(path).to_string(),
        },
    })
}

/// Smoothness and straightness of the palm over the frames labelled with
/// `phase`, using the logged track (one extra sample for the last step).
pub fn phase_quality(record: &EpisodeRecord, phase: &str) -> Option<(f64, f64)> {
    let (a, b) = record.phase_span(phase)?;
    let track = record.palm_track(a, b + 1);
    Some((formulas::q_smooth(&track).ok()?, formulas::q_line(&track).ok()?))
}

/// Corpus-level means. Success rates are fractions of episodes; errors and
/// quality scores are arithmetic means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub episodes: usize,
    pub s_loc: f64,
    pub s_loc_lenient: f64,
    pub s_gra: f64,
    pub e_loc: f64,
    pub e_gra: f64,
    pub q_smooth: f64,
    pub q_line: f64,
    pub r_time: f64,
    pub grasp_rates: GraspRates,
    pub contact_rates: GraspRates,
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

fn frac(xs: impl Iterator<Item = bool>) -> f64 {
    mean(xs.map(|b| if b { 1.0 } else { 0.0 }))
}

impl Summary {
    pub fn of<'a>(reports: impl IntoIterator<Item = &'a MetricsReport> + Clone) -> Self {
        let r = || reports.clone().into_iter();
        let rates = |f: fn(&MetricsReport) -> GraspRates| GraspRates {
            loose: mean(r().map(|x| f(x).loose)),
            medium: mean(r().map(|x| f(x).medium)),
            strict: mean(r().map(|x| f(x).strict)),
        };
        Self {
            episodes: r().count(),
            s_loc: frac(r().map(|x| x.s_loc)),
            s_loc_lenient: frac(r().map(|x| x.s_loc_lenient)),
            s_gra: frac(r().map(|x| x.s_gra)),
            e_loc: mean(r().map(|x| x.e_loc)),
            e_gra: mean(r().map(|x| x.e_gra)),
            q_smooth: mean(r().filter_map(|x| x.q_smooth)),
            q_line: mean(r().filter_map(|x| x.q_line)),
            r_time: mean(r().map(|x| x.r_time)),
            grasp_rates: rates(|x| x.grasp_rates),
            contact_rates: rates(|x| x.contact_rates),
        }
    }
}

/// Aggregates grouped along each reporting dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stratified {
    pub overall: Summary,
    pub periodicity: BTreeMap<String, Summary>,
    pub duration: BTreeMap<String, Summary>,
    pub length: BTreeMap<String, Summary>,
    pub subcategory: BTreeMap<String, Summary>,
}

fn group_by(reports: &[MetricsReport], key: impl Fn(&MetricsReport) -> String) -> BTreeMap<String, Summary> {
    let mut groups: BTreeMap<String, Vec<&MetricsReport>> = BTreeMap::new();
    for r in reports {
        groups.entry(key(r)).or_default().push(r);
    }
    groups.into_iter().map(|(k, v)| (k, Summary::of(v.iter().copied()))).collect()
}

pub fn stratify(reports: &[MetricsReport]) -> Stratified {
    Stratified {
        overall: Summary::of(reports),
        periodicity: group_by(reports, |r| r.strata.periodicity.name().to_string()),
        duration: group_by(reports, |r| r.strata.duration.clone()),
        length: group_by(reports, |r| r.strata.length.clone()),
        subcategory: group_by(reports, |r| r.task_type.clone()),
    }
}

/// Fixed-width text table of summaries, one row per group.
pub fn render_table(title: &str, rows: &BTreeMap<String, Summary>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{title}");
    let _ = writeln!(
        out,
        "{:<22} {:>5} {:>7} {:>7} {:>7} {:>7} {:>7} {:>8} {:>7} {:>7} {:>7} {:>7} {:>7}",
        "group", "n", "S_loc%", "S_gra%", "E_loc", "E_gra", "Q_smth", "Q_line", "R_time", "loose%", "med%", "strict%", "S_len%"
    );
    for (k, s) in rows {
        let _ = writeln!(
            out,
            "{:<22} {:>5} {:>7.2} {:>7.2} {:>7.3} {:>7.3} {:>7.3} {:>8.3} {:>7.3} {:>7.2} {:>7.2} {:>7.2} {:>7.2}",
            k,
            s.episodes,
            100.0 * s.s_loc,
            100.0 * s.s_gra,
            s.e_loc,
            s.e_gra,
            s.q_smooth,
            s.q_line,
            s.r_time,
            100.0 * s.grasp_rates.loose,
            100.0 * s.grasp_rates.medium,
            100.0 * s.grasp_rates.strict,
            100.0 * s.s_loc_lenient,
        );
    }
    out
}
