use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::Duration;

use hoigym::engine::agents::{Chaser, Extrapolator, ZeroAgent};
use hoigym::engine::{run_rollout, EpisodeConfig, EpisodeRecord};
use hoigym::metrics::{evaluate, render_table, stratify, MetricsReport, Summary};
use hoigym::motiongen::Catalog;
use hoigym::oracle::{gt_grasp, run_gt_episode};
use hoigym_datapipe::{
    collect_dataset, compute_action_stats, corpus_csv, episode_config, filter_outliers, histogram_csv, plan_dataset,
    read_archive, read_corpus, CollectConfig, FilterConfig, PlannedEpisode,
};
use hoigym_protocol::{Server, ServerConfig};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::{
    Agent, Cli, CliError, Command, EpisodeArgs, EvalArgs, GenerateArgs, ReplayArgs, ReportArgs, SelectArgs, ServeArgs, StatsArgs,
};

type Out<'a> = &'a mut dyn Write;

fn io_err(e: std::io::Error) -> CliError {
    if e.kind() == std::io::ErrorKind::BrokenPipe {
        return CliError::new(crate::BROKEN_PIPE, e.to_string());
    }
    CliError::new("io", e.to_string())
}

macro_rules! say {
    ($out:expr, $($arg:tt)*) => {
        writeln!($out, $($arg)*).map_err(io_err)?
    };
}

/// Executes one parsed command, writing its report to `out`.
pub fn run(cli: Cli, out: Out) -> Result<(), CliError> {
    match cli.command {
        Command::Generate(a) => generate(a, out),
        Command::Serve(a) => serve(a, out),
        Command::EvalOracle(a) => eval(a, None, out),
        Command::EvalScripted(a) => eval(a.eval, Some(a.agent), out),
        Command::Replay(a) => replay(a, out),
        Command::Stats(a) => stats(a, out),
        Command::Report(a) => report(a, out),
    }
}

fn print_config(out: Out, command: &str, config: impl Serialize) -> Result<(), CliError> {
    let mut v = serde_json::to_value(config).map_err(|e| CliError::new("internal", e.to_string()))?;
    v["command"] = json!(command);
    say!(out, "config {}", hoigym::canonical_json(&v));
    out.flush().map_err(io_err)
}

fn load_catalog(args: &EpisodeArgs) -> Result<Catalog, CliError> {
    match &args.catalog {
        Some(p) => Catalog::load(p).map_err(|e| CliError::new("catalog", e.to_string())),
        None => Ok(Catalog::builtin()),
    }
}

fn collect_config(select: &SelectArgs, episode: &EpisodeArgs) -> CollectConfig {
    CollectConfig {
        selection: select.subcategory.clone(),
        episodes: select.episodes as usize,
        seed: select.seed,
        retries: select.retries,
        options: episode.options(),
        threads: select.threads.map(|t| t as usize),
    }
}

fn in_pool<T: Send>(threads: Option<u64>, job: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n as usize)
            .build()
            .map(|pool| pool.install(job))
            .map_err(|e| CliError::new("internal", e.to_string())),
        None => Ok(job()),
    }
}

fn generate(a: GenerateArgs, out: Out) -> Result<(), CliError> {
    let catalog = load_catalog(&a.episode)?;
    let cfg = collect_config(&a.select, &a.episode);
    print_config(
        out,
        "generate",
        json!({ "collect": cfg, "catalog": a.episode.catalog, "catalog_checksum": catalog.checksum(), "out": a.out }),
    )?;
    if a.out.join("manifest.json").exists() {
        return Err(CliError::new("exists", format!("{} already holds a dataset", a.out.display())));
    }
    let manifest = collect_dataset(&catalog, &cfg, &a.out).map_err(|e| CliError::new("archive", e.to_string()))?;
    say!(
        out,
        "generated {} episodes: {} ok, {} failed, {} retries",
        manifest.entries.len(),
        manifest.successes,
        manifest.failures,
        manifest.retries
    );
    say!(out, "manifest {}", a.out.join("manifest.json").display());
    if manifest.failures > 0 {
        let first = manifest.entries.iter().find(|e| !e.errors.is_empty() && e.episode_id.is_none());
        let detail = first.and_then(|e| e.errors.last()).cloned().unwrap_or_default();
        return Err(CliError::new("collect", format!("{} episodes failed; last error: {detail}", manifest.failures)));
    }
    Ok(())
}

fn serve(a: ServeArgs, out: Out) -> Result<(), CliError> {
    let catalog = load_catalog(&a.episode)?;
    let config = ServerConfig {
        options: a.episode.options(),
        deadline: Duration::from_secs_f64(a.deadline),
        ..ServerConfig::new(catalog)
    };
    print_config(
        out,
        "serve",
        json!({ "bind": a.bind, "deadline": a.deadline, "sessions": a.sessions, "options": config.options, "catalog": a.episode.catalog }),
    )?;
    let server = Server::bind(&a.bind, config).map_err(|e| CliError::new("bind", format!("{}: {e}", a.bind)))?;
    say!(out, "listening {}", server.local_addr().map_err(io_err)?);
    out.flush().map_err(io_err)?;
    // sessions finish on worker threads; println! keeps each line whole
    server
        .run(a.sessions, move |result| {
            let line = match result {
                Ok(s) => json!({
                    "session": "ok",
                    "episode_id": s.start.episode_id,
                    "task_type": s.start.task_type,
                    "chunks": s.chunks.len(),
                    "s_loc": s.report.s_loc,
                    "s_gra": s.report.s_gra,
                    "e_loc": s.report.e_loc,
                }),
                Err(e) => json!({ "session": "error", "code": e.code, "detail": e.detail }),
            };
            println!("{line}");
        })
        .map_err(io_err)
}

fn rollout(config: &EpisodeConfig, agent: Option<Agent>) -> Result<EpisodeRecord, String> {
    let r = match agent {
        None => return run_gt_episode(config).map_err(|e| e.to_string()),
        Some(Agent::Zero) => run_rollout(config, &mut ZeroAgent),
        Some(Agent::Chaser) => run_rollout(config, &mut Chaser::new(config.camera.clone())),
        Some(Agent::Extrapolator) => run_rollout(config, &mut Extrapolator::new(config.camera.clone(), config.frames, config.dt)),
    };
    r.map_err(|e| e.to_string())
}

fn eval_one(catalog: &Catalog, cfg: &CollectConfig, p: &PlannedEpisode, agent: Option<Agent>) -> Result<MetricsReport, String> {
    let config = episode_config(catalog, p, &cfg.options, cfg.retries).map_err(|errs| errs.join("; "))?;
    let record = rollout(&config, agent)?;
    evaluate(&record, &gt_grasp()).map_err(|e| e.to_string())
}

fn eval(a: EvalArgs, agent: Option<Agent>, out: Out) -> Result<(), CliError> {
    let catalog = load_catalog(&a.episode)?;
    let cfg = collect_config(&a.select, &a.episode);
    let name = agent.map_or("oracle", |ag| match ag {
        Agent::Zero => "zero",
        Agent::Chaser => "chaser",
        Agent::Extrapolator => "extrapolator",
    });
    print_config(
        out,
        if agent.is_some() { "eval-scripted" } else { "eval-oracle" },
        json!({ "agent": name, "collect": cfg, "catalog": a.episode.catalog, "catalog_checksum": catalog.checksum(), "out": a.out }),
    )?;
    let plan = plan_dataset(&catalog, &cfg).map_err(|e| CliError::new("catalog", e.to_string()))?;
    let results =
        in_pool(a.select.threads, || plan.par_iter().map(|p| (p, eval_one(&catalog, &cfg, p, agent))).collect::<Vec<_>>())?;
    let mut reports: Vec<(usize, MetricsReport)> = Vec::new();
    let mut failed = Vec::new();
    for (p, r) in results {
        match r {
            Ok(rep) => reports.push((p.index, rep)),
            Err(e) => failed.push((p.index, p.subcategory.clone(), e)),
        }
    }
    reports.sort_by_key(|(i, r)| (r.episode_id, *i));
    let reports: Vec<MetricsReport> = reports.into_iter().map(|(_, r)| r).collect();
    if a.per_episode {
        say!(
            out,
            "{:>20} {:<20} {:>6} {:>6} {:>7} {:>7} {:>7} {:>7} {:>7}",
            "episode",
            "task",
            "S_loc",
            "S_gra",
            "E_loc",
            "E_gra",
            "Q_smth",
            "Q_line",
            "R_time"
        );
        for r in &reports {
            say!(
                out,
                "{:>20} {:<20} {:>6} {:>6} {:>7.3} {:>7.3} {:>7.3} {:>7.3} {:>7.3}",
                r.episode_id,
                r.task_type,
                u8::from(r.s_loc),
                u8::from(r.s_gra),
                r.e_loc,
                r.e_gra,
                r.q_smooth.unwrap_or(f64::NAN),
                r.q_line.unwrap_or(f64::NAN),
                r.r_time
            );
        }
    }
    for (i, sub, e) in &failed {
        say!(out, "failed episode index {i} ({sub}): {e}");
    }
    let mut rows = BTreeMap::new();
    rows.insert(name.to_string(), Summary::of(&reports));
    out.write_all(render_table(&format!("{name} over {} episodes", reports.len()), &rows).as_bytes()).map_err(io_err)?;
    out.write_all(render_table("by periodicity", &stratify(&reports).periodicity).as_bytes()).map_err(io_err)?;
    if let Some(path) = &a.out {
        let text = serde_json::to_string_pretty(&reports).map_err(|e| CliError::new("internal", e.to_string()))?;
        fs::write(path, text).map_err(|e| CliError::new("io", format!("{}: {e}", path.display())))?;
        say!(out, "reports {}", path.display());
    }
    if reports.is_empty() {
        return Err(CliError::new("eval", "no episode could be evaluated"));
    }
    Ok(())
}

fn require_path(path: &Path, what: &str) -> Result<(), CliError> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::new("not_found", format!("{what} {} does not exist", path.display())))
    }
}

fn replay(a: ReplayArgs, out: Out) -> Result<(), CliError> {
    print_config(out, "replay", json!({ "path": a.path, "from": a.from }))?;
    require_path(&a.path, "archive")?;
    let rec = read_archive(&a.path).map_err(|e| CliError::new("archive", e.to_string()))?;
    let c = &rec.config;
    say!(
        out,
        "episode {} task {} controller {} frames {} observe {} threshold {}",
        c.episode_id,
        c.task_type,
        rec.controller,
        rec.len(),
        c.obs_frames,
        c.thresholds.loc
    );
    say!(
        out,
        "{:>5} {:>7} {:<8} {:>26} {:>26} {:>7} {:>7} {:<5} {:>3}",
        "frame",
        "time",
        "phase",
        "palm",
        "target",
        "dist",
        "tip",
        "touch",
        "att"
    );
    let v = |p: hoigym::kinematics::Vec3<f64>| format!("{:>8.4},{:>8.4},{:>8.4}", p.x, p.y, p.z);
    for f in rec.frames.iter().skip(a.from) {
        let touch: String = f.contacts.iter().map(|&c| if c { '1' } else { '0' }).collect();
        say!(
            out,
            "{:>5} {:>7.3} {:<8} {:>26} {:>26} {:>7.4} {:>7.4} {:<5} {:>3}",
            f.frame,
            f.observation.time,
            f.phase.as_deref().unwrap_or("-"),
            v(f.observation.palm),
            v(f.target),
            f.object_distance,
            f.fingertip_distance,
            touch,
            u8::from(f.attached)
        );
    }
    let report = evaluate(&rec, &gt_grasp()).map_err(|e| CliError::new("metrics", e.to_string()))?;
    say!(
        out,
        "result S_loc {} E_loc {:.4} S_gra {} E_gra {:.4} first_success {}",
        report.s_loc,
        report.e_loc,
        report.s_gra,
        report.e_gra,
        report.first_success.map_or("-".to_string(), |k| k.to_string())
    );
    Ok(())
}

fn write_file(dir: &Path, name: &str, text: &str) -> Result<(), CliError> {
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| CliError::new("io", format!("{}: {e}", path.display())))
}

fn stats(a: StatsArgs, out: Out) -> Result<(), CliError> {
    print_config(out, "stats", json!({ "path": a.path, "bins": a.bins, "out": a.out, "filter": FilterConfig::default() }))?;
    require_path(&a.path, "corpus")?;
    let corpus = read_corpus(&a.path).map_err(|e| CliError::new("archive", e.to_string()))?;
    let stats = compute_action_stats(&corpus, a.bins as usize).map_err(|e| CliError::new("stats", e.to_string()))?;
    say!(out, "episodes {} control samples {}", stats.episodes, stats.samples);
    say!(out, "{:<10} {:>10} {:>10} {:>10} {:>10}", "dim", "min", "q01", "q99", "max");
    for d in &stats.dims {
        say!(out, "{:<10} {:>10.5} {:>10.5} {:>10.5} {:>10.5}", d.name, d.min, d.q01, d.q99, d.max);
    }
    let filtered = filter_outliers(&corpus, &stats, &FilterConfig::default());
    say!(out, "filter kept {} rejected {} clipped {}", filtered.kept.len(), filtered.rejections.len(), filtered.clipped);
    for r in &filtered.rejections {
        say!(
            out,
            "reject {} {} {}",
            r.episode_id,
            serde_json::to_value(r.rule).unwrap_or_default().as_str().unwrap_or(""),
            r.detail
        );
    }
    if let Some(dir) = &a.out {
        fs::create_dir_all(dir).map_err(|e| CliError::new("io", format!("{}: {e}", dir.display())))?;
        write_file(dir, "action_stats.json", &pretty(&stats))?;
        write_file(dir, "histograms.csv", &histogram_csv(&stats))?;
        write_file(dir, "corpus.csv", &corpus_csv(&corpus))?;
        write_file(dir, "filter.json", &pretty(&filtered.rejections))?;
        say!(out, "wrote {}", dir.display());
    }
    Ok(())
}

fn pretty<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("serializes")
}

fn load_reports(path: &Path) -> Result<Vec<MetricsReport>, CliError> {
    if path.is_dir() {
        let corpus = read_corpus(path).map_err(|e| CliError::new("archive", e.to_string()))?;
        return corpus.iter().map(|r| evaluate(r, &gt_grasp()).map_err(|e| CliError::new("metrics", e.to_string()))).collect();
    }
    let text = fs::read_to_string(path).map_err(|e| CliError::new("io", format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::new("parse", format!("{}: {e}", path.display())))
}

fn report(a: ReportArgs, out: Out) -> Result<(), CliError> {
    print_config(out, "report", json!({ "path": a.path, "sample": a.sample, "seed": a.seed }))?;
    require_path(&a.path, "report")?;
    let mut reports = load_reports(&a.path)?;
    reports.sort_by(|x, y| (x.episode_id, &x.controller).cmp(&(y.episode_id, &y.controller)));
    let s = stratify(&reports);
    let mut overall = BTreeMap::new();
    overall.insert("all".to_string(), s.overall.clone());
    let tables = [
        ("overall", &overall),
        ("periodicity", &s.periodicity),
        ("duration (frames)", &s.duration),
        ("path length (m)", &s.length),
        ("subcategory", &s.subcategory),
    ];
    for (title, rows) in tables {
        out.write_all(render_table(title, rows).as_bytes()).map_err(io_err)?;
    }
    for (dim, rows) in
        [("periodicity", &s.periodicity), ("duration", &s.duration), ("length", &s.length), ("subcategory", &s.subcategory)]
    {
        let sum: usize = rows.values().map(|r| r.episodes).sum();
        say!(out, "total {dim} {sum} of {}", s.overall.episodes);
        if sum != s.overall.episodes {
            return Err(CliError::new("internal", format!("{dim} strata cover {sum} of {} episodes", s.overall.episodes)));
        }
    }
    if let Some(k) = a.sample {
        let mut groups: BTreeMap<&str, Vec<u64>> = BTreeMap::new();
        for r in &reports {
            groups.entry(r.strata.periodicity.name()).or_default().push(r.episode_id);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
        for (name, ids) in &mut groups {
            ids.shuffle(&mut rng);
            let mut pick: Vec<u64> = ids.iter().copied().take(k).collect();
            pick.sort_unstable();
            let list: Vec<String> = pick.iter().map(u64::to_string).collect();
            say!(out, "sample {name} {}", list.join(" "));
        }
    }
    Ok(())
}
