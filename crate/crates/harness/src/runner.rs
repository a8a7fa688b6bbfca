//! Training and evaluation loops, one worker per seed.

use std::path::{Path, PathBuf};
use std::time::Instant;

use aerostar_agents::{build_agent, restore_agent, Agent, AgentDims, AgentKind};
use aerostar_core::Environment;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::metrics::{MetricsRow, MetricsWriter, RowBuilder};
use crate::HarnessError;

/// Called after every finished episode with the seed and its aggregate row.
pub type Progress<'a> = &'a (dyn Fn(u64, &MetricsRow) + Sync);

pub fn quiet(_: u64, _: &MetricsRow) {}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedRun {
    pub seed: u64,
    /// Aggregate rows, one per episode.
    pub episodes: Vec<MetricsRow>,
    pub metrics_path: Option<PathBuf>,
    pub checkpoint_path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedSummary {
    pub seed: u64,
    pub episodes: usize,
    pub mean_return_first50: f64,
    pub mean_return_last50: f64,
    pub mean_efficiency_last50: f64,
    pub mean_sum_rate_last50: f64,
    pub mean_power_last50: f64,
    pub mean_hfi_last50: f64,
    pub mean_jfi_last50: f64,
    pub qos_violation_rate_last50: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn of(xs: &[f64]) -> Self {
        if xs.is_empty() {
            return Self { mean: 0.0, std: 0.0 };
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        Self { mean, std: var.sqrt() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub name: String,
    pub agent: AgentKind,
    pub config: ExperimentConfig,
    pub seeds: Vec<SeedSummary>,
    pub return_last50: MeanStd,
    pub efficiency_last50: MeanStd,
}

fn window_mean(rows: &[MetricsRow], f: impl Fn(&MetricsRow) -> f64) -> f64 {
    if rows.is_empty() {
        return 0.0;
    }
    rows.iter().map(f).sum::<f64>() / rows.len() as f64
}

impl SeedSummary {
    pub fn from_episodes(seed: u64, eps: &[MetricsRow]) -> Self {
        let first = &eps[..eps.len().min(50)];
        let last = &eps[eps.len().saturating_sub(50)..];
        Self {
            seed,
            episodes: eps.len(),
            mean_return_first50: window_mean(first, |r| r.reward),
            mean_return_last50: window_mean(last, |r| r.reward),
            mean_efficiency_last50: window_mean(last, |r| r.efficiency_bpj),
            mean_sum_rate_last50: window_mean(last, |r| r.sum_rate_bps),
            mean_power_last50: window_mean(last, |r| r.power_w),
            mean_hfi_last50: window_mean(last, |r| r.hfi),
            mean_jfi_last50: window_mean(last, |r| r.jfi),
            qos_violation_rate_last50: window_mean(last, |r| r.qos_violation_rate),
        }
    }
}

pub fn metrics_file(dir: &Path, seed: u64) -> PathBuf {
    dir.join(format!("metrics_seed{seed}.csv"))
}

pub fn checkpoint_file(dir: &Path, seed: u64) -> PathBuf {
    dir.join(format!("checkpoint_seed{seed}.json"))
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Train one seed. With `dir` set, metrics and checkpoints are written
/// there.
pub fn train_seed(
    cfg: &ExperimentConfig,
    seed: u64,
    dir: Option<&Path>,
    progress: Progress,
) -> Result<SeedRun, HarnessError> {
    let mut env = Environment::new(cfg.env_config(), seed)?;
    let dims = AgentDims {
        state_dim: env.state_dim(),
        layout: *env.layout(),
    };
    let mut agent = build_agent(cfg.experiment.agent, &cfg.agent, dims, seed)?;
    let mut writer = match dir {
        Some(d) => Some(MetricsWriter::create(&metrics_file(d, seed))?),
        None => None,
    };
    let mut rows = RowBuilder::new();
    let mut episodes = Vec::with_capacity(cfg.experiment.episodes);
    let every = cfg.experiment.checkpoint_every;

    for ep in 0..cfg.experiment.episodes {
        let t_ep = Instant::now();
        let mut state = env.reset()?;
        let mut step = 0;
        loop {
            let t = Instant::now();
            let action = agent.act(&state, true)?;
            let out = env.step(&action)?;
            agent.observe(&state, &action, out.reward, &out.next_state, out.terminal)?;
            agent.train_step()?;
            let row = rows.step(ep, step, &out, ms_since(t));
            if let Some(w) = writer.as_mut() {
                w.write(&row)?;
            }
            step += 1;
            state = out.next_state;
            if out.terminal {
                break;
            }
        }
        agent.end_episode();
        let agg = rows.finish_episode(ep, ms_since(t_ep));
        if let Some(w) = writer.as_mut() {
            w.write(&agg)?;
        }
        progress(seed, &agg);
        episodes.push(agg);
        if let Some(d) = dir {
            if every > 0 && (ep + 1) % every == 0 && ep + 1 < cfg.experiment.episodes {
                save_checkpoint(agent.as_ref(), &checkpoint_file(d, seed))?;
            }
        }
    }
    let mut checkpoint_path = None;
    if let Some(w) = writer.as_mut() {
        w.flush()?;
    }
    if let Some(d) = dir {
        let p = checkpoint_file(d, seed);
        save_checkpoint(agent.as_ref(), &p)?;
        checkpoint_path = Some(p);
    }
    Ok(SeedRun {
        seed,
        episodes,
        metrics_path: dir.map(|d| metrics_file(d, seed)),
        checkpoint_path,
    })
}

fn save_checkpoint(agent: &dyn Agent, path: &Path) -> Result<(), HarnessError> {
    std::fs::write(path, agent.checkpoint()?)?;
    Ok(())
}

/// Run `f` for every seed on at most `workers` threads, keeping seed order.
pub fn for_each_seed<T: Send>(
    seeds: &[u64],
    workers: usize,
    f: impl Fn(u64) -> Result<T, HarnessError> + Sync,
) -> Result<Vec<T>, HarnessError> {
    let mut out = Vec::with_capacity(seeds.len());
    for chunk in seeds.chunks(workers.max(1)) {
        let results: Vec<Result<T, HarnessError>> = std::thread::scope(|s| {
            let f = &f;
            let handles: Vec<_> = chunk.iter().map(|&seed| s.spawn(move || f(seed))).collect();
            handles
                .into_iter()
                .map(|h| {
                    h.join()
                        .unwrap_or_else(|_| Err(HarnessError::Runtime("worker panicked".into())))
                })
                .collect()
        });
        for r in results {
            out.push(r?);
        }
    }
    Ok(out)
}

/// Train every configured seed into the run directory and write
/// `summary.json` and a config echo next to the metrics.
pub fn run_training(cfg: &ExperimentConfig, progress: Progress) -> Result<RunSummary, HarnessError> {
    cfg.validate()?;
    let dir = cfg.run_dir();
    run_training_in(cfg, &dir, progress)
}

pub fn run_training_in(cfg: &ExperimentConfig, dir: &Path, progress: Progress) -> Result<RunSummary, HarnessError> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("config.toml"), cfg.to_toml()?)?;
    let runs = for_each_seed(&cfg.experiment.seeds, cfg.experiment.workers, |seed| {
        train_seed(cfg, seed, Some(dir), progress)
    })?;
    let seeds: Vec<SeedSummary> = runs
        .iter()
        .map(|r| SeedSummary::from_episodes(r.seed, &r.episodes))
        .collect();
    let returns: Vec<f64> = seeds.iter().map(|s| s.mean_return_last50).collect();
    let effs: Vec<f64> = seeds.iter().map(|s| s.mean_efficiency_last50).collect();
    let summary = RunSummary {
        name: cfg.experiment.name.clone(),
        agent: cfg.experiment.agent,
        config: cfg.clone(),
        seeds,
        return_last50: MeanStd::of(&returns),
        efficiency_last50: MeanStd::of(&effs),
    };
    std::fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    Ok(summary)
}

/// Greedy rollouts of a checkpointed agent; nothing is learned.
pub fn evaluate(
    cfg: &ExperimentConfig,
    checkpoint: &str,
    episodes: usize,
    seed: u64,
    out: Option<&Path>,
) -> Result<Vec<MetricsRow>, HarnessError> {
    let mut env = Environment::new(cfg.env_config(), seed)?;
    let mut agent = restore_agent(checkpoint, seed)?;
    let mut writer = match out {
        Some(p) => Some(MetricsWriter::create(p)?),
        None => None,
    };
    let mut rows = RowBuilder::new();
    let mut aggregates = Vec::with_capacity(episodes);
    for ep in 0..episodes {
        let t_ep = Instant::now();
        let mut state = env.reset()?;
        let mut step = 0;
        loop {
            let t = Instant::now();
            let action = agent.act(&state, false)?;
            let out = env.step(&action)?;
            let row = rows.step(ep, step, &out, ms_since(t));
            if let Some(w) = writer.as_mut() {
                w.write(&row)?;
            }
            step += 1;
            state = out.next_state;
            if out.terminal {
                break;
            }
        }
        let agg = rows.finish_episode(ep, ms_since(t_ep));
        if let Some(w) = writer.as_mut() {
            w.write(&agg)?;
        }
        aggregates.push(agg);
    }
    if let Some(w) = writer.as_mut() {
        w.flush()?;
    }
    Ok(aggregates)
}
