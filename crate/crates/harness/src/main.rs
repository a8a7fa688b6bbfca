use std::path::{Path, PathBuf};
use std::process::ExitCode;

use aerostar_agents::AgentKind;
use aerostar_harness::config::{default_toml, ExperimentConfig, Overrides, OUTPUT_ENV};
use aerostar_harness::metrics::{write_csv, MetricsRow};
use aerostar_harness::runner::{evaluate, quiet, run_training, SeedSummary};
use aerostar_harness::{selftest, sweeps, HarnessError};
use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "aerostar", version, about = "Aerial STAR surface simulator and DA-DDPG trainer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// TOML experiment file; missing keys take defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Single seed, replacing the configured list.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    episodes: Option<usize>,
    /// daddpg, ddpg, dqn or random.
    #[arg(long, value_parser = parse_agent)]
    agent: Option<AgentKind>,
    /// Output root.
    #[arg(long, env = OUTPUT_ENV)]
    out: Option<PathBuf>,
    /// Run name (subdirectory of the output root).
    #[arg(long)]
    name: Option<String>,
    /// Print one line per finished episode.
    #[arg(long)]
    verbose: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Train agents, one metrics file per seed.
    Train(Common),
    /// Flight power over speed for several panel areas.
    SweepVelocity(Common),
    /// Heuristic-policy efficiency over element count and top speed.
    SweepElements(Common),
    /// Mean HFI and JFI of lognormal rates over dispersion and user count.
    SweepFairness(Common),
    /// Train every deployment, surface and reward variant.
    Ablate(Common),
    /// Greedy rollouts of a saved agent.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Run the built-in invariant checks.
    Selftest,
    /// Print the default configuration as TOML.
    Defaults,
}

fn parse_agent(s: &str) -> Result<AgentKind, String> {
    AgentKind::parse(s).ok_or_else(|| format!("unknown agent {s:?}"))
}

fn load(common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    cfg.apply(&Overrides {
        seed: common.seed,
        episodes: common.episodes,
        agent: common.agent,
        output_dir: common.out.clone(),
    });
    if let Some(n) = &common.name {
        cfg.experiment.name = n.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn log_episode(seed: u64, row: &MetricsRow) {
    eprintln!(
        "seed {seed} episode {:>5}  return {:>10.3}  ma50 {:>10.3}  eff {:.4e} bit/J",
        row.episode, row.reward, row.reward_ma50, row.efficiency_bpj
    );
}

fn print_seeds(seeds: &[SeedSummary]) {
    for s in seeds {
        println!(
            "seed {}: return first50 {:.3}, last50 {:.3}, efficiency {:.4e} bit/J",
            s.seed, s.mean_return_first50, s.mean_return_last50, s.mean_efficiency_last50
        );
    }
}

fn write_rows<T: serde::Serialize>(dir: &Path, file: &str, rows: &[T]) -> Result<PathBuf> {
    let path = dir.join(file);
    write_csv(&path, rows)?;
    println!("wrote {} ({} rows)", path.display(), rows.len());
    Ok(path)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Train(common) => {
            let cfg = load(&common)?;
            let progress: &(dyn Fn(u64, &MetricsRow) + Sync) = if common.verbose { &log_episode } else { &quiet };
            let summary = run_training(&cfg, progress)?;
            print_seeds(&summary.seeds);
            println!("outputs in {}", cfg.run_dir().display());
        }
        Command::SweepVelocity(common) => {
            let cfg = load(&common)?;
            let rows = sweeps::velocity_area_sweep(&cfg)?;
            for r in rows.iter().filter(|r| r.is_argmin) {
                println!("area {:.4} m²: minimum {:.2} W at {:.1} m/s", r.area_m2, r.power_w, r.velocity_mps);
            }
            write_rows(&cfg.run_dir(), "velocity_sweep.csv", &rows)?;
        }
        Command::SweepElements(common) => {
            let mut cfg = load(&common)?;
            if let Some(s) = common.seed {
                cfg.elements_sweep.seed = s;
            }
            if let Some(e) = common.episodes {
                cfg.elements_sweep.episodes = e;
            }
            let rows = sweeps::elements_sweep(&cfg)?;
            write_rows(&cfg.run_dir(), "elements_sweep.csv", &rows)?;
        }
        Command::SweepFairness(common) => {
            let mut cfg = load(&common)?;
            if let Some(s) = common.seed {
                cfg.fairness_sweep.seed = s;
            }
            let rows = sweeps::fairness_sweep(&cfg)?;
            write_rows(&cfg.run_dir(), "fairness_sweep.csv", &rows)?;
        }
        Command::Ablate(common) => {
            let cfg = load(&common)?;
            let progress: &(dyn Fn(u64, &MetricsRow) + Sync) = if common.verbose { &log_episode } else { &quiet };
            let dir = cfg.run_dir().join("ablation");
            let (rows, _) = sweeps::run_ablation(&cfg, &dir, progress)?;
            for r in &rows {
                println!(
                    "{:<10} {:<17} seed {}: return {:.3}, efficiency {:.4e}",
                    r.group, r.variant, r.seed, r.mean_return_last50, r.mean_efficiency_last50
                );
            }
            println!("wrote {}", dir.join("ablation.csv").display());
        }
        Command::Eval { common, checkpoint } => {
            let cfg = load(&common)?;
            let text = std::fs::read_to_string(&checkpoint)
                .with_context(|| format!("reading {}", checkpoint.display()))?;
            let episodes = common.episodes.unwrap_or(10);
            let seed = cfg.experiment.seeds[0];
            let out = cfg.run_dir().join(format!("eval_seed{seed}.csv"));
            let rows = evaluate(&cfg, &text, episodes, seed, Some(&out))?;
            let s = SeedSummary::from_episodes(seed, &rows);
            println!(
                "{} greedy episodes: mean return {:.3}, efficiency {:.4e} bit/J, QoS violation rate {:.3}",
                rows.len(),
                s.mean_return_last50,
                s.mean_efficiency_last50,
                s.qos_violation_rate_last50
            );
            println!("wrote {}", out.display());
        }
        Command::Selftest => {
            let checks = selftest::run_all();
            let failed = checks.iter().filter(|c| !c.passed).count();
            for c in &checks {
                println!("[{}] {:<20} {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            if failed > 0 {
                println!("{failed} of {} checks failed", checks.len());
                return Ok(ExitCode::from(3));
            }
            println!("all {} checks passed", checks.len());
        }
        Command::Defaults => print!("{}", default_toml()),
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e.downcast_ref::<HarnessError>().map_or(2, HarnessError::exit_code);
            ExitCode::from(code as u8)
        }
    }
}
