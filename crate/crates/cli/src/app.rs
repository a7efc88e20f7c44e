use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use pda_core::Result;

use crate::config::{load_config, RunConfig};
use crate::layout::{arch_tag, parse_arch, PolicyKind};
use crate::pipeline::Pipeline;

/// Policy domain adaptation experiments on an actuated bluff-body flow.
///
/// Artifacts are written under the output root: `--out`, else the config's
/// `output_dir`, else `$PDA_OUT`, else `./runs`.
#[derive(Debug, Parser)]
#[command(name = "pda", version, propagate_version = true)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// TOML run configuration; every key is optional.
    #[arg(long, short, global = true)]
    pub config: Option<PathBuf>,
    /// Output root, overriding the configuration and `$PDA_OUT`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Warm up the uncontrolled flow and store the snapshot and statistics.
    Baseline,
    /// Train a policy with evolution strategies.
    TrainPolicy {
        #[arg(long, value_enum)]
        policy: PolicyKind,
    },
    /// Record noisy trajectories of a behavior policy.
    Collect {
        /// Behavior policy artifact [default: policies/pi_star.json].
        #[arg(long)]
        behavior: Option<PathBuf>,
    },
    /// Fit a reconstruction map from base-probe windows to wake probes.
    TrainDsft {
        /// Base-probe history length [default: from config].
        #[arg(long)]
        n: Option<usize>,
        /// Action history length [default: from config].
        #[arg(long)]
        m: Option<usize>,
        /// Hidden layers: `linear`, `128`, `64x64`, ... [default: from config].
        #[arg(long)]
        arch: Option<String>,
        /// Replicate index; selects an independent training seed.
        #[arg(long, default_value_t = 0)]
        replicate: u64,
    },
    /// Compose a full-measurement policy with a reconstruction map.
    Compose {
        /// Policy artifact [default: policies/pi_star.json].
        #[arg(long)]
        policy: Option<PathBuf>,
        /// Reconstruction map [default: the configured window and architecture].
        #[arg(long)]
        model: Option<PathBuf>,
        /// Output name under compose/.
        #[arg(long)]
        name: Option<String>,
    },
    /// Run an ensemble of episodes under a policy.
    Evaluate {
        /// `zero` or a policy or composed artifact.
        #[arg(long)]
        policy: String,
        /// Name used for the output files [default: file stem].
        #[arg(long)]
        name: Option<String>,
    },
    /// Evaluate compositions over a grid of history lengths.
    Sweep {
        /// Full-measurement policy [default: policies/pi_star.json].
        #[arg(long)]
        policy: Option<PathBuf>,
    },
    /// Compare the uncontrolled flow with trained and composed policies.
    Compare {
        /// Artifacts to compare [default: pi_star, direct_partial and the
        /// configured composition].
        #[arg(long = "with")]
        with: Vec<PathBuf>,
    },
    /// Print the effective configuration.
    ShowConfig,
}

pub fn resolve_config(global: &GlobalArgs) -> Result<RunConfig> {
    let mut cfg = match &global.config {
        Some(p) => load_config(p)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &global.out {
        cfg.output_dir = Some(out.clone());
    }
    Ok(cfg)
}

/// Executes one parsed command and returns the lines to print.
pub fn run(cli: Cli) -> Result<Vec<String>> {
    let cfg = resolve_config(&cli.global)?;
    if let Command::ShowConfig = cli.command {
        return Ok(vec![cfg.dump()?]);
    }
    let p = Pipeline::new(cfg)?;
    let d = p.config().dsft.clone();
    let lines = match cli.command {
        Command::Baseline => {
            let b = p.baseline()?;
            vec![format!(
                "baseline: drag {:.4} (last 100 steps {:.4}), Strouhal {:.4}, period {:.1} steps",
                b.stats.drag_mean,
                b.drag_last100,
                b.stats.strouhal,
                b.stats.period_steps()
            )]
        }
        Command::TrainPolicy { policy } => {
            let (_, log) = p.train_policy(policy)?;
            let last = log.rows.last().map_or(f64::NAN, |r| r.eval_drag);
            vec![format!(
                "{}: {} iterations, final evaluation drag {last:.4}",
                policy.name(),
                log.rows.len()
            )]
        }
        Command::Collect { behavior } => {
            let data = p.collect(behavior.as_deref())?;
            vec![format!(
                "dataset: {} trajectories of {} steps",
                data.k(),
                data.horizon()
            )]
        }
        Command::TrainDsft {
            n,
            m,
            arch,
            replicate,
        } => {
            let hidden = match arch {
                Some(a) => parse_arch(&a)?,
                None => d.architecture.clone(),
            };
            let out = p.train_dsft(n.unwrap_or(d.n), m.unwrap_or(d.m), &hidden, replicate)?;
            vec![format!(
                "dsft {} ({}): train mse {:.4e}, held-out mse {}, held-out rmse {}",
                out.tag,
                arch_tag(&hidden),
                out.report.train_mse,
                out.report
                    .heldout_mse
                    .map_or("n/a".into(), |v| format!("{v:.4e}")),
                out.heldout
                    .as_ref()
                    .map_or("n/a".into(), |r| format!("{:.4e}", r.aggregate)),
            )]
        }
        Command::Compose {
            policy,
            model,
            name,
        } => {
            let (_, path) = p.compose(policy.as_deref(), model.as_deref(), name.as_deref())?;
            vec![format!("composed policy written to {}", path.display())]
        }
        Command::Evaluate { policy, name } => {
            let out = p.evaluate(&policy, name.as_deref())?;
            let (lo, hi) = out.stats.min_max_last100();
            vec![format!(
                "{}: last-100 drag {:.4} (min {lo:.4}, max {hi:.4}) over {} runs",
                out.name,
                out.mean_last100(),
                out.stats.runs()
            )]
        }
        Command::Sweep { policy } => {
            let table = p.sweep(policy.as_deref())?;
            let mut lines = vec!["n,m,mean_last100,min_last100,max_last100,runs".to_string()];
            lines.extend(table.rows.iter().map(|r| {
                format!(
                    "{},{},{:.4},{:.4},{:.4},{}",
                    r.n, r.m, r.mean_last100, r.min_last100, r.max_last100, r.runs
                )
            }));
            lines
        }
        Command::Compare { with } => {
            let paths = if with.is_empty() {
                p.default_comparison()
            } else {
                with
            };
            let results = p.compare(&paths)?;
            let mut lines = vec!["policy,mean_last100,min_last100,max_last100,runs".to_string()];
            lines.extend(results.iter().map(|r| {
                let r = &r.row;
                format!(
                    "{},{:.4},{:.4},{:.4},{}",
                    r.policy, r.mean_last100, r.min_last100, r.max_last100, r.runs
                )
            }));
            lines
        }
        Command::ShowConfig => unreachable!("handled above"),
    };
    Ok(lines)
}
