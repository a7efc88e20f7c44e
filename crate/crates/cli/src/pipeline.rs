use std::path::{Path, PathBuf};

use pda_core::dsft::{
    collect_dataset, extract_windows, reconstruction_error, train_dsft, ComposedArtifact,
    DsftModel, DsftReport, RmseReport, TrajectoryDataset, WindowSpec, COMPOSED_FORMAT,
};
use pda_core::flow_env::{
    make_baseline_snapshot, phase_snapshots, read_snapshot, write_snapshot, BaselineStats, FlowEnv,
    FlowField,
};
use pda_core::harness::{
    compare_baselines, run_ensemble, sweep_history, write_comparison_csv, write_field_csv,
    Candidate, EnsembleStats, EpisodeRecord, EvalPlan, PolicyResult, SweepTable,
};
use pda_core::nn::{load_json, save_json};
use pda_core::policy::{
    LinearTanhPolicy, MlpPolicy, ObsSource, Policy, PolicyArtifact, ZeroController, MLP_HIDDEN,
    POLICY_FORMAT,
};
use pda_core::policy_opt::{es_train, TrainLog};
use pda_core::{seed, Error, Result};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::RunConfig;
use crate::layout::{arch_tag, Layout, PolicyKind};
use crate::manifest::Recorder;

pub const BASELINE_FORMAT: &str = "pda-baseline-v1";

const STREAM_POLICY: u64 = 1;
const STREAM_COLLECT: u64 = 2;
const STREAM_DSFT: u64 = 3;

/// Uncontrolled reference flow as persisted by `baseline`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineFile {
    pub env_fingerprint: u64,
    /// Mean drag over the last 100 warm-up steps.
    pub drag_last100: f64,
    pub stats: BaselineStats,
}

#[derive(Debug, Clone)]
pub struct DsftOutcome {
    pub tag: String,
    pub model: DsftModel,
    pub report: DsftReport,
    /// Reconstruction error on the held-out trajectories, in pressure units.
    pub heldout: Option<RmseReport>,
}

#[derive(Debug, Clone)]
pub struct EvalOutcome {
    pub name: String,
    pub stats: EnsembleStats,
    pub first_run: EpisodeRecord,
}

impl EvalOutcome {
    pub fn mean_last100(&self) -> f64 {
        self.stats.mean_last100()
    }
}

/// Anything `evaluate` and `compare` can run.
#[derive(Debug, Clone)]
pub enum LoadedPolicy {
    Zero,
    Policy(PolicyArtifact),
    Composed(ComposedArtifact),
}

impl LoadedPolicy {
    /// Reads a policy or composed artifact, dispatching on its format tag.
    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingArtifact(path.to_path_buf()));
        }
        let value: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        match value.get("format").and_then(|f| f.as_str()) {
            Some(POLICY_FORMAT) => Ok(LoadedPolicy::Policy(PolicyArtifact::load(path)?)),
            Some(COMPOSED_FORMAT) => Ok(LoadedPolicy::Composed(ComposedArtifact::load(path)?)),
            other => Err(Error::Format {
                path: path.display().to_string(),
                reason: format!("expected a policy or composed artifact, found format {other:?}"),
            }),
        }
    }

    /// `zero` or a path.
    pub fn from_spec(spec: &str) -> Result<Self> {
        if spec == "zero" {
            Ok(LoadedPolicy::Zero)
        } else {
            Self::load(Path::new(spec))
        }
    }

    pub fn candidate(&self, name: &str, pm_dim: usize) -> Result<Candidate<'static>> {
        Ok(match self {
            LoadedPolicy::Zero => Candidate::new(name, || ZeroController),
            LoadedPolicy::Policy(a) => {
                let c = a.controller(pm_dim);
                Candidate::new(name, move || c.clone())
            }
            LoadedPolicy::Composed(a) => {
                let c = a.controller()?;
                Candidate::new(name, move || c.clone())
            }
        })
    }
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "policy".into())
}

fn create_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    Ok(())
}

fn require(path: &Path) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(Error::MissingArtifact(path.to_path_buf()))
    }
}

#[derive(Serialize)]
struct WarmupRow {
    step: usize,
    drag: f64,
    lift: f64,
}

#[derive(Serialize)]
struct LossRow {
    epoch: usize,
    train_mse: f64,
}

fn write_csv_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Format {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    for r in rows {
        w.serialize(r).map_err(|e| Error::Format {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
    }
    w.flush()?;
    Ok(())
}

/// One experiment directory driven by one configuration.
#[derive(Debug, Clone)]
pub struct Pipeline {
    cfg: RunConfig,
    layout: Layout,
    env: FlowEnv,
}

impl Pipeline {
    /// Uses the configured output root.
    pub fn new(cfg: RunConfig) -> Result<Self> {
        let root = cfg.output_root();
        Self::with_root(cfg, root)
    }

    pub fn with_root(cfg: RunConfig, root: impl Into<PathBuf>) -> Result<Self> {
        cfg.validate()?;
        let env = FlowEnv::new(cfg.environment.clone())?;
        Ok(Self {
            cfg,
            layout: Layout::new(root),
            env,
        })
    }

    pub fn config(&self) -> &RunConfig {
        &self.cfg
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn env(&self) -> &FlowEnv {
        &self.env
    }

    pub fn load_baseline(&self) -> Result<(FlowField, BaselineFile)> {
        let (snap, stats) = (self.layout.snapshot(), self.layout.baseline_stats());
        require(&snap)?;
        let file: BaselineFile = load_json(&stats, BASELINE_FORMAT)?;
        if file.env_fingerprint != self.cfg.environment.fingerprint() {
            return Err(Error::Format {
                path: stats.display().to_string(),
                reason: "baseline was produced for a different environment configuration".into(),
            });
        }
        Ok((read_snapshot(&snap, self.env.lattice())?, file))
    }

    /// One phase-offset start per ensemble run.
    pub fn eval_starts(&self, base: &FlowField) -> Result<Vec<FlowField>> {
        let h = &self.cfg.harness;
        phase_snapshots(&self.env, base, h.runs, h.phase_spacing)
    }

    /// Training starts spread evenly over one shedding period.
    pub fn train_starts(&self, base: &FlowField, stats: &BaselineStats) -> Result<Vec<FlowField>> {
        let count = self.cfg.optimizer.train_starts;
        let spacing = (stats.period_steps() / count as f64).round().max(1.0) as usize;
        phase_snapshots(&self.env, base, count, spacing)
    }

    pub fn baseline(&self) -> Result<BaselineFile> {
        let mut rec = Recorder::new("baseline", vec![]);
        let (field, stats) = make_baseline_snapshot(&self.env, self.cfg.harness.warmup_steps)?;
        let file = BaselineFile {
            env_fingerprint: self.cfg.environment.fingerprint(),
            drag_last100: pda_core::harness::last100_mean(&stats.drag_history)?,
            stats,
        };
        let snap = self.layout.snapshot();
        create_parent(&snap)?;
        write_snapshot(&snap, &field)?;
        rec.output(&snap);
        save_json(&self.layout.baseline_stats(), BASELINE_FORMAT, &file)?;
        rec.output(&self.layout.baseline_stats());
        let dir = self.layout.dir("baseline");
        file.stats.write_csv(&dir.join("stats.csv"))?;
        rec.output(&dir.join("stats.csv"));
        let rows: Vec<WarmupRow> = file
            .stats
            .drag_history
            .iter()
            .zip(&file.stats.lift_history)
            .enumerate()
            .map(|(step, (&drag, &lift))| WarmupRow { step, drag, lift })
            .collect();
        write_csv_rows(&dir.join("warmup.csv"), &rows)?;
        rec.output(&dir.join("warmup.csv"));
        rec.finish(
            &self.layout.manifest("baseline", None),
            &self.cfg,
            json!({
                "drag_last100": file.drag_last100,
                "drag_mean": file.stats.drag_mean,
                "lift_amplitude": file.stats.lift_amplitude,
                "strouhal": file.stats.strouhal,
                "period_steps": file.stats.period_steps(),
            }),
        )?;
        Ok(file)
    }

    pub fn train_policy(&self, kind: PolicyKind) -> Result<(PolicyArtifact, TrainLog)> {
        let mut rec = Recorder::new("train-policy", vec!["--policy".into(), kind.name().into()]);
        let (base, file) = self.load_baseline()?;
        rec.input(&self.layout.snapshot());
        let stats = &file.stats;
        let a_star = self.env.action_bound();
        let source = match kind {
            PolicyKind::PiStar | PolicyKind::PiStarPlus => ObsSource::Full,
            PolicyKind::DirectPartial => ObsSource::PartialHistory {
                n: self.cfg.dsft.n,
                m: self.cfg.dsft.m,
            },
        };
        let norm = source.normalizer(&stats.fm_normalizer()?, &stats.pm_normalizer()?, a_star)?;
        let mut opt = match kind {
            PolicyKind::PiStarPlus => self.cfg.optimizer_plus.clone(),
            _ => self.cfg.optimizer.clone(),
        };
        opt.seed = seed::derive(self.cfg.seed ^ opt.seed, STREAM_POLICY, kind.index());
        let initial = match kind {
            PolicyKind::PiStarPlus => {
                Policy::Mlp(MlpPolicy::new(norm, a_star, &MLP_HIDDEN, opt.seed))
            }
            _ => Policy::Linear(LinearTanhPolicy::zeros(norm, a_star)),
        };
        let starts = self.train_starts(&base, stats)?;
        let (policy, log) = es_train(&initial, source, &self.env, &starts, &opt)?;
        let artifact = PolicyArtifact { source, policy };
        let path = self.layout.policy(kind);
        create_parent(&path)?;
        artifact.save(&path)?;
        rec.output(&path);
        log.write_csv(&self.layout.train_log(kind))?;
        rec.output(&self.layout.train_log(kind));
        let last = log.rows.last();
        rec.finish(
            &self.layout.manifest("train-policy", Some(kind.name())),
            &self.cfg,
            json!({
                "iterations": log.rows.len(),
                "best_return": log.rows.iter().map(|r| r.best_return).fold(f64::NEG_INFINITY, f64::max),
                "final_eval_drag": last.map(|r| r.eval_drag),
            }),
        )?;
        Ok((artifact, log))
    }

    pub fn collect(&self, behavior: Option<&Path>) -> Result<TrajectoryDataset> {
        let behavior = behavior
            .map(Path::to_path_buf)
            .unwrap_or_else(|| self.layout.policy(PolicyKind::PiStar));
        let mut rec = Recorder::new(
            "collect",
            vec!["--behavior".into(), behavior.display().to_string()],
        );
        require(&behavior)?;
        let artifact = PolicyArtifact::load(&behavior)?;
        let (base, _) = self.load_baseline()?;
        rec.input(&self.layout.snapshot());
        rec.input(&behavior);
        let d = &self.cfg.dsft;
        let starts = phase_snapshots(
            &self.env,
            &base,
            d.trajectories,
            self.cfg.harness.phase_spacing,
        )?;
        let controller = artifact.controller(self.env.pm_dim());
        let data = collect_dataset(
            &self.env,
            &starts,
            || controller.clone(),
            &stem(&behavior),
            d.trajectories,
            d.horizon,
            d.noise * self.env.action_bound(),
            seed::derive(self.cfg.seed, STREAM_COLLECT, 0),
        )?;
        let path = self.layout.dataset();
        create_parent(&path)?;
        data.save(&path)?;
        rec.output(&path);
        rec.output(&TrajectoryDataset::meta_path(&path));
        rec.finish(
            &self.layout.manifest("collect", None),
            &self.cfg,
            json!({ "trajectories": data.k(), "horizon": data.horizon() }),
        )?;
        Ok(data)
    }

    pub fn dsft_seed(&self, replicate: u64) -> u64 {
        seed::derive(self.cfg.seed, STREAM_DSFT, replicate)
    }

    pub fn train_dsft(
        &self,
        n: usize,
        m: usize,
        hidden: &[usize],
        replicate: u64,
    ) -> Result<DsftOutcome> {
        let tag = Layout::model_tag(n, m, hidden, replicate);
        let mut rec = Recorder::new(
            "train-dsft",
            vec![
                format!("--n={n}"),
                format!("--m={m}"),
                format!("--arch={}", arch_tag(hidden)),
                format!("--replicate={replicate}"),
            ],
        );
        let data_path = self.layout.dataset();
        let data = TrajectoryDataset::load(&data_path)?;
        rec.input(&data_path);
        let hyper = self.cfg.dsft.hyper(self.dsft_seed(replicate));
        let set = extract_windows(&data, WindowSpec::new(n, m))?;
        let (model, report) = train_dsft(&set, hidden, &hyper)?;
        let (_, held) = data.split(hyper.heldout_fraction, hyper.seed);
        let heldout = (held.k() > 0)
            .then(|| reconstruction_error(&model, &held))
            .transpose()?;
        let path = self.layout.dsft_model(&tag);
        create_parent(&path)?;
        model.save(&path)?;
        rec.output(&path);
        let dir = self.layout.dir("dsft");
        let loss: Vec<LossRow> = report
            .history
            .iter()
            .enumerate()
            .map(|(epoch, &train_mse)| LossRow { epoch, train_mse })
            .collect();
        let loss_path = dir.join(format!("loss_{tag}.csv"));
        write_csv_rows(&loss_path, &loss)?;
        rec.output(&loss_path);
        let summary = json!({
            "n": n,
            "m": m,
            "architecture": hidden,
            "train_mse": report.train_mse,
            "heldout_mse": report.heldout_mse,
            "heldout_rmse": heldout.as_ref().map(|r| r.aggregate),
            "heldout_rmse_per_probe": heldout.as_ref().map(|r| r.per_probe.clone()),
        });
        let report_path = dir.join(format!("report_{tag}.json"));
        std::fs::write(&report_path, serde_json::to_string_pretty(&summary)?)?;
        rec.output(&report_path);
        rec.finish(
            &self.layout.manifest("train-dsft", Some(&tag)),
            &self.cfg,
            summary,
        )?;
        Ok(DsftOutcome {
            tag,
            model,
            report,
            heldout,
        })
    }

    /// Composes a full-measurement policy (default `pi_star`) with a
    /// reconstruction map (default: the configured window and architecture).
    pub fn compose(
        &self,
        policy: Option<&Path>,
        model: Option<&Path>,
        name: Option<&str>,
    ) -> Result<(ComposedArtifact, PathBuf)> {
        let d = &self.cfg.dsft;
        let default_tag = Layout::model_tag(d.n, d.m, &d.architecture, 0);
        let policy_path = policy
            .map(Path::to_path_buf)
            .unwrap_or_else(|| self.layout.policy(PolicyKind::PiStar));
        let model_path = model
            .map(Path::to_path_buf)
            .unwrap_or_else(|| self.layout.dsft_model(&default_tag));
        let mut rec = Recorder::new(
            "compose",
            vec![
                "--policy".into(),
                policy_path.display().to_string(),
                "--model".into(),
                model_path.display().to_string(),
            ],
        );
        require(&policy_path)?;
        require(&model_path)?;
        let artifact = PolicyArtifact::load(&policy_path)?;
        if artifact.source != ObsSource::Full {
            return Err(Error::DimensionMismatch(format!(
                "{} is not a full-measurement policy",
                policy_path.display()
            )));
        }
        let model = DsftModel::load(&model_path)?;
        rec.input(&policy_path);
        rec.input(&model_path);
        let tag = stem(&model_path)
            .strip_prefix("model_")
            .map(str::to_string)
            .unwrap_or_else(|| stem(&model_path));
        let name = match (name, policy) {
            (Some(n), _) => n.to_string(),
            (None, None) => format!("pda_{tag}"),
            (None, Some(p)) => format!("pda_{}_{tag}", stem(p)),
        };
        let composed = ComposedArtifact {
            policy: artifact.policy,
            model,
        };
        composed.controller()?;
        let out = self.layout.composed(&name);
        create_parent(&out)?;
        composed.save(&out)?;
        rec.output(&out);
        rec.finish(
            &self.layout.manifest("compose", Some(&name)),
            &self.cfg,
            json!({ "name": name }),
        )?;
        Ok((composed, out))
    }

    /// Runs the configured ensemble for `spec` (`zero` or an artifact path).
    pub fn evaluate(&self, spec: &str, name: Option<&str>) -> Result<EvalOutcome> {
        let name = name.map(str::to_string).unwrap_or_else(|| {
            if spec == "zero" {
                "zero".into()
            } else {
                stem(Path::new(spec))
            }
        });
        let mut rec = Recorder::new("evaluate", vec!["--policy".into(), spec.into()]);
        let loaded = LoadedPolicy::from_spec(spec)?;
        if spec != "zero" {
            rec.input(Path::new(spec));
        }
        let (base, _) = self.load_baseline()?;
        rec.input(&self.layout.snapshot());
        let starts = self.eval_starts(&base)?;
        let candidate = loaded.candidate(&name, self.env.pm_dim())?;
        let (stats, records) = run_ensemble(
            &self.env,
            &starts,
            || (candidate.make)(),
            self.cfg.harness.episode_steps,
            self.cfg.seed,
            &name,
        )?;
        let dir = self.layout.dir("evaluate");
        std::fs::create_dir_all(&dir)?;
        let series = dir.join(format!("{name}_series.csv"));
        stats.write_csv(&series)?;
        rec.output(&series);
        let first_run = records.into_iter().next().expect("at least one run");
        let episode = dir.join(format!("{name}_episode.csv"));
        first_run.write_csv(&episode)?;
        rec.output(&episode);
        let (lo, hi) = stats.min_max_last100();
        rec.finish(
            &self.layout.manifest("evaluate", Some(&name)),
            &self.cfg,
            json!({
                "policy": name,
                "runs": stats.runs(),
                "mean_last100": stats.mean_last100(),
                "min_last100": lo,
                "max_last100": hi,
            }),
        )?;
        Ok(EvalOutcome {
            name,
            stats,
            first_run,
        })
    }

    /// History sweep over the configured `(n, m)` grid with a fixed policy
    /// (default `pi_star`).
    pub fn sweep(&self, policy: Option<&Path>) -> Result<SweepTable> {
        let d = &self.cfg.dsft;
        self.sweep_grid(policy, &d.sweep_n, &d.sweep_m, "sweep")
    }

    /// Like [`Pipeline::sweep`] over an explicit grid, written to
    /// `sweep/<name>.csv`.
    pub fn sweep_grid(
        &self,
        policy: Option<&Path>,
        n_values: &[usize],
        m_values: &[usize],
        name: &str,
    ) -> Result<SweepTable> {
        let policy_path = policy
            .map(Path::to_path_buf)
            .unwrap_or_else(|| self.layout.policy(PolicyKind::PiStar));
        let mut rec = Recorder::new(
            "sweep",
            vec!["--policy".into(), policy_path.display().to_string()],
        );
        require(&policy_path)?;
        let artifact = PolicyArtifact::load(&policy_path)?;
        if artifact.source != ObsSource::Full {
            return Err(Error::DimensionMismatch(format!(
                "{} is not a full-measurement policy",
                policy_path.display()
            )));
        }
        let data_path = self.layout.dataset();
        let data = TrajectoryDataset::load(&data_path)?;
        let (base, _) = self.load_baseline()?;
        rec.input(&policy_path);
        rec.input(&data_path);
        rec.input(&self.layout.snapshot());
        let starts = self.eval_starts(&base)?;
        let plan = EvalPlan {
            env: &self.env,
            starts: &starts,
            episode_steps: self.cfg.harness.episode_steps,
            base_seed: self.cfg.seed,
        };
        let d = &self.cfg.dsft;
        let table = sweep_history(
            &plan,
            &artifact.policy,
            &data,
            n_values,
            m_values,
            &d.architecture,
            &d.hyper(self.dsft_seed(0)),
        )?;
        let out = self.layout.dir("sweep").join(format!("{name}.csv"));
        create_parent(&out)?;
        table.write_csv(&out)?;
        rec.output(&out);
        rec.finish(
            &self.layout.manifest("sweep", Some(name)),
            &self.cfg,
            serde_json::to_value(&table.rows)?,
        )?;
        Ok(table)
    }

    /// Default comparison set: uncontrolled, `pi_star`, `direct_partial` and
    /// the default composition.
    pub fn default_comparison(&self) -> Vec<PathBuf> {
        let d = &self.cfg.dsft;
        vec![
            self.layout.policy(PolicyKind::PiStar),
            self.layout.policy(PolicyKind::DirectPartial),
            self.layout.composed(&format!(
                "pda_{}",
                Layout::model_tag(d.n, d.m, &d.architecture, 0)
            )),
        ]
    }

    /// Evaluates the uncontrolled flow and every artifact in `paths` on the
    /// same ensemble.
    pub fn compare(&self, paths: &[PathBuf]) -> Result<Vec<PolicyResult>> {
        let mut rec = Recorder::new(
            "compare",
            paths.iter().map(|p| p.display().to_string()).collect(),
        );
        let mut candidates = vec![LoadedPolicy::Zero.candidate("uncontrolled", 0)?];
        for p in paths {
            let loaded = LoadedPolicy::load(p)?;
            candidates.push(loaded.candidate(&stem(p), self.env.pm_dim())?);
            rec.input(p);
        }
        let (base, _) = self.load_baseline()?;
        rec.input(&self.layout.snapshot());
        let starts = self.eval_starts(&base)?;
        let plan = EvalPlan {
            env: &self.env,
            starts: &starts,
            episode_steps: self.cfg.harness.episode_steps,
            base_seed: self.cfg.seed,
        };
        let results = compare_baselines(&plan, &candidates)?;
        let dir = self.layout.dir("compare");
        std::fs::create_dir_all(&dir)?;
        let table = dir.join("compare.csv");
        write_comparison_csv(&table, &results)?;
        rec.output(&table);
        let (nx, ny) = (self.cfg.environment.nx, self.cfg.environment.ny);
        for r in &results {
            let field = dir.join(format!("field_{}.csv", r.row.policy));
            write_field_csv(&field, nx, ny, &r.final_pressure)?;
            rec.output(&field);
            let series = dir.join(format!("series_{}.csv", r.row.policy));
            r.stats.write_csv(&series)?;
            rec.output(&series);
        }
        let rows: Vec<_> = results.iter().map(|r| r.row.clone()).collect();
        rec.finish(
            &self.layout.manifest("compare", None),
            &self.cfg,
            serde_json::to_value(&rows)?,
        )?;
        Ok(results)
    }
}
