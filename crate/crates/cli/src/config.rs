use std::path::{Path, PathBuf};

use pda_core::dsft::DsftHyper;
use pda_core::policy_opt::OptConfig;
use pda_core::{Error, LatticeConfig, Result};
use serde::{Deserialize, Serialize};

/// Reconstruction-map settings: window, architecture, training
/// hyperparameters and dataset collection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DsftSection {
    pub n: usize,
    pub m: usize,
    pub architecture: Vec<usize>,
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub heldout_fraction: f64,
    /// Trajectories collected for the dataset.
    pub trajectories: usize,
    /// Control steps per trajectory.
    pub horizon: usize,
    /// Behavior noise std as a fraction of the action bound.
    pub noise: f64,
    pub sweep_n: Vec<usize>,
    pub sweep_m: Vec<usize>,
}

impl Default for DsftSection {
    fn default() -> Self {
        let h = DsftHyper::default();
        Self {
            n: 48,
            m: 1,
            architecture: vec![128],
            epochs: h.epochs,
            lr: h.lr,
            batch_size: h.batch_size,
            heldout_fraction: h.heldout_fraction,
            trajectories: 65,
            horizon: 400,
            noise: 0.3,
            sweep_n: vec![0, 6, 12, 24, 48],
            sweep_m: vec![0, 1, 48],
        }
    }
}

impl DsftSection {
    pub fn hyper(&self, seed: u64) -> DsftHyper {
        DsftHyper {
            epochs: self.epochs,
            lr: self.lr,
            batch_size: self.batch_size,
            heldout_fraction: self.heldout_fraction,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HarnessSection {
    /// Ensemble size for evaluations.
    pub runs: usize,
    pub episode_steps: usize,
    /// Uncontrolled control steps before the baseline snapshot is taken.
    pub warmup_steps: usize,
    /// Control steps between the phase-offset starts of ensemble runs.
    pub phase_spacing: usize,
}

impl Default for HarnessSection {
    fn default() -> Self {
        Self {
            runs: 65,
            episode_steps: 400,
            warmup_steps: 2000,
            phase_spacing: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    /// Artifact root; falls back to `$PDA_OUT`, then `runs`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub environment: LatticeConfig,
    pub optimizer: OptConfig,
    /// Search settings for the deep full-measurement policy, whose many
    /// parameters call for a smaller exploration std. Keys missing from a
    /// written block take the `[optimizer]` defaults, not those of
    /// [`default_optimizer_plus`].
    #[serde(default = "default_optimizer_plus")]
    pub optimizer_plus: OptConfig,
    pub dsft: DsftSection,
    pub harness: HarnessSection,
}

pub fn default_optimizer_plus() -> OptConfig {
    OptConfig {
        sigma: 0.01,
        lr: 0.004,
        ..OptConfig::default()
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            output_dir: None,
            environment: LatticeConfig::default(),
            optimizer: OptConfig::default(),
            optimizer_plus: default_optimizer_plus(),
            dsft: DsftSection::default(),
            harness: HarnessSection::default(),
        }
    }
}

pub const OUTPUT_ENV: &str = "PDA_OUT";

fn prefixed(section: &str, err: Error) -> Error {
    match err {
        Error::ConstraintViolation { key, constraint } => Error::ConstraintViolation {
            key: format!("{section}.{key}"),
            constraint,
        },
        other => other,
    }
}

fn constraint(key: &str, text: &str) -> Error {
    Error::ConstraintViolation {
        key: key.into(),
        constraint: text.into(),
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.environment
            .validate()
            .map_err(|e| prefixed("environment", e))?;
        self.optimizer
            .validate()
            .map_err(|e| prefixed("optimizer", e))?;
        self.optimizer_plus
            .validate()
            .map_err(|e| prefixed("optimizer_plus", e))?;
        self.dsft
            .hyper(self.seed)
            .validate()
            .map_err(|e| prefixed("dsft", e))?;
        let d = &self.dsft;
        if d.trajectories == 0 {
            return Err(constraint("dsft.trajectories", "must be at least 1"));
        }
        if d.horizon < d.n.max(d.m) {
            return Err(constraint("dsft.horizon", "must cover the window n, m"));
        }
        let longest = d
            .sweep_n
            .iter()
            .chain(&d.sweep_m)
            .copied()
            .max()
            .unwrap_or(0);
        if d.horizon < longest {
            return Err(constraint("dsft.horizon", "must cover every sweep window"));
        }
        if !(d.noise.is_finite() && d.noise >= 0.0) {
            return Err(constraint("dsft.noise", "must be non-negative"));
        }
        let h = &self.harness;
        if h.runs == 0 {
            return Err(constraint("harness.runs", "must be at least 1"));
        }
        if h.episode_steps < 100 {
            return Err(constraint(
                "harness.episode_steps",
                "must be at least 100 for last-100 statistics",
            ));
        }
        if h.warmup_steps < 8 {
            return Err(constraint("harness.warmup_steps", "must be at least 8"));
        }
        Ok(())
    }

    pub fn output_root(&self) -> PathBuf {
        self.output_dir
            .clone()
            .or_else(|| std::env::var_os(OUTPUT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("runs"))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| {
            let msg = e.message().to_string();
            match unknown_key(&msg) {
                Some(key) => Error::UnknownKey(key),
                None => Error::Parse(e.to_string()),
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn dump(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }
}

fn unknown_key(message: &str) -> Option<String> {
    let rest = message.strip_prefix("unknown field `")?;
    Some(rest[..rest.find('`')?].to_string())
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    if !path.exists() {
        return Err(Error::MissingArtifact(path.to_path_buf()));
    }
    RunConfig::parse(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = RunConfig::parse("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.environment.reynolds, 100.0);
        assert_eq!(cfg.optimizer.gamma, 0.99);
        assert_eq!(cfg.dsft.lr, 1e-3);
        assert_eq!(cfg.dsft.epochs, 10_000);
        assert_eq!(cfg.dsft.batch_size, 10_000);
        assert_eq!(cfg.harness.runs, 65);
    }

    #[test]
    fn negative_reynolds_names_the_key() {
        let err = RunConfig::parse("[environment]\nreynolds = -5\n").unwrap_err();
        match err {
            Error::ConstraintViolation { key, .. } => assert_eq!(key, "environment.reynolds"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(matches!(
            RunConfig::parse("[optimizer]\nsigmaa = 0.1\n"),
            Err(Error::UnknownKey(k)) if k == "sigmaa"
        ));
        assert!(matches!(
            RunConfig::parse("colour = 1\n"),
            Err(Error::UnknownKey(_))
        ));
        assert!(matches!(
            RunConfig::parse("seed = \"x\"\n"),
            Err(Error::Parse(_))
        ));
    }

    #[test]
    fn dump_round_trips() {
        let text = "seed = 7\noutput_dir = \"out\"\n[environment]\nnx = 640\n[dsft]\nsweep_n = [0, 4]\narchitecture = []\n";
        let cfg = RunConfig::parse(text).unwrap();
        let again = RunConfig::parse(&cfg.dump().unwrap()).unwrap();
        assert_eq!(again, cfg);
        let d = RunConfig::default();
        assert_eq!(RunConfig::parse(&d.dump().unwrap()).unwrap(), d);
    }
}
