use std::path::{Path, PathBuf};

use pda_core::{Error, Result};

/// The three policies trained by `train-policy`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum PolicyKind {
    /// No-hidden-layer policy on full measurements.
    PiStar,
    /// Three hidden layers of 512 on full measurements.
    PiStarPlus,
    /// No-hidden-layer policy on the base-probe history window.
    DirectPartial,
}

impl PolicyKind {
    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::PiStar => "pi_star",
            PolicyKind::PiStarPlus => "pi_star_plus",
            PolicyKind::DirectPartial => "direct_partial",
        }
    }

    pub fn index(self) -> u64 {
        self as u64
    }
}

/// `"linear"` for no hidden layers, otherwise the sizes joined by `x`.
pub fn arch_tag(hidden: &[usize]) -> String {
    if hidden.is_empty() {
        "linear".into()
    } else {
        hidden
            .iter()
            .map(|h| h.to_string())
            .collect::<Vec<_>>()
            .join("x")
    }
}

/// Inverse of [`arch_tag`]; also accepts `[]` and comma-separated sizes.
pub fn parse_arch(text: &str) -> Result<Vec<usize>> {
    let t = text.trim().trim_start_matches('[').trim_end_matches(']');
    if t.is_empty() || t == "linear" {
        return Ok(Vec::new());
    }
    t.split(['x', ','])
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .ok()
                .filter(|&h| h > 0)
                .ok_or_else(|| Error::ConstraintViolation {
                    key: "arch".into(),
                    constraint: format!("`{text}` is not a list of positive layer sizes"),
                })
        })
        .collect()
}

/// File names of every artifact under the output root.
#[derive(Debug, Clone)]
pub struct Layout {
    root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn dir(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn snapshot(&self) -> PathBuf {
        self.dir("baseline").join("snapshot.bin")
    }

    pub fn baseline_stats(&self) -> PathBuf {
        self.dir("baseline").join("stats.json")
    }

    pub fn policy(&self, kind: PolicyKind) -> PathBuf {
        self.dir("policies").join(format!("{}.json", kind.name()))
    }

    pub fn train_log(&self, kind: PolicyKind) -> PathBuf {
        self.dir("policies")
            .join(format!("{}_trainlog.csv", kind.name()))
    }

    pub fn dataset(&self) -> PathBuf {
        self.dir("dataset").join("trajectories.bin")
    }

    /// `n{n}_m{m}_{arch}`, with `_r{replicate}` appended for replicates
    /// other than 0.
    pub fn model_tag(n: usize, m: usize, hidden: &[usize], replicate: u64) -> String {
        let base = format!("n{n}_m{m}_{}", arch_tag(hidden));
        if replicate == 0 {
            base
        } else {
            format!("{base}_r{replicate}")
        }
    }

    pub fn dsft_model(&self, tag: &str) -> PathBuf {
        self.dir("dsft").join(format!("model_{tag}.json"))
    }

    pub fn composed(&self, name: &str) -> PathBuf {
        self.dir("compose").join(format!("{name}.json"))
    }

    pub fn manifest(&self, command: &str, tag: Option<&str>) -> PathBuf {
        let name = match tag {
            Some(t) => format!("{command}_{t}.json"),
            None => format!("{command}.json"),
        };
        self.dir("manifests").join(name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn architecture_tags_round_trip() {
        for h in [vec![], vec![128], vec![64, 64], vec![512, 512, 512]] {
            assert_eq!(parse_arch(&arch_tag(&h)).unwrap(), h);
        }
        assert_eq!(parse_arch("[]").unwrap(), Vec::<usize>::new());
        assert_eq!(parse_arch("64,64").unwrap(), vec![64, 64]);
        assert!(parse_arch("64x0").is_err());
        assert!(parse_arch("wide").is_err());
    }

    #[test]
    fn model_tags() {
        assert_eq!(Layout::model_tag(48, 1, &[128], 0), "n48_m1_128");
        assert_eq!(Layout::model_tag(0, 0, &[], 3), "n0_m0_linear_r3");
    }
}
