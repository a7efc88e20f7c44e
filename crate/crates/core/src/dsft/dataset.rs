use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow_env::{Action, FlowEnv, FlowField};
use crate::policy::Controller;
use crate::seed;

pub const DATA_MAGIC: &[u8; 8] = b"PDADATA1";
const META_FORMAT: &str = "pda-dataset-meta-v1";
/// Below this many transitions a dataset is flagged as small.
pub const SMALL_DATASET: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetMeta {
    pub env_fingerprint: u64,
    pub behavior: String,
    /// Standard deviation of the Gaussian noise added to behavior actions.
    pub noise: f64,
    pub seed: u64,
}

/// `k` trajectories of `horizon + 1` records `(o_pm, o_fm, a)` each, stored
/// trajectory-major with records packed back to back.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryDataset {
    k: usize,
    horizon: usize,
    pm_dim: usize,
    fm_dim: usize,
    data: Vec<f64>,
    pub meta: DatasetMeta,
}

pub const ACTION_DIM: usize = 2;

/// One time step: `(o_pm, o_fm, action)`.
pub type Record = (Vec<f64>, Vec<f64>, Action);

impl TrajectoryDataset {
    /// Builds from per-trajectory record lists.
    pub fn from_records(trajectories: Vec<Vec<Record>>, meta: DatasetMeta) -> Result<Self> {
        let first = trajectories
            .first()
            .and_then(|t| t.first())
            .ok_or(Error::TooShort {
                len: 0,
                required: 1,
            })?;
        let (pm_dim, fm_dim) = (first.0.len(), first.1.len());
        let len = trajectories[0].len();
        let mut data = Vec::with_capacity(trajectories.len() * len * (pm_dim + fm_dim + 2));
        for tr in &trajectories {
            if tr.len() != len {
                return Err(Error::shape("trajectory length", len, tr.len()));
            }
            for (pm, fm, a) in tr {
                if pm.len() != pm_dim {
                    return Err(Error::shape("o_pm width", pm_dim, pm.len()));
                }
                if fm.len() != fm_dim {
                    return Err(Error::shape("o_fm width", fm_dim, fm.len()));
                }
                data.extend_from_slice(pm);
                data.extend_from_slice(fm);
                data.extend_from_slice(a);
            }
        }
        Ok(Self {
            k: trajectories.len(),
            horizon: len - 1,
            pm_dim,
            fm_dim,
            data,
            meta,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// `T`: the last record index of each trajectory.
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn pm_dim(&self) -> usize {
        self.pm_dim
    }

    pub fn fm_dim(&self) -> usize {
        self.fm_dim
    }

    pub fn records(&self) -> usize {
        self.k * (self.horizon + 1)
    }

    fn stride(&self) -> usize {
        self.pm_dim + self.fm_dim + ACTION_DIM
    }

    fn record(&self, i: usize, t: usize) -> &[f64] {
        assert!(
            i < self.k && t <= self.horizon,
            "record ({i}, {t}) out of range"
        );
        let s = self.stride();
        let at = (i * (self.horizon + 1) + t) * s;
        &self.data[at..at + s]
    }

    pub fn o_pm(&self, i: usize, t: usize) -> &[f64] {
        &self.record(i, t)[..self.pm_dim]
    }

    pub fn o_fm(&self, i: usize, t: usize) -> &[f64] {
        &self.record(i, t)[self.pm_dim..self.pm_dim + self.fm_dim]
    }

    pub fn action(&self, i: usize, t: usize) -> Action {
        let r = self.record(i, t);
        let s = self.stride();
        [r[s - 2], r[s - 1]]
    }

    /// Subset of whole trajectories, in the given order.
    pub fn select(&self, indices: &[usize]) -> Self {
        let per = (self.horizon + 1) * self.stride();
        let mut data = Vec::with_capacity(indices.len() * per);
        for &i in indices {
            data.extend_from_slice(&self.data[i * per..(i + 1) * per]);
        }
        Self {
            k: indices.len(),
            data,
            meta: self.meta.clone(),
            ..*self
        }
    }

    /// Seeded split into `(train, held_out)` by whole trajectories, as
    /// chosen by [`split_trajectories`].
    pub fn split(&self, fraction: f64, seed: u64) -> (Self, Self) {
        let (train, held) = split_trajectories(self.k, fraction, seed);
        (self.select(&train), self.select(&held))
    }

    pub fn meta_path(path: &Path) -> PathBuf {
        let mut s = path.as_os_str().to_owned();
        s.push(".meta.json");
        PathBuf::from(s)
    }

    /// Binary records plus a JSON sidecar at [`Self::meta_path`].
    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(DATA_MAGIC)?;
        for v in [self.k, self.horizon, self.pm_dim, self.fm_dim, ACTION_DIM] {
            w.write_all(&(v as u64).to_le_bytes())?;
        }
        for v in &self.data {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()?;
        crate::nn::save_json(&Self::meta_path(path), META_FORMAT, &self.meta)
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingArtifact(path.to_path_buf()));
        }
        let mut r = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)
            .map_err(|_| Error::format(path, "truncated header"))?;
        if &magic != DATA_MAGIC {
            return Err(Error::format(path, "not a trajectory dataset"));
        }
        let mut header = [0usize; 5];
        for h in header.iter_mut() {
            let mut b = [0u8; 8];
            r.read_exact(&mut b)
                .map_err(|_| Error::format(path, "truncated header"))?;
            *h = u64::from_le_bytes(b) as usize;
        }
        let [k, horizon, pm_dim, fm_dim, a_dim] = header;
        if a_dim != ACTION_DIM {
            return Err(Error::format(
                path,
                format!("action width {a_dim}, expected 2"),
            ));
        }
        let count = k * (horizon + 1) * (pm_dim + fm_dim + a_dim);
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        if bytes.len() != count * 8 {
            return Err(Error::format(
                path,
                format!("expected {} data bytes, found {}", count * 8, bytes.len()),
            ));
        }
        let data = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        let meta = crate::nn::load_json(&Self::meta_path(path), META_FORMAT)?;
        Ok(Self {
            k,
            horizon,
            pm_dim,
            fm_dim,
            data,
            meta,
        })
    }
}

/// Sorted `(train, held_out)` trajectory indices. The held-out part gets
/// `round(fraction k)` trajectories, at least one and never all when
/// `k >= 2` and `fraction > 0`.
pub fn split_trajectories(k: usize, fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..k).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let held = if k >= 2 && fraction > 0.0 {
        ((fraction * k as f64).round() as usize).clamp(1, k - 1)
    } else {
        0
    };
    let (h, t) = idx.split_at(held);
    let (mut h, mut t) = (h.to_vec(), t.to_vec());
    h.sort_unstable();
    t.sort_unstable();
    (t, h)
}

/// Records `k` trajectories of `horizon` control steps under `behavior`
/// with Gaussian action noise of std `noise`, clipped to the action bound.
/// Trajectory `i` starts from `starts[i % starts.len()]`.
///
/// Each trajectory holds `horizon + 1` records; the last action is drawn but
/// never applied.
#[allow(clippy::too_many_arguments)]
pub fn collect_dataset<C, F>(
    env: &FlowEnv,
    starts: &[FlowField],
    behavior: F,
    behavior_id: &str,
    k: usize,
    horizon: usize,
    noise: f64,
    seed: u64,
) -> Result<TrajectoryDataset>
where
    C: Controller,
    F: Fn() -> C + Sync,
{
    if k == 0 || horizon == 0 {
        return Err(Error::TooShort {
            len: 0,
            required: 1,
        });
    }
    if starts.is_empty() {
        return Err(Error::TooShort {
            len: 0,
            required: 1,
        });
    }
    if !(noise.is_finite() && noise >= 0.0) {
        return Err(Error::constraint("noise", "must be non-negative"));
    }
    if k * horizon < SMALL_DATASET {
        log::warn!("dataset too small: {k} x {horizon} transitions is below {SMALL_DATASET}");
    }
    let bound = env.action_bound();
    let dist = Normal::new(0.0, noise).expect("finite std");
    let trajectories = (0..k)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(seed, 1, i as u64));
            let mut controller = behavior();
            controller.reset();
            let mut state = env.reset(Some(&starts[i % starts.len()]))?;
            let mut obs = env.observe(&state)?;
            let mut rows = Vec::with_capacity(horizon + 1);
            for t in 0..=horizon {
                let mut a = controller.act(&obs, state.prev_action)?;
                for v in a.iter_mut() {
                    *v = (*v + dist.sample(&mut rng)).clamp(-bound, bound);
                }
                rows.push((obs.o_pm.clone(), obs.o_fm.clone(), a));
                if t < horizon {
                    obs = env.step(&mut state, a)?.observation();
                }
            }
            Ok(rows)
        })
        .collect::<Result<Vec<_>>>()?;
    TrajectoryDataset::from_records(
        trajectories,
        DatasetMeta {
            env_fingerprint: env.config().fingerprint(),
            behavior: behavior_id.to_string(),
            noise,
            seed,
        },
    )
}
