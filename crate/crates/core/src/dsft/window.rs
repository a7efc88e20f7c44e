use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::Normalizer;

use super::dataset::{TrajectoryDataset, ACTION_DIM};

/// Base-probe history length `n` and action history length `m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSpec {
    pub n: usize,
    pub m: usize,
}

impl WindowSpec {
    pub fn new(n: usize, m: usize) -> Self {
        Self { n, m }
    }

    /// First time index with a complete window.
    pub fn first_t(&self) -> usize {
        self.n.max(self.m)
    }

    pub fn input_width(&self, pm_dim: usize) -> usize {
        (self.n + 1) * pm_dim + ACTION_DIM * self.m
    }

    pub fn rows(&self, k: usize, horizon: usize) -> usize {
        k * (horizon + 1 - self.first_t())
    }
}

/// Windowed inputs `[o_pm(t-n) .. o_pm(t), a(t-m) .. a(t-1)]` against the
/// targets `o_fm(t)`, with z-score normalizers fitted on all rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SupervisedSet {
    pub spec: WindowSpec,
    pub x: Array2<f64>,
    pub y: Array2<f64>,
    /// Source trajectory of each row.
    pub trajectory: Vec<usize>,
    pub input_norm: Normalizer,
    pub target_norm: Normalizer,
}

impl SupervisedSet {
    pub fn len(&self) -> usize {
        self.x.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.x.nrows() == 0
    }
}

/// Window input for trajectory `i` at time `t` (requires `t >= first_t`).
pub fn window_row(data: &TrajectoryDataset, spec: WindowSpec, i: usize, t: usize) -> Vec<f64> {
    let mut row = Vec::with_capacity(spec.input_width(data.pm_dim()));
    for s in t - spec.n..=t {
        row.extend_from_slice(data.o_pm(i, s));
    }
    for s in t - spec.m..t {
        row.extend_from_slice(&data.action(i, s));
    }
    row
}

pub fn extract_windows(data: &TrajectoryDataset, spec: WindowSpec) -> Result<SupervisedSet> {
    let horizon = data.horizon();
    if horizon < spec.first_t() {
        return Err(Error::WindowTooLong {
            n: spec.n,
            m: spec.m,
            horizon,
        });
    }
    let rows = spec.rows(data.k(), horizon);
    let width = spec.input_width(data.pm_dim());
    let mut x = Vec::with_capacity(rows * width);
    let mut y = Vec::with_capacity(rows * data.fm_dim());
    let mut trajectory = Vec::with_capacity(rows);
    for i in 0..data.k() {
        for t in spec.first_t()..=horizon {
            x.extend(window_row(data, spec, i, t));
            y.extend_from_slice(data.o_fm(i, t));
            trajectory.push(i);
        }
    }
    let x = Array2::from_shape_vec((rows, width), x).expect("row width");
    let y = Array2::from_shape_vec((rows, data.fm_dim()), y).expect("target width");
    let (input_norm, target_norm) = if rows > 0 {
        (Normalizer::fit(x.view())?, Normalizer::fit(y.view())?)
    } else {
        (
            Normalizer::identity(width),
            Normalizer::identity(data.fm_dim()),
        )
    };
    Ok(SupervisedSet {
        spec,
        x,
        y,
        trajectory,
        input_norm,
        target_norm,
    })
}
