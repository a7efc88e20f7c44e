use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::Normalizer;
use crate::stats::{mean, mean_std};

use super::env::FlowEnv;
use super::lattice::FlowField;

/// Lift amplitude below which the wake is considered steady.
pub const SHEDDING_THRESHOLD: f64 = 1e-6;

/// Statistics of the uncontrolled flow over the last quarter of the warm-up.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineStats {
    pub warmup_steps: usize,
    pub drag_mean: f64,
    pub drag_std: f64,
    pub lift_mean: f64,
    pub lift_amplitude: f64,
    pub fm_mean: Vec<f64>,
    pub fm_std: Vec<f64>,
    pub pm_mean: Vec<f64>,
    pub pm_std: Vec<f64>,
    /// Dominant lift frequency in cycles per control step.
    pub lift_frequency: f64,
    /// `f D / U` with `f` per lattice substep.
    pub strouhal: f64,
    pub drag_history: Vec<f64>,
    pub lift_history: Vec<f64>,
}

impl BaselineStats {
    pub fn fm_normalizer(&self) -> Result<Normalizer> {
        Normalizer::from_stats(self.fm_mean.clone(), self.fm_std.clone())
    }

    pub fn pm_normalizer(&self) -> Result<Normalizer> {
        Normalizer::from_stats(self.pm_mean.clone(), self.pm_std.clone())
    }

    /// Shedding period in control steps.
    pub fn period_steps(&self) -> f64 {
        1.0 / self.lift_frequency
    }

    /// Writes `quantity,mean,std` rows: drag, lift, every probe, and the
    /// shedding frequency (std left empty).
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "quantity,mean,std")?;
        writeln!(out, "drag,{},{}", self.drag_mean, self.drag_std)?;
        writeln!(out, "lift_amplitude,{},", self.lift_amplitude)?;
        writeln!(out, "lift,{},", self.lift_mean)?;
        for (i, (m, s)) in self.fm_mean.iter().zip(&self.fm_std).enumerate() {
            writeln!(out, "o_fm_{i},{m},{s}")?;
        }
        for (i, (m, s)) in self.pm_mean.iter().zip(&self.pm_std).enumerate() {
            writeln!(out, "o_pm_{i},{m},{s}")?;
        }
        writeln!(out, "lift_frequency,{},", self.lift_frequency)?;
        writeln!(out, "strouhal,{},", self.strouhal)?;
        out.flush()?;
        Ok(())
    }
}

/// Mean-crossing frequency of a signal in cycles per sample, from linearly
/// interpolated upward crossings. `None` when fewer than two crossings exist.
pub fn crossing_frequency(series: &[f64]) -> Option<f64> {
    let m = mean(series);
    let mut first = None;
    let mut last = 0.0;
    let mut cycles = 0usize;
    for (t, w) in series.windows(2).enumerate() {
        let (a, b) = (w[0] - m, w[1] - m);
        if a < 0.0 && b >= 0.0 {
            let at = t as f64 + a / (a - b);
            match first {
                None => first = Some(at),
                Some(_) => cycles += 1,
            }
            last = at;
        }
    }
    let first = first?;
    (cycles > 0).then(|| cycles as f64 / (last - first))
}

/// Copies of `base` advanced by `0, spacing, 2 spacing, ...` uncontrolled
/// control steps, one per requested phase.
pub fn phase_snapshots(
    env: &FlowEnv,
    base: &FlowField,
    count: usize,
    spacing: usize,
) -> Result<Vec<FlowField>> {
    let mut state = env.reset(Some(base))?;
    let mut out = Vec::with_capacity(count);
    for j in 0..count {
        if j > 0 {
            for _ in 0..spacing {
                env.step(&mut state, [0.0; 2])?;
            }
        }
        out.push(state.field.clone());
    }
    Ok(out)
}

/// Initial condition: uniform inflow with a small off-centre transverse
/// bump behind the body to break the mirror symmetry.
pub fn perturbed_inflow_field(env: &FlowEnv) -> FlowField {
    let cfg = env.config();
    let u = cfg.inflow_speed;
    let d = cfg.obstacle_side as f64;
    let xc = cfg.rear_x() as f64 + d;
    let yc = cfg.obstacle_y0() as f64 + d;
    env.lattice().uniform_field(|x, y| {
        let r2 = ((x as f64 - xc).powi(2) + (y as f64 - yc).powi(2)) / (d * d);
        (1.0, u, 0.1 * u * (-r2).exp())
    })
}

/// Runs the uncontrolled flow for `warmup_steps` control steps and returns
/// the final field with statistics over the last quarter.
pub fn make_baseline_snapshot(
    env: &FlowEnv,
    warmup_steps: usize,
) -> Result<(FlowField, BaselineStats)> {
    if warmup_steps < 8 {
        return Err(Error::TooShort {
            len: warmup_steps,
            required: 8,
        });
    }
    let init = perturbed_inflow_field(env);
    let mut state = env.reset(Some(&init))?;
    let tail_start = warmup_steps - warmup_steps / 4;
    let mut drag = Vec::with_capacity(warmup_steps);
    let mut lift = Vec::with_capacity(warmup_steps);
    let mut fm_rows = Vec::new();
    let mut pm_rows = Vec::new();
    for t in 0..warmup_steps {
        let out = env.step(&mut state, [0.0; 2])?;
        drag.push(out.drag_coeff);
        lift.push(out.lift_coeff);
        if t >= tail_start {
            fm_rows.push(out.o_fm);
            pm_rows.push(out.o_pm);
        }
    }
    let tail_lift = &lift[tail_start..];
    let (lo, hi) = tail_lift
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let amplitude = 0.5 * (hi - lo);
    if amplitude.is_nan() || amplitude < SHEDDING_THRESHOLD {
        return Err(Error::NoSheddingDetected { amplitude });
    }
    let lift_frequency =
        crossing_frequency(tail_lift).ok_or(Error::NoSheddingDetected { amplitude })?;
    let cfg = env.config();
    let strouhal =
        lift_frequency / cfg.substeps as f64 * cfg.obstacle_side as f64 / cfg.inflow_speed;
    let (drag_mean, drag_std) = mean_std(&drag[tail_start..]);
    let (fm_mean, fm_std) = column_stats(&fm_rows);
    let (pm_mean, pm_std) = column_stats(&pm_rows);
    let stats = BaselineStats {
        warmup_steps,
        drag_mean,
        drag_std,
        lift_mean: mean(tail_lift),
        lift_amplitude: amplitude,
        fm_mean,
        fm_std,
        pm_mean,
        pm_std,
        lift_frequency,
        strouhal,
        drag_history: drag,
        lift_history: lift,
    };
    Ok((state.field, stats))
}

fn column_stats(rows: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let dim = rows.first().map_or(0, Vec::len);
    (0..dim)
        .map(|j| {
            let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            mean_std(&col)
        })
        .unzip()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crossing_frequency_of_sine() {
        let period = 37.3;
        let s: Vec<f64> = (0..2000)
            .map(|t| (2.0 * std::f64::consts::PI * t as f64 / period + 0.3).sin())
            .collect();
        let f = crossing_frequency(&s).unwrap();
        assert!((f * period - 1.0).abs() < 1e-3, "{f}");
        assert_eq!(crossing_frequency(&[1.0, 2.0, 3.0]), None);
    }
}
