use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::config::LatticeConfig;
use super::lattice::FlowField;

pub type Cell = (usize, usize);

/// Pressure probe positions: the wake grid (full measurement) and the rear
/// face of the body (partial measurement).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeLayout {
    pub wake: Vec<Cell>,
    pub base: Vec<Cell>,
}

impl ProbeLayout {
    /// 8x8 wake grid over [1D, 9D] downstream and [-1.5D, 1.5D] about the
    /// centre line, plus 8 probes on the rear face. Both sets are mirror
    /// symmetric about the obstacle's centre line.
    pub fn standard(cfg: &LatticeConfig) -> Self {
        let d = cfg.obstacle_side as f64;
        let y_range = cfg.obstacle_y_range();
        // Twice the centre-line coordinate, an integer.
        let twice_centre = (y_range.start + y_range.end - 1) as i64;
        let centre = twice_centre as f64 / 2.0;

        let xs: Vec<usize> = (0..8)
            .map(|j| {
                let dist = d * (1.0 + 8.0 * j as f64 / 7.0);
                cfg.rear_x() + dist.round() as usize - 1
            })
            .collect();
        let mut ys: Vec<usize> = (0..4)
            .flat_map(|j| {
                let offset = -1.5 * d + 3.0 * d * j as f64 / 7.0;
                let lower = (centre + offset + 0.5).floor() as i64;
                [lower, twice_centre - lower]
            })
            .map(|y| y as usize)
            .collect();
        ys.sort_unstable();
        let wake = xs
            .iter()
            .flat_map(|&x| ys.iter().map(move |&y| (x, y)))
            .collect();

        let mut base: Vec<usize> = (0..4)
            .flat_map(|j| {
                let k = ((j as f64 + 0.5) * d / 8.0).floor() as usize;
                [y_range.start + k, y_range.end - 1 - k]
            })
            .collect();
        base.sort_unstable();
        base.dedup();
        let base = base.into_iter().map(|y| (cfg.rear_x(), y)).collect();
        Self { wake, base }
    }

    pub fn validate(&self, cfg: &LatticeConfig) -> Result<()> {
        for (name, cells) in [("wake", &self.wake), ("base", &self.base)] {
            if cells.is_empty() {
                return Err(Error::constraint(name, "probe list is empty"));
            }
            let unique: HashSet<_> = cells.iter().collect();
            if unique.len() != cells.len() {
                return Err(Error::constraint(name, "probe list has duplicates"));
            }
            for (index, &(x, y)) in cells.iter().enumerate() {
                if x >= cfg.nx || y >= cfg.ny {
                    return Err(Error::constraint(name, "probe outside the domain"));
                }
                if cfg.is_solid(x, y) {
                    return Err(Error::ProbeInSolid { index, x, y });
                }
            }
        }
        if self.wake.iter().any(|&(x, _)| x < cfg.rear_x()) {
            return Err(Error::constraint(
                "wake",
                "probes must lie downstream of the body",
            ));
        }
        let yr = cfg.obstacle_y_range();
        if self
            .base
            .iter()
            .any(|&(x, y)| x != cfg.rear_x() || !yr.contains(&y))
        {
            return Err(Error::constraint("base", "probes must touch the rear face"));
        }
        Ok(())
    }
}

/// Pressure `c_s^2 (rho - 1)` at each probe, in layout order.
pub fn sample_pressure(field: &FlowField, probes: &[Cell]) -> Result<Vec<f64>> {
    probes
        .iter()
        .enumerate()
        .map(|(index, &(x, y))| {
            if x >= field.nx() || y >= field.ny() {
                return Err(Error::DimensionMismatch(format!(
                    "probe {index} at ({x}, {y}) outside {}x{} field",
                    field.nx(),
                    field.ny()
                )));
            }
            if field.is_solid(x, y) {
                return Err(Error::ProbeInSolid { index, x, y });
            }
            Ok(field.pressure_at(x, y))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow_env::lattice::{Lattice, RHO0};

    #[test]
    fn standard_layouts_are_valid() {
        for cfg in [LatticeConfig::default(), LatticeConfig::compact()] {
            let layout = ProbeLayout::standard(&cfg);
            assert_eq!(layout.wake.len(), 64);
            assert_eq!(layout.base.len(), 8);
            layout.validate(&cfg).unwrap();
        }
    }

    #[test]
    fn layouts_are_mirror_symmetric() {
        let cfg = LatticeConfig::compact();
        let layout = ProbeLayout::standard(&cfg);
        let yr = cfg.obstacle_y_range();
        let twice = yr.start + yr.end - 1;
        for cells in [&layout.wake, &layout.base] {
            let set: HashSet<_> = cells.iter().copied().collect();
            for &(x, y) in cells.iter() {
                assert!(set.contains(&(x, twice - y)));
            }
        }
    }

    #[test]
    fn uniform_reference_density_reads_zero() {
        let cfg = LatticeConfig::compact();
        let lat = Lattice::channel(&cfg).unwrap();
        let layout = ProbeLayout::standard(&cfg);
        let p = sample_pressure(&lat.rest_field(), &layout.wake).unwrap();
        assert_eq!(p, vec![0.0; 64]);
    }

    #[test]
    fn density_excess_maps_through_sound_speed() {
        let cfg = LatticeConfig::compact();
        let lat = Lattice::channel(&cfg).unwrap();
        let layout = ProbeLayout::standard(&cfg);
        let (px, py) = layout.wake[5];
        let field = lat.uniform_field(|x, y| {
            let r = if (x, y) == (px, py) {
                RHO0 + 0.03
            } else {
                RHO0
            };
            (r, 0.0, 0.0)
        });
        let p = sample_pressure(&field, &layout.wake).unwrap();
        assert!((p[5] - 0.01).abs() < 1e-15);
        assert!(p.iter().enumerate().all(|(i, &v)| i == 5 || v == 0.0));
        assert_eq!(p, sample_pressure(&field, &layout.wake).unwrap());
    }

    #[test]
    fn probe_in_solid_is_rejected() {
        let cfg = LatticeConfig::compact();
        let lat = Lattice::channel(&cfg).unwrap();
        let inside = (cfg.obstacle_x + 1, cfg.obstacle_y0() + 1);
        let err = sample_pressure(&lat.rest_field(), &[(0, 5), inside]).unwrap_err();
        assert!(matches!(err, Error::ProbeInSolid { index: 1, .. }));
    }
}
