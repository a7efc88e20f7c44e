use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Geometry, flow regime and actuation limits of the bluff-body channel.
///
/// The relaxation time is not stored; it follows from the target Reynolds
/// number, the inflow speed and the obstacle side: `tau = 1/2 + 3 U D / Re`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LatticeConfig {
    pub nx: usize,
    pub ny: usize,
    /// x index of the obstacle's leading (upstream) face.
    pub obstacle_x: usize,
    /// y index of the obstacle's bottom row; `None` centres it vertically.
    pub obstacle_y: Option<usize>,
    pub obstacle_side: usize,
    pub inflow_speed: f64,
    pub reynolds: f64,
    pub substeps: usize,
    /// Width in cells of each jet slot, measured from the trailing corner.
    pub jet_width: usize,
    pub jet_max: f64,
    pub action_bound: f64,
    /// Project each action onto antisymmetric jet increments so that the
    /// two jets always inject zero net mass.
    pub zero_net_mass_flux: bool,
}

impl Default for LatticeConfig {
    fn default() -> Self {
        Self {
            nx: 512,
            ny: 128,
            obstacle_x: 96,
            obstacle_y: None,
            obstacle_side: 16,
            inflow_speed: 0.05,
            reynolds: 100.0,
            substeps: 50,
            jet_width: 4,
            jet_max: 0.03,
            action_bound: 0.005,
            zero_net_mass_flux: true,
        }
    }
}

impl LatticeConfig {
    /// A quarter-resolution channel (D = 8) at the same Reynolds number,
    /// blockage and actuation ratios. One shedding period spans roughly
    /// forty control steps, as in the default layout.
    pub fn compact() -> Self {
        Self {
            nx: 128,
            ny: 64,
            obstacle_x: 24,
            obstacle_y: None,
            obstacle_side: 8,
            inflow_speed: 0.1,
            reynolds: 100.0,
            substeps: 13,
            jet_width: 2,
            jet_max: 0.06,
            action_bound: 0.01,
            zero_net_mass_flux: true,
        }
    }

    pub fn viscosity(&self) -> f64 {
        self.inflow_speed * self.obstacle_side as f64 / self.reynolds
    }

    pub fn tau(&self) -> f64 {
        0.5 + 3.0 * self.viscosity()
    }

    /// Reynolds number recovered from the lattice parameters.
    pub fn effective_reynolds(&self) -> f64 {
        let nu = (self.tau() - 0.5) / 3.0;
        self.inflow_speed * self.obstacle_side as f64 / nu
    }

    pub fn obstacle_y0(&self) -> usize {
        self.obstacle_y
            .unwrap_or_else(|| self.ny.saturating_sub(self.obstacle_side) / 2)
    }

    pub fn obstacle_x_range(&self) -> Range<usize> {
        self.obstacle_x..self.obstacle_x + self.obstacle_side
    }

    pub fn obstacle_y_range(&self) -> Range<usize> {
        let y0 = self.obstacle_y0();
        y0..y0 + self.obstacle_side
    }

    /// x index of the first fluid column behind the obstacle.
    pub fn rear_x(&self) -> usize {
        self.obstacle_x + self.obstacle_side
    }

    /// Solid cells carrying the top (index 0) and bottom (index 1) jets.
    pub fn jet_slots(&self) -> [(Range<usize>, usize); 2] {
        let xs = self.rear_x() - self.jet_width..self.rear_x();
        let ys = self.obstacle_y_range();
        [(xs.clone(), ys.end - 1), (xs, ys.start)]
    }

    pub fn is_solid(&self, x: usize, y: usize) -> bool {
        self.obstacle_x_range().contains(&x) && self.obstacle_y_range().contains(&y)
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.obstacle_side;
        if !(self.reynolds.is_finite() && self.reynolds > 0.0) {
            return Err(Error::constraint(
                "reynolds",
                "must be a positive finite number",
            ));
        }
        if !(self.inflow_speed.is_finite() && self.inflow_speed > 0.0 && self.inflow_speed <= 0.3) {
            return Err(Error::constraint(
                "inflow_speed",
                "must lie in (0, 0.3] lattice units",
            ));
        }
        if d < 2 {
            return Err(Error::constraint(
                "obstacle_side",
                "must be at least 2 cells",
            ));
        }
        if self.tau() <= 0.5 {
            return Err(Error::constraint("reynolds", "implies tau <= 1/2"));
        }
        if self.obstacle_x < 2 * d {
            return Err(Error::constraint(
                "obstacle_x",
                "must leave at least two obstacle sides of upstream clearance",
            ));
        }
        if self.nx < self.rear_x() + 8 * d {
            return Err(Error::constraint(
                "nx",
                "must leave at least eight obstacle sides of downstream clearance",
            ));
        }
        let y0 = self.obstacle_y0();
        if y0 < 1 || y0 + d + 1 > self.ny {
            return Err(Error::constraint(
                "obstacle_y",
                "obstacle must lie strictly inside the channel",
            ));
        }
        if self.substeps == 0 {
            return Err(Error::constraint("substeps", "must be at least 1"));
        }
        if self.jet_width == 0 || 2 * self.jet_width > d {
            return Err(Error::constraint(
                "jet_width",
                "must be between 1 and half the obstacle side",
            ));
        }
        if !(self.jet_max.is_finite() && self.jet_max >= 0.0) {
            return Err(Error::constraint("jet_max", "must be non-negative"));
        }
        if !(self.action_bound.is_finite() && self.action_bound > 0.0) {
            return Err(Error::constraint("action_bound", "must be positive"));
        }
        Ok(())
    }

    /// Stable 64-bit fingerprint of the configuration (FNV-1a over its JSON form).
    pub fn fingerprint(&self) -> u64 {
        let text = serde_json::to_string(self).expect("config serializes");
        text.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
            (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
        })
    }
}
