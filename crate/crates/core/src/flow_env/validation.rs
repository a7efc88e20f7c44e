//! Analytic checks of the lattice solver: decaying Taylor-Green vortex on a
//! periodic box and body-force-driven Poiseuille flow between walls.

use std::f64::consts::PI;

use crate::error::Result;

use super::lattice::{Lattice, XBoundary, YBoundary, CS2, RHO0};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationReport {
    /// Relative L2 error of the velocity field against the analytic solution.
    pub l2_error: f64,
    pub steps: usize,
}

fn taylor_green_velocity(n: usize, u0: f64, x: usize, y: usize) -> (f64, f64) {
    let k = 2.0 * PI / n as f64;
    let (x, y) = (k * x as f64, k * y as f64);
    (-u0 * x.cos() * y.sin(), u0 * x.sin() * y.cos())
}

/// Taylor-Green vortex on an `n x n` periodic box, compared with the analytic
/// decay `exp(-2 nu k^2 t)` at the half-amplitude time.
pub fn taylor_green(n: usize, tau: f64, u0: f64) -> Result<ValidationReport> {
    let lat = Lattice::open(
        n,
        n,
        tau,
        [0.0; 2],
        XBoundary::Periodic,
        YBoundary::Periodic,
    );
    let k = 2.0 * PI / n as f64;
    let mut field = lat.uniform_field(|x, y| {
        let (ux, uy) = taylor_green_velocity(n, u0, x, y);
        let (kx, ky) = (k * x as f64, k * y as f64);
        let p = -RHO0 * u0 * u0 / 4.0 * ((2.0 * kx).cos() + (2.0 * ky).cos());
        (RHO0 + p / CS2, ux, uy)
    });
    let nu = (tau - 0.5) / 3.0;
    let steps = ((2.0f64).ln() / (2.0 * nu * k * k)).round() as usize;
    for _ in 0..steps {
        lat.substep(&mut field, [0.0; 2])?;
    }
    let decay = (-2.0 * nu * k * k * steps as f64).exp();
    let (mut err, mut norm) = (0.0, 0.0);
    for y in 0..n {
        for x in 0..n {
            let (ax, ay) = taylor_green_velocity(n, u0 * decay, x, y);
            let [ux, uy] = field.u_at(x, y);
            err += (ux - ax).powi(2) + (uy - ay).powi(2);
            norm += ax * ax + ay * ay;
        }
    }
    Ok(ValidationReport {
        l2_error: (err / norm).sqrt(),
        steps,
    })
}

/// Plane Poiseuille flow across `height` cells driven by a body force that
/// gives centre-line speed `u_max`; run until the profile settles.
pub fn poiseuille(height: usize, tau: f64, u_max: f64) -> Result<ValidationReport> {
    let nu = (tau - 0.5) / 3.0;
    let h = height as f64;
    let g = 8.0 * nu * u_max / (h * h);
    let lat = Lattice::open(
        4,
        height,
        tau,
        [g, 0.0],
        XBoundary::Periodic,
        YBoundary::NoSlipWalls,
    );
    let mut field = lat.rest_field();
    // Diffusive time scale h^2 / nu; ten of them settle the profile.
    let steps = (10.0 * h * h / nu).ceil() as usize;
    for _ in 0..steps {
        lat.substep(&mut field, [0.0; 2])?;
    }
    let (mut err, mut norm) = (0.0, 0.0);
    for y in 0..height {
        // Half-way bounce-back puts the walls half a cell outside.
        let s = y as f64 + 0.5;
        let exact = g / (2.0 * nu) * s * (h - s);
        let ux = field.u_at(1, y)[0];
        err += (ux - exact).powi(2);
        norm += exact * exact;
    }
    Ok(ValidationReport {
        l2_error: (err / norm).sqrt(),
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn taylor_green_small_box() {
        let r = taylor_green(32, 0.8, 0.01).unwrap();
        assert!(r.l2_error < 0.02, "{r:?}");
    }

    #[test]
    fn poiseuille_small_channel() {
        let r = poiseuille(16, 0.8, 0.02).unwrap();
        assert!(r.l2_error < 0.02, "{r:?}");
    }
}
