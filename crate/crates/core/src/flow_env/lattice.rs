//! D2Q9 BGK lattice with half-way bounce-back walls.
//!
//! Stored populations are post-collision. Each substep gathers incoming
//! populations, relaxes them and writes the result in one pass. Interior
//! cells gather from fixed neighbour offsets; cells next to a boundary go
//! through a precomputed link table that
//! says where each incoming population comes from (a neighbour, a reflected
//! wall link, a moving jet wall, the inlet reservoir or the outlet).
//! Momentum exchanged across obstacle links is accumulated while streaming.

use crate::error::{Error, Result};

use super::config::LatticeConfig;

pub const Q: usize = 9;
pub const CX: [i32; Q] = [0, 1, 0, -1, 0, 1, -1, -1, 1];
pub const CY: [i32; Q] = [0, 0, 1, 0, -1, 1, 1, -1, -1];
pub const W: [f64; Q] = [
    4.0 / 9.0,
    1.0 / 9.0,
    1.0 / 9.0,
    1.0 / 9.0,
    1.0 / 9.0,
    1.0 / 36.0,
    1.0 / 36.0,
    1.0 / 36.0,
    1.0 / 36.0,
];
pub const OPP: [usize; Q] = [0, 3, 4, 1, 2, 7, 8, 5, 6];
/// Direction index after reflecting y.
pub const MIRROR_Y: [usize; Q] = [0, 1, 4, 3, 2, 8, 7, 6, 5];
pub const CS2: f64 = 1.0 / 3.0;
pub const RHO0: f64 = 1.0;

const WALL: u32 = u32::MAX;
const OBSTACLE: u32 = u32::MAX - 1;
const JET_TOP: u32 = u32::MAX - 2;
const JET_BOTTOM: u32 = u32::MAX - 3;
const INLET: u32 = u32::MAX - 4;
const OUTLET: u32 = u32::MAX - 5;

#[inline(always)]
pub fn equilibrium(rho: f64, ux: f64, uy: f64) -> [f64; Q] {
    let usq = 1.5 * (ux * ux + uy * uy);
    let mut feq = [0.0; Q];
    for i in 0..Q {
        let cu = 3.0 * (CX[i] as f64 * ux + CY[i] as f64 * uy);
        feq[i] = W[i] * rho * (1.0 + cu + 0.5 * cu * cu - usq);
    }
    feq
}

/// Density and velocity of stored (post-collision) populations. With a body
/// force the collision adds `F` to the momentum, half of which belongs to `u`.
#[inline(always)]
fn moments(f: &[f64; Q], force: [f64; 2]) -> (f64, [f64; 2]) {
    // Pairwise grouping makes the rest weights sum to exactly 1.
    let r = f[0] + ((f[1] + f[2]) + (f[3] + f[4])) + ((f[5] + f[6]) + (f[7] + f[8]));
    let mx = (f[1] + f[5] + f[8]) - (f[3] + f[6] + f[7]);
    let my = (f[2] + f[5] + f[6]) - (f[4] + f[7] + f[8]);
    (r, [(mx - 0.5 * force[0]) / r, (my - 0.5 * force[1]) / r])
}

/// Boundary treatment along x.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum XBoundary {
    Periodic,
    /// Equilibrium reservoir at `rho = 1, u = (speed, 0)` on the left; on the
    /// right, equilibrium at `rho = 1` with the velocity of the upstream
    /// neighbour (zero velocity gradient, fixed pressure).
    InflowOutflow {
        speed: f64,
    },
}

/// Boundary treatment along y.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum YBoundary {
    Periodic,
    NoSlipWalls,
}

/// Compiled geometry: solid mask, link table and relaxation parameters.
#[derive(Debug, Clone)]
pub struct Lattice {
    nx: usize,
    ny: usize,
    tau: f64,
    omega: f64,
    body_force: [f64; 2],
    solid: Vec<bool>,
    fluid: Vec<u32>,
    /// Fluid cells whose nine links are all plain neighbour pulls.
    bulk: Vec<u32>,
    /// Remaining fluid cells, streamed through the link table.
    edge: Vec<u32>,
    links: Vec<u32>,
    inlet_eq: [f64; Q],
}

impl Lattice {
    /// Channel with the square obstacle and jet slots described by `cfg`.
    pub fn channel(cfg: &LatticeConfig) -> Result<Self> {
        cfg.validate()?;
        let mut solid = vec![false; cfg.nx * cfg.ny];
        for y in cfg.obstacle_y_range() {
            for x in cfg.obstacle_x_range() {
                solid[y * cfg.nx + x] = true;
            }
        }
        let [top, bottom] = cfg.jet_slots();
        let jet_of = |x: usize, y: usize| {
            if y == top.1 && top.0.contains(&x) {
                Some(JET_TOP)
            } else if y == bottom.1 && bottom.0.contains(&x) {
                Some(JET_BOTTOM)
            } else {
                None
            }
        };
        Ok(Self::build(
            cfg.nx,
            cfg.ny,
            cfg.tau(),
            [0.0; 2],
            solid,
            XBoundary::InflowOutflow {
                speed: cfg.inflow_speed,
            },
            YBoundary::NoSlipWalls,
            jet_of,
        ))
    }

    /// Obstacle-free box used for solver validation.
    pub fn open(
        nx: usize,
        ny: usize,
        tau: f64,
        body_force: [f64; 2],
        xb: XBoundary,
        yb: YBoundary,
    ) -> Self {
        Self::build(
            nx,
            ny,
            tau,
            body_force,
            vec![false; nx * ny],
            xb,
            yb,
            |_, _| None,
        )
    }

    #[allow(clippy::too_many_arguments)]
    fn build(
        nx: usize,
        ny: usize,
        tau: f64,
        body_force: [f64; 2],
        solid: Vec<bool>,
        xb: XBoundary,
        yb: YBoundary,
        jet_of: impl Fn(usize, usize) -> Option<u32>,
    ) -> Self {
        let mut links = vec![WALL; nx * ny * Q];
        let mut fluid = Vec::new();
        for y in 0..ny {
            for x in 0..nx {
                let cell = y * nx + x;
                if solid[cell] {
                    continue;
                }
                fluid.push(cell as u32);
                for i in 0..Q {
                    let mut sy = y as i64 - CY[i] as i64;
                    let mut sx = x as i64 - CX[i] as i64;
                    let link = loop {
                        if sy < 0 || sy >= ny as i64 {
                            match yb {
                                YBoundary::Periodic => {
                                    sy = sy.rem_euclid(ny as i64);
                                    continue;
                                }
                                YBoundary::NoSlipWalls => break WALL,
                            }
                        }
                        if sx < 0 || sx >= nx as i64 {
                            match xb {
                                XBoundary::Periodic => {
                                    sx = sx.rem_euclid(nx as i64);
                                    continue;
                                }
                                XBoundary::InflowOutflow { .. } if sx < 0 => break INLET,
                                XBoundary::InflowOutflow { .. } => break OUTLET,
                            }
                        }
                        let (ux, uy) = (sx as usize, sy as usize);
                        let src = uy * nx + ux;
                        if solid[src] {
                            break jet_of(ux, uy).unwrap_or(OBSTACLE);
                        }
                        break src as u32;
                    };
                    links[cell * Q + i] = link;
                }
            }
        }
        let (bulk, edge): (Vec<u32>, Vec<u32>) = fluid.iter().partition(|&&c| {
            let c = c as usize;
            (0..Q).all(|i| {
                let off = CY[i] as i64 * nx as i64 + CX[i] as i64;
                links[c * Q + i] as i64 == c as i64 - off
                    && (c % nx) as i64 - CX[i] as i64 >= 0
                    && (c % nx) as i64 - (CX[i] as i64) < nx as i64
            })
        });
        let inlet_eq = match xb {
            XBoundary::InflowOutflow { speed } => equilibrium(RHO0, speed, 0.0),
            XBoundary::Periodic => [0.0; Q],
        };
        Self {
            nx,
            ny,
            tau,
            omega: 1.0 / tau,
            body_force,
            solid,
            fluid,
            bulk,
            edge,
            links,
            inlet_eq,
        }
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn is_solid(&self, x: usize, y: usize) -> bool {
        self.solid[y * self.nx + x]
    }

    /// Field at rest: `rho = 1`, `u = 0` everywhere.
    pub fn rest_field(&self) -> FlowField {
        self.uniform_field(|_, _| (RHO0, 0.0, 0.0))
    }

    /// Field at local equilibrium with the given macroscopic values on fluid
    /// cells; solid cells hold the rest equilibrium.
    pub fn uniform_field(&self, init: impl Fn(usize, usize) -> (f64, f64, f64)) -> FlowField {
        let n = self.nx * self.ny;
        let mut f = vec![0.0; n * Q];
        let mut rho = vec![RHO0; n];
        let mut u = vec![[0.0; 2]; n];
        for y in 0..self.ny {
            for x in 0..self.nx {
                let c = y * self.nx + x;
                let (r, ux, uy) = if self.solid[c] {
                    (RHO0, 0.0, 0.0)
                } else {
                    init(x, y)
                };
                f[c * Q..(c + 1) * Q].copy_from_slice(&equilibrium(r, ux, uy));
                rho[c] = r;
                u[c] = [ux, uy];
            }
        }
        FlowField {
            nx: self.nx,
            ny: self.ny,
            f,
            rho,
            u,
            solid: self.solid.clone(),
            force: [0.0; 2],
            substeps: 0,
            scratch: Vec::new(),
        }
    }

    /// Field with the given distributions; moments are recomputed.
    pub fn field_from_distributions(&self, f: Vec<f64>) -> Result<FlowField> {
        let n = self.nx * self.ny;
        if f.len() != n * Q {
            return Err(Error::shape("distribution values", n * Q, f.len()));
        }
        let mut field = FlowField {
            nx: self.nx,
            ny: self.ny,
            f,
            rho: vec![RHO0; n],
            u: vec![[0.0; 2]; n],
            solid: self.solid.clone(),
            force: [0.0; 2],
            substeps: 0,
            scratch: Vec::new(),
        };
        for &c in &self.fluid {
            self.update_moments(&mut field, c as usize);
        }
        Ok(field)
    }

    #[inline]
    fn update_moments(&self, field: &mut FlowField, c: usize) {
        let fc: &[f64; Q] = field.f[c * Q..(c + 1) * Q]
            .try_into()
            .expect("Q populations");
        let (r, u) = moments(fc, self.body_force);
        field.rho[c] = r;
        field.u[c] = u;
    }

    /// BGK relaxation of the gathered populations `g` into `out`; returns the
    /// macroscopic density and velocity.
    #[inline(always)]
    fn collide(&self, g: &[f64; Q], out: &mut [f64]) -> (f64, [f64; 2]) {
        let out: &mut [f64; Q] = out.try_into().expect("Q populations");
        let [gx, gy] = self.body_force;
        let (r, [ux, uy]) = moments(g, [-gx, -gy]);
        let omega = self.omega;
        let feq = equilibrium(r, ux, uy);
        for i in 0..Q {
            out[i] = g[i] - omega * (g[i] - feq[i]);
        }
        if gx != 0.0 || gy != 0.0 {
            let pre = 1.0 - 0.5 * omega;
            for i in 0..Q {
                let (cx, cy) = (CX[i] as f64, CY[i] as f64);
                let cu = cx * ux + cy * uy;
                let sx = 3.0 * (cx - ux) + 9.0 * cu * cx;
                let sy = 3.0 * (cy - uy) + 9.0 * cu * cy;
                out[i] += pre * W[i] * (sx * gx + sy * gy);
            }
        }
        moments(out, self.body_force)
    }

    /// One stream-and-collide update.
    ///
    /// Stored populations are post-collision, so each cell gathers from its
    /// upstream neighbours, relaxes, and writes back in a single pass.
    /// `jets` are the wall-normal velocities of the top and bottom jet slots
    /// (positive values blow fluid away from the body).
    pub fn substep(&self, field: &mut FlowField, jets: [f64; 2]) -> Result<()> {
        let n = self.nx * self.ny;
        if field.f.len() != n * Q {
            return Err(Error::shape("distribution values", n * Q, field.f.len()));
        }
        let old = std::mem::take(&mut field.f);
        let mut new = std::mem::take(&mut field.scratch);
        if new.len() != n * Q {
            // Solid cells are never written, so both buffers must start equal.
            new = old.clone();
        }

        let mut mass = 0.0;
        let nx = self.nx as isize;
        let offsets: [isize; Q] = std::array::from_fn(|i| CY[i] as isize * nx + CX[i] as isize);
        let mut g = [0.0; Q];
        for &c in &self.bulk {
            let c = c as usize;
            for i in 0..Q {
                let src = (c as isize - offsets[i]) as usize;
                g[i] = old[src * Q + i];
            }
            let (r, u) = self.collide(&g, &mut new[c * Q..(c + 1) * Q]);
            field.rho[c] = r;
            field.u[c] = u;
            mass += r;
        }

        let (mut fx, mut fy) = (0.0, 0.0);
        for &c in &self.edge {
            let c = c as usize;
            let rho_c = field.rho[c];
            for i in 0..Q {
                let link = self.links[c * Q + i];
                g[i] = match link {
                    WALL => old[c * Q + OPP[i]],
                    INLET => self.inlet_eq[i],
                    OUTLET => {
                        let [ux, uy] = field.u[c - 1];
                        equilibrium(RHO0, ux, uy)[i]
                    }
                    OBSTACLE | JET_TOP | JET_BOTTOM => {
                        let out = old[c * Q + OPP[i]];
                        let wall_v = match link {
                            JET_TOP => jets[0] * CY[i] as f64,
                            JET_BOTTOM => -jets[1] * CY[i] as f64,
                            _ => 0.0,
                        };
                        let back = out + 6.0 * W[i] * rho_c * wall_v;
                        // Population leaving along c_opp and returning along c_i.
                        fx -= CX[i] as f64 * (out + back);
                        fy -= CY[i] as f64 * (out + back);
                        back
                    }
                    src => old[src as usize * Q + i],
                };
            }
            let (r, u) = self.collide(&g, &mut new[c * Q..(c + 1) * Q]);
            field.rho[c] = r;
            field.u[c] = u;
            mass += r;
        }
        field.f = new;
        field.scratch = old;
        field.force = [fx, fy];
        field.substeps += 1;
        if !mass.is_finite() {
            return Err(Error::NonFiniteField {
                substep: field.substeps,
            });
        }
        Ok(())
    }
}

/// Distribution functions and their moments on every cell.
#[derive(Debug, Clone)]
pub struct FlowField {
    nx: usize,
    ny: usize,
    f: Vec<f64>,
    rho: Vec<f64>,
    u: Vec<[f64; 2]>,
    solid: Vec<bool>,
    force: [f64; 2],
    substeps: u64,
    scratch: Vec<f64>,
}

impl PartialEq for FlowField {
    fn eq(&self, other: &Self) -> bool {
        self.nx == other.nx
            && self.ny == other.ny
            && self.f == other.f
            && self.rho == other.rho
            && self.u == other.u
            && self.solid == other.solid
            && self.force == other.force
    }
}

impl FlowField {
    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn distributions(&self) -> &[f64] {
        &self.f
    }

    pub fn density(&self) -> &[f64] {
        &self.rho
    }

    pub fn velocity(&self) -> &[[f64; 2]] {
        &self.u
    }

    pub fn is_solid(&self, x: usize, y: usize) -> bool {
        self.solid[y * self.nx + x]
    }

    pub fn rho_at(&self, x: usize, y: usize) -> f64 {
        self.rho[y * self.nx + x]
    }

    pub fn u_at(&self, x: usize, y: usize) -> [f64; 2] {
        self.u[y * self.nx + x]
    }

    /// Pressure `c_s^2 (rho - rho0)` at a cell.
    pub fn pressure_at(&self, x: usize, y: usize) -> f64 {
        CS2 * (self.rho_at(x, y) - RHO0)
    }

    /// Momentum-exchange force on the obstacle from the most recent substep.
    pub fn obstacle_force(&self) -> [f64; 2] {
        self.force
    }

    pub fn substeps_taken(&self) -> u64 {
        self.substeps
    }

    /// Pressure on every cell in row-major order (zero inside solids).
    pub fn pressure_grid(&self) -> Vec<f64> {
        self.rho
            .iter()
            .zip(&self.solid)
            .map(|(&r, &s)| if s { 0.0 } else { CS2 * (r - RHO0) })
            .collect()
    }

    /// Reflection about the horizontal centre line.
    pub fn mirrored(&self) -> FlowField {
        let mut out = self.clone();
        for y in 0..self.ny {
            let my = self.ny - 1 - y;
            for x in 0..self.nx {
                let src = y * self.nx + x;
                let dst = my * self.nx + x;
                for (i, &mi) in MIRROR_Y.iter().enumerate() {
                    out.f[dst * Q + mi] = self.f[src * Q + i];
                }
                out.rho[dst] = self.rho[src];
                out.u[dst] = [self.u[src][0], -self.u[src][1]];
                out.solid[dst] = self.solid[src];
            }
        }
        out.force = [self.force[0], -self.force[1]];
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn compact() -> (LatticeConfig, Lattice) {
        let cfg = LatticeConfig::compact();
        let lat = Lattice::channel(&cfg).unwrap();
        (cfg, lat)
    }

    #[test]
    fn weights_and_moments_of_equilibrium() {
        assert!((W.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        let feq = equilibrium(1.02, 0.03, -0.01);
        let r: f64 = feq.iter().sum();
        let mx: f64 = (0..Q).map(|i| CX[i] as f64 * feq[i]).sum();
        let my: f64 = (0..Q).map(|i| CY[i] as f64 * feq[i]).sum();
        assert!((r - 1.02).abs() < 1e-14);
        assert!((mx - 1.02 * 0.03).abs() < 1e-14);
        assert!((my + 1.02 * 0.01).abs() < 1e-14);
        for i in 0..Q {
            assert_eq!(CX[OPP[i]], -CX[i]);
            assert_eq!(CY[OPP[i]], -CY[i]);
            assert_eq!(CX[MIRROR_Y[i]], CX[i]);
            assert_eq!(CY[MIRROR_Y[i]], -CY[i]);
        }
    }

    #[test]
    fn collision_conserves_mass_and_momentum() {
        // Non-equilibrium populations on a single periodic cell: streaming is
        // the identity, so one substep isolates the collision.
        let lat = Lattice::open(
            1,
            1,
            0.7,
            [0.0; 2],
            XBoundary::Periodic,
            YBoundary::Periodic,
        );
        let f: Vec<f64> = (0..Q)
            .map(|i| W[i] * (1.0 + 0.05 * (i as f64).sin()))
            .collect();
        let mut field = lat.field_from_distributions(f).unwrap();
        let (r0, u0) = (field.rho[0], field.u[0]);
        lat.substep(&mut field, [0.0; 2]).unwrap();
        assert!((field.rho[0] - r0).abs() <= 1e-12);
        assert!((field.rho[0] * field.u[0][0] - r0 * u0[0]).abs() <= 1e-12);
        assert!((field.rho[0] * field.u[0][1] - r0 * u0[1]).abs() <= 1e-12);
    }

    #[test]
    fn rest_state_is_a_fixed_point_without_inflow() {
        let lat = Lattice::open(
            16,
            8,
            0.6,
            [0.0; 2],
            XBoundary::Periodic,
            YBoundary::NoSlipWalls,
        );
        let rest = lat.rest_field();
        let mut field = rest.clone();
        for _ in 0..10 {
            lat.substep(&mut field, [0.0; 2]).unwrap();
        }
        assert_eq!(field.f, rest.f);
    }

    #[test]
    fn obstacle_cells_are_never_streamed() {
        let (cfg, lat) = compact();
        let mut field = lat.rest_field();
        for _ in 0..5 {
            lat.substep(&mut field, [0.01, -0.02]).unwrap();
        }
        for y in cfg.obstacle_y_range() {
            for x in cfg.obstacle_x_range() {
                assert!(field.is_solid(x, y));
                assert_eq!(field.rho_at(x, y), RHO0);
            }
        }
    }

    #[test]
    fn moments_match_distributions_after_substep() {
        let (_, lat) = compact();
        let mut field = lat.rest_field();
        for _ in 0..20 {
            lat.substep(&mut field, [0.01, 0.0]).unwrap();
        }
        let copy = lat.field_from_distributions(field.f.clone()).unwrap();
        assert_eq!(copy.rho, field.rho);
        assert_eq!(copy.u, field.u);
        assert!(field.rho.iter().all(|&r| r > 0.0));
    }

    #[test]
    fn non_finite_values_are_reported() {
        let (_, lat) = compact();
        let mut field = lat.rest_field();
        field.f[(10 * 128 + 10) * Q] = f64::NAN;
        field.rho[10 * 128 + 10] = f64::NAN;
        assert!(matches!(
            lat.substep(&mut field, [0.0; 2]),
            Err(Error::NonFiniteField { .. })
        ));
    }

    #[test]
    fn mirror_is_an_involution() {
        let (_, lat) = compact();
        let mut field = lat.rest_field();
        for _ in 0..10 {
            lat.substep(&mut field, [0.02, -0.01]).unwrap();
        }
        assert_eq!(field.mirrored().mirrored(), field);
    }
}
