use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::material::Material;
use super::plasticity::{return_map_with_stress, stress_at};
use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

#[derive(Debug, Clone, PartialEq)]
pub struct Particle {
    pub position: Vec3,
    pub velocity: Vec3,
    pub affine_velocity: Mat3,
    pub deformation_gradient: Mat3,
    pub mass: f64,
    pub volume0: f64,
    pub material_id: usize,
    pub body_id: usize,
    /// Grid velocity field the particle scatters to: 0 for the object, 1 for
    /// the end-effectors when contact is resolved between two fields.
    pub field: u8,
    /// Kirchhoff stress at the current deformation gradient. Refreshed by
    /// [`grid_to_particle`]; call [`Particle::refresh_stress`] after editing `F` by hand.
    pub stress: Mat3,
}

impl Particle {
    pub fn new(position: Vec3, mass: f64, volume0: f64, material_id: usize, body_id: usize) -> Self {
        Self {
            position,
            velocity: Vec3::zeros(),
            affine_velocity: Mat3::zeros(),
            deformation_gradient: Mat3::identity(),
            mass,
            volume0,
            material_id,
            body_id,
            field: 0,
            stress: Mat3::zeros(),
        }
    }

    pub fn refresh_stress(&mut self, material: &Material) {
        self.stress = stress_at(&self.deformation_gradient, material);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SubstepConfig {
    pub dt: f64,
    pub gravity: [f64; 3],
    pub boundary_margin: usize,
}

impl Default for SubstepConfig {
    fn default() -> Self {
        Self {
            dt: 2e-4,
            gravity: [0.0; 3],
            boundary_margin: 3,
        }
    }
}

impl SubstepConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        Ok(())
    }
}

/// Background grid over the cube `[0, resolution * dx)^3`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub resolution: usize,
    pub dx: f64,
    pub mass: Vec<f64>,
    /// Momentum after scatter; overwritten with velocity by [`grid_update`].
    pub momentum: Vec<Vec3>,
    pub contact: Option<ContactField>,
    // inclusive node box touched by the last scatter
    active: Option<([usize; 3], [usize; 3])>,
}

/// Second velocity field. Where both fields carry mass and approach each
/// other along the object normal they move with their common velocity;
/// otherwise they separate freely.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactField {
    pub mass: Vec<f64>,
    pub momentum: Vec<Vec3>,
    /// Mass gradient of field 0.
    pub mass_gradient: Vec<Vec3>,
}

impl Grid {
    pub fn new(resolution: usize) -> Self {
        let n = resolution * resolution * resolution;
        Self {
            resolution,
            dx: 1.0 / resolution as f64,
            mass: vec![0.0; n],
            momentum: vec![Vec3::zeros(); n],
            contact: None,
            active: None,
        }
    }

    pub fn with_contact(resolution: usize) -> Self {
        let n = resolution * resolution * resolution;
        let mut g = Self::new(resolution);
        g.contact = Some(ContactField {
            mass: vec![0.0; n],
            momentum: vec![Vec3::zeros(); n],
            mass_gradient: vec![Vec3::zeros(); n],
        });
        g
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.resolution + j) * self.resolution + k
    }

    pub fn node_position(&self, i: usize, j: usize, k: usize) -> Vec3 {
        Vec3::new(i as f64, j as f64, k as f64) * self.dx
    }

    pub fn total_mass(&self) -> f64 {
        self.mass.iter().sum::<f64>() + self.contact.as_ref().map_or(0.0, |c| c.mass.iter().sum())
    }

    /// Node velocity of field 0 (valid after [`grid_update`]).
    pub fn velocity(&self, i: usize, j: usize, k: usize) -> Vec3 {
        self.momentum[self.index(i, j, k)]
    }

    fn clear(&mut self) {
        if let Some((lo, hi)) = self.active.take() {
            for i in lo[0]..=hi[0] {
                for j in lo[1]..=hi[1] {
                    let start = self.index(i, j, lo[2]);
                    let end = self.index(i, j, hi[2]) + 1;
                    self.mass[start..end].fill(0.0);
                    self.momentum[start..end].fill(Vec3::zeros());
                    if let Some(c) = &mut self.contact {
                        c.mass[start..end].fill(0.0);
                        c.momentum[start..end].fill(Vec3::zeros());
                        c.mass_gradient[start..end].fill(Vec3::zeros());
                    }
                }
            }
        }
    }

    fn touch(&mut self, base: [usize; 3]) {
        let hi = [base[0] + 2, base[1] + 2, base[2] + 2];
        self.active = Some(match self.active {
            None => (base, hi),
            Some((l, h)) => (
                [l[0].min(base[0]), l[1].min(base[1]), l[2].min(base[2])],
                [h[0].max(hi[0]), h[1].max(hi[1]), h[2].max(hi[2])],
            ),
        });
    }
}

/// Quadratic B-spline stencil of a particle: lower node index, fractional
/// offset in cell units, and per-axis weights for the 3 nodes.
#[derive(Debug, Clone, Copy)]
pub struct Stencil {
    pub base: [usize; 3],
    pub frac: Vec3,
    pub weights: [[f64; 3]; 3],
    /// Weight derivatives per axis, in cell units.
    pub dweights: [[f64; 3]; 3],
}

impl Stencil {
    pub fn new(position: &Vec3, grid: &Grid) -> Option<Self> {
        let inv_dx = 1.0 / grid.dx;
        let mut base = [0usize; 3];
        let mut frac = Vec3::zeros();
        let mut weights = [[0.0; 3]; 3];
        let mut dweights = [[0.0; 3]; 3];
        for a in 0..3 {
            let xg = position[a] * inv_dx;
            let b = (xg - 0.5).floor();
            if !(b >= 0.0) || b as usize + 2 >= grid.resolution {
                return None;
            }
            base[a] = b as usize;
            let fx = xg - b;
            frac[a] = fx;
            weights[a] = [
                0.5 * (1.5 - fx) * (1.5 - fx),
                0.75 - (fx - 1.0) * (fx - 1.0),
                0.5 * (fx - 0.5) * (fx - 0.5),
            ];
            dweights[a] = [fx - 1.5, -2.0 * (fx - 1.0), fx - 0.5];
        }
        Some(Self {
            base,
            frac,
            weights,
            dweights,
        })
    }

    #[inline]
    pub fn weight(&self, i: usize, j: usize, k: usize) -> f64 {
        self.weights[0][i] * self.weights[1][j] * self.weights[2][k]
    }

    /// Gradient of the node weight with respect to the particle position, in cell units.
    #[inline]
    pub fn weight_gradient(&self, i: usize, j: usize, k: usize) -> Vec3 {
        let (w, d) = (&self.weights, &self.dweights);
        Vec3::new(
            d[0][i] * w[1][j] * w[2][k],
            w[0][i] * d[1][j] * w[2][k],
            w[0][i] * w[1][j] * d[2][k],
        )
    }

    /// Node offset from the particle in cell units.
    #[inline]
    pub fn offset(&self, i: usize, j: usize, k: usize) -> Vec3 {
        Vec3::new(i as f64, j as f64, k as f64) - self.frac
    }
}

fn out_of_bounds(index: usize, p: &Particle) -> Error {
    Error::OutOfBounds {
        index,
        position: [p.position.x, p.position.y, p.position.z],
    }
}

/// Scatter mass and APIC/MLS momentum (including the stress impulse) to the grid.
pub fn particle_to_grid(particles: &[Particle], grid: &mut Grid, cfg: &SubstepConfig) -> Result<()> {
    grid.clear();
    let dx = grid.dx;
    let inv_dx = 1.0 / dx;
    let stress_scale = -cfg.dt * 4.0 * inv_dx * inv_dx;
    for (index, p) in particles.iter().enumerate() {
        let st = Stencil::new(&p.position, grid).ok_or_else(|| out_of_bounds(index, p))?;
        grid.touch(st.base);
        // affine term in world units; node offset supplied in cell units
        let affine = (p.stress * (stress_scale * p.volume0) + p.affine_velocity * p.mass) * dx;
        let mv = p.velocity * p.mass;
        let r = grid.resolution;
        let (mass, momentum, mut gradient) = match (&mut grid.contact, p.field) {
            (Some(c), 0) => (&mut grid.mass, &mut grid.momentum, Some(&mut c.mass_gradient)),
            (Some(c), _) => (&mut c.mass, &mut c.momentum, None),
            (None, _) => (&mut grid.mass, &mut grid.momentum, None),
        };
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    let w = st.weight(i, j, k);
                    let idx = ((st.base[0] + i) * r + st.base[1] + j) * r + st.base[2] + k;
                    mass[idx] += w * p.mass;
                    momentum[idx] += (mv + affine * st.offset(i, j, k)) * w;
                    if let Some(g) = gradient.as_deref_mut() {
                        g[idx] -= st.weight_gradient(i, j, k) * p.mass;
                    }
                }
            }
        }
    }
    Ok(())
}

fn clamp_walls(v: &mut Vec3, node: [usize; 3], n: usize, m: usize) {
    for (a, c) in node.into_iter().enumerate() {
        if c < m && v[a] < 0.0 {
            v[a] = 0.0;
        }
        if c + m >= n && v[a] > 0.0 {
            v[a] = 0.0;
        }
    }
}

/// Resolves contact between the two fields at a node holding both. Closing
/// pairs (object moving outward along its normal relative to the other
/// field) take their common velocity; separating pairs are left alone.
fn resolve_contact(v0: &mut Vec3, m0: f64, v1: &mut Vec3, m1: f64, gradient: Vec3) {
    let len = gradient.norm();
    let closing = len == 0.0 || (*v0 - *v1).dot(&(-gradient / len)) > 0.0;
    if closing {
        let v = (*v0 * m0 + *v1 * m1) / (m0 + m1);
        *v0 = v;
        *v1 = v;
    }
}

/// Momentum to velocity, gravity, and wall clamping on nodes within the margin.
/// Only the velocity component pointing into a wall is removed.
pub fn grid_update(grid: &mut Grid, cfg: &SubstepConfig) {
    let Some((lo, hi)) = grid.active else { return };
    let n = grid.resolution;
    let m = cfg.boundary_margin;
    let g = Vec3::from(cfg.gravity) * cfg.dt;
    for i in lo[0]..=hi[0] {
        for j in lo[1]..=hi[1] {
            for k in lo[2]..=hi[2] {
                let idx = grid.index(i, j, k);
                let mass = grid.mass[idx];
                if mass <= 0.0 {
                    continue;
                }
                let mut v = grid.momentum[idx] / mass + g;
                clamp_walls(&mut v, [i, j, k], n, m);
                grid.momentum[idx] = v;
            }
        }
    }
    let Some(c) = &mut grid.contact else { return };
    for i in lo[0]..=hi[0] {
        for j in lo[1]..=hi[1] {
            for k in lo[2]..=hi[2] {
                let idx = (i * n + j) * n + k;
                let m1 = c.mass[idx];
                if m1 <= 0.0 {
                    continue;
                }
                let mut v1 = c.momentum[idx] / m1 + g;
                let m0 = grid.mass[idx];
                if m0 > 0.0 {
                    // field 0 already holds its wall-clamped velocity
                    let mut v0 = grid.momentum[idx];
                    resolve_contact(&mut v0, m0, &mut v1, m1, c.mass_gradient[idx]);
                    clamp_walls(&mut v0, [i, j, k], n, m);
                    grid.momentum[idx] = v0;
                }
                clamp_walls(&mut v1, [i, j, k], n, m);
                c.momentum[idx] = v1;
            }
        }
    }
}

/// Gather velocity and affine velocity, update `F = (I + dt C) F`, return-map,
/// refresh the cached stress and advect.
pub fn grid_to_particle(
    grid: &Grid,
    particles: &mut [Particle],
    materials: &[Material],
    cfg: &SubstepConfig,
) -> Result<()> {
    let inv_dx = 1.0 / grid.dx;
    for (index, p) in particles.iter_mut().enumerate() {
        let st = Stencil::new(&p.position, grid).ok_or_else(|| out_of_bounds(index, p))?;
        let field = match (&grid.contact, p.field) {
            (Some(c), f) if f != 0 => &c.momentum,
            _ => &grid.momentum,
        };
        let mut v = Vec3::zeros();
        let mut b = Mat3::zeros();
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    let w = st.weight(i, j, k);
                    let vi = field[grid.index(st.base[0] + i, st.base[1] + j, st.base[2] + k)];
                    v += vi * w;
                    b += (vi * w) * st.offset(i, j, k).transpose();
                }
            }
        }
        let c = b * (4.0 * inv_dx);
        let f_trial = (Mat3::identity() + c * cfg.dt) * p.deformation_gradient;
        let det = f_trial.determinant();
        if !(det > 0.0) {
            return Err(Error::NumericalBlowup { index, det });
        }
        let material = &materials[p.material_id];
        let (f, stress) = return_map_with_stress(&f_trial, material).ok_or(Error::NumericalBlowup { index, det })?;
        p.velocity = v;
        p.affine_velocity = c;
        p.deformation_gradient = f;
        p.stress = stress;
        p.position += v * cfg.dt;
    }
    Ok(())
}

/// Particles, grid and material table: the unit advanced by [`mpm_substep`].
#[derive(Debug, Clone, PartialEq)]
pub struct MpmState {
    pub particles: Vec<Particle>,
    pub grid: Grid,
    pub materials: Vec<Material>,
}

impl MpmState {
    pub fn new(resolution: usize, materials: Vec<Material>) -> Self {
        Self {
            particles: Vec::new(),
            grid: Grid::new(resolution),
            materials,
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.particles.iter().map(|p| p.mass).sum()
    }

    pub fn total_momentum(&self) -> Vec3 {
        self.particles.iter().map(|p| p.velocity * p.mass).sum()
    }

    pub fn center_of_mass(&self) -> Vec3 {
        let m = self.total_mass();
        self.particles.iter().map(|p| p.position * p.mass).sum::<Vec3>() / m
    }

    pub fn refresh_stresses(&mut self) {
        for p in &mut self.particles {
            p.refresh_stress(&self.materials[p.material_id]);
        }
    }

    pub fn check_cfl(&self, cfg: &SubstepConfig) -> Result<()> {
        let vmax = self.particles.iter().map(|p| p.velocity.norm()).fold(0.0, f64::max);
        if !(cfg.dt * vmax < self.grid.dx) {
            return Err(Error::Cfl(cfg.dt * vmax, self.grid.dx));
        }
        Ok(())
    }
}

/// particle-to-grid, grid update, grid-to-particle.
pub fn mpm_substep(state: &mut MpmState, cfg: &SubstepConfig) -> Result<()> {
    state.check_cfl(cfg)?;
    particle_to_grid(&state.particles, &mut state.grid, cfg)?;
    grid_update(&mut state.grid, cfg);
    grid_to_particle(&state.grid, &mut state.particles, &state.materials, cfg)
}
