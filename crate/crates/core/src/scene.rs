//! Manipulation world: a deformable cube between two gel layers whose rear
//! slabs are rigidly attached to kinematic backings.

use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mpm::{
    grid_to_particle, grid_update, particle_to_grid, Grid, Mat3, Material, MpmState, Particle, SubstepConfig, Vec3,
    YieldPreset,
};
use crate::observations;

pub const GEL_A: usize = 0;
pub const GEL_B: usize = 1;
pub const OBJECT: usize = 2;

const OBJECT_MATERIAL: usize = 0;
const GEL_MATERIAL: usize = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SceneConfig {
    pub grid_resolution: usize,
    pub substep: SubstepConfig,
    pub object_size: [f64; 3],
    pub object_center: [f64; 3],
    pub object_material: Material,
    /// Extents of each gel box in world axes; the `gel_axis` entry is the thickness.
    pub gel_size: [f64; 3],
    pub gel_material: Material,
    pub gel_axis: usize,
    /// Clear distance between each gel box and the object box at build time.
    pub gel_gap: f64,
    pub particle_spacing: f64,
    /// Number of rear particle layers rigidly attached to each backing.
    pub backing_layers: usize,
    pub action_limit: f64,
    pub substeps_per_env_step: usize,
    pub episode_length: usize,
    /// Keep gel B's backing fixed during episodes (silicone gasket).
    pub static_lower_gel: bool,
    /// Uniform perturbation of the object center at reset, as a fraction of its size.
    pub object_perturbation: f64,
    pub touch_speed: f64,
    pub max_touch_substeps: usize,
    pub raster: usize,
    /// Indentation threshold of the squeezed area; defaults to 15% of the gel thickness.
    pub depth_threshold: Option<f64>,
    /// Object and gels on separate grid fields so they can separate; a
    /// single shared field glues them together.
    pub separable_contact: bool,
    /// Largest distance per axis the upper backing may travel from its reset pose.
    pub travel_limit: Option<[f64; 3]>,
}

impl Default for SceneConfig {
    fn default() -> Self {
        let elastic = Material::default()
            .with_yield_stress(YieldPreset::Elastic.yield_stress())
            .unwrap();
        Self {
            grid_resolution: 64,
            substep: SubstepConfig::default(),
            object_size: [0.2; 3],
            object_center: [0.5; 3],
            object_material: Material::default(),
            gel_size: [0.3, 0.3, 0.05],
            gel_material: elastic,
            gel_axis: 2,
            gel_gap: 0.01,
            particle_spacing: 1.0 / 128.0,
            backing_layers: 2,
            action_limit: 0.5,
            substeps_per_env_step: 20,
            episode_length: 100,
            static_lower_gel: true,
            object_perturbation: 0.02,
            touch_speed: 0.25,
            max_touch_substeps: 4000,
            raster: 64,
            depth_threshold: None,
            separable_contact: true,
            travel_limit: None,
        }
    }
}

fn lattice_count(extent: f64, spacing: f64) -> usize {
    ((extent / spacing) + 1e-9).floor().max(1.0) as usize
}

/// Cell-centered lattice filling an axis-aligned box, iterated in x-major order.
fn box_lattice(center: Vec3, size: Vec3, spacing: f64) -> ([usize; 3], Vec<Vec3>) {
    let n = [0, 1, 2].map(|a| lattice_count(size[a], spacing));
    let mut pts = Vec::with_capacity(n[0] * n[1] * n[2]);
    for i in 0..n[0] {
        for j in 0..n[1] {
            for k in 0..n[2] {
                let idx = [i, j, k];
                let p = Vec3::from_fn(|a, _| center[a] + (idx[a] as f64 - (n[a] as f64 - 1.0) / 2.0) * spacing);
                pts.push(p);
            }
        }
    }
    (n, pts)
}

impl SceneConfig {
    pub fn dx(&self) -> f64 {
        1.0 / self.grid_resolution as f64
    }

    pub fn gel_thickness(&self) -> f64 {
        self.gel_size[self.gel_axis]
    }

    pub fn depth_threshold(&self) -> f64 {
        self.depth_threshold.unwrap_or(0.15 * self.gel_thickness())
    }

    pub fn env_step_time(&self) -> f64 {
        self.substep.dt * self.substeps_per_env_step as f64
    }

    /// The two axes spanning the gel plane, in increasing order.
    pub fn lateral_axes(&self) -> (usize, usize) {
        match self.gel_axis {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        }
    }

    /// Number of lattice points of a cube edge, exposed for sizing checks.
    pub fn object_lattice(&self) -> [usize; 3] {
        [0, 1, 2].map(|a| lattice_count(self.object_size[a], self.particle_spacing))
    }

    /// Center of gel `gel` for an object centered at `object_center`.
    fn gel_center(&self, gel: usize) -> Vec3 {
        let ax = self.gel_axis;
        let mut c = Vec3::from(self.object_center);
        let offset = self.object_size[ax] / 2.0 + self.gel_gap + self.gel_size[ax] / 2.0;
        c[ax] += if gel == GEL_A { offset } else { -offset };
        c
    }

    pub fn validate(&self) -> Result<()> {
        self.substep.validate()?;
        let bad = |m: String| Err(Error::Config(m));
        if self.gel_axis > 2 {
            return bad(format!("gel_axis must be 0, 1 or 2, got {}", self.gel_axis));
        }
        if self.grid_resolution < 8 {
            return bad(format!("grid_resolution too small: {}", self.grid_resolution));
        }
        if !(self.action_limit > 0.0) {
            return bad(format!("action_limit must be positive, got {}", self.action_limit));
        }
        if !(self.particle_spacing > 0.0) {
            return bad("particle_spacing must be positive".into());
        }
        if self.substeps_per_env_step == 0 || self.episode_length == 0 {
            return bad("substeps_per_env_step and episode_length must be positive".into());
        }
        if self.raster < 8 {
            return bad(format!("raster must be at least 8, got {}", self.raster));
        }
        let thickness_layers = lattice_count(self.gel_thickness(), self.particle_spacing);
        if thickness_layers <= self.backing_layers {
            return bad(format!(
                "gel has {thickness_layers} layers, need more than backing_layers = {}",
                self.backing_layers
            ));
        }
        let max_shift = self.object_perturbation * self.object_size[self.gel_axis];
        if !(self.gel_gap > max_shift) {
            return bad(format!(
                "gels overlap the object: gel_gap {} must exceed the reset perturbation {max_shift}",
                self.gel_gap
            ));
        }
        let margin = (self.substep.boundary_margin as f64 + 0.5) * self.dx();
        let inside =
            |c: Vec3, s: Vec3| (0..3).all(|a| c[a] - s[a] / 2.0 >= margin && c[a] + s[a] / 2.0 <= 1.0 - margin);
        let oc = Vec3::from(self.object_center);
        if !inside(oc, Vec3::from(self.object_size)) {
            return bad("object does not fit inside the grid margins".into());
        }
        for g in [GEL_A, GEL_B] {
            if !inside(self.gel_center(g), Vec3::from(self.gel_size)) {
                return bad(format!("gel {g} does not fit inside the grid margins"));
            }
        }
        Ok(())
    }
}

/// Index bookkeeping for one gel layer.
#[derive(Debug, Clone, PartialEq)]
pub struct GelLayout {
    pub backing: Vec<usize>,
    pub backing_offsets: Vec<Vec3>,
    /// Contact-face particles in lattice order, `front_dims.0` rows by `front_dims.1` columns
    /// along the first and second lateral axes.
    pub front: Vec<usize>,
    pub front_dims: (usize, usize),
    /// Offset of each front particle from the backing frame at rest.
    pub front_offsets: Vec<Vec3>,
    /// Unit direction along the gel axis pointing from the gel toward the object.
    pub inward: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub config: SceneConfig,
    pub mpm: MpmState,
    pub gels: [GelLayout; 2],
    pub object: Range<usize>,
    pub backing_positions: [Vec3; 2],
    pub backing_velocities: [Vec3; 2],
    /// Backing poses at the start of the episode, used to normalize positions.
    pub initial_backing: [Vec3; 2],
    pub step_index: usize,
}

/// Commanded backing velocities of gel A and gel B.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Action(pub [Vec3; 2]);

impl Action {
    pub fn zero() -> Self {
        Self([Vec3::zeros(); 2])
    }

    pub fn clipped(&self, limit: f64) -> Self {
        Self(self.0.map(|v| v.map(|c| c.clamp(-limit, limit))))
    }
}

fn push_body(state: &mut MpmState, points: &[Vec3], material_id: usize, body_id: usize, spacing: f64) -> Range<usize> {
    let volume = spacing.powi(3);
    let mass = state.materials[material_id].density * volume;
    let start = state.particles.len();
    state.particles.extend(
        points
            .iter()
            .map(|&p| Particle::new(p, mass, volume, material_id, body_id)),
    );
    start..state.particles.len()
}

pub fn build_scene(config: &SceneConfig) -> Result<SimState> {
    build_scene_at(config, Vec3::from(config.object_center))
}

fn build_scene_at(config: &SceneConfig, object_center: Vec3) -> Result<SimState> {
    config.validate()?;
    let spacing = config.particle_spacing;
    let mut mpm = MpmState::new(
        config.grid_resolution,
        vec![config.object_material, config.gel_material],
    );
    if config.separable_contact {
        mpm.grid = Grid::with_contact(config.grid_resolution);
    }

    let (_, obj_pts) = box_lattice(object_center, Vec3::from(config.object_size), spacing);
    let object = push_body(&mut mpm, &obj_pts, OBJECT_MATERIAL, OBJECT, spacing);

    let ax = config.gel_axis;
    let (u, v) = config.lateral_axes();
    let mut layouts = Vec::with_capacity(2);
    let mut frames = [Vec3::zeros(); 2];
    for gel in [GEL_A, GEL_B] {
        let center = config.gel_center(gel);
        let (dims, pts) = box_lattice(center, Vec3::from(config.gel_size), spacing);
        let range = push_body(&mut mpm, &pts, GEL_MATERIAL, gel, spacing);
        if config.separable_contact {
            for p in &mut mpm.particles[range.clone()] {
                p.field = 1;
            }
        }
        let inward = if gel == GEL_A { -1.0 } else { 1.0 };
        // layer index along the axis, 0 = face nearest the object
        let lattice_index = |local: usize| -> [usize; 3] {
            let k = local % dims[2];
            let j = (local / dims[2]) % dims[1];
            let i = local / (dims[1] * dims[2]);
            [i, j, k]
        };
        let depth_layer = |idx: [usize; 3]| -> usize {
            if inward < 0.0 {
                idx[ax]
            } else {
                dims[ax] - 1 - idx[ax]
            }
        };
        let mut backing = Vec::new();
        let mut front = Vec::new();
        for local in 0..range.len() {
            let idx = lattice_index(local);
            let layer = depth_layer(idx);
            if layer + config.backing_layers >= dims[ax] {
                backing.push(range.start + local);
            }
            if layer == 0 {
                front.push((idx[u], idx[v], range.start + local));
            }
        }
        front.sort();
        let front: Vec<usize> = front.into_iter().map(|(_, _, p)| p).collect();
        let backing_offsets = backing.iter().map(|&p| mpm.particles[p].position - center).collect();
        let front_offsets = front.iter().map(|&p| mpm.particles[p].position - center).collect();
        layouts.push(GelLayout {
            backing,
            backing_offsets,
            front,
            front_dims: (dims[u], dims[v]),
            front_offsets,
            inward,
        });
        frames[gel] = center;
    }
    // the gels never overlap the object box: checked by validate() via gel_gap
    let gels: [GelLayout; 2] = layouts.try_into().expect("two gels");
    Ok(SimState {
        config: config.clone(),
        mpm,
        gels,
        object,
        backing_positions: frames,
        backing_velocities: [Vec3::zeros(); 2],
        initial_backing: frames,
        step_index: 0,
    })
}

impl SimState {
    pub fn object_particles(&self) -> &[Particle] {
        &self.mpm.particles[self.object.clone()]
    }

    pub fn object_positions(&self) -> impl Iterator<Item = Vec3> + Clone + '_ {
        self.object_particles().iter().map(|p| p.position)
    }

    /// Mean position of the object particles.
    pub fn object_mid(&self) -> Vec3 {
        let n = self.object.len() as f64;
        self.object_positions().sum::<Vec3>() / n
    }

    fn pin_backings(&mut self) {
        for (g, gel) in self.gels.iter().enumerate() {
            let frame = self.backing_positions[g];
            let vel = self.backing_velocities[g];
            for (&p, off) in gel.backing.iter().zip(&gel.backing_offsets) {
                let part = &mut self.mpm.particles[p];
                part.position = frame + off;
                part.velocity = vel;
                part.affine_velocity = Mat3::zeros();
                part.deformation_gradient = Mat3::identity();
                part.stress = Mat3::zeros();
            }
        }
    }

    /// Grid nodes inside each backing slab take the slab velocity, making the
    /// backing a rigid plate for the gel attached to it.
    fn drive_backing_nodes(&mut self) {
        let grid = &mut self.mpm.grid;
        let (n, dx) = (grid.resolution, grid.dx);
        let half = self.config.particle_spacing / 2.0;
        for (g, gel) in self.gels.iter().enumerate() {
            let frame = self.backing_positions[g];
            let vel = self.backing_velocities[g];
            let mut lo = [usize::MAX; 3];
            let mut hi = [0usize; 3];
            for a in 0..3 {
                let (mn, mx) = gel
                    .backing_offsets
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), o| {
                        (l.min(o[a]), h.max(o[a]))
                    });
                lo[a] = ((frame[a] + mn - half) / dx).ceil().max(0.0) as usize;
                hi[a] = (((frame[a] + mx + half) / dx).floor().max(0.0) as usize).min(n - 1);
            }
            let (mass, momentum) = match &mut grid.contact {
                Some(c) => (&c.mass, &mut c.momentum),
                None => (&grid.mass, &mut grid.momentum),
            };
            for i in lo[0]..=hi[0] {
                for j in lo[1]..=hi[1] {
                    for k in lo[2]..=hi[2] {
                        let idx = (i * n + j) * n + k;
                        if mass[idx] > 0.0 {
                            momentum[idx] = vel;
                        }
                    }
                }
            }
        }
    }

    /// One MPM substep with the backing slabs moving rigidly with their frames.
    pub fn substep(&mut self) -> Result<()> {
        let cfg = self.config.substep;
        self.pin_backings();
        self.mpm.check_cfl(&cfg)?;
        particle_to_grid(&self.mpm.particles, &mut self.mpm.grid, &cfg)?;
        grid_update(&mut self.mpm.grid, &cfg);
        self.drive_backing_nodes();
        grid_to_particle(&self.mpm.grid, &mut self.mpm.particles, &self.mpm.materials, &cfg)?;
        for g in 0..2 {
            self.backing_positions[g] += self.backing_velocities[g] * cfg.dt;
        }
        self.pin_backings();
        Ok(())
    }

    /// Sets backing velocities (clipped; gel B held when it is a static gasket).
    /// With a travel limit, gel A's velocity is reduced so one environment
    /// step cannot carry it out of bounds.
    pub fn command(&mut self, action: &Action) {
        let a = action.clipped(self.config.action_limit);
        let mut va = a.0[GEL_A];
        if let Some(limit) = self.config.travel_limit {
            let h = self.config.env_step_time();
            let offset = self.backing_positions[GEL_A] - self.initial_backing[GEL_A];
            for ax in 0..3 {
                va[ax] = va[ax].clamp((-limit[ax] - offset[ax]) / h, (limit[ax] - offset[ax]) / h);
            }
        }
        self.backing_velocities[GEL_A] = va;
        self.backing_velocities[GEL_B] = if self.config.static_lower_gel {
            Vec3::zeros()
        } else {
            a.0[GEL_B]
        };
    }

    pub fn is_done(&self) -> bool {
        self.step_index >= self.config.episode_length
    }
}

/// Applies `action` for one environment step.
pub fn env_step(state: &mut SimState, action: &Action) -> Result<()> {
    if state.is_done() {
        return Err(Error::EpisodeOver(state.step_index));
    }
    state.command(action);
    for _ in 0..state.config.substeps_per_env_step {
        state.substep()?;
    }
    state.step_index += 1;
    Ok(())
}

/// Builds the scene with a seeded object offset, then drives both gels inward
/// until each one registers a non-empty squeezed area.
pub fn env_reset(config: &SceneConfig, seed: u64) -> Result<SimState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut center = Vec3::from(config.object_center);
    if config.object_perturbation > 0.0 {
        for a in 0..3 {
            let s = config.object_perturbation * config.object_size[a];
            center[a] += rng.gen_range(-s..=s);
        }
    }
    let mut state = build_scene_at(config, center)?;
    let ax = config.gel_axis;
    let mut touching = [false; 2];
    for _ in 0..config.max_touch_substeps {
        for g in 0..2 {
            touching[g] = touching[g] || gel_touching(&state, g)?;
            let mut v = Vec3::zeros();
            if !touching[g] {
                v[ax] = state.gels[g].inward * config.touch_speed;
            }
            state.backing_velocities[g] = v;
        }
        if touching.iter().all(|&t| t) {
            state.backing_velocities = [Vec3::zeros(); 2];
            state.initial_backing = state.backing_positions;
            state.step_index = 0;
            return Ok(state);
        }
        state.substep()?;
    }
    Err(Error::Initialization(config.max_touch_substeps))
}

fn gel_touching(state: &SimState, gel: usize) -> Result<bool> {
    let mask = observations::sim_squeezed_area(state, gel, state.config.raster, state.config.depth_threshold())?;
    Ok(mask.count() > 0)
}
