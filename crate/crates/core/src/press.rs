//! Press-hold-release study of a cube between two gels for a given yield stress.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mpm::Vec3;
use crate::observations::{sim_squeezed_area, BinaryMask};
use crate::scene::{build_scene, SceneConfig, SimState, GEL_A, GEL_B};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PressConfig {
    /// Inward travel of each backing past first contact, as a fraction of the
    /// object height.
    pub press_fraction: f64,
    pub press_speed: f64,
    pub hold_time: f64,
    pub release_speed: f64,
    /// Extra outward travel past the starting pose during release.
    pub release_clearance: f64,
    pub settle_time: f64,
    /// Record a squeezed-area frame every this many substeps.
    pub frame_interval: usize,
}

impl Default for PressConfig {
    fn default() -> Self {
        Self {
            press_fraction: 0.25,
            press_speed: 0.4,
            hold_time: 0.05,
            release_speed: 0.4,
            release_clearance: 0.05,
            settle_time: 0.1,
            frame_interval: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PressFrame {
    pub substep: usize,
    pub squeezed: [BinaryMask; 2],
}

#[derive(Debug, Clone)]
pub struct PressReport {
    pub yield_stress: f64,
    pub initial_height: f64,
    pub pressed_height: f64,
    pub final_height: f64,
    /// Fraction of the imposed compression recovered after release,
    /// `(final - pressed) / (initial - pressed)`.
    pub recovery_ratio: f64,
    /// `final / initial`.
    pub height_ratio: f64,
    pub substeps: usize,
    pub frames: Vec<PressFrame>,
    /// Object particles within one particle spacing of the centroid plane
    /// normal to the second lateral axis, projected to (first lateral, gel axis).
    pub cross_section: Vec<[f64; 2]>,
    pub final_state: SimState,
    pub seconds: f64,
}

/// Extent of the object along the gel axis.
pub fn object_height(state: &SimState) -> f64 {
    let ax = state.config.gel_axis;
    let (lo, hi) = state
        .object_positions()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(p[ax]), hi.max(p[ax]))
        });
    hi - lo
}

/// Particles of the object in the slab through its centroid normal to `normal_axis`,
/// projected onto `plane`.
pub fn object_slice(state: &SimState, normal_axis: usize, plane: (usize, usize), half_width: f64) -> Vec<[f64; 2]> {
    let c = state.object_mid()[normal_axis];
    state
        .object_positions()
        .filter(|p| (p[normal_axis] - c).abs() <= half_width)
        .map(|p| [p[plane.0], p[plane.1]])
        .collect()
}

struct Runner {
    state: SimState,
    substeps: usize,
    frame_interval: usize,
    frames: Vec<PressFrame>,
}

impl Runner {
    fn run(&mut self, velocity: [Vec3; 2], duration: f64) -> Result<()> {
        let n = (duration / self.state.config.substep.dt).round() as usize;
        self.state.backing_velocities = velocity;
        for _ in 0..n {
            self.state.substep().map_err(|e| Error::AtSubstep {
                substep: self.substeps,
                source: Box::new(e),
            })?;
            self.substeps += 1;
            if self.frame_interval > 0 && self.substeps % self.frame_interval == 0 {
                let raster = self.state.config.raster;
                let t = self.state.config.depth_threshold();
                self.frames.push(PressFrame {
                    substep: self.substeps,
                    squeezed: [
                        sim_squeezed_area(&self.state, GEL_A, raster, t)?,
                        sim_squeezed_area(&self.state, GEL_B, raster, t)?,
                    ],
                });
            }
        }
        Ok(())
    }
}

/// Closes the gap, presses both gels into the cube, holds, retracts them past
/// their starting pose and lets the cube settle.
pub fn run_press_demo(scene: &SceneConfig, press: &PressConfig, yield_stress: f64) -> Result<PressReport> {
    let started = Instant::now();
    let mut cfg = scene.clone();
    cfg.object_material = cfg.object_material.with_yield_stress(yield_stress)?;
    cfg.static_lower_gel = false;
    cfg.object_perturbation = 0.0;
    let state = build_scene(&cfg)?;
    let ax = cfg.gel_axis;
    let initial_height = object_height(&state);
    let inward = [state.gels[GEL_A].inward, state.gels[GEL_B].inward];
    let along = |s: f64| inward.map(|d| Vec3::from_fn(|a, _| if a == ax { d * s } else { 0.0 }));

    let mut runner = Runner {
        state,
        substeps: 0,
        frame_interval: press.frame_interval,
        frames: Vec::new(),
    };
    let depth = cfg.gel_gap + press.press_fraction * initial_height;
    runner.run(along(press.press_speed), depth / press.press_speed)?;
    runner.run(along(0.0), press.hold_time)?;
    let pressed_height = object_height(&runner.state);
    let back = depth + press.release_clearance;
    runner.run(along(-press.release_speed), back / press.release_speed)?;
    runner.run(along(0.0), press.settle_time)?;

    let state = runner.state;
    let final_height = object_height(&state);
    let (u, _) = cfg.lateral_axes();
    let cross_section = object_slice(&state, cfg.lateral_axes().1, (u, ax), cfg.particle_spacing);
    Ok(PressReport {
        yield_stress,
        initial_height,
        pressed_height,
        final_height,
        recovery_ratio: (final_height - pressed_height) / (initial_height - pressed_height),
        height_ratio: final_height / initial_height,
        substeps: runner.substeps,
        frames: runner.frames,
        cross_section,
        final_state: state,
        seconds: started.elapsed().as_secs_f64(),
    })
}
