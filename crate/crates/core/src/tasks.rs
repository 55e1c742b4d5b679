//! Benchmark tasks: rewards, human-designed expert trajectories and the roundness metric.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mpm::Vec3;
use crate::observations::{BinaryMask, ObservationKind};
use crate::scene::{Action, SimState, GEL_A};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    PositionControl,
    Squeeze,
    Cylinder,
    Sphere,
}

impl TaskKind {
    pub fn name(self) -> &'static str {
        match self {
            TaskKind::PositionControl => "position_control",
            TaskKind::Squeeze => "squeeze",
            TaskKind::Cylinder => "cylinder",
            TaskKind::Sphere => "sphere",
        }
    }

    /// Faces scored for roundness.
    pub fn faces(self) -> &'static [Face] {
        match self {
            TaskKind::Cylinder => &[Face::Front],
            TaskKind::Sphere => &[Face::Front, Face::Top, Face::Side],
            _ => &[],
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskTarget {
    Position([f64; 3]),
    Thickness(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSpec {
    pub kind: TaskKind,
    #[serde(default)]
    pub target: Option<TaskTarget>,
    pub episode_length: usize,
    pub observation_kind: ObservationKind,
    /// Coordinate pair used by the cylinder reward.
    #[serde(default = "default_cylinder_plane")]
    pub cylinder_plane: (usize, usize),
}

fn default_cylinder_plane() -> (usize, usize) {
    (0, 2)
}

impl Default for TaskSpec {
    fn default() -> Self {
        Self {
            kind: TaskKind::Cylinder,
            target: None,
            episode_length: 100,
            observation_kind: ObservationKind::RelativePosition,
            cylinder_plane: default_cylinder_plane(),
        }
    }
}

impl TaskSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = match (self.kind, self.target) {
            (TaskKind::PositionControl, Some(TaskTarget::Position(_))) => true,
            (TaskKind::Squeeze, Some(TaskTarget::Thickness(t))) => t > 0.0,
            (TaskKind::Cylinder | TaskKind::Sphere, None) => true,
            _ => false,
        };
        if !ok {
            return Err(Error::Config(format!(
                "task {} has an incompatible target {:?}",
                self.kind, self.target
            )));
        }
        let (a, b) = self.cylinder_plane;
        if a > 2 || b > 2 || a == b {
            return Err(Error::Config(format!(
                "cylinder_plane {:?} is not a pair of distinct axes",
                self.cylinder_plane
            )));
        }
        if self.episode_length == 0 {
            return Err(Error::Config("episode_length must be positive".into()));
        }
        Ok(())
    }
}

/// Shape-dependent quantity cached at reset so later rewards are relative to it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardContext {
    pub r0: f64,
}

impl RewardContext {
    pub fn at_reset(task: &TaskSpec, state: &SimState) -> Self {
        let r0 = match task.kind {
            TaskKind::Sphere => sphere_radius(state.object_positions()),
            TaskKind::Cylinder => cylinder_radius(state.object_positions(), task.cylinder_plane),
            _ => 0.0,
        };
        Self { r0 }
    }
}

/// Reward of `task` in `state`.
pub fn task_reward(task: &TaskSpec, ctx: &RewardContext, state: &SimState) -> f64 {
    match (task.kind, task.target) {
        (TaskKind::PositionControl, Some(TaskTarget::Position(t))) => reward_position(state, Vec3::from(t)),
        (TaskKind::Squeeze, Some(TaskTarget::Thickness(t))) => reward_squeeze(state, t),
        (TaskKind::Sphere, _) => reward_sphere(state, ctx.r0),
        (TaskKind::Cylinder, _) => reward_cylinder(state, ctx.r0, task.cylinder_plane),
        _ => f64::NAN,
    }
}

pub fn reward_position(state: &SimState, target: Vec3) -> f64 {
    -(state.object_mid() - target).norm()
}

/// Extent of `points` along `axis`.
pub fn extent(points: impl IntoIterator<Item = Vec3>, axis: usize) -> f64 {
    let (lo, hi) = points
        .into_iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(p[axis]), hi.max(p[axis]))
        });
    hi - lo
}

pub fn reward_squeeze(state: &SimState, target_thickness: f64) -> f64 {
    -(extent(state.object_positions(), state.config.gel_axis) - target_thickness).abs()
}

/// Largest distance from the mean to any point.
pub fn sphere_radius(points: impl Iterator<Item = Vec3> + Clone) -> f64 {
    let (sum, n) = points.clone().fold((Vec3::zeros(), 0usize), |(s, n), p| (s + p, n + 1));
    let mid = sum / n as f64;
    points.map(|p| (p - mid).norm()).fold(0.0, f64::max)
}

/// Largest distance from the mean to any point, using only the coordinates in `plane`.
pub fn cylinder_radius(points: impl Iterator<Item = Vec3> + Clone, plane: (usize, usize)) -> f64 {
    let (a, b) = plane;
    let (sa, sb, n) = points
        .clone()
        .fold((0.0, 0.0, 0usize), |(sa, sb, n), p| (sa + p[a], sb + p[b], n + 1));
    let (ma, mb) = (sa / n as f64, sb / n as f64);
    points.map(|p| (p[a] - ma).hypot(p[b] - mb)).fold(0.0, f64::max)
}

pub fn reward_sphere(state: &SimState, r0: f64) -> f64 {
    r0 - sphere_radius(state.object_positions())
}

pub fn reward_cylinder(state: &SimState, r0: f64, plane: (usize, usize)) -> f64 {
    r0 - cylinder_radius(state.object_positions(), plane)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExpertTrajectory {
    pub kind: TaskKind,
    /// Steps per rubbing cycle or per revolution.
    pub period: usize,
    pub amplitude: f64,
    pub radius: f64,
    /// Inward travel of the upper backing past its touch pose.
    pub press_depth: f64,
}

impl Default for ExpertTrajectory {
    fn default() -> Self {
        Self {
            kind: TaskKind::Cylinder,
            period: 20,
            amplitude: 0.03,
            radius: 0.03,
            press_depth: 0.02,
        }
    }
}

impl ExpertTrajectory {
    pub fn validate(&self) -> Result<()> {
        if self.period == 0 || self.period % 2 == 1 {
            return Err(Error::Config(format!(
                "expert period must be positive and even, got {}",
                self.period
            )));
        }
        if !(self.amplitude > 0.0 && self.radius > 0.0 && self.press_depth >= 0.0) {
            return Err(Error::Config("expert amplitude and radius must be positive".into()));
        }
        match self.kind {
            TaskKind::Cylinder | TaskKind::Sphere => Ok(()),
            k => Err(Error::MissingExpert(k.name().into())),
        }
    }
}

/// Lateral speed sign of the rubbing square wave, centered on the start pose.
pub fn square_wave_sign(period: usize, step_index: usize) -> f64 {
    if (step_index + period / 4) % period < period / 2 {
        1.0
    } else {
        -1.0
    }
}

/// Velocity taking `pos` to the next of `period` equally spaced points on the
/// circle of `radius` around `center`, one step of `step_time` later.
pub fn circle_velocity(pos: [f64; 2], center: [f64; 2], radius: f64, period: usize, step_time: f64) -> [f64; 2] {
    let theta = (pos[1] - center[1]).atan2(pos[0] - center[0]) + TAU / period as f64;
    let next = [center[0] + radius * theta.cos(), center[1] + radius * theta.sin()];
    [(next[0] - pos[0]) / step_time, (next[1] - pos[1]) / step_time]
}

/// Expert command for the upper gel at `step_index`; the lower gel is left at rest.
pub fn expert_velocity(traj: &ExpertTrajectory, step_index: usize, state: &SimState) -> Result<Action> {
    let cfg = &state.config;
    let ax = cfg.gel_axis;
    let (u, w) = cfg.lateral_axes();
    let h = cfg.env_step_time();
    let pos = state.backing_positions[GEL_A];
    let gel = &state.gels[GEL_A];
    let goal = state.initial_backing[GEL_A][ax] + gel.inward * traj.press_depth;
    let mut v = Vec3::zeros();
    v[ax] = (goal - pos[ax]) / h;
    match traj.kind {
        TaskKind::Cylinder => {
            let per_step = traj.amplitude * 2.0 / traj.period as f64;
            v[u] = square_wave_sign(traj.period, step_index) * per_step / h;
        }
        TaskKind::Sphere => {
            let mid = state.object_mid();
            let c = circle_velocity([pos[u], pos[w]], [mid[u], mid[w]], traj.radius, traj.period, h);
            v[u] = c[0];
            v[w] = c[1];
        }
        k => return Err(Error::MissingExpert(k.name().into())),
    }
    Ok(Action([v, Vec3::zeros()]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Face {
    Front,
    Top,
    Side,
}

impl Face {
    /// In-plane coordinate pair and the slicing normal.
    pub fn axes(self) -> ((usize, usize), usize) {
        match self {
            Face::Front => ((0, 2), 1),
            Face::Top => ((0, 1), 2),
            Face::Side => ((1, 2), 0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Face::Front => "front",
            Face::Top => "top",
            Face::Side => "side",
        }
    }
}

impl FromStr for Face {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Face::Front, Face::Top, Face::Side]
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown face {s:?}")))
    }
}

/// Human baseline roundness for a task face.
pub fn baseline_roundness(task: TaskKind, face: Face) -> Option<f64> {
    match (task, face) {
        (TaskKind::Cylinder, Face::Front) => Some(0.802),
        (TaskKind::Sphere, Face::Front) => Some(0.765),
        (TaskKind::Sphere, Face::Top) => Some(0.801),
        (TaskKind::Sphere, Face::Side) => Some(0.750),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Roundness {
    pub center: [f64; 2],
    pub r_min: f64,
    pub r_max: f64,
    pub ratio: f64,
}

/// R_min / R_max of boundary points about their centroid.
pub fn roundness_detail(points: &[[f64; 2]]) -> Result<Roundness> {
    if points.len() < 3 {
        return Err(Error::Degenerate(format!(
            "roundness needs at least 3 points, got {}",
            points.len()
        )));
    }
    let n = points.len() as f64;
    let cx = points.iter().map(|p| p[0]).sum::<f64>() / n;
    let cy = points.iter().map(|p| p[1]).sum::<f64>() / n;
    let d: Vec<f64> = points.iter().map(|p| (p[0] - cx).hypot(p[1] - cy)).collect();
    let r_max = d.iter().copied().fold(0.0, f64::max);
    let r_min = d.iter().copied().fold(f64::INFINITY, f64::min);
    // Collinear sets have no enclosed area.
    let area = hull_area(&convex_hull(points));
    if r_max == 0.0 || area <= 1e-12 * r_max * r_max {
        return Err(Error::Degenerate("roundness of collinear points".into()));
    }
    Ok(Roundness {
        center: [cx, cy],
        r_min,
        r_max,
        ratio: r_min / r_max,
    })
}

pub fn roundness(points: &[[f64; 2]]) -> Result<f64> {
    roundness_detail(points).map(|r| r.ratio)
}

/// Pixel centers of `mask` that touch the mask edge or an unset 4-neighbour.
pub fn mask_boundary(mask: &BinaryMask) -> Vec<[f64; 2]> {
    let on = |r: isize, c: isize| {
        r >= 0
            && c >= 0
            && (r as usize) < mask.height
            && (c as usize) < mask.width
            && mask.get(r as usize, c as usize) > 0
    };
    let mut out = Vec::new();
    for r in 0..mask.height as isize {
        for c in 0..mask.width as isize {
            if on(r, c) && !(on(r - 1, c) && on(r + 1, c) && on(r, c - 1) && on(r, c + 1)) {
                out.push([c as f64, r as f64]);
            }
        }
    }
    out
}

pub fn roundness_of_mask(mask: &BinaryMask) -> Result<f64> {
    roundness(&mask_boundary(mask))
}

pub fn success_check(value: f64, baseline: f64, margin: f64) -> bool {
    value >= baseline * (1.0 - margin)
}

/// Convex hull in counter-clockwise order (monotone chain).
pub fn convex_hull(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &[f64; 2]>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

fn hull_area(hull: &[[f64; 2]]) -> f64 {
    let n = hull.len();
    (0..n)
        .map(|i| {
            let (a, b) = (hull[i], hull[(i + 1) % n]);
            a[0] * b[1] - a[1] * b[0]
        })
        .sum::<f64>()
        .abs()
        / 2.0
}

/// `n` points evenly spaced by arc length along a closed polygon.
pub fn resample_closed(polygon: &[[f64; 2]], n: usize) -> Vec<[f64; 2]> {
    let m = polygon.len();
    let seg = |i: usize| {
        let (a, b) = (polygon[i], polygon[(i + 1) % m]);
        (a, b, (b[0] - a[0]).hypot(b[1] - a[1]))
    };
    let total: f64 = (0..m).map(|i| seg(i).2).sum();
    let mut out = Vec::with_capacity(n);
    let (mut i, mut walked) = (0, 0.0);
    for k in 0..n {
        let s = total * k as f64 / n as f64;
        while i + 1 < m && walked + seg(i).2 < s {
            walked += seg(i).2;
            i += 1;
        }
        let (a, b, len) = seg(i);
        let t = if len > 0.0 {
            ((s - walked) / len).clamp(0.0, 1.0)
        } else {
            0.0
        };
        out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
    }
    out
}

/// Boundary of the object slice through its centroid on `face`: the convex hull
/// of particles within one spacing of the plane, resampled by arc length.
pub fn cross_section_boundary(state: &SimState, face: Face, samples: usize) -> Result<Vec<[f64; 2]>> {
    let ((a, b), normal) = face.axes();
    let c = state.object_mid()[normal];
    let half = state.config.particle_spacing;
    let slice: Vec<[f64; 2]> = state
        .object_positions()
        .filter(|p| (p[normal] - c).abs() <= half)
        .map(|p| [p[a], p[b]])
        .collect();
    let hull = convex_hull(&slice);
    if hull.len() < 3 {
        return Err(Error::Degenerate(format!(
            "{} cross-section has {} hull points",
            face.name(),
            hull.len()
        )));
    }
    Ok(resample_closed(&hull, samples))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundnessRow {
    pub task: TaskKind,
    pub face: Face,
    pub r_min: f64,
    pub r_max: f64,
    pub ratio: f64,
    pub success: bool,
}

pub const ROUNDNESS_CSV_HEADER: &str = "task,face,r_min,r_max,ratio,success";

impl RoundnessRow {
    pub fn csv(&self) -> String {
        format!(
            "{},{},{:.6},{:.6},{:.6},{}",
            self.task,
            self.face.name(),
            self.r_min,
            self.r_max,
            self.ratio,
            self.success
        )
    }
}

/// Scores every face of `task` in `state` against the human baselines.
pub fn roundness_report(task: TaskKind, state: &SimState, margin: f64) -> Result<Vec<RoundnessRow>> {
    task.faces()
        .iter()
        .map(|&face| {
            let r = roundness_detail(&cross_section_boundary(state, face, 360)?)?;
            let baseline = baseline_roundness(task, face).unwrap_or(1.0);
            Ok(RoundnessRow {
                task,
                face,
                r_min: r.r_min,
                r_max: r.r_max,
                ratio: r.ratio,
                success: success_check(r.ratio, baseline, margin),
            })
        })
        .collect()
}

impl FromStr for TaskKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "position_control" => Ok(TaskKind::PositionControl),
            "squeeze" => Ok(TaskKind::Squeeze),
            "cylinder" => Ok(TaskKind::Cylinder),
            "sphere" => Ok(TaskKind::Sphere),
            _ => Err(Error::Config(format!("unknown task {s:?}"))),
        }
    }
}
