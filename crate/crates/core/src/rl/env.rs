use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mpm::Vec3;
use crate::observations::{
    encoded_len, observation_vector, sim_object_contour, sim_relative_position, sim_squeezed_area, Observation,
    ObservationKind,
};
use crate::scene::{env_reset, env_step, Action, SceneConfig, SimState, GEL_A};
use crate::tasks::{expert_velocity, task_reward, ExpertTrajectory, RewardContext, TaskKind, TaskSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub observation: Vec<f64>,
    pub reward: f64,
    /// True terminal state; running out of time is not terminal.
    pub terminal: bool,
    pub truncated: bool,
}

pub trait Environment {
    fn observation_dim(&self) -> usize;
    fn action_dim(&self) -> usize;
    fn action_limit(&self) -> f64;
    fn episode_length(&self) -> usize;
    fn reset(&mut self, seed: u64) -> Result<Vec<f64>>;
    fn step(&mut self, action: &[f64]) -> Result<Step>;
    /// Demonstration command for the current state, if the task has one.
    fn expert_action(&self) -> Option<Vec<f64>>;
}

fn check_action(env: &dyn Environment, action: &[f64]) -> Result<()> {
    if action.len() != env.action_dim() {
        return Err(Error::Dimension {
            expected: env.action_dim(),
            got: action.len(),
        });
    }
    Ok(())
}

/// One-dimensional squeeze: the thickness moves by `gain * action` per step
/// and the reward is `-|thickness - target|`. Observes the signed error and the
/// target. Starts fall on both sides of the target and the thickness is not
/// clamped, so no constant push is locally optimal.
#[derive(Debug, Clone)]
pub struct ToySqueezeEnv {
    pub episode_length: usize,
    pub action_limit: f64,
    pub gain: f64,
    thickness: f64,
    target: f64,
    t: usize,
}

impl Default for ToySqueezeEnv {
    fn default() -> Self {
        Self {
            episode_length: 50,
            action_limit: 1.0,
            gain: 0.05,
            thickness: 1.0,
            target: 0.5,
            t: 0,
        }
    }
}

impl ToySqueezeEnv {
    pub fn new(episode_length: usize) -> Self {
        Self {
            episode_length,
            ..Self::default()
        }
    }

    pub fn state(&self) -> (f64, f64) {
        (self.thickness, self.target)
    }

    fn observation(&self) -> Vec<f64> {
        vec![self.thickness - self.target, self.target]
    }
}

impl Environment for ToySqueezeEnv {
    fn observation_dim(&self) -> usize {
        2
    }

    fn action_dim(&self) -> usize {
        1
    }

    fn action_limit(&self) -> f64 {
        self.action_limit
    }

    fn episode_length(&self) -> usize {
        self.episode_length
    }

    fn reset(&mut self, seed: u64) -> Result<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.thickness = rng.gen_range(0.0..1.0);
        self.target = rng.gen_range(0.2..0.8);
        self.t = 0;
        Ok(self.observation())
    }

    fn step(&mut self, action: &[f64]) -> Result<Step> {
        check_action(self, action)?;
        if self.t >= self.episode_length {
            return Err(Error::EpisodeOver(self.t));
        }
        let a = action[0].clamp(-self.action_limit, self.action_limit);
        self.thickness += self.gain * a;
        self.t += 1;
        Ok(Step {
            observation: self.observation(),
            reward: -(self.thickness - self.target).abs(),
            terminal: false,
            truncated: self.t >= self.episode_length,
        })
    }

    fn expert_action(&self) -> Option<Vec<f64>> {
        let a = (self.target - self.thickness) / self.gain;
        Some(vec![a.clamp(-self.action_limit, self.action_limit)])
    }
}

/// Simulated gel-object environment; actions are the upper backing velocity.
#[derive(Debug, Clone)]
pub struct TactileEnv {
    pub scene: SceneConfig,
    pub task: TaskSpec,
    pub expert: Option<ExpertTrajectory>,
    /// Side of the pooled mask grid for image observations.
    pub pooled: usize,
    /// Length unit of relative-position observations as seen by the networks.
    pub position_scale: f64,
    state: Option<SimState>,
    ctx: RewardContext,
}

impl TactileEnv {
    pub fn new(scene: SceneConfig, task: TaskSpec, expert: Option<ExpertTrajectory>, pooled: usize) -> Result<Self> {
        scene.validate()?;
        task.validate()?;
        if let Some(e) = &expert {
            e.validate()?;
        }
        let mut scene = scene;
        scene.episode_length = task.episode_length;
        Ok(Self {
            scene,
            task,
            expert,
            pooled,
            position_scale: 1.0,
            state: None,
            ctx: RewardContext { r0: 0.0 },
        })
    }

    pub fn state(&self) -> Option<&SimState> {
        self.state.as_ref()
    }

    fn live(&self) -> Result<&SimState> {
        self.state.as_ref().ok_or(Error::EpisodeOver(0))
    }

    fn observe(&self) -> Result<Vec<f64>> {
        let s = self.live()?;
        let raster = s.config.raster;
        let obs = match self.task.observation_kind {
            ObservationKind::RelativePosition => Observation::RelativePosition(sim_relative_position(s, GEL_A)?),
            ObservationKind::SqueezedArea => {
                Observation::SqueezedArea(sim_squeezed_area(s, GEL_A, raster, s.config.depth_threshold())?)
            }
            ObservationKind::ObjectContour => Observation::ObjectContour(sim_object_contour(s, GEL_A, raster)?),
        };
        let mut v = observation_vector(&obs, self.pooled)?;
        if let Observation::RelativePosition(_) = obs {
            v.iter_mut().for_each(|x| *x /= self.position_scale);
        }
        Ok(v)
    }
}

impl Environment for TactileEnv {
    fn observation_dim(&self) -> usize {
        encoded_len(self.task.observation_kind, self.pooled)
    }

    fn action_dim(&self) -> usize {
        3
    }

    fn action_limit(&self) -> f64 {
        self.scene.action_limit
    }

    fn episode_length(&self) -> usize {
        self.task.episode_length
    }

    fn reset(&mut self, seed: u64) -> Result<Vec<f64>> {
        let state = env_reset(&self.scene, seed)?;
        self.ctx = RewardContext::at_reset(&self.task, &state);
        self.state = Some(state);
        self.observe()
    }

    fn step(&mut self, action: &[f64]) -> Result<Step> {
        check_action(self, action)?;
        let state = self.state.as_mut().ok_or(Error::EpisodeOver(0))?;
        let v = Vec3::from_column_slice(action);
        env_step(state, &Action([v, Vec3::zeros()]))?;
        let reward = task_reward(&self.task, &self.ctx, state);
        let truncated = state.is_done();
        Ok(Step {
            observation: self.observe()?,
            reward,
            terminal: false,
            truncated,
        })
    }

    fn expert_action(&self) -> Option<Vec<f64>> {
        let traj = self.expert.as_ref()?;
        let state = self.state.as_ref()?;
        if !matches!(self.task.kind, TaskKind::Cylinder | TaskKind::Sphere) {
            return None;
        }
        let a = expert_velocity(traj, state.step_index, state)
            .ok()?
            .clipped(self.scene.action_limit);
        Some(a.0[GEL_A].iter().copied().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toy_expert_reaches_target() {
        let mut env = ToySqueezeEnv::default();
        env.reset(7).unwrap();
        let mut last = f64::NEG_INFINITY;
        for _ in 0..env.episode_length {
            let a = env.expert_action().unwrap();
            last = env.step(&a).unwrap().reward;
        }
        assert!(last > -1e-12);
        assert!(matches!(env.step(&[0.0]), Err(Error::EpisodeOver(_))));
    }

    #[test]
    fn toy_rejects_wrong_action_len() {
        let mut env = ToySqueezeEnv::default();
        env.reset(0).unwrap();
        assert!(matches!(env.step(&[0.0, 1.0]), Err(Error::Dimension { .. })));
    }

    #[test]
    fn relative_positions_are_divided_by_the_scale() {
        let cfg = crate::config::RunConfig::desk_cylinder();
        let mut raw = cfg.make_tactile_env().unwrap();
        raw.position_scale = 1.0;
        let mut scaled = cfg.make_tactile_env().unwrap();
        let a = raw.reset(3).unwrap();
        let b = scaled.reset(3).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x / cfg.position_scale - y).abs() <= 1e-12 * y.abs().max(1.0));
        }
    }
}
