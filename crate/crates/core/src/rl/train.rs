use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::env::Environment;
use super::replay::{ReplayBuffer, Transition};
use super::td3::{Strategy, Td3Agent, Td3Config};
use crate::error::{Error, Result};

/// Builds a fresh environment; every call must yield an identical environment.
pub type EnvFactory<'a> = dyn Fn() -> Result<Box<dyn Environment>> + 'a;

/// Named random sub-streams derived from the run seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Init = 1,
    Scene = 2,
    Exploration = 3,
    Replay = 4,
    TargetNoise = 5,
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub episode: usize,
    pub mean_reward: f64,
    pub std_reward: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LearningCurve {
    pub points: Vec<CurvePoint>,
}

pub const CURVE_CSV_HEADER: &str = "episode,mean_reward,std_reward";

impl LearningCurve {
    pub fn push(&mut self, p: CurvePoint) {
        debug_assert!(self.points.last().map_or(true, |q| q.episode < p.episode));
        self.points.push(p);
    }

    pub fn first(&self) -> Option<&CurvePoint> {
        self.points.first()
    }

    pub fn last(&self) -> Option<&CurvePoint> {
        self.points.last()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(CURVE_CSV_HEADER);
        s.push('\n');
        for p in &self.points {
            let _ = writeln!(s, "{},{:e},{:e}", p.episode, p.mean_reward, p.std_reward);
        }
        s
    }
}

/// Policy used for evaluation rollouts.
#[derive(Debug, Clone, Copy)]
pub enum Policy<'a> {
    Actor(&'a Td3Agent),
    Expert,
}

impl Policy<'_> {
    fn action(&self, env: &dyn Environment, obs: &[f64]) -> Result<Vec<f64>> {
        match self {
            Policy::Actor(agent) => agent.act(obs),
            Policy::Expert => env
                .expert_action()
                .ok_or_else(|| Error::MissingExpert("environment".into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub mean: f64,
    pub std: f64,
    pub seeds: Vec<u64>,
    /// Trailing-window mean reward of each seeded episode.
    pub per_seed: Vec<f64>,
}

pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Mean of the last `window` entries (all entries when `None` or too long).
pub fn trailing_mean(rewards: &[f64], window: Option<usize>) -> f64 {
    let w = window.unwrap_or(rewards.len()).min(rewards.len());
    rewards[rewards.len() - w..].iter().sum::<f64>() / w as f64
}

/// Runs one deterministic episode and returns the reward of every step.
pub fn rollout(env: &mut dyn Environment, policy: Policy<'_>, seed: u64) -> Result<Vec<f64>> {
    let mut obs = env.reset(seed)?;
    if let Policy::Actor(agent) = policy {
        if agent.obs_dim() != env.observation_dim() {
            return Err(Error::Dimension {
                expected: env.observation_dim(),
                got: agent.obs_dim(),
            });
        }
    }
    let mut rewards = Vec::with_capacity(env.episode_length());
    for _ in 0..env.episode_length() {
        let a = policy.action(env, &obs)?;
        let step = env.step(&a)?;
        rewards.push(step.reward);
        obs = step.observation;
        if step.terminal {
            break;
        }
    }
    Ok(rewards)
}

/// Scores `policy` on `seeds`, one fresh environment each, averaging each
/// episode's rewards over its trailing `window` steps.
pub fn evaluate(
    policy: Policy<'_>,
    factory: &EnvFactory<'_>,
    seeds: &[u64],
    window: Option<usize>,
) -> Result<Evaluation> {
    let per_seed = seeds
        .iter()
        .map(|&seed| {
            let mut env = factory()?;
            Ok(trailing_mean(&rollout(env.as_mut(), policy, seed)?, window))
        })
        .collect::<Result<Vec<f64>>>()?;
    let (mean, std) = mean_std(&per_seed);
    Ok(Evaluation {
        mean,
        std,
        seeds: seeds.to_vec(),
        per_seed,
    })
}

pub fn eval_seeds(cfg: &Td3Config) -> Vec<u64> {
    (0..cfg.eval_envs as u64).map(|k| cfg.eval_seed_base + k).collect()
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub curve: LearningCurve,
    pub agent: Td3Agent,
    pub strategy: Strategy,
}

fn check_finite(loss: f64, episode: usize) -> Result<()> {
    if loss.is_finite() {
        Ok(())
    } else {
        Err(Error::Diverged(episode))
    }
}

/// TD3 training with the configured demonstration strategy. Every
/// `eval_interval` episodes the deterministic policy is scored on the fixed
/// evaluation seeds.
pub fn train(factory: &EnvFactory<'_>, cfg: &Td3Config, seed: u64) -> Result<TrainOutcome> {
    cfg.validate()?;
    let mut env = factory()?;
    let mut init = stream_rng(seed, Stream::Init);
    let mut agent = Td3Agent::new(
        env.observation_dim(),
        env.action_dim(),
        env.action_limit(),
        cfg,
        &mut init,
    );
    let mut scene_rng = stream_rng(seed, Stream::Scene);
    let mut explore_rng = stream_rng(seed, Stream::Exploration);
    let mut replay_rng = stream_rng(seed, Stream::Replay);
    let mut noise_rng = stream_rng(seed, Stream::TargetNoise);
    let mut buffer = ReplayBuffer::new(cfg.buffer_capacity);
    let mut curve = LearningCurve::default();
    let seeds = eval_seeds(cfg);
    let limit = env.action_limit();
    let mut steps = 0usize;

    for episode in 1..=cfg.imax {
        if cfg.strategy != Strategy::Baseline {
            let mut obs = env.reset(scene_rng.gen())?;
            for _ in 0..env.episode_length() {
                let expert = env.expert_action();
                if cfg.strategy.needs_expert() && expert.is_none() {
                    return Err(Error::MissingExpert(cfg.strategy.name().into()));
                }
                let action = if steps < cfg.warmup_steps {
                    (0..env.action_dim())
                        .map(|_| explore_rng.gen_range(-limit..=limit))
                        .collect()
                } else {
                    agent.explore(&obs, cfg.exploration_noise_std, &mut explore_rng)?
                };
                let step = env.step(&action)?;
                buffer.push(Transition {
                    state: obs,
                    action,
                    reward: step.reward,
                    next_state: step.observation.clone(),
                    done: step.terminal,
                    expert,
                });
                obs = step.observation;
                steps += 1;
                if buffer.len() >= cfg.batch_size && steps >= cfg.warmup_steps {
                    let batch = buffer.sample(cfg.batch_size, &mut replay_rng);
                    check_finite(agent.critic_update(&batch, cfg, &mut noise_rng)?, episode)?;
                    if agent.critic_updates % cfg.policy_delay == 0 {
                        check_finite(
                            agent.actor_update(cfg.strategy, episode, cfg.imax, &batch, cfg)?,
                            episode,
                        )?;
                    }
                }
                if step.terminal {
                    break;
                }
            }
        }
        if episode % cfg.eval_interval == 0 {
            let policy = if cfg.strategy == Strategy::Baseline {
                Policy::Expert
            } else {
                Policy::Actor(&agent)
            };
            let e = evaluate(policy, factory, &seeds, cfg.eval_window)?;
            if !e.mean.is_finite() {
                return Err(Error::Diverged(episode));
            }
            curve.push(CurvePoint {
                episode,
                mean_reward: e.mean,
                std_reward: e.std,
            });
        }
    }
    Ok(TrainOutcome {
        curve,
        agent,
        strategy: cfg.strategy,
    })
}
