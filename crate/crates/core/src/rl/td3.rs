use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::mlp::{Adam, Mlp, OutputActivation};
use super::replay::Transition;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Td3,
    Pretraining,
    Multitask,
    /// Replays the expert trajectory without learning.
    Baseline,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [
        Strategy::Td3,
        Strategy::Pretraining,
        Strategy::Multitask,
        Strategy::Baseline,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Td3 => "td3",
            Strategy::Pretraining => "pretraining",
            Strategy::Multitask => "multitask",
            Strategy::Baseline => "baseline",
        }
    }

    pub fn needs_expert(self) -> bool {
        !matches!(self, Strategy::Td3)
    }

    /// Weights of the critic term and the expert term of the actor loss in episode `i`.
    pub fn loss_weights(self, i: usize, imax: usize) -> (f64, f64) {
        match self {
            Strategy::Td3 | Strategy::Baseline => (1.0, 0.0),
            Strategy::Pretraining if 2 * i <= imax => (0.0, 1.0),
            Strategy::Pretraining => (1.0, 0.0),
            Strategy::Multitask => {
                let w = i as f64 / imax as f64;
                (w, 1.0 - w)
            }
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown strategy {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Td3Config {
    pub gamma: f64,
    pub tau: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub policy_delay: usize,
    /// Standard deviations and clip are fractions of the action limit.
    pub exploration_noise_std: f64,
    pub target_noise_std: f64,
    pub target_noise_clip: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    /// Training episodes.
    pub imax: usize,
    pub strategy: Strategy,
    pub hidden: Vec<usize>,
    /// Uniform random actions before the policy takes over.
    pub warmup_steps: usize,
    pub eval_interval: usize,
    pub eval_envs: usize,
    /// Trailing steps averaged per evaluation episode; `None` uses the whole episode.
    pub eval_window: Option<usize>,
    pub eval_seed_base: u64,
}

impl Default for Td3Config {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            tau: 0.005,
            actor_lr: 3e-4,
            critic_lr: 3e-4,
            policy_delay: 2,
            exploration_noise_std: 0.1,
            target_noise_std: 0.2,
            target_noise_clip: 0.5,
            batch_size: 64,
            buffer_capacity: 100_000,
            imax: 400,
            strategy: Strategy::Td3,
            hidden: vec![64, 64],
            warmup_steps: 0,
            eval_interval: 10,
            eval_envs: 10,
            eval_window: None,
            eval_seed_base: 1_000_000,
        }
    }
}

impl Td3Config {
    pub fn validate(&self) -> Result<()> {
        let rates = [self.tau, self.actor_lr, self.critic_lr];
        if !(0.0..1.0).contains(&self.gamma) || rates.iter().any(|r| !(*r > 0.0)) || self.tau > 1.0 {
            return Err(Error::Config(format!(
                "td3 rates out of range: gamma={} tau={} actor_lr={} critic_lr={}",
                self.gamma, self.tau, self.actor_lr, self.critic_lr
            )));
        }
        if self.policy_delay == 0 || self.batch_size == 0 || self.buffer_capacity == 0 || self.imax == 0 {
            return Err(Error::Config(
                "policy_delay, batch_size, buffer_capacity and imax must be positive".into(),
            ));
        }
        if self.eval_interval == 0 || self.eval_envs == 0 || self.eval_window == Some(0) {
            return Err(Error::Config(
                "eval_interval, eval_envs and eval_window must be positive".into(),
            ));
        }
        if [
            self.exploration_noise_std,
            self.target_noise_std,
            self.target_noise_clip,
        ]
        .iter()
        .any(|n| *n < 0.0)
        {
            return Err(Error::Config("noise scales must be non-negative".into()));
        }
        Ok(())
    }
}

/// Actor, twin critics, their targets and optimizers.
#[derive(Debug, Clone)]
pub struct Td3Agent {
    pub actor: Mlp,
    pub actor_target: Mlp,
    pub critics: [Mlp; 2],
    pub critic_targets: [Mlp; 2],
    pub actor_opt: Adam,
    pub critic_opts: [Adam; 2],
    pub action_limit: f64,
    pub critic_updates: usize,
}

fn widths(input: usize, hidden: &[usize], output: usize) -> Vec<usize> {
    let mut w = vec![input];
    w.extend_from_slice(hidden);
    w.push(output);
    w
}

fn concat(s: &[f64], a: &[f64]) -> Vec<f64> {
    let mut x = Vec::with_capacity(s.len() + a.len());
    x.extend_from_slice(s);
    x.extend_from_slice(a);
    x
}

impl Td3Agent {
    pub fn new(obs_dim: usize, action_dim: usize, action_limit: f64, cfg: &Td3Config, rng: &mut impl Rng) -> Self {
        let actor = Mlp::new(
            &widths(obs_dim, &cfg.hidden, action_dim),
            OutputActivation::ScaledTanh(action_limit),
            rng,
        );
        let cw = widths(obs_dim + action_dim, &cfg.hidden, 1);
        let critics = [
            Mlp::new(&cw, OutputActivation::Linear, rng),
            Mlp::new(&cw, OutputActivation::Linear, rng),
        ];
        Self::from_networks(actor, critics, cfg)
    }

    pub fn from_networks(actor: Mlp, critics: [Mlp; 2], cfg: &Td3Config) -> Self {
        let action_limit = match actor.output {
            OutputActivation::ScaledTanh(l) => l,
            OutputActivation::Linear => f64::INFINITY,
        };
        Self {
            actor_target: actor.clone(),
            critic_targets: critics.clone(),
            actor_opt: Adam::new(actor.params.len(), cfg.actor_lr),
            critic_opts: [
                Adam::new(critics[0].params.len(), cfg.critic_lr),
                Adam::new(critics[1].params.len(), cfg.critic_lr),
            ],
            actor,
            critics,
            action_limit,
            critic_updates: 0,
        }
    }

    pub fn obs_dim(&self) -> usize {
        self.actor.input_dim()
    }

    pub fn action_dim(&self) -> usize {
        self.actor.output_dim()
    }

    pub fn act(&self, obs: &[f64]) -> Result<Vec<f64>> {
        self.actor.forward(obs)
    }

    /// Policy action plus Gaussian exploration noise, clipped to the limit.
    pub fn explore(&self, obs: &[f64], noise_std: f64, rng: &mut impl Rng) -> Result<Vec<f64>> {
        let mut a = self.act(obs)?;
        if noise_std > 0.0 {
            let n = Normal::new(0.0, noise_std * self.action_limit).map_err(|e| Error::Config(e.to_string()))?;
            for v in &mut a {
                *v = (*v + n.sample(rng)).clamp(-self.action_limit, self.action_limit);
            }
        }
        Ok(a)
    }

    pub fn q(&self, k: usize, s: &[f64], a: &[f64]) -> Result<f64> {
        Ok(self.critics[k].forward(&concat(s, a))?[0])
    }

    /// Bootstrapped regression targets `r + gamma (1 - done) min(Q1', Q2')(s', A'(s') + eps)`.
    pub fn critic_targets(&self, batch: &[&Transition], cfg: &Td3Config, rng: &mut impl Rng) -> Result<Vec<f64>> {
        let limit = self.action_limit;
        let std = cfg.target_noise_std * limit;
        let clip = cfg.target_noise_clip * limit;
        let normal = if std > 0.0 {
            Some(Normal::new(0.0, std).map_err(|e| Error::Config(e.to_string()))?)
        } else {
            None
        };
        batch
            .iter()
            .map(|t| {
                let mut a = self.actor_target.forward(&t.next_state)?;
                for v in &mut a {
                    let eps = normal.map_or(0.0, |n| n.sample(rng).clamp(-clip, clip));
                    *v = (*v + eps).clamp(-limit, limit);
                }
                let x = concat(&t.next_state, &a);
                let q1 = self.critic_targets[0].forward(&x)?[0];
                let q2 = self.critic_targets[1].forward(&x)?[0];
                let not_done = if t.done { 0.0 } else { 1.0 };
                Ok(t.reward + cfg.gamma * not_done * q1.min(q2))
            })
            .collect()
    }

    /// One regression step of both critics toward the shared targets, followed by
    /// Polyak mixing of the critic targets. Returns the summed mean squared error.
    pub fn critic_update(&mut self, batch: &[&Transition], cfg: &Td3Config, rng: &mut impl Rng) -> Result<f64> {
        let y = self.critic_targets(batch, cfg, rng)?;
        let inputs: Vec<Vec<f64>> = batch.iter().map(|t| concat(&t.state, &t.action)).collect();
        let n = batch.len() as f64;
        let mut total = 0.0;
        for k in 0..2 {
            let (loss, grad) = self.critics[k].gradient(&inputs, |out| {
                let loss = out.iter().zip(&y).map(|(q, y)| (q[0] - y).powi(2)).sum::<f64>() / n;
                let g = out.iter().zip(&y).map(|(q, y)| vec![2.0 * (q[0] - y) / n]).collect();
                (loss, g)
            })?;
            self.critic_opts[k].step(&mut self.critics[k].params, &grad);
            total += loss;
        }
        for k in 0..2 {
            self.critic_targets[k].polyak_from(&self.critics[k], cfg.tau);
        }
        self.critic_updates += 1;
        Ok(total)
    }

    /// Actor loss for `strategy` in training episode `i` of `imax`, with its
    /// gradient with respect to the actor parameters.
    pub fn actor_objective(
        &self,
        strategy: Strategy,
        i: usize,
        imax: usize,
        states: &[Vec<f64>],
        experts: Option<&[Vec<f64>]>,
    ) -> Result<(f64, Vec<f64>)> {
        let (wa, we) = strategy.loss_weights(i, imax);
        let experts = match (we != 0.0, experts) {
            (true, None) => return Err(Error::MissingExpert(strategy.name().into())),
            (_, e) => e,
        };
        let n = states.len() as f64;
        let d = self.action_dim() as f64;
        let critic = &self.critics[0];
        let mut failure = None;
        let (loss, grad) = self.actor.gradient(states, |actions| {
            let mut la = 0.0;
            let mut le = 0.0;
            let mut grads = vec![vec![0.0; actions.first().map_or(0, Vec::len)]; actions.len()];
            for (k, a) in actions.iter().enumerate() {
                if wa != 0.0 {
                    let x = concat(&states[k], a);
                    match critic.forward_trace(&x) {
                        Ok(trace) => {
                            la -= trace.output()[0] / n;
                            let mut scratch = vec![0.0; critic.params.len()];
                            let gx = critic.backward(&trace, &[1.0], &mut scratch);
                            for (g, dq) in grads[k].iter_mut().zip(&gx[states[k].len()..]) {
                                *g -= wa * dq / n;
                            }
                        }
                        Err(e) => failure = Some(e),
                    }
                }
                if let (true, Some(v)) = (we != 0.0, experts) {
                    for (j, (&aj, &vj)) in a.iter().zip(&v[k]).enumerate() {
                        le += (vj - aj).abs() / (n * d);
                        let s = if vj > aj {
                            -1.0
                        } else if vj < aj {
                            1.0
                        } else {
                            0.0
                        };
                        grads[k][j] += we * s / (n * d);
                    }
                }
            }
            let loss = match (wa != 0.0, we != 0.0) {
                (true, false) => wa * la,
                (false, true) => we * le,
                _ => wa * la + we * le,
            };
            (loss, grads)
        })?;
        if let Some(e) = failure {
            return Err(e);
        }
        Ok((loss, grad))
    }

    pub fn actor_loss(
        &self,
        strategy: Strategy,
        i: usize,
        imax: usize,
        states: &[Vec<f64>],
        experts: Option<&[Vec<f64>]>,
    ) -> Result<f64> {
        Ok(self.actor_objective(strategy, i, imax, states, experts)?.0)
    }

    /// Gradient step on the actor loss, then Polyak mixing of the actor target.
    pub fn actor_update(
        &mut self,
        strategy: Strategy,
        i: usize,
        imax: usize,
        batch: &[&Transition],
        cfg: &Td3Config,
    ) -> Result<f64> {
        let states: Vec<Vec<f64>> = batch.iter().map(|t| t.state.clone()).collect();
        let experts: Option<Vec<Vec<f64>>> = batch.iter().map(|t| t.expert.clone()).collect();
        let (loss, grad) = self.actor_objective(strategy, i, imax, &states, experts.as_deref())?;
        self.actor_opt.step(&mut self.actor.params, &grad);
        self.actor_target.polyak_from(&self.actor, cfg.tau);
        Ok(loss)
    }
}

/// Critic-only term `-mean Q1(s, A(s))`.
pub fn critic_term(agent: &Td3Agent, states: &[Vec<f64>]) -> Result<f64> {
    let n = states.len() as f64;
    let mut total = 0.0;
    for s in states {
        let a = agent.act(s)?;
        total -= agent.q(0, s, &a)? / n;
    }
    Ok(total)
}

/// Expert term `mean |v_s - A(s)|` over samples and action components.
pub fn expert_term(agent: &Td3Agent, states: &[Vec<f64>], experts: &[Vec<f64>]) -> Result<f64> {
    let n = (states.len() * agent.action_dim()) as f64;
    let mut total = 0.0;
    for (s, v) in states.iter().zip(experts) {
        let a = agent.act(s)?;
        total += a.iter().zip(v).map(|(a, v)| (v - a).abs()).sum::<f64>() / n;
    }
    Ok(total)
}
