//! TD3 with expert-demonstration strategies, written from scratch on small MLPs.

mod checkpoint;
mod env;
mod mlp;
mod replay;
mod td3;
mod train;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, Checkpoint};
pub use env::{Environment, Step, TactileEnv, ToySqueezeEnv};
pub use mlp::{param_count, Adam, Mlp, OutputActivation, Trace};
pub use replay::{ReplayBuffer, Transition};
pub use td3::{critic_term, expert_term, Strategy, Td3Agent, Td3Config};
pub use train::{
    eval_seeds, evaluate, mean_std, rollout, stream_rng, trailing_mean, train, CurvePoint, EnvFactory, Evaluation,
    LearningCurve, Policy, Stream, TrainOutcome, CURVE_CSV_HEADER,
};
