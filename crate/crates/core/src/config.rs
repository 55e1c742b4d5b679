//! Run configuration shared by the command-line verbs, with desk-scale presets.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mpm::{Material, SubstepConfig};
use crate::observations::ObservationKind;
use crate::press::PressConfig;
use crate::rl::{Environment, TactileEnv, Td3Config, ToySqueezeEnv};
use crate::scene::SceneConfig;
use crate::tasks::{ExpertTrajectory, TaskKind, TaskSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvKind {
    Tactile,
    ToySqueeze,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub environment: EnvKind,
    pub scene: SceneConfig,
    pub task: TaskSpec,
    pub td3: Td3Config,
    pub expert: Option<ExpertTrajectory>,
    pub press: PressConfig,
    /// Side of the pooled grid for mask observations.
    pub pooled: usize,
    /// Relative positions are divided by this length before reaching the networks.
    pub position_scale: f64,
    pub roundness_margin: f64,
    pub output_dir: PathBuf,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::desk_cylinder()
    }
}

/// Ceiling of `len * num / den`.
pub fn scaled_window(len: usize, num: usize, den: usize) -> usize {
    (len * num).div_ceil(den)
}

impl RunConfig {
    /// 32^3 grid, soft elastoplastic cube between a moving and a static gel.
    pub fn desk_scene() -> SceneConfig {
        SceneConfig {
            grid_resolution: 32,
            substep: SubstepConfig {
                dt: 5e-4,
                ..SubstepConfig::default()
            },
            particle_spacing: 1.0 / 40.0,
            object_material: Material::new(400.0, 0.3, 20.0, 1.0).expect("valid desk material"),
            gel_size: [0.3, 0.3, 0.09],
            backing_layers: 1,
            action_limit: 2.0,
            substeps_per_env_step: 6,
            depth_threshold: Some(0.004),
            travel_limit: Some([0.1, 0.1, 0.15]),
            ..SceneConfig::default()
        }
    }

    pub fn desk_cylinder() -> Self {
        let episode_length = 100;
        Self {
            environment: EnvKind::Tactile,
            scene: Self::desk_scene(),
            task: TaskSpec {
                kind: TaskKind::Cylinder,
                target: None,
                episode_length,
                observation_kind: ObservationKind::RelativePosition,
                cylinder_plane: (0, 2),
            },
            td3: Td3Config {
                imax: 50,
                eval_window: Some(scaled_window(episode_length, 130, 400)),
                ..Td3Config::default()
            },
            expert: Some(ExpertTrajectory {
                kind: TaskKind::Cylinder,
                period: 20,
                amplitude: 0.01,
                radius: 0.03,
                press_depth: 0.06,
            }),
            press: PressConfig::default(),
            pooled: 16,
            position_scale: 0.05,
            roundness_margin: 0.05,
            output_dir: PathBuf::from("out"),
            seed: 0,
        }
    }

    pub fn desk_sphere() -> Self {
        let mut c = Self::desk_cylinder();
        c.task.kind = TaskKind::Sphere;
        c.td3.eval_window = Some(scaled_window(c.task.episode_length, 90, 400));
        c.expert = Some(ExpertTrajectory {
            kind: TaskKind::Sphere,
            period: 20,
            amplitude: 0.01,
            radius: 0.02,
            press_depth: 0.06,
        });
        c
    }

    pub fn toy_squeeze() -> Self {
        let mut c = Self::desk_cylinder();
        c.environment = EnvKind::ToySqueeze;
        c.task = TaskSpec {
            kind: TaskKind::Squeeze,
            target: Some(crate::tasks::TaskTarget::Thickness(0.4)),
            episode_length: 50,
            observation_kind: ObservationKind::RelativePosition,
            cylinder_plane: (0, 2),
        };
        c.td3 = Td3Config {
            imax: 50,
            gamma: 0.9,
            tau: 0.05,
            critic_lr: 3e-3,
            hidden: vec![32, 32],
            batch_size: 32,
            ..Td3Config::default()
        };
        c.expert = None;
        c
    }

    /// Press-hold-release study scene: full-size gels and a 0.2 cube at 1/96 spacing.
    pub fn press_demo() -> Self {
        let mut c = Self::desk_cylinder();
        c.scene = SceneConfig {
            particle_spacing: 1.0 / 96.0,
            ..SceneConfig::default()
        };
        c
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "desk_cylinder" => Ok(Self::desk_cylinder()),
            "desk_sphere" => Ok(Self::desk_sphere()),
            "toy_squeeze" => Ok(Self::toy_squeeze()),
            "press_demo" => Ok(Self::press_demo()),
            _ => Err(Error::Config(format!("unknown preset {name:?}"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.td3.validate()?;
        if !(self.position_scale > 0.0) {
            return Err(Error::Config(format!(
                "position_scale must be positive, got {}",
                self.position_scale
            )));
        }
        if self.environment == EnvKind::Tactile {
            self.scene.validate()?;
            self.task.validate()?;
            if let Some(e) = &self.expert {
                e.validate()?;
                if e.kind != self.task.kind {
                    return Err(Error::Config(format!(
                        "expert kind {} does not match task {}",
                        e.kind, self.task.kind
                    )));
                }
            }
        }
        if self.td3.strategy.needs_expert() && self.expert.is_none() && self.environment == EnvKind::Tactile {
            return Err(Error::MissingExpert(self.td3.strategy.name().into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads and validates a JSON config; parse errors carry the path, line and column.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: Self = serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn make_tactile_env(&self) -> Result<TactileEnv> {
        let mut env = TactileEnv::new(self.scene.clone(), self.task.clone(), self.expert.clone(), self.pooled)?;
        env.position_scale = self.position_scale;
        Ok(env)
    }

    pub fn make_env(&self) -> Result<Box<dyn Environment>> {
        Ok(match self.environment {
            EnvKind::Tactile => Box::new(self.make_tactile_env()?),
            EnvKind::ToySqueeze => Box::new(ToySqueezeEnv::new(self.task.episode_length)),
        })
    }
}
