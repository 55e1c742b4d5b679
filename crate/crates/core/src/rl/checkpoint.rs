use std::path::Path;

use super::mlp::{param_count, Mlp, OutputActivation};
use super::td3::{Strategy, Td3Agent, Td3Config};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"GELTD3CK";
pub const VERSION: u32 = 1;

/// Trained networks plus the strategy that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub strategy: Strategy,
    pub actor: Mlp,
    pub actor_target: Mlp,
    pub critics: [Mlp; 2],
    pub critic_targets: [Mlp; 2],
}

impl Checkpoint {
    pub fn from_agent(agent: &Td3Agent, strategy: Strategy) -> Self {
        Self {
            strategy,
            actor: agent.actor.clone(),
            actor_target: agent.actor_target.clone(),
            critics: agent.critics.clone(),
            critic_targets: agent.critic_targets.clone(),
        }
    }

    /// Agent with fresh optimizer state around the stored networks.
    pub fn to_agent(&self, cfg: &Td3Config) -> Td3Agent {
        let mut agent = Td3Agent::from_networks(self.actor.clone(), self.critics.clone(), cfg);
        agent.actor_target = self.actor_target.clone();
        agent.critic_targets = self.critic_targets.clone();
        agent
    }

    fn nets(&self) -> [&Mlp; 5] {
        [
            &self.actor,
            &self.actor_target,
            &self.critics[0],
            &self.critics[1],
            &self.critic_targets[0],
        ]
    }
}

fn strategy_tag(s: Strategy) -> u8 {
    Strategy::ALL.iter().position(|&k| k == s).unwrap_or(0) as u8
}

fn put_net(out: &mut Vec<u8>, net: &Mlp) {
    out.extend((net.widths.len() as u32).to_le_bytes());
    for &w in &net.widths {
        out.extend((w as u32).to_le_bytes());
    }
    match net.output {
        OutputActivation::Linear => {
            out.push(0);
            out.extend(0f64.to_le_bytes());
        }
        OutputActivation::ScaledTanh(limit) => {
            out.push(1);
            out.extend(limit.to_le_bytes());
        }
    }
    out.extend((net.params.len() as u64).to_le_bytes());
    for p in &net.params {
        out.extend(p.to_le_bytes());
    }
}

/// Serializes: magic, `u32` version, strategy byte, then six networks, each as
/// `u32` layer count, `u32` widths, activation byte and `f64` limit, `u64`
/// parameter count and little-endian `f64` parameters.
pub fn save_checkpoint(ck: &Checkpoint) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend(MAGIC);
    out.extend(VERSION.to_le_bytes());
    out.push(strategy_tag(ck.strategy));
    for net in ck.nets() {
        put_net(&mut out, net);
    }
    put_net(&mut out, &ck.critic_targets[1]);
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::CorruptCheckpoint(format!("truncated at byte {} (need {n} more)", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn net(&mut self) -> Result<Mlp> {
        let layers = self.u32()? as usize;
        if !(2..=64).contains(&layers) {
            return Err(Error::CorruptCheckpoint(format!("implausible layer count {layers}")));
        }
        let widths = (0..layers)
            .map(|_| self.u32().map(|w| w as usize))
            .collect::<Result<Vec<_>>>()?;
        let output = match (self.u8()?, self.f64()?) {
            (0, _) => OutputActivation::Linear,
            (1, limit) => OutputActivation::ScaledTanh(limit),
            (tag, _) => return Err(Error::CorruptCheckpoint(format!("unknown activation tag {tag}"))),
        };
        let count = self.u64()? as usize;
        if count != param_count(&widths) {
            return Err(Error::CorruptCheckpoint(format!(
                "parameter count {count} does not match widths {widths:?}"
            )));
        }
        let params = (0..count).map(|_| self.f64()).collect::<Result<Vec<_>>>()?;
        Ok(Mlp { widths, output, params })
    }
}

pub fn load_checkpoint(bytes: &[u8]) -> Result<Checkpoint> {
    let mut r = Reader { bytes, pos: 0 };
    let magic = r
        .take(MAGIC.len())
        .map_err(|_| Error::CheckpointVersion("file too short for a header".into()))?;
    if magic != MAGIC {
        return Err(Error::CheckpointVersion("missing checkpoint magic header".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::CheckpointVersion(format!(
            "version {version}, expected {VERSION}"
        )));
    }
    let tag = r.u8()? as usize;
    let strategy = *Strategy::ALL
        .get(tag)
        .ok_or_else(|| Error::CorruptCheckpoint(format!("unknown strategy tag {tag}")))?;
    let actor = r.net()?;
    let actor_target = r.net()?;
    let critics = [r.net()?, r.net()?];
    let critic_targets = [r.net()?, r.net()?];
    if r.pos != bytes.len() {
        return Err(Error::CorruptCheckpoint(format!(
            "{} trailing bytes",
            bytes.len() - r.pos
        )));
    }
    Ok(Checkpoint {
        strategy,
        actor,
        actor_target,
        critics,
        critic_targets,
    })
}

pub fn write_checkpoint(path: &Path, ck: &Checkpoint) -> Result<()> {
    std::fs::write(path, save_checkpoint(ck)).map_err(|e| Error::io(path, e))
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    load_checkpoint(&std::fs::read(path).map_err(|e| Error::io(path, e))?)
}
