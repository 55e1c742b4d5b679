//! Save a freshly initialized agent and load it back.

use gelsim::config::RunConfig;
use gelsim::rl::{load_checkpoint, save_checkpoint, Checkpoint, Strategy, Td3Agent};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> gelsim::Result<()> {
    let cfg = RunConfig::preset("desk_cylinder")?;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let agent = Td3Agent::new(5, 3, 2.0, &cfg.td3, &mut rng);
    let bytes = save_checkpoint(&Checkpoint::from_agent(&agent, Strategy::Td3));
    let back = load_checkpoint(&bytes)?.to_agent(&cfg.td3);
    let obs = [0.0, 0.0, -0.05, 0.01, 0.0];
    println!("{} bytes", bytes.len());
    println!("before {:?}", agent.act(&obs)?);
    println!("after  {:?}", back.act(&obs)?);
    Ok(())
}
