//! Score the human-designed rubbing trajectory on the desk cylinder task.

use gelsim::config::RunConfig;
use gelsim::rl::{evaluate, Policy};

fn main() -> gelsim::Result<()> {
    let cfg = RunConfig::preset("desk_cylinder")?;
    let factory = || cfg.make_env();
    let seeds: Vec<u64> = (0..3).map(|k| cfg.td3.eval_seed_base + k).collect();
    let e = evaluate(Policy::Expert, &factory, &seeds, cfg.td3.eval_window)?;
    for (s, r) in e.seeds.iter().zip(&e.per_seed) {
        println!("seed {s}: {r:+.5}");
    }
    println!("mean {:+.5} std {:.5}", e.mean, e.std);
    Ok(())
}
