//! Train TD3 on the one-dimensional squeeze task and print the learning curve.

use gelsim::config::RunConfig;
use gelsim::rl::train;

fn main() -> gelsim::Result<()> {
    let seed = std::env::args().nth(1).map_or(0, |s| s.parse().expect("seed"));
    let cfg = RunConfig::preset("toy_squeeze")?;
    let factory = || cfg.make_env();
    let out = train(&factory, &cfg.td3, seed)?;
    print!("{}", out.curve.to_csv());
    Ok(())
}
