//! Press-hold-release of a cube for the three yield-stress presets.

use gelsim::config::RunConfig;
use gelsim::mpm::YieldPreset;
use gelsim::press::run_press_demo;

fn main() -> gelsim::Result<()> {
    let cfg = RunConfig::preset("press_demo")?;
    for preset in YieldPreset::ALL {
        let r = run_press_demo(&cfg.scene, &cfg.press, preset.yield_stress())?;
        println!(
            "{:>14} sigma_y={:<8} h0={:.4} pressed={:.4} final={:.4} recovery={:.3} ({} substeps, {:.1}s)",
            preset.name(),
            r.yield_stress,
            r.initial_height,
            r.pressed_height,
            r.final_height,
            r.recovery_ratio,
            r.substeps,
            r.seconds
        );
    }
    Ok(())
}
