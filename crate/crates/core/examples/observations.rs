//! Press the upper gel onto the object and read the three observations.

use gelsim::config::RunConfig;
use gelsim::mpm::Vec3;
use gelsim::observations::{sim_object_contour, sim_relative_position, sim_squeezed_area};
use gelsim::scene::{env_reset, env_step, Action, GEL_A};

fn main() -> gelsim::Result<()> {
    let cfg = RunConfig::preset("desk_cylinder")?;
    let mut state = env_reset(&cfg.scene, 0)?;
    let press = Action([Vec3::new(0.0, 0.0, -1.0), Vec3::zeros()]);
    for _ in 0..20 {
        env_step(&mut state, &press)?;
    }
    let raster = state.config.raster;
    let rp = sim_relative_position(&state, GEL_A)?;
    let squeezed = sim_squeezed_area(&state, GEL_A, raster, state.config.depth_threshold())?;
    let contour = sim_object_contour(&state, GEL_A, raster)?;
    println!("sensor {:?} object {:?}", rp.sensor_mid, rp.object_mid);
    println!("squeezed pixels {} of {}", squeezed.count(), raster * raster);
    for r in (0..contour.height).step_by(4) {
        let row: String = (0..contour.width)
            .step_by(2)
            .map(|c| match contour.get(r, c) {
                1 => '#',
                -1 => '.',
                _ => ' ',
            })
            .collect();
        println!("{row}");
    }
    Ok(())
}
