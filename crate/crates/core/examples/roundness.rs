//! Roundness of a few cross-sections and the success check against the baselines.

use std::f64::consts::TAU;

use gelsim::tasks::{baseline_roundness, roundness, success_check, Face, TaskKind};

fn main() -> gelsim::Result<()> {
    let circle: Vec<[f64; 2]> = (0..360)
        .map(|k| [(k as f64 * TAU / 360.0).cos(), (k as f64 * TAU / 360.0).sin()])
        .collect();
    let ellipse: Vec<[f64; 2]> = circle.iter().map(|[x, y]| [1.2 * x, 0.9 * y]).collect();
    let square = [
        [0.0, 0.0],
        [0.5, 0.0],
        [1.0, 0.0],
        [1.0, 0.5],
        [1.0, 1.0],
        [0.5, 1.0],
        [0.0, 1.0],
        [0.0, 0.5],
    ];
    let baseline = baseline_roundness(TaskKind::Cylinder, Face::Front).expect("cylinder baseline");
    for (name, pts) in [
        ("circle", &circle[..]),
        ("ellipse", &ellipse[..]),
        ("square", &square[..]),
    ] {
        let r = roundness(pts)?;
        println!("{name:<8} {r:.5} success {}", success_check(r, baseline, 0.05));
    }
    Ok(())
}
