//! Stretch a material point past yield and project it back onto the yield surface.

use gelsim::mpm::{von_mises_return_map, yield_excess, Material, Svd3};
use nalgebra::{Matrix3, Vector3};

fn hencky(f: &Matrix3<f64>) -> Vector3<f64> {
    Svd3::new(f).sigma.map(f64::ln)
}

fn main() -> gelsim::Result<()> {
    let material = Material::default().with_yield_stress(100.0)?;
    for stretch in [1.0f64, 1.001, 1.01, 1.1, 1.5] {
        let f = Matrix3::from_diagonal(&Vector3::new(stretch, 1.0 / stretch.sqrt(), 1.0 / stretch.sqrt()));
        let g = von_mises_return_map(&f, &material)?;
        println!(
            "stretch {stretch:<6} excess before {:+.3e} after {:+.3e} det {:.6}",
            yield_excess(&hencky(&f), &material),
            yield_excess(&hencky(&g), &material),
            g.determinant()
        );
    }
    Ok(())
}
