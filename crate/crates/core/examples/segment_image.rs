//! Render a synthetic tactile image and recover its masks and centroid.

use gelsim::observations::{segment_tactile_image, synthetic_tactile_image, BinaryMask};

fn main() -> gelsim::Result<()> {
    let object = BinaryMask::from_fn(64, 48, |r, c| (r as f64 - 24.0).hypot(c as f64 - 30.0) <= 15.0);
    let squeezed = BinaryMask::from_fn(64, 48, |r, c| (r as f64 - 24.0).hypot(c as f64 - 30.0) <= 8.0);
    let img = synthetic_tactile_image(&object, &squeezed);
    let seg = segment_tactile_image(&img, 0.08, 80.0)?;
    println!("object pixels {} (drawn {})", seg.object.count(), object.count());
    println!("squeezed pixels {} (drawn {})", seg.squeezed.count(), squeezed.count());
    println!("centroid X2 {:.2} Y2 {:.2}", seg.centroid.0, seg.centroid.1);
    Ok(())
}
