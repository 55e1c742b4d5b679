//! Segmentation of real tactile RGB images into the three observations.

use image::RgbImage;

use super::masks::{BinaryMask, TernaryMask};
use crate::error::{Error, Result};

/// Largest Sobel magnitude on a unit-range image, used to normalize to [0, 1].
const SOBEL_MAX: f64 = 4.0 * std::f64::consts::SQRT_2;

#[derive(Debug, Clone, PartialEq)]
pub struct Segmentation {
    /// Object silhouette.
    pub object: BinaryMask,
    /// Squeezed area, always inside `object`.
    pub squeezed: BinaryMask,
    pub contour: TernaryMask,
    /// Mean `(X2, Y2)` = (column, row) of the object pixels.
    pub centroid: (f64, f64),
    pub mean_color: [f64; 3],
}

fn luminance(px: &image::Rgb<u8>) -> f64 {
    let [r, g, b] = px.0;
    (0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64) / 255.0
}

/// Sobel gradient magnitude of the luminance channel in [0, 1], with
/// replicated borders. Row-major.
pub fn luminance_gradient(img: &RgbImage) -> Vec<f64> {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let lum: Vec<f64> = img.pixels().map(luminance).collect();
    let at = |r: isize, c: isize| -> f64 {
        let r = r.clamp(0, h as isize - 1) as usize;
        let c = c.clamp(0, w as isize - 1) as usize;
        lum[r * w + c]
    };
    let mut out = Vec::with_capacity(w * h);
    for r in 0..h as isize {
        for c in 0..w as isize {
            let gx = (at(r - 1, c + 1) + 2.0 * at(r, c + 1) + at(r + 1, c + 1))
                - (at(r - 1, c - 1) + 2.0 * at(r, c - 1) + at(r + 1, c - 1));
            let gy = (at(r + 1, c - 1) + 2.0 * at(r + 1, c) + at(r + 1, c + 1))
                - (at(r - 1, c - 1) + 2.0 * at(r - 1, c) + at(r - 1, c + 1));
            out.push((gx * gx + gy * gy).sqrt() / SOBEL_MAX);
        }
    }
    out
}

/// Object mask from the gradient, squeezed mask from colors brighter than the
/// object's mean color, and their ternary combination.
///
/// A pixel of the object is left out of the squeezed area only when every
/// channel is at most `mean + threshold2`.
pub fn segment_tactile_image(img: &RgbImage, threshold1: f64, threshold2: f64) -> Result<Segmentation> {
    let (w, h) = (img.width() as usize, img.height() as usize);
    if w == 0 || h == 0 {
        return Err(Error::Image("empty image".into()));
    }
    let grad = luminance_gradient(img);
    let object = BinaryMask {
        width: w,
        height: h,
        data: grad.iter().map(|&g| (g > threshold1) as u8).collect(),
    };
    let n = object.count();
    if n == 0 {
        return Err(Error::NoObject);
    }
    let mut sum = [0.0f64; 3];
    let (mut sx, mut sy) = (0.0, 0.0);
    for (c, r) in object.pixels() {
        let px = img.get_pixel(c as u32, r as u32).0;
        for k in 0..3 {
            sum[k] += px[k] as f64;
        }
        sx += c as f64;
        sy += r as f64;
    }
    let mean_color = sum.map(|s| s / n as f64);
    let mut squeezed = BinaryMask::new(w, h);
    for (c, r) in object.pixels() {
        let px = img.get_pixel(c as u32, r as u32).0;
        let within = (0..3).all(|k| px[k] as f64 <= mean_color[k] + threshold2);
        squeezed.set(r, c, !within);
    }
    let contour = TernaryMask::compose(&object, &squeezed);
    Ok(Segmentation {
        object,
        squeezed,
        contour,
        centroid: (sx / n as f64, sy / n as f64),
        mean_color,
    })
}

/// Renders an image whose segmentation is `object` and `squeezed` for
/// `threshold1 <= 0.08` and `threshold2` between about 50 and 100. Outside the
/// object and on its one-pixel boundary ring the image is black, so the
/// gradient vanishes off the object. Inside, columns alternate in pairs
/// between two luminance levels; squeezed pixels keep the luminance but move
/// it into a saturated blue channel. Squeezed pixels on the ring are lost, and
/// `object` should be a union of 3x3 squares so every pixel borders the interior.
pub fn synthetic_tactile_image(object: &BinaryMask, squeezed: &BinaryMask) -> RgbImage {
    let (w, h) = (object.width, object.height);
    let inside = |r: isize, c: isize| {
        r >= 0 && c >= 0 && (r as usize) < h && (c as usize) < w && object.get(r as usize, c as usize) > 0
    };
    RgbImage::from_fn(w as u32, h as u32, |x, y| {
        let (r, c) = (y as isize, x as isize);
        let interior = (-1..=1).all(|dr| (-1..=1).all(|dc| inside(r + dr, c + dc)));
        let high = (x / 2) % 2 == 1;
        match (interior, squeezed.get(y as usize, x as usize) > 0, high) {
            (false, _, _) => image::Rgb([0, 0, 0]),
            (true, false, false) => image::Rgb([110, 110, 110]),
            (true, false, true) => image::Rgb([160, 160, 160]),
            (true, true, false) => image::Rgb([91, 91, 255]),
            (true, true, true) => image::Rgb([148, 148, 255]),
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_image_has_no_object() {
        let img = RgbImage::from_pixel(20, 20, image::Rgb([90, 40, 200]));
        assert!(luminance_gradient(&img).iter().all(|&g| g == 0.0));
        assert!(matches!(segment_tactile_image(&img, 0.08, 12.0), Err(Error::NoObject)));
    }

    #[test]
    fn symmetric_blob_centroid() {
        let img = RgbImage::from_fn(41, 31, |x, y| {
            let (dx, dy) = (x as f64 - 20.0, y as f64 - 15.0);
            if dx * dx + dy * dy <= 36.0 {
                image::Rgb([250, 250, 250])
            } else {
                image::Rgb([0, 0, 0])
            }
        });
        let s = segment_tactile_image(&img, 0.08, 12.0).unwrap();
        assert!((s.centroid.0 - 20.0).abs() <= 0.5);
        assert!((s.centroid.1 - 15.0).abs() <= 0.5);
        assert!(s.squeezed.is_subset_of(&s.object));
    }
}
