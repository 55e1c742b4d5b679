use std::fs;
use std::path::{Path, PathBuf};

use gelsim::observations::{encode_pgm, read_pgm, segment_tactile_image, synthetic_tactile_image, BinaryMask};
use gelsim::Error;
use image::{Rgb, RgbImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn fixtures() -> Vec<PathBuf> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/segment");
    let mut dirs: Vec<PathBuf> = fs::read_dir(root).unwrap().map(|e| e.unwrap().path()).collect();
    dirs.sort();
    dirs
}

fn thresholds(dir: &Path) -> (f64, f64) {
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("thresholds.json")).unwrap()).unwrap();
    (v["threshold1"].as_f64().unwrap(), v["threshold2"].as_f64().unwrap())
}

fn mask_from_pgm(path: &Path) -> BinaryMask {
    let img = read_pgm(path).unwrap();
    BinaryMask::from_fn(img.width, img.height, |r, c| img.data[r * img.width + c] > 0)
}

#[test]
fn fixtures_recover_golden_masks_byte_for_byte() {
    let dirs = fixtures();
    assert!(dirs.len() >= 5);
    for dir in dirs {
        let img = image::open(dir.join("image.ppm")).unwrap().to_rgb8();
        let (t1, t2) = thresholds(&dir);
        let s = segment_tactile_image(&img, t1, t2).unwrap();
        let (w, h) = (s.object.width, s.object.height);
        for (name, gray) in [
            ("B1.pgm", s.object.to_gray()),
            ("B2.pgm", s.squeezed.to_gray()),
            ("B3.pgm", s.contour.to_gray()),
        ] {
            let golden = fs::read(dir.join(name)).unwrap();
            assert!(encode_pgm(w, h, &gray) == golden, "{} {name}", dir.display());
        }
    }
}

#[test]
fn fixture_images_are_rendered_from_their_masks() {
    for dir in fixtures() {
        let b1 = mask_from_pgm(&dir.join("B1.pgm"));
        let b2 = mask_from_pgm(&dir.join("B2.pgm"));
        let stored = image::open(dir.join("image.ppm")).unwrap().to_rgb8();
        assert!(synthetic_tactile_image(&b1, &b2) == stored, "{}", dir.display());
    }
}

#[test]
fn squeezed_area_inside_object_on_noise() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for n in 0..100 {
        let (w, h) = (rng.gen_range(8..48), rng.gen_range(8..48));
        let img = RgbImage::from_fn(w, h, |_, _| Rgb([rng.gen(), rng.gen(), rng.gen()]));
        let t1 = rng.gen_range(0.0..0.5);
        let t2 = rng.gen_range(-20.0..40.0);
        match segment_tactile_image(&img, t1, t2) {
            Ok(s) => {
                assert!(s.squeezed.is_subset_of(&s.object), "image {n}");
                for r in 0..h as usize {
                    for c in 0..w as usize {
                        let expected = match (s.object.get(r, c), s.squeezed.get(r, c)) {
                            (0, _) => 0,
                            (_, 0) => 1,
                            _ => -1,
                        };
                        assert_eq!(s.contour.get(r, c), expected);
                    }
                }
            }
            Err(Error::NoObject) => {}
            Err(e) => panic!("image {n}: {e}"),
        }
    }
}

#[test]
fn segmentation_is_idempotent_through_rendering() {
    for dir in fixtures() {
        let img = image::open(dir.join("image.ppm")).unwrap().to_rgb8();
        let (t1, t2) = thresholds(&dir);
        let s = segment_tactile_image(&img, t1, t2).unwrap();
        let again = segment_tactile_image(&synthetic_tactile_image(&s.object, &s.squeezed), t1, t2).unwrap();
        assert_eq!(again.object, s.object);
        assert_eq!(again.squeezed, s.squeezed);
    }
}

#[test]
fn uniform_image_has_no_object() {
    let img = RgbImage::from_pixel(16, 16, Rgb([120, 130, 140]));
    assert!(matches!(segment_tactile_image(&img, 0.08, 12.0), Err(Error::NoObject)));
}
