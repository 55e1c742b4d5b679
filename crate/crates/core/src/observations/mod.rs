//! Transferable observations: relative position, squeezed area and object
//! contour, computed from simulator state or segmented from tactile images.

mod masks;
mod pgm;
mod segment;
mod sim;

pub use masks::{BinaryMask, DepthImage, TernaryMask};
pub use pgm::{decode_pgm, encode_pgm, read_pgm, write_pgm, PgmImage};
pub use segment::{luminance_gradient, segment_tactile_image, synthetic_tactile_image, Segmentation};
pub use sim::{sim_depth_image, sim_object_contour, sim_relative_position, sim_squeezed_area, RasterFrame};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gel and object midpoints, `(X1, Y1, Z1)` and `(X2, Y2[, Z2])`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelativePosition {
    pub sensor_mid: [f64; 3],
    pub object_mid: [f64; 2],
    /// Object depth along the gel axis; unavailable from real tactile images.
    pub object_depth: Option<f64>,
    pub normalized: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservationKind {
    RelativePosition,
    SqueezedArea,
    ObjectContour,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Observation {
    RelativePosition(RelativePosition),
    SqueezedArea(BinaryMask),
    ObjectContour(TernaryMask),
}

/// Critical angle of total internal reflection in degrees, `asin(n1 / n2)`.
pub fn critical_angle(n1: f64, n2: f64) -> Result<f64> {
    if !(n1 > 0.0) || !(n2 > 0.0) {
        return Err(Error::Domain(format!(
            "refractive indices must be positive: {n1}, {n2}"
        )));
    }
    if n1 > n2 {
        return Err(Error::NoTotalInternalReflection { n1, n2 });
    }
    Ok((n1 / n2).asin().to_degrees())
}

/// Length of the flat vector produced by [`observation_vector`].
pub fn encoded_len(kind: ObservationKind, pooled: usize) -> usize {
    match kind {
        ObservationKind::RelativePosition => 5,
        _ => pooled * pooled,
    }
}

fn pool(width: usize, height: usize, values: impl Fn(usize, usize) -> f64, pooled: usize) -> Result<Vec<f64>> {
    if pooled == 0 || width % pooled != 0 || height % pooled != 0 {
        return Err(Error::Dimension {
            expected: pooled,
            got: width,
        });
    }
    let (bw, bh) = (width / pooled, height / pooled);
    let area = (bw * bh) as f64;
    let mut out = Vec::with_capacity(pooled * pooled);
    for br in 0..pooled {
        for bc in 0..pooled {
            let mut s = 0.0;
            for r in br * bh..(br + 1) * bh {
                for c in bc * bw..(bc + 1) * bw {
                    s += values(r, c);
                }
            }
            out.push(s / area);
        }
    }
    Ok(out)
}

/// Flattens an observation for the policy networks. Relative positions give
/// `[X1, Y1, Z1, X2, Y2]`; masks are area-pooled to `pooled x pooled`.
pub fn observation_vector(obs: &Observation, pooled: usize) -> Result<Vec<f64>> {
    match obs {
        Observation::RelativePosition(rp) => {
            let [x1, y1, z1] = rp.sensor_mid;
            let [x2, y2] = rp.object_mid;
            Ok(vec![x1, y1, z1, x2, y2])
        }
        Observation::SqueezedArea(m) => pool(m.width, m.height, |r, c| m.get(r, c) as f64, pooled),
        Observation::ObjectContour(m) => pool(m.width, m.height, |r, c| m.get(r, c) as f64, pooled),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn critical_angles() {
        assert!((critical_angle(1.3, 1.3).unwrap() - 90.0).abs() < 1e-12);
        let a = critical_angle(1.0, 1.5).unwrap();
        assert!((a - 41.810).abs() < 1e-3, "{a}");
        assert!(matches!(
            critical_angle(1.5, 1.0),
            Err(Error::NoTotalInternalReflection { .. })
        ));
    }

    #[test]
    fn flatten_relative_position() {
        let rp = RelativePosition {
            sensor_mid: [1.0, 2.0, 3.0],
            object_mid: [4.0, 5.0],
            object_depth: None,
            normalized: true,
        };
        let v = observation_vector(&Observation::RelativePosition(rp), 16).unwrap();
        assert_eq!(v, vec![1.0, 2.0, 3.0, 4.0, 5.0]);
    }

    #[test]
    fn pool_all_ones() {
        let m = BinaryMask::from_fn(64, 64, |_, _| true);
        let v = observation_vector(&Observation::SqueezedArea(m), 16).unwrap();
        assert_eq!(v, vec![1.0; 256]);
    }

    #[test]
    fn pool_half_mask_matches_block_means() {
        // left half set, plus a diagonal stripe to make blocks non-trivial
        let m = BinaryMask::from_fn(64, 64, |r, c| c < 32 || (r + c) % 7 == 0);
        let v = observation_vector(&Observation::SqueezedArea(m.clone()), 16).unwrap();
        for br in 0..16 {
            for bc in 0..16 {
                let mut count = 0;
                for r in 0..4 {
                    for c in 0..4 {
                        count += m.get(br * 4 + r, bc * 4 + c) as usize;
                    }
                }
                assert_eq!(v[br * 16 + bc], count as f64 / 16.0);
            }
        }
        let odd = BinaryMask::from_fn(60, 60, |_, _| false);
        assert!(matches!(
            observation_vector(&Observation::SqueezedArea(odd), 16),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn pool_ternary() {
        let m = TernaryMask::from_fn(8, 8, |r, _| if r < 4 { -1 } else { 1 });
        let v = observation_vector(&Observation::ObjectContour(m), 2).unwrap();
        assert_eq!(v, vec![-1.0, -1.0, 1.0, 1.0]);
    }
}
