use super::masks::{BinaryMask, DepthImage, TernaryMask};
use super::RelativePosition;
use crate::error::{Error, Result};
use crate::mpm::Vec3;
use crate::scene::SimState;

/// Pixel geometry of a gel's camera view: a square raster over the gel's
/// lateral footprint, centered on the backing frame. Columns run along the
/// first lateral axis, rows along the second.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RasterFrame {
    pub origin: [f64; 2],
    pub pixel: [f64; 2],
    pub size: usize,
    pub axes: (usize, usize),
}

impl RasterFrame {
    pub fn for_gel(state: &SimState, gel: usize, size: usize) -> Self {
        let cfg = &state.config;
        let axes = cfg.lateral_axes();
        let frame = state.backing_positions[gel];
        let extent = [cfg.gel_size[axes.0], cfg.gel_size[axes.1]];
        Self {
            origin: [frame[axes.0] - extent[0] / 2.0, frame[axes.1] - extent[1] / 2.0],
            pixel: [extent[0] / size as f64, extent[1] / size as f64],
            size,
            axes,
        }
    }

    /// Continuous pixel coordinates `(col, row)` of a world point; pixel
    /// centers sit at half-integers.
    pub fn project(&self, p: &Vec3) -> (f64, f64) {
        (
            (p[self.axes.0] - self.origin[0]) / self.pixel[0],
            (p[self.axes.1] - self.origin[1]) / self.pixel[1],
        )
    }
}

fn check_gel(state: &SimState, gel: usize) -> Result<()> {
    match state.gels.get(gel) {
        Some(g) if !g.front.is_empty() => Ok(()),
        _ => Err(Error::NoSurface(gel)),
    }
}

fn check_raster(raster: usize) -> Result<()> {
    if raster < 8 {
        return Err(Error::Dimension {
            expected: 8,
            got: raster,
        });
    }
    Ok(())
}

/// Gel and object midpoints relative to the gel's episode-initial backing pose.
pub fn sim_relative_position(state: &SimState, gel: usize) -> Result<RelativePosition> {
    check_gel(state, gel)?;
    let base = state.initial_backing[gel];
    let sensor = state.backing_positions[gel] - base;
    let object = state.object_mid() - base;
    let (u, v) = state.config.lateral_axes();
    Ok(RelativePosition {
        sensor_mid: [sensor.x, sensor.y, sensor.z],
        object_mid: [object[u], object[v]],
        object_depth: Some(object[state.config.gel_axis]),
        normalized: true,
    })
}

/// Fills pixels covered by triangle `tri` (pixel coords) with the linearly
/// interpolated vertex values, keeping the larger value where triangles overlap.
fn raster_triangle(img: &mut DepthImage, tri: [(f64, f64); 3], vals: [f64; 3]) {
    let [(x0, y0), (x1, y1), (x2, y2)] = tri;
    let area = (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0);
    if area.abs() < 1e-14 {
        return;
    }
    let cmin = (x0.min(x1).min(x2) - 0.5).ceil().max(0.0) as usize;
    let rmin = (y0.min(y1).min(y2) - 0.5).ceil().max(0.0) as usize;
    let cmax = (x0.max(x1).max(x2) - 0.5).floor();
    let rmax = (y0.max(y1).max(y2) - 0.5).floor();
    if cmax < 0.0 || rmax < 0.0 {
        return;
    }
    let cmax = (cmax as usize).min(img.width - 1);
    let rmax = (rmax as usize).min(img.height - 1);
    const EPS: f64 = 1e-9;
    for r in rmin..=rmax {
        let py = r as f64 + 0.5;
        for c in cmin..=cmax {
            let px = c as f64 + 0.5;
            let w1 = ((px - x0) * (y2 - y0) - (x2 - x0) * (py - y0)) / area;
            let w2 = ((x1 - x0) * (py - y0) - (px - x0) * (y1 - y0)) / area;
            let w0 = 1.0 - w1 - w2;
            if w0 < -EPS || w1 < -EPS || w2 < -EPS {
                continue;
            }
            let d = w0 * vals[0] + w1 * vals[1] + w2 * vals[2];
            let cell = &mut img.data[r * img.width + c];
            if d > *cell {
                *cell = d;
            }
        }
    }
}

/// Indentation of the gel's contact face, linearly interpolated over the
/// triangulated front lattice. Indentation is the displacement of a front
/// particle toward the backing, relative to its rest offset; negative values clamp to 0.
pub fn sim_depth_image(state: &SimState, gel: usize, raster: usize) -> Result<DepthImage> {
    check_gel(state, gel)?;
    check_raster(raster)?;
    let layout = &state.gels[gel];
    let ax = state.config.gel_axis;
    let frame = state.backing_positions[gel];
    let rf = RasterFrame::for_gel(state, gel, raster);
    let (nu, nv) = layout.front_dims;
    let verts: Vec<((f64, f64), f64)> = layout
        .front
        .iter()
        .zip(&layout.front_offsets)
        .map(|(&p, rest)| {
            let x = state.mpm.particles[p].position;
            let depth = (rest[ax] - (x - frame)[ax]) * layout.inward;
            (rf.project(&x), depth.max(0.0))
        })
        .collect();
    let mut img = DepthImage::new(raster, raster);
    if nu < 2 || nv < 2 {
        return Ok(img);
    }
    let at = |i: usize, j: usize| verts[i * nv + j];
    for i in 0..nu - 1 {
        for j in 0..nv - 1 {
            let (a, b, c, d) = (at(i, j), at(i + 1, j), at(i, j + 1), at(i + 1, j + 1));
            raster_triangle(&mut img, [a.0, b.0, d.0], [a.1, b.1, d.1]);
            raster_triangle(&mut img, [a.0, d.0, c.0], [a.1, d.1, c.1]);
        }
    }
    Ok(img)
}

/// Pixels whose interpolated indentation exceeds `depth_threshold`.
pub fn sim_squeezed_area(state: &SimState, gel: usize, raster: usize, depth_threshold: f64) -> Result<BinaryMask> {
    Ok(sim_depth_image(state, gel, raster)?.threshold(depth_threshold))
}

/// Projection of the object particles along the gel axis; each particle
/// covers a square of one particle spacing.
pub fn object_footprint(state: &SimState, gel: usize, raster: usize) -> Result<BinaryMask> {
    check_gel(state, gel)?;
    check_raster(raster)?;
    let rf = RasterFrame::for_gel(state, gel, raster);
    let half = [
        0.5 * state.config.particle_spacing / rf.pixel[0],
        0.5 * state.config.particle_spacing / rf.pixel[1],
    ];
    let mut mask = BinaryMask::new(raster, raster);
    let n = raster as f64;
    for p in state.object_positions() {
        let (pc, pr) = rf.project(&p);
        // pixel centers k + 0.5 inside [p - half, p + half)
        let c0 = (pc - half[0] - 0.5).ceil().max(0.0);
        let c1 = (pc + half[0] - 0.5).ceil().min(n);
        let r0 = (pr - half[1] - 0.5).ceil().max(0.0);
        let r1 = (pr + half[1] - 0.5).ceil().min(n);
        if c0 >= c1 || r0 >= r1 {
            continue;
        }
        for r in r0 as usize..r1 as usize {
            for c in c0 as usize..c1 as usize {
                mask.set(r, c, true);
            }
        }
    }
    Ok(mask)
}

/// Ternary contour: -1 where the object footprint is squeezed, 1 on the rest
/// of the footprint, 0 elsewhere.
pub fn sim_object_contour(state: &SimState, gel: usize, raster: usize) -> Result<TernaryMask> {
    let footprint = object_footprint(state, gel, raster)?;
    let contact = sim_squeezed_area(state, gel, raster, state.config.depth_threshold())?;
    Ok(TernaryMask::compose(&footprint, &contact))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{build_scene, SceneConfig, GEL_A, GEL_B};

    fn small_state() -> SimState {
        let cfg = SceneConfig {
            grid_resolution: 32,
            particle_spacing: 1.0 / 64.0,
            gel_size: [0.3, 0.3, 0.0625],
            object_perturbation: 0.0,
            ..Default::default()
        };
        build_scene(&cfg).unwrap()
    }

    /// Pushes gel A's front particles inside `[lo, hi]^2` (world lateral
    /// coordinates) back toward the backing by `depth`.
    fn punch(state: &mut SimState, lo: f64, hi: f64, depth: f64) {
        let ax = state.config.gel_axis;
        let (u, v) = state.config.lateral_axes();
        let inward = state.gels[GEL_A].inward;
        for &p in &state.gels[GEL_A].front.clone() {
            let x = &mut state.mpm.particles[p].position;
            if (lo..=hi).contains(&x[u]) && (lo..=hi).contains(&x[v]) {
                x[ax] -= inward * depth;
            }
        }
    }

    #[test]
    fn undeformed_gel_has_empty_mask() {
        let s = small_state();
        for g in [GEL_A, GEL_B] {
            let m = sim_squeezed_area(&s, g, 64, s.config.depth_threshold()).unwrap();
            assert_eq!(m.count(), 0);
        }
        assert!(matches!(sim_squeezed_area(&s, 5, 64, 0.01), Err(Error::NoSurface(5))));
    }

    #[test]
    fn flat_punch_footprint() {
        let mut s = small_state();
        let t = s.config.depth_threshold();
        let (lo, hi) = (0.42, 0.58);
        punch(&mut s, lo, hi, 2.0 * t);
        let rf = RasterFrame::for_gel(&s, GEL_A, 64);
        let m = sim_squeezed_area(&s, GEL_A, 64, t).unwrap();
        let (c0, r0, c1, r1) = m.bounding_box().unwrap();
        // expected pixel span of the punched square
        let p_lo = (lo - rf.origin[0]) / rf.pixel[0];
        let p_hi = (hi - rf.origin[0]) / rf.pixel[0];
        for (got, want) in [(c0, p_lo), (r0, p_lo), (c1 + 1, p_hi), (r1 + 1, p_hi)] {
            assert!((got as f64 - want).abs() <= 2.0, "{got} vs {want}");
        }
        // the punched interior is solid
        let mid = 32;
        assert_eq!(m.get(mid, mid), 1);
    }

    #[test]
    fn deeper_press_gives_superset() {
        let t = small_state().config.depth_threshold();
        let mut shallow = small_state();
        punch(&mut shallow, 0.45, 0.55, 1.5 * t);
        let mut deep = shallow.clone();
        punch(&mut deep, 0.40, 0.60, 0.5 * t);
        let a = sim_squeezed_area(&shallow, GEL_A, 64, t).unwrap();
        let b = sim_squeezed_area(&deep, GEL_A, 64, t).unwrap();
        assert!(a.count() > 0);
        assert!(a.is_subset_of(&b));
        assert!(b.count() > a.count());
    }

    #[test]
    fn contour_without_contact_and_with() {
        let mut s = small_state();
        let c = sim_object_contour(&s, GEL_A, 64).unwrap();
        assert!(c.count(1) > 0);
        assert_eq!(c.count(-1), 0);

        // cube footprint: 0.2 wide around 0.5 on a 0.3 wide raster of 64 px
        let rf = RasterFrame::for_gel(&s, GEL_A, 64);
        let fp = object_footprint(&s, GEL_A, 64).unwrap();
        let (c0, r0, c1, r1) = fp.bounding_box().unwrap();
        let lo = (0.4 - rf.origin[0]) / rf.pixel[0];
        let hi = (0.6 - rf.origin[0]) / rf.pixel[0];
        for (got, want) in [
            (c0 as f64, lo),
            (r0 as f64, lo),
            (c1 as f64 + 1.0, hi),
            (r1 as f64 + 1.0, hi),
        ] {
            assert!((got - want).abs() <= 2.0, "{got} vs {want}");
        }

        let t = s.config.depth_threshold();
        punch(&mut s, 0.3, 0.7, 3.0 * t);
        let c = sim_object_contour(&s, GEL_A, 64).unwrap();
        assert!(c.count(-1) > 0);
        for i in 0..c.data.len() {
            if c.data[i] == -1 {
                assert_eq!(fp.data[i], 1);
            }
        }
    }

    #[test]
    fn relative_position_tracks_object_mean() {
        let mut s = small_state();
        let rp = sim_relative_position(&s, GEL_A).unwrap();
        assert_eq!(rp.sensor_mid, [0.0; 3]);
        let base = s.initial_backing[GEL_A];
        let mid = s.object_mid() - base;
        assert!((rp.object_mid[0] - mid.x).abs() < 1e-15 && (rp.object_mid[1] - mid.y).abs() < 1e-15);
        let d = Vec3::new(0.01, -0.02, 0.005);
        for i in s.object.clone() {
            s.mpm.particles[i].position += d;
        }
        let rp2 = sim_relative_position(&s, GEL_A).unwrap();
        assert!((rp2.object_mid[0] - rp.object_mid[0] - d.x).abs() < 1e-12);
        assert!((rp2.object_mid[1] - rp.object_mid[1] - d.y).abs() < 1e-12);
        assert!((rp2.object_depth.unwrap() - rp.object_depth.unwrap() - d.z).abs() < 1e-12);
    }
}
