use gelsim::mpm::{
    grid_to_particle, grid_update, mpm_substep, particle_to_grid, von_mises_return_map, yield_excess, Grid, Mat3,
    Material, MpmState, Particle, Stencil, SubstepConfig, Svd3, Vec3,
};
use nalgebra::{Rotation3, Vector3};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_rotation(rng: &mut impl Rng) -> Mat3 {
    let axis = Vector3::new(
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
    );
    let angle = rng.gen_range(0.0..std::f64::consts::PI);
    Rotation3::from_scaled_axis(axis.normalize() * angle).into_inner()
}

/// `R1 diag(s) R2` with singular values in `[0.5, 2]`.
fn random_f(rng: &mut impl Rng) -> Mat3 {
    let s = Vector3::from_fn(|_, _| rng.gen_range(0.5..2.0));
    random_rotation(rng) * Mat3::from_diagonal(&s) * random_rotation(rng)
}

fn excess_after(f: &Mat3, m: &Material) -> f64 {
    let hencky = Svd3::new(f).sigma.map(f64::ln);
    yield_excess(&hencky, m)
}

fn max_abs(m: &Mat3) -> f64 {
    m.iter().fold(0.0, |a, v| a.max(v.abs()))
}

#[test]
fn return_map_on_random_deformations() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let materials = [
        Material::new(400.0, 0.3, 1.0, 1.0).unwrap(),
        Material::new(400.0, 0.3, 20.0, 1.0).unwrap(),
        Material::new(1e4, 0.45, 100.0, 1.0).unwrap(),
    ];
    let mut projected = 0;
    for n in 0..1000 {
        let m = &materials[n % materials.len()];
        let f = random_f(&mut rng);
        let g = von_mises_return_map(&f, m).unwrap();
        if g != f {
            projected += 1;
        }
        assert!(
            excess_after(&g, m) <= 1e-10,
            "sample {n}: residual {}",
            excess_after(&g, m)
        );
        // volume is preserved by a deviatoric projection
        assert!((g.determinant() / f.determinant() - 1.0).abs() < 1e-10);

        let again = von_mises_return_map(&g, m).unwrap();
        assert!(max_abs(&(again - g)) <= 1e-8, "idempotence at sample {n}");

        let r = random_rotation(&mut rng);
        let left = von_mises_return_map(&(r * f), m).unwrap();
        assert!(max_abs(&(left - r * g)) <= 1e-8, "left equivariance at sample {n}");
        let right = von_mises_return_map(&(f * r), m).unwrap();
        assert!(max_abs(&(right - g * r)) <= 1e-8, "right equivariance at sample {n}");
    }
    assert!(projected > 500, "only {projected} samples reached the yield surface");
}

proptest! {
    #[test]
    fn weights_partition_unity(x in 0.2f64..0.8, y in 0.2f64..0.8, z in 0.2f64..0.8) {
        let grid = Grid::new(16);
        let st = Stencil::new(&Vec3::new(x, y, z), &grid).unwrap();
        let mut sum = 0.0;
        let mut first = Vec3::zeros();
        let mut second = Mat3::zeros();
        let mut grad = Vec3::zeros();
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    let w = st.weight(i, j, k);
                    let d = st.offset(i, j, k);
                    sum += w;
                    first += d * w;
                    second += d * d.transpose() * w;
                    grad += st.weight_gradient(i, j, k);
                }
            }
        }
        prop_assert!((sum - 1.0).abs() < 1e-14);
        prop_assert!(first.norm() < 1e-14);
        prop_assert!(grad.norm() < 1e-13);
        // quadratic B-spline inertia tensor is (dx^2 / 4) I in cell units
        prop_assert!(max_abs(&(second - Mat3::identity() * 0.25)) < 1e-14);
    }

    #[test]
    fn single_particle_scatter_conserves(x in 0.3f64..0.7, y in 0.3f64..0.7, z in 0.3f64..0.7,
                                         vx in -1.0f64..1.0, vy in -1.0f64..1.0, c in -3.0f64..3.0) {
        let mut p = Particle::new(Vec3::new(x, y, z), 0.7, 1e-3, 0, 0);
        p.velocity = Vec3::new(vx, vy, 0.2);
        p.affine_velocity = Mat3::new(c, 0.5, 0.0, -0.5, 0.1, c, 0.3, 0.0, -c);
        let mut grid = Grid::new(16);
        let cfg = SubstepConfig { dt: 1e-4, ..SubstepConfig::default() };
        particle_to_grid(std::slice::from_ref(&p), &mut grid, &cfg).unwrap();
        prop_assert!((grid.total_mass() - p.mass).abs() < 1e-14);
        let momentum: Vec3 = grid.momentum.iter().sum();
        prop_assert!((momentum - p.velocity * p.mass).norm() < 1e-13);
    }
}

fn elastic_block(res: usize, center: Vec3, half: f64, spacing: f64, material: Material) -> MpmState {
    let mut state = MpmState::new(res, vec![material]);
    let n = (2.0 * half / spacing).round() as usize;
    let vol = spacing.powi(3);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let x =
                    center - Vec3::repeat(half) + Vec3::new(i as f64 + 0.5, j as f64 + 0.5, k as f64 + 0.5) * spacing;
                state
                    .particles
                    .push(Particle::new(x, vol * material.density, vol, 0, 0));
            }
        }
    }
    state
}

#[test]
fn mass_is_bit_exact_over_ten_thousand_substeps() {
    let material = Material::new(200.0, 0.3, 5.0, 1.0).unwrap();
    let mut state = elastic_block(16, Vec3::repeat(0.5), 0.1, 1.0 / 32.0, material);
    for (n, p) in state.particles.iter_mut().enumerate() {
        p.velocity = Vec3::new((n % 5) as f64 * 0.01 - 0.02, 0.0, 0.01);
    }
    let cfg = SubstepConfig {
        dt: 2e-4,
        ..SubstepConfig::default()
    };
    let masses: Vec<u64> = state.particles.iter().map(|p| p.mass.to_bits()).collect();
    let total = state.total_mass();
    for _ in 0..10_000 {
        mpm_substep(&mut state, &cfg).unwrap();
    }
    assert_eq!(state.total_mass().to_bits(), total.to_bits());
    assert!(state.particles.iter().map(|p| p.mass.to_bits()).eq(masses));
    assert!((state.grid.total_mass() - total).abs() <= 1e-12 * total);
}

#[test]
fn momentum_drift_without_walls_or_gravity() {
    let material = Material::new(400.0, 0.3, 1e6, 1.0).unwrap();
    let mut state = elastic_block(32, Vec3::repeat(0.5), 0.08, 1.0 / 64.0, material);
    let mid = state.center_of_mass();
    for p in &mut state.particles {
        let r = p.position - mid;
        // drift, spin and a compressive pulse
        p.velocity = Vec3::new(0.3, -0.1, 0.2) + Vec3::new(0.0, 0.0, 2.0).cross(&r) - r * 3.0;
    }
    let cfg = SubstepConfig {
        dt: 1e-4,
        ..SubstepConfig::default()
    };
    let p0 = state.total_momentum();
    for _ in 0..1000 {
        mpm_substep(&mut state, &cfg).unwrap();
    }
    let drift = (state.total_momentum() - p0).norm() / p0.norm();
    assert!(drift <= 1e-6, "relative drift {drift:e}");
}

#[test]
fn free_fall_matches_symplectic_euler() {
    let material = Material::new(400.0, 0.3, 1e6, 1.0).unwrap();
    let mut state = elastic_block(32, Vec3::new(0.5, 0.5, 0.7), 0.05, 1.0 / 64.0, material);
    let g = [0.0, 0.0, -9.8];
    let cfg = SubstepConfig {
        dt: 1e-4,
        gravity: g,
        ..SubstepConfig::default()
    };
    let x0 = state.center_of_mass();
    let steps = 500;
    for _ in 0..steps {
        mpm_substep(&mut state, &cfg).unwrap();
    }
    let t = steps as f64 * cfg.dt;
    let v = g[2] * t;
    // x_n = x_0 + dt * sum_{k=1..n} k g dt
    let z = x0.z + g[2] * cfg.dt * cfg.dt * (steps * (steps + 1) / 2) as f64;
    for p in &state.particles {
        assert!((p.velocity - Vec3::new(0.0, 0.0, v)).norm() < 1e-12);
        assert!(max_abs(&p.affine_velocity) < 1e-9);
    }
    assert!((state.center_of_mass() - Vec3::new(x0.x, x0.y, z)).norm() < 1e-12);
}

/// `C = 4/dx^2 sum_i w_i v_i (x_i - x_p)^T` evaluated with explicit loops.
fn affine_oracle(grid: &Grid, x: &Vec3) -> (Vec3, Mat3) {
    let dx = grid.dx;
    let base: [usize; 3] = std::array::from_fn(|a| (x[a] / dx - 0.5).floor() as usize);
    let mut v = Vec3::zeros();
    let mut c = Mat3::zeros();
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                let node = [base[0] + i, base[1] + j, base[2] + k];
                let xi = grid.node_position(node[0], node[1], node[2]);
                let mut w = 1.0;
                for a in 0..3 {
                    let r = ((xi[a] - x[a]) / dx).abs();
                    w *= if r < 0.5 {
                        0.75 - r * r
                    } else {
                        0.5 * (1.5 - r) * (1.5 - r)
                    };
                }
                let vi = grid.velocity(node[0], node[1], node[2]);
                v += vi * w;
                for r in 0..3 {
                    for s in 0..3 {
                        c[(r, s)] += 4.0 / (dx * dx) * w * vi[r] * (xi[s] - x[s]);
                    }
                }
            }
        }
    }
    (v, c)
}

#[test]
fn gather_matches_direct_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut grid = Grid::new(16);
    for m in grid.momentum.iter_mut() {
        *m = Vec3::from_fn(|_, _| rng.gen_range(-1.0..1.0));
    }
    let material = Material::new(400.0, 0.3, 1e6, 1.0).unwrap();
    let cfg = SubstepConfig {
        dt: 1e-7,
        ..SubstepConfig::default()
    };
    let mut particles: Vec<Particle> = (0..200)
        .map(|_| Particle::new(Vec3::from_fn(|_, _| rng.gen_range(0.2..0.8)), 1.0, 1.0, 0, 0))
        .collect();
    let before: Vec<Vec3> = particles.iter().map(|p| p.position).collect();
    grid_to_particle(&grid, &mut particles, &[material], &cfg).unwrap();
    for (p, x) in particles.iter().zip(&before) {
        let (v, c) = affine_oracle(&grid, x);
        assert!((p.velocity - v).norm() <= 1e-12);
        assert!(max_abs(&(p.affine_velocity - c)) <= 1e-12 * max_abs(&c).max(1.0));
    }
}

#[test]
fn affine_grid_field_is_recovered_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let a = Mat3::from_fn(|_, _| rng.gen_range(-2.0..2.0));
    let b = Vec3::new(0.1, -0.2, 0.3);
    let mut grid = Grid::new(16);
    for i in 0..16 {
        for j in 0..16 {
            for k in 0..16 {
                let idx = grid.index(i, j, k);
                grid.momentum[idx] = a * grid.node_position(i, j, k) + b;
            }
        }
    }
    let material = Material::new(400.0, 0.3, 1e6, 1.0).unwrap();
    let cfg = SubstepConfig {
        dt: 1e-7,
        ..SubstepConfig::default()
    };
    let mut particles: Vec<Particle> = (0..100)
        .map(|_| Particle::new(Vec3::from_fn(|_, _| rng.gen_range(0.2..0.8)), 1.0, 1.0, 0, 0))
        .collect();
    let before: Vec<Vec3> = particles.iter().map(|p| p.position).collect();
    grid_to_particle(&grid, &mut particles, &[material], &cfg).unwrap();
    for (p, x) in particles.iter().zip(&before) {
        assert!((p.velocity - (a * x + b)).norm() <= 1e-12);
        assert!(max_abs(&(p.affine_velocity - a)) <= 1e-12);
    }
}

#[test]
fn walls_remove_only_inward_velocity() {
    let mut grid = Grid::new(16);
    let cfg = SubstepConfig {
        dt: 1e-4,
        ..SubstepConfig::default()
    };
    let mut p = Particle::new(Vec3::new(0.1, 0.5, 0.5), 1.0, 1e-3, 0, 0);
    p.velocity = Vec3::new(-1.0, 0.5, 0.0);
    particle_to_grid(std::slice::from_ref(&p), &mut grid, &cfg).unwrap();
    grid_update(&mut grid, &cfg);
    let v = grid.velocity(1, 8, 8);
    assert_eq!(v.x, 0.0);
    assert!((v.y - 0.5).abs() < 1e-12);
    p.velocity = Vec3::new(1.0, 0.0, 0.0);
    particle_to_grid(std::slice::from_ref(&p), &mut grid, &cfg).unwrap();
    grid_update(&mut grid, &cfg);
    assert!((grid.velocity(1, 8, 8).x - 1.0).abs() < 1e-12);
}

#[test]
fn deformation_update_is_the_matrix_product() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let a = Mat3::from_fn(|_, _| rng.gen_range(-2.0..2.0));
    let mut grid = Grid::new(16);
    for i in 0..16 {
        for j in 0..16 {
            for k in 0..16 {
                let idx = grid.index(i, j, k);
                grid.momentum[idx] = a * grid.node_position(i, j, k);
            }
        }
    }
    // Elastic enough that the return map never engages.
    let material = Material::new(400.0, 0.3, 1e9, 1.0).unwrap();
    let cfg = SubstepConfig {
        dt: 1e-2,
        ..SubstepConfig::default()
    };
    let mut particles: Vec<Particle> = (0..100)
        .map(|_| {
            let mut p = Particle::new(Vec3::from_fn(|_, _| rng.gen_range(0.2..0.8)), 1.0, 1.0, 0, 0);
            p.deformation_gradient = Mat3::identity() + Mat3::from_fn(|_, _| rng.gen_range(-0.2..0.2));
            p
        })
        .collect();
    let before: Vec<Mat3> = particles.iter().map(|p| p.deformation_gradient).collect();
    grid_to_particle(&grid, &mut particles, &[material], &cfg).unwrap();
    for (p, f0) in particles.iter().zip(&before) {
        let mut expect = Mat3::zeros();
        for r in 0..3 {
            for s in 0..3 {
                for k in 0..3 {
                    let delta = if r == k { 1.0 } else { 0.0 };
                    expect[(r, s)] += (delta + cfg.dt * a[(r, k)]) * f0[(k, s)];
                }
            }
        }
        assert!(max_abs(&(p.deformation_gradient - expect)) <= 1e-12);
    }
}
