//! Von Mises return mapping in logarithmic (Hencky) strain space.
//!
//! Singular values are sorted descending with `det(U) = det(V) = +1`; any
//! reflection is folded into the smallest singular value, so for `det(F) > 0`
//! every singular value is positive and the logarithm is defined.

use nalgebra::{Matrix3, Vector3};

use super::material::Material;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct Svd3 {
    pub u: Matrix3<f64>,
    pub sigma: Vector3<f64>,
    pub v: Matrix3<f64>,
}

impl Svd3 {
    pub fn new(f: &Matrix3<f64>) -> Self {
        let svd = f.svd(true, true);
        let mut u = svd.u.expect("u requested");
        let mut v = svd.v_t.expect("v_t requested").transpose();
        let mut sigma = svd.singular_values;

        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| sigma[b].total_cmp(&sigma[a]));
        if order != [0, 1, 2] {
            let (u0, v0, s0) = (u, v, sigma);
            for (dst, &src) in order.iter().enumerate() {
                u.set_column(dst, &u0.column(src));
                v.set_column(dst, &v0.column(src));
                sigma[dst] = s0[src];
            }
        }
        if u.determinant() < 0.0 {
            u.column_mut(2).neg_mut();
            sigma[2] = -sigma[2];
        }
        if v.determinant() < 0.0 {
            v.column_mut(2).neg_mut();
            sigma[2] = -sigma[2];
        }
        Self { u, sigma, v }
    }

    pub fn compose(&self, sigma: &Vector3<f64>) -> Matrix3<f64> {
        self.u * Matrix3::from_diagonal(sigma) * self.v.transpose()
    }
}

/// Deviatoric part `e - tr(e)/3` of a principal strain vector.
pub fn deviator(strain: &Vector3<f64>) -> Vector3<f64> {
    let mean = strain.sum() / 3.0;
    strain.map(|e| e - mean)
}

/// Plastic multiplier `||dev(eps)|| - sigma_y / (2 mu)`; positive means the
/// trial strain lies outside the yield surface.
pub fn yield_excess(hencky: &Vector3<f64>, material: &Material) -> f64 {
    deviator(hencky).norm() - material.yield_strain()
}

fn check_finite(f: &Matrix3<f64>) -> Result<()> {
    if f.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain("deformation gradient has non-finite entries".into()));
    }
    Ok(())
}

/// Projected principal Hencky strain. Returns `None` when the trial state is admissible.
fn project(hencky: &Vector3<f64>, material: &Material) -> Option<Vector3<f64>> {
    let dev = deviator(hencky);
    let norm = dev.norm();
    let excess = norm - material.yield_strain();
    if excess <= 0.0 {
        return None;
    }
    debug_assert!(norm > 0.0);
    Some(hencky - dev * (excess / norm))
}

/// Returns `F` unchanged when admissible, otherwise `U exp(eps - dg dev/|dev|) V^T`.
pub fn von_mises_return_map(f: &Matrix3<f64>, material: &Material) -> Result<Matrix3<f64>> {
    check_finite(f)?;
    let svd = Svd3::new(f);
    if svd.sigma[2] <= 0.0 {
        return Err(Error::Domain(format!("det(F) = {:e} is not positive", f.determinant())));
    }
    let hencky = svd.sigma.map(f64::ln);
    Ok(match project(&hencky, material) {
        None => *f,
        Some(eps) => svd.compose(&eps.map(f64::exp)),
    })
}

/// Kirchhoff stress of the Hencky St. Venant-Kirchhoff model,
/// `tau = U (2 mu eps + lambda tr(eps) I) U^T`.
pub fn kirchhoff_stress(svd: &Svd3, hencky: &Vector3<f64>, material: &Material) -> Matrix3<f64> {
    let tr = hencky.sum();
    let principal = hencky.map(|e| 2.0 * material.mu * e + material.lambda * tr);
    svd.u * Matrix3::from_diagonal(&principal) * svd.u.transpose()
}

/// Return-maps `F` and evaluates the Kirchhoff stress of the result with one SVD.
pub(crate) fn return_map_with_stress(f: &Matrix3<f64>, material: &Material) -> Option<(Matrix3<f64>, Matrix3<f64>)> {
    let svd = Svd3::new(f);
    if !(svd.sigma[2] > 0.0) {
        return None;
    }
    let hencky = svd.sigma.map(f64::ln);
    match project(&hencky, material) {
        None => Some((*f, kirchhoff_stress(&svd, &hencky, material))),
        Some(eps) => {
            let f_new = svd.compose(&eps.map(f64::exp));
            Some((f_new, kirchhoff_stress(&svd, &eps, material)))
        }
    }
}

/// Kirchhoff stress at `F` without plastic projection.
pub fn stress_at(f: &Matrix3<f64>, material: &Material) -> Matrix3<f64> {
    let svd = Svd3::new(f);
    let hencky = svd.sigma.map(|s| s.max(f64::MIN_POSITIVE).ln());
    kirchhoff_stress(&svd, &hencky, material)
}
