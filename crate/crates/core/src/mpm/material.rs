use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lamé parameters `(lambda, mu)` from Young's modulus and Poisson ratio.
pub fn lame_from_elastic_constants(youngs_modulus: f64, poisson_ratio: f64) -> Result<(f64, f64)> {
    if !(youngs_modulus > 0.0) || !youngs_modulus.is_finite() {
        return Err(Error::Domain(format!(
            "Young's modulus must be positive, got {youngs_modulus}"
        )));
    }
    if poisson_ratio >= 0.5 {
        return Err(Error::IncompressibleLimit(poisson_ratio));
    }
    if !(poisson_ratio >= 0.0) {
        return Err(Error::Domain(format!(
            "Poisson ratio must be in [0, 0.5), got {poisson_ratio}"
        )));
    }
    let e = youngs_modulus;
    let nu = poisson_ratio;
    let lambda = e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
    let mu = e / (2.0 * (1.0 + nu));
    Ok((lambda, mu))
}

/// Yield stress presets reproducing the plastic / elastoplastic / elastic cubes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum YieldPreset {
    Plastic,
    Elastoplastic,
    Elastic,
}

impl YieldPreset {
    pub const ALL: [YieldPreset; 3] = [Self::Plastic, Self::Elastoplastic, Self::Elastic];

    pub fn yield_stress(self) -> f64 {
        match self {
            Self::Plastic => 1.0,
            Self::Elastoplastic => 100.0,
            Self::Elastic => 1e6,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Plastic => "plastic",
            Self::Elastoplastic => "elastoplastic",
            Self::Elastic => "elastic",
        }
    }
}

impl std::str::FromStr for YieldPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plastic" => Ok(Self::Plastic),
            "elastoplastic" => Ok(Self::Elastoplastic),
            "elastic" => Ok(Self::Elastic),
            other => Err(Error::Config(format!("unknown yield preset `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MaterialSpec {
    youngs_modulus: f64,
    poisson_ratio: f64,
    yield_stress: f64,
    density: f64,
}

/// Elastoplastic material. `lambda` and `mu` are derived from the elastic constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MaterialSpec", into = "MaterialSpec")]
pub struct Material {
    pub youngs_modulus: f64,
    pub poisson_ratio: f64,
    pub lambda: f64,
    pub mu: f64,
    pub yield_stress: f64,
    pub density: f64,
}

impl Material {
    pub fn new(youngs_modulus: f64, poisson_ratio: f64, yield_stress: f64, density: f64) -> Result<Self> {
        let (lambda, mu) = lame_from_elastic_constants(youngs_modulus, poisson_ratio)?;
        if !(yield_stress >= 0.0) {
            return Err(Error::Domain(format!("yield stress must be >= 0, got {yield_stress}")));
        }
        if !(density > 0.0) {
            return Err(Error::Domain(format!("density must be positive, got {density}")));
        }
        Ok(Self {
            youngs_modulus,
            poisson_ratio,
            lambda,
            mu,
            yield_stress,
            density,
        })
    }

    pub fn with_yield_stress(self, yield_stress: f64) -> Result<Self> {
        Self::new(self.youngs_modulus, self.poisson_ratio, yield_stress, self.density)
    }

    /// Radius of the yield surface in Hencky-strain space, `sigma_y / (2 mu)`.
    pub fn yield_strain(&self) -> f64 {
        self.yield_stress / (2.0 * self.mu)
    }

    /// Dilatational wave speed, used to pick stable time steps.
    pub fn wave_speed(&self) -> f64 {
        ((self.lambda + 2.0 * self.mu) / self.density).sqrt()
    }
}

impl Default for Material {
    fn default() -> Self {
        Self::new(400.0, 0.3, YieldPreset::Elastoplastic.yield_stress(), 1.0).unwrap()
    }
}

impl TryFrom<MaterialSpec> for Material {
    type Error = Error;

    fn try_from(s: MaterialSpec) -> Result<Self> {
        Material::new(s.youngs_modulus, s.poisson_ratio, s.yield_stress, s.density)
    }
}

impl From<Material> for MaterialSpec {
    fn from(m: Material) -> Self {
        MaterialSpec {
            youngs_modulus: m.youngs_modulus,
            poisson_ratio: m.poisson_ratio,
            yield_stress: m.yield_stress,
            density: m.density,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_poisson_has_no_lambda() {
        let (lambda, mu) = lame_from_elastic_constants(1.0, 0.0).unwrap();
        assert_eq!(lambda, 0.0);
        assert_eq!(mu, 0.5);
    }

    #[test]
    fn steel_like_constants() {
        let (lambda, mu) = lame_from_elastic_constants(1e4, 0.3).unwrap();
        // 1e4 * 0.3 / (1.3 * 0.4) and 1e4 / 2.6
        assert!((lambda - 5769.230769230769).abs() < 1e-9);
        assert!((mu - 3846.153846153846).abs() < 1e-9);
    }

    #[test]
    fn incompressible_and_bad_modulus() {
        assert!(matches!(
            lame_from_elastic_constants(1e4, 0.5),
            Err(Error::IncompressibleLimit(_))
        ));
        assert!(matches!(lame_from_elastic_constants(0.0, 0.3), Err(Error::Domain(_))));
        assert!(matches!(lame_from_elastic_constants(-1.0, 0.3), Err(Error::Domain(_))));
    }

    #[test]
    fn material_json_roundtrip_rederives_lame() {
        let m = Material::new(1e4, 0.3, 100.0, 2.0).unwrap();
        let s = serde_json::to_string(&m).unwrap();
        assert!(!s.contains("lambda"));
        let back: Material = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
        let bad = r#"{"youngs_modulus":1,"poisson_ratio":0.6,"yield_stress":1,"density":1}"#;
        assert!(serde_json::from_str::<Material>(bad).is_err());
    }
}
