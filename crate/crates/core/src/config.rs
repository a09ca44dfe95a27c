//! Run configuration read from TOML.
//!
//! ```toml
//! [geometry]
//! kind = "sphere"          # or "cube"
//! size = 1.0               # radius or edge length (m)
//!
//! [mesh]
//! h = [0.45, 0.3, 0.2]
//!
//! [wave]
//! kappa = [4.4934]
//! kappa_prime_ratio = [1.0]
//!
//! [coupling]
//! eta = [-1.0]
//! relative = true          # eta values are multiples of κ²
//!
//! [solver]
//! tol = 1e-8
//! max_iter = 1000
//!
//! [quad]
//! singular_order = 4
//! regular_order = 3
//!
//! [eval]
//! points = 5000
//! radius = 2.0
//! ```

use crate::analysis::Geometry;
use crate::error::{Error, Result};
use crate::operators::QuadratureOptions;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    #[serde(default = "default_kind")]
    pub kind: String,
    #[serde(default = "one")]
    pub size: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    #[serde(default = "default_h")]
    pub h: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveConfig {
    #[serde(default = "default_kappa")]
    pub kappa: Vec<f64>,
    #[serde(default = "default_ratio")]
    pub kappa_prime_ratio: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingConfig {
    #[serde(default = "default_eta")]
    pub eta: Vec<f64>,
    /// Interpret `eta` as multiples of κ².
    #[serde(default = "yes")]
    pub relative: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    /// Also run the plain EFIE for comparison.
    #[serde(default = "yes")]
    pub efie: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadConfig {
    #[serde(default = "default_singular")]
    pub singular_order: usize,
    #[serde(default = "default_regular")]
    pub regular_order: usize,
    #[serde(default = "default_mid")]
    pub mid_ratio: f64,
    #[serde(default = "default_far")]
    pub far_ratio: f64,
    /// Degree of the triangle rule for the right-hand side.
    #[serde(default = "default_rhs_order")]
    pub rhs_order: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalConfig {
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "two")]
    pub radius: f64,
    /// Also write the sampled fields as CSV.
    #[serde(default)]
    pub write_fields: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_out")]
    pub dir: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub mesh: MeshConfig,
    #[serde(default)]
    pub wave: WaveConfig,
    #[serde(default)]
    pub coupling: CouplingConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub quad: QuadConfig,
    #[serde(default)]
    pub eval: EvalConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_kind() -> String {
    "sphere".into()
}
fn one() -> f64 {
    1.0
}
fn two() -> f64 {
    2.0
}
fn yes() -> bool {
    true
}
fn default_h() -> Vec<f64> {
    vec![0.45, 0.3, 0.2]
}
fn default_kappa() -> Vec<f64> {
    vec![4.4934]
}
fn default_ratio() -> Vec<f64> {
    vec![1.0]
}
fn default_eta() -> Vec<f64> {
    vec![-1.0]
}
fn default_tol() -> f64 {
    1e-8
}
fn default_max_iter() -> usize {
    1000
}
fn default_singular() -> usize {
    QuadratureOptions::default().singular_order
}
fn default_regular() -> usize {
    QuadratureOptions::default().regular_order
}
fn default_mid() -> f64 {
    QuadratureOptions::default().mid_ratio
}
fn default_far() -> f64 {
    QuadratureOptions::default().far_ratio
}
fn default_rhs_order() -> usize {
    5
}
fn default_points() -> usize {
    5000
}
fn default_out() -> String {
    "out".into()
}

macro_rules! default_from_serde {
    ($($t:ty),*) => {$(
        impl Default for $t {
            fn default() -> Self {
                toml::from_str("").expect("empty table deserializes to defaults")
            }
        }
    )*};
}
default_from_serde!(GeometryConfig, MeshConfig, WaveConfig, CouplingConfig, SolverConfig, QuadConfig, EvalConfig, OutputConfig);

impl Default for RunConfig {
    fn default() -> Self {
        toml::from_str("").expect("empty document deserializes to defaults")
    }
}

impl RunConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn geometry(&self) -> Result<Geometry> {
        match self.geometry.kind.as_str() {
            "sphere" => Ok(Geometry::Sphere),
            "cube" => Ok(Geometry::Cube),
            other => Err(Error::Config(format!("unknown geometry kind '{other}' (expected sphere or cube)"))),
        }
    }

    pub fn quadrature(&self) -> QuadratureOptions {
        QuadratureOptions {
            singular_order: self.quad.singular_order,
            regular_order: self.quad.regular_order,
            mid_ratio: self.quad.mid_ratio,
            far_ratio: self.quad.far_ratio,
        }
    }

    /// Absolute coupling parameter for wavenumber κ.
    pub fn eta_values(&self, kappa: f64) -> Vec<f64> {
        let scale = if self.coupling.relative { kappa * kappa } else { 1.0 };
        self.coupling.eta.iter().map(|e| e * scale).collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry()?;
        let positive = |name: &str, v: &[f64]| -> Result<()> {
            if v.is_empty() {
                return Err(Error::Config(format!("{name} must not be empty")));
            }
            if let Some(bad) = v.iter().find(|x| !(**x > 0.0 && x.is_finite())) {
                return Err(Error::Config(format!("{name} entries must be positive, got {bad}")));
            }
            Ok(())
        };
        if !(self.geometry.size > 0.0 && self.geometry.size.is_finite()) {
            return Err(Error::Config("geometry.size must be positive".into()));
        }
        positive("mesh.h", &self.mesh.h)?;
        positive("wave.kappa", &self.wave.kappa)?;
        positive("wave.kappa_prime_ratio", &self.wave.kappa_prime_ratio)?;
        if self.coupling.eta.is_empty() || self.coupling.eta.iter().any(|e| *e == 0.0 || !e.is_finite()) {
            return Err(Error::Config("coupling.eta must be a non-empty list of nonzero values".into()));
        }
        if !(self.solver.tol > 0.0 && self.solver.tol < 1.0) {
            return Err(Error::Config("solver.tol must lie in (0,1)".into()));
        }
        if self.solver.max_iter == 0 {
            return Err(Error::Config("solver.max_iter must be positive".into()));
        }
        if self.eval.points == 0 || !(self.eval.radius > 0.0) {
            return Err(Error::Config("eval.points and eval.radius must be positive".into()));
        }
        if !(1..=10).contains(&self.quad.rhs_order) {
            return Err(Error::Config("quad.rhs_order must lie in 1..=10".into()));
        }
        self.quadrature().validate().map_err(|e| Error::Config(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_valid_defaults() {
        let c = RunConfig::from_toml_str("").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.quad.singular_order, 4);
        assert_eq!(c.eta_values(2.0), vec![-4.0]);
    }

    #[test]
    fn roundtrip_through_toml() {
        let mut c = RunConfig::default();
        c.geometry.kind = "cube".into();
        c.wave.kappa = vec![0.05, 2.0];
        let back = RunConfig::from_toml_str(&c.to_toml_string()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(RunConfig::from_toml_str("[geometry]\nkind = \"torus\"").is_err());
        assert!(RunConfig::from_toml_str("[mesh]\nh = []").is_err());
        assert!(RunConfig::from_toml_str("[coupling]\neta = [0.0]").is_err());
        assert!(RunConfig::from_toml_str("[solver]\ntol = 1.5").is_err());
        assert!(RunConfig::from_toml_str("[solver]\ntolerance = 1e-3").is_err());
    }
}
