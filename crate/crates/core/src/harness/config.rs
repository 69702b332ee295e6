//! TOML run configuration.
//!
//! Every section is optional; missing keys take the defaults below.
//!
//! ```toml
//! [grid]
//! length = 125.66370614359172   # 40π
//! n = 512
//!
//! [initial]
//! kind = "soliton"              # "soliton" | "samples" | "zero"
//! k = 0.5                       # soliton: sech² amplitude parameter
//! # values = [...]              # samples: n grid values of φ₀(0)
//!
//! [time]
//! t_final = 1.0
//! dt = 0.002
//! stride = 50                   # snapshot stride of the kdv subcommand
//!
//! [sweep]
//! epsilons = [0.1, 0.05, 0.025, 0.0125]
//! betas = [0.5, 1.0, 1.5]       # ν = ε^β; or nus = [...] for fixed ν
//!
//! [transport]
//! kind = "constant"             # "constant" (μ = κ = 1) | "sqrt" (μ = κ = √θ)
//!
//! [regime]
//! c0 = 0.25
//! c1 = 0.01
//!
//! [output]
//! dir = "out"
//!
//! [tolerances]
//! leading_residual = 1e-12
//! higher_residual = 1e-5
//! invariant_drift = 1e-8
//! theta_mean = 1e-8
//! soliton_boundary = 1e-10
//! ```

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fluid::TransportCoeffs;
use crate::kdv::{soliton_boundary_ratio, soliton_exact, step_count, KdvState};
use crate::regime::ScalingParams;
use crate::spectral::{Grid, RealField};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[derive(Default)]
pub struct RunConfig {
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub initial: InitialData,
    #[serde(default)]
    pub time: TimeConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub transport: TransportConfig,
    #[serde(default)]
    pub regime: RegimeConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub length: f64,
    pub n: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { length: 40.0 * PI, n: 512 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum InitialData {
    Soliton { k: f64 },
    Samples { values: Vec<f64> },
    Zero,
}

impl Default for InitialData {
    fn default() -> Self {
        InitialData::Soliton { k: 0.5 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeConfig {
    pub t_final: f64,
    pub dt: f64,
    pub stride: usize,
}

impl Default for TimeConfig {
    fn default() -> Self {
        TimeConfig { t_final: 1.0, dt: 0.002, stride: 50 }
    }
}

/// With neither `betas` nor `nus` given, `betas = [0.5, 1.0, 1.5]`;
/// `betas = []` leaves Euler-Poisson cases only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub epsilons: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub betas: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nus: Option<Vec<f64>>,
}

pub const DEFAULT_BETAS: [f64; 3] = [0.5, 1.0, 1.5];

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig { epsilons: vec![0.1, 0.05, 0.025, 0.0125], betas: None, nus: None }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransportKind {
    #[default]
    Constant,
    Sqrt,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransportConfig {
    pub kind: TransportKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegimeConfig {
    pub c0: f64,
    pub c1: f64,
}

impl Default for RegimeConfig {
    fn default() -> Self {
        RegimeConfig { c0: crate::regime::DEFAULT_C0, c1: crate::regime::DEFAULT_C1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: PathBuf::from("out") }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub leading_residual: f64,
    pub higher_residual: f64,
    pub invariant_drift: f64,
    pub theta_mean: f64,
    pub soliton_boundary: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            leading_residual: 1e-12,
            higher_residual: 1e-5,
            invariant_drift: 1e-8,
            theta_mean: 1e-8,
            soliton_boundary: 1e-10,
        }
    }
}

/// One case of a sweep: Euler-Poisson when `nu` is `None`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CaseKey {
    pub epsilon: f64,
    pub nu: Option<f64>,
    pub beta: Option<f64>,
}

impl CaseKey {
    pub fn ep(epsilon: f64) -> Self {
        CaseKey { epsilon, nu: None, beta: None }
    }

    /// Report order: ε decreasing, Euler-Poisson first, then ν decreasing.
    pub fn order(&self, other: &CaseKey) -> std::cmp::Ordering {
        let nu = |k: &CaseKey| k.nu.unwrap_or(f64::INFINITY);
        other.epsilon.total_cmp(&self.epsilon).then(nu(other).total_cmp(&nu(self)))
    }
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Canonical TOML form; the digest is taken over these bytes.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    /// Hex SHA-256 of [`canonical`](Self::canonical).
    pub fn digest(&self) -> String {
        Sha256::digest(self.canonical().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.grid;
        if !(g.length.is_finite() && g.length > 0.0) {
            return Err(config_err(format!("grid.length must be positive, got {}", g.length)));
        }
        if g.n < 4 || !g.n.is_multiple_of(2) {
            return Err(config_err(format!("grid.n must be even and at least 4, got {}", g.n)));
        }
        match &self.initial {
            InitialData::Soliton { k } if !(k.is_finite() && *k > 0.0) => {
                return Err(config_err(format!("initial.k must be positive, got {k}")));
            }
            InitialData::Samples { values } if values.len() != g.n => {
                return Err(config_err(format!("initial.values has {} entries, grid.n is {}", values.len(), g.n)));
            }
            InitialData::Samples { values } if values.iter().any(|v| !v.is_finite()) => {
                return Err(config_err("initial.values must be finite"));
            }
            _ => {}
        }
        let t = &self.time;
        if !(t.t_final.is_finite() && t.t_final > 0.0) {
            return Err(config_err(format!("time.t_final must be positive, got {}", t.t_final)));
        }
        step_count(t.t_final, t.dt).map_err(|e| config_err(e.to_string()))?;
        if t.stride == 0 {
            return Err(config_err("time.stride must be at least 1"));
        }
        for &e in &self.sweep.epsilons {
            if !(e.is_finite() && e > 0.0 && e < 1.0) {
                return Err(config_err(format!("sweep.epsilons must lie in (0, 1), got {e}")));
            }
        }
        match (&self.sweep.betas, &self.sweep.nus) {
            (Some(_), Some(_)) => return Err(config_err("give sweep.betas or sweep.nus, not both")),
            (Some(b), None) if b.iter().any(|v| !v.is_finite()) => {
                return Err(config_err("sweep.betas must be finite"));
            }
            (None, Some(n)) if n.iter().any(|v| !(v.is_finite() && *v > 0.0)) => {
                return Err(config_err("sweep.nus must be positive"));
            }
            _ => {}
        }
        for key in self.cases() {
            if let Some(nu) = key.nu {
                self.scaling(key.epsilon, nu, key.beta).map_err(|e| config_err(e.to_string()))?;
            }
        }
        let r = &self.regime;
        ScalingParams::new(0.5, 0.5)
            .and_then(|p| p.with_constants(r.c0, r.c1))
            .map_err(|e| config_err(e.to_string()))?;
        let tol = &self.tolerances;
        for (name, v) in [
            ("leading_residual", tol.leading_residual),
            ("higher_residual", tol.higher_residual),
            ("invariant_drift", tol.invariant_drift),
            ("theta_mean", tol.theta_mean),
            ("soliton_boundary", tol.soliton_boundary),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(config_err(format!("tolerances.{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    pub fn make_grid(&self) -> Result<Grid> {
        Grid::new(self.grid.length, self.grid.n)
    }

    /// `φ₀(0)` on `grid`.
    pub fn initial_state(&self, grid: &Grid) -> Result<KdvState> {
        let phi0 = match &self.initial {
            InitialData::Soliton { k } => {
                let ratio = soliton_boundary_ratio(*k, grid.length());
                if ratio > self.tolerances.soliton_boundary {
                    log::warn!("soliton tail at the box edge is {ratio:e} of its peak");
                }
                soliton_exact(grid, *k, 0.0)?
            }
            InitialData::Samples { values } => RealField::new(grid, values.clone())?,
            InitialData::Zero => RealField::zeros(grid),
        };
        Ok(KdvState::new(0.0, phi0))
    }

    pub fn coeffs(&self) -> TransportCoeffs {
        match self.transport.kind {
            TransportKind::Constant => TransportCoeffs::constant(),
            TransportKind::Sqrt => TransportCoeffs::sqrt_theta(),
        }
    }

    pub fn scaling(&self, epsilon: f64, nu: f64, beta: Option<f64>) -> Result<ScalingParams> {
        let p = match beta {
            Some(b) => ScalingParams::from_beta(epsilon, b)?,
            None => ScalingParams::new(epsilon, nu)?,
        };
        p.with_constants(self.regime.c0, self.regime.c1)
    }

    /// All cases in report order: one Euler-Poisson case per ε, then one
    /// Navier-Stokes-Poisson case per resolved ν.
    pub fn cases(&self) -> Vec<CaseKey> {
        let mut keys = Vec::new();
        for &e in &self.sweep.epsilons {
            keys.push(CaseKey::ep(e));
            let betas = match (&self.sweep.betas, &self.sweep.nus) {
                (Some(b), _) => b.as_slice(),
                (None, None) => &DEFAULT_BETAS[..],
                (None, Some(_)) => &[],
            };
            keys.extend(betas.iter().map(|&b| CaseKey { epsilon: e, nu: Some(e.powf(b)), beta: Some(b) }));
            if let Some(nus) = &self.sweep.nus {
                keys.extend(nus.iter().map(|&n| CaseKey { epsilon: e, nu: Some(n), beta: None }));
            }
        }
        keys.sort_by(CaseKey::order);
        keys.dedup_by(|a, b| a.order(b).is_eq());
        keys
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = RunConfig::from_toml_str("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.cases().len(), 16);
    }

    #[test]
    fn partial_sections_keep_other_defaults() {
        let cfg = RunConfig::from_toml_str("[grid]\nn = 256\n[sweep]\nepsilons = [0.05]\nbetas = [1.0]\n").unwrap();
        assert_eq!(cfg.grid.length, GridConfig::default().length);
        assert_eq!(cfg.grid.n, 256);
        assert_eq!(cfg.time, TimeConfig::default());
        assert_eq!(cfg.cases().len(), 2);
        let cfg = RunConfig::from_toml_str("[sweep]\nnus = [0.1]\n").unwrap();
        assert_eq!(cfg.cases().len(), 8);
        let cfg = RunConfig::from_toml_str("[sweep]\nbetas = []\n").unwrap();
        assert_eq!(cfg.cases().len(), 4);
    }

    #[test]
    fn canonical_form_round_trips() {
        let cfg = RunConfig::from_toml_str(
            "[initial]\nkind = \"samples\"\nvalues = [0.0, 1.0, 0.5, 0.25]\n[grid]\nn = 4\nlength = 2.0\n",
        )
        .unwrap();
        let again = RunConfig::from_toml_str(&cfg.canonical()).unwrap();
        assert_eq!(again, cfg);
        assert_eq!(again.digest(), cfg.digest());
        assert_eq!(cfg.digest().len(), 64);
    }

    #[test]
    fn digest_ignores_formatting_but_not_values() {
        let a = RunConfig::from_toml_str("[time]\nt_final = 1.0\ndt = 0.002\n").unwrap();
        let b = RunConfig::from_toml_str("[time]\n  dt = 2e-3   # comment\n t_final = 1\n").unwrap();
        let c = RunConfig::from_toml_str("[time]\nt_final = 1.0\ndt = 0.001\n").unwrap();
        assert_eq!(a.digest(), b.digest());
        assert_ne!(a.digest(), c.digest());
    }

    #[test]
    fn rejects_bad_values() {
        for text in [
            "[grid]\nlength = 10.0\nn = 31\n",
            "[time]\nt_final = 1.0\ndt = 0.3\n",
            "[sweep]\nepsilons = [1.5]\n",
            "[sweep]\nepsilons = [0.1]\nbetas = [1.0]\nnus = [0.1]\n",
            "[initial]\nkind = \"samples\"\nvalues = [1.0]\n",
            "[regime]\nc0 = 0.7\nc1 = 0.01\n",
            "[unknown]\nx = 1\n",
            "[tolerances]\nleading_residual = 0.0\nhigher_residual = 1.0\ninvariant_drift = 1.0\ntheta_mean = 1.0\nsoliton_boundary = 1.0\n",
        ] {
            assert!(matches!(RunConfig::from_toml_str(text), Err(Error::Config(_))), "{text}");
        }
    }

    #[test]
    fn case_order_is_stable() {
        let cfg = RunConfig::from_toml_str("[sweep]\nepsilons = [0.025, 0.1]\nnus = [0.01, 0.1]\n").unwrap();
        let keys: Vec<_> = cfg.cases().iter().map(|k| (k.epsilon, k.nu)).collect();
        assert_eq!(
            keys,
            vec![
                (0.1, None),
                (0.1, Some(0.1)),
                (0.1, Some(0.01)),
                (0.025, None),
                (0.025, Some(0.1)),
                (0.025, Some(0.01))
            ]
        );
    }
}
