use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

type Coefficient = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Lower and upper end of the temperature range on which coefficients are
/// checked.
pub const THETA_RANGE: (f64, f64) = (4.0 / 3.0, 2.0);

/// Viscosity `μ(θ)` and heat conductivity `κ(θ)`, both in `[1/C, C]` on
/// [`THETA_RANGE`].
#[derive(Clone)]
pub struct TransportCoeffs {
    name: String,
    mu: Coefficient,
    kappa: Coefficient,
    bound: f64,
}

impl TransportCoeffs {
    /// `μ = κ = 1`.
    pub fn constant() -> Self {
        TransportCoeffs { name: "constant".into(), mu: Arc::new(|_| 1.0), kappa: Arc::new(|_| 1.0), bound: 1.0 }
    }

    /// `μ = κ = √θ`.
    pub fn sqrt_theta() -> Self {
        TransportCoeffs { name: "sqrt".into(), mu: Arc::new(f64::sqrt), kappa: Arc::new(f64::sqrt), bound: 2f64.sqrt() }
    }

    /// User coefficients; rejected unless both stay in `[1/bound, bound]` on
    /// a 257-point sampling of the admissible temperature range.
    pub fn custom(
        name: impl Into<String>,
        mu: impl Fn(f64) -> f64 + Send + Sync + 'static,
        kappa: impl Fn(f64) -> f64 + Send + Sync + 'static,
        bound: f64,
    ) -> Result<Self> {
        if !(bound.is_finite() && bound >= 1.0) {
            return Err(Error::InvalidArgument(format!("coefficient bound must be >= 1, got {bound}")));
        }
        let (lo, hi) = THETA_RANGE;
        for i in 0..=256 {
            let th = lo + (hi - lo) * i as f64 / 256.0;
            for (label, v) in [("mu", mu(th)), ("kappa", kappa(th))] {
                if !(v.is_finite() && v >= 1.0 / bound && v <= bound) {
                    return Err(Error::InvalidArgument(format!(
                        "{label}({th}) = {v} outside [{}, {bound}]",
                        1.0 / bound
                    )));
                }
            }
        }
        Ok(TransportCoeffs { name: name.into(), mu: Arc::new(mu), kappa: Arc::new(kappa), bound })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn mu(&self, theta: f64) -> f64 {
        (self.mu)(theta)
    }

    pub fn kappa(&self, theta: f64) -> f64 {
        (self.kappa)(theta)
    }
}

impl Default for TransportCoeffs {
    fn default() -> Self {
        TransportCoeffs::constant()
    }
}

impl fmt::Debug for TransportCoeffs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TransportCoeffs").field("name", &self.name).field("bound", &self.bound).finish()
    }
}
