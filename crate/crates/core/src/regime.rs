//! Collision-frequency scalings, the weak-collision bands and the map between
//! the long-wave variables and the laboratory frame.
//!
//! With `ν = ε^β`, the finite-time band is `1/2 + c₀ ≤ β ≤ 3/2 − c₀` and the
//! global band is `5/2 + c₀ ≤ β ≤ 3 − c₀`. Each band also admits the
//! endpoint scalings `ν = c ε^{lo}` and `ν = ε^{hi} / c` for any prefactor
//! `c ∈ [c₁, 1]`, as long as `ν` stays within `[ε^{hi}, ε^{lo}]`.
//!
//! ```
//! use kdv_limit::regime::{check_regime, Band, ScalingParams};
//!
//! let p = ScalingParams::from_beta(0.01, 1.0).unwrap();
//! assert!((p.delta() - 1e-5).abs() < 1e-18);
//! assert!(check_regime(&p, Band::FiniteTime).inside);
//! assert!(!check_regime(&p, Band::Global).inside);
//! ```

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fluid::FluidState;
use crate::profile::ApproxProfile;
use crate::spectral::{Grid, RealField};

pub const DEFAULT_C0: f64 = 0.25;
pub const DEFAULT_C1: f64 = 0.01;

/// Log-space slack on the endpoint prefactor test, for `ν` built as `ε^β`
/// with rounding.
const BOUNDARY_TOL: f64 = 1e-12;

/// `δ = ε^{7/2} / ν`, computed through logarithms.
pub fn delta_from_nu(epsilon: f64, nu: f64) -> f64 {
    (3.5 * epsilon.ln() - nu.ln()).exp()
}

/// `ε`, `ν` and the derived `δ`, each kept with its natural logarithm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScalingParams {
    epsilon: f64,
    nu: f64,
    ln_epsilon: f64,
    ln_nu: f64,
    c0: f64,
    c1: f64,
}

impl ScalingParams {
    pub fn new(epsilon: f64, nu: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::InvalidArgument(format!("epsilon must lie in (0, 1), got {epsilon}")));
        }
        if !(nu.is_finite() && nu > 0.0) {
            return Err(Error::InvalidArgument(format!("nu must be positive, got {nu}")));
        }
        Ok(ScalingParams { epsilon, nu, ln_epsilon: epsilon.ln(), ln_nu: nu.ln(), c0: DEFAULT_C0, c1: DEFAULT_C1 })
    }

    /// `ν = ε^β`. The logarithm is kept exact, so `beta()` returns `β`.
    pub fn from_beta(epsilon: f64, beta: f64) -> Result<Self> {
        if !beta.is_finite() {
            return Err(Error::InvalidArgument(format!("beta must be finite, got {beta}")));
        }
        let mut p = ScalingParams::new(epsilon, epsilon.powf(beta).max(f64::MIN_POSITIVE))?;
        p.ln_nu = beta * p.ln_epsilon;
        Ok(p)
    }

    pub fn with_constants(mut self, c0: f64, c1: f64) -> Result<Self> {
        if !(c0 > 0.0 && c0 < 0.5) {
            return Err(Error::InvalidArgument(format!("c0 must lie in (0, 1/2), got {c0}")));
        }
        if !(c1 > 0.0 && c1 < 1.0) {
            return Err(Error::InvalidArgument(format!("c1 must lie in (0, 1), got {c1}")));
        }
        self.c0 = c0;
        self.c1 = c1;
        Ok(self)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn c1(&self) -> f64 {
        self.c1
    }

    pub fn ln_epsilon(&self) -> f64 {
        self.ln_epsilon
    }

    pub fn ln_nu(&self) -> f64 {
        self.ln_nu
    }

    pub fn ln_delta(&self) -> f64 {
        3.5 * self.ln_epsilon - self.ln_nu
    }

    pub fn delta(&self) -> f64 {
        self.ln_delta().exp()
    }

    /// The viscosity prefactor `εδ = ε^{9/2} / ν`.
    pub fn epsdelta(&self) -> f64 {
        (self.ln_epsilon + self.ln_delta()).exp()
    }

    /// `β = ln ν / ln ε`.
    pub fn beta(&self) -> f64 {
        self.ln_nu / self.ln_epsilon
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Band {
    FiniteTime,
    Global,
}

impl Band {
    /// Exponents `(lo, hi)` such that the band is `ε^{hi−c₀} ≤ ν ≤ ε^{lo+c₀}`.
    pub fn exponents(self) -> (f64, f64) {
        match self {
            Band::FiniteTime => (0.5, 1.5),
            Band::Global => (2.5, 3.0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Band::FiniteTime => "finite-time",
            Band::Global => "global",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Membership {
    Interior,
    /// `ν = c ε^{lo}`, `c ∈ [c₁, 1]`.
    LowerBoundary,
    /// `ν = ε^{hi} / c`, `c ∈ [c₁, 1]`.
    UpperBoundary,
    Outside,
}

/// Band membership with log-scale margins; both margins are nonnegative
/// exactly when `ν` lies in the closed interior range.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RegimeReport {
    pub band: Band,
    pub inside: bool,
    pub membership: Membership,
    pub beta: f64,
    /// `ln ν − (hi − c₀) ln ε`.
    pub lower_margin: f64,
    /// `(lo + c₀) ln ε − ln ν`.
    pub upper_margin: f64,
}

/// `ln c₁ ≤ ln c ≤ 0` up to rounding.
fn prefactor_ok(ln_c: f64, ln_c1: f64, scale: f64) -> bool {
    let slack = BOUNDARY_TOL * scale.abs().max(1.0);
    ln_c >= ln_c1 - slack && ln_c <= slack
}

pub fn check_regime(p: &ScalingParams, band: Band) -> RegimeReport {
    let (lo, hi) = band.exponents();
    let le = p.ln_epsilon;
    let lower_margin = p.ln_nu - (hi - p.c0) * le;
    let upper_margin = (lo + p.c0) * le - p.ln_nu;
    let slack = BOUNDARY_TOL * p.ln_nu.abs().max(1.0);
    let between = p.ln_nu >= hi * le - slack && p.ln_nu <= lo * le + slack;
    let membership = if lower_margin >= 0.0 && upper_margin >= 0.0 {
        Membership::Interior
    } else if !between {
        Membership::Outside
    } else if p.beta() <= 0.5 * (lo + hi) {
        if prefactor_ok(p.ln_nu - lo * le, p.c1.ln(), p.ln_nu) {
            Membership::LowerBoundary
        } else {
            Membership::Outside
        }
    } else if prefactor_ok(hi * le - p.ln_nu, p.c1.ln(), p.ln_nu) {
        Membership::UpperBoundary
    } else {
        Membership::Outside
    };
    RegimeReport {
        band,
        inside: membership != Membership::Outside,
        membership,
        beta: p.beta(),
        lower_margin,
        upper_margin,
    }
}

/// Long-wave fields `(ρ, u₁, θ, φ)` at long-wave time `time`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScaledFields {
    pub time: f64,
    pub rho: RealField,
    pub u1: RealField,
    pub theta: RealField,
    pub phi: RealField,
}

impl From<&FluidState> for ScaledFields {
    fn from(s: &FluidState) -> Self {
        ScaledFields { time: s.time, rho: s.rho.clone(), u1: s.u1.clone(), theta: s.theta.clone(), phi: s.phi.clone() }
    }
}

impl From<&ApproxProfile> for ScaledFields {
    fn from(p: &ApproxProfile) -> Self {
        ScaledFields { time: p.time, rho: p.rho.clone(), u1: p.u1.clone(), theta: p.theta.clone(), phi: p.phi.clone() }
    }
}

/// Laboratory-frame moments at lab time `time`.
#[derive(Clone, Debug, PartialEq)]
pub struct LabFields {
    pub time: f64,
    pub rho: RealField,
    pub u1: RealField,
    pub theta: RealField,
    pub phi: RealField,
}

fn resample(f: &RealField, target: &Grid, map: impl Fn(f64) -> f64) -> RealField {
    let modes = f.to_modes();
    RealField::from_fn(target, |x| modes.eval_at(map(x)))
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon.is_finite() && epsilon > 0.0 && epsilon <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("epsilon must lie in (0, 1], got {epsilon}")))
    }
}

/// `ρ_lab(t, x) = ρ(ε^{3/2} t, ε^{1/2}(x − t))`, `u_lab = ε u`, `θ_lab = ε² θ`,
/// `φ_lab = ε φ`, sampled on `lab` by trigonometric interpolation. `s` must
/// be the long-wave snapshot at time `ε^{3/2} t_lab`; the scaled box is
/// treated as periodic.
pub fn to_lab_frame(s: &ScaledFields, epsilon: f64, t_lab: f64, lab: &Grid) -> Result<LabFields> {
    check_epsilon(epsilon)?;
    let sq = epsilon.sqrt();
    let map = |x: f64| sq * (x - t_lab);
    Ok(LabFields {
        time: t_lab,
        rho: resample(&s.rho, lab, map),
        u1: resample(&s.u1, lab, map).scale(epsilon),
        theta: resample(&s.theta, lab, map).scale(epsilon * epsilon),
        phi: resample(&s.phi, lab, map).scale(epsilon),
    })
}

/// Inverse of [`to_lab_frame`], sampled on the long-wave grid `scaled`.
pub fn from_lab_frame(l: &LabFields, epsilon: f64, scaled: &Grid) -> Result<ScaledFields> {
    check_epsilon(epsilon)?;
    let sq = epsilon.sqrt();
    let map = |y: f64| y / sq + l.time;
    Ok(ScaledFields {
        time: epsilon.powf(1.5) * l.time,
        rho: resample(&l.rho, scaled, map),
        u1: resample(&l.u1, scaled, map).scale(1.0 / epsilon),
        theta: resample(&l.theta, scaled, map).scale(1.0 / (epsilon * epsilon)),
        phi: resample(&l.phi, scaled, map).scale(1.0 / epsilon),
    })
}

/// Lab grid covering the same periodic box as `scaled`: length `L / √ε`.
pub fn lab_grid(scaled: &Grid, epsilon: f64, n: usize) -> Result<Grid> {
    check_epsilon(epsilon)?;
    Grid::new(scaled.length() / epsilon.sqrt(), n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::make_grid;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn delta_examples() {
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * b;
        assert!(close(delta_from_nu(0.01, 0.01), 1e-5));
        let e: f64 = 0.3;
        assert!(close(delta_from_nu(e, e.powf(3.5)), 1.0));
        assert!(close(delta_from_nu(0.05, 0.05f64.sqrt()), 1.25e-4));
        assert!(close(ScalingParams::from_beta(0.05, 1.5).unwrap().epsdelta(), 1.25e-4));
    }

    #[test]
    fn logs_survive_tiny_epsilon() {
        let p = ScalingParams::from_beta(1e-4, 3.4).unwrap();
        assert!((p.ln_delta() - 0.1 * (1e-4f64).ln()).abs() < 1e-12);
        assert!((p.beta() - 3.4).abs() < 1e-15);
    }

    #[test]
    fn band_examples() {
        let p = ScalingParams::from_beta(0.01, 1.0).unwrap();
        assert!(check_regime(&p, Band::FiniteTime).inside);
        let p = ScalingParams::from_beta(0.01, 3.0).unwrap();
        assert!(!check_regime(&p, Band::FiniteTime).inside);
        // With c₀ = 1/4 the global interior is the single exponent 2.75;
        // β = 3 enters through the endpoint scaling.
        let g = check_regime(&p, Band::Global);
        assert!(g.inside && g.membership == Membership::UpperBoundary, "{g:?}");
        let p = ScalingParams::from_beta(0.01, 2.75).unwrap();
        assert!(check_regime(&p, Band::Global).inside);
        let p = ScalingParams::from_beta(0.01, 4.0).unwrap();
        assert!(!check_regime(&p, Band::FiniteTime).inside);
        assert!(!check_regime(&p, Band::Global).inside);
    }

    #[test]
    fn boundary_scalings() {
        // The endpoint scalings only separate from the interior once ε^{c₀} < c₁.
        let e: f64 = 1e-10;
        let m = |nu: f64, b| check_regime(&ScalingParams::new(e, nu).unwrap(), b).membership;
        assert_eq!(m(0.01 * e.sqrt(), Band::FiniteTime), Membership::LowerBoundary);
        assert_eq!(m(e.sqrt(), Band::FiniteTime), Membership::LowerBoundary);
        assert_eq!(m(0.009 * e.sqrt(), Band::FiniteTime), Membership::Outside);
        assert_eq!(m(1.1 * e.sqrt(), Band::FiniteTime), Membership::Outside);
        assert_eq!(m(e.powf(1.5) / 0.01, Band::FiniteTime), Membership::UpperBoundary);
        assert_eq!(m(e.powf(1.5), Band::FiniteTime), Membership::UpperBoundary);
        assert_eq!(m(0.9 * e.powf(1.5), Band::FiniteTime), Membership::Outside);
        assert_eq!(m(e.powi(3) / 0.01, Band::Global), Membership::UpperBoundary);
        assert_eq!(m(0.01 * e.powf(2.5), Band::Global), Membership::LowerBoundary);
    }

    #[test]
    fn invalid_params() {
        assert!(ScalingParams::new(0.0, 1.0).is_err());
        assert!(ScalingParams::new(1.5, 1.0).is_err());
        assert!(ScalingParams::new(0.1, -1.0).is_err());
        assert!(ScalingParams::new(0.1, 0.1).unwrap().with_constants(0.5, 0.01).is_err());
        assert!(ScalingParams::new(0.1, 0.1).unwrap().with_constants(0.1, 1.0).is_err());
    }

    fn band_limited(g: &Grid, shift: f64) -> RealField {
        let w = 2.0 * PI / g.length();
        RealField::from_fn(g, |x| shift + 0.3 * (w * x).sin() + 0.1 * (3.0 * w * x + 0.4).cos())
    }

    #[test]
    fn unit_epsilon_at_time_zero_is_identity() {
        let g = make_grid(10.0, 32).unwrap();
        let s = ScaledFields {
            time: 0.0,
            rho: band_limited(&g, 1.0),
            u1: band_limited(&g, 0.0),
            theta: band_limited(&g, 1.5),
            phi: band_limited(&g, 0.0),
        };
        let l = to_lab_frame(&s, 1.0, 0.0, &g).unwrap();
        for (a, b) in [(&l.rho, &s.rho), (&l.u1, &s.u1), (&l.theta, &s.theta), (&l.phi, &s.phi)] {
            assert!((a - b).norms().linf <= 1e-13);
        }
    }

    #[test]
    fn constant_state_maps_to_scaled_constants() {
        let g = make_grid(10.0, 16).unwrap();
        let eps = 0.04;
        let s = ScaledFields {
            time: 0.3,
            rho: RealField::constant(&g, 1.0),
            u1: RealField::zeros(&g),
            theta: RealField::constant(&g, 1.5),
            phi: RealField::zeros(&g),
        };
        let lg = lab_grid(&g, eps, 16).unwrap();
        let l = to_lab_frame(&s, eps, 2.0, &lg).unwrap();
        assert!(l.rho.values().iter().all(|&v| (v - 1.0).abs() < 1e-14));
        assert!(l.theta.values().iter().all(|&v| (v - 1.5 * eps * eps).abs() < 1e-16));
        assert_eq!(l.u1.norms().linf, 0.0);
        assert_eq!(l.phi.norms().linf, 0.0);
    }

    proptest! {
        #[test]
        fn delta_monotone(e in 0.001f64..0.9, n in 1e-6f64..0.5, f in 1.01f64..3.0) {
            prop_assert!(delta_from_nu(e, n * f) < delta_from_nu(e, n));
            prop_assert!(delta_from_nu((e * f).min(0.99), n) > delta_from_nu(e, n) || e * f >= 0.99);
        }

        #[test]
        fn membership_matches_exponents(e in 1e-4f64..0.5, beta in 0.0f64..4.0) {
            let p = ScalingParams::from_beta(e, beta).unwrap();
            let r = check_regime(&p, Band::FiniteTime);
            prop_assert_eq!(r.membership == Membership::Interior, (0.75..=1.25).contains(&beta));
            prop_assert_eq!(r.lower_margin >= 0.0 && r.upper_margin >= 0.0, r.membership == Membership::Interior);
            // Near an endpoint the prefactor ε^{c₀} stays above c₁ on this
            // range of ε, so the closed exponent range is admitted exactly.
            prop_assert_eq!(r.inside, (0.5..=1.5).contains(&beta));
            let g = check_regime(&p, Band::Global);
            prop_assert_eq!(g.membership == Membership::Interior, beta == 2.75);
        }

        #[test]
        fn frame_round_trip(eps in 0.01f64..1.0, t in -3.0f64..3.0, phase in 0.0f64..6.0) {
            let g = make_grid(20.0, 32).unwrap();
            let w = 2.0 * PI / 20.0;
            let f = |c: f64| RealField::from_fn(&g, |x| c + 0.2 * (w * x + phase).sin() - 0.05 * (5.0 * w * x).cos());
            let s = ScaledFields { time: eps.powf(1.5) * t, rho: f(1.0), u1: f(0.0), theta: f(1.5), phi: f(0.0) };
            let lg = lab_grid(&g, eps, 48).unwrap();
            let back = from_lab_frame(&to_lab_frame(&s, eps, t, &lg).unwrap(), eps, &g).unwrap();
            prop_assert!((back.time - s.time).abs() <= 1e-14);
            for (a, b) in [(&back.rho, &s.rho), (&back.u1, &s.u1), (&back.theta, &s.theta), (&back.phi, &s.phi)] {
                prop_assert!((a - b).norms().linf <= 1e-10);
            }
        }
    }
}
