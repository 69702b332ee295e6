//! Order-by-order corrections around the KdV profile.
//!
//! With `U_i` the velocity corrections, `U₀ = ρ₁ = θ₁ = φ₀` solves KdV, the
//! second level is algebraic in `(U₀, U₁)`, `U₁` and `U₂` solve linear forced
//! equations, and the third level `(ρ₃, φ₂, θ₃)` is recovered from spatial
//! antiderivatives. Every `∂_t` inside a source is replaced by its evolution
//! equation before discretization. `U₃ = φ₃ = 0` and `U₁(0) = U₂(0) = 0`.

mod residuals;
mod solver;

pub use residuals::{hierarchy_residuals, EquationLabel};
pub use solver::{solve_hierarchy, solve_hierarchy_from, solve_u1, solve_u2, CorrectionSolver, CorrectionTrajectory};

use log::warn;

use crate::kdv::kdv_rhs;
use crate::spectral::{antideriv_zero_mean, dealiased_product as prod, deriv, RealField};

/// Default bound on the mean of the `θ₃` antiderivative integrand.
pub const DEFAULT_MEAN_TOL: f64 = 1e-8;

/// All corrections at one time.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrectionSet {
    pub time: f64,
    pub u0: RealField,
    pub u1: RealField,
    pub u2: RealField,
    pub u3: RealField,
    pub rho1: RealField,
    pub rho2: RealField,
    pub rho3: RealField,
    pub theta1: RealField,
    pub theta2: RealField,
    pub theta3: RealField,
    pub phi0: RealField,
    pub phi1: RealField,
    pub phi2: RealField,
    pub phi3: RealField,
}

impl CorrectionSet {
    /// Builds every level from the evolved velocity corrections.
    pub fn assemble(time: f64, u0: &RealField, u1: &RealField, u2: &RealField) -> (Self, Level3) {
        let (rho1, theta1, phi0) = first_order(u0);
        let (rho2, phi1, theta2) = level2_algebraic(u0, u1);
        let l3 = recover_level3(u0, u1, u2, &rho2);
        let zero = RealField::zeros(u0.grid());
        let set = CorrectionSet {
            time,
            u0: u0.clone(),
            u1: u1.clone(),
            u2: u2.clone(),
            u3: zero.clone(),
            rho1,
            rho2,
            rho3: l3.rho3.clone(),
            theta1,
            theta2,
            theta3: l3.theta3.clone(),
            phi0,
            phi1,
            phi2: l3.phi2.clone(),
            phi3: zero,
        };
        (set, l3)
    }

    /// Identically zero corrections on the grid of `like`.
    pub fn zeros(time: f64, like: &RealField) -> Self {
        let z = RealField::zeros(like.grid());
        CorrectionSet::assemble(time, &z, &z, &z).0
    }
}

/// `(ρ₁, θ₁, φ₀)`, each equal to `U₀`.
pub fn first_order(phi0: &RealField) -> (RealField, RealField, RealField) {
    (phi0.clone(), phi0.clone(), phi0.clone())
}

/// `∂_tU₀` from the KdV equation.
pub fn dt_u0(u0: &RealField) -> RealField {
    kdv_rhs(u0)
}

/// Source of the `U₁` equation with `∂_tU₀` eliminated.
pub fn n1_source(u0: &RealField) -> RealField {
    let d = dt_u0(u0);
    let u0sq = prod(u0, u0);
    let inner = deriv(u0, 2) * -0.5 + &u0sq * 0.25;
    deriv(&d, 2) * 0.25
        - prod(u0, &d) * 0.25
        - deriv(u0, 5) * 0.25
        - deriv(&u0sq, 3) * 0.125
        - deriv(&prod(&inner, u0), 1) * 0.5
        - deriv(u0, 1) * (5.0 / 6.0)
}

/// `(ρ₂, φ₁, θ₂)`:
/// `ρ₂ = U₁ - ½∂²U₀ + ¼U₀²`, `φ₁ = U₁ + ½∂²U₀ + ¼U₀²`,
/// `θ₂ = U₁ - ½∂²U₀ + U₀²/12`.
pub fn level2_algebraic(u0: &RealField, u1: &RealField) -> (RealField, RealField, RealField) {
    let dxx = deriv(u0, 2);
    let sq = prod(u0, u0);
    let rho2 = u1 - &(&dxx * 0.5) + &sq * 0.25;
    let phi1 = u1 + &(&dxx * 0.5) + &sq * 0.25;
    let theta2 = u1 - &(&dxx * 0.5) + &sq * (1.0 / 12.0);
    (rho2, phi1, theta2)
}

/// Source of the `U₂` equation:
/// `-U₁∂U₁ - ∂ρ₂ - (2/3)∂θ₂ + (1/3)U₀∂U₀`.
///
/// The last term comes from expanding `θ∂ρ/ρ` to second order, where the
/// `-ρ₁∂ρ₁` contribution combines with `(2/3)θ₁∂ρ₁`.
pub fn n2_source(u0: &RealField, u1: &RealField, rho2: &RealField, theta2: &RealField) -> RealField {
    prod(u1, &deriv(u1, 1)) * -1.0 - deriv(rho2, 1) - deriv(theta2, 1) * (2.0 / 3.0)
        + prod(u0, &deriv(u0, 1)) * (1.0 / 3.0)
}

/// `∫ U₀ ∂_tU₀ = -½U₀∂²U₀ + ¼(∂U₀)² - ½U₀³`.
pub fn antideriv_u0_dtu0(u0: &RealField) -> RealField {
    let d1 = deriv(u0, 1);
    prod(u0, &deriv(u0, 2)) * -0.5 + prod(&d1, &d1) * 0.25 - prod(u0, &prod(u0, u0)) * 0.5
}

/// `∫ N₁(U₀)` in closed form:
/// `¼∂D + (3/8)U₀∂²U₀ - (1/16)(∂U₀)² - ¼∂⁴U₀ - (1/8)∂²(U₀²) - (5/6)U₀`, `D = ∂_tU₀`.
pub fn antideriv_n1(u0: &RealField) -> RealField {
    let d = dt_u0(u0);
    let d1 = deriv(u0, 1);
    deriv(&d, 1) * 0.25 + prod(u0, &deriv(u0, 2)) * 0.375
        - prod(&d1, &d1) * 0.0625
        - deriv(u0, 4) * 0.25
        - deriv(&prod(u0, u0), 2) * 0.125
        - u0 * (5.0 / 6.0)
}

/// `∂_tU₁ = N₁(U₀) - ½∂³U₁ - (3/2)∂(U₀U₁)`.
pub fn dt_u1(u0: &RealField, u1: &RealField) -> RealField {
    n1_source(u0) - deriv(u1, 3) * 0.5 - deriv(&prod(u0, u1), 1) * 1.5
}

/// Third-level fields and the diagnostic of the one numerical antiderivative.
#[derive(Clone, Debug)]
pub struct Level3 {
    pub rho3: RealField,
    pub phi2: RealField,
    pub theta3: RealField,
    /// Mean of the integrand behind `θ₃ - U₂`; zero on an unbounded line,
    /// nonzero only through box truncation.
    pub theta_integrand_mean: f64,
}

/// Recovers `(ρ₃, φ₂, θ₃)`.
///
/// `ρ₃` and `φ₂` use closed forms, so `-∂²φ₁ + φ₂ = ρ₃` holds pointwise.
/// `θ₃` uses the zero-mean antiderivative of
/// `∂_tU₁ + (1/6)U₀∂_tU₀ - ½U₀∂³U₀ + (2/9)U₀²∂U₀ - (1/3)∂²U₀∂U₀`.
pub fn recover_level3(u0: &RealField, u1: &RealField, u2: &RealField, rho2: &RealField) -> Level3 {
    let d = dt_u0(u0);
    let dd = deriv(&d, 1);
    let u0u1 = prod(u0, u1);
    let i_u0d = antideriv_u0_dtu0(u0);
    let i_dtu1 = antideriv_n1(u0) - deriv(u1, 2) * 0.5 - &u0u1 * 1.5;
    let i_dtrho2 = &i_dtu1 - &(&dd * 0.5) + &i_u0d * 0.5;
    let rho3 = u2 + &prod(rho2, u0) + &u0u1 + i_dtrho2;
    let phi2 = u2 - &u0u1 - &(u0 * (5.0 / 3.0)) - i_dtu1;

    let d1 = deriv(u0, 1);
    let integrand = dt_u1(u0, u1) + prod(u0, &d) * (1.0 / 6.0) - prod(u0, &deriv(u0, 3)) * 0.5
        + prod(&prod(u0, u0), &d1) * (2.0 / 9.0)
        - prod(&deriv(u0, 2), &d1) * (1.0 / 3.0);
    let anti = antideriv_zero_mean(&integrand);
    if anti.mean_exceeds(DEFAULT_MEAN_TOL) {
        warn!("θ₃ integrand mean {:.3e} exceeds {DEFAULT_MEAN_TOL:e}", anti.integrand_mean);
    }
    let theta3 = u2 - &(&dd * 0.5) + &u0u1 * (5.0 / 3.0) + anti.field;
    Level3 { rho3, phi2, theta3, theta_integrand_mean: anti.integrand_mean }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kdv::soliton_exact;
    use crate::spectral::{make_grid, Grid};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn sine_grid() -> Grid {
        make_grid(2.0 * PI, 32).unwrap()
    }

    fn max_diff(a: &RealField, b: &RealField) -> f64 {
        (a - b).norms().linf
    }

    /// Removes the mean so antiderivatives are compared up to a constant.
    fn centered(f: &RealField) -> RealField {
        let m = f.norms().mean;
        f.map(|v| v - m)
    }

    #[test]
    fn first_order_aliases() {
        let g = sine_grid();
        let f = RealField::from_fn(&g, |x| x.sin());
        let (a, b, c) = first_order(&f);
        assert_eq!(a.values(), f.values());
        assert_eq!(b.values(), f.values());
        assert_eq!(c.values(), f.values());
    }

    #[test]
    fn n1_of_zero_and_constant() {
        let g = sine_grid();
        assert!(n1_source(&RealField::zeros(&g)).norms().linf == 0.0);
        assert!(n1_source(&RealField::constant(&g, 0.4)).norms().linf <= 1e-14);
    }

    #[test]
    fn n1_of_sine_matches_hand_evaluation() {
        let g = sine_grid();
        let got = n1_source(&RealField::from_fn(&g, f64::sin));
        // With s = sin x, c = cos x: D = ½c - (3/2)sc, ∂²D = -½c + 3 sin2x,
        // ∂³(s²) = -4 sin2x, ∂(s(½s + ¼s²)) = sc + ¾s²c.
        let expected = RealField::from_fn(&g, |x| {
            let (s, c) = x.sin_cos();
            let dd = -0.5 * c + 3.0 * (2.0 * x).sin();
            let u0d = 0.5 * s * c - 1.5 * s * s * c;
            0.25 * dd - 0.25 * u0d - 0.25 * c + 0.5 * (2.0 * x).sin() - 0.5 * (s * c + 0.75 * s * s * c) - 5.0 / 6.0 * c
        });
        assert!(max_diff(&got, &expected) <= 1e-10, "{}", max_diff(&got, &expected));
    }

    #[test]
    fn level2_constants() {
        let g = sine_grid();
        let c = 0.6;
        let (rho2, phi1, theta2) = level2_algebraic(&RealField::constant(&g, c), &RealField::zeros(&g));
        assert_abs_diff_eq!(rho2.values()[3], c * c / 4.0, epsilon = 1e-14);
        assert_abs_diff_eq!(phi1.values()[3], c * c / 4.0, epsilon = 1e-14);
        assert_abs_diff_eq!(theta2.values()[3], c * c / 12.0, epsilon = 1e-14);
    }

    #[test]
    fn n2_of_constants_and_sines() {
        let g = sine_grid();
        let k = |c: f64| RealField::constant(&g, c);
        assert!(n2_source(&k(0.3), &k(-0.2), &k(1.0), &k(2.0)).norms().linf <= 1e-14);
        let u0 = RealField::from_fn(&g, f64::sin);
        let u1 = RealField::from_fn(&g, |x| (2.0 * x).cos());
        let rho2 = RealField::from_fn(&g, |x| (3.0 * x).sin());
        let theta2 = RealField::from_fn(&g, f64::cos);
        let got = n2_source(&u0, &u1, &rho2, &theta2);
        let expected = RealField::from_fn(&g, |x| {
            let u1d = -2.0 * (2.0 * x).sin();
            -(2.0 * x).cos() * u1d - 3.0 * (3.0 * x).cos() + 2.0 / 3.0 * x.sin() + x.sin() * x.cos() / 3.0
        });
        assert!(max_diff(&got, &expected) <= 1e-10);
    }

    #[test]
    fn u0_dtu0_antiderivative_two_routes() {
        let g = make_grid(40.0 * PI, 512).unwrap();
        let u0 = soliton_exact(&g, 0.5, 0.0).unwrap();
        let direct = antideriv_zero_mean(&prod(&u0, &dt_u0(&u0)));
        let closed = antideriv_u0_dtu0(&u0);
        assert!(max_diff(&direct.field, &centered(&closed)) <= 1e-8);

        // Writing the cubic term as -½∂(U₀³) does not give an antiderivative.
        let d1 = deriv(&u0, 1);
        let literal =
            prod(&u0, &deriv(&u0, 2)) * -0.5 + prod(&d1, &d1) * 0.25 - deriv(&prod(&u0, &prod(&u0, &u0)), 1) * 0.5;
        assert!(max_diff(&direct.field, &centered(&literal)) > 1e-2);
    }

    #[test]
    fn n1_antiderivative_two_routes() {
        let g = make_grid(40.0 * PI, 512).unwrap();
        let u0 = soliton_exact(&g, 0.5, 0.0).unwrap();
        let direct = antideriv_zero_mean(&n1_source(&u0));
        assert!(direct.integrand_mean.abs() <= 1e-12);
        assert!(max_diff(&direct.field, &centered(&antideriv_n1(&u0))) <= 1e-8);
    }

    #[test]
    fn theta3_matches_closed_form() {
        let g = make_grid(40.0 * PI, 512).unwrap();
        let u0 = soliton_exact(&g, 0.5, 0.0).unwrap();
        let u1 = RealField::from_fn(&g, |x| 0.3 / (0.4 * (x - 60.0)).cosh());
        let u2 = RealField::zeros(&g);
        let (rho2, _, _) = level2_algebraic(&u0, &u1);
        let l3 = recover_level3(&u0, &u1, &u2, &rho2);
        assert!(l3.theta_integrand_mean.abs() <= 1e-12);
        // ∫U₀∂³U₀ = U₀∂²U₀ - ½(∂U₀)², ∫U₀²∂U₀ = U₀³/3, ∫∂²U₀∂U₀ = ½(∂U₀)².
        let d = dt_u0(&u0);
        let d1 = deriv(&u0, 1);
        let sq1 = prod(&d1, &d1);
        let i_dtu1 = antideriv_n1(&u0) - deriv(&u1, 2) * 0.5 - prod(&u0, &u1) * 1.5;
        let closed = deriv(&d, 1) * -0.5 + prod(&u0, &u1) * (5.0 / 3.0) + i_dtu1 + antideriv_u0_dtu0(&u0) * (1.0 / 6.0)
            - (prod(&u0, &deriv(&u0, 2)) - &sq1 * 0.5) * 0.5
            + prod(&u0, &prod(&u0, &u0)) * (2.0 / 27.0)
            - &sq1 * (1.0 / 6.0);
        assert!(max_diff(&centered(&l3.theta3), &centered(&closed)) <= 1e-8);
    }

    #[test]
    fn poisson3_holds_pointwise() {
        let g = make_grid(40.0 * PI, 512).unwrap();
        let u0 = soliton_exact(&g, 0.5, 0.0).unwrap();
        let u1 = RealField::from_fn(&g, |x| 0.2 * (-(x - 62.0).powi(2) / 8.0).exp());
        let u2 = RealField::from_fn(&g, |x| 0.1 * (-(x - 64.0).powi(2) / 6.0).exp());
        let (rho2, phi1, _) = level2_algebraic(&u0, &u1);
        let l3 = recover_level3(&u0, &u1, &u2, &rho2);
        let r = deriv(&phi1, 2) * -1.0 + &l3.phi2 - &l3.rho3;
        assert!(r.norms().linf <= 1e-10, "{}", r.norms().linf);
    }

    #[test]
    fn zero_input_gives_zero_corrections() {
        let g = sine_grid();
        let cs = CorrectionSet::zeros(0.0, &RealField::zeros(&g));
        for f in [&cs.rho2, &cs.rho3, &cs.phi1, &cs.phi2, &cs.theta2, &cs.theta3] {
            assert_eq!(f.norms().linf, 0.0);
        }
    }
}
