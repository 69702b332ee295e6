//! Frame-shifted Euler-Poisson system in primitive variables and its
//! Navier-Stokes-Poisson extension:
//!
//! ```text
//! ∂tρ - ∂ρ/ε + ∂(ρu)                                 = 0
//! ∂tu - ∂u/ε + u∂u + (2/3)θ∂ρ/ρ + (2/3)∂θ + ∂φ/ε      = εδ (4/3)/ρ ∂(μ∂u)
//! ∂tθ - ∂θ/ε + u∂θ + (2/3)θ∂u                         = εδ/ρ [∂(κ∂θ) + (4/3)μ(∂u)² + μ|∂u⊥|²]
//! ∂tu⊥ - ∂u⊥/ε + u∂u⊥                                 = εδ/ρ ∂(μ∂u⊥)
//! -ε²∂²φ + εφ = ρ - 1
//! ```
//!
//! `u⊥ = (u₂, u₃)` is optional and zero by default.

mod stepper;
mod transport;

pub use stepper::{ep_step, run_fluid, CharacteristicBlock, FluidRun, FluidStepper, StepDiagnostics};
pub use transport::{TransportCoeffs, THETA_RANGE};

use crate::error::{Error, Result};
use crate::spectral::{dealiased_product as prod, deriv, RealField, C64};

/// Fluid unknowns at one time. `phi` is kept consistent with `rho` by
/// [`poisson_solve`].
#[derive(Clone, Debug, PartialEq)]
pub struct FluidState {
    pub time: f64,
    pub rho: RealField,
    pub u1: RealField,
    pub theta: RealField,
    pub phi: RealField,
    pub u2: Option<RealField>,
    pub u3: Option<RealField>,
}

impl FluidState {
    /// State from `(ρ, u₁, θ)` with `φ` solved from `ρ`.
    pub fn new(time: f64, rho: RealField, u1: RealField, theta: RealField, epsilon: f64) -> Result<Self> {
        if !(rho.grid().same_shape(u1.grid()) && rho.grid().same_shape(theta.grid())) {
            return Err(Error::GridMismatch);
        }
        let phi = poisson_solve(&rho, epsilon)?;
        Ok(FluidState { time, rho, u1, theta, phi, u2: None, u3: None })
    }

    /// Constant state `(1, 0, 3/2, 0)` on the grid of `like`.
    pub fn equilibrium(like: &RealField) -> Self {
        let g = like.grid();
        FluidState {
            time: 0.0,
            rho: RealField::constant(g, 1.0),
            u1: RealField::zeros(g),
            theta: RealField::constant(g, 1.5),
            phi: RealField::zeros(g),
            u2: None,
            u3: None,
        }
    }

    pub fn with_transverse(mut self, u2: RealField, u3: RealField) -> Self {
        self.u2 = Some(u2);
        self.u3 = Some(u3);
        self
    }

    /// `ρ > 0` and `θ > 0` everywhere.
    pub fn check_positivity(&self) -> Result<()> {
        for (field, f) in [("rho", &self.rho), ("theta", &self.theta)] {
            let min = f.min();
            if !(min > 0.0) {
                return Err(Error::Positivity { field, min, time: self.time });
            }
        }
        Ok(())
    }
}

/// Parameters of the system being integrated.
#[derive(Clone, Debug)]
pub struct FluidModel {
    pub epsilon: f64,
    /// Coefficient `εδ` of the dissipative terms; zero gives Euler-Poisson.
    pub epsdelta: f64,
    pub coeffs: TransportCoeffs,
    /// Drops the nonlinear remainder, leaving the constant-coefficient
    /// linearization.
    pub linear_only: bool,
}

impl FluidModel {
    pub fn euler_poisson(epsilon: f64) -> Self {
        FluidModel { epsilon, epsdelta: 0.0, coeffs: TransportCoeffs::constant(), linear_only: false }
    }

    pub fn navier_stokes_poisson(epsilon: f64, epsdelta: f64, coeffs: TransportCoeffs) -> Self {
        FluidModel { epsilon, epsdelta, coeffs, linear_only: false }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::InvalidArgument(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if !(self.epsdelta.is_finite() && self.epsdelta >= 0.0) {
            return Err(Error::InvalidArgument(format!("epsdelta must be >= 0, got {}", self.epsdelta)));
        }
        Ok(())
    }
}

/// Solves `-ε²∂²φ + εφ = ρ - 1` mode by mode.
pub fn poisson_solve(rho: &RealField, epsilon: f64) -> Result<RealField> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
    }
    let grid = rho.grid();
    let mut m = rho.map(|r| r - 1.0).to_modes().into_coeffs();
    for (c, &k) in m.iter_mut().zip(grid.wavenumbers()) {
        *c /= epsilon * epsilon * k * k + epsilon;
    }
    grid.inverse(&mut m);
    Ok(RealField::from_vec_unchecked(grid, m.into_iter().map(|c: C64| c.re).collect()))
}

/// `-ε²∂²φ + εφ - (ρ - 1)`.
pub fn poisson_defect(rho: &RealField, phi: &RealField, epsilon: f64) -> RealField {
    deriv(phi, 2) * (-epsilon * epsilon) + phi * epsilon - rho.map(|r| r - 1.0)
}

/// Time derivatives of the evolved fields.
#[derive(Clone, Debug)]
pub struct FluidRates {
    pub rho: RealField,
    pub u1: RealField,
    pub theta: RealField,
    pub u2: Option<RealField>,
    pub u3: Option<RealField>,
}

/// Right-hand side with a given potential. Products are dealiased; `θ/ρ` and
/// `1/ρ` are pointwise.
pub fn primitive_rhs(
    rho: &RealField,
    u: &RealField,
    theta: &RealField,
    phi: &RealField,
    transverse: Option<(&RealField, &RealField)>,
    model: &FluidModel,
) -> FluidRates {
    let inv_eps = 1.0 / model.epsilon;
    let (drho, du, dtheta) = (deriv(rho, 1), deriv(u, 1), deriv(theta, 1));
    let theta_over_rho = theta.zip_map(rho, |t, r| t / r);

    let r_rho = &drho * inv_eps - deriv(&prod(rho, u), 1);
    let mut r_u = &du * inv_eps
        - prod(u, &du)
        - prod(&theta_over_rho, &drho) * (2.0 / 3.0)
        - &dtheta * (2.0 / 3.0)
        - deriv(phi, 1) * inv_eps;
    let mut r_theta = &dtheta * inv_eps - prod(u, &dtheta) - prod(theta, &du) * (2.0 / 3.0);
    let mut r_perp = transverse.map(|(u2, u3)| {
        let (d2, d3) = (deriv(u2, 1), deriv(u3, 1));
        (&d2 * inv_eps - prod(u, &d2), &d3 * inv_eps - prod(u, &d3))
    });

    if model.epsdelta > 0.0 {
        let v = viscous_terms(rho, u, theta, transverse, model);
        r_u = r_u + v.u1;
        r_theta = r_theta + v.theta;
        if let (Some((a, b)), Some((va, vb))) = (r_perp.as_mut(), v.perp) {
            *a = &*a + &va;
            *b = &*b + &vb;
        }
    }
    FluidRates {
        rho: r_rho,
        u1: r_u,
        theta: r_theta,
        u2: r_perp.as_ref().map(|p| p.0.clone()),
        u3: r_perp.map(|p| p.1),
    }
}

pub(crate) struct Viscous {
    pub u1: RealField,
    pub theta: RealField,
    pub perp: Option<(RealField, RealField)>,
}

/// `εδ`-scaled dissipative contributions to `(∂tu₁, ∂tθ, ∂tu⊥)`.
pub(crate) fn viscous_terms(
    rho: &RealField,
    u: &RealField,
    theta: &RealField,
    transverse: Option<(&RealField, &RealField)>,
    model: &FluidModel,
) -> Viscous {
    let ed = model.epsdelta;
    let c = &model.coeffs;
    let inv_rho = rho.map(|r| 1.0 / r);
    let mu = theta.map(|t| c.mu(t));
    let kappa = theta.map(|t| c.kappa(t));
    let (du, dtheta) = (deriv(u, 1), deriv(theta, 1));

    let v_u = prod(&inv_rho, &deriv(&prod(&mu, &du), 1)) * (4.0 / 3.0 * ed);
    let mut heat = deriv(&prod(&kappa, &dtheta), 1) + prod(&mu, &prod(&du, &du)) * (4.0 / 3.0);
    let perp = transverse.map(|(u2, u3)| {
        let (d2, d3) = (deriv(u2, 1), deriv(u3, 1));
        heat = &heat + &prod(&mu, &(prod(&d2, &d2) + prod(&d3, &d3)));
        (prod(&inv_rho, &deriv(&prod(&mu, &d2), 1)) * ed, prod(&inv_rho, &deriv(&prod(&mu, &d3), 1)) * ed)
    });
    Viscous { u1: v_u, theta: prod(&inv_rho, &heat) * ed, perp }
}

fn rhs_checked(s: &FluidState, model: &FluidModel) -> Result<FluidRates> {
    model.validate()?;
    s.check_positivity()?;
    let phi = poisson_solve(&s.rho, model.epsilon)?;
    let transverse = match (&s.u2, &s.u3) {
        (Some(a), Some(b)) => Some((a, b)),
        _ => None,
    };
    Ok(primitive_rhs(&s.rho, &s.u1, &s.theta, &phi, transverse, model))
}

/// Euler-Poisson time derivatives, with `φ` re-solved from `ρ`.
pub fn ep_rhs(s: &FluidState, epsilon: f64) -> Result<FluidRates> {
    rhs_checked(s, &FluidModel::euler_poisson(epsilon))
}

/// Navier-Stokes-Poisson time derivatives.
pub fn nsp_rhs(s: &FluidState, epsilon: f64, epsdelta: f64, coeffs: &TransportCoeffs) -> Result<FluidRates> {
    rhs_checked(s, &FluidModel::navier_stokes_poisson(epsilon, epsdelta, coeffs.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::make_grid;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn poisson_examples() {
        let g = make_grid(2.0 * PI, 32).unwrap();
        let eps = 0.1;
        assert_eq!(poisson_solve(&RealField::constant(&g, 1.0), eps).unwrap().norms().linf, 0.0);
        let m = poisson_solve(&RealField::constant(&g, 1.3), eps).unwrap();
        assert_abs_diff_eq!(m.values()[5], 0.3 / eps, epsilon = 1e-12);
        let (a, k) = (0.2, 3.0);
        let rho = RealField::from_fn(&g, |x| 1.0 + a * (k * x).cos());
        let phi = poisson_solve(&rho, eps).unwrap();
        let exact = RealField::from_fn(&g, |x| a * (k * x).cos() / (eps * eps * k * k + eps));
        assert!((&phi - &exact).norms().linf <= 1e-13);
        assert!(poisson_defect(&rho, &phi, eps).norms().l2 <= 1e-13);
    }

    #[test]
    fn equilibrium_and_constant_states_are_steady() {
        let g = make_grid(10.0, 32).unwrap();
        let eq = FluidState::equilibrium(&RealField::zeros(&g));
        for s in [eq.clone(), FluidState { u1: RealField::constant(&g, 0.4), ..eq }] {
            let r = ep_rhs(&s, 0.05).unwrap();
            for f in [&r.rho, &r.u1, &r.theta] {
                assert!(f.norms().linf <= 1e-12);
            }
        }
    }

    #[test]
    fn linearized_density_mode() {
        // ρ = 1 + a cos(kx), u = 0, θ = 3/2:
        // ∂tρ = -(a k/ε) sin, ∂tu = a k (1 + 1/(ε²(1+εk²))) sin, ∂tθ = 0 (to O(a²)).
        let g = make_grid(2.0 * PI, 32).unwrap();
        let (a, k, eps) = (1e-6, 2.0, 0.1);
        let rho = RealField::from_fn(&g, |x| 1.0 + a * (k * x).cos());
        let s = FluidState::new(0.0, rho, RealField::zeros(&g), RealField::constant(&g, 1.5), eps).unwrap();
        let r = ep_rhs(&s, eps).unwrap();
        let coef = 1.0 + 1.0 / (eps * eps * (1.0 + eps * k * k));
        let exp_rho = RealField::from_fn(&g, |x| -a * k / eps * (k * x).sin());
        let exp_u = RealField::from_fn(&g, |x| a * k * coef * (k * x).sin());
        assert!((&r.rho - &exp_rho).norms().linf <= 1e-12);
        assert!((&r.u1 - &exp_u).norms().linf <= 10.0 * a * a * k * coef);
        assert!(r.theta.norms().linf <= 1e-12);
    }

    #[test]
    fn viscous_term_on_sine_velocity() {
        let g = make_grid(2.0 * PI, 32).unwrap();
        let (a, k, eps, ed) = (0.3, 2.0, 0.05, 1e-3);
        let mut s = FluidState::equilibrium(&RealField::zeros(&g));
        s.u1 = RealField::from_fn(&g, |x| a * (k * x).sin());
        let ep = ep_rhs(&s, eps).unwrap();
        let nsp = nsp_rhs(&s, eps, ed, &TransportCoeffs::constant()).unwrap();
        let expected = RealField::from_fn(&g, |x| -4.0 / 3.0 * ed * a * k * k * (k * x).sin());
        assert!((&(&nsp.u1 - &ep.u1) - &expected).norms().linf <= 1e-13);
        let zero = nsp_rhs(&s, eps, 0.0, &TransportCoeffs::constant()).unwrap();
        assert_eq!(zero.u1.values(), ep.u1.values());
    }

    #[test]
    fn positivity_violation_is_reported() {
        let g = make_grid(10.0, 16).unwrap();
        let mut s = FluidState::equilibrium(&RealField::zeros(&g));
        s.rho = RealField::from_fn(&g, |x| if x > 5.0 { -0.1 } else { 1.0 });
        assert!(matches!(ep_rhs(&s, 0.1), Err(Error::Positivity { field: "rho", .. })));
    }

    #[test]
    fn zero_transverse_velocity_stays_zero() {
        let g = make_grid(10.0, 32).unwrap();
        let mut s =
            FluidState::equilibrium(&RealField::zeros(&g)).with_transverse(RealField::zeros(&g), RealField::zeros(&g));
        s.u1 = RealField::from_fn(&g, |x| 0.1 * (2.0 * PI * x / 10.0).sin());
        let r = nsp_rhs(&s, 0.1, 1e-2, &TransportCoeffs::sqrt_theta()).unwrap();
        assert_eq!(r.u2.unwrap().norms().linf, 0.0);
        assert_eq!(r.u3.unwrap().norms().linf, 0.0);
    }
}
