//! ε-weighted assembly of the corrections and its defect in the fluid
//! equations.

use crate::error::{Error, Result};
use crate::fluid::{poisson_defect, primitive_rhs, FluidModel, FluidState, TransportCoeffs};
use crate::hierarchy::{CorrectionSet, CorrectionTrajectory};
use crate::spectral::RealField;
use crate::timefd::{central_diff4, interior};

/// `ρ̄ = 1 + ερ₁ + ε²ρ₂ + ε³ρ₃`, `ū₁ = U₀ + εU₁ + ε²U₂ + ε³U₃`,
/// `θ̄ = 3/2 + εθ₁ + ε²θ₂ + ε³θ₃`, `φ̄ = φ₀ + εφ₁ + ε²φ₂ + ε³φ₃`.
/// The transverse components vanish.
#[derive(Clone, Debug, PartialEq)]
pub struct ApproxProfile {
    pub epsilon: f64,
    pub time: f64,
    pub rho: RealField,
    pub u1: RealField,
    pub theta: RealField,
    pub phi: RealField,
}

/// `base + Σ cᵢ fᵢ`, summed left to right.
fn series(base: f64, terms: &[(f64, &RealField)]) -> RealField {
    let grid = terms[0].1.grid();
    let vals = (0..grid.n()).map(|i| terms.iter().fold(base, |acc, (c, f)| acc + c * f.values()[i])).collect();
    RealField::new(grid, vals).expect("finite corrections give a finite profile")
}

/// Assembles the profile at the time of `cs`. Rejects `ε` for which
/// `ρ̄ ≤ 0` or `θ̄ ∉ (4/3, 2)` somewhere.
pub fn build_profile(cs: &CorrectionSet, epsilon: f64) -> Result<ApproxProfile> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
    }
    let (e1, e2, e3) = (epsilon, epsilon * epsilon, epsilon * epsilon * epsilon);
    let rho = series(1.0, &[(e1, &cs.rho1), (e2, &cs.rho2), (e3, &cs.rho3)]);
    let u1 = series(0.0, &[(1.0, &cs.u0), (e1, &cs.u1), (e2, &cs.u2), (e3, &cs.u3)]);
    let theta = series(1.5, &[(e1, &cs.theta1), (e2, &cs.theta2), (e3, &cs.theta3)]);
    let phi = series(0.0, &[(1.0, &cs.phi0), (e1, &cs.phi1), (e2, &cs.phi2), (e3, &cs.phi3)]);
    if !(rho.min() > 0.0) {
        return Err(Error::InadmissibleProfile { epsilon, reason: format!("min density {:.3e}", rho.min()) });
    }
    let (lo, hi) = (theta.min(), theta.max());
    if !(lo > 4.0 / 3.0 && hi < 2.0) {
        return Err(Error::InadmissibleProfile {
            epsilon,
            reason: format!("temperature range [{lo:.4}, {hi:.4}] leaves (4/3, 2)"),
        });
    }
    Ok(ApproxProfile { epsilon, time: cs.time, rho, u1, theta, phi })
}

impl ApproxProfile {
    /// Well-prepared fluid data: the profile with its own `φ̄` replaced by
    /// the Poisson solution of `ρ̄`.
    pub fn to_fluid_state(&self) -> Result<FluidState> {
        FluidState::new(self.time, self.rho.clone(), self.u1.clone(), self.theta.clone(), self.epsilon)
    }
}

/// Profiles at every step of a correction trajectory.
#[derive(Clone, Debug)]
pub struct ProfileTrajectory {
    pub epsilon: f64,
    pub dt: f64,
    pub profiles: Vec<ApproxProfile>,
}

pub fn build_profile_trajectory(traj: &CorrectionTrajectory, epsilon: f64) -> Result<ProfileTrajectory> {
    let profiles = traj.sets.iter().map(|cs| build_profile(cs, epsilon)).collect::<Result<Vec<_>>>()?;
    Ok(ProfileTrajectory { epsilon, dt: traj.dt, profiles })
}

/// Largest L² defect over time in each equation.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct ProfileResidual {
    pub mass: f64,
    pub velocity: f64,
    pub temperature: f64,
    pub poisson: f64,
}

impl ProfileResidual {
    fn max(self, o: ProfileResidual) -> ProfileResidual {
        ProfileResidual {
            mass: self.mass.max(o.mass),
            velocity: self.velocity.max(o.velocity),
            temperature: self.temperature.max(o.temperature),
            poisson: self.poisson.max(o.poisson),
        }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.mass, self.velocity, self.temperature, self.poisson]
    }
}

/// Pointwise defects `(mass, velocity, temperature, poisson)` at snapshot `i`.
pub fn residual_fields(p: &ProfileTrajectory, i: usize, model: &FluidModel) -> Result<[RealField; 4]> {
    let len = p.profiles.len();
    let dt = central_diff4(|j| &p.profiles[j].rho, len, i, p.dt)?;
    let du = central_diff4(|j| &p.profiles[j].u1, len, i, p.dt)?;
    let dth = central_diff4(|j| &p.profiles[j].theta, len, i, p.dt)?;
    let s = &p.profiles[i];
    let rhs = primitive_rhs(&s.rho, &s.u1, &s.theta, &s.phi, None, model);
    Ok([dt - rhs.rho, du - rhs.u1, dth - rhs.theta, poisson_defect(&s.rho, &s.phi, p.epsilon)])
}

fn residual_with(p: &ProfileTrajectory, model: &FluidModel) -> Result<ProfileResidual> {
    let range = interior(p.profiles.len());
    if range.is_empty() {
        return Err(Error::Trajectory("profile residuals need at least five snapshots".into()));
    }
    let zero = ProfileResidual { mass: 0.0, velocity: 0.0, temperature: 0.0, poisson: 0.0 };
    range.into_iter().try_fold(zero, |acc, i| {
        let [m, v, t, q] = residual_fields(p, i, model)?;
        Ok(acc.max(ProfileResidual {
            mass: m.norms().l2,
            velocity: v.norms().l2,
            temperature: t.norms().l2,
            poisson: q.norms().l2,
        }))
    })
}

/// Defect of the profile in the Euler-Poisson system.
pub fn profile_residual_ep(p: &ProfileTrajectory) -> Result<ProfileResidual> {
    residual_with(p, &FluidModel::euler_poisson(p.epsilon))
}

/// Defect of the profile in the Navier-Stokes-Poisson system.
pub fn profile_residual_nsp(p: &ProfileTrajectory, coeffs: &TransportCoeffs, epsdelta: f64) -> Result<ProfileResidual> {
    let model = FluidModel::navier_stokes_poisson(p.epsilon, epsdelta, coeffs.clone());
    model.validate()?;
    residual_with(p, &model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hierarchy::solve_hierarchy;
    use crate::kdv::{soliton_exact, KdvState};
    use crate::spectral::{dealiased_product, deriv, make_grid};
    use std::f64::consts::PI;

    fn soliton_traj(n: usize, dt: f64, t: f64) -> CorrectionTrajectory {
        let g = make_grid(40.0 * PI, n).unwrap();
        solve_hierarchy(&KdvState::new(0.0, soliton_exact(&g, 0.5, 0.0).unwrap()), dt, t).unwrap()
    }

    #[test]
    fn zero_corrections_give_constant_background() {
        let g = make_grid(10.0, 32).unwrap();
        let cs = CorrectionSet::zeros(0.0, &RealField::zeros(&g));
        let p = build_profile(&cs, 0.1).unwrap();
        assert!(p.rho.values().iter().all(|&v| v == 1.0));
        assert!(p.u1.values().iter().all(|&v| v == 0.0));
        assert!(p.theta.values().iter().all(|&v| v == 1.5));
        assert!(p.phi.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn small_epsilon_limit() {
        let traj = soliton_traj(256, 0.01, 0.05);
        let cs = &traj.sets[0];
        let p = build_profile(cs, 1e-9).unwrap();
        assert!((&p.u1 - &cs.u0).norms().linf <= 1e-8);
        assert!((&p.phi - &cs.phi0).norms().linf <= 1e-8);
        assert!(p.rho.map(|r| r - 1.0).norms().linf <= 1e-8);
    }

    #[test]
    fn density_deviation_is_second_order() {
        let traj = soliton_traj(256, 0.01, 0.05);
        let cs = &traj.sets[0];
        let eps = 0.05;
        let p = build_profile(cs, eps).unwrap();
        let dev = (&p.rho - &cs.rho1.map(|r| 1.0 + eps * r)).norms().linf;
        assert!(dev <= 2.0 * eps * eps * cs.rho2.norms().linf + 1e-12);
        assert!(dev >= 0.5 * eps * eps * cs.rho2.norms().linf);
    }

    #[test]
    fn assembly_is_cubic_in_epsilon() {
        // Cubic through four points reproduces the profile at a fifth.
        let traj = soliton_traj(128, 0.01, 0.05);
        let cs = &traj.sets[0];
        let nodes = [0.02, 0.04, 0.06, 0.08];
        let target = 0.05;
        let mut interp = RealField::zeros(cs.u0.grid());
        for (i, &ei) in nodes.iter().enumerate() {
            let w: f64 =
                nodes.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &ej)| (target - ej) / (ei - ej)).product();
            interp = interp + build_profile(cs, ei).unwrap().rho * w;
        }
        let direct = build_profile(cs, target).unwrap().rho;
        assert!((&interp - &direct).norms().linf <= 1e-13);
    }

    #[test]
    fn large_epsilon_is_rejected() {
        let traj = soliton_traj(128, 0.01, 0.05);
        assert!(matches!(build_profile(&traj.sets[0], 0.9), Err(Error::InadmissibleProfile { .. })));
    }

    #[test]
    fn background_has_zero_residual() {
        let g = make_grid(10.0, 32).unwrap();
        let traj = solve_hierarchy(&KdvState::new(0.0, RealField::zeros(&g)), 0.1, 0.5).unwrap();
        let p = build_profile_trajectory(&traj, 0.1).unwrap();
        let r = profile_residual_ep(&p).unwrap();
        assert_eq!(r.as_array(), [0.0; 4]);
        let r = profile_residual_nsp(&p, &TransportCoeffs::constant(), 1e-3).unwrap();
        assert_eq!(r.as_array(), [0.0; 4]);
    }

    #[test]
    fn nsp_defect_differs_by_the_viscous_term() {
        let traj = soliton_traj(256, 0.005, 0.03);
        let eps = 0.05;
        let p = build_profile_trajectory(&traj, eps).unwrap();
        let coeffs = TransportCoeffs::constant();
        let ed = 1e-3;
        let ep = residual_fields(&p, 3, &FluidModel::euler_poisson(eps)).unwrap();
        let nsp = residual_fields(&p, 3, &FluidModel::navier_stokes_poisson(eps, ed, coeffs)).unwrap();
        let s = &p.profiles[3];
        let inv_rho = s.rho.map(|r| 1.0 / r);
        let term = dealiased_product(&inv_rho, &deriv(&s.u1, 2)) * (4.0 / 3.0 * ed);
        assert!((&(&ep[1] - &nsp[1]) - &term).norms().l2 <= 1e-12);
        let ep_r = profile_residual_ep(&p).unwrap();
        assert_eq!(profile_residual_nsp(&p, &TransportCoeffs::constant(), 0.0).unwrap(), ep_r);
    }
}
