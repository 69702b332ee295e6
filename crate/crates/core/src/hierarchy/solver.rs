use super::{level2_algebraic, n1_source, n2_source, CorrectionSet};
use crate::error::{Error, Result};
use crate::kdv::{dispersion_rate, nonlinear_dt_bound, nonlinear_term, step_count, KdvState, KdvTrajectory};
use crate::spectral::{dealiased_product as prod, deriv, Etdrk4, Grid, RealField, C64};

/// Joint ETDRK4 integration of `(U₀, U₁, U₂)`.
///
/// `U₀` and `U₁` share the dispersive rate `i k³/2`; `U₂` has no linear part,
/// so its component of the scheme is classical RK4. The `U₀` component is
/// bit-identical to [`KdvStepper`](crate::kdv::KdvStepper) at the same `dt`.
pub struct CorrectionSolver {
    grid: Grid,
    dt: f64,
    etd: Etdrk4,
    scratch: Vec<C64>,
}

impl CorrectionSolver {
    pub fn new(grid: &Grid, dt: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
        }
        let n = grid.n();
        let k = grid.wavenumbers();
        let mut rates = Vec::with_capacity(3 * n);
        for _ in 0..2 {
            rates.extend((0..n).map(|j| dispersion_rate(grid, j, k[j])));
        }
        rates.extend(std::iter::repeat_n(C64::default(), n));
        Ok(CorrectionSolver { grid: grid.clone(), dt, etd: Etdrk4::new(dt, &rates), scratch: vec![C64::default(); n] })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Advances `[U₀, U₁, U₂]` by one step.
    pub fn step(&mut self, fields: &mut [RealField; 3], time: f64) -> Result<()> {
        let n = self.grid.n();
        for f in fields.iter() {
            if !f.grid().same_shape(&self.grid) {
                return Err(Error::GridMismatch);
            }
        }
        let bound = nonlinear_dt_bound(&self.grid, fields[0].norms().linf);
        if self.dt > bound {
            return Err(Error::StepTooLarge { dt: self.dt, bound });
        }
        let mut state = Vec::with_capacity(3 * n);
        for f in fields.iter() {
            state.extend(f.to_modes().into_coeffs());
        }
        let grid = &self.grid;
        let scratch = &mut self.scratch;
        self.etd
            .step(&mut state, |v, out| {
                hierarchy_nonlinear(grid, v, out, scratch);
                Ok(())
            })
            .map_err(|_| Error::NonFinite { context: "correction step".into(), time: time + self.dt })?;
        for (i, f) in fields.iter_mut().enumerate() {
            *f = modes_to_field(grid, &mut state[i * n..(i + 1) * n]);
        }
        Ok(())
    }
}

fn modes_to_field(grid: &Grid, spec: &mut [C64]) -> RealField {
    grid.inverse(spec);
    RealField::from_vec_unchecked(grid, spec.iter().map(|c| c.re).collect())
}

fn hierarchy_nonlinear(grid: &Grid, v: &[C64], out: &mut [C64], scratch: &mut [C64]) {
    let n = grid.n();
    nonlinear_term(grid, &v[..n], &mut out[..n], scratch);
    let field = |i: usize, scratch: &mut [C64]| {
        scratch.copy_from_slice(&v[i * n..(i + 1) * n]);
        modes_to_field(grid, scratch)
    };
    let u0 = field(0, scratch);
    let u1 = field(1, scratch);
    let u2 = field(2, scratch);
    let g1 = n1_source(&u0) - deriv(&prod(&u0, &u1), 1) * 1.5;
    let (rho2, _, theta2) = level2_algebraic(&u0, &u1);
    let g2 = n2_source(&u0, &u1, &rho2, &theta2) - deriv(&prod(&u0, &u2), 1);
    out[n..2 * n].copy_from_slice(g1.to_modes().coeffs());
    out[2 * n..].copy_from_slice(g2.to_modes().coeffs());
}

/// Corrections at every step, with the `θ₃` integrand mean per snapshot.
#[derive(Clone, Debug)]
pub struct CorrectionTrajectory {
    pub dt: f64,
    pub sets: Vec<CorrectionSet>,
    pub theta_integrand_means: Vec<f64>,
}

impl CorrectionTrajectory {
    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn grid(&self) -> &Grid {
        self.sets[0].u0.grid()
    }

    pub fn times(&self) -> Vec<f64> {
        self.sets.iter().map(|s| s.time).collect()
    }

    /// Largest `|mean|` of the `θ₃` integrand over the run; the additive
    /// constant fixed by the zero-mean gauge is only ambiguous at this level.
    pub fn max_integrand_mean(&self) -> f64 {
        self.theta_integrand_means.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Integrates the hierarchy from `U₀(0) = phi0`, `U₁(0) = u1`, `U₂(0) = u2`,
/// storing every step.
pub fn solve_hierarchy_from(
    phi0: &KdvState,
    u1: &RealField,
    u2: &RealField,
    dt: f64,
    t_final: f64,
) -> Result<CorrectionTrajectory> {
    let steps = step_count(t_final, dt)?;
    let mut solver = CorrectionSolver::new(phi0.phi0.grid(), dt)?;
    let mut fields = [phi0.phi0.clone(), u1.clone(), u2.clone()];
    let mut sets = Vec::with_capacity(steps + 1);
    let mut means = Vec::with_capacity(steps + 1);
    let record = |fields: &[RealField; 3], t: f64, sets: &mut Vec<CorrectionSet>, means: &mut Vec<f64>| {
        let (set, l3) = CorrectionSet::assemble(t, &fields[0], &fields[1], &fields[2]);
        sets.push(set);
        means.push(l3.theta_integrand_mean);
    };
    record(&fields, phi0.time, &mut sets, &mut means);
    for i in 1..=steps {
        let t_prev = phi0.time + (i - 1) as f64 * dt;
        solver.step(&mut fields, t_prev)?;
        record(&fields, phi0.time + i as f64 * dt, &mut sets, &mut means);
    }
    Ok(CorrectionTrajectory { dt, sets, theta_integrand_means: means })
}

/// Hierarchy with zero initial corrections.
pub fn solve_hierarchy(phi0: &KdvState, dt: f64, t_final: f64) -> Result<CorrectionTrajectory> {
    let z = RealField::zeros(phi0.phi0.grid());
    solve_hierarchy_from(phi0, &z, &z, dt, t_final)
}

/// Re-runs `[U₀, U₁, U₂]` along a KdV trajectory stored at every step and
/// checks that the re-evolved `U₀` reproduces it.
fn corrections_along(kdv: &KdvTrajectory, u1: &RealField, u2: &RealField) -> Result<Vec<[RealField; 3]>> {
    if kdv.stride != 1 {
        return Err(Error::Trajectory("KdV trajectory must be stored at every step".into()));
    }
    let first = &kdv.states[0];
    let mut solver = CorrectionSolver::new(first.phi0.grid(), kdv.dt)?;
    let mut fields = [first.phi0.clone(), u1.clone(), u2.clone()];
    let mut out = vec![fields.clone()];
    for state in &kdv.states[1..] {
        solver.step(&mut fields, state.time - kdv.dt)?;
        let gap = (&fields[0] - &state.phi0).norms().linf;
        if gap > 1e-12 {
            return Err(Error::Trajectory(format!("U₀ departs from the KdV trajectory by {gap:e}")));
        }
        out.push(fields.clone());
    }
    Ok(out)
}

/// `U₁` along a KdV trajectory.
pub fn solve_u1(kdv: &KdvTrajectory, u1_init: &RealField) -> Result<Vec<RealField>> {
    let z = RealField::zeros(u1_init.grid());
    Ok(corrections_along(kdv, u1_init, &z)?.into_iter().map(|[_, u1, _]| u1).collect())
}

/// `U₂` along a KdV trajectory.
pub fn solve_u2(kdv: &KdvTrajectory, u1_init: &RealField, u2_init: &RealField) -> Result<Vec<RealField>> {
    Ok(corrections_along(kdv, u1_init, u2_init)?.into_iter().map(|[_, _, u2]| u2).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kdv::{kdv_solve, soliton_exact};
    use crate::spectral::make_grid;
    use std::f64::consts::PI;

    #[test]
    fn zero_data_stays_zero() {
        let g = make_grid(20.0, 64).unwrap();
        let init = KdvState::new(0.0, RealField::zeros(&g));
        let traj = solve_hierarchy(&init, 0.05, 0.5).unwrap();
        for s in &traj.sets {
            for f in [&s.u0, &s.u1, &s.u2, &s.rho3, &s.phi2, &s.theta3] {
                assert_eq!(f.norms().linf, 0.0);
            }
        }
    }

    #[test]
    fn u1_sine_mode_on_constant_background() {
        // ∂tU₁ + ½∂³U₁ + (3/2)c∂U₁ = 0: sin(k(x - vt)) with v = (3/2)c - ½k².
        let g = make_grid(2.0 * PI, 32).unwrap();
        let (c, k) = (0.4, 2.0);
        let kdv = kdv_solve(&KdvState::new(0.0, RealField::constant(&g, c)), 0.005, 1.0, 1).unwrap();
        let u1 = solve_u1(&kdv, &RealField::from_fn(&g, |x| (k * x).sin())).unwrap();
        let v = 1.5 * c - 0.5 * k * k;
        let exact = RealField::from_fn(&g, |x| (k * (x - v)).sin());
        let err = (&u1[200] - &exact).norms().linf;
        assert!(err <= 1e-9, "{err:e}");
    }

    #[test]
    fn u0_matches_standalone_kdv() {
        let g = make_grid(40.0 * PI, 256).unwrap();
        let init = KdvState::new(0.0, soliton_exact(&g, 0.5, 0.0).unwrap());
        let kdv = kdv_solve(&init, 0.02, 0.2, 1).unwrap();
        let u2 = solve_u2(&kdv, &RealField::zeros(&g), &RealField::zeros(&g)).unwrap();
        assert_eq!(u2.len(), kdv.states.len());
        assert!(u2.iter().all(RealField::is_finite));
    }

    #[test]
    fn u2_transport_of_zero_forcing() {
        // U₀ = U₁ = 0 leaves ∂tU₂ = 0.
        let g = make_grid(10.0, 32).unwrap();
        let kdv = kdv_solve(&KdvState::new(0.0, RealField::zeros(&g)), 0.1, 1.0, 1).unwrap();
        let init = RealField::from_fn(&g, |x| (2.0 * PI * x / 10.0).cos());
        let u2 = solve_u2(&kdv, &RealField::zeros(&g), &init).unwrap();
        assert!((u2.last().unwrap() - &init).norms().linf <= 1e-13);
    }
}
