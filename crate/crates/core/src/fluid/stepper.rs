//! ETDRK4 for the fluid system in per-mode characteristic variables.
//!
//! Around `(ρ, u, θ) = (1, 0, 3/2)` the linear part of mode `k` acting on
//! `(ρ - 1, u, θ - 3/2)` is `ik (I/ε + N)` with
//!
//! ```text
//!     | 0   -1    0  |
//! N = | -a   0  -2/3 |,   a = 1 + 1/(ε²(1 + εk²)),
//!     | 0   -1    0  |
//! ```
//!
//! whose eigenvalues are `±s`, `s = √(a + 2/3)`, and `0`. The fast acoustic
//! branch, the slow branch and the entropy mode are propagated exactly; only
//! the remainder of the right-hand side is explicit.

use super::{poisson_defect, poisson_solve, viscous_terms, FluidModel, FluidState};
use crate::error::{Error, Result};
use crate::kdv::step_count;
use crate::spectral::{dealiased_product as prod, deriv, Etdrk4, Grid, RealField, C64};

/// Limit on `dt` times the largest explicit rate.
const EXPLICIT_CFL: f64 = 2.5;

/// Eigen-decomposition of the linear block of one Fourier mode.
#[derive(Clone, Copy, Debug)]
pub struct CharacteristicBlock {
    k: f64,
    epsilon: f64,
    s: f64,
    b: f64,
}

impl CharacteristicBlock {
    pub fn new(epsilon: f64, k: f64) -> Self {
        let a = 1.0 + 1.0 / (epsilon * epsilon * (1.0 + epsilon * k * k));
        CharacteristicBlock { k, epsilon, s: (a + 2.0 / 3.0).sqrt(), b: 1.5 * a }
    }

    /// Acoustic speed `s` relative to the frame shift.
    pub fn speed(&self) -> f64 {
        self.s
    }

    /// Real frequencies `ω` (rate `iω`) of the fast, slow and entropy
    /// branches. The slow one is evaluated without cancellation.
    pub fn frequencies(&self) -> [f64; 3] {
        let (k, e) = (self.k, self.epsilon);
        let inv_e = 1.0 / e;
        let slow = (k * k / (e * (1.0 + e * k * k)) - 5.0 / 3.0) / (inv_e + self.s);
        [k * (inv_e + self.s), k * slow, k * inv_e]
    }

    /// `(ρ̂, û, θ̂)` to branch amplitudes.
    pub fn to_characteristic(&self, y: [C64; 3]) -> [C64; 3] {
        let w3 = (y[0] - y[2]) / (1.0 + self.b);
        let r = y[1] / self.s;
        [(y[0] - w3 - r) * 0.5, (y[0] - w3 + r) * 0.5, w3]
    }

    /// Branch amplitudes to `(ρ̂, û, θ̂)`; the eigenvectors are `(1, -s, 1)`,
    /// `(1, s, 1)` and `(1, 0, -3a/2)`.
    pub fn from_characteristic(&self, w: [C64; 3]) -> [C64; 3] {
        [w[0] + w[1] + w[2], (w[1] - w[0]) * self.s, w[0] + w[1] - w[2] * self.b]
    }
}

/// Fixed-step integrator for one [`FluidModel`].
pub struct FluidStepper {
    grid: Grid,
    model: FluidModel,
    dt: f64,
    transverse: bool,
    blocks: Vec<CharacteristicBlock>,
    etd: Etdrk4,
}

impl FluidStepper {
    pub fn new(grid: &Grid, model: &FluidModel, dt: f64, transverse: bool) -> Result<Self> {
        model.validate()?;
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
        }
        let n = grid.n();
        let blocks: Vec<CharacteristicBlock> =
            grid.wavenumbers().iter().map(|&k| CharacteristicBlock::new(model.epsilon, k)).collect();
        let components = if transverse { 5 } else { 3 };
        let mut rates = vec![C64::default(); components * n];
        for (j, blk) in blocks.iter().enumerate() {
            if grid.is_nyquist(j) {
                continue;
            }
            let w = blk.frequencies();
            for c in 0..components {
                rates[c * n + j] = C64::new(0.0, w[c.min(2)]);
            }
        }
        Ok(FluidStepper {
            grid: grid.clone(),
            model: model.clone(),
            dt,
            transverse,
            blocks,
            etd: Etdrk4::new(dt, &rates),
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn model(&self) -> &FluidModel {
        &self.model
    }

    fn explicit_bound(&self, s: &FluidState) -> f64 {
        let kd = self.grid.k_dealias();
        let mut rate = s.u1.norms().linf * kd;
        if self.model.epsdelta > 0.0 {
            let c = self.model.coeffs.bound();
            rate += self.model.epsdelta * (4.0 / 3.0) * c * kd * kd / s.rho.min();
        }
        if rate == 0.0 || self.model.linear_only {
            f64::INFINITY
        } else {
            EXPLICIT_CFL / rate
        }
    }

    fn pack(&self, s: &FluidState) -> Vec<C64> {
        let n = self.grid.n();
        let rho = s.rho.map(|r| r - 1.0).to_modes().into_coeffs();
        let u = s.u1.to_modes().into_coeffs();
        let th = s.theta.map(|t| t - 1.5).to_modes().into_coeffs();
        let components = if self.transverse { 5 } else { 3 };
        let mut out = vec![C64::default(); components * n];
        for j in 0..n {
            let w = self.blocks[j].to_characteristic([rho[j], u[j], th[j]]);
            for c in 0..3 {
                out[c * n + j] = w[c];
            }
        }
        if self.transverse {
            let zero = RealField::zeros(&self.grid);
            let u2 = s.u2.as_ref().unwrap_or(&zero).to_modes().into_coeffs();
            let u3 = s.u3.as_ref().unwrap_or(&zero).to_modes().into_coeffs();
            out[3 * n..4 * n].copy_from_slice(&u2);
            out[4 * n..].copy_from_slice(&u3);
        }
        out
    }

    /// Perturbation fields `(ρ - 1, u, θ - 3/2[, u₂, u₃])` from the packed state.
    fn unpack(&self, v: &[C64]) -> Vec<RealField> {
        let n = self.grid.n();
        let mut y = vec![vec![C64::default(); n]; 3];
        for j in 0..n {
            let p = self.blocks[j].from_characteristic([v[j], v[n + j], v[2 * n + j]]);
            for c in 0..3 {
                y[c][j] = p[c];
            }
        }
        if self.transverse {
            y.push(v[3 * n..4 * n].to_vec());
            y.push(v[4 * n..].to_vec());
        }
        y.into_iter()
            .map(|mut m| {
                self.grid.inverse(&mut m);
                RealField::from_vec_unchecked(&self.grid, m.into_iter().map(|c| c.re).collect())
            })
            .collect()
    }

    fn remainder(&self, v: &[C64], out: &mut [C64]) -> Result<()> {
        if self.model.linear_only {
            out.fill(C64::default());
            return Ok(());
        }
        let n = self.grid.n();
        let f = self.unpack(v);
        let (drho, u, dth) = (&f[0], &f[1], &f[2]);
        let rho = drho.map(|r| 1.0 + r);
        let theta = dth.map(|t| 1.5 + t);
        if !(rho.min() > 0.0) {
            return Err(Error::Positivity { field: "rho", min: rho.min(), time: f64::NAN });
        }
        let du = deriv(u, 1);
        let n_rho = deriv(&prod(drho, u), 1) * -1.0;
        let pressure = theta.zip_map(&rho, |t, r| 2.0 / 3.0 * t / r - 1.0);
        let mut n_u = prod(u, &du) * -1.0 - prod(&pressure, &deriv(drho, 1));
        let mut n_th = prod(u, &deriv(dth, 1)) * -1.0 - prod(dth, &du) * (2.0 / 3.0);
        let transverse = if self.transverse { Some((&f[3], &f[4])) } else { None };
        let mut n_perp: Vec<RealField> = transverse
            .map(|(a, b)| vec![prod(u, &deriv(a, 1)) * -1.0, prod(u, &deriv(b, 1)) * -1.0])
            .unwrap_or_default();
        if self.model.epsdelta > 0.0 {
            let vis = viscous_terms(&rho, u, &theta, transverse, &self.model);
            n_u = n_u + vis.u1;
            n_th = n_th + vis.theta;
            if let Some((a, b)) = vis.perp {
                n_perp[0] = &n_perp[0] + &a;
                n_perp[1] = &n_perp[1] + &b;
            }
        }
        let (mr, mu, mt) = (n_rho.to_modes(), n_u.to_modes(), n_th.to_modes());
        let (mr, mu, mt) = (mr.coeffs(), mu.coeffs(), mt.coeffs());
        for j in 0..n {
            let w = self.blocks[j].to_characteristic([mr[j], mu[j], mt[j]]);
            for c in 0..3 {
                out[c * n + j] = w[c];
            }
        }
        for (i, p) in n_perp.iter().enumerate() {
            out[(3 + i) * n..(4 + i) * n].copy_from_slice(p.to_modes().coeffs());
        }
        Ok(())
    }

    /// One step; `φ` is re-solved from the new density.
    pub fn step(&mut self, s: &FluidState) -> Result<FluidState> {
        if !s.rho.grid().same_shape(&self.grid) {
            return Err(Error::GridMismatch);
        }
        let bound = self.explicit_bound(s);
        if self.dt > bound {
            return Err(Error::StepTooLarge { dt: self.dt, bound });
        }
        let t_next = s.time + self.dt;
        let mut state = self.pack(s);
        let mut etd = std::mem::replace(&mut self.etd, Etdrk4::new(0.0, &[]));
        let res = etd.step(&mut state, |v, out| self.remainder(v, out));
        self.etd = etd;
        res.map_err(|e| match e {
            Error::NonFinite { context, .. } => Error::NonFinite { context, time: t_next },
            Error::Positivity { field, min, .. } => Error::Positivity { field, min, time: t_next },
            other => other,
        })?;
        let f = self.unpack(&state);
        let rho = f[0].map(|r| 1.0 + r);
        let phi = poisson_solve(&rho, self.model.epsilon)?;
        let mut next =
            FluidState { time: t_next, rho, u1: f[1].clone(), theta: f[2].map(|t| 1.5 + t), phi, u2: None, u3: None };
        if self.transverse {
            next.u2 = Some(f[3].clone());
            next.u3 = Some(f[4].clone());
        }
        if !(next.rho.is_finite() && next.u1.is_finite() && next.theta.is_finite()) {
            return Err(Error::NonFinite { context: "fluid step".into(), time: t_next });
        }
        next.check_positivity()?;
        Ok(next)
    }
}

/// One Euler-Poisson step with a fresh stepper.
pub fn ep_step(s: &FluidState, epsilon: f64, dt: f64) -> Result<FluidState> {
    let transverse = s.u2.is_some() || s.u3.is_some();
    FluidStepper::new(s.rho.grid(), &FluidModel::euler_poisson(epsilon), dt, transverse)?.step(s)
}

/// Conservation and constraint checks at one stored time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepDiagnostics {
    pub time: f64,
    /// `|mean(ρ - 1) - mean(ρ₀ - 1)|`.
    pub mass_drift: f64,
    /// L² norm of `-ε²∂²φ + εφ - (ρ - 1)`.
    pub constraint: f64,
    pub min_rho: f64,
    pub min_theta: f64,
}

/// Stored snapshots and diagnostics of a fluid run.
#[derive(Clone, Debug)]
pub struct FluidRun {
    pub dt: f64,
    pub stride: usize,
    pub snapshots: Vec<FluidState>,
    pub diagnostics: Vec<StepDiagnostics>,
}

impl FluidRun {
    pub fn final_state(&self) -> &FluidState {
        self.snapshots.last().expect("run stores the initial state")
    }

    pub fn max_mass_drift(&self) -> f64 {
        self.diagnostics.iter().fold(0.0, |m, d| m.max(d.mass_drift))
    }

    pub fn max_constraint(&self) -> f64 {
        self.diagnostics.iter().fold(0.0, |m, d| m.max(d.constraint))
    }
}

/// Integrates to `t_final`, storing every `stride`-th state (and the last).
/// `observer` sees every state, including the initial one, with its step
/// index; an observer error aborts the run.
pub fn run_fluid<O>(
    initial: &FluidState,
    model: &FluidModel,
    dt: f64,
    t_final: f64,
    stride: usize,
    mut observer: O,
) -> Result<FluidRun>
where
    O: FnMut(usize, &FluidState) -> Result<()>,
{
    let steps = step_count(t_final, dt)?;
    let stride = stride.max(1);
    let transverse = initial.u2.is_some() || initial.u3.is_some();
    let mut stepper = FluidStepper::new(initial.rho.grid(), model, dt, transverse)?;
    let mut current = FluidState { phi: poisson_solve(&initial.rho, model.epsilon)?, ..initial.clone() };
    current.check_positivity()?;
    let mass0 = current.rho.norms().mean - 1.0;
    let diag = |s: &FluidState| StepDiagnostics {
        time: s.time,
        mass_drift: (s.rho.norms().mean - 1.0 - mass0).abs(),
        constraint: poisson_defect(&s.rho, &s.phi, model.epsilon).norms().l2,
        min_rho: s.rho.min(),
        min_theta: s.theta.min(),
    };
    observer(0, &current)?;
    let mut snapshots = vec![current.clone()];
    let mut diagnostics = vec![diag(&current)];
    for i in 1..=steps {
        current = stepper.step(&current)?;
        current.time = initial.time + i as f64 * dt;
        observer(i, &current)?;
        if i % stride == 0 || i == steps {
            diagnostics.push(diag(&current));
            snapshots.push(current.clone());
        }
    }
    Ok(FluidRun { dt, stride, snapshots, diagnostics })
}
