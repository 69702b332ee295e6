//! Leading-order KdV dynamics `∂_t φ₀ = -½ ∂_x³ φ₀ - (3/2) φ₀ ∂_x φ₀`.
//!
//! Dispersion is integrated exactly per Fourier mode by ETDRK4; the quadratic
//! term is written as `-(3/4) ∂_x(φ₀²)` and dealiased.

use log::warn;

use crate::error::{Error, Result};
use crate::spectral::{dealias_in_place, deriv, Etdrk4, Grid, RealField, C64};

/// Amplitude-based limit on `dt · (3/2) max|φ₀| · k_dealias`, inside the RK4
/// stability region on the imaginary axis.
const NONLINEAR_CFL: f64 = 2.5;

/// Boundary-to-amplitude ratio above which a soliton is considered truncated
/// by the box.
pub const SOLITON_BOUNDARY_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct KdvState {
    pub time: f64,
    pub phi0: RealField,
}

impl KdvState {
    pub fn new(time: f64, phi0: RealField) -> Self {
        KdvState { time, phi0 }
    }
}

/// Conserved quantities of the KdV flow.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct Invariants {
    pub mass: f64,
    pub momentum: f64,
    pub hamiltonian: f64,
}

impl Invariants {
    /// Largest relative change of the three quantities against `reference`.
    pub fn max_relative_drift(&self, reference: &Invariants) -> f64 {
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-300);
        rel(self.mass, reference.mass)
            .max(rel(self.momentum, reference.momentum))
            .max(rel(self.hamiltonian, reference.hamiltonian))
    }
}

/// `∂_t φ₀` from the KdV equation, with the quadratic product dealiased.
pub fn kdv_rhs(phi0: &RealField) -> RealField {
    let grid = phi0.grid();
    let mut spec = phi0.to_modes().into_coeffs();
    let mut nl = vec![C64::default(); grid.n()];
    let mut scratch = vec![C64::default(); grid.n()];
    nonlinear_term(grid, &spec, &mut nl, &mut scratch);
    let k = grid.wavenumbers();
    for j in 0..grid.n() {
        spec[j] = dispersion_rate(grid, j, k[j]) * spec[j] + nl[j];
    }
    grid.inverse(&mut spec);
    RealField::from_vec_unchecked(grid, spec.into_iter().map(|c| c.re).collect())
}

/// Linear KdV rate `i k³ / 2` of mode `j` (zero at Nyquist).
pub(crate) fn dispersion_rate(grid: &Grid, j: usize, k: f64) -> C64 {
    if grid.is_nyquist(j) {
        C64::default()
    } else {
        C64::new(0.0, 0.5 * k * k * k)
    }
}

/// Spectral `-(3/4) ∂_x (u²)` with the 2/3 rule applied to the input and the
/// output.
pub(crate) fn nonlinear_term(grid: &Grid, spec: &[C64], out: &mut [C64], scratch: &mut [C64]) {
    scratch.copy_from_slice(spec);
    dealias_in_place(grid, scratch);
    grid.inverse(scratch);
    for c in scratch.iter_mut() {
        *c = C64::new(c.re * c.re, 0.0);
    }
    grid.forward(scratch);
    let k = grid.wavenumbers();
    for j in 0..grid.n() {
        out[j] = if grid.is_dealiased_mode(j) { C64::default() } else { C64::new(0.0, -0.75 * k[j]) * scratch[j] };
    }
}

/// Largest step allowed for a profile of the given sup norm.
pub fn nonlinear_dt_bound(grid: &Grid, amplitude: f64) -> f64 {
    NONLINEAR_CFL / (1.5 * amplitude.max(1e-12) * grid.k_dealias())
}

/// ETDRK4 stepper for the KdV equation at a fixed `dt`.
pub struct KdvStepper {
    grid: Grid,
    dt: f64,
    etd: Etdrk4,
    scratch: Vec<C64>,
}

impl KdvStepper {
    pub fn new(grid: &Grid, dt: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
        }
        let k = grid.wavenumbers();
        let rates: Vec<C64> = (0..grid.n()).map(|j| dispersion_rate(grid, j, k[j])).collect();
        Ok(KdvStepper { grid: grid.clone(), dt, etd: Etdrk4::new(dt, &rates), scratch: vec![C64::default(); grid.n()] })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// One step. Fails if `dt` exceeds the amplitude-based bound or the result
    /// is not finite.
    pub fn step(&mut self, state: &KdvState) -> Result<KdvState> {
        if !state.phi0.grid().same_shape(&self.grid) {
            return Err(Error::GridMismatch);
        }
        let amp = state.phi0.norms().linf;
        let bound = nonlinear_dt_bound(&self.grid, amp);
        if self.dt > bound {
            return Err(Error::StepTooLarge { dt: self.dt, bound });
        }
        let mut spec = state.phi0.to_modes().into_coeffs();
        self.advance_modes(&mut spec)
            .map_err(|_| Error::NonFinite { context: "KdV step".into(), time: state.time + self.dt })?;
        self.grid.inverse(&mut spec);
        Ok(KdvState {
            time: state.time + self.dt,
            phi0: RealField::from_vec_unchecked(&self.grid, spec.into_iter().map(|c| c.re).collect()),
        })
    }

    pub(crate) fn advance_modes(&mut self, spec: &mut [C64]) -> Result<()> {
        let grid = &self.grid;
        let scratch = &mut self.scratch;
        self.etd.step(spec, |v, out| {
            nonlinear_term(grid, v, out, scratch);
            Ok(())
        })
    }
}

/// Single step convenience wrapper; builds a fresh stepper.
pub fn kdv_step(state: &KdvState, dt: f64) -> Result<KdvState> {
    KdvStepper::new(state.phi0.grid(), dt)?.step(state)
}

/// Stored KdV solution at uniformly spaced times.
#[derive(Clone, Debug)]
pub struct KdvTrajectory {
    pub dt: f64,
    pub stride: usize,
    pub states: Vec<KdvState>,
}

impl KdvTrajectory {
    pub fn final_state(&self) -> &KdvState {
        self.states.last().expect("trajectory holds at least the initial state")
    }

    /// Spacing between stored snapshots.
    pub fn snapshot_dt(&self) -> f64 {
        self.dt * self.stride as f64
    }
}

/// Number of steps of size `dt` that reach `t_final`; rejects non-integer
/// ratios.
pub fn step_count(t_final: f64, dt: f64) -> Result<usize> {
    if !(t_final > 0.0 && dt > 0.0) {
        return Err(Error::InvalidArgument(format!("need t_final > 0 and dt > 0, got {t_final}, {dt}")));
    }
    let ratio = t_final / dt;
    let steps = ratio.round();
    if (ratio - steps).abs() > 1e-9 * ratio.max(1.0) {
        return Err(Error::InvalidArgument(format!("t_final = {t_final} is not a multiple of dt = {dt}")));
    }
    Ok(steps as usize)
}

/// Integrates from `initial` to `t_final`, keeping every `stride`-th state.
pub fn kdv_solve(initial: &KdvState, dt: f64, t_final: f64, stride: usize) -> Result<KdvTrajectory> {
    let steps = step_count(t_final, dt)?;
    let stride = stride.max(1);
    let mut stepper = KdvStepper::new(initial.phi0.grid(), dt)?;
    let mut states = vec![initial.clone()];
    let mut current = initial.clone();
    for i in 1..=steps {
        current = stepper.step(&current)?;
        // Avoid accumulated roundoff in the clock.
        current.time = initial.time + i as f64 * dt;
        if i % stride == 0 || i == steps {
            states.push(current.clone());
        }
    }
    Ok(KdvTrajectory { dt, stride, states })
}

/// `sech²(L k / 2)`: soliton value at the box edge relative to its amplitude.
pub fn soliton_boundary_ratio(k: f64, length: f64) -> f64 {
    let c = (0.5 * k * length).cosh();
    1.0 / (c * c)
}

/// Exact soliton `4k² sech²(k (x - x₀ - 2k² t))`, centred at the box midpoint
/// at `t = 0` and wrapped periodically.
pub fn soliton_exact(grid: &Grid, k: f64, t: f64) -> Result<RealField> {
    if !(k.is_finite() && k > 0.0) {
        return Err(Error::InvalidArgument(format!("soliton wavenumber must be positive, got {k}")));
    }
    let ratio = soliton_boundary_ratio(k, grid.length());
    if ratio > SOLITON_BOUNDARY_TOL {
        warn!("soliton k = {k} is not contained in the box (edge/amplitude = {ratio:.3e})");
    }
    let amp = 4.0 * k * k;
    let shift = grid.center() + 2.0 * k * k * t;
    Ok(RealField::from_fn(grid, |x| {
        let s = 1.0 / (k * grid.wrap_centered(x - shift)).cosh();
        amp * s * s
    }))
}

/// Mass `∫φ₀`, momentum `∫φ₀²` and Hamiltonian `∫(φ₀³/4 - (∂_xφ₀)²/4)`.
pub fn kdv_invariants(phi0: &RealField) -> Invariants {
    let dx = deriv(phi0, 1);
    Invariants {
        mass: phi0.integral(),
        momentum: phi0.product(phi0).integral(),
        hamiltonian: phi0.zip_map(&dx, |p, d| 0.25 * p * p * p - 0.25 * d * d).integral(),
    }
}
