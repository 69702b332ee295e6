use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{CaseKey, RunConfig};
use super::fit::{fit_order, OrderFit};
use crate::error::{Error, Result};
use crate::fluid::{run_fluid, FluidModel, FluidState};
use crate::hierarchy::{hierarchy_residuals, solve_hierarchy, CorrectionTrajectory};
use crate::profile::{build_profile_trajectory, profile_residual_ep, profile_residual_nsp, ProfileResidual};
use crate::regime::{check_regime, Band, RegimeReport, ScalingParams};
use crate::spectral::RealField;

/// Environment variable overriding the number of worker threads.
pub const THREADS_ENV: &str = "KDV_LIMIT_THREADS";

/// Read-only inputs shared by every case of a sweep.
pub struct SweepContext {
    pub config: RunConfig,
    pub hierarchy: CorrectionTrajectory,
}

impl SweepContext {
    /// KdV and correction hierarchy for the configured initial data.
    pub fn prepare(config: &RunConfig) -> Result<Self> {
        config.validate()?;
        let grid = config.make_grid()?;
        let init = config.initial_state(&grid)?;
        let hierarchy = solve_hierarchy(&init, config.time.dt, config.time.t_final)?;
        Ok(SweepContext { config: config.clone(), hierarchy })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NormPair {
    pub l2: f64,
    pub linf: f64,
}

impl NormPair {
    const ZERO: NormPair = NormPair { l2: 0.0, linf: 0.0 };

    fn max(self, o: NormPair) -> NormPair {
        NormPair { l2: self.l2.max(o.l2), linf: self.linf.max(o.linf) }
    }

    fn of(f: &RealField) -> NormPair {
        let n = f.norms();
        NormPair { l2: n.l2, linf: n.linf }
    }

    /// Joint norm of several fields: root sum of squares of the L² norms,
    /// largest L∞ norm.
    fn joint(fs: &[RealField]) -> NormPair {
        let ns: Vec<_> = fs.iter().map(NormPair::of).collect();
        NormPair {
            l2: ns.iter().map(|n| n.l2 * n.l2).sum::<f64>().sqrt(),
            linf: ns.iter().fold(0.0, |m, n| m.max(n.linf)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Ep,
    Nsp,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Ep => "ep",
            ModelKind::Nsp => "nsp",
        }
    }
}

/// One row of the convergence table. Norms are suprema over the stored
/// times in `[0, T]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CaseRecord {
    pub epsilon: f64,
    /// `+∞` for Euler-Poisson.
    pub nu: f64,
    pub beta: Option<f64>,
    pub delta: f64,
    pub epsdelta: f64,
    pub model: ModelKind,
    pub finite_time_band: Option<RegimeReport>,
    /// Profile defect in the integrated system.
    pub residual: ProfileResidual,
    pub phi_phi0: NormPair,
    pub phi_phibar: NormPair,
    /// `(ρ, u₁, θ) − (ρ̄, ū₁, θ̄)`.
    pub state: NormPair,
    /// `φ_NSP − φ_EP`; zero for Euler-Poisson.
    pub nsp_ep: NormPair,
    pub mass_drift: f64,
    pub constraint: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CaseTiming {
    pub epsilon: f64,
    pub nu: f64,
    pub wall_ms: f64,
}

/// Runs a profile-initialized fluid solve and collects the error norms
/// against the profile and the KdV solution.
fn track(
    ctx: &SweepContext,
    profiles: &[crate::profile::ApproxProfile],
    model: &FluidModel,
    mut extra: impl FnMut(usize, &FluidState) -> Result<()>,
) -> Result<(NormPair, NormPair, NormPair, f64, f64)> {
    let t = &ctx.config.time;
    let start = profiles[0].to_fluid_state()?;
    let (mut e0, mut eb, mut es) = (NormPair::ZERO, NormPair::ZERO, NormPair::ZERO);
    let run = run_fluid(&start, model, t.dt, t.t_final, usize::MAX, |i, s| {
        let p = &profiles[i];
        e0 = e0.max(NormPair::of(&(&s.phi - &ctx.hierarchy.sets[i].phi0)));
        eb = eb.max(NormPair::of(&(&s.phi - &p.phi)));
        es = es.max(NormPair::joint(&[&s.rho - &p.rho, &s.u1 - &p.u1, &s.theta - &p.theta]));
        extra(i, s)
    })?;
    Ok((e0, eb, es, run.max_mass_drift(), run.max_constraint()))
}

/// Executes one case: profile, fluid run from the profile at `t = 0`, error
/// and residual norms. A ν outside the finite-time band is logged, not
/// rejected.
pub fn run_case(ctx: &SweepContext, key: CaseKey) -> Result<CaseRecord> {
    let cfg = &ctx.config;
    let eps = key.epsilon;
    let traj = build_profile_trajectory(&ctx.hierarchy, eps)?;
    let ep_model = FluidModel::euler_poisson(eps);
    let Some(nu) = key.nu else {
        let residual = profile_residual_ep(&traj)?;
        let (phi_phi0, phi_phibar, state, mass_drift, constraint) =
            track(ctx, &traj.profiles, &ep_model, |_, _| Ok(()))?;
        return Ok(CaseRecord {
            epsilon: eps,
            nu: f64::INFINITY,
            beta: None,
            delta: 0.0,
            epsdelta: 0.0,
            model: ModelKind::Ep,
            finite_time_band: None,
            residual,
            phi_phi0,
            phi_phibar,
            state,
            nsp_ep: NormPair::ZERO,
            mass_drift,
            constraint,
        });
    };
    let params: ScalingParams = cfg.scaling(eps, nu, key.beta)?;
    let band = check_regime(&params, Band::FiniteTime);
    if !band.inside {
        log::warn!("eps = {eps}, nu = {nu:e} lies outside the finite-time band (beta = {:.3})", band.beta);
    }
    let coeffs = cfg.coeffs();
    let epsdelta = params.epsdelta();
    let model = FluidModel::navier_stokes_poisson(eps, epsdelta, coeffs.clone());
    model.validate()?;
    let residual = profile_residual_nsp(&traj, &coeffs, epsdelta)?;

    let mut ep_phi = Vec::with_capacity(ctx.hierarchy.len());
    track(ctx, &traj.profiles, &ep_model, |_, s| {
        ep_phi.push(s.phi.clone());
        Ok(())
    })?;
    let mut nsp_ep = NormPair::ZERO;
    let (phi_phi0, phi_phibar, state, mass_drift, constraint) = track(ctx, &traj.profiles, &model, |i, s| {
        let reference = ep_phi.get(i).ok_or_else(|| Error::Trajectory("reference run is shorter".into()))?;
        nsp_ep = nsp_ep.max(NormPair::of(&(&s.phi - reference)));
        Ok(())
    })?;
    Ok(CaseRecord {
        epsilon: eps,
        nu,
        beta: key.beta,
        delta: params.delta(),
        epsdelta,
        model: ModelKind::Nsp,
        finite_time_band: Some(band),
        residual,
        phi_phi0,
        phi_phibar,
        state,
        nsp_ep,
        mass_drift,
        constraint,
    })
}

/// A fitted slope of one reported quantity.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SlopeRecord {
    pub quantity: String,
    /// `"epsilon"` for Euler-Poisson ε-sweeps, `"epsdelta"` for ν-sweeps at
    /// fixed ε.
    pub abscissa: &'static str,
    /// Fixed ε of a ν-sweep.
    pub epsilon: Option<f64>,
    pub points: usize,
    #[serde(flatten)]
    pub fit: OrderFit,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepReport {
    pub config: RunConfig,
    pub config_digest: String,
    /// Largest residual of each order equation along the hierarchy run.
    pub hierarchy: BTreeMap<String, f64>,
    pub theta_integrand_mean: f64,
    pub records: Vec<CaseRecord>,
    pub slopes: Vec<SlopeRecord>,
}

fn try_fit(quantity: &str, abscissa: &'static str, epsilon: Option<f64>, pairs: &[(f64, f64)]) -> Option<SlopeRecord> {
    match fit_order(pairs) {
        Ok(fit) => Some(SlopeRecord { quantity: quantity.into(), abscissa, epsilon, points: pairs.len(), fit }),
        Err(e) => {
            log::info!("no slope for {quantity}: {e}");
            None
        }
    }
}

/// Slopes of every Euler-Poisson quantity against ε, and of `φ_NSP − φ_EP`
/// against `εδ` within each ε.
pub fn fit_slopes(records: &[CaseRecord]) -> Vec<SlopeRecord> {
    type Getter = fn(&CaseRecord) -> f64;
    let quantities: [(&str, Getter); 10] = [
        ("residual_mass", |r| r.residual.mass),
        ("residual_velocity", |r| r.residual.velocity),
        ("residual_temperature", |r| r.residual.temperature),
        ("residual_poisson", |r| r.residual.poisson),
        ("phi_phi0_l2", |r| r.phi_phi0.l2),
        ("phi_phi0_linf", |r| r.phi_phi0.linf),
        ("phi_phibar_l2", |r| r.phi_phibar.l2),
        ("phi_phibar_linf", |r| r.phi_phibar.linf),
        ("state_l2", |r| r.state.l2),
        ("state_linf", |r| r.state.linf),
    ];
    let ep: Vec<_> = records.iter().filter(|r| r.model == ModelKind::Ep).collect();
    let mut out: Vec<_> = quantities
        .iter()
        .filter_map(|(name, get)| {
            let pairs: Vec<_> = ep.iter().map(|r| (r.epsilon, get(r))).collect();
            try_fit(name, "epsilon", None, &pairs)
        })
        .collect();
    let mut epsilons: Vec<f64> = records.iter().filter(|r| r.model == ModelKind::Nsp).map(|r| r.epsilon).collect();
    epsilons.dedup();
    for eps in epsilons {
        let group: Vec<_> = records.iter().filter(|r| r.model == ModelKind::Nsp && r.epsilon == eps).collect();
        for (name, get) in [("nsp_ep_l2", (|r: &CaseRecord| r.nsp_ep.l2) as Getter), ("nsp_ep_linf", |r| r.nsp_ep.linf)]
        {
            let pairs: Vec<_> = group.iter().map(|r| (r.epsdelta, get(r))).collect();
            out.extend(try_fit(name, "epsdelta", Some(eps), &pairs));
        }
    }
    out
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::Config(format!("{THREADS_ENV} must be a thread count, got {v:?}")))?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker threads: {e}")))
}

/// Runs `keys` concurrently and returns records and timings in report order,
/// whatever the order of `keys`.
pub fn run_cases(ctx: &SweepContext, keys: &[CaseKey]) -> Result<(Vec<CaseRecord>, Vec<CaseTiming>)> {
    let pool = thread_pool()?;
    let mut results: Vec<(CaseKey, CaseRecord, CaseTiming)> = pool.install(|| {
        keys.par_iter()
            .map(|&key| {
                let start = Instant::now();
                let rec = run_case(ctx, key)?;
                let timing =
                    CaseTiming { epsilon: key.epsilon, nu: rec.nu, wall_ms: start.elapsed().as_secs_f64() * 1e3 };
                Ok((key, rec, timing))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    results.sort_by(|a, b| a.0.order(&b.0));
    Ok(results.into_iter().map(|(_, r, t)| (r, t)).unzip())
}

/// Merges records into a report with slopes.
pub fn assemble_report(ctx: &SweepContext, records: Vec<CaseRecord>) -> Result<SweepReport> {
    let hierarchy =
        hierarchy_residuals(&ctx.hierarchy)?.into_iter().map(|(label, v)| (label.name().to_string(), v)).collect();
    let mean = ctx.hierarchy.max_integrand_mean();
    if mean > ctx.config.tolerances.theta_mean {
        log::warn!("theta3 integrand mean {mean:e} exceeds tolerance");
    }
    let slopes = fit_slopes(&records);
    Ok(SweepReport {
        config: ctx.config.clone(),
        config_digest: ctx.config.digest(),
        hierarchy,
        theta_integrand_mean: mean,
        records,
        slopes,
    })
}

/// Full sweep over the configured cases.
pub fn run_sweep(config: &RunConfig) -> Result<(SweepReport, Vec<CaseTiming>)> {
    let ctx = SweepContext::prepare(config)?;
    let (records, timings) = run_cases(&ctx, &config.cases())?;
    Ok((assemble_report(&ctx, records)?, timings))
}
