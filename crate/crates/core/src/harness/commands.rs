//! The `kdv`, `corrections` and `regime` reports.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::{InitialData, RunConfig};
use super::report::{csv_text, ensure_dir, json, num, write_file, EnvironmentStamp};
use crate::error::Result;
use crate::hierarchy::{hierarchy_residuals, solve_hierarchy, EquationLabel};
use crate::kdv::{kdv_invariants, kdv_solve, soliton_exact, Invariants, KdvState};
use crate::regime::{check_regime, Band, RegimeReport};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KdvRow {
    pub time: f64,
    pub invariants: Invariants,
    pub drift: f64,
    /// Relative L² distance to the travelling soliton, for soliton data.
    pub soliton_error: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct KdvSummary {
    pub rows: Vec<KdvRow>,
    pub final_state: KdvState,
}

impl KdvSummary {
    pub fn max_drift(&self) -> f64 {
        self.rows.iter().fold(0.0, |m, r| m.max(r.drift))
    }

    pub fn final_soliton_error(&self) -> Option<f64> {
        self.rows.last().and_then(|r| r.soliton_error)
    }
}

pub fn run_kdv(config: &RunConfig) -> Result<KdvSummary> {
    config.validate()?;
    let grid = config.make_grid()?;
    let init = config.initial_state(&grid)?;
    let t = &config.time;
    let traj = kdv_solve(&init, t.dt, t.t_final, t.stride)?;
    let reference = kdv_invariants(&init.phi0);
    let rows = traj
        .states
        .iter()
        .map(|s| {
            let inv = kdv_invariants(&s.phi0);
            let soliton_error = match config.initial {
                InitialData::Soliton { k } => {
                    let exact = soliton_exact(&grid, k, s.time)?;
                    Some((&s.phi0 - &exact).norms().l2 / exact.norms().l2)
                }
                _ => None,
            };
            Ok(KdvRow { time: s.time, drift: inv.max_relative_drift(&reference), invariants: inv, soliton_error })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(KdvSummary { rows, final_state: traj.final_state().clone() })
}

#[derive(Serialize)]
struct Manifest<'a, T: Serialize> {
    command: &'static str,
    environment: EnvironmentStamp,
    config_digest: String,
    config: &'a RunConfig,
    files: &'a [&'static str],
    summary: T,
}

fn manifest<T: Serialize>(
    command: &'static str,
    config: &RunConfig,
    files: &[&'static str],
    summary: T,
) -> Result<String> {
    json(&Manifest {
        command,
        environment: EnvironmentStamp::current(),
        config_digest: config.digest(),
        config,
        files,
        summary,
    })
}

/// `kdv.csv` (time, invariants, drift, soliton error), `phi0_final.csv`
/// (x, φ₀) and `manifest.json`.
pub fn emit_kdv(config: &RunConfig, s: &KdvSummary, dir: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let table = csv_text(
        &["time", "mass", "momentum", "hamiltonian", "max_relative_drift", "soliton_error"],
        s.rows.iter().map(|r| {
            vec![
                num(r.time),
                num(r.invariants.mass),
                num(r.invariants.momentum),
                num(r.invariants.hamiltonian),
                num(r.drift),
                r.soliton_error.map(num).unwrap_or_default(),
            ]
        }),
    )?;
    let f = &s.final_state.phi0;
    let xs = f.grid().points();
    let field = csv_text(&["x", "phi0"], xs.iter().zip(f.values()).map(|(x, v)| vec![num(*x), num(*v)]))?;
    #[derive(Serialize)]
    struct Summary {
        max_relative_drift: f64,
        final_soliton_error: Option<f64>,
        drift_within_tolerance: bool,
    }
    let summary = Summary {
        max_relative_drift: s.max_drift(),
        final_soliton_error: s.final_soliton_error(),
        drift_within_tolerance: s.max_drift() <= config.tolerances.invariant_drift,
    };
    Ok(vec![
        write_file(dir, "kdv.csv", &table)?,
        write_file(dir, "phi0_final.csv", &field)?,
        write_file(dir, "manifest.json", &manifest("kdv", config, &["kdv.csv", "phi0_final.csv"], summary)?)?,
    ])
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorrectionsSummary {
    pub residuals: BTreeMap<EquationLabel, f64>,
    pub theta_integrand_mean: f64,
}

impl CorrectionsSummary {
    pub fn tolerance(&self, config: &RunConfig, label: EquationLabel) -> f64 {
        if label.is_leading() {
            config.tolerances.leading_residual
        } else {
            config.tolerances.higher_residual
        }
    }

    /// Equations whose residual exceeds its tolerance.
    pub fn failures(&self, config: &RunConfig) -> Vec<EquationLabel> {
        self.residuals.iter().filter(|(&l, &v)| v > self.tolerance(config, l)).map(|(&l, _)| l).collect()
    }
}

pub fn run_corrections(config: &RunConfig) -> Result<CorrectionsSummary> {
    config.validate()?;
    let grid = config.make_grid()?;
    let init = config.initial_state(&grid)?;
    let traj = solve_hierarchy(&init, config.time.dt, config.time.t_final)?;
    Ok(CorrectionsSummary { residuals: hierarchy_residuals(&traj)?, theta_integrand_mean: traj.max_integrand_mean() })
}

/// `residuals.csv` (equation, residual, tolerance, pass) and `manifest.json`.
pub fn emit_corrections(config: &RunConfig, s: &CorrectionsSummary, dir: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let table = csv_text(
        &["equation", "residual", "tolerance", "pass"],
        s.residuals.iter().map(|(&l, &v)| {
            let tol = s.tolerance(config, l);
            vec![l.name().to_string(), num(v), num(tol), (v <= tol).to_string()]
        }),
    )?;
    #[derive(Serialize)]
    struct Summary {
        residuals: BTreeMap<&'static str, f64>,
        theta_integrand_mean: f64,
        failures: Vec<&'static str>,
    }
    let summary = Summary {
        residuals: s.residuals.iter().map(|(l, &v)| (l.name(), v)).collect(),
        theta_integrand_mean: s.theta_integrand_mean,
        failures: s.failures(config).into_iter().map(EquationLabel::name).collect(),
    };
    Ok(vec![
        write_file(dir, "residuals.csv", &table)?,
        write_file(dir, "manifest.json", &manifest("corrections", config, &["residuals.csv"], summary)?)?,
    ])
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegimeRow {
    pub epsilon: f64,
    pub nu: f64,
    pub delta: f64,
    pub epsdelta: f64,
    pub finite_time: RegimeReport,
    pub global: RegimeReport,
}

/// Band membership of every `(ε, ν)` of the sweep.
pub fn regime_rows(config: &RunConfig) -> Result<Vec<RegimeRow>> {
    config.validate()?;
    config
        .cases()
        .into_iter()
        .filter_map(|k| k.nu.map(|nu| (k, nu)))
        .map(|(k, nu)| {
            let p = config.scaling(k.epsilon, nu, k.beta)?;
            Ok(RegimeRow {
                epsilon: k.epsilon,
                nu,
                delta: p.delta(),
                epsdelta: p.epsdelta(),
                finite_time: check_regime(&p, Band::FiniteTime),
                global: check_regime(&p, Band::Global),
            })
        })
        .collect()
}

fn membership(r: &RegimeReport) -> &'static str {
    use crate::regime::Membership::*;
    match r.membership {
        Interior => "interior",
        LowerBoundary => "lower-boundary",
        UpperBoundary => "upper-boundary",
        Outside => "outside",
    }
}

/// `regime.csv` and `manifest.json`.
pub fn emit_regime(config: &RunConfig, rows: &[RegimeRow], dir: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let mut out = Vec::new();
    for r in rows {
        for b in [&r.finite_time, &r.global] {
            out.push(vec![
                num(r.epsilon),
                num(r.nu),
                num(b.beta),
                num(r.delta),
                num(r.epsdelta),
                b.band.name().to_string(),
                b.inside.to_string(),
                membership(b).to_string(),
                num(b.lower_margin),
                num(b.upper_margin),
            ]);
        }
    }
    let table = csv_text(
        &["epsilon", "nu", "beta", "delta", "epsdelta", "band", "inside", "membership", "lower_margin", "upper_margin"],
        out,
    )?;
    Ok(vec![
        write_file(dir, "regime.csv", &table)?,
        write_file(dir, "manifest.json", &manifest("regime", config, &["regime.csv"], rows)?)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> RunConfig {
        RunConfig::from_toml_str(
            "[grid]\nlength = 62.83185307179586\nn = 128\n[initial]\nkind = \"soliton\"\nk = 0.5\n\
             [time]\nt_final = 0.1\ndt = 0.01\nstride = 5\n",
        )
        .unwrap()
    }

    #[test]
    fn kdv_rows_follow_stride() {
        let s = run_kdv(&small()).unwrap();
        assert_eq!(s.rows.len(), 3);
        assert_eq!(s.rows[0].drift, 0.0);
        assert!(s.final_soliton_error().unwrap() < 1e-3);
    }

    #[test]
    fn regime_rows_for_default_betas() {
        let rows = regime_rows(&RunConfig::default()).unwrap();
        assert_eq!(rows.len(), 12);
        assert!(rows.iter().all(|r| r.finite_time.inside && !r.global.inside));
    }

    #[test]
    fn corrections_zero_data() {
        let mut cfg = small();
        cfg.initial = InitialData::Zero;
        let s = run_corrections(&cfg).unwrap();
        assert_eq!(s.residuals.len(), EquationLabel::ALL.len());
        assert!(s.residuals.values().all(|&v| v == 0.0));
        assert!(s.failures(&cfg).is_empty());
    }
}
