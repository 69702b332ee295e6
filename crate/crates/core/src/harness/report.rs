//! File emission. Tables are CSV with fixed headers and shortest round-trip
//! float formatting, so identical reports give identical bytes.
//!
//! `sweep.csv` columns: `config_digest, epsilon, nu, beta, delta, epsdelta,
//! model, finite_time_band, residual_{mass,velocity,temperature,poisson},
//! {phi_phi0,phi_phibar,state,nsp_ep}_{l2,linf}, mass_drift, constraint`.
//! Euler-Poisson rows have `nu = inf`, `delta = epsdelta = 0` and empty
//! `beta` and `finite_time_band`. Wall-clock times live in `timing.csv`
//! (`epsilon, nu, wall_ms`), the only file that differs between re-runs.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::sweep::{CaseRecord, CaseTiming, SweepReport};
use crate::error::{Error, Result};

pub const SWEEP_HEADER: [&str; 22] = [
    "config_digest",
    "epsilon",
    "nu",
    "beta",
    "delta",
    "epsdelta",
    "model",
    "finite_time_band",
    "residual_mass",
    "residual_velocity",
    "residual_temperature",
    "residual_poisson",
    "phi_phi0_l2",
    "phi_phi0_linf",
    "phi_phibar_l2",
    "phi_phibar_linf",
    "state_l2",
    "state_linf",
    "nsp_ep_l2",
    "nsp_ep_linf",
    "mass_drift",
    "constraint",
];

pub const SLOPES_HEADER: [&str; 7] = ["quantity", "abscissa", "epsilon", "points", "slope", "intercept", "stderr"];

/// Shortest round-trip scientific form; `inf` for infinities.
pub fn num(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x:e}")
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn sweep_row(digest: &str, r: &CaseRecord) -> Vec<String> {
    let band = match &r.finite_time_band {
        Some(b) if b.inside => "inside".to_string(),
        Some(_) => "outside".to_string(),
        None => String::new(),
    };
    let mut row = vec![
        digest.to_string(),
        num(r.epsilon),
        num(r.nu),
        opt(r.beta),
        num(r.delta),
        num(r.epsdelta),
        r.model.name().to_string(),
        band,
    ];
    row.extend(r.residual.as_array().map(num));
    for n in [r.phi_phi0, r.phi_phibar, r.state, r.nsp_ep] {
        row.push(num(n.l2));
        row.push(num(n.linf));
    }
    row.push(num(r.mass_drift));
    row.push(num(r.constraint));
    row
}

/// CSV text with the given header and rows.
pub fn csv_text<I>(header: &[&str], rows: I) -> Result<String>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| Error::Trajectory(format!("csv encoding failed: {e}"));
    w.write_record(header).map_err(fail)?;
    for row in rows {
        w.write_record(&row).map_err(fail)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Trajectory(format!("csv encoding failed: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn sweep_csv(report: &SweepReport) -> Result<String> {
    csv_text(&SWEEP_HEADER, report.records.iter().map(|r| sweep_row(&report.config_digest, r)))
}

pub fn slopes_csv(report: &SweepReport) -> Result<String> {
    csv_text(
        &SLOPES_HEADER,
        report.slopes.iter().map(|s| {
            vec![
                s.quantity.clone(),
                s.abscissa.to_string(),
                opt(s.epsilon),
                s.points.to_string(),
                num(s.fit.slope),
                num(s.fit.intercept),
                num(s.fit.stderr),
            ]
        }),
    )
}

pub fn timing_csv(timings: &[CaseTiming]) -> Result<String> {
    csv_text(
        &["epsilon", "nu", "wall_ms"],
        timings.iter().map(|t| vec![num(t.epsilon), num(t.nu), format!("{:.3}", t.wall_ms)]),
    )
}

/// Tool version and target, recorded in every manifest.
#[derive(Clone, Debug, Serialize)]
pub struct EnvironmentStamp {
    pub tool: &'static str,
    pub version: &'static str,
    pub os: &'static str,
    pub arch: &'static str,
}

impl EnvironmentStamp {
    pub fn current() -> Self {
        EnvironmentStamp {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            os: std::env::consts::OS,
            arch: std::env::consts::ARCH,
        }
    }
}

#[derive(Serialize)]
struct ScalingEntry {
    epsilon: f64,
    nu: f64,
    beta: Option<f64>,
    delta: f64,
    epsdelta: f64,
    finite_time_band: Option<crate::regime::RegimeReport>,
}

#[derive(Serialize)]
struct SweepManifest<'a> {
    command: &'static str,
    environment: EnvironmentStamp,
    config_digest: &'a str,
    config: &'a super::RunConfig,
    files: Vec<&'static str>,
    hierarchy_residuals: &'a std::collections::BTreeMap<String, f64>,
    theta_integrand_mean: f64,
    scaling: Vec<ScalingEntry>,
    slopes: &'a [super::sweep::SlopeRecord],
}

pub fn sweep_manifest(report: &SweepReport) -> Result<String> {
    let scaling = report
        .records
        .iter()
        .filter(|r| r.nu.is_finite())
        .map(|r| ScalingEntry {
            epsilon: r.epsilon,
            nu: r.nu,
            beta: r.beta,
            delta: r.delta,
            epsdelta: r.epsdelta,
            finite_time_band: r.finite_time_band,
        })
        .collect();
    json(&SweepManifest {
        command: "sweep",
        environment: EnvironmentStamp::current(),
        config_digest: &report.config_digest,
        config: &report.config,
        files: vec!["sweep.csv", "slopes.csv", "plot_convergence.py"],
        hierarchy_residuals: &report.hierarchy,
        theta_integrand_mean: report.theta_integrand_mean,
        scaling,
        slopes: &report.slopes,
    })
}

/// Pretty JSON with a trailing newline.
pub fn json<T: Serialize>(value: &T) -> Result<String> {
    let mut s =
        serde_json::to_string_pretty(value).map_err(|e| Error::Trajectory(format!("json encoding failed: {e}")))?;
    s.push('\n');
    Ok(s)
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Writes `sweep.csv`, `slopes.csv`, `manifest.json` and
/// `plot_convergence.py`, plus `timing.csv` when timings are given.
pub fn emit_report(report: &SweepReport, timings: Option<&[CaseTiming]>, dir: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let mut written = vec![
        write_file(dir, "sweep.csv", &sweep_csv(report)?)?,
        write_file(dir, "slopes.csv", &slopes_csv(report)?)?,
        write_file(dir, "manifest.json", &sweep_manifest(report)?)?,
        write_file(dir, "plot_convergence.py", PLOT_SCRIPT)?,
    ];
    if let Some(t) = timings {
        written.push(write_file(dir, "timing.csv", &timing_csv(t)?)?);
    }
    Ok(written)
}

pub const PLOT_SCRIPT: &str = r#"#!/usr/bin/env python3
"""Log-log convergence plots from sweep.csv (run from the output directory)."""
import csv
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else "sweep.csv"
with open(path, newline="") as fh:
    rows = list(csv.DictReader(fh))

ep = sorted((r for r in rows if r["model"] == "ep"), key=lambda r: float(r["epsilon"]))
nsp = [r for r in rows if r["model"] == "nsp"]

fig, axes = plt.subplots(1, 3, figsize=(15, 4.5))

eps = [float(r["epsilon"]) for r in ep]
ax = axes[0]
for col in ("residual_mass", "residual_velocity", "residual_temperature", "residual_poisson"):
    ax.loglog(eps, [float(r[col]) for r in ep], "o-", label=col.replace("residual_", ""))
ax.set_xlabel("epsilon")
ax.set_title("profile residual")
ax.legend()

ax = axes[1]
for col in ("phi_phi0_l2", "phi_phibar_l2", "state_l2"):
    ax.loglog(eps, [float(r[col]) for r in ep], "o-", label=col)
ax.set_xlabel("epsilon")
ax.set_title("sup-in-time errors")
ax.legend()

ax = axes[2]
for e in sorted({r["epsilon"] for r in nsp}, key=float):
    group = sorted((r for r in nsp if r["epsilon"] == e), key=lambda r: float(r["epsdelta"]))
    ed = [float(r["epsdelta"]) for r in group]
    diff = [float(r["nsp_ep_l2"]) for r in group]
    if all(d > 0 for d in diff):
        ax.loglog(ed, diff, "o-", label=f"eps={e}")
ax.set_xlabel("eps*delta")
ax.set_title("|phi_NSP - phi_EP|")
ax.legend()

fig.tight_layout()
fig.savefig("convergence.png", dpi=150)
print("wrote convergence.png")
"#;
