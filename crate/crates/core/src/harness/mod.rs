//! Configuration-driven runs: KdV reports, hierarchy residuals, regime
//! tables and full ε/ν convergence sweeps.

mod commands;
mod config;
mod fit;
mod report;
mod sweep;

pub use commands::{
    emit_corrections, emit_kdv, emit_regime, regime_rows, run_corrections, run_kdv, CorrectionsSummary, KdvRow,
    KdvSummary, RegimeRow,
};
pub use config::{
    CaseKey, GridConfig, InitialData, OutputConfig, RegimeConfig, RunConfig, SweepConfig, TimeConfig, Tolerances,
    TransportConfig, TransportKind, DEFAULT_BETAS,
};
pub use fit::{fit_order, OrderFit};
pub use report::{emit_report, num, slopes_csv, sweep_csv, sweep_manifest, timing_csv, EnvironmentStamp, SWEEP_HEADER};
pub use sweep::{
    assemble_report, fit_slopes, run_case, run_cases, run_sweep, CaseRecord, CaseTiming, ModelKind, NormPair,
    SlopeRecord, SweepContext, SweepReport, THREADS_ENV,
};
