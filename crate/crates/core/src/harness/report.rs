use std::io::Write;

use serde::Serialize;

use super::RunLog;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub run: usize,
    pub final_residual: f64,
    /// `|r_bar - r*|` for the Differential family, `|f(q) - r*|` for RVI.
    pub rate_error: f64,
    /// `max_s |rate of the final greedy policy from s - r*|`.
    pub rate_gap: f64,
    pub max_ledger_violation: Option<f64>,
}

pub fn convergence_report(logs: &[RunLog], r_star: f64) -> Vec<ConvergenceRow> {
    logs.iter()
        .map(|log| ConvergenceRow {
            run: log.metadata.run,
            final_residual: log.final_residual(),
            rate_error: (log.final_rate_estimate() - r_star).abs(),
            rate_gap: log
                .final_greedy_rates()
                .iter()
                .fold(0.0, |m: f64, r| m.max((r - r_star).abs())),
            max_ledger_violation: log.max_ledger_violation,
        })
        .collect()
}

pub fn write_report_csv<W: Write>(rows: &[ConvergenceRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["run", "final_residual", "rate_error", "rate_gap", "max_ledger_violation"])?;
    for r in rows {
        w.write_record([
            r.run.to_string(),
            r.final_residual.to_string(),
            r.rate_error.to_string(),
            r.rate_gap.to_string(),
            r.max_ledger_violation.map(|v| v.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
