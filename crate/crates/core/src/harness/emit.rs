use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::RunLog;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(Error::ConfigInvalid(format!("unknown format `{s}`"))),
        }
    }
}

/// `run,step,r_bar,f_value,residual,max_q_<state>...,rate_<state>...`
pub fn csv_header(state_names: &[String]) -> Vec<String> {
    let mut h: Vec<String> = ["run", "step", "r_bar", "f_value", "residual"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    h.extend(state_names.iter().map(|s| format!("max_q_{s}")));
    h.extend(state_names.iter().map(|s| format!("rate_{s}")));
    h
}

/// One row per recorded step per run. The table shows per-state maxima of
/// `q`; full tables go to JSON.
pub fn write_csv<W: Write>(logs: &[RunLog], state_names: &[String], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(csv_header(state_names))?;
    for log in logs {
        for k in 0..log.step.len() {
            let mut row = vec![
                log.metadata.run.to_string(),
                log.step[k].to_string(),
                log.r_bar[k].to_string(),
                log.f_value[k].map(|v| v.to_string()).unwrap_or_default(),
                log.residual[k].to_string(),
            ];
            row.extend(log.q[k].state_maxima().iter().map(f64::to_string));
            row.extend(log.greedy_rates[k].iter().map(f64::to_string));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// A JSON array with one object per run.
pub fn write_json<W: Write>(logs: &[RunLog], mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, logs)?;
    out.write_all(b"\n")?;
    Ok(())
}

/// Writes `runs.<ext>` into `dir` and returns its path.
pub fn emit(logs: &[RunLog], state_names: &[String], format: OutputFormat, dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(format!("runs.{}", format.extension()));
    let file = std::io::BufWriter::new(std::fs::File::create(&path)?);
    match format {
        OutputFormat::Csv => write_csv(logs, state_names, file)?,
        OutputFormat::Json => write_json(logs, file)?,
    }
    Ok(path)
}
