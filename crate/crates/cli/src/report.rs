//! Machine-readable result reports and CSV trace emission.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use otbarriers::classical::SweepRow;
use otbarriers::ipm::TraceRow;
use otbarriers::OtError;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct SolverParams {
    pub delta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start_summary: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct IterationCounts {
    pub phase1_newton: usize,
    pub phase2_outer: usize,
    pub phase2_newton: usize,
    pub sweeps: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultReport {
    pub method: String,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub primal_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gap: Option<f64>,
    pub residuals: Vec<f64>,
    pub iterations: IterationCounts,
    pub flop_estimate: u64,
    pub wall_time_s: f64,
    pub certified: bool,
    pub params: SolverParams,
}

impl ResultReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn save(&self, path: &Path) -> Result<(), OtError> {
        fs::write(path, self.to_json() + "\n")
            .map_err(|e| OtError::InvalidInput(format!("cannot write {}: {e}", path.display())))
    }
}

pub const IPM_TRACE_HEADER: &str = "outer,eta,newton_steps,decrement,dual_value,gap,flops";

pub fn ipm_trace_csv(rows: &[TraceRow]) -> String {
    let mut out = String::from(IPM_TRACE_HEADER);
    out.push('\n');
    for r in rows {
        writeln!(
            out,
            "{},{:e},{},{:e},{:e},{:e},{}",
            r.outer, r.eta, r.newton_steps, r.decrement, r.dual_value, r.gap, r.flops
        )
        .expect("write to string");
    }
    out
}

pub const SWEEP_TRACE_HEADER: &str = "sweep,phi,max_residual";

pub fn sweep_trace_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_TRACE_HEADER);
    out.push('\n');
    for r in rows {
        writeln!(out, "{},{:e},{:e}", r.sweep, r.phi, r.max_residual).expect("write to string");
    }
    out
}

/// Parses an IPM trace back; used by the trace round-trip checks.
pub fn parse_ipm_trace(csv: &str) -> Result<Vec<TraceRow>, OtError> {
    let mut lines = csv.lines();
    let header = lines.next().unwrap_or_default();
    if header != IPM_TRACE_HEADER {
        return Err(OtError::InvalidInput(format!(
            "unexpected trace header {header:?}"
        )));
    }
    let mut rows = Vec::new();
    for (k, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 7 {
            return Err(OtError::InvalidInput(format!(
                "trace row {k} has {} fields",
                parts.len()
            )));
        }
        let parse_f = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| OtError::InvalidInput(format!("trace row {k}: {e}")))
        };
        rows.push(TraceRow {
            outer: parts[0]
                .parse()
                .map_err(|e| OtError::InvalidInput(format!("trace row {k}: {e}")))?,
            eta: parse_f(parts[1])?,
            newton_steps: parts[2]
                .parse()
                .map_err(|e| OtError::InvalidInput(format!("trace row {k}: {e}")))?,
            decrement: parse_f(parts[3])?,
            dual_value: parse_f(parts[4])?,
            gap: parse_f(parts[5])?,
            flops: parts[6]
                .parse()
                .map_err(|e| OtError::InvalidInput(format!("trace row {k}: {e}")))?,
        });
    }
    Ok(rows)
}
