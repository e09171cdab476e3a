//! Run reports and output emission: JSON certificates and CSV paths.
//!
//! Output files are byte-deterministic for a fixed config and seed. Wall
//! time is a diagnostic only, so it goes to standard error and never into a
//! file.

use anyhow::{Context, Result};
use asdvar::evolution::Path as FlowPath;
use asdvar::stationary::SolveReport;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

/// Per-check certificate line.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckVerdict {
    pub name: String,
    pub value: f64,
}

/// Structured result of one CLI run; serialized as the JSON report.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunReport {
    pub command: String,
    pub config_hash: String,
    pub seed: Option<u64>,
    pub gap: f64,
    pub fy_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub certified: bool,
    pub tol_gap: f64,
    pub checks: Vec<CheckVerdict>,
    pub minimizer: Vec<f64>,
}

impl RunReport {
    pub fn from_solve(
        command: &str,
        config_hash: &str,
        seed: Option<u64>,
        rep: &SolveReport<f64>,
    ) -> Self {
        RunReport {
            command: command.to_string(),
            config_hash: config_hash.to_string(),
            seed,
            gap: rep.gap,
            fy_residual: rep.fy_residual,
            iterations: rep.iterations,
            converged: rep.converged,
            certified: rep.certified,
            tol_gap: rep.tol_gap,
            checks: rep
                .check_results
                .iter()
                .map(|(n, v)| CheckVerdict { name: n.clone(), value: *v })
                .collect(),
            minimizer: rep.minimizer.iter().copied().collect(),
        }
    }

    /// Exit code contract: 0 certified, 2 converged but uncertified,
    /// 3 not converged.
    pub fn exit_code(&self) -> i32 {
        if self.certified {
            0
        } else if self.converged {
            2
        } else {
            3
        }
    }

    /// The certificate triple on standard error, scripting-friendly.
    pub fn print_certificate(&self) {
        eprintln!(
            "{}: gap={:.3e} fy_residual={:.3e} converged={} certified={}",
            self.command, self.gap, self.fy_residual, self.converged, self.certified
        );
        for c in &self.checks {
            eprintln!("  check {} = {:.3e}", c.name, c.value);
        }
    }
}

/// 17-significant-digit decimal form that round-trips through `f64`.
pub fn sig17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Write the JSON report. Floats use the shortest decimal form that parses
/// back to the same `f64`, so files are deterministic and lossless.
pub fn write_report(report: &RunReport, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(report).context("serializing report")?;
    std::fs::write(path, text.as_bytes())
        .with_context(|| format!("writing report {}", path.display()))?;
    Ok(())
}

/// Write a flow path as CSV: header `t,x0,x1,...`, one row per time node,
/// numbers with 17 significant digits.
pub fn write_path_csv(path_data: &FlowPath<f64>, out: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write!(buf, "t")?;
    for i in 0..path_data.dim() {
        write!(buf, ",x{i}")?;
    }
    writeln!(buf)?;
    for (i, node) in path_data.values.iter().enumerate() {
        write!(buf, "{}", sig17(path_data.grid.node(i)))?;
        for v in node.iter() {
            write!(buf, ",{}", sig17(*v))?;
        }
        writeln!(buf)?;
    }
    std::fs::write(out, &buf).with_context(|| format!("writing path {}", out.display()))?;
    Ok(())
}
