//! Configuration, persistence, study orchestration and the command-line front
//! end for the quasineutral Vlasov-Poisson core.

pub mod cli;
pub mod config;
pub mod error;
pub mod io;
pub mod studies;

use std::path::Path;

pub use config::{StudyConfig, StudyKind};
pub use error::{WorkbenchError, WorkbenchResult};
pub use studies::StudyReport;

use io::RunManifest;

/// Writes a report's tables, summary and manifest into `dir`.
pub fn persist_report(report: &StudyReport, cfg: &StudyConfig, dir: &Path, command: &str, started: std::time::Instant) -> WorkbenchResult<()> {
    let echo = serde_json::to_value(cfg).map_err(|e| WorkbenchError::Validation(e.to_string()))?;
    let mut manifest = RunManifest::new(command, echo);
    for t in &report.tables {
        t.table.write(&dir.join(&t.file))?;
        manifest.record(&t.file, &t.operation, &["config"]);
    }
    let summary = serde_json::json!({
        "study": report.kind.name(),
        "summary": report.summary,
        "violations": report.violations,
    });
    let text = serde_json::to_string_pretty(&summary).map_err(|e| WorkbenchError::Validation(e.to_string()))?;
    io::write_text(&dir.join("summary.json"), &(text + "\n"))?;
    let inputs: Vec<&str> = report.tables.iter().map(|t| t.file.as_str()).collect();
    manifest.record("summary.json", &format!("studies::{}", report.kind.name()), &inputs);
    manifest.summary = summary;
    manifest.wall_seconds = started.elapsed().as_secs_f64();
    manifest.write(dir)
}
