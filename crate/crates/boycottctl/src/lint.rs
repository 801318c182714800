//! Campaign file lint.

use std::path::Path;

use boycott_core::{validate_document, ValidationReport};
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LintResult {
    pub file: String,
    pub valid: bool,
    pub errors: usize,
    pub warnings: usize,
    pub issues: Vec<boycott_core::ValidationIssue>,
}

impl LintResult {
    pub fn from_report(file: &str, report: ValidationReport) -> LintResult {
        LintResult {
            file: file.to_owned(),
            valid: report.is_valid(),
            errors: report.errors().count(),
            warnings: report.warnings().count(),
            issues: report.issues,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("lint result serializes")
    }
}

/// Reads and validates one campaign file. Only I/O problems are errors; a
/// malformed document is reported as an issue.
pub fn lint_file(path: &Path) -> std::io::Result<LintResult> {
    let bytes = std::fs::read(path)?;
    Ok(LintResult::from_report(&path.display().to_string(), validate_document(&bytes)))
}
