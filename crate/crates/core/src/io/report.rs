use crate::pipeline::{VerificationReport, REPORT_SCHEMA};

use super::FormatError;

/// Pretty-printed JSON with a trailing newline.
pub fn report_to_json(report: &VerificationReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("reports contain only finite numbers");
    s.push('\n');
    s
}

pub fn report_from_json(doc: &str) -> Result<VerificationReport, FormatError> {
    let report: VerificationReport =
        serde_json::from_str(doc).map_err(|e| FormatError::Report(e.to_string()))?;
    if report.schema != REPORT_SCHEMA {
        return Err(FormatError::Report(format!(
            "unsupported schema `{}`, expected `{REPORT_SCHEMA}`",
            report.schema
        )));
    }
    Ok(report)
}
