//! Text formats, report serialization, SVG output and the cost benchmark.

mod bench;
mod labels;
mod matches;
mod report;
mod svg;

pub use bench::{benchmark_costs, BenchWorkload, CostTable};
pub use labels::{parse_labels, serialize_labels, LABELS_HEADER};
pub use matches::{format_coord, parse_matches, serialize_matches, MATCHES_MAGIC};
pub use report::{report_from_json, report_to_json};
pub use svg::{render_report_svg, GROUP_PALETTE, INCORRECT_COLOR, REJECTED_COLOR};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FormatError {
    #[error("line {line}{}: {message}", field.map(|f| format!(", field {f}")).unwrap_or_default())]
    Parse {
        line: usize,
        /// 1-based position of the offending whitespace-separated field.
        field: Option<usize>,
        message: String,
    },
    #[error("line {line}: point ({x}, {y}) lies outside image {image} ({width}x{height})")]
    Bounds {
        line: usize,
        image: u8,
        x: f64,
        y: f64,
        width: u32,
        height: u32,
    },
    #[error("report: {0}")]
    Report(String),
}

impl FormatError {
    pub(crate) fn parse(line: usize, field: Option<usize>, message: impl Into<String>) -> Self {
        FormatError::Parse {
            line,
            field,
            message: message.into(),
        }
    }
}

/// Splits a document into (1-based line number, fields) pairs, dropping
/// comments and blank lines.
pub(crate) fn content_lines(doc: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    doc.lines().enumerate().filter_map(|(i, raw)| {
        let body = raw.split('#').next().unwrap_or("");
        let fields: Vec<&str> = body.split_whitespace().collect();
        (!fields.is_empty()).then_some((i + 1, fields))
    })
}
