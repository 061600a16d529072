use crate::synth::Label;

use super::{content_lines, FormatError};

pub const LABELS_HEADER: &str = "pentaverify-labels v1";

/// One label per line, in match order: `inlier <plane>` or `outlier`.
pub fn serialize_labels(labels: &[Label]) -> String {
    let mut out = format!("{LABELS_HEADER}\n");
    for l in labels {
        match l {
            Label::Inlier(k) => out.push_str(&format!("inlier {k}\n")),
            Label::Outlier => out.push_str("outlier\n"),
        }
    }
    out
}

pub fn parse_labels(doc: &str) -> Result<Vec<Label>, FormatError> {
    let mut lines = content_lines(doc);
    match lines.next() {
        Some((_, h)) if h.join(" ") == LABELS_HEADER => {}
        Some((line, _)) => return Err(FormatError::parse(line, Some(1), format!("expected `{LABELS_HEADER}`"))),
        None => return Err(FormatError::parse(1, None, "missing header line")),
    }
    lines
        .map(|(line, f)| match f.as_slice() {
            ["outlier"] => Ok(Label::Outlier),
            ["inlier", k] => k
                .parse()
                .map(Label::Inlier)
                .map_err(|_| FormatError::parse(line, Some(2), format!("`{k}` is not a plane index"))),
            _ => Err(FormatError::parse(line, Some(1), "expected `inlier <plane>` or `outlier`")),
        })
        .collect()
}
