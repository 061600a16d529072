use crate::geometry::Vec2;
use crate::matching::{ImageExtent, Match, MatchSet, MatchSetError};

use super::{content_lines, FormatError};

pub const MATCHES_MAGIC: &str = "pentaverify-matches";
const VERSION: &str = "v1";
const MAX_FRACTION_DIGITS: usize = 6;

/// Shortest decimal rendering of `v` at six fractional digits: trailing
/// zeros and a bare point are removed and negative zero prints as `0`.
pub fn format_coord(v: f64) -> String {
    let mut s = format!("{v:.6}");
    if s.contains('.') {
        let trimmed = s.trim_end_matches('0').trim_end_matches('.').len();
        s.truncate(trimmed);
    }
    if s == "-0" {
        s = "0".to_string();
    }
    s
}

fn parse_decimal(text: &str, line: usize, field: usize) -> Result<f64, FormatError> {
    let digits = text.strip_prefix(['-', '+']).unwrap_or(text);
    let (int, frac) = match digits.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (digits, None),
    };
    let all_digits = |s: &str| s.bytes().all(|b| b.is_ascii_digit());
    let valid = !int.is_empty()
        && all_digits(int)
        && frac.is_none_or(|f| !f.is_empty() && all_digits(f));
    if !valid {
        return Err(FormatError::parse(line, Some(field), format!("`{text}` is not a decimal number")));
    }
    if frac.is_some_and(|f| f.len() > MAX_FRACTION_DIGITS) {
        return Err(FormatError::parse(
            line,
            Some(field),
            format!("`{text}` has more than {MAX_FRACTION_DIGITS} fractional digits"),
        ));
    }
    text.parse()
        .map_err(|_| FormatError::parse(line, Some(field), format!("`{text}` is not a decimal number")))
}

fn parse_dimension(text: &str, line: usize, field: usize) -> Result<u32, FormatError> {
    match text.parse::<u32>() {
        Ok(v) if v > 0 && text.bytes().all(|b| b.is_ascii_digit()) => Ok(v),
        _ => Err(FormatError::parse(line, Some(field), format!("`{text}` is not a positive image dimension"))),
    }
}

/// Parses a match file.
///
/// ```text
/// pentaverify-matches v1 640 480 640 480
/// # x1 y1 x2 y2
/// 10.5 20 11.25 19.75
/// ```
pub fn parse_matches(doc: &str) -> Result<MatchSet, FormatError> {
    let mut lines = content_lines(doc);
    let (header_line, header) = lines
        .next()
        .ok_or_else(|| FormatError::parse(1, None, "missing header line"))?;
    if header[0] != MATCHES_MAGIC {
        return Err(FormatError::parse(header_line, Some(1), format!("expected `{MATCHES_MAGIC}`")));
    }
    if header.get(1) != Some(&VERSION) {
        return Err(FormatError::parse(header_line, Some(2), format!("unsupported version, expected `{VERSION}`")));
    }
    if header.len() != 6 {
        return Err(FormatError::parse(header_line, None, "header needs four image dimensions"));
    }
    let dims: Vec<u32> = header[2..]
        .iter()
        .enumerate()
        .map(|(k, t)| parse_dimension(t, header_line, k + 3))
        .collect::<Result<_, _>>()?;
    let e1 = ImageExtent { width: dims[0], height: dims[1] };
    let e2 = ImageExtent { width: dims[2], height: dims[3] };

    let mut matches = Vec::new();
    let mut line_of = Vec::new();
    for (line, fields) in lines {
        if fields.len() != 4 {
            return Err(FormatError::parse(line, None, format!("expected 4 fields, found {}", fields.len())));
        }
        let v: Vec<f64> = fields
            .iter()
            .enumerate()
            .map(|(k, t)| parse_decimal(t, line, k + 1))
            .collect::<Result<_, _>>()?;
        matches.push(Match::new(Vec2::new(v[0], v[1]), Vec2::new(v[2], v[3])));
        line_of.push(line);
    }

    MatchSet::new(e1, e2, matches).map_err(|e| match e {
        MatchSetError::OutOfBounds { index, image, x, y, width, height } => FormatError::Bounds {
            line: line_of[index],
            image,
            x,
            y,
            width,
            height,
        },
        MatchSetError::NonFinite { index } => {
            FormatError::parse(line_of[index], None, "coordinate is not finite")
        }
        MatchSetError::InvalidExtent { .. } => FormatError::parse(header_line, None, "invalid image extent"),
    })
}

/// Writes `ms` in canonical form: header, then one line per match.
pub fn serialize_matches(ms: &MatchSet) -> String {
    let (e1, e2) = (ms.extent1(), ms.extent2());
    let mut out = format!(
        "{MATCHES_MAGIC} {VERSION} {} {} {} {}\n",
        e1.width, e1.height, e2.width, e2.height
    );
    for m in ms.matches() {
        out.push_str(&format!(
            "{} {} {} {}\n",
            format_coord(m.p1.x),
            format_coord(m.p1.y),
            format_coord(m.p2.x),
            format_coord(m.p2.y)
        ));
    }
    out
}
