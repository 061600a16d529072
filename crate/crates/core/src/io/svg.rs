use std::fmt::Write;

use crate::geometry::Vec2;
use crate::matching::{MatchSet, PentagonPair};
use crate::pipeline::VerificationReport;

use super::format_coord as n;

/// Stroke colors of planar groups, cycled by group id. Blue is reserved.
pub const GROUP_PALETTE: [&str; 8] = [
    "#e41a1c", "#ff7f00", "#4daf4a", "#984ea3", "#a65628", "#f781bf", "#17becf", "#bcbd22",
];
pub const REJECTED_COLOR: &str = "#0000ff";
pub const INCORRECT_COLOR: &str = "#000000";
const UNGROUPED_COLOR: &str = "#808080";
const GAP: f64 = 20.0;
const MARK: f64 = 3.0;

fn group_color(id: usize) -> &'static str {
    GROUP_PALETTE[id % GROUP_PALETTE.len()]
}

fn polygon(out: &mut String, pts: &[Vec2; 5], dx: f64, color: &str) {
    let coords: Vec<String> = pts.iter().map(|p| format!("{},{}", n(p.x + dx), n(p.y))).collect();
    let _ = writeln!(
        out,
        r#"<polygon points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
        coords.join(" ")
    );
}

fn pentagon_pair(out: &mut String, pair: &PentagonPair, dx2: f64, color: &str) {
    polygon(out, pair.pent1.vertices(), 0.0, color);
    polygon(out, pair.pent2.vertices(), dx2, color);
}

fn cross(out: &mut String, p: Vec2) {
    let _ = writeln!(
        out,
        r#"<path d="M{},{}L{},{}M{},{}L{},{}" stroke="{INCORRECT_COLOR}" stroke-width="1"/>"#,
        n(p.x - MARK),
        n(p.y - MARK),
        n(p.x + MARK),
        n(p.y + MARK),
        n(p.x - MARK),
        n(p.y + MARK),
        n(p.x + MARK),
        n(p.y - MARK)
    );
}

/// Renders image 1 and image 2 side by side with pentagons and match verdicts.
///
/// Kept pentagons are stroked in their group color (gray if their group was
/// dropped), rejected ones in blue. Correct matches are filled circles in the
/// group color, incorrect ones black crosses.
pub fn render_report_svg(ms: &MatchSet, report: &VerificationReport) -> String {
    let (e1, e2) = (ms.extent1(), ms.extent2());
    let dx2 = f64::from(e1.width) + GAP;
    let width = dx2 + f64::from(e2.width);
    let height = e1.height.max(e2.height);

    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{}" height="{height}" viewBox="0 0 {} {height}">"#,
        n(width),
        n(width)
    );
    let _ = writeln!(
        out,
        r##"<rect x="0" y="0" width="{}" height="{}" fill="#ffffff" stroke="#000000"/>"##,
        e1.width, e1.height
    );
    let _ = writeln!(
        out,
        r##"<rect x="{}" y="0" width="{}" height="{}" fill="#ffffff" stroke="#000000"/>"##,
        n(dx2),
        e2.width,
        e2.height
    );

    let mut owner = vec![None; report.kept_pentagons.len()];
    for g in &report.groups {
        for &p in &g.pentagon_ids {
            if let Some(slot) = owner.get_mut(p) {
                *slot = Some(g.id);
            }
        }
    }
    for (pair, group) in report.kept_pentagons.iter().zip(&owner) {
        let color = group.map_or(UNGROUPED_COLOR, group_color);
        pentagon_pair(&mut out, pair, dx2, color);
    }
    for pair in &report.rejected_pentagons {
        pentagon_pair(&mut out, pair, dx2, REJECTED_COLOR);
    }

    for v in &report.verdicts {
        let Some(m) = ms.get(v.match_index) else {
            continue;
        };
        match v.group_id() {
            Some(g) => {
                for p in [m.p1, Vec2::new(m.p2.x + dx2, m.p2.y)] {
                    let _ = writeln!(
                        out,
                        r#"<circle cx="{}" cy="{}" r="{MARK}" fill="{}"/>"#,
                        n(p.x),
                        n(p.y),
                        group_color(g)
                    );
                }
            }
            None => {
                cross(&mut out, m.p1);
                cross(&mut out, Vec2::new(m.p2.x + dx2, m.p2.y));
            }
        }
    }
    out.push_str("</svg>\n");
    out
}
