#![allow(dead_code)]

use std::collections::HashMap;

use pentaverify::homography::Homography;
use pentaverify::matching::ImageExtent;
use pentaverify::planar::PlanarGroup;
use pentaverify::synth::{Label, PlaneSpec, Rect, SceneSpec};

/// Two planes with fixed, clearly different homographies on the left and
/// right of a 900x900 image, split at x = 360 (a 5x5 block boundary).
pub fn two_plane_spec(inliers: usize, outliers: usize, noise_sigma: f64, seed: u64) -> SceneSpec {
    let left = Homography::from_rows([
        [1.05, 0.08, 40.0],
        [-0.06, 0.97, 30.0],
        [2.0e-4, -1.0e-4, 1.0],
    ])
    .unwrap();
    let right = Homography::from_rows([
        [0.70, -0.10, 120.0],
        [0.08, 0.85, 30.0],
        [-2.0e-4, 1.0e-4, 1.0],
    ])
    .unwrap();
    SceneSpec {
        extent1: ImageExtent { width: 900, height: 900 },
        extent2: ImageExtent { width: 1100, height: 1100 },
        planes: vec![
            PlaneSpec {
                homography: Some(left),
                region: Rect::new(5.0, 5.0, 355.0, 895.0),
                inlier_count: inliers,
            },
            PlaneSpec {
                homography: Some(right),
                region: Rect::new(365.0, 5.0, 895.0, 895.0),
                inlier_count: inliers,
            },
        ],
        outlier_count: outliers,
        near_miss_count: 0,
        noise_sigma,
        seed,
    }
}

/// Pooled membership purity: matches carrying their group's majority label,
/// over all member matches of all groups. Outliers never count as a majority.
pub fn membership_purity(groups: &[PlanarGroup], labels: &[Label]) -> f64 {
    let (mut pure, mut total) = (0usize, 0usize);
    for g in groups {
        let mut counts: HashMap<usize, usize> = HashMap::new();
        for &i in &g.member_matches {
            if let Some(k) = labels[i].plane() {
                *counts.entry(k).or_default() += 1;
            }
        }
        pure += counts.values().copied().max().unwrap_or(0);
        total += g.member_matches.len();
    }
    if total == 0 {
        1.0
    } else {
        pure as f64 / total as f64
    }
}

/// Plane label of a group: the label shared by all its members, if any.
pub fn group_plane(g: &PlanarGroup, labels: &[Label]) -> Option<usize> {
    let first = labels[*g.member_matches.first()?].plane()?;
    g.member_matches
        .iter()
        .all(|&i| labels[i] == Label::Inlier(first))
        .then_some(first)
}
