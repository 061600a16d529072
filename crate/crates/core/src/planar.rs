//! Grouping shape-matched pentagons into planes.
//!
//! Pairs that a view of a plane could not have produced are discarded first:
//! those whose vertex triangles change orientation between the images, and
//! those whose image-2 placement contradicts the image-1 grid layout. The survivors are merged greedily: two pentagon pairs are
//! coplanar when pentagons assembled from a mix of their vertices still pass
//! the cross-ratio shape test.

use std::collections::BTreeSet;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::homography::Homography;
use crate::matching::{shape_matched_pair, MatchSet, PentagonPair, SamplingStats};

/// A set of pentagon pairs asserted to lie on one scene plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanarGroup {
    pub id: usize,
    /// Indices into the kept pentagon list, ascending.
    pub pentagon_ids: Vec<usize>,
    /// Union of the member pentagons' match indices, ascending.
    pub member_matches: Vec<usize>,
    pub homography: Option<Homography>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MergeParams {
    pub tau: f64,
    /// Vertices taken from the first pentagon in a mix (the rest come from the second).
    pub m: usize,
    /// Random splits attempted before declaring two pairs non-coplanar.
    pub mixes: u32,
    /// Also test the complementary mixed pentagon.
    pub second_mixed_pentagon: bool,
}

impl Default for MergeParams {
    fn default() -> Self {
        Self {
            tau: 0.05,
            m: 3,
            mixes: 5,
            second_mixed_pentagon: true,
        }
    }
}

fn sign(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// Whether `p` and `q` swap their left/right or above/below relation between
/// the image-1 grid and the image-2 centroids. Axes on which both pairs share
/// a grid row or column carry no constraint.
fn order_inverted(p: &PentagonPair, q: &PentagonPair) -> bool {
    let dbx = i64::from(q.source_block.bx) - i64::from(p.source_block.bx);
    let dby = i64::from(q.source_block.by) - i64::from(p.source_block.by);
    let (cp, cq) = (p.pent2.centroid(), q.pent2.centroid());
    let x_flip = dbx != 0 && sign((cq.x - cp.x) * dbx as f64) != 1;
    let y_flip = dby != 0 && sign((cq.y - cp.y) * dby as f64) != 1;
    x_flip || y_flip
}

/// Vertex triangles tolerated with opposite orientation in the two images.
/// One flip absorbs a nearly collinear triple disturbed by noise.
pub const MAX_ORIENTATION_FLIPS: usize = 1;

/// Number of the ten vertex triples whose orientation differs between the
/// two images. A plane seen from the same side in both views preserves all
/// of them; cross-ratios cannot tell, since they only use magnitudes.
pub fn orientation_flips(pair: &PentagonPair) -> usize {
    let (a, b) = (pair.pent1.vertices(), pair.pent2.vertices());
    let mut flips = 0;
    for i in 0..5 {
        for j in i + 1..5 {
            for k in j + 1..5 {
                let s1 = sign((a[j] - a[i]).cross(a[k] - a[i]));
                let s2 = sign((b[j] - b[i]).cross(b[k] - b[i]));
                flips += usize::from(s1 != s2);
            }
        }
    }
    flips
}

/// Splits `pairs` into (kept, rejected), preserving input order in both.
///
/// A pair is rejected when more than [`MAX_ORIENTATION_FLIPS`] of its vertex
/// triangles change orientation, or when its relative placement is inverted
/// against more than half of the other orientation-consistent pairs. With two
/// or fewer such pairs there is no majority and the placement rule is skipped.
pub fn reject_inconsistent_pentagons(
    pairs: Vec<PentagonPair>,
) -> (Vec<PentagonPair>, Vec<PentagonPair>) {
    let mut reject: Vec<bool> = pairs
        .iter()
        .map(|p| orientation_flips(p) > MAX_ORIENTATION_FLIPS)
        .collect();
    let upright: Vec<usize> = (0..pairs.len()).filter(|&i| !reject[i]).collect();
    let k = upright.len();
    if k > 2 {
        let misplaced: Vec<usize> = upright
            .iter()
            .copied()
            .filter(|&i| {
                let inverted = upright
                    .iter()
                    .filter(|&&j| j != i && order_inverted(&pairs[i], &pairs[j]))
                    .count();
                2 * inverted > k - 1
            })
            .collect();
        for i in misplaced {
            reject[i] = true;
        }
    }
    let mut kept = Vec::new();
    let mut rejected = Vec::new();
    for (pair, r) in pairs.into_iter().zip(reject) {
        if r {
            rejected.push(pair);
        } else {
            kept.push(pair);
        }
    }
    (kept, rejected)
}

/// Tests whether `pa` and `pb` lie on one plane by mixing their vertices.
///
/// Each split takes `m` vertex positions from `pa` and the complementary
/// positions from `pb` (and, for the second pentagon, the other way round).
/// The pairs merge as soon as one split passes; degenerate mixes fail.
pub fn try_merge<R: Rng + ?Sized>(
    ms: &MatchSet,
    pa: &PentagonPair,
    pb: &PentagonPair,
    params: &MergeParams,
    rng: &mut R,
    stats: &mut SamplingStats,
) -> bool {
    assert!((1..=4).contains(&params.m), "merge split must take 1..=4 vertices");
    for _ in 0..params.mixes {
        let mut from_a = [false; 5];
        for k in index::sample(rng, 5, params.m).iter() {
            from_a[k] = true;
        }
        let first: [usize; 5] =
            std::array::from_fn(|k| if from_a[k] { pa.indices[k] } else { pb.indices[k] });
        let second: [usize; 5] =
            std::array::from_fn(|k| if from_a[k] { pb.indices[k] } else { pa.indices[k] });

        if shape_matched_pair(ms, first, pa.source_block, params.tau, stats).is_none() {
            continue;
        }
        if params.second_mixed_pentagon
            && shape_matched_pair(ms, second, pb.source_block, params.tau, stats).is_none()
        {
            continue;
        }
        return true;
    }
    false
}

/// Greedy first-fit grouping in input order. Each pair is tested against the
/// founding pair of every existing group and joins the first that merges;
/// otherwise it founds a new group.
pub fn build_planar_groups<R: Rng + ?Sized>(
    ms: &MatchSet,
    pairs: &[PentagonPair],
    params: &MergeParams,
    rng: &mut R,
    stats: &mut SamplingStats,
) -> Vec<PlanarGroup> {
    let mut members: Vec<Vec<usize>> = Vec::new();
    for (i, pair) in pairs.iter().enumerate() {
        let target = members
            .iter()
            .position(|g| try_merge(ms, &pairs[g[0]], pair, params, rng, stats));
        match target {
            Some(g) => members[g].push(i),
            None => members.push(vec![i]),
        }
    }
    members
        .into_iter()
        .enumerate()
        .map(|(id, pentagon_ids)| {
            let member_matches: BTreeSet<usize> = pentagon_ids
                .iter()
                .flat_map(|&p| pairs[p].indices)
                .collect();
            PlanarGroup {
                id,
                pentagon_ids,
                member_matches: member_matches.into_iter().collect(),
                homography: None,
            }
        })
        .collect()
}
