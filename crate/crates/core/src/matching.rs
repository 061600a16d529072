//! Match sets, the image-1 grid, and randomized per-block pentagon sampling.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    canonical_order, cross_ratios_match, separation_tolerance, GeometryResult, Pentagon, Vec2,
    GATES_PER_SHAPE_MATCH,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MatchSetError {
    #[error("image extent must be at least 1x1, got {width}x{height}")]
    InvalidExtent { width: u32, height: u32 },
    #[error("match {index}: coordinate is not finite")]
    NonFinite { index: usize },
    #[error("match {index}: point ({x}, {y}) lies outside image {image} ({width}x{height})")]
    OutOfBounds {
        index: usize,
        image: u8,
        x: f64,
        y: f64,
        width: u32,
        height: u32,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ImageExtent {
    pub width: u32,
    pub height: u32,
}

impl ImageExtent {
    pub fn new(width: u32, height: u32) -> Result<Self, MatchSetError> {
        if width == 0 || height == 0 {
            return Err(MatchSetError::InvalidExtent { width, height });
        }
        Ok(Self { width, height })
    }

    pub fn diagonal(&self) -> f64 {
        (self.width as f64).hypot(self.height as f64)
    }

    /// Half-open containment: `0 <= x < width`, `0 <= y < height`.
    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= 0.0 && p.y >= 0.0 && p.x < self.width as f64 && p.y < self.height as f64
    }

    /// Minimum distance between two pentagon vertices in this image.
    pub fn min_separation(&self) -> f64 {
        separation_tolerance(self.diagonal())
    }
}

/// One initial correspondence: `p1` in image 1, `p2` in image 2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Match {
    pub p1: Vec2,
    pub p2: Vec2,
}

impl Match {
    pub fn new(p1: Vec2, p2: Vec2) -> Self {
        Self { p1, p2 }
    }
}

/// Image extents plus the indexed list of initial correspondences.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchSet {
    extent1: ImageExtent,
    extent2: ImageExtent,
    matches: Vec<Match>,
}

impl MatchSet {
    pub fn new(
        extent1: ImageExtent,
        extent2: ImageExtent,
        matches: Vec<Match>,
    ) -> Result<Self, MatchSetError> {
        for ext in [extent1, extent2] {
            if ext.width == 0 || ext.height == 0 {
                return Err(MatchSetError::InvalidExtent {
                    width: ext.width,
                    height: ext.height,
                });
            }
        }
        for (index, m) in matches.iter().enumerate() {
            if !m.p1.is_finite() || !m.p2.is_finite() {
                return Err(MatchSetError::NonFinite { index });
            }
            for (image, p, ext) in [(1, m.p1, extent1), (2, m.p2, extent2)] {
                if !ext.contains(p) {
                    return Err(MatchSetError::OutOfBounds {
                        index,
                        image,
                        x: p.x,
                        y: p.y,
                        width: ext.width,
                        height: ext.height,
                    });
                }
            }
        }
        Ok(Self {
            extent1,
            extent2,
            matches,
        })
    }

    pub fn extent1(&self) -> ImageExtent {
        self.extent1
    }

    pub fn extent2(&self) -> ImageExtent {
        self.extent2
    }

    pub fn matches(&self) -> &[Match] {
        &self.matches
    }

    pub fn len(&self) -> usize {
        self.matches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matches.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<&Match> {
        self.matches.get(index)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BlockCoord {
    pub bx: u32,
    pub by: u32,
}

impl BlockCoord {
    pub fn new(bx: u32, by: u32) -> Self {
        Self { bx, by }
    }
}

/// Pixel rectangle `[x0, x1) × [y0, y1)` covered by a block of an `n × n` grid.
pub fn block_rect(extent: ImageExtent, n: u32, block: BlockCoord) -> (f64, f64, f64, f64) {
    let (w, h, n) = (extent.width as f64, extent.height as f64, n as f64);
    let x0 = block.bx as f64 * w / n;
    let y0 = block.by as f64 * h / n;
    let x1 = (block.bx + 1) as f64 * w / n;
    let y1 = (block.by + 1) as f64 * h / n;
    (x0, y0, x1, y1)
}

/// `n × n` blocking of image 1; depends only on the image-1 positions.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPartition {
    n: u32,
    block_of: Vec<BlockCoord>,
}

impl GridPartition {
    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn block_of(&self, index: usize) -> BlockCoord {
        self.block_of[index]
    }

    /// Match indices per block, blocks in row-major order, all `n²` listed.
    pub fn blocks(&self) -> Vec<(BlockCoord, Vec<usize>)> {
        let n = self.n as usize;
        let mut out: Vec<(BlockCoord, Vec<usize>)> = (0..n * n)
            .map(|k| (BlockCoord::new((k % n) as u32, (k / n) as u32), Vec::new()))
            .collect();
        for (i, b) in self.block_of.iter().enumerate() {
            out[b.by as usize * n + b.bx as usize].1.push(i);
        }
        out
    }
}

fn block_index(coord: f64, size: u32, n: u32) -> u32 {
    let raw = (coord * n as f64 / size as f64).floor();
    if raw <= 0.0 {
        0
    } else {
        (raw as u32).min(n - 1)
    }
}

/// Assigns every match to the image-1 block containing `p1`.
pub fn partition(ms: &MatchSet, n: u32) -> GridPartition {
    assert!(n >= 1, "grid size must be positive");
    let e = ms.extent1();
    let block_of = ms
        .matches()
        .iter()
        .map(|m| {
            BlockCoord::new(
                block_index(m.p1.x, e.width, n),
                block_index(m.p1.y, e.height, n),
            )
        })
        .collect();
    GridPartition { n, block_of }
}

/// Five correspondences realized as a pentagon in each image. `pent1` is in
/// canonical order; `pent2` inherits that order through `indices`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PentagonPair {
    pub indices: [usize; 5],
    pub pent1: Pentagon,
    pub pent2: Pentagon,
    pub source_block: BlockCoord,
}

impl PentagonPair {
    /// Canonicalizes the five matches by their image-1 polar order and
    /// validates both pentagons. No shape comparison is made.
    pub fn from_matches(
        ms: &MatchSet,
        indices: [usize; 5],
        source_block: BlockCoord,
    ) -> GeometryResult<Self> {
        let raw1 = indices.map(|i| ms.matches[i].p1);
        let order = canonical_order(&raw1);
        let indices = order.map(|k| indices[k]);
        let pent1 = Pentagon::new(
            indices.map(|i| ms.matches[i].p1),
            ms.extent1.min_separation(),
        )?;
        let pent2 = Pentagon::new(
            indices.map(|i| ms.matches[i].p2),
            ms.extent2.min_separation(),
        )?;
        Ok(Self {
            indices,
            pent1,
            pent2,
            source_block,
        })
    }
}

/// Work counters for sampling and merging.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingStats {
    /// Random quintuple draws, degenerate ones included.
    pub trials: u64,
    /// Draws rejected because a pentagon was degenerate in either image.
    pub degenerate_draws: u64,
    /// Comparisons that reached the cross-ratio gate.
    pub shape_comparisons: u64,
    /// Individual gate evaluations.
    pub gate_evaluations: u64,
}

impl SamplingStats {
    pub fn absorb(&mut self, other: &SamplingStats) {
        self.trials += other.trials;
        self.degenerate_draws += other.degenerate_draws;
        self.shape_comparisons += other.shape_comparisons;
        self.gate_evaluations += other.gate_evaluations;
    }
}

/// Builds the pentagon pair for `indices` and runs the five-gate shape test.
/// Degenerate configurations count as a failed comparison.
pub(crate) fn shape_matched_pair(
    ms: &MatchSet,
    indices: [usize; 5],
    source_block: BlockCoord,
    tau: f64,
    stats: &mut SamplingStats,
) -> Option<PentagonPair> {
    let crs = PentagonPair::from_matches(ms, indices, source_block).and_then(|pair| {
        let a = pair.pent1.cross_ratios()?;
        let b = pair.pent2.cross_ratios()?;
        Ok((pair, a, b))
    });
    let Ok((pair, a, b)) = crs else {
        stats.degenerate_draws += 1;
        return None;
    };
    stats.shape_comparisons += 1;
    stats.gate_evaluations += GATES_PER_SHAPE_MATCH;
    cross_ratios_match(&a, &b, tau).then_some(pair)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum SampleError {
    #[error("block holds {available} matches, at least 5 are needed")]
    InsufficientPoints { available: usize },
    #[error("no shape-matched pentagon after {trials} trials")]
    NoMatchFound { trials: u32 },
}

/// Draws random quintuples from `block_indices` until one is shape-matched
/// or `trial_count` draws have been spent.
pub fn sample_block_pentagon<R: Rng + ?Sized>(
    ms: &MatchSet,
    block_indices: &[usize],
    source_block: BlockCoord,
    tau: f64,
    trial_count: u32,
    rng: &mut R,
    stats: &mut SamplingStats,
) -> Result<PentagonPair, SampleError> {
    if block_indices.len() < 5 {
        return Err(SampleError::InsufficientPoints {
            available: block_indices.len(),
        });
    }
    for _ in 0..trial_count {
        stats.trials += 1;
        let picked = index::sample(rng, block_indices.len(), 5);
        let mut quintuple = [0usize; 5];
        for (slot, k) in quintuple.iter_mut().zip(picked.iter()) {
            *slot = block_indices[k];
        }
        if let Some(pair) = shape_matched_pair(ms, quintuple, source_block, tau, stats) {
            return Ok(pair);
        }
    }
    Err(SampleError::NoMatchFound {
        trials: trial_count,
    })
}

/// Independent random stream for one block, derived from the master seed.
pub fn block_rng(seed: u64, block: BlockCoord) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((u64::from(block.by) << 32) | u64::from(block.bx));
    rng
}

/// Samples up to `per_block_pentagons` pentagon pairs in every block.
///
/// Blocks run in parallel, each on its own stream, and results are
/// concatenated in row-major block order, so the output does not depend on
/// the number of worker threads.
pub fn sample_all_blocks(
    ms: &MatchSet,
    gp: &GridPartition,
    tau: f64,
    trial_count: u32,
    per_block_pentagons: u32,
    seed: u64,
) -> (Vec<PentagonPair>, SamplingStats) {
    let per_block: Vec<(Vec<PentagonPair>, SamplingStats)> = gp
        .blocks()
        .into_par_iter()
        .map(|(coord, indices)| {
            let mut rng = block_rng(seed, coord);
            let mut stats = SamplingStats::default();
            let mut found = Vec::new();
            for _ in 0..per_block_pentagons {
                match sample_block_pentagon(
                    ms, &indices, coord, tau, trial_count, &mut rng, &mut stats,
                ) {
                    Ok(pair) => found.push(pair),
                    Err(_) => break,
                }
            }
            (found, stats)
        })
        .collect();

    let mut stats = SamplingStats::default();
    let mut pairs = Vec::new();
    for (found, s) in per_block {
        stats.absorb(&s);
        pairs.extend(found);
    }
    (pairs, stats)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn extent(w: u32, h: u32) -> ImageExtent {
        ImageExtent::new(w, h).unwrap()
    }

    fn project(h: &[[f64; 3]; 3], p: Vec2) -> Vec2 {
        let w = h[2][0] * p.x + h[2][1] * p.y + h[2][2];
        Vec2::new(
            (h[0][0] * p.x + h[0][1] * p.y + h[0][2]) / w,
            (h[1][0] * p.x + h[1][1] * p.y + h[1][2]) / w,
        )
    }

    const H: [[f64; 3]; 3] = [
        [0.9, 0.08, 40.0],
        [-0.05, 0.95, 25.0],
        [1.2e-4, -0.8e-4, 1.0],
    ];

    fn plane_block(seed: u64, count: usize) -> MatchSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let matches = (0..count)
            .map(|_| {
                let p1 = Vec2::new(rng.random_range(0.0..300.0), rng.random_range(0.0..300.0));
                Match::new(p1, project(&H, p1))
            })
            .collect();
        MatchSet::new(extent(900, 900), extent(900, 900), matches).unwrap()
    }

    fn random_block(seed: u64, count: usize) -> MatchSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let matches = (0..count)
            .map(|_| {
                Match::new(
                    Vec2::new(rng.random_range(0.0..300.0), rng.random_range(0.0..300.0)),
                    Vec2::new(rng.random_range(0.0..900.0), rng.random_range(0.0..900.0)),
                )
            })
            .collect();
        MatchSet::new(extent(900, 900), extent(900, 900), matches).unwrap()
    }

    fn single(p: (f64, f64)) -> MatchSet {
        let p = Vec2::from(p);
        MatchSet::new(extent(900, 900), extent(900, 900), vec![Match::new(p, p)]).unwrap()
    }

    #[test]
    fn partition_examples() {
        assert_eq!(partition(&single((0.0, 0.0)), 3).block_of(0), BlockCoord::new(0, 0));
        assert_eq!(partition(&single((899.0, 899.0)), 3).block_of(0), BlockCoord::new(2, 2));
        assert_eq!(partition(&single((300.0, 0.0)), 3).block_of(0), BlockCoord::new(1, 0));
        assert_eq!(partition(&single((899.999, 0.0)), 3).block_of(0), BlockCoord::new(2, 0));
    }

    #[test]
    fn match_set_rejects_out_of_bounds() {
        let p = Vec2::new(900.0, 10.0);
        let err = MatchSet::new(extent(900, 900), extent(900, 900), vec![Match::new(p, Vec2::default())])
            .unwrap_err();
        assert!(matches!(err, MatchSetError::OutOfBounds { index: 0, image: 1, .. }));
        assert!(ImageExtent::new(0, 5).is_err());
    }

    #[test]
    fn blocks_are_row_major_and_cover_every_match() {
        let ms = random_block(3, 40);
        let gp = partition(&ms, 4);
        let blocks = gp.blocks();
        assert_eq!(blocks.len(), 16);
        assert_eq!(blocks[1].0, BlockCoord::new(1, 0));
        assert_eq!(blocks[4].0, BlockCoord::new(0, 1));
        let mut all: Vec<usize> = blocks.iter().flat_map(|(_, v)| v.clone()).collect();
        all.sort_unstable();
        assert_eq!(all, (0..40).collect::<Vec<_>>());
    }

    #[test]
    fn four_matches_are_insufficient() {
        let ms = plane_block(1, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = sample_block_pentagon(
            &ms,
            &[0, 1, 2, 3],
            BlockCoord::new(0, 0),
            0.05,
            1000,
            &mut rng,
            &mut SamplingStats::default(),
        );
        assert_eq!(r, Err(SampleError::InsufficientPoints { available: 4 }));
    }

    #[test]
    fn exact_inliers_match_on_first_valid_trial() {
        for seed in 0..20 {
            let ms = plane_block(seed, 30);
            let idx: Vec<usize> = (0..30).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut stats = SamplingStats::default();
            let pair = sample_block_pentagon(
                &ms,
                &idx,
                BlockCoord::new(0, 0),
                0.05,
                1000,
                &mut rng,
                &mut stats,
            )
            .unwrap();
            assert_eq!(stats.trials, stats.degenerate_draws + 1);
            assert_eq!(stats.gate_evaluations, 5);
            for (k, &i) in pair.indices.iter().enumerate() {
                assert_eq!(pair.pent1.vertices()[k], ms.matches()[i].p1);
                assert_eq!(pair.pent2.vertices()[k], ms.matches()[i].p2);
            }
        }
    }

    #[test]
    fn unrelated_pairs_rarely_match() {
        let mut no_match = 0;
        for seed in 0..100 {
            let ms = random_block(1000 + seed, 30);
            let idx: Vec<usize> = (0..30).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let r = sample_block_pentagon(
                &ms,
                &idx,
                BlockCoord::new(0, 0),
                0.05,
                1000,
                &mut rng,
                &mut SamplingStats::default(),
            );
            if matches!(r, Err(SampleError::NoMatchFound { trials: 1000 })) {
                no_match += 1;
            }
        }
        eprintln!("unrelated blocks without a match: {no_match}/100");
        assert!(no_match >= 95, "false accepts in {} of 100 runs", 100 - no_match);
    }

    #[test]
    fn zero_trials_yield_nothing() {
        let ms = plane_block(7, 50);
        let gp = partition(&ms, 1);
        let (pairs, stats) = sample_all_blocks(&ms, &gp, 0.05, 0, 1, 42);
        assert!(pairs.is_empty());
        assert_eq!(stats.trials, 0);
    }

    #[test]
    fn sampling_is_deterministic_and_block_contained() {
        let ms = random_block(9, 200);
        let ms = MatchSet::new(
            ms.extent1(),
            ms.extent2(),
            ms.matches()
                .iter()
                .enumerate()
                .map(|(i, m)| {
                    // Spread image-1 points over the whole image, half on the plane.
                    let p1 = Vec2::new(m.p1.x * 2.9, m.p1.y * 2.9);
                    if i % 2 == 0 {
                        Match::new(p1, project(&H, p1))
                    } else {
                        Match::new(p1, m.p2)
                    }
                })
                .collect(),
        )
        .unwrap();
        let gp = partition(&ms, 3);
        let (a, sa) = sample_all_blocks(&ms, &gp, 0.05, 1000, 2, 5);
        let (b, sb) = sample_all_blocks(&ms, &gp, 0.05, 1000, 2, 5);
        assert_eq!(a, b);
        assert_eq!(sa, sb);
        assert!(!a.is_empty());
        for pair in &a {
            let (x0, y0, x1, y1) = block_rect(ms.extent1(), 3, pair.source_block);
            for v in pair.pent1.vertices() {
                assert!(v.x >= x0 && v.x < x1 && v.y >= y0 && v.y < y1);
            }
        }
        let order: Vec<_> = a.iter().map(|p| (p.source_block.by, p.source_block.bx)).collect();
        assert!(order.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn results_do_not_depend_on_thread_count() {
        let ms = plane_block(11, 120);
        let gp = partition(&ms, 2);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| sample_all_blocks(&ms, &gp, 0.05, 500, 3, 77))
        };
        assert_eq!(run(1), run(4));
    }
}
