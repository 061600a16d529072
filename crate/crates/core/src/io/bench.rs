use std::hint::black_box;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{cross_ratio, Vec2};
use crate::homography::{estimate_homography, Homography};
use crate::matching::ImageExtent;
use crate::synth::{random_homography, Rect};

const BATCH: usize = 1000;
const BENCH_SEED: u64 = 0x5eed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchWorkload {
    /// One cross ratio against one 4-point homography estimate.
    CrossRatioVsHomography,
    /// The cross ratio timed against itself, as a sanity baseline.
    CrossRatioVsSelf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostTable {
    pub workload: BenchWorkload,
    pub iterations: usize,
    pub batches: usize,
    /// Median per-evaluation time of the first kernel, nanoseconds.
    pub a_ns: f64,
    /// Median per-evaluation time of the second kernel, nanoseconds.
    pub b_ns: f64,
    /// `b_ns / a_ns`.
    pub ratio: f64,
}

impl CostTable {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("cost table is plain data") + "\n"
    }
}

struct Instance {
    pts: [Vec2; 5],
    pairs: [(Vec2, Vec2); 4],
}

fn instances(count: usize) -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(BENCH_SEED);
    let region = Rect::new(0.0, 0.0, 1000.0, 1000.0);
    let extent = ImageExtent { width: 2000, height: 2000 };
    let h = random_homography(&mut rng, &region, extent).expect("a generous extent always fits");
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let pts: [Vec2; 5] = std::array::from_fn(|_| {
            Vec2::new(rng.random_range(0.0..1000.0), rng.random_range(0.0..1000.0))
        });
        if cross_ratio(pts[0], pts[1], pts[2], pts[3], pts[4]).is_err() {
            continue;
        }
        let Some(mapped) = pts[..4].iter().map(|&p| h.apply(p)).collect::<Option<Vec<_>>>() else {
            continue;
        };
        let pairs = std::array::from_fn(|k| (pts[k], mapped[k]));
        if estimate_homography(&pairs).is_err() {
            continue;
        }
        out.push(Instance { pts, pairs });
    }
    out
}

fn time_batch(batch: &[Instance], f: impl Fn(&Instance)) -> f64 {
    let start = Instant::now();
    for inst in batch {
        f(inst);
    }
    start.elapsed().as_nanos() as f64 / batch.len() as f64
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let k = v.len() / 2;
    if v.len() % 2 == 1 {
        v[k]
    } else {
        0.5 * (v[k - 1] + v[k])
    }
}

fn run_cr(i: &Instance) {
    let p = black_box(&i.pts);
    let _ = black_box(cross_ratio(p[0], p[1], p[2], p[3], p[4]));
}

fn run_dlt(i: &Instance) {
    let _: Option<Homography> = black_box(estimate_homography(black_box(&i.pairs)).ok());
}

/// Times both kernels of `workload` over `iterations` evaluations each, in
/// interleaved batches of 1000 on identical seeded inputs, and reports the
/// median per-evaluation cost.
pub fn benchmark_costs(iterations: usize, workload: BenchWorkload) -> CostTable {
    let iterations = iterations.max(BATCH);
    let data = instances(iterations);
    let second: fn(&Instance) = match workload {
        BenchWorkload::CrossRatioVsHomography => run_dlt,
        BenchWorkload::CrossRatioVsSelf => run_cr,
    };
    for chunk in data.chunks(BATCH).take(2) {
        time_batch(chunk, run_cr);
        time_batch(chunk, second);
    }
    let mut a = Vec::new();
    let mut b = Vec::new();
    for chunk in data.chunks(BATCH) {
        a.push(time_batch(chunk, run_cr));
        b.push(time_batch(chunk, second));
    }
    let (a_ns, b_ns) = (median(a), median(b));
    CostTable {
        workload,
        iterations,
        batches: data.len().div_ceil(BATCH),
        a_ns,
        b_ns,
        ratio: b_ns / a_ns,
    }
}
