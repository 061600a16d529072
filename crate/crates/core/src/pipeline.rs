//! End-to-end verification: sample pentagons per block, discard misplaced
//! ones, merge the rest into planes, fit one homography per plane and
//! classify every match.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::homography::{classify_matches, fit_group_homographies, MatchVerdict};
use crate::matching::{partition, sample_all_blocks, MatchSet, PentagonPair, SamplingStats};
use crate::planar::{build_planar_groups, reject_inconsistent_pentagons, MergeParams, PlanarGroup};

pub const REPORT_SCHEMA: &str = "pentaverify-report/1";

/// Stream id of the merge-stage generator. Block streams pack `(by, bx)`
/// into the id and never reach this value.
const MERGE_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PipelineError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Config {
    pub grid_n: u32,
    pub cr_tau: f64,
    pub trial_count: u32,
    pub per_block_pentagons: u32,
    pub merge_m: u32,
    pub merge_mixes: u32,
    pub second_mixed_pentagon: bool,
    pub pixel_threshold: f64,
    pub seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            grid_n: 3,
            cr_tau: 0.05,
            trial_count: 1000,
            per_block_pentagons: 1,
            merge_m: 3,
            merge_mixes: 5,
            second_mixed_pentagon: true,
            pixel_threshold: 10.0,
            seed: 0,
        }
    }
}

impl Config {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |msg: &str| Err(PipelineError::InvalidInput(msg.to_string()));
        if self.grid_n == 0 {
            return bad("grid_n must be at least 1");
        }
        if !(self.cr_tau > 0.0 && self.cr_tau < 1.0) {
            return bad("cr_tau must lie in (0, 1)");
        }
        if self.trial_count == 0 {
            return bad("trial_count must be at least 1");
        }
        if self.per_block_pentagons == 0 {
            return bad("per_block_pentagons must be at least 1");
        }
        if !(1..=4).contains(&self.merge_m) {
            return bad("merge_m must lie in 1..=4");
        }
        if self.merge_mixes == 0 {
            return bad("merge_mixes must be at least 1");
        }
        if !(self.pixel_threshold > 0.0 && self.pixel_threshold.is_finite()) {
            return bad("pixel_threshold must be positive");
        }
        Ok(())
    }

    pub fn merge_params(&self) -> MergeParams {
        MergeParams {
            tau: self.cr_tau,
            m: self.merge_m as usize,
            mixes: self.merge_mixes,
            second_mixed_pentagon: self.second_mixed_pentagon,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    NoPlaneFound,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupCount {
    pub group_id: usize,
    pub correct: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counters {
    pub correct_count: usize,
    pub incorrect_count: usize,
    pub per_group: Vec<GroupCount>,
    /// Every cross-ratio gate evaluation, sampling and merging combined.
    pub eq3_evaluations: u64,
    pub sampling: SamplingStats,
    pub merging: SamplingStats,
    /// Wall-clock duration of the run in microseconds; left out of
    /// serialized reports unless explicitly kept.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_us: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub schema: String,
    pub config: Config,
    pub status: RunStatus,
    pub match_count: usize,
    /// Pentagon pairs surviving the placement check; group `pentagon_ids`
    /// index into this list.
    pub kept_pentagons: Vec<PentagonPair>,
    pub rejected_pentagons: Vec<PentagonPair>,
    pub groups: Vec<PlanarGroup>,
    pub verdicts: Vec<MatchVerdict>,
    pub counters: Counters,
}

impl VerificationReport {
    /// Drops the wall-clock measurement so that reports are reproducible.
    pub fn without_timing(mut self) -> Self {
        self.counters.wall_time_us = None;
        self
    }
}

/// Runs the whole verification under `cfg`.
pub fn run(ms: &MatchSet, cfg: &Config) -> Result<VerificationReport, PipelineError> {
    cfg.validate()?;
    let start = Instant::now();

    let grid = partition(ms, cfg.grid_n);
    let (pairs, sampling) = sample_all_blocks(
        ms,
        &grid,
        cfg.cr_tau,
        cfg.trial_count,
        cfg.per_block_pentagons,
        cfg.seed,
    );
    let (kept, rejected) = reject_inconsistent_pentagons(pairs);

    let mut merge_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    merge_rng.set_stream(MERGE_STREAM);
    let mut merging = SamplingStats::default();
    let groups = build_planar_groups(ms, &kept, &cfg.merge_params(), &mut merge_rng, &mut merging);
    let groups = fit_group_homographies(groups, ms);

    let verdicts = classify_matches(ms, &groups, cfg.pixel_threshold);
    let correct_count = verdicts.iter().filter(|v| v.is_correct()).count();
    let per_group = groups
        .iter()
        .map(|g| GroupCount {
            group_id: g.id,
            correct: verdicts.iter().filter(|v| v.group_id() == Some(g.id)).count(),
        })
        .collect();
    let status = if groups.is_empty() {
        RunStatus::NoPlaneFound
    } else {
        RunStatus::Ok
    };

    Ok(VerificationReport {
        schema: REPORT_SCHEMA.to_string(),
        config: *cfg,
        status,
        match_count: ms.len(),
        kept_pentagons: kept,
        rejected_pentagons: rejected,
        groups,
        counters: Counters {
            correct_count,
            incorrect_count: verdicts.len() - correct_count,
            per_group,
            eq3_evaluations: sampling.gate_evaluations + merging.gate_evaluations,
            sampling,
            merging,
            wall_time_us: Some(start.elapsed().as_micros() as u64),
        },
        verdicts,
    })
}
