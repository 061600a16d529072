use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rand::Rng;

use pentaverify::io::{
    benchmark_costs, parse_labels, parse_matches, render_report_svg, report_from_json,
    report_to_json, serialize_labels, serialize_matches, BenchWorkload,
};
use pentaverify::pipeline::{run, Config, RunStatus};
use pentaverify::synth::{generate, score, SceneSpec};

const EXIT_INVALID: u8 = 1;
const EXIT_NO_PLANE: u8 = 2;

#[derive(Parser)]
#[command(name = "pentaverify", version, about = "Verify two-view point matches with pentagon cross-ratios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify every match of a match file as correct or incorrect.
    Verify {
        matches: PathBuf,
        #[arg(long, default_value_t = Config::default().grid_n)]
        grid: u32,
        #[arg(long, default_value_t = Config::default().cr_tau)]
        tau: f64,
        #[arg(long, default_value_t = Config::default().trial_count)]
        trials: u32,
        #[arg(long = "pixel-thresh", default_value_t = Config::default().pixel_threshold)]
        pixel_thresh: f64,
        #[arg(long)]
        seed: Option<u64>,
        /// Report destination; printed to stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
        /// Keep the wall-clock time in the report (breaks byte-identical reruns).
        #[arg(long)]
        timing: bool,
    },
    /// Generate a labeled synthetic match file from a JSON scene description.
    Synth {
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        /// Overrides the seed of the scene description.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Time one cross ratio against one 4-point homography estimate.
    Bench {
        #[arg(long, default_value_t = 100_000)]
        iters: usize,
        /// Time the cross ratio against itself instead.
        #[arg(long = "self-check")]
        self_check: bool,
    },
    /// Precision and recall of a report against oracle labels.
    Score {
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        labels: PathBuf,
    },
}

struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

fn seed_or_entropy(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let s = rand::rng().random();
        eprintln!("seed: {s}");
        s
    })
}

fn verify(
    matches: &Path,
    cfg: Config,
    out: Option<&Path>,
    svg: Option<&Path>,
    timing: bool,
) -> Result<RunStatus, Failure> {
    let ms = parse_matches(&read(matches)?)?;
    let mut report = run(&ms, &cfg)?;
    if !timing {
        report = report.without_timing();
    }
    let json = report_to_json(&report);
    match out {
        Some(p) => write(p, &json)?,
        None => print!("{json}"),
    }
    if let Some(p) = svg {
        write(p, &render_report_svg(&ms, &report))?;
    }
    eprintln!(
        "{} matches: {} correct, {} incorrect, {} planar group(s)",
        report.match_count,
        report.counters.correct_count,
        report.counters.incorrect_count,
        report.groups.len()
    );
    Ok(report.status)
}

fn synth(spec: &Path, out: &Path, labels: &Path, seed: Option<u64>) -> Result<(), Failure> {
    let text = read(spec)?;
    let has_seed = serde_json::from_str::<serde_json::Value>(&text)?.get("seed").is_some();
    let mut spec: SceneSpec = serde_json::from_str(&text)?;
    if seed.is_some() || !has_seed {
        spec.seed = seed_or_entropy(seed);
    }
    let scene = generate(&spec)?;
    write(out, &serialize_matches(&scene.match_set))?;
    write(labels, &serialize_labels(&scene.labels))?;
    Ok(())
}

fn score_report(report: &Path, labels: &Path) -> Result<(), Failure> {
    let report = report_from_json(&read(report)?)?;
    let labels = parse_labels(&read(labels)?)?;
    if labels.len() != report.verdicts.len() {
        return Err(Failure(format!(
            "report has {} verdicts but labels file has {} entries",
            report.verdicts.len(),
            labels.len()
        )));
    }
    let accepted: Vec<bool> = report.verdicts.iter().map(|v| v.is_correct()).collect();
    let s = score(&accepted, &labels);
    println!("{}", serde_json::to_string_pretty(&s)?);
    Ok(())
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Verify {
            matches,
            grid,
            tau,
            trials,
            pixel_thresh,
            seed,
            out,
            svg,
            timing,
        } => {
            let cfg = Config {
                grid_n: grid,
                cr_tau: tau,
                trial_count: trials,
                pixel_threshold: pixel_thresh,
                seed: seed_or_entropy(seed),
                ..Config::default()
            };
            verify(&matches, cfg, out.as_deref(), svg.as_deref(), timing).map(|status| match status {
                RunStatus::Ok => ExitCode::SUCCESS,
                RunStatus::NoPlaneFound => ExitCode::from(EXIT_NO_PLANE),
            })
        }
        Command::Synth { spec, out, labels, seed } => {
            synth(&spec, &out, &labels, seed).map(|()| ExitCode::SUCCESS)
        }
        Command::Bench { iters, self_check } => {
            let workload = if self_check {
                BenchWorkload::CrossRatioVsSelf
            } else {
                BenchWorkload::CrossRatioVsHomography
            };
            print!("{}", benchmark_costs(iters, workload).to_json());
            Ok(ExitCode::SUCCESS)
        }
        Command::Score { report, labels } => score_report(&report, &labels).map(|()| ExitCode::SUCCESS),
    };
    result.unwrap_or_else(|Failure(msg)| {
        eprintln!("error: {msg}");
        ExitCode::from(EXIT_INVALID)
    })
}
