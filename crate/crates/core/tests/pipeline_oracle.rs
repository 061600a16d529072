mod common;

use pentaverify::pipeline::{run, Config, RunStatus};
use pentaverify::synth::{generate, score, SceneSpec};

fn accepted(report: &pentaverify::pipeline::VerificationReport) -> Vec<bool> {
    report.verdicts.iter().map(|v| v.is_correct()).collect()
}

#[test]
fn outliers_alone_find_no_plane() {
    let none = (0..100)
        .filter(|&seed| {
            let scene = generate(&SceneSpec::single_plane(0, 50, 0.0, seed)).unwrap();
            let report = run(&scene.match_set, &Config { seed, ..Config::default() }).unwrap();
            report.status == RunStatus::NoPlaneFound
        })
        .count();
    eprintln!("NoPlaneFound on {none}/100 outlier-only scenes");
    assert!(none >= 95);
}

#[test]
fn noiseless_corner_gives_two_pure_groups() {
    for seed in 0..10 {
        let scene = generate(&SceneSpec::corner(150, 0, 0.0, seed)).unwrap();
        let report = run(&scene.match_set, &Config { seed, ..Config::default() }).unwrap();
        assert_eq!(report.groups.len(), 2, "seed {seed}");
        assert_eq!(common::membership_purity(&report.groups, &scene.labels), 1.0);
        let planes: Vec<_> = report.groups.iter().map(|g| common::group_plane(g, &scene.labels)).collect();
        assert!(planes.contains(&Some(0)) && planes.contains(&Some(1)));
    }
}

#[test]
fn runs_are_reproducible_across_thread_counts() {
    let scene = generate(&SceneSpec::single_plane(200, 200, 0.5, 21)).unwrap();
    let cfg = Config { seed: 77, ..Config::default() };
    let with_threads = |n: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .unwrap()
            .install(|| run(&scene.match_set, &cfg).unwrap().without_timing())
    };
    let one = with_threads(1);
    assert_eq!(one, with_threads(4));
    assert_eq!(one, run(&scene.match_set, &cfg).unwrap().without_timing());
    let other_seed = run(&scene.match_set, &Config { seed: 78, ..cfg }).unwrap().without_timing();
    assert_ne!(one.kept_pentagons, other_seed.kept_pentagons);
}

#[test]
fn single_plane_recovery_meets_recall_and_rejection() {
    let (mut recall, mut rejection) = (0.0, 0.0);
    for seed in 0..20 {
        let scene = generate(&SceneSpec::single_plane(200, 200, 0.5, seed)).unwrap();
        let report = run(&scene.match_set, &Config { seed, ..Config::default() }).unwrap();
        let s = score(&accepted(&report), &scene.labels);
        recall += s.recall / 20.0;
        rejection += s.outlier_rejection / 20.0;
    }
    eprintln!("mean recall {recall:.4}, mean outlier rejection {rejection:.4}");
    assert!(recall >= 0.95 && rejection >= 0.95);
}

#[test]
fn grid_size_does_not_change_counts() {
    let scene = generate(&SceneSpec::single_plane(200, 200, 0.5, 0)).unwrap();
    let counts = |n: u32| {
        let r = run(&scene.match_set, &Config { grid_n: n, ..Config::default() }).unwrap();
        (r.counters.correct_count, r.counters.incorrect_count)
    };
    assert_eq!(counts(3), counts(5));
}

#[test]
fn correct_count_is_stable_in_tau_and_monotone_in_threshold() {
    let mut spec = SceneSpec::single_plane(200, 150, 0.5, 31);
    spec.near_miss_count = 50;
    let scene = generate(&spec).unwrap();
    let correct = |cfg: Config| run(&scene.match_set, &cfg).unwrap().counters.correct_count;
    let base = Config { seed: 31, ..Config::default() };

    let by_tau: Vec<usize> = [0.03, 0.05, 0.07].iter().map(|&t| correct(Config { cr_tau: t, ..base })).collect();
    let reference = by_tau[1] as f64;
    eprintln!("correct count by tau 3/5/7%: {by_tau:?}");
    assert!(by_tau.iter().all(|&c| (c as f64 - reference).abs() / reference < 0.02));

    let by_threshold: Vec<usize> =
        [8.0, 10.0, 12.0].iter().map(|&p| correct(Config { pixel_threshold: p, ..base })).collect();
    eprintln!("correct count by pixel threshold 8/10/12: {by_threshold:?}");
    assert!(by_threshold.windows(2).all(|w| w[0] <= w[1]));
}
