use consolidate_core::data::synthetic::write_corpus;
use consolidate_core::data::NetworkKind;
use consolidate_core::data::{Corpus, TaskView};
use consolidate_core::experiments::{
    build_network, evaluate, prune_and_eval, run_prune_experiment, run_sequential, sweep_lambda, Corpora, PenaltyMode,
    PruneConfig, PruneCriterion, PruneScope, RunConfig, RunResult, RunStatus,
};
use consolidate_core::importance::ImportanceMethod;

fn corpora() -> (tempfile::TempDir, Corpora) {
    let dir = tempfile::tempdir().unwrap();
    write_corpus(dir.path(), Corpus::Mnist, 600, 300, 7).unwrap();
    let c = Corpora::load(dir.path(), &[Corpus::Mnist]).unwrap();
    (dir, c)
}

/// Five permuted tasks on a net too narrow to hold them all.
fn crowded(penalty: PenaltyMode, lambda: f64, seed: u64) -> RunConfig {
    let mut cfg = RunConfig {
        sequence: "permuted-mnist-5".into(),
        hidden: vec![8],
        method: ImportanceMethod::Mas,
        penalty,
        lambda,
        epochs: 5,
        batch_size: 20,
        seed,
        importance_samples: Some(200),
        record_checkpoints: true,
        ..RunConfig::default()
    };
    cfg.adam.lr = 0.003;
    cfg
}

fn timeless(mut r: RunResult) -> RunResult {
    r.wall_time_secs = 0.0;
    r
}

#[test]
fn identical_config_reproduces_run() {
    let (_d, c) = corpora();
    for method in [
        ImportanceMethod::Mas,
        ImportanceMethod::Si,
        ImportanceMethod::FisherSampled,
    ] {
        let cfg = RunConfig {
            method,
            ..crowded(PenaltyMode::Stabilized, 0.01, 3)
        };
        let a = timeless(run_sequential(&cfg, &c, None).unwrap());
        let b = timeless(run_sequential(&cfg, &c, None).unwrap());
        assert_eq!(a, b, "{method}");
        assert_eq!(a.params_digest.len(), 16);
    }
}

#[test]
fn zero_lambda_equals_no_penalty_bitwise() {
    let (_d, c) = corpora();
    let none = run_sequential(&crowded(PenaltyMode::None, 0.0, 1), &c, None).unwrap();
    for form in [PenaltyMode::Original, PenaltyMode::Stabilized] {
        let zero = run_sequential(&crowded(form, 0.0, 1), &c, None).unwrap();
        assert_eq!(zero.params_digest, none.params_digest);
        assert_eq!(zero.per_task_accuracy, none.per_task_accuracy);
    }
}

#[test]
fn forgetting_is_visible_without_penalty() {
    let (_d, c) = corpora();
    let r = run_sequential(&crowded(PenaltyMode::None, 0.0, 0), &c, None).unwrap();
    let first_right_after = r.checkpoints[0][0];
    let first_at_end = r.per_task_accuracy[0];
    let last = *r.per_task_accuracy.last().unwrap();
    assert!(first_right_after - first_at_end > 0.1, "{:?}", r.checkpoints);
    assert!(last > 0.8, "{last}");
    let mean = r.per_task_accuracy.iter().sum::<f64>() / r.per_task_accuracy.len() as f64;
    assert_eq!(r.average_accuracy, Some(mean));
}

#[test]
fn consolidation_raises_average_accuracy() {
    let (_d, c) = corpora();
    let avg = |penalty, lambda| -> f64 {
        (0..2)
            .map(|s| {
                run_sequential(&crowded(penalty, lambda, s), &c, None)
                    .unwrap()
                    .average_accuracy
                    .unwrap()
            })
            .sum::<f64>()
            / 2.0
    };
    let base = avg(PenaltyMode::None, 0.0);
    let ewc = avg(PenaltyMode::Stabilized, 0.01);
    assert!(ewc > base + 0.03, "ewc {ewc} vs baseline {base}");
}

#[test]
fn overflowing_penalty_marks_run_failed() {
    let (_d, c) = corpora();
    let cfg = RunConfig {
        sequence: "permuted-mnist-2".into(),
        ..crowded(PenaltyMode::Original, 1e308, 0)
    };
    let r = run_sequential(&cfg, &c, None).unwrap();
    assert!(matches!(r.status, RunStatus::Failed { .. }), "{:?}", r.status);
    assert_eq!(r.average_accuracy, None);
    assert!(r.per_task_accuracy.is_empty());
}

#[test]
fn checkpoints_are_written_per_task() {
    let (_d, c) = corpora();
    let out = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        sequence: "permuted-mnist-2".into(),
        ..crowded(PenaltyMode::Stabilized, 0.01, 0)
    };
    run_sequential(&cfg, &c, Some(out.path())).unwrap();
    for k in 0..2 {
        let dir = out.path().join(format!("task-{k}"));
        let (state, fp) = consolidate_core::consolidation::ConsolidatedState::load(&dir).unwrap();
        assert_eq!(state.lambda(), 0.01);
        assert!(fp.starts_with("in:784"));
    }
}

#[test]
fn sweep_aggregates_points_and_failures() {
    let (_d, c) = corpora();
    let base = RunConfig {
        sequence: "permuted-mnist-2".into(),
        epochs: 2,
        ..crowded(PenaltyMode::Original, 0.0, 10)
    };
    let sweep = sweep_lambda(&base, &[0.0, 0.01, 1e308], 2, &c, 2).unwrap();
    assert_eq!(sweep.runs.len(), 6);
    assert_eq!(sweep.runs[1].seed, 11);
    assert_eq!(sweep.runs[3].lambda, 0.01);
    let [p0, p1, p2] = &sweep.points[..] else { panic!() };
    assert!(p0.is_valid() && p1.is_valid());
    assert_eq!((p0.n_runs, p0.n_failed), (2, 0));
    assert!(p0.ci_halfwidth.unwrap() >= 0.0);
    assert!(!p2.is_valid());
    assert_eq!((p2.n_runs, p2.n_failed), (0, 2));
    let best = if p1.mean_accuracy > p0.mean_accuracy { 0.01 } else { 0.0 };
    assert_eq!(sweep.best_lambda, Some(best));

    let serial = sweep_lambda(&base, &[0.0, 0.01, 1e308], 2, &c, 1).unwrap();
    assert_eq!(serial.points, sweep.points);

    assert!(sweep_lambda(&base, &[], 2, &c, 1).is_err());
    assert!(sweep_lambda(&base, &[1.0], 1, &c, 1).is_err());
}

#[test]
fn pruning_endpoints() {
    let (_d, c) = corpora();
    let data = c.get(Corpus::Mnist).unwrap();
    let mut net = build_network(NetworkKind::Dense, &[16], 784).unwrap();
    net.seeded_init(5);
    let test = TaskView::identity(&data.test);
    let scores: Vec<f64> = net.params().iter().map(|w| w.abs()).collect();
    let before = net.params().to_vec();
    let acc = prune_and_eval(&net, &scores, &[0.0, 0.5, 1.0], &test, PruneScope::Global).unwrap();
    assert_eq!(acc[0], evaluate(&net, &test).unwrap());
    assert_eq!(net.params(), &before[..]);
    assert!(acc[2] <= 0.15 + 1e-12, "{acc:?}");
}

#[test]
fn prune_experiment_curves() {
    let (_d, c) = corpora();
    let cfg = PruneConfig {
        n_seeds: 2,
        fractions: vec![0.0, 0.5, 0.8, 1.0],
        hidden: vec![32],
        epochs: 2,
        batch_size: 20,
        importance_samples: Some(200),
        ..PruneConfig::default()
    };
    let report = run_prune_experiment(&cfg, &c, 2).unwrap();
    assert_eq!(report.curves.len(), 5);
    let unpruned = report.unpruned_accuracy.iter().sum::<f64>() / 2.0;
    for curve in &report.curves {
        let p0 = curve.at(0.0).unwrap();
        assert!((p0.mean_accuracy - unpruned).abs() < 1e-12, "{}", curve.criterion);
        assert_eq!(p0.n_runs, 2);
        assert!(curve.at(1.0).unwrap().mean_accuracy <= 0.15 + 1e-12);
    }
    let again = run_prune_experiment(&cfg, &c, 1).unwrap();
    assert_eq!(again.curves, report.curves);
    assert!(report
        .curves
        .iter()
        .any(|c| c.criterion == PruneCriterion::TotalAbsSignal));
}
