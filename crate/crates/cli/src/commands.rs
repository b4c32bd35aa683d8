use std::fs;
use std::path::Path;

use consolidate_core::consolidation::{explosion_demo, stabilization_factor, PenaltyForm};
use consolidate_core::data::{Corpus, NetworkKind};
use consolidate_core::experiments::{
    run_prune_experiment, run_sequential, sweep_lambda, write_explosion_csv, write_prune_csv, write_runs_csv,
    write_sweep_csv, Corpora, PenaltyMode, PruneConfig, PruneScope, RunConfig,
};
use consolidate_core::importance::ImportanceMethod;
use serde::Serialize;

use crate::args::{Cli, Command, CorpusArg, DemoArgs, FetchArgs, PruneArgs, RunArgs, SweepArgs, TrainArgs};
use crate::config::{echo, effective, DemoConfig, EchoedConfig, SweepConfig};
use crate::{fetch, plot, CliError, Result};

pub fn execute(cli: &Cli) -> Result<()> {
    let g = &cli.global;
    match &cli.command {
        Command::FetchData(a) => fetch_data(&g.data_dir, a),
        Command::TrainSeq(a) => train_seq(cli, a),
        Command::Sweep(a) => sweep(cli, a),
        Command::Prune(a) => prune(cli, a),
        Command::DemoExplosion(a) => demo(cli, a),
        Command::Report(a) => report(a.input.as_deref().unwrap_or(&g.out)),
    }
}

fn jobs(cli: &Cli) -> usize {
    cli.global
        .jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .max(1)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(consolidate_core::Error::from)?;
    fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))
}

fn fetch_data(root: &Path, a: &FetchArgs) -> Result<()> {
    let targets: Vec<(Corpus, &Option<String>, &str)> = [
        (Corpus::Mnist, &a.mnist_mirror, "--mnist-mirror"),
        (Corpus::FashionMnist, &a.fashion_mirror, "--fashion-mirror"),
    ]
    .into_iter()
    .filter(|(c, _, _)| match a.corpus {
        CorpusArg::All => true,
        CorpusArg::Mnist => *c == Corpus::Mnist,
        CorpusArg::FashionMnist => *c == Corpus::FashionMnist,
    })
    .collect();
    for (corpus, mirror, flag) in targets {
        if !a.offline {
            match mirror {
                Some(url) => fetch::fetch_corpus(url, root, corpus)?,
                None => {
                    let paths: Vec<String> = fetch::target_files(root, corpus)
                        .iter()
                        .map(|p| p.display().to_string())
                        .collect();
                    return Err(CliError::Usage(format!(
                        "no mirror for {}: pass {flag} <url>, or place {} and rerun with --offline",
                        corpus.dir_name(),
                        paths.join(", ")
                    )));
                }
            }
        }
        let (train, test) = fetch::validate_corpus(root, corpus, a.any_count)?;
        println!("{}: ok ({train} train, {test} test)", corpus.dir_name());
    }
    Ok(())
}

fn apply_run_args(cfg: &mut RunConfig, a: &RunArgs, seed: Option<u64>) {
    if let Some(net) = a.net {
        cfg.sequence = net.sequence().into();
    }
    if let Some(m) = a.method {
        cfg.method = m;
    }
    if let Some(p) = a.penalty {
        cfg.penalty = p;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
}

fn load_corpora(cli: &Cli, cfg: &RunConfig) -> Result<Corpora> {
    let corpora = cfg.task_sequence()?.corpora();
    Ok(Corpora::load(&cli.global.data_dir, &corpora)?)
}

fn train_seq(cli: &Cli, a: &TrainArgs) -> Result<()> {
    let g = &cli.global;
    let mut cfg: RunConfig = effective(g.config.as_deref(), &g.overrides, |c| match c {
        EchoedConfig::TrainSeq(c) => Some(c),
        _ => None,
    })?;
    apply_run_args(&mut cfg, &a.run, g.seed);
    if let Some(l) = a.lambda {
        cfg.lambda = l;
    }
    if a.verbose {
        cfg.record_checkpoints = true;
    }
    cfg.validate()?;
    echo(&g.out, &EchoedConfig::TrainSeq(cfg.clone()))?;
    let corpora = load_corpora(cli, &cfg)?;
    let states = a.save_states.then(|| g.out.join("checkpoints"));
    let result = run_sequential(&cfg, &corpora, states.as_deref())?;

    write_runs_csv(&g.out.join("runs.csv"), std::slice::from_ref(&result))?;
    write_json(&g.out.join("run.json"), &result)?;
    for (k, acc) in result.per_task_accuracy.iter().enumerate() {
        println!("task {k}: {acc:.4}");
    }
    match result.average_accuracy {
        Some(avg) => println!("average accuracy: {avg:.4}"),
        None => println!("run failed: {:?}", result.status),
    }
    Ok(())
}

/// Log grid `{¼, ½, 1, 2, 4} × λ*` around the best λ known for the method,
/// penalty form and network.
pub fn default_grid(method: ImportanceMethod, penalty: PenaltyMode, net: NetworkKind) -> Option<Vec<f64>> {
    use ImportanceMethod::*;
    let stabilized = penalty == PenaltyMode::Stabilized;
    let center = match (net, method, stabilized) {
        (_, TotalAbsSignal, _) => return None,
        (NetworkKind::Dense, Mas, false) => 4.5,
        (NetworkKind::Dense, Mas, true) => 8.5,
        (NetworkKind::Dense, Si, false) => 0.25,
        (NetworkKind::Dense, Si, true) => 0.64,
        (NetworkKind::Dense, _, false) => 41.0,
        (NetworkKind::Dense, _, true) => 85.0,
        (NetworkKind::Conv, Mas, false) => 300.0,
        (NetworkKind::Conv, Mas, true) => 450.0,
        (NetworkKind::Conv, Si, false) => 24.0,
        (NetworkKind::Conv, Si, true) => 140.0,
        (NetworkKind::Conv, _, false) => 675.0,
        (NetworkKind::Conv, _, true) => 1300.0,
    };
    Some([0.25, 0.5, 1.0, 2.0, 4.0].iter().map(|m| m * center).collect())
}

fn sweep(cli: &Cli, a: &SweepArgs) -> Result<()> {
    let g = &cli.global;
    let mut cfg: SweepConfig = effective(g.config.as_deref(), &g.overrides, |c| match c {
        EchoedConfig::Sweep(c) => Some(c),
        _ => None,
    })?;
    apply_run_args(&mut cfg.base, &a.run, g.seed);
    if let Some(l) = &a.lambdas {
        cfg.lambdas = l.clone();
    }
    if let Some(r) = a.runs {
        cfg.runs = r;
    }
    if a.full_profile {
        cfg.runs = 20;
    }
    if cfg.runs < 2 {
        return Err(CliError::Usage(format!(
            "a sweep needs at least 2 runs per point, got {}",
            cfg.runs
        )));
    }
    if cfg.base.penalty == PenaltyMode::None {
        return Err(CliError::Usage(
            "a λ sweep needs --penalty original or stabilized".into(),
        ));
    }
    if cfg.lambdas.is_empty() {
        let kind = cfg.base.task_sequence()?.network_kind;
        cfg.lambdas = default_grid(cfg.base.method, cfg.base.penalty, kind)
            .ok_or_else(|| CliError::Usage(format!("no default λ grid for {}; pass --lambdas", cfg.base.method)))?;
    }
    cfg.base.validate()?;
    echo(&g.out, &EchoedConfig::Sweep(cfg.clone()))?;
    let corpora = load_corpora(cli, &cfg.base)?;
    let result = sweep_lambda(&cfg.base, &cfg.lambdas, cfg.runs, &corpora, jobs(cli))?;

    let sweep_csv = g.out.join("sweep.csv");
    write_sweep_csv(&sweep_csv, &result, cfg.base.method.as_str(), cfg.base.penalty.as_str())?;
    write_runs_csv(&g.out.join("runs.csv"), &result.runs)?;
    write_json(&g.out.join("sweep.json"), &result)?;
    println!("lambda\tmean\tci\tcompleted\tfailed");
    for p in &result.points {
        let fmt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.4}"));
        println!(
            "{}\t{}\t{}\t{}\t{}",
            p.lambda,
            fmt(p.mean_accuracy),
            fmt(p.ci_halfwidth),
            p.n_runs,
            p.n_failed
        );
    }
    match result.best_lambda {
        Some(l) => println!("best lambda: {l}"),
        None => println!("best lambda: none (every run failed)"),
    }
    if result.points.iter().any(|p| p.is_valid()) {
        println!("wrote {}", plot::render_plots(&sweep_csv)?.display());
    }
    Ok(())
}

fn prune(cli: &Cli, a: &PruneArgs) -> Result<()> {
    let g = &cli.global;
    let mut cfg: PruneConfig = effective(g.config.as_deref(), &g.overrides, |c| match c {
        EchoedConfig::Prune(c) => Some(c),
        _ => None,
    })?;
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    if let Some(n) = a.seeds {
        cfg.n_seeds = n;
    }
    if let Some(f) = &a.fractions {
        cfg.fractions = f.clone();
    }
    if let Some(c) = &a.criteria {
        cfg.criteria = c.clone();
    }
    if a.per_layer {
        cfg.scope = PruneScope::PerLayer;
    }
    cfg.validate()?;
    echo(&g.out, &EchoedConfig::Prune(cfg.clone()))?;
    let corpora = Corpora::load(&g.data_dir, &[Corpus::Mnist])?;
    let report = run_prune_experiment(&cfg, &corpora, jobs(cli))?;

    let prune_csv = g.out.join("prune.csv");
    write_prune_csv(&prune_csv, &report)?;
    write_json(&g.out.join("prune.json"), &report)?;
    print!("fraction");
    for c in &report.curves {
        print!("\t{}", c.criterion);
    }
    println!();
    for (i, f) in cfg.fractions.iter().enumerate() {
        print!("{f}");
        for c in &report.curves {
            print!("\t{:.4}", c.points[i].mean_accuracy);
        }
        println!();
    }
    println!("wrote {}", plot::render_plots(&prune_csv)?.display());
    Ok(())
}

fn demo(cli: &Cli, a: &DemoArgs) -> Result<()> {
    let g = &cli.global;
    let mut cfg: DemoConfig = effective(g.config.as_deref(), &g.overrides, |c| match c {
        EchoedConfig::DemoExplosion(c) => Some(c),
        _ => None,
    })?;
    if let Some(v) = a.alpha {
        cfg.alpha = v;
    }
    if let Some(v) = a.lambda {
        cfg.lambda = v;
    }
    if let Some(v) = a.omega {
        cfg.omega = v;
    }
    if let Some(v) = a.steps {
        cfg.steps = v;
    }
    if !(cfg.alpha > 0.0 && cfg.lambda >= 0.0 && cfg.omega >= 0.0) {
        return Err(CliError::Usage("need alpha > 0, lambda ≥ 0 and omega ≥ 0".into()));
    }
    echo(&g.out, &EchoedConfig::DemoExplosion(cfg.clone()))?;
    let original = explosion_demo(cfg.alpha, cfg.lambda, cfg.omega, cfg.steps, PenaltyForm::Original)?;
    let stabilized = explosion_demo(cfg.alpha, cfg.lambda, cfg.omega, cfg.steps, PenaltyForm::Stabilized)?;

    let product = cfg.alpha * cfg.lambda * cfg.omega;
    println!(
        "alpha*lambda*omega = {product}; stabilization factor = {}",
        stabilization_factor(cfg.alpha, cfg.lambda, cfg.omega)
    );
    println!("step\toriginal\tratio\tstabilized\tratio");
    let ratio = |d: &[f64], i: usize| match i {
        0 => "-".to_string(),
        _ if d[i - 1] == 0.0 => "-".to_string(),
        _ => format!("{:.6}", d[i] / d[i - 1]),
    };
    let n = original.distances.len().max(stabilized.distances.len());
    for i in 0..n {
        let cell = |t: &consolidate_core::consolidation::ExplosionTrajectory| match t.distances.get(i) {
            Some(_) => (format!("{:.6e}", t.distances[i]), ratio(&t.distances, i)),
            None => ("diverged".to_string(), "-".to_string()),
        };
        let (o, or) = cell(&original);
        let (s, sr) = cell(&stabilized);
        println!("{i}\t{o}\t{or}\t{s}\t{sr}");
    }
    if original.diverged {
        println!(
            "original penalty diverged (overflow) after {} steps",
            original.distances.len() - 1
        );
    }
    let csv = g.out.join("explosion.csv");
    write_explosion_csv(&csv, &original, &stabilized)?;
    println!("wrote {}", plot::render_plots(&csv)?.display());
    Ok(())
}

fn report(dir: &Path) -> Result<()> {
    let mut rendered = 0;
    for name in ["sweep.csv", "prune.csv", "explosion.csv"] {
        let path = dir.join(name);
        if path.is_file() {
            println!("wrote {}", plot::render_plots(&path)?.display());
            rendered += 1;
        }
    }
    if rendered == 0 {
        return Err(CliError::Usage(format!(
            "no sweep.csv, prune.csv or explosion.csv in {}",
            dir.display()
        )));
    }
    Ok(())
}
