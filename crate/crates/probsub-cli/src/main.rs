//! Command-line surface: dataset generation, training, prediction,
//! evaluation, the cone coverage experiment, and the constraint-generation
//! benchmark.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use probsub::cone::{cone_experiment, ConeConfig, NonnegativeFamily};
use probsub::constraints::{ConstraintRegime, ScheduleConfig};
use probsub::io;
use probsub::loss::LossKind;
use probsub::model::{GraphInstance, LabelSet};
use probsub::synth;
use probsub::train::{
    evaluate, predict, train, train_with_progress, MetricKind, TrainConfig, TrainTrace,
};

#[derive(Parser)]
#[command(name = "probsub", version, about = "Pairwise CRF training with submodularity constraint regimes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum GenTarget {
    Prop1,
    Grid,
    Multilabel,
}

#[derive(Clone, Copy, ValueEnum)]
enum RegimeArg {
    C0,
    C1,
    C2,
    C3,
    C4,
    C4t,
}

impl From<RegimeArg> for ConstraintRegime {
    fn from(r: RegimeArg) -> Self {
        match r {
            RegimeArg::C0 => ConstraintRegime::C0,
            RegimeArg::C1 => ConstraintRegime::C1,
            RegimeArg::C2 => ConstraintRegime::C2,
            RegimeArg::C3 => ConstraintRegime::C3,
            RegimeArg::C4 => ConstraintRegime::C4,
            RegimeArg::C4t => ConstraintRegime::C4Transductive,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum LossArg {
    Hamming,
    Classavg,
}

impl From<LossArg> for LossKind {
    fn from(l: LossArg) -> Self {
        match l {
            LossArg::Hamming => LossKind::Hamming,
            LossArg::Classavg => LossKind::PerClassAverage,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset into a directory.
    Gen {
        #[arg(value_enum)]
        target: GenTarget,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        /// Grid side length (grid only).
        #[arg(long, default_value_t = 4)]
        side: usize,
        /// Unary feature noise (grid only).
        #[arg(long, default_value_t = 0.25)]
        noise: f64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long = "n-train")]
        n_train: Option<usize>,
        #[arg(long = "n-test")]
        n_test: Option<usize>,
    },
    /// Train a model on the `train_*.crfgraph` files of a directory.
    Train {
        #[arg(long, value_name = "DIR")]
        data: PathBuf,
        #[arg(long, value_enum)]
        regime: RegimeArg,
        #[arg(long = "C", value_name = "F")]
        c: f64,
        #[arg(long, value_enum, default_value = "hamming")]
        loss: LossArg,
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
        #[arg(long = "max-iter", default_value_t = 5000)]
        max_iter: usize,
        /// Maintain margin lower bounds across weight updates (default).
        #[arg(long, conflicts_with = "full")]
        delayed: bool,
        /// Recompute every constraint margin after each weight update.
        #[arg(long)]
        full: bool,
        /// Two-stage learning: converge without hard constraints first.
        #[arg(long)]
        pretrain: bool,
        /// Hard constraints admitted per w-update round.
        #[arg(long, default_value_t = 1, value_name = "N")]
        minibatch: usize,
        #[arg(long, value_name = "FILE")]
        model: PathBuf,
        #[arg(long, value_name = "FILE")]
        trace: Option<PathBuf>,
        /// Print a progress line per outer iteration.
        #[arg(long)]
        verbose: bool,
    },
    /// Predict labelings for the graphs in a directory.
    Predict {
        #[arg(long, value_name = "FILE")]
        model: PathBuf,
        #[arg(long, value_name = "DIR")]
        data: PathBuf,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
    /// Compare predictions against ground truth.
    Eval {
        #[arg(long, value_name = "FILE")]
        model: PathBuf,
        #[arg(long, value_name = "DIR")]
        data: PathBuf,
        /// Comma-separated subset of hamming,classavg,iou,voc.
        #[arg(long, value_delimiter = ',')]
        metrics: Vec<String>,
        #[arg(long, value_name = "FILE")]
        report: Option<PathBuf>,
    },
    /// Conic-hull coverage experiment over nonnegative samples.
    Cone {
        #[arg(long, value_name = "N")]
        dim: usize,
        /// Comma-separated training-set sizes.
        #[arg(long, value_delimiter = ',', required = true)]
        ns: Vec<usize>,
        #[arg(long, value_name = "N")]
        ntest: usize,
        #[arg(long, value_name = "N")]
        trials: usize,
        #[arg(long, value_name = "N", default_value_t = 1)]
        seed: u64,
        #[arg(long, value_name = "FILE")]
        report: Option<PathBuf>,
    },
    /// Train twice (delayed and full margin maintenance) and compare work.
    BenchConstraints {
        #[arg(long, value_name = "DIR")]
        data: PathBuf,
        #[arg(long = "C", value_name = "F")]
        c: f64,
    },
}

fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("PROBSUB_THREADS") {
        let n: usize = v
            .parse()
            .with_context(|| format!("PROBSUB_THREADS must be an integer, got '{v}'"))?;
        if n > 0 {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .context("rayon thread pool")?;
        }
    }
    Ok(())
}

fn write_dataset(dir: &Path, ds: &synth::Dataset) -> Result<usize> {
    std::fs::create_dir_all(dir)?;
    let mut written = 0;
    for x in ds.train.iter().chain(&ds.test) {
        io::write_graph_file(&dir.join(format!("{}.crfgraph", x.id())), x, &ds.labels)?;
        written += 1;
    }
    Ok(written)
}

fn load_split(dir: &Path, prefix: &str) -> Result<(LabelSet, Vec<GraphInstance>)> {
    let mut graphs = io::load_graph_dir(dir, prefix)?;
    if graphs.is_empty() && !prefix.is_empty() {
        graphs = io::load_graph_dir(dir, "")?;
    }
    if graphs.is_empty() {
        bail!("no .crfgraph files found in {}", dir.display());
    }
    let labels = graphs[0].1.labels;
    Ok((labels, graphs.into_iter().map(|(_, g)| g.instance).collect()))
}

fn parse_metrics(names: &[String], labels: usize) -> Result<Vec<MetricKind>> {
    if names.is_empty() {
        let mut m = vec![MetricKind::HammingAccuracy, MetricKind::ClassAvgAccuracy];
        if labels == 2 {
            m.push(MetricKind::Iou);
            m.push(MetricKind::Voc);
        }
        return Ok(m);
    }
    names
        .iter()
        .map(|n| MetricKind::parse(n).map_err(Into::into))
        .collect()
}

fn run_training(
    data: &Path,
    regime: ConstraintRegime,
    config: &TrainConfig,
    verbose: bool,
) -> Result<(probsub::WeightVector, TrainTrace)> {
    let (labels, instances) = load_split(data, "train")?;
    let extra = if regime.is_transductive() {
        let test = io::load_graph_dir(data, "test")?;
        Some(
            test.into_iter()
                .map(|(_, g)| g.instance)
                .collect::<Vec<_>>(),
        )
    } else {
        None
    };
    let extra_slice = extra.as_deref().filter(|e| !e.is_empty());
    let result = if verbose {
        train_with_progress(&labels, &instances, config, extra_slice, |row| {
            eprintln!(
                "iter {:4}  objective {:.6e}  xi {:.4e}  violation {:.4e}  hard+{}  margins {}",
                row.iteration,
                row.objective,
                row.xi,
                row.violation,
                row.hard_added,
                row.margins_refreshed
            );
        })?
    } else {
        train(&labels, &instances, config, extra_slice)?
    };
    Ok(result)
}

fn write_trace(path: &Path, trace: &TrainTrace) -> Result<()> {
    let rows: Vec<Vec<String>> = trace
        .rows
        .iter()
        .map(|r| {
            vec![
                r.iteration.to_string(),
                format!("{}", r.objective),
                format!("{}", r.xi),
                format!("{}", r.violation),
                r.hard_added.to_string(),
                r.margins_refreshed.to_string(),
                format!("{}", r.delta_w_norm),
                format!("{:.3}", r.wall_ms),
            ]
        })
        .collect();
    io::write_report(
        path,
        &[
            "iteration",
            "objective",
            "xi",
            "violation",
            "hard_added",
            "margins_refreshed",
            "delta_w_norm",
            "wall_ms",
        ],
        &rows,
    )?;
    Ok(())
}

fn main() -> Result<()> {
    init_threads()?;
    let cli = Cli::parse();
    match cli.command {
        Command::Gen {
            target,
            out,
            side,
            noise,
            seed,
            n_train,
            n_test,
        } => {
            let written = match target {
                GenTarget::Prop1 => write_dataset(&out, &synth::gen_prop1())?,
                GenTarget::Grid => {
                    let mut config = synth::GridConfig {
                        side,
                        noise,
                        seed,
                        ..Default::default()
                    };
                    if let Some(n) = n_train {
                        config.n_train = n;
                    }
                    if let Some(n) = n_test {
                        config.n_test = n;
                    }
                    write_dataset(&out, &synth::gen_grid_segmentation(&config))?
                }
                GenTarget::Multilabel => {
                    let mut config = synth::MultiLabelGenConfig {
                        seed,
                        ..Default::default()
                    };
                    if let Some(n) = n_train {
                        config.n_train = n;
                    }
                    if let Some(n) = n_test {
                        config.n_test = n;
                    }
                    let data = synth::gen_multilabel(&config)?;
                    std::fs::create_dir_all(&out)?;
                    let floats = |rows: &[Vec<f64>]| -> Vec<Vec<String>> {
                        rows.iter()
                            .map(|r| r.iter().map(|v| format!("{v}")).collect())
                            .collect()
                    };
                    let ints = |rows: &[Vec<usize>]| -> Vec<Vec<String>> {
                        rows.iter()
                            .map(|r| r.iter().map(|v| v.to_string()).collect())
                            .collect()
                    };
                    let attr_names: Vec<String> =
                        (0..config.attribute_dim).map(|i| format!("a{i}")).collect();
                    let attr_header: Vec<&str> = attr_names.iter().map(|s| s.as_str()).collect();
                    let class_names: Vec<String> =
                        (0..config.classes).map(|i| format!("c{i}")).collect();
                    let class_header: Vec<&str> = class_names.iter().map(|s| s.as_str()).collect();
                    io::write_report(
                        &out.join("train_attributes.tsv"),
                        &attr_header,
                        &floats(&data.train_attributes),
                    )?;
                    io::write_report(
                        &out.join("test_attributes.tsv"),
                        &attr_header,
                        &floats(&data.test_attributes),
                    )?;
                    io::write_report(
                        &out.join("train_labels.tsv"),
                        &class_header,
                        &ints(&data.train_indicators),
                    )?;
                    io::write_report(
                        &out.join("test_labels.tsv"),
                        &class_header,
                        &ints(&data.test_indicators),
                    )?;
                    write_dataset(&out, &data.dataset)?
                }
            };
            println!("wrote {written} graphs to {}", out.display());
        }
        Command::Train {
            data,
            regime,
            c,
            loss,
            tol,
            max_iter,
            delayed: _,
            full,
            pretrain,
            minibatch,
            model,
            trace,
            verbose,
        } => {
            let regime: ConstraintRegime = regime.into();
            let config = TrainConfig {
                regime,
                c,
                relative_gap_tol: tol,
                max_outer_iterations: max_iter,
                loss: loss.into(),
                schedule: ScheduleConfig {
                    pretrain,
                    minibatch_size: Some(minibatch),
                    delayed: !full,
                },
                seed: 0,
            };
            let (w, t) = run_training(&data, regime, &config, verbose)?;
            io::write_model_file(&model, &w, regime)?;
            if let Some(path) = trace {
                write_trace(&path, &t)?;
            }
            let last = t.rows.last();
            println!(
                "status {:?}  iterations {}  objective {:.6e}  hard constraints {}  margins computed {}  wall {:.2}s",
                t.status,
                t.iterations,
                last.map_or(0.0, |r| r.objective),
                t.hard_constraints,
                t.margins_computed,
                t.wall_s
            );
            println!("model written to {}", model.display());
        }
        Command::Predict { model, data, out } => {
            let (w, _) = io::read_model_file(&model)?;
            let (labels, instances) = load_split(&data, "test")?;
            std::fs::create_dir_all(&out)?;
            let mut rows = Vec::new();
            for x in &instances {
                let report = predict(&w, x)?;
                let labeled = x.clone().with_ground_truth(report.labeling.clone())?;
                io::write_graph_file(
                    &out.join(format!("{}.crfgraph", x.id())),
                    &labeled,
                    &labels,
                )?;
                rows.push(vec![
                    x.id().to_string(),
                    format!("{}", report.objective),
                    report.truncated_edge_count.to_string(),
                    format!("{}", report.truncated_fraction),
                    report.exact.to_string(),
                ]);
            }
            io::write_report(
                &out.join("predictions.tsv"),
                &["instance", "objective", "truncated", "truncated_fraction", "exact"],
                &rows,
            )?;
            println!(
                "predicted {} graphs into {}",
                instances.len(),
                out.display()
            );
        }
        Command::Eval {
            model,
            data,
            metrics,
            report,
        } => {
            let (w, _) = io::read_model_file(&model)?;
            let (labels, instances) = load_split(&data, "test")?;
            let kinds = parse_metrics(&metrics, labels.count())?;
            let result = evaluate(&w, &instances, &kinds)?;
            let mut header = vec!["instance"];
            header.extend(kinds.iter().map(|k| k.as_str()));
            let mut rows: Vec<Vec<String>> = result
                .rows
                .iter()
                .map(|r| {
                    let mut row = vec![r.id.clone()];
                    row.extend(r.values.iter().map(|v| format!("{v}")));
                    row
                })
                .collect();
            let mut mean_row = vec!["mean".to_string()];
            mean_row.extend(result.mean.iter().map(|v| format!("{v}")));
            rows.push(mean_row);
            println!("{}", header.join("\t"));
            for row in &rows {
                println!("{}", row.join("\t"));
            }
            if let Some(path) = report {
                io::write_report(&path, &header, &rows)?;
            }
        }
        Command::Cone {
            dim,
            ns,
            ntest,
            trials,
            seed,
            report,
        } => {
            let result = cone_experiment(&ConeConfig {
                dim,
                ns,
                n_test: ntest,
                trials,
                seed,
                family: NonnegativeFamily::UnitCube,
            })?;
            let header = ["n", "outside_fraction", "std_error", "trials", "ntest"];
            let rows: Vec<Vec<String>> = result
                .rows
                .iter()
                .map(|r| {
                    vec![
                        r.n.to_string(),
                        format!("{}", r.outside_fraction),
                        format!("{}", r.std_error),
                        trials.to_string(),
                        ntest.to_string(),
                    ]
                })
                .collect();
            println!("{}", header.join("\t"));
            for row in &rows {
                println!("{}", row.join("\t"));
            }
            if let Some(path) = report {
                io::write_report(&path, &header, &rows)?;
            }
        }
        Command::BenchConstraints { data, c } => {
            let mut results = Vec::new();
            for (name, delayed) in [("delayed", true), ("full", false)] {
                let config = TrainConfig {
                    regime: ConstraintRegime::C4,
                    c,
                    relative_gap_tol: 1e-3,
                    max_outer_iterations: 5000,
                    loss: LossKind::Hamming,
                    schedule: ScheduleConfig {
                        pretrain: false,
                        minibatch_size: Some(1),
                        delayed,
                    },
                    seed: 0,
                };
                let (w, t) = run_training(&data, ConstraintRegime::C4, &config, false)?;
                results.push((name, w, t));
            }
            println!("method\tmargins_computed\tssvm_iterations\tconstraints_added\twall_s");
            for (name, _, t) in &results {
                println!(
                    "{name}\t{}\t{}\t{}\t{:.3}",
                    t.margins_computed, t.iterations, t.hard_constraints, t.wall_s
                );
            }
            let (delayed_m, full_m) =
                (results[0].2.margins_computed, results[1].2.margins_computed);
            let max_coord_diff = results[0]
                .1
                .as_slice()
                .iter()
                .zip(results[1].1.as_slice())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            println!(
                "# delayed/full margin ratio: {:.3}  max coordinate difference: {:.3e}",
                full_m as f64 / delayed_m.max(1) as f64,
                max_coord_diff
            );
        }
    }
    Ok(())
}
