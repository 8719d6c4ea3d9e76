use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use subsel::active::{ALConfig, Selector, UncertaintyMethod};
use subsel::dataset::{self, LabeledDataset, SplitSpec};
use subsel::harness::{self, CurveRecord, SweepConfig, SweepMethod};
use subsel::kernel::{cosine_similarity, euclidean_distance, sparsify_knn};
use subsel::optimizer::{farthest_point, greedy_lazy, Budget, Objective};
use subsel::{Error, Result};

#[derive(Parser)]
#[command(
    name = "subsel",
    version,
    about = "Subset selection and active-learning experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic Gaussian-mixture dataset.
    GenSynth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        classes: usize,
        #[arg(long)]
        sep: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Select a budgeted subset of a feature file.
    Select {
        #[arg(long)]
        features: PathBuf,
        #[arg(long, value_enum)]
        objective: ObjectiveArg,
        /// Defaults to cosine for fl and euclidean for dm.
        #[arg(long, value_enum)]
        metric: Option<MetricArg>,
        #[arg(long)]
        budget: usize,
        /// Keep only this many nearest neighbours per row (fl only).
        #[arg(long)]
        knn_sparsify: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// kNN accuracy versus subset size.
    Sweep {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_delimiter = ',', default_value = "fl,dm,random")]
        methods: Vec<String>,
        #[arg(long, default_value_t = 5.0)]
        step: f64,
        #[arg(long, default_value_t = 5)]
        k: usize,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
        seeds: Vec<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Active-learning curves per selector and seed.
    Al {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_delimiter = ',', default_value = "fl,dm,us,random")]
        selectors: Vec<String>,
        #[arg(long, default_value = "entropy")]
        uncertainty: String,
        #[arg(long)]
        batch_pct: f64,
        #[arg(long)]
        beta_pct: f64,
        #[arg(long)]
        rounds: usize,
        #[arg(long, value_delimiter = ',', default_value = "1")]
        seeds: Vec<u64>,
        /// Defaults to max(classes, batch size).
        #[arg(long)]
        initial_seed_size: Option<usize>,
        #[arg(long, default_value_t = 1e-2)]
        l2: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(clap::Args)]
struct DataArgs {
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    #[arg(long)]
    holdout_frac: f64,
    #[arg(long, default_value_t = 0)]
    split_seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum ObjectiveArg {
    Fl,
    Dm,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Cosine,
    Euclidean,
}

fn load_split(args: &DataArgs) -> Result<(LabeledDataset, LabeledDataset)> {
    let features = dataset::load_features(&args.features)?;
    let labels = dataset::load_labels(&args.labels)?;
    let ds = LabeledDataset::new(features, labels)?;
    dataset::split(
        &ds,
        &SplitSpec {
            holdout_fraction: args.holdout_frac,
            seed: args.split_seed,
            stratified: true,
        },
    )
}

fn parse_list<T: std::str::FromStr<Err = Error>>(items: &[String]) -> Result<Vec<T>> {
    items.iter().map(|s| s.trim().parse()).collect()
}

fn print_summary(records: &[CurveRecord]) {
    println!(
        "{:<8} {:>8} {:>10} {:>5}",
        "method", "x", "accuracy", "runs"
    );
    for row in harness::summarize(records) {
        println!(
            "{:<8} {:>8} {:>10.4} {:>5}",
            row.method, row.x, row.mean_accuracy, row.runs
        );
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenSynth {
            out,
            labels,
            n,
            d,
            classes,
            sep,
            seed,
        } => {
            let ds = dataset::gen_synthetic(n, d, classes, sep, seed)?;
            dataset::save_features(ds.features(), &out)?;
            dataset::save_labels(ds.labels(), &labels)?;
        }
        Command::Select {
            features,
            objective,
            metric,
            budget,
            knn_sparsify,
            out,
        } => {
            let m = dataset::load_features(&features)?;
            let rows: Vec<usize> = (0..m.n()).collect();
            let b = Budget::new(budget, m.n())?;
            let selection = match (
                objective,
                metric.unwrap_or(match objective {
                    ObjectiveArg::Fl => MetricArg::Cosine,
                    ObjectiveArg::Dm => MetricArg::Euclidean,
                }),
            ) {
                (ObjectiveArg::Fl, MetricArg::Cosine) => {
                    let mut k = cosine_similarity(&m, &rows)?;
                    if let Some(kappa) = knn_sparsify {
                        k = sparsify_knn(&k, kappa)?;
                    }
                    greedy_lazy(Objective::FacilityLocation(&k), b)?
                }
                (ObjectiveArg::Dm, MetricArg::Euclidean) => {
                    if knn_sparsify.is_some() {
                        return Err(Error::Validation(
                            "--knn-sparsify applies to fl only".into(),
                        ));
                    }
                    let k = euclidean_distance(&m, &rows)?;
                    farthest_point(Objective::DisparityMin(&k), b)?
                }
                (ObjectiveArg::Fl, MetricArg::Euclidean) => {
                    return Err(Error::Validation(
                        "fl needs a similarity metric (cosine)".into(),
                    ))
                }
                (ObjectiveArg::Dm, MetricArg::Cosine) => {
                    return Err(Error::Validation(
                        "dm needs a distance metric (euclidean)".into(),
                    ))
                }
            };
            let text: String = selection.indices.iter().map(|i| format!("{i}\n")).collect();
            fs::write(&out, text).map_err(|e| Error::Io {
                path: out.clone(),
                source: e,
            })?;
            eprintln!(
                "selected {} elements, objective {}",
                selection.indices.len(),
                selection.final_value
            );
        }
        Command::Sweep {
            data,
            methods,
            step,
            k,
            seeds,
            out,
        } => {
            let (train, holdout) = load_split(&data)?;
            let cfg = SweepConfig {
                fractions: SweepConfig::fractions_with_step(step)?,
                methods: parse_list::<SweepMethod>(&methods)?,
                seeds,
                k,
            };
            let records = harness::sweep_goal1(&train, &holdout, &cfg)?;
            harness::emit_csv(&records, &out)?;
            print_summary(&records);
        }
        Command::Al {
            data,
            selectors,
            uncertainty,
            batch_pct,
            beta_pct,
            rounds,
            seeds,
            initial_seed_size,
            l2,
            out,
        } => {
            let (train, holdout) = load_split(&data)?;
            let method: UncertaintyMethod = uncertainty.parse()?;
            let selectors = parse_list::<Selector>(&selectors)?;
            let cfgs: Vec<ALConfig> = selectors
                .iter()
                .flat_map(|&s| {
                    seeds.iter().map(move |&seed| {
                        let mut cfg = ALConfig::new(s, batch_pct, beta_pct, rounds, seed);
                        cfg.method = method;
                        cfg.initial_seed_size = initial_seed_size;
                        cfg.logreg.l2 = l2;
                        cfg
                    })
                })
                .collect();
            let records = harness::run_goal2(&train, &holdout, &cfgs)?;
            harness::emit_csv(&records, &out)?;
            print_summary(&records);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
