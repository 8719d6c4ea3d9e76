//! Experiment drivers producing accuracy curves, and their CSV form.
//!
//! Subset-size sweeps: train kNN on growing subsets of the training pool chosen by
//! Facility-Location, Disparity-Min or uniformly at random.
//! Active-learning comparisons: compare active-learning selectors over paired seeds.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use log::warn;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::active::{run_al, ALConfig};
use crate::dataset::{round_half_up, LabeledDataset};
use crate::error::{Error, Result};
use crate::kernel::{cosine_similarity, euclidean_distance};
use crate::models::{knn_accuracy, KnnConfig};
use crate::optimizer::{farthest_point, greedy_lazy, Budget, Objective};

pub const CSV_HEADER: [&str; 5] = ["method", "seed", "x", "labeled_count", "accuracy"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SweepMethod {
    Fl,
    Dm,
    Random,
}

impl SweepMethod {
    pub fn name(self) -> &'static str {
        match self {
            SweepMethod::Fl => "fl",
            SweepMethod::Dm => "dm",
            SweepMethod::Random => "random",
        }
    }
}

impl fmt::Display for SweepMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fl" => Ok(SweepMethod::Fl),
            "dm" => Ok(SweepMethod::Dm),
            "random" => Ok(SweepMethod::Random),
            other => Err(Error::validation(format!("unknown sweep method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    /// Subset sizes as percentages of the training pool, strictly increasing.
    pub fractions: Vec<f64>,
    pub methods: Vec<SweepMethod>,
    /// Seeds for the random arm.
    pub seeds: Vec<u64>,
    pub k: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            fractions: (1..=20).map(|i| f64::from(i) * 5.0).collect(),
            methods: vec![SweepMethod::Fl, SweepMethod::Dm, SweepMethod::Random],
            seeds: (1..=5).collect(),
            k: 5,
        }
    }
}

impl SweepConfig {
    /// Percentages `step, 2·step, …` up to 100.
    pub fn fractions_with_step(step: f64) -> Result<Vec<f64>> {
        if !(step > 0.0 && step <= 100.0) {
            return Err(Error::validation(format!(
                "step must lie in (0, 100], got {step}"
            )));
        }
        let count = (100.0 / step + 1e-9).floor() as usize;
        Ok((1..=count).map(|i| i as f64 * step).collect())
    }

    fn validate(&self) -> Result<()> {
        if self.fractions.is_empty() {
            return Err(Error::validation("no fractions requested"));
        }
        if self.fractions.iter().any(|&p| !(p > 0.0 && p <= 100.0)) {
            return Err(Error::validation("fractions must lie in (0, 100]"));
        }
        if self.fractions.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::validation("fractions must be strictly increasing"));
        }
        if self.k == 0 {
            return Err(Error::validation("k must be at least 1"));
        }
        if self.methods.contains(&SweepMethod::Random) && self.seeds.is_empty() {
            return Err(Error::validation("the random arm needs at least one seed"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveRecord {
    pub method: String,
    /// Random-arm or active-learning seed; 0 for deterministic methods.
    pub seed: u64,
    /// Data percentage (sweeps) or round number (active learning).
    pub x: f64,
    pub labeled_count: usize,
    pub accuracy: f64,
}

/// Full greedy ordering of the training pool, padded with any elements the
/// optimizer left out (zero-gain stops) in ascending index order.
fn greedy_order(train: &LabeledDataset, method: SweepMethod) -> Result<Vec<usize>> {
    let n = train.len();
    let rows: Vec<usize> = (0..n).collect();
    let budget = Budget::new(n, n)?;
    let mut order = match method {
        SweepMethod::Fl => {
            let k = cosine_similarity(train.features(), &rows)?;
            greedy_lazy(Objective::FacilityLocation(&k), budget)?.indices
        }
        SweepMethod::Dm => {
            let k = euclidean_distance(train.features(), &rows)?;
            farthest_point(Objective::DisparityMin(&k), budget)?.indices
        }
        SweepMethod::Random => unreachable!("random arm has no greedy order"),
    };
    let mut seen = vec![false; n];
    for &i in &order {
        seen[i] = true;
    }
    order.extend((0..n).filter(|&i| !seen[i]));
    Ok(order)
}

fn subset_accuracy(
    train: &LabeledDataset,
    holdout: &LabeledDataset,
    subset: &[usize],
    k: usize,
) -> Result<f64> {
    let sub = train.subset(subset)?;
    let cfg = KnnConfig {
        k: k.min(subset.len()),
    };
    knn_accuracy(&sub, holdout, &cfg)
}

/// Subset-size sweep. Greedy methods use nested prefixes of a single full-length
/// run; the random arm redraws each (fraction, seed) cell.
pub fn sweep_goal1(
    train: &LabeledDataset,
    holdout: &LabeledDataset,
    cfg: &SweepConfig,
) -> Result<Vec<CurveRecord>> {
    cfg.validate()?;
    let n = train.len();
    let budgets: Vec<(usize, f64, usize)> = cfg
        .fractions
        .iter()
        .enumerate()
        .filter_map(|(fi, &p)| {
            let b = round_half_up(p / 100.0 * n as f64).min(n);
            if b == 0 {
                warn!("fraction {p}% of {n} instances rounds to an empty subset; skipped");
                None
            } else {
                Some((fi, p, b))
            }
        })
        .collect();

    let mut records = Vec::new();
    for &method in &cfg.methods {
        match method {
            SweepMethod::Fl | SweepMethod::Dm => {
                let order = greedy_order(train, method)?;
                let cells = budgets
                    .par_iter()
                    .map(|&(_, p, b)| {
                        subset_accuracy(train, holdout, &order[..b], cfg.k).map(|acc| CurveRecord {
                            method: method.name().to_string(),
                            seed: 0,
                            x: p,
                            labeled_count: b,
                            accuracy: acc,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                records.extend(cells);
            }
            SweepMethod::Random => {
                let grid: Vec<(u64, usize, f64, usize)> = cfg
                    .seeds
                    .iter()
                    .flat_map(|&s| budgets.iter().map(move |&(fi, p, b)| (s, fi, p, b)))
                    .collect();
                let cells = grid
                    .par_iter()
                    .map(|&(seed, fi, p, b)| {
                        let mut rng = ChaCha8Rng::seed_from_u64(seed);
                        rng.set_stream(fi as u64 + 1);
                        let subset = rand::seq::index::sample(&mut rng, n, b).into_vec();
                        subset_accuracy(train, holdout, &subset, cfg.k).map(|acc| CurveRecord {
                            method: method.name().to_string(),
                            seed,
                            x: p,
                            labeled_count: b,
                            accuracy: acc,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                records.extend(cells);
            }
        }
    }
    sort_records(&mut records);
    Ok(records)
}

/// Active-learning comparison: one active-learning curve per configuration.
pub fn run_goal2(
    train: &LabeledDataset,
    holdout: &LabeledDataset,
    cfgs: &[ALConfig],
) -> Result<Vec<CurveRecord>> {
    if let Some(first) = cfgs.first() {
        if cfgs.iter().any(|c| c.rounds != first.rounds) {
            return Err(Error::validation(
                "all configurations must share the round count",
            ));
        }
    }
    let curves = cfgs
        .par_iter()
        .map(|cfg| run_al(train, holdout, cfg).map(|curve| (cfg, curve)))
        .collect::<Result<Vec<_>>>()?;
    let mut records: Vec<CurveRecord> = curves
        .into_iter()
        .flat_map(|(cfg, curve)| {
            curve.into_iter().map(move |r| CurveRecord {
                method: cfg.selector.name().to_string(),
                seed: cfg.seed,
                x: r.round as f64,
                labeled_count: r.labeled_count,
                accuracy: r.accuracy,
            })
        })
        .collect();
    sort_records(&mut records);
    Ok(records)
}

pub fn sort_records(records: &mut [CurveRecord]) {
    records.sort_by(|a, b| {
        a.method
            .cmp(&b.method)
            .then(a.seed.cmp(&b.seed))
            .then(a.x.total_cmp(&b.x))
    });
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub method: String,
    pub x: f64,
    pub mean_accuracy: f64,
    pub runs: usize,
}

/// Mean accuracy per `(method, x)` across seeds.
pub fn summarize(records: &[CurveRecord]) -> Vec<SummaryRow> {
    let mut sorted: Vec<&CurveRecord> = records.iter().collect();
    sorted.sort_by(|a, b| {
        a.method
            .cmp(&b.method)
            .then(a.x.total_cmp(&b.x))
            .then(a.seed.cmp(&b.seed))
    });
    let mut rows: Vec<SummaryRow> = Vec::new();
    for r in sorted {
        match rows.last_mut() {
            Some(last) if last.method == r.method && last.x == r.x => {
                last.mean_accuracy += r.accuracy;
                last.runs += 1;
            }
            _ => rows.push(SummaryRow {
                method: r.method.clone(),
                x: r.x,
                mean_accuracy: r.accuracy,
                runs: 1,
            }),
        }
    }
    for row in &mut rows {
        row.mean_accuracy /= row.runs as f64;
    }
    rows
}

/// Serialises records in `(method, seed, x)` order with 6-decimal accuracies.
pub fn records_to_csv(records: &[CurveRecord]) -> Result<Vec<u8>> {
    let mut sorted = records.to_vec();
    sort_records(&mut sorted);
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for r in &sorted {
        w.write_record([
            r.method.clone(),
            r.seed.to_string(),
            r.x.to_string(),
            r.labeled_count.to_string(),
            format!("{:.6}", r.accuracy),
        ])?;
    }
    w.into_inner()
        .map_err(|e| Error::Csv(e.into_error().into()))
}

pub fn emit_csv(records: &[CurveRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, records_to_csv(records)?).map_err(|e| Error::io(path, e))
}

pub fn parse_csv(text: &str) -> Result<Vec<CurveRecord>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        return Err(Error::Parse {
            line: 1,
            message: format!("unexpected header {header:?}"),
        });
    }
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let bad = |field: &str| Error::Parse {
            line,
            message: format!("invalid {field}"),
        };
        if rec.len() != CSV_HEADER.len() {
            return Err(bad("column count"));
        }
        out.push(CurveRecord {
            method: rec[0].to_string(),
            seed: rec[1].parse().map_err(|_| bad("seed"))?,
            x: rec[2].parse().map_err(|_| bad("x"))?,
            labeled_count: rec[3].parse().map_err(|_| bad("labeled_count"))?,
            accuracy: rec[4].parse().map_err(|_| bad("accuracy"))?,
        });
    }
    Ok(out)
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<Vec<CurveRecord>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&text)
}
