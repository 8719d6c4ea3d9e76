//! Mini-batch active learning: score the unlabeled pool by uncertainty, keep
//! the most uncertain β% (plus exact ties) as a ground set, then pick a batch
//! from it with a subset-selection objective.

use std::fmt;
use std::str::FromStr;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dataset::{FeatureMatrix, LabeledDataset};
use crate::error::{Error, Result};
use crate::kernel::{cosine_similarity, euclidean_distance};
use crate::models::{logreg_fit, LogRegParams, ProbabilityVector};
use crate::optimizer::{farthest_point, greedy_lazy, Budget, Objective};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum UncertaintyMethod {
    LeastConfidence,
    Margin,
    #[default]
    Entropy,
}

impl FromStr for UncertaintyMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lc" | "least_confidence" => Ok(Self::LeastConfidence),
            "margin" => Ok(Self::Margin),
            "entropy" => Ok(Self::Entropy),
            other => Err(Error::validation(format!(
                "unknown uncertainty method {other:?}"
            ))),
        }
    }
}

pub fn uncertainty(p: &ProbabilityVector, method: UncertaintyMethod) -> Result<f64> {
    let p = p.as_slice();
    if p.len() < 2 {
        return Err(Error::validation(format!(
            "uncertainty needs at least two classes, got {}",
            p.len()
        )));
    }
    Ok(match method {
        UncertaintyMethod::LeastConfidence => 1.0 - p.iter().copied().fold(0.0, f64::max),
        UncertaintyMethod::Margin => {
            let top = (0..p.len()).fold(0, |b, i| if p[i] > p[b] { i } else { b });
            let second = (0..p.len())
                .filter(|&i| i != top)
                .map(|i| p[i])
                .fold(0.0, f64::max);
            1.0 - (p[top] - second)
        }
        UncertaintyMethod::Entropy => -p
            .iter()
            .filter(|&&x| x > 0.0)
            .map(|&x| x * x.log2())
            .sum::<f64>(),
    })
}

/// Pool elements ordered by descending uncertainty.
#[derive(Debug, Clone, PartialEq)]
pub struct FilteredSet {
    pub members: Vec<usize>,
    /// Uncertainty of each member, aligned with `members`.
    pub scores: Vec<f64>,
    /// Uncertainty of the last member.
    pub cutoff_value: f64,
}

impl FilteredSet {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// `ceil(percent/100 · total)`, tolerant of representation error in `percent`.
pub(crate) fn percent_count(percent: f64, total: usize) -> usize {
    let exact = percent * total as f64 / 100.0;
    (exact - 1e-9).ceil().max(0.0) as usize
}

/// Keeps `ceil(β/100·|U|)` elements by descending score (ties by lower pool
/// index), then every further element whose score equals the last kept one.
pub fn filter_by_scores(pool: &[usize], scores: &[f64], beta_percent: f64) -> Result<FilteredSet> {
    if pool.is_empty() {
        return Err(Error::validation("unlabeled pool is empty"));
    }
    if pool.len() != scores.len() {
        return Err(Error::validation(format!(
            "{} scores for a pool of {}",
            scores.len(),
            pool.len()
        )));
    }
    if !(beta_percent > 0.0 && beta_percent <= 100.0) {
        return Err(Error::validation(format!(
            "beta percent must lie in (0, 100], got {beta_percent}"
        )));
    }
    let mut order: Vec<usize> = (0..pool.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(pool[a].cmp(&pool[b])));

    let base = percent_count(beta_percent, pool.len()).clamp(1, pool.len());
    let cutoff_value = scores[order[base - 1]];
    let keep = base
        + order[base..]
            .iter()
            .take_while(|&&i| scores[i] == cutoff_value)
            .count();
    let kept = &order[..keep];
    Ok(FilteredSet {
        members: kept.iter().map(|&i| pool[i]).collect(),
        scores: kept.iter().map(|&i| scores[i]).collect(),
        cutoff_value,
    })
}

/// Uncertainty filter over the unlabeled pool. `probs[i]` belongs to `pool[i]`.
pub fn filter_uncertain(
    probs: &[ProbabilityVector],
    pool: &[usize],
    beta_percent: f64,
    method: UncertaintyMethod,
) -> Result<FilteredSet> {
    let scores = probs
        .iter()
        .map(|p| uncertainty(p, method))
        .collect::<Result<Vec<_>>>()?;
    filter_by_scores(pool, &scores, beta_percent)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Selector {
    Fl,
    Dm,
    Us,
    Random,
}

impl Selector {
    pub fn name(self) -> &'static str {
        match self {
            Selector::Fl => "fl",
            Selector::Dm => "dm",
            Selector::Us => "us",
            Selector::Random => "random",
        }
    }
}

impl fmt::Display for Selector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Selector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fl" => Ok(Selector::Fl),
            "dm" => Ok(Selector::Dm),
            "us" => Ok(Selector::Us),
            "random" => Ok(Selector::Random),
            other => Err(Error::validation(format!("unknown selector {other:?}"))),
        }
    }
}

/// Picks at most `batch` elements of `filtered`. `features` rows are indexed by
/// the pool indices stored in `filtered`.
pub fn select_batch(
    filtered: &FilteredSet,
    features: &FeatureMatrix,
    selector: Selector,
    batch: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<usize>> {
    if batch == 0 {
        return Err(Error::validation("batch size must be at least 1"));
    }
    let f = &filtered.members;
    if f.len() <= batch {
        return Ok(f.clone());
    }
    let budget = Budget::new(batch, f.len())?;
    let local = match selector {
        Selector::Fl => {
            let k = cosine_similarity(features, f)?;
            greedy_lazy(Objective::FacilityLocation(&k), budget)?.indices
        }
        Selector::Dm => {
            let k = euclidean_distance(features, f)?;
            farthest_point(Objective::DisparityMin(&k), budget)?.indices
        }
        Selector::Us => (0..batch).collect(),
        Selector::Random => rand::seq::index::sample(rng, f.len(), batch).into_vec(),
    };
    Ok(local.into_iter().map(|i| f[i]).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ALConfig {
    /// Batch size as a percentage of the full training pool.
    pub batch_percent: f64,
    /// Filter size as a percentage of the current unlabeled pool.
    pub beta_percent: f64,
    pub rounds: usize,
    pub selector: Selector,
    pub method: UncertaintyMethod,
    pub seed: u64,
    /// Defaults to `max(C, batch)`.
    pub initial_seed_size: Option<usize>,
    pub logreg: LogRegParams,
}

impl ALConfig {
    pub fn new(
        selector: Selector,
        batch_percent: f64,
        beta_percent: f64,
        rounds: usize,
        seed: u64,
    ) -> Self {
        Self {
            batch_percent,
            beta_percent,
            rounds,
            selector,
            method: UncertaintyMethod::default(),
            seed,
            initial_seed_size: None,
            logreg: LogRegParams::default(),
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.batch_percent > 0.0 && self.batch_percent <= 100.0) {
            return Err(Error::validation(format!(
                "batch percent must lie in (0, 100], got {}",
                self.batch_percent
            )));
        }
        if !(self.beta_percent > 0.0 && self.beta_percent <= 100.0) {
            return Err(Error::validation(format!(
                "beta percent must lie in (0, 100], got {}",
                self.beta_percent
            )));
        }
        if self.rounds == 0 {
            return Err(Error::validation("at least one round is required"));
        }
        Ok(())
    }

    /// Absolute batch size for a training pool of `pool_size` instances.
    pub fn batch_size(&self, pool_size: usize) -> usize {
        percent_count(self.batch_percent, pool_size).max(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundRecord {
    /// 1-based round number.
    pub round: usize,
    pub labeled_count: usize,
    pub accuracy: f64,
}

/// Labeled/unlabeled partition of the training pool. Both index lists are
/// kept in ascending order.
#[derive(Debug, Clone, PartialEq)]
pub struct ALState {
    pub labeled: Vec<usize>,
    pub unlabeled: Vec<usize>,
    pub round: usize,
    pub history: Vec<RoundRecord>,
}

impl ALState {
    pub fn new(pool_size: usize, mut labeled: Vec<usize>) -> Result<Self> {
        labeled.sort_unstable();
        labeled.dedup();
        if labeled.last().is_some_and(|&l| l >= pool_size) {
            return Err(Error::validation("labeled index outside the training pool"));
        }
        let mut is_labeled = vec![false; pool_size];
        for &i in &labeled {
            is_labeled[i] = true;
        }
        let unlabeled = (0..pool_size).filter(|&i| !is_labeled[i]).collect();
        Ok(Self {
            labeled,
            unlabeled,
            round: 0,
            history: Vec::new(),
        })
    }

    fn label(&mut self, batch: &[usize]) {
        let mut chosen = vec![false; self.labeled.len() + self.unlabeled.len()];
        for &i in batch {
            chosen[i] = true;
        }
        self.unlabeled.retain(|&i| !chosen[i]);
        self.labeled.extend_from_slice(batch);
        self.labeled.sort_unstable();
    }
}

fn evaluate(
    state: &ALState,
    ds: &LabeledDataset,
    holdout: &LabeledDataset,
    cfg: &ALConfig,
) -> Result<(crate::models::LogRegModel, f64)> {
    let labeled = ds.subset(&state.labeled)?;
    let model = logreg_fit(&labeled, &cfg.logreg)?;
    let acc = model.accuracy(holdout)?;
    Ok((model, acc))
}

/// One round: fit on `L`, record holdout accuracy, then filter and select a
/// batch from `U` and move it into `L`.
pub fn fass_round(
    mut state: ALState,
    ds: &LabeledDataset,
    holdout: &LabeledDataset,
    cfg: &ALConfig,
    rng: &mut ChaCha8Rng,
) -> Result<ALState> {
    let round = state.round + 1;
    let wrap = |e: Error| Error::Round {
        round,
        source: Box::new(e),
    };
    if state.unlabeled.is_empty() {
        return Err(wrap(Error::validation("unlabeled pool is empty")));
    }

    let (model, acc) = evaluate(&state, ds, holdout, cfg).map_err(wrap)?;
    state.history.push(RoundRecord {
        round,
        labeled_count: state.labeled.len(),
        accuracy: acc,
    });

    let probs = state
        .unlabeled
        .par_iter()
        .map(|&i| model.predict_proba(ds.features().row(i)))
        .collect::<Result<Vec<_>>>()
        .map_err(wrap)?;
    let filtered =
        filter_uncertain(&probs, &state.unlabeled, cfg.beta_percent, cfg.method).map_err(wrap)?;
    let batch = cfg.batch_size(ds.len()).min(state.unlabeled.len());
    let chosen = select_batch(&filtered, ds.features(), cfg.selector, batch, rng).map_err(wrap)?;

    state.label(&chosen);
    state.round = round;
    Ok(state)
}

/// Stratified random seed set: one instance per class, the rest uniformly from
/// what remains.
pub fn initial_seed_set(
    ds: &LabeledDataset,
    size: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<usize>> {
    let c = ds.num_classes();
    if size < c {
        return Err(Error::validation(format!(
            "initial seed set of {size} cannot cover {c} classes"
        )));
    }
    if size > ds.len() {
        return Err(Error::validation(format!(
            "initial seed set of {size} exceeds the training pool of {}",
            ds.len()
        )));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); c];
    for (i, &l) in ds.labels().as_slice().iter().enumerate() {
        by_class[l].push(i);
    }
    let mut taken = vec![false; ds.len()];
    let mut seed = Vec::with_capacity(size);
    for (class, members) in by_class.iter().enumerate() {
        let &pick = members
            .choose(rng)
            .ok_or_else(|| Error::validation(format!("class {class} absent from training pool")))?;
        taken[pick] = true;
        seed.push(pick);
    }
    let mut rest: Vec<usize> = (0..ds.len()).filter(|&i| !taken[i]).collect();
    rest.shuffle(rng);
    seed.extend_from_slice(&rest[..size - c]);
    seed.sort_unstable();
    Ok(seed)
}

/// Accuracy after each round, evaluated before that round's batch is labeled.
pub type AccuracyCurve = Vec<RoundRecord>;

/// Runs up to `cfg.rounds` rounds. The seed set depends only on `cfg.seed`, so
/// runs that differ only in selector start from the same labeled set.
pub fn run_al(
    ds: &LabeledDataset,
    holdout: &LabeledDataset,
    cfg: &ALConfig,
) -> Result<AccuracyCurve> {
    cfg.validate()?;
    let batch = cfg.batch_size(ds.len());
    let seed_size = cfg.initial_seed_size.unwrap_or(batch.max(ds.num_classes()));

    let mut seed_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut select_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    select_rng.set_stream(1);

    let labeled = initial_seed_set(ds, seed_size, &mut seed_rng)?;
    let mut state = ALState::new(ds.len(), labeled)?;
    while state.round < cfg.rounds {
        if state.unlabeled.is_empty() {
            let (_, acc) = evaluate(&state, ds, holdout, cfg).map_err(|e| Error::Round {
                round: state.round + 1,
                source: Box::new(e),
            })?;
            state.history.push(RoundRecord {
                round: state.round + 1,
                labeled_count: state.labeled.len(),
                accuracy: acc,
            });
            break;
        }
        state = fass_round(state, ds, holdout, cfg, &mut select_rng)?;
    }
    Ok(state.history)
}
