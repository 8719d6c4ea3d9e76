//! k-nearest-neighbour classification and multinomial logistic regression.

use rayon::prelude::*;

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KnnConfig {
    pub k: usize,
}

impl Default for KnnConfig {
    fn default() -> Self {
        Self { k: 5 }
    }
}

fn squared_distance(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let t = f64::from(x) - f64::from(y);
            t * t
        })
        .sum()
}

/// Majority label of the `k` nearest training rows. Equal distances rank the
/// lower training index nearer; tied votes go to the smallest label.
pub fn knn_predict(train: &LabeledDataset, query: &[f32], cfg: &KnnConfig) -> Result<usize> {
    if train.is_empty() {
        return Err(Error::validation("kNN training set is empty"));
    }
    if cfg.k == 0 || cfg.k > train.len() {
        return Err(Error::validation(format!(
            "k must lie in [1, {}], got {}",
            train.len(),
            cfg.k
        )));
    }
    if query.len() != train.dim() {
        return Err(Error::validation(format!(
            "query has dimension {}, training data has {}",
            query.len(),
            train.dim()
        )));
    }

    let feats = train.features();
    let mut dist: Vec<(f64, usize)> = (0..train.len())
        .map(|i| (squared_distance(feats.row(i), query), i))
        .collect();
    let by_distance = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if cfg.k < dist.len() {
        dist.select_nth_unstable_by(cfg.k - 1, by_distance);
    }

    let mut votes = vec![0usize; train.num_classes()];
    for &(_, i) in &dist[..cfg.k] {
        votes[train.labels().get(i)] += 1;
    }
    let mut winner = 0;
    for (label, &v) in votes.iter().enumerate() {
        if v > votes[winner] {
            winner = label;
        }
    }
    Ok(winner)
}

/// Fraction of holdout rows whose kNN prediction matches the label.
pub fn knn_accuracy(
    train: &LabeledDataset,
    holdout: &LabeledDataset,
    cfg: &KnnConfig,
) -> Result<f64> {
    if holdout.is_empty() {
        return Err(Error::validation("holdout set is empty"));
    }
    let hits = (0..holdout.len())
        .into_par_iter()
        .map(|i| {
            knn_predict(train, holdout.features().row(i), cfg)
                .map(|p| usize::from(p == holdout.labels().get(i)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(hits.iter().sum::<usize>() as f64 / holdout.len() as f64)
}

/// Posterior over classes.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVector(Vec<f64>);

impl ProbabilityVector {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::validation("probability vector is empty"));
        }
        if p.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
            return Err(Error::validation(format!(
                "probabilities outside [0, 1]: {p:?}"
            )));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::validation(format!(
                "probabilities sum to {sum}, not 1"
            )));
        }
        Ok(Self(p))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn num_classes(&self) -> usize {
        self.0.len()
    }

    /// Most probable class, lowest index on ties.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.0.iter().enumerate() {
            if p > self.0[best] {
                best = i;
            }
        }
        best
    }
}

/// Numerically stable softmax.
pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|&s| (s - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRegParams {
    pub l2: f64,
    pub tol: f64,
    pub max_iters: usize,
    /// Threaded through for reproducibility; zero initialisation makes it inert.
    pub seed: u64,
}

impl Default for LogRegParams {
    fn default() -> Self {
        Self {
            l2: 1e-2,
            tol: 1e-6,
            max_iters: 2000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogRegModel {
    /// `C × d`, row-major.
    weights: Vec<f64>,
    bias: Vec<f64>,
    num_classes: usize,
    dim: usize,
    pub l2: f64,
    pub trained_on: usize,
    pub iterations: usize,
    pub converged: bool,
}

impl LogRegModel {
    pub fn from_parameters(
        num_classes: usize,
        dim: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
    ) -> Result<Self> {
        if weights.len() != num_classes * dim || bias.len() != num_classes {
            return Err(Error::validation("parameter shapes do not match C × d"));
        }
        if weights.iter().chain(&bias).any(|v| !v.is_finite()) {
            return Err(Error::validation("non-finite model parameter"));
        }
        Ok(Self {
            weights,
            bias,
            num_classes,
            dim,
            l2: 0.0,
            trained_on: 0,
            iterations: 0,
            converged: true,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    fn scores(&self, x: &[f32]) -> Vec<f64> {
        (0..self.num_classes)
            .map(|c| {
                let w = &self.weights[c * self.dim..(c + 1) * self.dim];
                self.bias[c]
                    + w.iter()
                        .zip(x)
                        .map(|(&w, &v)| w * f64::from(v))
                        .sum::<f64>()
            })
            .collect()
    }

    pub fn predict_proba(&self, x: &[f32]) -> Result<ProbabilityVector> {
        if x.len() != self.dim {
            return Err(Error::validation(format!(
                "input has dimension {}, model expects {}",
                x.len(),
                self.dim
            )));
        }
        Ok(ProbabilityVector(softmax(&self.scores(x))))
    }

    pub fn predict(&self, x: &[f32]) -> Result<usize> {
        Ok(self.predict_proba(x)?.argmax())
    }

    pub fn accuracy(&self, ds: &LabeledDataset) -> Result<f64> {
        if ds.is_empty() {
            return Err(Error::validation("evaluation set is empty"));
        }
        let mut hits = 0;
        for i in 0..ds.len() {
            if self.predict(ds.features().row(i))? == ds.labels().get(i) {
                hits += 1;
            }
        }
        Ok(hits as f64 / ds.len() as f64)
    }
}

/// Regularised mean cross-entropy over a dataset:
/// `L(W, b) = (1/n) Σ_i −log p_{y_i}(x_i) + (l2/2) ‖W‖²` (bias unpenalised).
pub struct LogRegObjective<'a> {
    data: &'a LabeledDataset,
    l2: f64,
}

impl<'a> LogRegObjective<'a> {
    pub fn new(data: &'a LabeledDataset, l2: f64) -> Self {
        Self { data, l2 }
    }

    /// Number of parameters: `C·d` weights followed by `C` biases.
    pub fn num_params(&self) -> usize {
        self.data.num_classes() * (self.data.dim() + 1)
    }

    pub fn loss(&self, params: &[f64]) -> f64 {
        self.evaluate(params, None)
    }

    /// Returns the loss and writes the gradient into `grad`.
    pub fn loss_and_gradient(&self, params: &[f64], grad: &mut [f64]) -> f64 {
        self.evaluate(params, Some(grad))
    }

    fn evaluate(&self, params: &[f64], mut grad: Option<&mut [f64]>) -> f64 {
        let c_count = self.data.num_classes();
        let d = self.data.dim();
        let n = self.data.len() as f64;
        let (w, b) = params.split_at(c_count * d);
        if let Some(g) = grad.as_deref_mut() {
            g.fill(0.0);
        }

        let mut loss = 0.0;
        let mut scores = vec![0.0; c_count];
        for i in 0..self.data.len() {
            let x = self.data.features().row(i);
            let y = self.data.labels().get(i);
            for c in 0..c_count {
                let wc = &w[c * d..(c + 1) * d];
                scores[c] = b[c]
                    + wc.iter()
                        .zip(x)
                        .map(|(&w, &v)| w * f64::from(v))
                        .sum::<f64>();
            }
            let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let log_z = max + scores.iter().map(|&s| (s - max).exp()).sum::<f64>().ln();
            loss += log_z - scores[y];
            if let Some(g) = grad.as_deref_mut() {
                let (gw, gb) = g.split_at_mut(c_count * d);
                for c in 0..c_count {
                    let r = (scores[c] - log_z).exp() - f64::from(u8::from(c == y));
                    gb[c] += r / n;
                    for (gwj, &v) in gw[c * d..(c + 1) * d].iter_mut().zip(x) {
                        *gwj += r * f64::from(v) / n;
                    }
                }
            }
        }
        loss /= n;
        loss += 0.5 * self.l2 * w.iter().map(|v| v * v).sum::<f64>();
        if let Some(g) = grad {
            for (gw, &wv) in g[..c_count * d].iter_mut().zip(w) {
                *gw += self.l2 * wv;
            }
        }
        loss
    }
}

/// Full-batch, diagonally scaled gradient descent from zero parameters. A step
/// that increases the loss is rejected and the step size halved; accepted steps
/// grow it by 25%.
pub fn logreg_fit(train: &LabeledDataset, params: &LogRegParams) -> Result<LogRegModel> {
    if !(params.l2 >= 0.0 && params.l2.is_finite()) {
        return Err(Error::validation(format!(
            "l2 must be >= 0, got {}",
            params.l2
        )));
    }
    let c_count = train.num_classes();
    let present = train
        .labels()
        .class_counts()
        .iter()
        .filter(|&&c| c > 0)
        .count();
    if present < 2 {
        return Err(Error::validation(
            "logistic regression needs at least two classes in the training set",
        ));
    }

    let d = train.dim();
    let objective = LogRegObjective::new(train, params.l2);
    let mut theta = vec![0.0; objective.num_params()];
    let mut grad = vec![0.0; theta.len()];
    let mut loss = objective.loss_and_gradient(&theta, &mut grad);

    // Diagonal scaling: each coordinate's step is divided by a bound on its own
    // curvature (½·mean x_j² + l2 for weights, ½ for biases), so heavily
    // regularised weights and unpenalised biases converge at similar rates.
    let n = train.len() as f64;
    let mut second_moment = vec![0.0; d];
    for i in 0..train.len() {
        for (m, &v) in second_moment.iter_mut().zip(train.features().row(i)) {
            *m += f64::from(v).powi(2) / n;
        }
    }
    let mut scale = Vec::with_capacity(theta.len());
    for _ in 0..c_count {
        scale.extend(
            second_moment
                .iter()
                .map(|m| 1.0 / (0.5 * m + params.l2 + 1e-12)),
        );
    }
    scale.extend(std::iter::repeat_n(2.0, c_count));
    let mut step = 1.0;

    let mut candidate = vec![0.0; theta.len()];
    let mut cand_grad = vec![0.0; theta.len()];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < params.max_iters {
        if grad.iter().fold(0.0f64, |m, g| m.max(g.abs())) <= params.tol {
            converged = true;
            break;
        }
        iterations += 1;
        loop {
            for (((c, &t), &g), &h) in candidate.iter_mut().zip(&theta).zip(&grad).zip(&scale) {
                *c = t - step * h * g;
            }
            let new_loss = objective.loss_and_gradient(&candidate, &mut cand_grad);
            if new_loss <= loss {
                std::mem::swap(&mut theta, &mut candidate);
                std::mem::swap(&mut grad, &mut cand_grad);
                loss = new_loss;
                step *= 1.25;
                break;
            }
            step *= 0.5;
            if step < 1e-300 {
                // no descent possible at machine precision
                converged = true;
                break;
            }
        }
        if converged {
            break;
        }
    }

    let (w, b) = theta.split_at(c_count * d);
    let mut model = LogRegModel::from_parameters(c_count, d, w.to_vec(), b.to_vec())?;
    model.l2 = params.l2;
    model.trained_on = train.len();
    model.iterations = iterations;
    model.converged = converged;
    Ok(model)
}
