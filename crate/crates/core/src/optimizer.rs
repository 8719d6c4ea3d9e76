//! Cardinality-constrained maximization of the selection objectives.
//!
//! Every routine breaks ties toward the lowest ground-set index, so results
//! are fully deterministic and the lazy greedy reproduces the naive greedy
//! element for element.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::kernel::{DistanceKernel, SimilarityKernel};
use crate::objectives::{dm_eval, fl_eval, DMState, FLState, IncrementalObjective};

/// Ground-set size up to which farthest-point seeding searches the exact
/// maximum-distance pair.
pub const DEFAULT_EXACT_PAIR_THRESHOLD: usize = 2048;

/// Largest enumeration `brute_force` will attempt.
pub const BRUTE_FORCE_LIMIT: u128 = 1_000_000;

#[derive(Debug, Clone, Copy)]
pub enum Objective<'k> {
    FacilityLocation(&'k SimilarityKernel),
    DisparityMin(&'k DistanceKernel),
}

impl Objective<'_> {
    pub fn ground_size(&self) -> usize {
        match self {
            Objective::FacilityLocation(k) => k.n(),
            Objective::DisparityMin(k) => k.n(),
        }
    }

    pub fn eval(&self, set: &[usize]) -> Result<f64> {
        match self {
            Objective::FacilityLocation(k) => fl_eval(k, set),
            Objective::DisparityMin(k) => dm_eval(k, set),
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Objective::FacilityLocation(_) => "facility-location",
            Objective::DisparityMin(_) => "disparity-min",
        }
    }
}

/// Cardinality budget `1 ≤ b ≤ n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget(usize);

impl Budget {
    pub fn new(b: usize, ground_size: usize) -> Result<Self> {
        if b == 0 || b > ground_size {
            return Err(Error::validation(format!(
                "budget must lie in [1, {ground_size}], got {b}"
            )));
        }
        Ok(Self(b))
    }

    pub fn get(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    /// Chosen ground-set indices in selection order.
    pub indices: Vec<usize>,
    /// `f` of each prefix of `indices`.
    pub step_values: Vec<f64>,
    pub final_value: f64,
    /// Number of marginal-gain evaluations performed.
    pub gain_evaluations: usize,
}

impl Selection {
    fn from_state(state: &impl IncrementalObjective, step_values: Vec<f64>, evals: usize) -> Self {
        Self {
            indices: state.selected().to_vec(),
            final_value: state.value(),
            step_values,
            gain_evaluations: evals,
        }
    }
}

fn check_budget(obj: &Objective<'_>, b: Budget) -> Result<()> {
    let n = obj.ground_size();
    if n == 0 {
        return Err(Error::validation("ground set is empty"));
    }
    if b.get() > n {
        return Err(Error::validation(format!(
            "budget {} exceeds ground set size {n}",
            b.get()
        )));
    }
    Ok(())
}

/// Full scan greedy. Facility-Location stops early once the best gain is 0.
pub fn greedy_naive(obj: Objective<'_>, b: Budget) -> Result<Selection> {
    check_budget(&obj, b)?;
    match obj {
        Objective::FacilityLocation(k) => Ok(naive_scan(FLState::new(k), b.get(), true)),
        Objective::DisparityMin(k) => Ok(naive_scan(DMState::new(k), b.get(), false)),
    }
}

fn naive_scan<S: IncrementalObjective>(
    mut state: S,
    budget: usize,
    stop_at_zero: bool,
) -> Selection {
    let n = state.ground_size();
    let mut steps = Vec::with_capacity(budget);
    let mut evals = 0;
    while steps.len() < budget {
        let mut best: Option<(usize, f64)> = None;
        for e in (0..n).filter(|&e| !state.is_selected(e)) {
            let g = state.score(e);
            evals += 1;
            if best.is_none_or(|(_, bg)| g > bg) {
                best = Some((e, g));
            }
        }
        let Some((e, g)) = best else { break };
        if stop_at_zero && g <= 0.0 {
            break;
        }
        state.insert(e);
        steps.push(state.value());
    }
    Selection::from_state(&state, steps, evals)
}

/// Heap entry ordered by gain, then by lower index.
#[derive(Debug, Clone, Copy)]
struct Candidate {
    gain: f64,
    index: usize,
    /// Selection size at which `gain` was computed.
    stamp: usize,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.gain
            .total_cmp(&other.gain)
            .then_with(|| other.index.cmp(&self.index))
    }
}

/// Lazy (stale upper bound) greedy for Facility-Location. Produces exactly
/// the selection of [`greedy_naive`].
pub fn greedy_lazy(obj: Objective<'_>, b: Budget) -> Result<Selection> {
    let Objective::FacilityLocation(kernel) = obj else {
        return Err(Error::Unsupported(format!(
            "lazy greedy requires a submodular objective, got {}",
            obj.name()
        )));
    };
    check_budget(&obj, b)?;

    let mut state = FLState::new(kernel);
    let n = kernel.n();
    let mut heap: BinaryHeap<Candidate> = (0..n)
        .map(|e| Candidate {
            gain: state.score(e),
            index: e,
            stamp: 0,
        })
        .collect();
    let mut evals = n;
    let mut steps = Vec::with_capacity(b.get());

    while steps.len() < b.get() {
        let Some(top) = heap.pop() else { break };
        if top.stamp == steps.len() {
            if top.gain <= 0.0 {
                break;
            }
            state.insert(top.index);
            steps.push(state.value());
        } else {
            evals += 1;
            heap.push(Candidate {
                gain: state.score(top.index),
                index: top.index,
                stamp: steps.len(),
            });
        }
    }
    Ok(Selection::from_state(&state, steps, evals))
}

/// Farthest-point greedy for Disparity-Min with the default seeding threshold.
pub fn farthest_point(obj: Objective<'_>, b: Budget) -> Result<Selection> {
    farthest_point_with_threshold(obj, b, DEFAULT_EXACT_PAIR_THRESHOLD)
}

/// Seeds with the maximum-distance pair when `n ≤ exact_pair_threshold`,
/// otherwise with the element farthest from the medoid, then repeatedly adds
/// the element farthest from the current selection.
pub fn farthest_point_with_threshold(
    obj: Objective<'_>,
    b: Budget,
    exact_pair_threshold: usize,
) -> Result<Selection> {
    let Objective::DisparityMin(kernel) = obj else {
        return Err(Error::Unsupported(format!(
            "farthest-point selection requires disparity-min, got {}",
            obj.name()
        )));
    };
    check_budget(&obj, b)?;
    let n = kernel.n();
    let mut state = DMState::new(kernel);
    let mut steps = Vec::with_capacity(b.get());
    let mut evals = 0;

    if b.get() == 1 {
        state.insert(0);
        steps.push(state.value());
        return Ok(Selection::from_state(&state, steps, evals));
    }

    if n <= exact_pair_threshold {
        let (mut bi, mut bj, mut bd) = (0, 1, f64::NEG_INFINITY);
        for i in 0..n {
            for (j, &d) in kernel.row(i).iter().enumerate().skip(i + 1) {
                evals += 1;
                if d > bd {
                    (bi, bj, bd) = (i, j, d);
                }
            }
        }
        state.insert(bi);
        steps.push(state.value());
        state.insert(bj);
        steps.push(state.value());
    } else {
        let medoid = (0..n)
            .map(|i| (i, kernel.row(i).iter().sum::<f64>()))
            .fold(
                (0, f64::INFINITY),
                |acc, (i, s)| if s < acc.1 { (i, s) } else { acc },
            )
            .0;
        let far = argmax_lowest(kernel.row(medoid).iter().copied()).unwrap_or(0);
        evals += n * n;
        state.insert(far);
        steps.push(state.value());
    }

    while steps.len() < b.get() {
        let mut best: Option<(usize, f64)> = None;
        for e in (0..n).filter(|&e| !state.is_selected(e)) {
            let g = state.score(e);
            evals += 1;
            if best.is_none_or(|(_, bg)| g > bg) {
                best = Some((e, g));
            }
        }
        let Some((e, _)) = best else { break };
        state.insert(e);
        steps.push(state.value());
    }

    let mut sel = Selection::from_state(&state, steps, evals);
    sel.final_value = dm_eval(kernel, &sel.indices)?;
    Ok(sel)
}

fn argmax_lowest(values: impl Iterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.enumerate() {
        if best.is_none_or(|(_, bv)| v > bv) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i)
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > BRUTE_FORCE_LIMIT * 1024 {
            return acc;
        }
    }
    acc
}

/// Exact optimum over all `b`-subsets; ties go to the lexicographically
/// smallest index set.
pub fn brute_force(obj: Objective<'_>, b: Budget) -> Result<Selection> {
    check_budget(&obj, b)?;
    let n = obj.ground_size();
    let k = b.get();
    let count = binomial(n, k);
    if count > BRUTE_FORCE_LIMIT {
        return Err(Error::Capacity(format!(
            "C({n}, {k}) subsets exceeds the enumeration limit of {BRUTE_FORCE_LIMIT}"
        )));
    }

    let mut combo: Vec<usize> = (0..k).collect();
    let mut best: Option<(Vec<usize>, f64)> = None;
    let mut evals = 0;
    loop {
        let v = obj.eval(&combo)?;
        evals += 1;
        if best.as_ref().is_none_or(|(_, bv)| v > *bv) {
            best = Some((combo.clone(), v));
        }
        // next combination in lexicographic order
        let Some(pos) = (0..k).rev().find(|&i| combo[i] < n - k + i) else {
            break;
        };
        combo[pos] += 1;
        for i in pos + 1..k {
            combo[i] = combo[i - 1] + 1;
        }
    }

    let (indices, final_value) = best.expect("at least one subset");
    let step_values = (1..=k)
        .map(|t| obj.eval(&indices[..t]))
        .collect::<Result<Vec<_>>>()?;
    Ok(Selection {
        indices,
        step_values,
        final_value,
        gain_evaluations: evals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s3() -> SimilarityKernel {
        SimilarityKernel::from_dense(3, vec![1.0, 0.9, 0.1, 0.9, 1.0, 0.2, 0.1, 0.2, 1.0]).unwrap()
    }

    fn line(points: &[f64]) -> DistanceKernel {
        let n = points.len();
        let v = (0..n * n)
            .map(|k| (points[k / n] - points[k % n]).abs())
            .collect();
        DistanceKernel::from_dense(n, v).unwrap()
    }

    #[test]
    fn naive_fl_examples() {
        let s = s3();
        let obj = Objective::FacilityLocation(&s);
        let one = greedy_naive(obj, Budget::new(1, 3).unwrap()).unwrap();
        assert_eq!(one.indices, vec![1]);
        assert!((one.final_value - 2.1).abs() < 1e-12);
        let two = greedy_naive(obj, Budget::new(2, 3).unwrap()).unwrap();
        assert_eq!(two.indices, vec![1, 2]);
        assert!((two.final_value - 2.9).abs() < 1e-12);
        let all = greedy_naive(obj, Budget::new(3, 3).unwrap()).unwrap();
        assert_eq!(all.final_value, fl_eval(&s, &[0, 1, 2]).unwrap());
        assert_eq!(all.step_values.len(), 3);
    }

    #[test]
    fn lazy_matches_naive_on_example() {
        let s = s3();
        let b = Budget::new(2, 3).unwrap();
        let lazy = greedy_lazy(Objective::FacilityLocation(&s), b).unwrap();
        let naive = greedy_naive(Objective::FacilityLocation(&s), b).unwrap();
        assert_eq!(lazy.indices, vec![1, 2]);
        assert_eq!(lazy.step_values, naive.step_values);
        assert!(lazy.gain_evaluations <= naive.gain_evaluations);
    }

    #[test]
    fn lazy_rejects_dm() {
        let d = line(&[0.0, 1.0]);
        let err = greedy_lazy(Objective::DisparityMin(&d), Budget::new(1, 2).unwrap()).unwrap_err();
        assert!(matches!(err, Error::Unsupported(_)));
    }

    #[test]
    fn fl_stops_at_zero_gain() {
        // two identical points: after picking one, the other adds nothing
        let s = SimilarityKernel::from_dense(2, vec![1.0; 4]).unwrap();
        let b = Budget::new(2, 2).unwrap();
        for sel in [
            greedy_naive(Objective::FacilityLocation(&s), b).unwrap(),
            greedy_lazy(Objective::FacilityLocation(&s), b).unwrap(),
        ] {
            assert_eq!(sel.indices, vec![0]);
            assert_eq!(sel.final_value, 2.0);
        }
    }

    #[test]
    fn farthest_point_examples() {
        let d = line(&[0.0, 1.0, 10.0]);
        let obj = Objective::DisparityMin(&d);
        let two = farthest_point(obj, Budget::new(2, 3).unwrap()).unwrap();
        assert_eq!(two.indices, vec![0, 2]);
        assert_eq!(two.final_value, 10.0);
        let three = farthest_point(obj, Budget::new(3, 3).unwrap()).unwrap();
        assert_eq!(three.indices, vec![0, 2, 1]);
        assert_eq!(three.final_value, 1.0);
        assert_eq!(three.step_values, vec![f64::INFINITY, 10.0, 1.0]);
        let one = farthest_point(obj, Budget::new(1, 3).unwrap()).unwrap();
        assert_eq!(one.indices, vec![0]);
        assert_eq!(one.final_value, f64::INFINITY);
    }

    #[test]
    fn farthest_point_medoid_seeding() {
        // medoid of {0, 1, 2, 10} is 1 (sum 1+1+9=11); farthest from it is 10
        let d = line(&[0.0, 1.0, 2.0, 10.0]);
        let sel = farthest_point_with_threshold(
            Objective::DisparityMin(&d),
            Budget::new(2, 4).unwrap(),
            0,
        )
        .unwrap();
        assert_eq!(sel.indices, vec![3, 0]);
        assert_eq!(sel.final_value, 10.0);
    }

    #[test]
    fn brute_force_examples() {
        let s = s3();
        let fl = brute_force(Objective::FacilityLocation(&s), Budget::new(2, 3).unwrap()).unwrap();
        assert_eq!(fl.indices, vec![0, 2]);
        assert!((fl.final_value - 2.9).abs() < 1e-12);

        let d = line(&[0.0, 1.0, 10.0]);
        let dm = brute_force(Objective::DisparityMin(&d), Budget::new(2, 3).unwrap()).unwrap();
        assert_eq!(dm.indices, vec![0, 2]);
        assert_eq!(dm.final_value, 10.0);

        let full = brute_force(Objective::DisparityMin(&d), Budget::new(3, 3).unwrap()).unwrap();
        assert_eq!(full.indices, vec![0, 1, 2]);
    }

    #[test]
    fn brute_force_capacity() {
        let n = 40;
        let d = line(&(0..n).map(f64::from).collect::<Vec<_>>());
        let err = brute_force(
            Objective::DisparityMin(&d),
            Budget::new(10, n as usize).unwrap(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Capacity(_)));
    }

    #[test]
    fn budget_bounds() {
        assert!(Budget::new(0, 3).is_err());
        assert!(Budget::new(4, 3).is_err());
        assert_eq!(Budget::new(3, 3).unwrap().get(), 3);
    }
}
