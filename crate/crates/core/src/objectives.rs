//! Facility-Location and Disparity-Min set functions with incremental state.
//!
//! Facility-Location: `f(X) = Σ_i max_{j∈X} s_ij`, with `f(∅) = 0`.
//! Disparity-Min: `f(X) = min_{i≠j∈X} d_ij`, with `f(X) = +∞` for `|X| ≤ 1`.

use crate::error::{Error, Result};
use crate::kernel::{DistanceKernel, SimilarityKernel};

fn check_members(n: usize, set: &[usize]) -> Result<()> {
    match set.iter().find(|&&e| e >= n) {
        Some(&e) => Err(Error::validation(format!(
            "index {e} out of range for ground set of size {n}"
        ))),
        None => Ok(()),
    }
}

/// From-scratch Facility-Location value.
pub fn fl_eval(kernel: &SimilarityKernel, set: &[usize]) -> Result<f64> {
    check_members(kernel.n(), set)?;
    let mut best = vec![0.0f64; kernel.n()];
    for &j in set {
        kernel.for_each_in_column(j, |i, s| {
            if s > best[i] {
                best[i] = s;
            }
        });
    }
    Ok(best.iter().sum())
}

/// From-scratch Disparity-Min value; `+∞` when fewer than two distinct elements.
pub fn dm_eval(kernel: &DistanceKernel, set: &[usize]) -> Result<f64> {
    check_members(kernel.n(), set)?;
    let mut min = f64::INFINITY;
    for (a, &i) in set.iter().enumerate() {
        for &j in &set[a + 1..] {
            if i != j {
                min = min.min(kernel.get(i, j));
            }
        }
    }
    Ok(min)
}

/// A set function that can be grown one element at a time while scoring
/// candidates for the next addition.
pub trait IncrementalObjective {
    fn ground_size(&self) -> usize;
    fn selected(&self) -> &[usize];
    fn is_selected(&self, e: usize) -> bool;
    /// Current `f(X)`.
    fn value(&self) -> f64;
    /// Greedy score of `e`; the caller guarantees `e` is in range and unselected.
    fn score(&self, e: usize) -> f64;
    /// Adds `e`; the caller guarantees `e` is in range and unselected.
    fn insert(&mut self, e: usize);

    fn check_candidate(&self, e: usize) -> Result<()> {
        if e >= self.ground_size() {
            return Err(Error::validation(format!(
                "index {e} out of range for ground set of size {}",
                self.ground_size()
            )));
        }
        if self.is_selected(e) {
            return Err(Error::validation(format!(
                "element {e} is already selected"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct FLState<'k> {
    kernel: &'k SimilarityKernel,
    selected: Vec<usize>,
    in_set: Vec<bool>,
    best: Vec<f64>,
    value: f64,
}

impl<'k> FLState<'k> {
    pub fn new(kernel: &'k SimilarityKernel) -> Self {
        let n = kernel.n();
        Self {
            kernel,
            selected: Vec::new(),
            in_set: vec![false; n],
            best: vec![0.0; n],
            value: 0.0,
        }
    }

    /// `max_{j∈X} s_ij` per ground element.
    pub fn best(&self) -> &[f64] {
        &self.best
    }

    /// `f(X ∪ {e}) − f(X)`.
    pub fn gain(&self, e: usize) -> Result<f64> {
        self.check_candidate(e)?;
        Ok(self.score(e))
    }

    pub fn update(&mut self, e: usize) -> Result<f64> {
        self.check_candidate(e)?;
        let g = self.score(e);
        self.insert(e);
        Ok(g)
    }
}

impl IncrementalObjective for FLState<'_> {
    fn ground_size(&self) -> usize {
        self.kernel.n()
    }

    fn selected(&self) -> &[usize] {
        &self.selected
    }

    fn is_selected(&self, e: usize) -> bool {
        self.in_set[e]
    }

    fn value(&self) -> f64 {
        self.value
    }

    #[inline]
    fn score(&self, e: usize) -> f64 {
        let mut gain = 0.0;
        self.kernel.for_each_in_column(e, |i, s| {
            let d = s - self.best[i];
            if d > 0.0 {
                gain += d;
            }
        });
        gain
    }

    fn insert(&mut self, e: usize) {
        let best = &mut self.best;
        self.kernel.for_each_in_column(e, |i, s| {
            if s > best[i] {
                best[i] = s;
            }
        });
        self.in_set[e] = true;
        self.selected.push(e);
        // index-order summation keeps the value bit-identical to fl_eval
        self.value = self.best.iter().sum();
    }
}

#[derive(Debug, Clone)]
pub struct DMState<'k> {
    kernel: &'k DistanceKernel,
    selected: Vec<usize>,
    in_set: Vec<bool>,
    mindist: Vec<f64>,
    value: f64,
}

impl<'k> DMState<'k> {
    pub fn new(kernel: &'k DistanceKernel) -> Self {
        let n = kernel.n();
        Self {
            kernel,
            selected: Vec::new(),
            in_set: vec![false; n],
            mindist: vec![f64::INFINITY; n],
            value: f64::INFINITY,
        }
    }

    /// `min_{j∈X} d_ij` per ground element (`+∞` while `X` is empty).
    pub fn mindist(&self) -> &[f64] {
        &self.mindist
    }

    /// Farthest-point score: distance from `e` to the nearest selected element.
    /// This is not the change in `f`, which is never positive.
    pub fn gain(&self, e: usize) -> Result<f64> {
        self.check_candidate(e)?;
        Ok(self.score(e))
    }

    pub fn update(&mut self, e: usize) -> Result<()> {
        self.check_candidate(e)?;
        self.insert(e);
        Ok(())
    }
}

impl IncrementalObjective for DMState<'_> {
    fn ground_size(&self) -> usize {
        self.kernel.n()
    }

    fn selected(&self) -> &[usize] {
        &self.selected
    }

    fn is_selected(&self, e: usize) -> bool {
        self.in_set[e]
    }

    fn value(&self) -> f64 {
        self.value
    }

    #[inline]
    fn score(&self, e: usize) -> f64 {
        self.mindist[e]
    }

    fn insert(&mut self, e: usize) {
        self.value = self.value.min(self.mindist[e]);
        for (m, &d) in self.mindist.iter_mut().zip(self.kernel.row(e)) {
            if d < *m {
                *m = d;
            }
        }
        self.in_set[e] = true;
        self.selected.push(e);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

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
    fn fl_eval_examples() {
        let s = s3();
        assert_eq!(fl_eval(&s, &[]).unwrap(), 0.0);
        assert!((fl_eval(&s, &[1]).unwrap() - 2.1).abs() < 1e-12);
        assert!((fl_eval(&s, &[0, 2]).unwrap() - 2.9).abs() < 1e-12);
        assert!(fl_eval(&s, &[3]).is_err());
    }

    #[test]
    fn fl_gain_examples() {
        let s = s3();
        let mut st = FLState::new(&s);
        for e in 0..3 {
            assert_eq!(st.gain(e).unwrap(), fl_eval(&s, &[e]).unwrap());
        }
        st.update(1).unwrap();
        assert!((st.gain(2).unwrap() - 0.8).abs() < 1e-12);
        assert!((st.gain(0).unwrap() - 0.1).abs() < 1e-12);
        assert!(matches!(st.gain(1), Err(Error::Validation(_))));
        assert!(matches!(st.update(1), Err(Error::Validation(_))));
        st.update(2).unwrap();
        assert!((st.value() - 2.9).abs() < 1e-12);
        st.update(0).unwrap();
        assert_eq!(st.value(), 3.0);
    }

    #[test]
    fn dm_examples() {
        let d = line(&[0.0, 1.0, 10.0]);
        assert_eq!(dm_eval(&d, &[0, 2]).unwrap(), 10.0);
        assert_eq!(dm_eval(&d, &[0, 1, 2]).unwrap(), 1.0);
        assert_eq!(dm_eval(&d, &[1]).unwrap(), f64::INFINITY);

        let mut st = DMState::new(&d);
        assert_eq!(st.gain(1).unwrap(), f64::INFINITY);
        st.update(0).unwrap();
        assert_eq!(st.gain(2).unwrap(), 10.0);
        st.update(2).unwrap();
        assert_eq!(st.gain(1).unwrap(), 1.0);
        assert_eq!(st.value(), 10.0);
        assert!(st.update(2).is_err());
    }

    fn random_fl_kernel() -> impl Strategy<Value = SimilarityKernel> {
        (2usize..10).prop_flat_map(|n| {
            proptest::collection::vec(0.0f64..1.0, n * (n - 1) / 2).prop_map(move |upper| {
                let mut v = vec![1.0; n * n];
                let mut it = upper.into_iter();
                for i in 0..n {
                    for j in (i + 1)..n {
                        let s = it.next().unwrap();
                        v[i * n + j] = s;
                        v[j * n + i] = s;
                    }
                }
                SimilarityKernel::from_dense(n, v).unwrap()
            })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn fl_incremental_matches_scratch(k in random_fl_kernel(), order in any::<u64>()) {
            let n = k.n();
            let mut perm: Vec<usize> = (0..n).collect();
            perm.rotate_left((order as usize) % n);
            let mut st = FLState::new(&k);
            let mut prev_best = st.best().to_vec();
            for (t, &e) in perm.iter().enumerate() {
                let g = st.gain(e).unwrap();
                prop_assert!(g >= 0.0);
                let before = st.value();
                st.update(e).unwrap();
                prop_assert!((st.value() - before - g).abs() < 1e-9);
                prop_assert!((st.value() - fl_eval(&k, &perm[..=t]).unwrap()).abs() < 1e-9);
                prop_assert!(st.best().iter().zip(&prev_best).all(|(a, b)| a >= b));
                prev_best = st.best().to_vec();
            }
        }

        #[test]
        fn dm_incremental_matches_scratch(points in proptest::collection::vec(-50.0f64..50.0, 2..12)) {
            let d = line(&points);
            let mut st = DMState::new(&d);
            let mut prev_value = f64::INFINITY;
            for e in 0..points.len() {
                st.update(e).unwrap();
                let chosen = &st.selected().to_vec();
                for (i, &m) in st.mindist().iter().enumerate() {
                    let scratch = chosen.iter().map(|&j| d.get(i, j)).fold(f64::INFINITY, f64::min);
                    prop_assert!((m - scratch).abs() < 1e-9);
                }
                let v = dm_eval(&d, chosen).unwrap();
                prop_assert_eq!(st.value(), v);
                prop_assert!(v <= prev_value);
                prev_value = v;
            }
        }
    }
}
