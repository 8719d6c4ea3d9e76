//! Pairwise similarity and distance kernels over a ground set.
//!
//! Ground-set element `i` corresponds to `rows[i]` of the source feature
//! matrix. Each unordered pair is computed once and mirrored, so dense kernels
//! are exactly symmetric.

use rayon::prelude::*;

use crate::dataset::FeatureMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Storage {
    Dense(Vec<f64>),
    /// Per-row kept `(column, value)` lists plus their transpose, both sorted
    /// by index. The diagonal is implicit.
    Sparse {
        rows: Vec<Vec<(usize, f64)>>,
        cols: Vec<Vec<(usize, f64)>>,
    },
}

/// Similarities in `[0, 1]` with a unit diagonal. Sparse kernels read missing
/// off-diagonal entries as 0.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityKernel {
    n: usize,
    storage: Storage,
}

impl SimilarityKernel {
    /// Wraps a dense row-major matrix. It must be symmetric with entries in
    /// `[0, 1]` and a unit diagonal.
    pub fn from_dense(n: usize, values: Vec<f64>) -> Result<Self> {
        if n == 0 || values.len() != n * n {
            return Err(Error::validation(format!(
                "expected {} similarities for n = {n}, got {}",
                n * n,
                values.len()
            )));
        }
        for i in 0..n {
            if values[i * n + i] != 1.0 {
                return Err(Error::validation(format!("s[{i}][{i}] must be 1")));
            }
            for j in 0..n {
                let v = values[i * n + j];
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::validation(format!(
                        "s[{i}][{j}] = {v} outside [0, 1]"
                    )));
                }
                if v != values[j * n + i] {
                    return Err(Error::validation(format!(
                        "kernel not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self {
            n,
            storage: Storage::Dense(values),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.storage, Storage::Sparse { .. })
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 1.0;
        }
        match &self.storage {
            Storage::Dense(v) => v[i * self.n + j],
            Storage::Sparse { rows, .. } => rows[i]
                .binary_search_by_key(&j, |&(c, _)| c)
                .map_or(0.0, |p| rows[i][p].1),
        }
    }

    /// Calls `f(i, s_ie)` for every `i` with a stored (or diagonal) similarity
    /// to `e`, in ascending `i`.
    #[inline]
    pub fn for_each_in_column(&self, e: usize, mut f: impl FnMut(usize, f64)) {
        match &self.storage {
            // symmetric, so column e equals row e
            Storage::Dense(v) => {
                for (i, &s) in v[e * self.n..(e + 1) * self.n].iter().enumerate() {
                    f(i, s);
                }
            }
            Storage::Sparse { cols, .. } => {
                let col = &cols[e];
                let split = col.partition_point(|&(i, _)| i < e);
                for &(i, s) in &col[..split] {
                    f(i, s);
                }
                f(e, 1.0);
                for &(i, s) in &col[split..] {
                    f(i, s);
                }
            }
        }
    }

    /// Stored off-diagonal entries of row `i` of a sparse kernel.
    pub fn sparse_row(&self, i: usize) -> Option<&[(usize, f64)]> {
        match &self.storage {
            Storage::Sparse { rows, .. } => Some(&rows[i]),
            Storage::Dense(_) => None,
        }
    }
}

/// Symmetric nonnegative distances with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceKernel {
    n: usize,
    values: Vec<f64>,
}

impl DistanceKernel {
    pub fn from_dense(n: usize, values: Vec<f64>) -> Result<Self> {
        if n == 0 || values.len() != n * n {
            return Err(Error::validation(format!(
                "expected {} distances for n = {n}, got {}",
                n * n,
                values.len()
            )));
        }
        for i in 0..n {
            if values[i * n + i] != 0.0 {
                return Err(Error::validation(format!("d[{i}][{i}] must be 0")));
            }
            for j in 0..n {
                let v = values[i * n + j];
                if !(v.is_finite() && v >= 0.0) {
                    return Err(Error::validation(format!(
                        "d[{i}][{j}] = {v} is not a distance"
                    )));
                }
                if v != values[j * n + i] {
                    return Err(Error::validation(format!(
                        "kernel not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self { n, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }
}

fn check_rows(m: &FeatureMatrix, rows: &[usize]) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::validation("ground set is empty"));
    }
    if let Some(&r) = rows.iter().find(|&&r| r >= m.n()) {
        return Err(Error::validation(format!(
            "row index {r} out of range for {} rows",
            m.n()
        )));
    }
    Ok(())
}

/// Fills a dense symmetric matrix from `entry(a, b)` evaluated once per pair
/// `a < b`. Rows are computed in parallel; each value depends only on its pair.
fn build_symmetric(
    n: usize,
    diagonal: f64,
    entry: impl Fn(usize, usize) -> f64 + Sync,
) -> Vec<f64> {
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|a| ((a + 1)..n).map(|b| entry(a, b)).collect())
        .collect();
    let mut values = vec![diagonal; n * n];
    for (a, row) in upper.iter().enumerate() {
        for (off, &v) in row.iter().enumerate() {
            let b = a + 1 + off;
            values[a * n + b] = v;
            values[b * n + a] = v;
        }
    }
    values
}

/// Shifted cosine similarity `(1 + cos(x_i, x_j)) / 2` over `rows`.
pub fn cosine_similarity(m: &FeatureMatrix, rows: &[usize]) -> Result<SimilarityKernel> {
    check_rows(m, rows)?;
    let vecs: Vec<Vec<f64>> = rows
        .iter()
        .map(|&r| m.row(r).iter().map(|&v| f64::from(v)).collect())
        .collect();
    let norms: Vec<f64> = vecs
        .iter()
        .map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    if let Some(p) = norms.iter().position(|&nrm| nrm == 0.0) {
        return Err(Error::validation(format!(
            "row {} has zero norm; cosine similarity undefined",
            rows[p]
        )));
    }
    let n = rows.len();
    let values = build_symmetric(n, 1.0, |a, b| {
        let dot: f64 = vecs[a].iter().zip(&vecs[b]).map(|(x, y)| x * y).sum();
        let cos = (dot / (norms[a] * norms[b])).clamp(-1.0, 1.0);
        (1.0 + cos) / 2.0
    });
    Ok(SimilarityKernel {
        n,
        storage: Storage::Dense(values),
    })
}

/// Euclidean distances over `rows`.
pub fn euclidean_distance(m: &FeatureMatrix, rows: &[usize]) -> Result<DistanceKernel> {
    check_rows(m, rows)?;
    let n = rows.len();
    let values = build_symmetric(n, 0.0, |a, b| {
        m.row(rows[a])
            .iter()
            .zip(m.row(rows[b]))
            .map(|(&x, &y)| {
                let t = f64::from(x) - f64::from(y);
                t * t
            })
            .sum::<f64>()
            .sqrt()
    });
    Ok(DistanceKernel { n, values })
}

/// Keeps each row's `kappa` largest off-diagonal similarities, ties going to
/// the lower column index.
pub fn sparsify_knn(k: &SimilarityKernel, kappa: usize) -> Result<SimilarityKernel> {
    let Storage::Dense(values) = &k.storage else {
        return Err(Error::validation("kernel is already sparse"));
    };
    let n = k.n;
    if kappa == 0 || kappa + 1 > n {
        return Err(Error::validation(format!(
            "kappa must lie in [1, {}], got {kappa}",
            n.saturating_sub(1)
        )));
    }
    let rows: Vec<Vec<(usize, f64)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut cand: Vec<(usize, f64)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (j, values[i * n + j]))
                .collect();
            cand.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            cand.truncate(kappa);
            cand.sort_by_key(|&(j, _)| j);
            cand
        })
        .collect();
    let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (i, row) in rows.iter().enumerate() {
        for &(j, s) in row {
            cols[j].push((i, s));
        }
    }
    Ok(SimilarityKernel {
        n,
        storage: Storage::Sparse { rows, cols },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fm(rows: &[Vec<f32>]) -> FeatureMatrix {
        FeatureMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn cosine_special_angles() {
        let m = fm(&[
            vec![1.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 2.0],
            vec![-3.0, 0.0],
        ]);
        let k = cosine_similarity(&m, &[0, 1, 2, 3]).unwrap();
        assert_eq!(k.get(0, 1), 1.0);
        assert_eq!(k.get(0, 2), 0.5);
        assert_eq!(k.get(0, 3), 0.0);
        assert_eq!(k.get(2, 2), 1.0);
    }

    #[test]
    fn zero_row_is_named() {
        let m = fm(&[vec![1.0, 0.0], vec![0.0, 0.0]]);
        let err = cosine_similarity(&m, &[0, 1]).unwrap_err();
        assert!(matches!(&err, Error::Validation(msg) if msg.contains("row 1")));
    }

    #[test]
    fn euclidean_examples() {
        let m = fm(&[vec![0.0], vec![3.0]]);
        assert_eq!(euclidean_distance(&m, &[0, 1]).unwrap().get(0, 1), 3.0);
        let m = fm(&[vec![0.0, 0.0], vec![3.0, 4.0]]);
        let d = euclidean_distance(&m, &[0, 1]).unwrap();
        assert_eq!(d.get(0, 1), 5.0);
        assert_eq!(d.get(1, 1), 0.0);
    }

    #[test]
    fn ground_set_uses_row_subset() {
        let m = fm(&[vec![0.0], vec![100.0], vec![3.0]]);
        let d = euclidean_distance(&m, &[2, 0]).unwrap();
        assert_eq!(d.n(), 2);
        assert_eq!(d.get(0, 1), 3.0);
        assert!(euclidean_distance(&m, &[3]).is_err());
    }

    #[test]
    fn sparsify_keeps_top_entry() {
        let s = SimilarityKernel::from_dense(3, vec![1.0, 0.9, 0.1, 0.9, 1.0, 0.2, 0.1, 0.2, 1.0])
            .unwrap();
        let sp = sparsify_knn(&s, 1).unwrap();
        assert_eq!(sp.sparse_row(0).unwrap(), &[(1, 0.9)]);
        assert_eq!(sp.get(0, 2), 0.0);
        assert_eq!(sp.get(2, 2), 1.0);
        assert!(sparsify_knn(&s, 0).is_err());
        assert!(sparsify_knn(&s, 3).is_err());
        assert!(sparsify_knn(&sp, 1).is_err());
    }

    #[test]
    fn sparsify_ties_prefer_lower_index() {
        let s = SimilarityKernel::from_dense(3, vec![1.0, 0.5, 0.5, 0.5, 1.0, 0.5, 0.5, 0.5, 1.0])
            .unwrap();
        let sp = sparsify_knn(&s, 1).unwrap();
        assert_eq!(sp.sparse_row(0).unwrap(), &[(1, 0.5)]);
        assert_eq!(sp.sparse_row(1).unwrap(), &[(0, 0.5)]);
        assert_eq!(sp.sparse_row(2).unwrap(), &[(0, 0.5)]);
    }

    #[test]
    fn column_iteration_matches_get() {
        let m = fm(&[
            vec![1.0, 0.2],
            vec![0.3, 1.0],
            vec![-1.0, 0.5],
            vec![0.7, -0.7],
        ]);
        let dense = cosine_similarity(&m, &[0, 1, 2, 3]).unwrap();
        let sparse = sparsify_knn(&dense, 2).unwrap();
        for k in [&dense, &sparse] {
            for e in 0..4 {
                let mut seen = [0.0; 4];
                let mut last = None;
                k.for_each_in_column(e, |i, s| {
                    assert!(last.is_none_or(|l| l < i));
                    last = Some(i);
                    seen[i] = s;
                });
                for (i, &s) in seen.iter().enumerate() {
                    assert_eq!(s, k.get(i, e));
                }
            }
        }
    }

    fn matrix_strategy() -> impl Strategy<Value = FeatureMatrix> {
        (2usize..15, 1usize..6).prop_flat_map(|(n, d)| {
            proptest::collection::vec(-10.0f32..10.0, n * d)
                .prop_map(move |v| FeatureMatrix::new(n, d, v).unwrap())
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(50))]

        #[test]
        fn euclidean_is_symmetric_and_metric(m in matrix_strategy()) {
            let rows: Vec<usize> = (0..m.n()).collect();
            let d = euclidean_distance(&m, &rows).unwrap();
            for i in 0..m.n() {
                prop_assert_eq!(d.get(i, i), 0.0);
                for j in 0..m.n() {
                    prop_assert_eq!(d.get(i, j), d.get(j, i));
                    for k in 0..m.n() {
                        prop_assert!(d.get(i, k) <= d.get(i, j) + d.get(j, k) + 1e-9);
                    }
                }
            }
        }

        #[test]
        fn cosine_in_unit_interval(m in matrix_strategy()) {
            let rows: Vec<usize> = (0..m.n()).collect();
            if let Ok(k) = cosine_similarity(&m, &rows) {
                for i in 0..m.n() {
                    for j in 0..m.n() {
                        let s = k.get(i, j);
                        prop_assert!((0.0..=1.0).contains(&s));
                        prop_assert_eq!(s, k.get(j, i));
                    }
                }
            }
        }

        #[test]
        fn sparse_rows_bounded(m in matrix_strategy(), kappa in 1usize..5) {
            let rows: Vec<usize> = (0..m.n()).collect();
            if let Ok(k) = cosine_similarity(&m, &rows) {
                let kappa = kappa.min(m.n() - 1);
                let sp = sparsify_knn(&k, kappa).unwrap();
                for i in 0..m.n() {
                    let row = sp.sparse_row(i).unwrap();
                    prop_assert_eq!(row.len(), kappa);
                    prop_assert!(row.windows(2).all(|w| w[0].0 < w[1].0));
                    prop_assert!(row.iter().all(|&(j, s)| j != i && (0.0..=1.0).contains(&s)));
                }
            }
        }
    }
}
