//! Labeled feature datasets: the binary and CSV feature formats, label files,
//! seeded train/holdout splits and a synthetic Gaussian-mixture generator.
//!
//! Binary layout (all integers little-endian):
//!
//! ```text
//! offset  size      field
//! 0       8         magic "SUBSELF1"
//! 8       2         version (u16) = 1
//! 10      8         n (u64)
//! 18      8         d (u64)
//! 26      4*n*d     payload, f32 row-major
//! 26+4nd  4         CRC32 of the payload bytes
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"SUBSELF1";
pub const FORMAT_VERSION: u16 = 1;
pub const HEADER_LEN: usize = 26;

/// Dense `n × d` matrix of finite `f32` features, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    n: usize,
    d: usize,
    values: Vec<f32>,
}

impl FeatureMatrix {
    pub fn new(n: usize, d: usize, values: Vec<f32>) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::validation(format!(
                "feature matrix must be non-empty, got {n}x{d}"
            )));
        }
        if values.len() != n * d {
            return Err(Error::validation(format!(
                "expected {} values for a {n}x{d} matrix, got {}",
                n * d,
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::validation(format!(
                "non-finite feature at row {}, column {}",
                pos / d,
                pos % d
            )));
        }
        Ok(Self { n, d, values })
    }

    pub fn from_rows(rows: &[Vec<f32>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if let Some(i) = rows.iter().position(|r| r.len() != d) {
            return Err(Error::validation(format!(
                "row {i} has {} columns, expected {d}",
                rows[i].len()
            )));
        }
        Self::new(rows.len(), d, rows.concat())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f32] {
        &self.values[i * self.d..(i + 1) * self.d]
    }

    /// Copies the given rows, in order, into a new matrix.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        let mut values = Vec::with_capacity(rows.len() * self.d);
        for &r in rows {
            if r >= self.n {
                return Err(Error::validation(format!(
                    "row index {r} out of range for {} rows",
                    self.n
                )));
            }
            values.extend_from_slice(self.row(r));
        }
        Self::new(rows.len(), self.d, values)
    }
}

/// Class labels in `[0, C)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelVector {
    labels: Vec<usize>,
    num_classes: usize,
}

impl LabelVector {
    /// Builds a label vector with `C = 1 + max(label)`.
    pub fn new(labels: Vec<usize>) -> Result<Self> {
        let max = labels
            .iter()
            .copied()
            .max()
            .ok_or_else(|| Error::validation("label vector is empty"))?;
        Ok(Self {
            labels,
            num_classes: max + 1,
        })
    }

    pub fn with_classes(labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::validation("label vector is empty"));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(Error::validation(format!(
                "label {bad} out of range for {num_classes} classes"
            )));
        }
        Ok(Self {
            labels,
            num_classes,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.labels
    }

    pub fn get(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    features: FeatureMatrix,
    labels: LabelVector,
}

impl LabeledDataset {
    /// Pairs features with labels. Every class in `[0, C)` must be observed.
    pub fn new(features: FeatureMatrix, labels: LabelVector) -> Result<Self> {
        if features.n() != labels.len() {
            return Err(Error::validation(format!(
                "{} feature rows but {} labels",
                features.n(),
                labels.len()
            )));
        }
        if let Some(missing) = labels.class_counts().iter().position(|&c| c == 0) {
            return Err(Error::validation(format!(
                "class {missing} has no instances (C = {})",
                labels.num_classes()
            )));
        }
        Ok(Self { features, labels })
    }

    pub fn features(&self) -> &FeatureMatrix {
        &self.features
    }

    pub fn labels(&self) -> &LabelVector {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.features.n()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn num_classes(&self) -> usize {
        self.labels.num_classes()
    }

    pub fn dim(&self) -> usize {
        self.features.d()
    }

    /// Rows `idx` in order. The class count is inherited, so a subset may leave
    /// some classes unobserved.
    pub fn subset(&self, idx: &[usize]) -> Result<Self> {
        let features = self.features.select_rows(idx)?;
        let labels = LabelVector::with_classes(
            idx.iter().map(|&i| self.labels.get(i)).collect(),
            self.labels.num_classes(),
        )?;
        Ok(Self { features, labels })
    }
}

pub fn save_features(m: &FeatureMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut payload = Vec::with_capacity(m.values.len() * 4);
    for v in &m.values {
        payload.extend_from_slice(&v.to_le_bytes());
    }
    let mut buf = Vec::with_capacity(HEADER_LEN + payload.len() + 4);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(m.n as u64).to_le_bytes());
    buf.extend_from_slice(&(m.d as u64).to_le_bytes());
    buf.extend_from_slice(&payload);
    buf.extend_from_slice(&crc32fast::hash(&payload).to_le_bytes());

    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&buf).map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Reads a feature file. Paths ending in `.csv` are parsed as headerless CSV,
/// everything else as the binary format.
pub fn load_features(path: impl AsRef<Path>) -> Result<FeatureMatrix> {
    let path = path.as_ref();
    let is_csv = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        parse_features_csv(&text)
    } else {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        decode_features(&bytes)
    }
}

pub fn decode_features(bytes: &[u8]) -> Result<FeatureMatrix> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format(format!(
            "file is {} bytes, shorter than the {HEADER_LEN}-byte header",
            bytes.len()
        )));
    }
    if &bytes[..8] != MAGIC {
        return Err(Error::Format(format!(
            "bad magic {:?}",
            String::from_utf8_lossy(&bytes[..8])
        )));
    }
    let version = u16::from_le_bytes([bytes[8], bytes[9]]);
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let n = u64::from_le_bytes(bytes[10..18].try_into().unwrap());
    let d = u64::from_le_bytes(bytes[18..26].try_into().unwrap());

    let expected = n
        .checked_mul(d)
        .and_then(|nd| nd.checked_mul(4))
        .and_then(|p| p.checked_add(4))
        .ok_or_else(|| Error::Format(format!("declared size {n}x{d} overflows")))?;
    let actual = (bytes.len() - HEADER_LEN) as u64;
    if actual != expected {
        return Err(Error::Truncated { expected, actual });
    }

    let payload = &bytes[HEADER_LEN..bytes.len() - 4];
    let stored = u32::from_le_bytes(bytes[bytes.len() - 4..].try_into().unwrap());
    let computed = crc32fast::hash(payload);
    if stored != computed {
        return Err(Error::Format(format!(
            "payload checksum mismatch: stored {stored:#010x}, computed {computed:#010x}"
        )));
    }

    let values = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    FeatureMatrix::new(n as usize, d as usize, values)
}

pub fn parse_features_csv(text: &str) -> Result<FeatureMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let mut values = Vec::new();
    let mut d = 0;
    let mut n = 0;
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(n + 1, |p| p.line() as usize);
        if n == 0 {
            d = record.len();
        } else if record.len() != d {
            return Err(Error::Parse {
                line,
                message: format!("expected {d} columns, found {}", record.len()),
            });
        }
        for field in &record {
            let v: f32 = field.parse().map_err(|_| Error::Parse {
                line,
                message: format!("not a number: {field:?}"),
            })?;
            values.push(v);
        }
        n += 1;
    }
    FeatureMatrix::new(n, d, values)
}

pub fn load_labels(path: impl AsRef<Path>) -> Result<LabelVector> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_labels(&text)
}

pub fn parse_labels(text: &str) -> Result<LabelVector> {
    let mut labels = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        let label = line.trim().parse::<usize>().map_err(|_| Error::Parse {
            line: i + 1,
            message: format!("not a non-negative integer: {line:?}"),
        })?;
        labels.push(label);
    }
    LabelVector::new(labels)
}

pub fn save_labels(labels: &LabelVector, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::with_capacity(labels.len() * 3);
    for l in labels.as_slice() {
        out.push_str(&l.to_string());
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub holdout_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
}

/// `round(x)` with halves rounded up.
pub(crate) fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor().max(0.0) as usize
}

/// Seeded partition into `(train, holdout)`. The holdout has `round(n·f)`
/// instances; stratified splits allocate that total across classes by largest
/// remainder so each class is within one instance of its exact share.
pub fn split_indices(labels: &LabelVector, spec: &SplitSpec) -> Result<(Vec<usize>, Vec<usize>)> {
    let f = spec.holdout_fraction;
    if !(f > 0.0 && f < 1.0) {
        return Err(Error::validation(format!(
            "holdout fraction must lie in (0, 1), got {f}"
        )));
    }
    let n = labels.len();
    let total = round_half_up(n as f64 * f);
    if total == 0 || total >= n {
        return Err(Error::validation(format!(
            "holdout fraction {f} leaves an empty side for n = {n}"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut holdout = Vec::with_capacity(total);
    if spec.stratified {
        let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); labels.num_classes()];
        for (i, &l) in labels.as_slice().iter().enumerate() {
            by_class[l].push(i);
        }
        let quotas: Vec<f64> = by_class.iter().map(|m| m.len() as f64 * f).collect();
        let mut take: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
        let assigned: usize = take.iter().sum();
        let mut order: Vec<usize> = (0..quotas.len()).collect();
        order.sort_by(|&a, &b| {
            let fa = quotas[a] - quotas[a].floor();
            let fb = quotas[b] - quotas[b].floor();
            fb.total_cmp(&fa).then(a.cmp(&b))
        });
        for &c in order.iter().take(total.saturating_sub(assigned)) {
            if take[c] < by_class[c].len() {
                take[c] += 1;
            }
        }
        for (members, &k) in by_class.iter_mut().zip(&take) {
            members.shuffle(&mut rng);
            holdout.extend_from_slice(&members[..k]);
        }
    } else {
        let mut all: Vec<usize> = (0..n).collect();
        all.shuffle(&mut rng);
        holdout.extend_from_slice(&all[..total]);
    }
    holdout.sort_unstable();

    let mut in_holdout = vec![false; n];
    for &i in &holdout {
        in_holdout[i] = true;
    }
    let train: Vec<usize> = (0..n).filter(|&i| !in_holdout[i]).collect();
    if train.is_empty() || holdout.is_empty() {
        return Err(Error::validation("split leaves an empty side"));
    }
    Ok((train, holdout))
}

pub fn split(ds: &LabeledDataset, spec: &SplitSpec) -> Result<(LabeledDataset, LabeledDataset)> {
    let (train, holdout) = split_indices(ds.labels(), spec)?;
    Ok((ds.subset(&train)?, ds.subset(&holdout)?))
}

/// Balanced Gaussian mixture: class means are `sep · N(0, I)`, samples add
/// unit isotropic noise, and labels cycle `0, 1, …, C-1`.
pub fn gen_synthetic(
    n: usize,
    d: usize,
    classes: usize,
    sep: f64,
    seed: u64,
) -> Result<LabeledDataset> {
    if classes == 0 || n < classes {
        return Err(Error::validation(format!(
            "need n >= C >= 1, got n = {n}, C = {classes}"
        )));
    }
    if d == 0 {
        return Err(Error::validation("dimension must be at least 1"));
    }
    if !(sep > 0.0 && sep.is_finite()) {
        return Err(Error::validation(format!(
            "separation must be positive, got {sep}"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let means: Vec<f64> = (0..classes * d)
        .map(|_| sep * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let mut values = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let c = i % classes;
        labels.push(c);
        for j in 0..d {
            let noise: f64 = rng.sample(StandardNormal);
            values.push((means[c * d + j] + noise) as f32);
        }
    }
    LabeledDataset::new(
        FeatureMatrix::new(n, d, values)?,
        LabelVector::with_classes(labels, classes)?,
    )
}
