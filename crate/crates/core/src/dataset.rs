//! Labeled datasets: the two-moons generator, IDX and CSV loaders, and small
//! utilities (splits, subsampling, min-max scaling).

use std::f64::consts::PI;
use std::path::Path;

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    features: Array2<f64>,
    labels: Vec<usize>,
    num_classes: usize,
    bounds: Vec<(f64, f64)>,
}

impl LabeledDataset {
    /// `num_classes` defaults to `max(label) + 1`.
    pub fn new(features: Array2<f64>, labels: Vec<usize>, num_classes: Option<usize>) -> Result<Self> {
        if features.nrows() == 0 || labels.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if features.nrows() != labels.len() {
            return Err(Error::Dimension(format!(
                "{} feature rows but {} labels",
                features.nrows(),
                labels.len()
            )));
        }
        if features.ncols() == 0 {
            return Err(Error::Dimension("zero feature columns".into()));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("non-finite feature value".into()));
        }
        let max_label = labels.iter().copied().max().unwrap_or(0);
        let num_classes = num_classes.unwrap_or(max_label + 1);
        if max_label >= num_classes {
            return Err(Error::Config(format!(
                "label {max_label} outside [0, {num_classes})"
            )));
        }
        let bounds = features
            .axis_iter(Axis(1))
            .map(|col| {
                col.iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
            })
            .collect();
        Ok(Self {
            features,
            labels,
            num_classes,
            bounds,
        })
    }

    pub fn features(&self) -> ArrayView2<'_, f64> {
        self.features.view()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    /// Per-dimension `(min, max)` over all points.
    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Rows at the given indices, in order.
    pub fn select(&self, rows: &[usize]) -> Result<Self> {
        let features = self.features.select(Axis(0), rows);
        let labels = rows.iter().map(|&r| self.labels[r]).collect();
        Self::new(features, labels, Some(self.num_classes))
    }

    /// The dataset repeated `times` times (row order preserved within each copy).
    pub fn repeated(&self, times: usize) -> Result<Self> {
        let rows: Vec<usize> = (0..times).flat_map(|_| 0..self.len()).collect();
        self.select(&rows)
    }

    /// Uniform subsample without replacement of at most `cap` rows.
    pub fn subsample(&self, cap: usize, seed: u64) -> Result<Self> {
        if cap >= self.len() {
            return Ok(self.clone());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows: Vec<usize> = (0..self.len()).collect();
        rows.shuffle(&mut rng);
        rows.truncate(cap);
        rows.sort_unstable();
        self.select(&rows)
    }

    /// Shuffled holdout split; returns `(train, test)`.
    pub fn split(&self, test_fraction: f64, seed: u64) -> Result<(Self, Self)> {
        if !(0.0..1.0).contains(&test_fraction) || test_fraction == 0.0 {
            return Err(Error::Config(format!("test fraction {test_fraction} not in (0, 1)")));
        }
        let n_test = ((self.len() as f64) * test_fraction).round() as usize;
        if n_test == 0 || n_test >= self.len() {
            return Err(Error::Config("split leaves an empty side".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows: Vec<usize> = (0..self.len()).collect();
        rows.shuffle(&mut rng);
        let (test, train) = rows.split_at(n_test);
        Ok((self.select(train)?, self.select(test)?))
    }

    pub fn with_features(&self, features: Array2<f64>) -> Result<Self> {
        Self::new(features, self.labels.clone(), Some(self.num_classes))
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
        let mut header: Vec<String> = (0..self.dim()).map(|j| format!("x{j}")).collect();
        header.push("label".into());
        w.write_record(&header).map_err(|e| csv_err(path, e))?;
        for (row, &label) in self.features.outer_iter().zip(&self.labels) {
            let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            rec.push(label.to_string());
            w.write_record(&rec).map_err(|e| csv_err(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

fn csv_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

/// Two interleaving half circles with Gaussian noise, laid out like the common
/// `make_moons` generator: `n/2` points on the upper arc `(cos t, sin t)`, the rest on
/// the lower arc `(1 - cos t, 0.5 - sin t)`, with `t` evenly spaced over `[0, π]`.
/// Rows are shuffled; the shuffle and the noise are seeded.
pub fn make_moons(n: usize, noise: f64, seed: u64) -> Result<LabeledDataset> {
    if n < 2 {
        return Err(Error::Config(format!("make_moons needs n >= 2, got {n}")));
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(Error::Config(format!("noise must be non-negative, got {noise}")));
    }
    let n_out = n / 2;
    let n_in = n - n_out;
    let arc = |count: usize, i: usize| {
        if count == 1 {
            0.0
        } else {
            PI * i as f64 / (count - 1) as f64
        }
    };
    let mut points: Vec<([f64; 2], usize)> = Vec::with_capacity(n);
    for i in 0..n_out {
        let t = arc(n_out, i);
        points.push(([t.cos(), t.sin()], 0));
    }
    for i in 0..n_in {
        let t = arc(n_in, i);
        points.push(([1.0 - t.cos(), 0.5 - t.sin()], 1));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    points.shuffle(&mut rng);
    let gauss = Normal::new(0.0, 1.0).expect("unit normal");
    let mut features = Array2::zeros((n, 2));
    let mut labels = Vec::with_capacity(n);
    for (r, (p, label)) in points.into_iter().enumerate() {
        for c in 0..2 {
            let eps = if noise > 0.0 { noise * gauss.sample(&mut rng) } else { 0.0 };
            features[[r, c]] = p[c] + eps;
        }
        labels.push(label);
    }
    LabeledDataset::new(features, labels, Some(2))
}

/// Per-feature affine map of the given bounds onto `[-1, 1]`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MinMaxScaler {
    pub bounds: Vec<(f64, f64)>,
}

impl MinMaxScaler {
    pub fn fit(data: &LabeledDataset) -> Self {
        Self {
            bounds: data.bounds().to_vec(),
        }
    }

    pub fn transform(&self, data: &LabeledDataset) -> Result<LabeledDataset> {
        if data.dim() != self.bounds.len() {
            return Err(Error::Dimension("scaler dimension".into()));
        }
        let mut f = data.features().to_owned();
        for (mut col, &(lo, hi)) in f.axis_iter_mut(Axis(1)).zip(&self.bounds) {
            let span = hi - lo;
            col.mapv_inplace(|v| if span > 0.0 { 2.0 * (v - lo) / span - 1.0 } else { 0.0 });
        }
        data.with_features(f)
    }
}

const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

struct IdxReader<'a> {
    path: &'a Path,
    bytes: &'a [u8],
    pos: usize,
}

impl IdxReader<'_> {
    fn err(&self, offset: usize, message: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.to_path_buf(),
            offset: offset as u64,
            message: message.into(),
        }
    }

    fn take(&mut self, len: usize, what: &str) -> Result<&[u8]> {
        if self.bytes.len() < self.pos + len {
            return Err(self.err(
                self.bytes.len(),
                format!("truncated file while reading {what} (needed {len} bytes at {})", self.pos),
            ));
        }
        let slice = &self.bytes[self.pos..self.pos + len];
        self.pos += len;
        Ok(slice)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        let b = self.take(4, what)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

/// IDX (MNIST container) images + labels. Pixels are scaled to `[0, 1]`.
pub fn load_idx(images: &Path, labels: &Path) -> Result<LabeledDataset> {
    let image_bytes = read_file(images)?;
    let mut r = IdxReader {
        path: images,
        bytes: &image_bytes,
        pos: 0,
    };
    let magic = r.u32("magic number")?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(r.err(0, format!("bad image magic {magic:#010x}")));
    }
    let n = r.u32("image count")? as usize;
    let rows = r.u32("row count")? as usize;
    let cols = r.u32("column count")? as usize;
    let d = rows * cols;
    let pixels = r.take(n * d, "pixel data")?;
    let features = Array2::from_shape_fn((n, d), |(i, j)| f64::from(pixels[i * d + j]) / 255.0);

    let label_bytes = read_file(labels)?;
    let mut r = IdxReader {
        path: labels,
        bytes: &label_bytes,
        pos: 0,
    };
    let magic = r.u32("magic number")?;
    if magic != IDX_LABELS_MAGIC {
        return Err(r.err(0, format!("bad label magic {magic:#010x}")));
    }
    let m = r.u32("label count")? as usize;
    if m != n {
        return Err(r.err(4, format!("label count {m} does not match image count {n}")));
    }
    let label_vec = r.take(m, "label data")?.iter().map(|&b| b as usize).collect();
    LabeledDataset::new(features, label_vec, None)
}

/// Numeric CSV with a header row; `label_column` (default: the last) holds the integer
/// class, the remaining columns are features in file order.
pub fn load_csv(path: &Path, label_column: Option<usize>) -> Result<LabeledDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    let header = reader.headers().map_err(|e| csv_err(path, e))?.clone();
    if header.is_empty() || header.iter().all(|h| h.trim().parse::<f64>().is_ok()) {
        return Err(csv_err(path, "missing header row"));
    }
    let label_column = label_column.unwrap_or(header.len() - 1);
    if label_column >= header.len() {
        return Err(csv_err(
            path,
            format!("label column {label_column} but only {} columns", header.len()),
        ));
    }
    let width = header.len();
    let mut flat = Vec::new();
    let mut labels = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = i + 2;
        for (c, cell) in rec.iter().enumerate() {
            let cell = cell.trim();
            if c == label_column {
                labels.push(parse_label(cell).ok_or_else(|| {
                    csv_err(path, format!("line {line}: label {cell:?} is not a class index"))
                })?);
            } else {
                let v: f64 = cell.parse().map_err(|_| {
                    csv_err(path, format!("line {line}, column {c}: non-numeric cell {cell:?}"))
                })?;
                flat.push(v);
            }
        }
    }
    if labels.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let features = Array2::from_shape_vec((labels.len(), width - 1), flat)
        .map_err(|e| csv_err(path, e))?;
    LabeledDataset::new(features, labels, None)
}

fn parse_label(cell: &str) -> Option<usize> {
    if let Ok(v) = cell.parse::<usize>() {
        return Some(v);
    }
    let v: f64 = cell.parse().ok()?;
    (v >= 0.0 && v.fract() == 0.0 && v < 1e9).then_some(v as usize)
}
