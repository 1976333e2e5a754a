//! Dataset representation, CSV ingestion with missing-value dropping, the
//! synthetic heteroscedastic generator, and deterministic train/test
//! splitting.
//!
//! All randomness flows through ChaCha12 keyed by the caller's seed, with
//! one stream per purpose (feature draws, noise draws, shuffling), and
//! normal variates come from the Marsaglia polar transform. Both choices
//! are pinned so the same seed reproduces the same dataset anywhere.

use std::path::Path;

use ndarray::Array2;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};

/// Stream ids for the per-purpose ChaCha12 streams.
const FEATURE_STREAM: u64 = 0;
const NOISE_STREAM: u64 = 1;
const SHUFFLE_STREAM: u64 = 2;

/// A feature matrix and target vector with column names; every model in
/// the crate consumes one of these. Construction validates that all
/// entries are finite, both dimensions are nonzero, and names are unique.
#[derive(Debug, Clone)]
pub struct Dataset {
    features: Array2<f64>,
    target: Vec<f64>,
    feature_names: Vec<String>,
    target_name: String,
}

impl Dataset {
    pub fn new(
        features: Array2<f64>,
        target: Vec<f64>,
        feature_names: Vec<String>,
        target_name: String,
    ) -> Result<Self> {
        let (n, d) = (features.nrows(), features.ncols());
        if n == 0 {
            return Err(Error::EmptyData);
        }
        if d == 0 {
            return Err(Error::InvalidInput("dataset needs at least one feature".into()));
        }
        if target.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: target.len(),
            });
        }
        if feature_names.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: feature_names.len(),
            });
        }
        for (i, name) in feature_names.iter().enumerate() {
            if feature_names[..i].contains(name) {
                return Err(Error::InvalidInput(format!(
                    "duplicate feature name {name:?}"
                )));
            }
        }
        crate::solver::ensure_finite_matrix(&features)?;
        crate::solver::ensure_finite(&target)?;
        Ok(Self {
            features,
            target,
            feature_names,
            target_name,
        })
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn target_name(&self) -> &str {
        &self.target_name
    }

    pub fn n_rows(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    /// New dataset holding the given rows, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::EmptyData);
        }
        let features = self.features.select(ndarray::Axis(0), indices);
        let target = indices.iter().map(|&i| self.target[i]).collect();
        Ok(Self {
            features,
            target,
            feature_names: self.feature_names.clone(),
            target_name: self.target_name.clone(),
        })
    }
}

/// Train/test split parameters: the held-out fraction and the shuffle seed.
#[derive(Debug, Clone, Copy)]
pub struct SplitSpec {
    pub test_fraction: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(test_fraction: f64, seed: u64) -> Result<Self> {
        if !(test_fraction.is_finite() && test_fraction > 0.0 && test_fraction < 1.0) {
            return Err(Error::InvalidInput(format!(
                "test_fraction must lie in (0, 1), got {test_fraction}"
            )));
        }
        Ok(Self {
            test_fraction,
            seed,
        })
    }
}

/// Standard normal stream: ChaCha12 uniforms pushed through the Marsaglia
/// polar method. The polar transform yields pairs; the second value is
/// cached for the next call.
struct NormalStream {
    rng: ChaCha12Rng,
    cached: Option<f64>,
}

impl NormalStream {
    fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(stream.into());
        Self { rng, cached: None }
    }

    fn next_uniform(&mut self) -> f64 {
        // 53 random bits scaled into [0, 1).
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    fn next_normal(&mut self) -> f64 {
        if let Some(v) = self.cached.take() {
            return v;
        }
        loop {
            let u = 2.0 * self.next_uniform() - 1.0;
            let v = 2.0 * self.next_uniform() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let factor = (-2.0 * s.ln() / s).sqrt();
                self.cached = Some(v * factor);
                return u * factor;
            }
        }
    }
}

/// Unbiased bounded draw by rejection on the modulo zone.
fn next_below(rng: &mut ChaCha12Rng, bound: u64) -> u64 {
    debug_assert!(bound > 0);
    let zone = u64::MAX - u64::MAX % bound;
    loop {
        let v = rng.next_u64();
        if v < zone {
            return v % bound;
        }
    }
}

/// Seeded Fisher-Yates permutation of `0..n`.
fn shuffled_indices(n: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(SHUFFLE_STREAM.into());
    let mut idx: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = next_below(&mut rng, (i + 1) as u64) as usize;
        idx.swap(i, j);
    }
    idx
}

/// Synthetic single-feature dataset: `x` standard normal, independent
/// standard normal noise `e`, target `(3x + e)^2`. Deterministic in the
/// seed; the feature and noise draws come from separate streams.
pub fn generate_synthetic(n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::EmptyData);
    }
    let mut xs = NormalStream::new(seed, FEATURE_STREAM);
    let mut es = NormalStream::new(seed, NOISE_STREAM);
    let mut features = Vec::with_capacity(n);
    let mut target = Vec::with_capacity(n);
    for _ in 0..n {
        let x = xs.next_normal();
        let e = es.next_normal();
        features.push(x);
        target.push((3.0 * x + e).powi(2));
    }
    let features = Array2::from_shape_vec((n, 1), features).expect("shape matches");
    Dataset::new(features, target, vec!["x".to_string()], "y".to_string())
}

/// A loaded dataset plus the row counts before and after missing-value
/// dropping.
#[derive(Debug)]
pub struct CsvLoad {
    pub dataset: Dataset,
    /// Data rows present in the file (header excluded).
    pub rows_before: usize,
    /// Rows that survived missing-value dropping.
    pub rows_after: usize,
}

fn is_missing_token(cell: &str) -> bool {
    cell.is_empty() || cell.eq_ignore_ascii_case("na") || cell.eq_ignore_ascii_case("nan")
}

/// Load a numeric CSV with a header row. Cells are trimmed; empty, "NA",
/// and "NaN" cells (case-insensitive) count as missing. When
/// `drop_missing` is set, any row with a missing or unparseable cell is
/// dropped; otherwise the first bad cell is a parse error carrying its
/// row/column location.
pub fn load_csv(path: &Path, target_column: &str, drop_missing: bool) -> Result<CsvLoad> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => Error::Io {
                path: path.display().to_string(),
                source: std::io::Error::other(e.to_string()),
            },
            _ => Error::InvalidInput(e.to_string()),
        })?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::InvalidInput(format!("bad header: {e}")))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let target_idx = headers
        .iter()
        .position(|h| h == target_column)
        .ok_or_else(|| Error::MissingColumn {
            column: target_column.to_string(),
        })?;
    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != target_idx)
        .map(|(_, h)| h.clone())
        .collect();

    let mut rows_before = 0usize;
    let mut flat = Vec::new();
    let mut target = Vec::new();
    for (rec_idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::InvalidInput(format!("csv read: {e}")))?;
        rows_before += 1;
        // 1-based file row, counting the header line.
        let file_row = rec_idx + 2;
        let mut parsed = Vec::with_capacity(headers.len());
        let mut bad_cell: Option<(usize, String)> = None;
        for (col, cell) in record.iter().enumerate() {
            let cell = cell.trim();
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() && !is_missing_token(cell) => parsed.push(v),
                _ => {
                    bad_cell = Some((col, cell.to_string()));
                    break;
                }
            }
        }
        if let Some((col, value)) = bad_cell {
            if drop_missing {
                continue;
            }
            return Err(Error::ParseCell {
                row: file_row,
                column: headers.get(col).cloned().unwrap_or_default(),
                value,
            });
        }
        if parsed.len() != headers.len() {
            return Err(Error::InvalidInput(format!(
                "row {file_row}: expected {} fields, got {}",
                headers.len(),
                parsed.len()
            )));
        }
        target.push(parsed[target_idx]);
        for (i, v) in parsed.into_iter().enumerate() {
            if i != target_idx {
                flat.push(v);
            }
        }
    }

    let rows_after = target.len();
    let d = feature_names.len();
    let features = Array2::from_shape_vec((rows_after, d), flat)
        .map_err(|e| Error::InvalidInput(e.to_string()))?;
    let dataset = Dataset::new(features, target, feature_names, target_column.to_string())?;
    Ok(CsvLoad {
        dataset,
        rows_before,
        rows_after,
    })
}

/// Write a dataset back to CSV (features in order, target last). Floats
/// are printed with the shortest representation that round-trips, so a
/// write/load cycle preserves every value.
pub fn write_csv(dataset: &Dataset, path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: std::io::Error::other(e.to_string()),
    })?;
    let mut header: Vec<&str> = dataset.feature_names().iter().map(|s| s.as_str()).collect();
    header.push(dataset.target_name());
    let io_err = |e: csv::Error| Error::Io {
        path: path.display().to_string(),
        source: std::io::Error::other(e.to_string()),
    };
    writer.write_record(&header).map_err(io_err)?;
    for (row, y) in dataset.features().rows().into_iter().zip(dataset.target()) {
        let mut cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        cells.push(y.to_string());
        writer.write_record(&cells).map_err(io_err)?;
    }
    writer.flush().map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    Ok(())
}

/// Seeded shuffle, then the first `ceil((1 - f) * n)` rows train and the
/// remainder test. Both partitions are always nonempty.
pub fn train_test_split(dataset: &Dataset, spec: SplitSpec) -> Result<(Dataset, Dataset)> {
    let n = dataset.n_rows();
    if n < 2 {
        return Err(Error::InvalidInput(
            "need at least 2 rows to split".into(),
        ));
    }
    SplitSpec::new(spec.test_fraction, spec.seed)?;
    let order = shuffled_indices(n, spec.seed);
    let n_train = (((1.0 - spec.test_fraction) * n as f64).ceil() as usize).clamp(1, n - 1);
    let train = dataset.select_rows(&order[..n_train])?;
    let test = dataset.select_rows(&order[n_train..])?;
    Ok((train, test))
}
