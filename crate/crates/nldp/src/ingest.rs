//! CSV ingestion and preprocessing of real datasets.
//!
//! Preprocessing order: declared columns are dropped at load time, the
//! label is binarized, rows are shuffled with a seeded stream and split,
//! features are standardized with train-split statistics, and finally all
//! rows are scaled by one global factor so the largest train row has ℓ1
//! norm `r_target`. Test rows still above the bound are shrunk one by one.
use std::fs;
use std::path::{Path, PathBuf};

use nldp_core::mechanism::DataBounds;
use nldp_core::pipeline::{Dataset, Features, Provenance};
use nldp_core::seed::rng_for;
use rand::seq::SliceRandom;
use serde::Deserialize;

use crate::error::{Error, Result};

/// Stream tag for the row shuffle.
const SHUFFLE_STREAM: u64 = 0x1e57;

/// Name of the label column in dataset files written by [`write_dataset`].
pub const LABEL_COLUMN: &str = "y";

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IngestSpec {
    pub path: PathBuf,
    pub label_column: String,
    pub positive_class: String,
    #[serde(default)]
    pub drop_columns: Vec<String>,
    #[serde(default = "default_r_target")]
    pub r_target: f64,
    #[serde(default)]
    pub train_fraction: Option<f64>,
    #[serde(default)]
    pub train_count: Option<usize>,
    /// Keep only this many rows (after shuffling) before splitting.
    #[serde(default)]
    pub sample_count: Option<usize>,
    #[serde(default)]
    pub seed: u64,
}

fn default_r_target() -> f64 {
    1.0
}

impl IngestSpec {
    /// Parses a TOML spec. A relative `path` is resolved against `base`.
    pub fn from_toml(text: &str, base: Option<&Path>) -> Result<Self> {
        let mut spec: IngestSpec = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        if let Some(base) = base {
            if spec.path.is_relative() {
                spec.path = base.join(&spec.path);
            }
        }
        spec.check()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text, path.parent())
    }

    pub fn check(&self) -> Result<()> {
        if !(self.r_target > 0.0 && self.r_target.is_finite()) {
            return Err(Error::config("r_target must be a positive finite number"));
        }
        match (self.train_fraction, self.train_count) {
            (Some(_), Some(_)) => Err(Error::config("give train_fraction or train_count, not both")),
            (Some(f), None) if !(0.0..=1.0).contains(&f) => Err(Error::config("train_fraction must lie in [0, 1]")),
            _ => Ok(()),
        }
    }
}

/// Parsed CSV: retained numeric feature columns plus the raw label column.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub path: PathBuf,
    pub feature_names: Vec<String>,
    /// Row-major, `len() × feature_names.len()`.
    pub features: Vec<f64>,
    pub labels: Vec<String>,
}

impl RawTable {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn width(&self) -> usize {
        self.feature_names.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let p = self.width();
        &self.features[i * p..(i + 1) * p]
    }
}

fn parse_number(path: &Path, row: usize, column: &str, value: &str) -> Result<f64> {
    let v = value.trim();
    v.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| Error::Parse {
        path: path.to_path_buf(),
        row,
        column: column.to_string(),
        value: value.to_string(),
    })
}

/// Reads the CSV named by `spec`. Rows are numbered from 1, the header
/// being row 0.
pub fn load_csv(spec: &IngestSpec) -> Result<RawTable> {
    let path = spec.path.as_path();
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path).map_err(|e| Error::csv(path, e))?;
    let header: Vec<String> =
        reader.headers().map_err(|e| Error::csv(path, e))?.iter().map(|h| h.trim().to_string()).collect();
    let find = |name: &str| {
        header.iter().position(|h| h == name).ok_or_else(|| Error::MissingColumn {
            path: path.to_path_buf(),
            column: name.to_string(),
        })
    };
    let label_idx = find(&spec.label_column)?;
    let mut dropped = vec![false; header.len()];
    for name in &spec.drop_columns {
        dropped[find(name)?] = true;
    }
    let keep: Vec<usize> = (0..header.len()).filter(|&j| j != label_idx && !dropped[j]).collect();

    let mut features = Vec::new();
    let mut labels = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::csv(path, e))?;
        let row = i + 1;
        for &j in &keep {
            let cell = record.get(j).ok_or_else(|| Error::Csv {
                path: path.to_path_buf(),
                message: format!("row {row} is missing column {:?}", header[j]),
            })?;
            features.push(parse_number(path, row, &header[j], cell)?);
        }
        let label = record.get(label_idx).ok_or_else(|| Error::Csv {
            path: path.to_path_buf(),
            message: format!("row {row} is missing the label"),
        })?;
        labels.push(label.trim().to_string());
    }
    Ok(RawTable {
        path: path.to_path_buf(),
        feature_names: keep.iter().map(|&j| header[j].clone()).collect(),
        features,
        labels,
    })
}

fn is_positive(label: &str, positive: &str) -> bool {
    let positive = positive.trim();
    if label == positive {
        return true;
    }
    matches!((label.parse::<f64>(), positive.parse::<f64>()), (Ok(a), Ok(b)) if a == b)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Preprocessed {
    pub train: Dataset,
    pub test: Dataset,
    pub feature_names: Vec<String>,
    /// Features removed for having zero variance on the train split.
    pub dropped_features: Vec<String>,
    pub test_rows_rescaled: usize,
    /// Source row (0-based, header excluded) of each train and test row.
    pub train_rows: Vec<usize>,
    pub test_rows: Vec<usize>,
    /// Global factor applied after standardization.
    pub scale: f64,
}

pub fn preprocess(table: &RawTable, spec: &IngestSpec) -> Result<Preprocessed> {
    spec.check()?;
    let mut order: Vec<usize> = (0..table.len()).collect();
    order.shuffle(&mut rng_for(spec.seed, &[SHUFFLE_STREAM]));
    if let Some(k) = spec.sample_count {
        if k > order.len() {
            return Err(Error::config(format!("sample_count {k} exceeds the {} available rows", order.len())));
        }
        order.truncate(k);
    }
    let total = order.len();
    let n_train = match (spec.train_count, spec.train_fraction) {
        (Some(k), _) => k,
        (None, Some(f)) => (f * total as f64).round() as usize,
        (None, None) => total,
    };
    if n_train > total {
        return Err(Error::config(format!("train_count {n_train} exceeds the {total} available rows")));
    }
    if n_train == 0 {
        return Err(Error::config("the train split is empty"));
    }
    let (train_rows, test_rows) = order.split_at(n_train);

    let width = table.width();
    let mut mean = vec![0.0; width];
    for &i in train_rows {
        for (m, v) in mean.iter_mut().zip(table.row(i)) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n_train as f64);
    let mut var = vec![0.0; width];
    for &i in train_rows {
        for ((s, v), m) in var.iter_mut().zip(table.row(i)).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    let sd: Vec<f64> = var.iter().map(|s| (s / n_train as f64).sqrt()).collect();
    let kept: Vec<usize> = (0..width).filter(|&j| sd[j] > 0.0).collect();
    let dropped_features: Vec<String> =
        (0..width).filter(|&j| sd[j] <= 0.0).map(|j| table.feature_names[j].clone()).collect();
    if kept.is_empty() {
        return Err(Error::config("every feature has zero variance on the train split"));
    }

    let standardize = |rows: &[usize]| -> Vec<f64> {
        let mut out = Vec::with_capacity(rows.len() * kept.len());
        for &i in rows {
            let x = table.row(i);
            out.extend(kept.iter().map(|&j| (x[j] - mean[j]) / sd[j]));
        }
        out
    };
    let p = kept.len();
    let mut train_x = standardize(train_rows);
    let mut test_x = standardize(test_rows);
    let l1 = |row: &[f64]| row.iter().map(|v| v.abs()).sum::<f64>();
    let max_l1 = train_x.chunks_exact(p).map(l1).fold(0.0, f64::max);
    let scale = spec.r_target / max_l1;
    train_x.iter_mut().for_each(|v| *v *= scale);
    let mut test_rows_rescaled = 0;
    for row in test_x.chunks_exact_mut(p) {
        row.iter_mut().for_each(|v| *v *= scale);
        let norm = l1(row);
        if norm > spec.r_target {
            let shrink = spec.r_target / norm;
            row.iter_mut().for_each(|v| *v *= shrink);
            test_rows_rescaled += 1;
        }
    }

    let labels = |rows: &[usize]| -> Vec<f64> {
        rows.iter().map(|&i| if is_positive(&table.labels[i], &spec.positive_class) { 1.0 } else { 0.0 }).collect()
    };
    let dataset = |x: Vec<f64>, rows: &[usize]| -> Result<Dataset> {
        Ok(Dataset {
            features: Features::new(p, x)?,
            labels: Some(labels(rows)),
            bounds: DataBounds::glm(spec.r_target),
            provenance: Provenance::Ingested,
        })
    };
    Ok(Preprocessed {
        train: dataset(train_x, train_rows)?,
        test: dataset(test_x, test_rows)?,
        feature_names: kept.iter().map(|&j| table.feature_names[j].clone()).collect(),
        dropped_features,
        test_rows_rescaled,
        train_rows: train_rows.to_vec(),
        test_rows: test_rows.to_vec(),
        scale,
    })
}

/// Writes features (and labels, when present) with a header row. The
/// label column is named [`LABEL_COLUMN`].
pub fn write_dataset(path: &Path, names: &[String], data: &Dataset) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    let mut header: Vec<&str> = names.iter().map(String::as_str).collect();
    if data.labels.is_some() {
        header.push(LABEL_COLUMN);
    }
    w.write_record(&header).map_err(|e| Error::csv(path, e))?;
    let mut fields = Vec::with_capacity(header.len());
    for (i, row) in data.features.rows().enumerate() {
        fields.clear();
        fields.extend(row.iter().map(|v| v.to_string()));
        if let Some(y) = &data.labels {
            fields.push(y[i].to_string());
        }
        w.write_record(&fields).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// A dataset file: every column but [`LABEL_COLUMN`] is a feature.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetFile {
    pub feature_names: Vec<String>,
    pub features: Features,
    pub labels: Option<Vec<f64>>,
}

pub fn read_dataset(path: &Path) -> Result<DatasetFile> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let header: Vec<String> =
        reader.headers().map_err(|e| Error::csv(path, e))?.iter().map(|h| h.trim().to_string()).collect();
    let label_idx = header.iter().position(|h| h == LABEL_COLUMN);
    let feature_names: Vec<String> =
        header.iter().enumerate().filter(|(j, _)| Some(*j) != label_idx).map(|(_, h)| h.clone()).collect();
    if feature_names.is_empty() {
        return Err(Error::Csv { path: path.to_path_buf(), message: "no feature columns".into() });
    }
    let mut data = Vec::new();
    let mut labels = label_idx.map(|_| Vec::new());
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::csv(path, e))?;
        for (j, cell) in record.iter().enumerate() {
            let v = parse_number(path, i + 1, &header[j], cell)?;
            if Some(j) == label_idx {
                labels.as_mut().expect("label column").push(v);
            } else {
                data.push(v);
            }
        }
    }
    let features = Features::new(feature_names.len(), data)?;
    Ok(DatasetFile { feature_names, features, labels })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(names: &[&str], rows: &[&[f64]], labels: &[&str]) -> RawTable {
        RawTable {
            path: PathBuf::from("mem"),
            feature_names: names.iter().map(|s| s.to_string()).collect(),
            features: rows.iter().flat_map(|r| r.iter().copied()).collect(),
            labels: labels.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn spec() -> IngestSpec {
        IngestSpec {
            path: PathBuf::from("mem"),
            label_column: "label".into(),
            positive_class: "2".into(),
            drop_columns: vec![],
            r_target: 1.0,
            train_fraction: Some(1.0),
            train_count: None,
            sample_count: None,
            seed: 3,
        }
    }

    #[test]
    fn binarization_is_exact_or_numeric() {
        assert!(is_positive("2", "2"));
        assert!(is_positive("2.0", "2"));
        assert!(!is_positive("3", "2"));
        assert!(is_positive("s", " s"));
        assert!(!is_positive("b", "s"));
    }

    #[test]
    fn constant_column_is_dropped() {
        let t = table(&["a", "c"], &[&[1.0, 5.0], &[2.0, 5.0], &[4.0, 5.0]], &["1", "2", "2"]);
        let out = preprocess(&t, &spec()).unwrap();
        assert_eq!(out.feature_names, ["a"]);
        assert_eq!(out.dropped_features, ["c"]);
        assert_eq!(out.train.dim(), 1);
    }

    #[test]
    fn all_train_split_has_an_empty_test_set() {
        let t = table(&["a", "b"], &[&[1.0, 0.0], &[2.0, 1.0], &[4.0, 3.0]], &["1", "2", "2"]);
        let out = preprocess(&t, &spec()).unwrap();
        assert_eq!(out.train.len(), 3);
        assert!(out.test.is_empty());
        assert_eq!(out.test_rows_rescaled, 0);
    }

    #[test]
    fn train_rows_reach_the_target_radius() {
        let t = table(
            &["a", "b"],
            &[&[1.0, 0.0], &[2.0, 1.0], &[4.0, 3.0], &[0.5, 9.0], &[7.0, -2.0]],
            &["1", "2", "2", "3", "2"],
        );
        let s = IngestSpec { r_target: 2.5, train_fraction: Some(0.6), ..spec() };
        let out = preprocess(&t, &s).unwrap();
        assert_eq!(out.train.len(), 3);
        assert_eq!(out.test.len(), 2);
        let max = out.train.features.rows().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
        assert!((max - 2.5).abs() <= 1e-12);
        for row in out.test.features.rows() {
            assert!(row.iter().map(|v| v.abs()).sum::<f64>() <= 2.5 + 1e-12);
        }
        let y = out.train.labels.as_ref().unwrap();
        for (k, &src) in out.train_rows.iter().enumerate() {
            assert_eq!(y[k], f64::from(u8::from(t.labels[src] == "2")));
        }
    }

    #[test]
    fn standardization_uses_train_statistics() {
        let t = table(&["a"], &[&[0.0], &[2.0], &[100.0]], &["1", "1", "1"]);
        let s = IngestSpec { train_count: Some(2), train_fraction: None, seed: 0, ..spec() };
        let out = preprocess(&t, &s).unwrap();
        let train: Vec<f64> = out.train.features.as_slice().to_vec();
        // Two distinct train values standardize to ±1 and scale to ±r.
        assert_eq!(train.iter().map(|v| v.abs()).collect::<Vec<_>>(), [1.0, 1.0]);
        assert!((train[0] + train[1]).abs() < 1e-15);
    }

    #[test]
    fn bad_split_requests() {
        let t = table(&["a"], &[&[0.0], &[1.0]], &["1", "2"]);
        let s = IngestSpec { train_count: Some(3), train_fraction: None, ..spec() };
        assert!(matches!(preprocess(&t, &s), Err(Error::Config(_))));
        let s = IngestSpec { train_count: Some(1), train_fraction: Some(0.5), ..spec() };
        assert!(matches!(s.check(), Err(Error::Config(_))));
        let s = IngestSpec { r_target: 0.0, ..spec() };
        assert!(matches!(s.check(), Err(Error::Config(_))));
    }

    #[test]
    fn spec_parses_from_toml() {
        let s = IngestSpec::from_toml(
            "path = \"data.csv\"\nlabel_column = \"Cover_Type\"\npositive_class = \"2\"\ntrain_fraction = 0.7\nseed = 9\n",
            Some(Path::new("/tmp/x")),
        )
        .unwrap();
        assert_eq!(s.path, Path::new("/tmp/x/data.csv"));
        assert_eq!(s.r_target, 1.0);
        assert!(IngestSpec::from_toml("path = 1", None).is_err());
    }
}
