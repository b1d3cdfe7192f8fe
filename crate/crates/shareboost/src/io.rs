//! Dataset file formats, feature scaling, and model serialization.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::feature_map::{apply_map, FeatureMapDescriptor};
use crate::model::{self, WeightMatrix};

/// On-disk dataset formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataFormat {
    /// Comma-separated values with an optional header line; the label
    /// column is chosen by name or index (default: last column).
    Csv,
    /// One example per line: label first, then 1-based `index:value` pairs.
    Sparse,
}

/// Per-feature affine map x' = (x - shift) * scale sending the training
/// range into [-1,1]. Constant features map to 0 with scale 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingTransform {
    pub shifts: Vec<f64>,
    pub scales: Vec<f64>,
}

impl ScalingTransform {
    pub fn identity(d: usize) -> Self {
        ScalingTransform { shifts: vec![0.0; d], scales: vec![1.0; d] }
    }

    pub fn apply(&self, v: &[f64], out: &mut Vec<f64>) {
        out.extend(
            v.iter()
                .zip(self.shifts.iter().zip(&self.scales))
                .map(|(x, (shift, scale))| (x - shift) * scale),
        );
    }

    pub fn apply_vec(&self, v: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(v.len());
        self.apply(v, &mut out);
        out
    }
}

/// Fits the [-1,1] scaling on a dataset and returns the scaled copy with
/// the transform.
pub fn scale_features(data: &Dataset) -> Result<(Dataset, ScalingTransform)> {
    data.require_non_empty()?;
    let d = data.d();
    let mut mins = vec![f64::INFINITY; d];
    let mut maxs = vec![f64::NEG_INFINITY; d];
    for i in 0..data.m() {
        for (j, &x) in data.example(i).iter().enumerate() {
            mins[j] = mins[j].min(x);
            maxs[j] = maxs[j].max(x);
        }
    }
    let mut shifts = Vec::with_capacity(d);
    let mut scales = Vec::with_capacity(d);
    for j in 0..d {
        if maxs[j] > mins[j] {
            shifts.push(0.5 * (mins[j] + maxs[j]));
            scales.push(2.0 / (maxs[j] - mins[j]));
        } else {
            shifts.push(mins[j]);
            scales.push(0.0);
        }
    }
    let transform = ScalingTransform { shifts, scales };
    let scaled = data.map_features(d, |v, out| transform.apply(v, out))?;
    Ok((scaled, transform))
}

fn data_err(line: usize, message: impl Into<String>) -> Error {
    Error::Data { line: Some(line), message: message.into() }
}

fn parse_label(token: &str, line: usize) -> Result<i64> {
    let value: f64 = token
        .trim()
        .parse()
        .map_err(|_| data_err(line, format!("unreadable label token {token:?}")))?;
    if value.fract() != 0.0 || value < 0.0 {
        return Err(data_err(line, format!("label {token:?} is not a nonnegative integer")));
    }
    Ok(value as i64)
}

// Labels may arrive 0-based or 1-based. When no 0 appears and the minimum
// is exactly 1, they are treated as 1-based and shifted down.
fn normalize_labels(raw: Vec<i64>) -> Vec<usize> {
    let min = raw.iter().min().copied().unwrap_or(0);
    let offset = if min == 1 { 1 } else { 0 };
    raw.into_iter().map(|y| (y - offset) as usize).collect()
}

fn parse_csv(text: &str, label_col: Option<&str>) -> Result<Dataset> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
        .peekable();
    let (first_no, first) = *lines
        .peek()
        .ok_or_else(|| Error::input("dataset file is empty"))?;
    let first_fields: Vec<&str> = first.split(',').map(str::trim).collect();
    let has_header = first_fields.iter().any(|f| f.parse::<f64>().is_err());
    let header: Option<Vec<String>> = if has_header {
        lines.next();
        Some(first_fields.iter().map(|s| s.to_string()).collect())
    } else {
        None
    };
    let columns = first_fields.len();
    if columns < 2 {
        return Err(data_err(first_no, "need at least one feature column and a label column"));
    }
    let label_index = match label_col {
        None => columns - 1,
        Some(spec) => {
            if let Some(names) = &header {
                if let Some(idx) = names.iter().position(|n| n == spec) {
                    idx
                } else if let Ok(idx) = spec.parse::<usize>() {
                    idx
                } else {
                    return Err(Error::input(format!("label column {spec:?} not found in header")));
                }
            } else {
                spec.parse::<usize>().map_err(|_| {
                    Error::input(format!("label column {spec:?} must be an index for headerless files"))
                })?
            }
        }
    };
    if label_index >= columns {
        return Err(Error::input(format!(
            "label column index {label_index} out of range for {columns} columns"
        )));
    }

    let mut features = Vec::new();
    let mut raw_labels = Vec::new();
    for (line_no, line) in lines {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != columns {
            return Err(data_err(
                line_no,
                format!("row has {} fields, expected {columns}", fields.len()),
            ));
        }
        for (j, field) in fields.iter().enumerate() {
            if j == label_index {
                raw_labels.push(parse_label(field, line_no)?);
            } else {
                let value: f64 = field.parse().map_err(|_| {
                    data_err(line_no, format!("unreadable feature value {field:?}"))
                })?;
                features.push(value);
            }
        }
    }
    let labels = normalize_labels(raw_labels);
    let k = labels.iter().max().map(|&y| y + 1).unwrap_or(1);
    Dataset::new(features, labels, columns - 1, k)
        .map_err(|e| Error::Data { line: None, message: e.to_string() })
}

fn parse_sparse(text: &str) -> Result<Dataset> {
    let mut rows: Vec<(usize, i64, Vec<(usize, f64)>)> = Vec::new();
    let mut max_index = 0usize;
    for (line_no, line) in text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())) {
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let label = parse_label(tokens.next().expect("non-empty line"), line_no)?;
        if label < 1 {
            return Err(data_err(line_no, "sparse labels are 1-based and must be >= 1"));
        }
        let mut pairs = Vec::new();
        for token in tokens {
            let (idx_str, val_str) = token
                .split_once(':')
                .ok_or_else(|| data_err(line_no, format!("malformed index:value token {token:?}")))?;
            let idx: usize = idx_str
                .parse()
                .map_err(|_| data_err(line_no, format!("unreadable feature index {idx_str:?}")))?;
            if idx == 0 {
                return Err(data_err(line_no, "sparse feature indices are 1-based"));
            }
            let value: f64 = val_str
                .parse()
                .map_err(|_| data_err(line_no, format!("unreadable feature value {val_str:?}")))?;
            max_index = max_index.max(idx);
            pairs.push((idx - 1, value));
        }
        rows.push((line_no, label, pairs));
    }
    if rows.is_empty() {
        return Err(Error::input("dataset file is empty"));
    }
    let d = max_index.max(1);
    let mut features = vec![0.0; rows.len() * d];
    let mut labels = Vec::with_capacity(rows.len());
    for (row, (_, label, pairs)) in rows.iter().enumerate() {
        labels.push((*label - 1) as usize);
        for &(j, v) in pairs {
            features[row * d + j] = v;
        }
    }
    let k = labels.iter().max().map(|&y| y + 1).unwrap_or(1);
    Dataset::new(features, labels, d, k)
        .map_err(|e| Error::Data { line: None, message: e.to_string() })
}

/// Loads a dataset file. CSV label handling: by header name or 0-based
/// column index via `label_col`, default last column; labels that look
/// 1-based (minimum exactly 1) are shifted to 0-based.
pub fn load_dataset(path: &Path, format: DataFormat, label_col: Option<&str>) -> Result<Dataset> {
    let text = fs::read_to_string(path)?;
    if text.trim().is_empty() {
        return Err(Error::input(format!("dataset file {} is empty", path.display())));
    }
    match format {
        DataFormat::Csv => parse_csv(&text, label_col),
        DataFormat::Sparse => parse_sparse(&text),
    }
}

/// Writes a dataset in the requested format. CSV output carries a header
/// `f1,...,fd,label` with 0-based labels; sparse output uses 1-based labels
/// and indices, omitting zero entries.
pub fn save_dataset(path: &Path, data: &Dataset, format: DataFormat) -> Result<()> {
    let mut out = String::new();
    match format {
        DataFormat::Csv => {
            for j in 0..data.d() {
                out.push_str(&format!("f{},", j + 1));
            }
            out.push_str("label\n");
            for i in 0..data.m() {
                for x in data.example(i) {
                    out.push_str(&format!("{x},"));
                }
                out.push_str(&format!("{}\n", data.label(i)));
            }
        }
        DataFormat::Sparse => {
            for i in 0..data.m() {
                out.push_str(&format!("{}", data.label(i) + 1));
                for (j, &x) in data.example(i).iter().enumerate() {
                    if x != 0.0 {
                        out.push_str(&format!(" {}:{x}", j + 1));
                    }
                }
                out.push('\n');
            }
        }
    }
    fs::write(path, out)?;
    Ok(())
}

/// Serialized model: weights over the support, the feature map, and the
/// scaling transform, so raw inputs can be scored self-contained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub version: u32,
    pub k: usize,
    pub d: usize,
    pub support: Vec<usize>,
    /// k rows of |support| weights each.
    pub weights: Vec<Vec<f64>>,
    pub feature_map: FeatureMapDescriptor,
    pub scaling: Option<ScalingTransform>,
}

pub const MODEL_FORMAT_VERSION: u32 = 1;

impl ModelFile {
    pub fn from_parts(
        w: &WeightMatrix,
        feature_map: FeatureMapDescriptor,
        scaling: Option<ScalingTransform>,
    ) -> Self {
        let support = w.support().to_vec();
        let weights = (0..w.k())
            .map(|c| support.iter().map(|&j| w.entry(c, j)).collect())
            .collect();
        ModelFile {
            version: MODEL_FORMAT_VERSION,
            k: w.k(),
            d: w.d(),
            support,
            weights,
            feature_map,
            scaling,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != MODEL_FORMAT_VERSION {
            return Err(Error::input(format!("unsupported model format version {}", self.version)));
        }
        if self.weights.len() != self.k
            || self.weights.iter().any(|row| row.len() != self.support.len())
        {
            return Err(Error::input("model weight block shape mismatch"));
        }
        if self.support.iter().any(|&j| j >= self.d) {
            return Err(Error::input("model support index out of range"));
        }
        if self.feature_map.output_dim() != self.d {
            return Err(Error::input(format!(
                "feature map produces {} columns, model expects {}",
                self.feature_map.output_dim(),
                self.d
            )));
        }
        self.feature_map.validate()?;
        if let Some(s) = &self.scaling {
            if s.shifts.len() != self.feature_map.raw_dim()
                || s.scales.len() != self.feature_map.raw_dim()
            {
                return Err(Error::input("scaling transform dimension mismatch"));
            }
        }
        Ok(())
    }

    pub fn weight_matrix(&self) -> Result<WeightMatrix> {
        self.validate()?;
        let mut entries = vec![0.0; self.k * self.d];
        for (c, row) in self.weights.iter().enumerate() {
            for (&j, &w) in self.support.iter().zip(row) {
                entries[c * self.d + j] = w;
            }
        }
        WeightMatrix::from_entries(self.k, self.d, entries)
    }

    /// Scales, maps, and scores one raw vector.
    pub fn predict_raw(&self, raw: &[f64]) -> Result<usize> {
        let w = self.weight_matrix()?;
        let scaled = match &self.scaling {
            Some(s) => s.apply_vec(raw),
            None => raw.to_vec(),
        };
        let x = apply_map(&self.feature_map, &scaled)?;
        model::predict(&w, &x)
    }

    /// Scales and maps a whole raw dataset into model feature space.
    pub fn map_dataset(&self, raw: &Dataset) -> Result<Dataset> {
        self.validate()?;
        let expected = self.feature_map.raw_dim();
        if raw.d() != expected {
            return Err(Error::input(format!(
                "dataset has {} features, model expects {expected} raw features",
                raw.d()
            )));
        }
        raw.map_features(self.d, |v, out| {
            let scaled = match &self.scaling {
                Some(s) => s.apply_vec(v),
                None => v.to_vec(),
            };
            out.extend(apply_map(&self.feature_map, &scaled).expect("dimension checked"));
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.validate()?;
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::input(format!("model serialization failed: {e}")))?;
        fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let model: ModelFile = serde_json::from_str(&text)
            .map_err(|e| Error::Data { line: None, message: format!("bad model file: {e}") })?;
        model.validate()?;
        Ok(model)
    }
}

/// One parsed row of a training trace file.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub round: usize,
    pub selected: String,
    pub score: f64,
    pub train_loss: f64,
    pub train_err: f64,
    pub heldout_err: Option<f64>,
    pub support_size: usize,
}

/// Parses the tab-separated trace format written by training.
pub fn read_trace_tsv(path: &Path) -> Result<Vec<TraceRow>> {
    let text = fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for (line_no, line) in text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())) {
        if line.is_empty() || line.starts_with("round") {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 7 {
            return Err(data_err(line_no, format!("trace row has {} fields, expected 7", fields.len())));
        }
        let parse_f = |s: &str, what: &str| -> Result<f64> {
            s.parse()
                .map_err(|_| data_err(line_no, format!("unreadable {what} value {s:?}")))
        };
        rows.push(TraceRow {
            round: fields[0]
                .parse()
                .map_err(|_| data_err(line_no, "unreadable round number"))?,
            selected: fields[1].to_string(),
            score: parse_f(fields[2], "score")?,
            train_loss: parse_f(fields[3], "train_loss")?,
            train_err: parse_f(fields[4], "train_err")?,
            heldout_err: if fields[5] == "-" {
                None
            } else {
                Some(parse_f(fields[5], "heldout_err")?)
            },
            support_size: fields[6]
                .parse()
                .map_err(|_| data_err(line_no, "unreadable support size"))?,
        });
    }
    if rows.is_empty() {
        return Err(Error::input("trace file contains no rows"));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feature_map::{AnchorSet, Stump};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use tempfile::tempdir;

    #[test]
    fn csv_with_header_and_named_label() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("d.csv");
        fs::write(&path, "f1,f2,label\n0.5,1.0,0\n-0.5,2.0,1\n0.0,3.0,1\n").unwrap();
        let data = load_dataset(&path, DataFormat::Csv, Some("label")).unwrap();
        assert_eq!(data.m(), 3);
        assert_eq!(data.d(), 2);
        assert_eq!(data.labels(), &[0, 1, 1]);
        assert_eq!(data.example(1), &[-0.5, 2.0]);
    }

    #[test]
    fn csv_label_column_in_the_middle() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("d.csv");
        fs::write(&path, "a,y,b\n1.0,0,2.0\n3.0,1,4.0\n").unwrap();
        let data = load_dataset(&path, DataFormat::Csv, Some("y")).unwrap();
        assert_eq!(data.example(0), &[1.0, 2.0]);
        assert_eq!(data.labels(), &[0, 1]);
    }

    #[test]
    fn headerless_csv_defaults_to_last_column() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("d.csv");
        fs::write(&path, "0.5,1.0,1\n-0.5,2.0,2\n").unwrap();
        let data = load_dataset(&path, DataFormat::Csv, None).unwrap();
        // 1-based labels are remapped down
        assert_eq!(data.labels(), &[0, 1]);
    }

    #[test]
    fn zero_based_labels_stay_put() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("d.csv");
        fs::write(&path, "0.5,0\n1.5,2\n").unwrap();
        let data = load_dataset(&path, DataFormat::Csv, None).unwrap();
        assert_eq!(data.labels(), &[0, 2]);
        assert_eq!(data.k(), 3);
    }

    #[test]
    fn malformed_csv_row_reports_line_number() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("d.csv");
        fs::write(&path, "0.5,0\nbroken_value,1\n").unwrap();
        let err = load_dataset(&path, DataFormat::Csv, None).unwrap_err();
        match err {
            Error::Data { line, .. } => assert_eq!(line, Some(2)),
            other => panic!("expected data error, got {other:?}"),
        }
    }

    #[test]
    fn sparse_format_example_from_docs() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("d.sparse");
        fs::write(&path, "3 1:0.5 7:-1\n1 2:0.25\n").unwrap();
        let data = load_dataset(&path, DataFormat::Sparse, None).unwrap();
        assert_eq!(data.label(0), 2);
        assert_eq!(data.label(1), 0);
        assert!(data.d() >= 7);
        assert_eq!(data.example(0)[6], -1.0);
        assert_eq!(data.example(0)[0], 0.5);
        assert_eq!(data.example(1)[1], 0.25);
    }

    #[test]
    fn empty_file_is_input_error() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("d.csv");
        fs::write(&path, "\n").unwrap();
        assert!(matches!(
            load_dataset(&path, DataFormat::Csv, None).unwrap_err(),
            Error::Input(_)
        ));
    }

    #[test]
    fn dataset_round_trips_through_both_formats() {
        let dir = tempdir().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (m, d, k) = (20, 4, 3);
        let features: Vec<f64> = (0..m * d)
            .map(|_| if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(-2.0..2.0) })
            .collect();
        let labels: Vec<usize> = (0..m).map(|_| rng.gen_range(0..k)).collect();
        let data = Dataset::new(features, labels, d, k).unwrap();
        for format in [DataFormat::Csv, DataFormat::Sparse] {
            let path = dir.path().join("round.txt");
            save_dataset(&path, &data, format).unwrap();
            let back = load_dataset(&path, format, None).unwrap();
            assert_eq!(back.m(), data.m());
            assert_eq!(back.labels(), data.labels());
            for i in 0..m {
                assert_eq!(back.example(i), data.example(i), "{format:?} row {i}");
            }
        }
    }

    #[test]
    fn scaling_maps_range_to_unit_interval() {
        let data = Dataset::new(vec![0.0, 5.0, 10.0], vec![0, 1, 0], 1, 2).unwrap();
        let (scaled, transform) = scale_features(&data).unwrap();
        assert_eq!(scaled.example(0), &[-1.0]);
        assert_eq!(scaled.example(1), &[0.0]);
        assert_eq!(scaled.example(2), &[1.0]);
        assert!(scaled.bounded());
        assert_eq!(transform.apply_vec(&[5.0]), vec![0.0]);
    }

    #[test]
    fn constant_feature_scales_to_zero() {
        let data = Dataset::new(vec![7.0, 1.0, 7.0, 2.0], vec![0, 1], 2, 2).unwrap();
        let (scaled, transform) = scale_features(&data).unwrap();
        assert_eq!(transform.scales[0], 0.0);
        assert_eq!(scaled.example(0)[0], 0.0);
        assert_eq!(scaled.example(1)[0], 0.0);
    }

    fn sample_model() -> ModelFile {
        let w = WeightMatrix::from_entries(
            2,
            3,
            vec![
                0.5, 0.0, -1.25, //
                -0.5, 0.0, 2.0,
            ],
        )
        .unwrap();
        let map = FeatureMapDescriptor::Stumps {
            raw_dim: 2,
            stumps: vec![
                Stump { raw_feature: 0, threshold: 0.25 },
                Stump { raw_feature: 1, threshold: -0.5 },
                Stump { raw_feature: 0, threshold: 0.75 },
            ],
        };
        let scaling = ScalingTransform { shifts: vec![0.5, 0.0], scales: vec![1.0, 0.5] };
        ModelFile::from_parts(&w, map, Some(scaling))
    }

    #[test]
    fn model_file_round_trip_is_exact() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("model.json");
        let model = sample_model();
        model.save(&path).unwrap();
        let back = ModelFile::load(&path).unwrap();
        assert_eq!(model, back);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..1000 {
            let raw = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
            assert_eq!(model.predict_raw(&raw).unwrap(), back.predict_raw(&raw).unwrap());
        }
    }

    #[test]
    fn model_predictions_match_manual_pipeline() {
        let model = sample_model();
        let w = model.weight_matrix().unwrap();
        let raw = [0.7, -1.8];
        let scaled = model.scaling.as_ref().unwrap().apply_vec(&raw);
        let x = apply_map(&model.feature_map, &scaled).unwrap();
        assert_eq!(model.predict_raw(&raw).unwrap(), model::predict(&w, &x).unwrap());
    }

    #[test]
    fn corrupted_model_file_is_data_error() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("model.json");
        fs::write(&path, "{ not json").unwrap();
        assert!(matches!(
            ModelFile::load(&path).unwrap_err(),
            Error::Data { .. }
        ));
    }

    #[test]
    fn mismatched_map_dimension_rejected() {
        let w = WeightMatrix::from_entries(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let anchors = AnchorSet {
            centers: vec![vec![0.0, 0.0]],
            radii: vec![1.0],
            raw_dim: 2,
        };
        // anchors map outputs 3 columns but the model claims d=2
        let model = ModelFile::from_parts(&w, FeatureMapDescriptor::Anchors { anchors }, None);
        assert!(model.validate().is_err());
    }

    #[test]
    fn trace_round_trip() {
        use crate::synthetic::{gen_code_dataset, CodeDatasetSpec};
        use crate::trainer::{shareboost_train, TrainConfig};
        let dir = tempdir().unwrap();
        let spec = CodeDatasetSpec::new(4, 40).unwrap();
        let data = gen_code_dataset(&spec, 0.0, 1).unwrap();
        let mut cfg = TrainConfig::new(3);
        cfg.corrective_tolerance = 1e-6;
        cfg.solver.max_iterations = 1500;
        let (_, trace) = shareboost_train(&data, &cfg, Some(&data)).unwrap();
        let path = dir.path().join("trace.tsv");
        fs::write(&path, trace.to_tsv()).unwrap();
        let rows = read_trace_tsv(&path).unwrap();
        assert_eq!(rows.len(), trace.records.len());
        for (row, rec) in rows.iter().zip(&trace.records) {
            assert_eq!(row.round, rec.round);
            assert_eq!(row.support_size, rec.support_size);
            assert!((row.train_loss - rec.train_loss).abs() < 1e-15);
            assert_eq!(row.heldout_err.is_some(), rec.heldout_err.is_some());
        }
    }
}
