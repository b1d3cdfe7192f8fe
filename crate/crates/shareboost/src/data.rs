//! Training data: labeled feature vectors with a class index.

use crate::error::{Error, Result};

/// One example: a `d`-vector of real features and a class label in `0..k`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledExample {
    pub features: Vec<f64>,
    pub label: usize,
}

/// A set of `m` examples over `d` features and `k` classes. Features are
/// stored row-major (`m x d`). The `bounded` flag records whether every
/// feature magnitude is at most 1; some guarantees only apply to bounded
/// data, but training itself never requires it.
#[derive(Debug, Clone)]
pub struct Dataset {
    features: Vec<f64>,
    labels: Vec<usize>,
    d: usize,
    k: usize,
    bounded: bool,
}

impl Dataset {
    pub fn new(features: Vec<f64>, labels: Vec<usize>, d: usize, k: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::input("feature count d must be positive"));
        }
        if k == 0 {
            return Err(Error::input("class count k must be positive"));
        }
        if features.len() != labels.len() * d {
            return Err(Error::input(format!(
                "feature matrix has {} entries, expected {} x {}",
                features.len(),
                labels.len(),
                d
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= k) {
            return Err(Error::input(format!("label {bad} out of range for k={k}")));
        }
        let bounded = features.iter().all(|x| x.abs() <= 1.0);
        Ok(Dataset { features, labels, d, k, bounded })
    }

    pub fn from_examples(examples: &[LabeledExample], k: usize) -> Result<Self> {
        let d = examples
            .first()
            .map(|e| e.features.len())
            .ok_or_else(|| Error::input("dataset must contain at least one example"))?;
        let mut features = Vec::with_capacity(examples.len() * d);
        let mut labels = Vec::with_capacity(examples.len());
        for e in examples {
            if e.features.len() != d {
                return Err(Error::input(format!(
                    "example has {} features, expected {d}",
                    e.features.len()
                )));
            }
            features.extend_from_slice(&e.features);
            labels.push(e.label);
        }
        Dataset::new(features, labels, d, k)
    }

    pub fn m(&self) -> usize {
        self.labels.len()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// True when every |x_i| <= 1.
    pub fn bounded(&self) -> bool {
        self.bounded
    }

    pub fn example(&self, i: usize) -> &[f64] {
        &self.features[i * self.d..(i + 1) * self.d]
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Applies `map` to every feature vector, producing a dataset over the
    /// mapped space. Labels and k are preserved.
    pub fn map_features(&self, out_dim: usize, map: impl Fn(&[f64], &mut Vec<f64>)) -> Result<Dataset> {
        let mut features = Vec::with_capacity(self.m() * out_dim);
        let mut buf = Vec::with_capacity(out_dim);
        for i in 0..self.m() {
            buf.clear();
            map(self.example(i), &mut buf);
            debug_assert_eq!(buf.len(), out_dim);
            features.extend_from_slice(&buf);
        }
        Dataset::new(features, self.labels.clone(), out_dim, self.k)
    }

    pub fn require_non_empty(&self) -> Result<()> {
        if self.is_empty() {
            Err(Error::input("dataset is empty"))
        } else {
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range_label() {
        let err = Dataset::new(vec![0.0, 1.0], vec![0, 3], 1, 2).unwrap_err();
        assert!(matches!(err, Error::Input(_)));
    }

    #[test]
    fn bounded_flag_tracks_feature_magnitude() {
        let data = Dataset::new(vec![0.5, -1.0], vec![0, 1], 1, 2).unwrap();
        assert!(data.bounded());
        let data = Dataset::new(vec![0.5, -1.5], vec![0, 1], 1, 2).unwrap();
        assert!(!data.bounded());
    }

    #[test]
    fn ragged_examples_rejected() {
        let examples = vec![
            LabeledExample { features: vec![1.0, 2.0], label: 0 },
            LabeledExample { features: vec![1.0], label: 1 },
        ];
        assert!(Dataset::from_examples(&examples, 2).is_err());
    }
}
