//! Non-linear feature constructions: decision stumps with a fast best-stump
//! scan, quadratic expansion, and the piecewise-linear anchor map with
//! k-means centers and quantile radii.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::exec;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

/// Binary feature 1[v_i <= threshold] on one raw coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stump {
    pub raw_feature: usize,
    pub threshold: f64,
}

impl Stump {
    pub fn evaluate(&self, v: &[f64]) -> f64 {
        if v[self.raw_feature] <= self.threshold {
            1.0
        } else {
            0.0
        }
    }
}

/// Centers and radii of the piecewise-linear map: each anchor j gates a
/// local affine block 1[||v - center_j|| < radius_j] * [v, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorSet {
    pub centers: Vec<Vec<f64>>,
    pub radii: Vec<f64>,
    pub raw_dim: usize,
}

impl AnchorSet {
    pub fn validate(&self) -> Result<()> {
        if self.centers.is_empty() {
            return Err(Error::input("anchor set must contain at least one anchor"));
        }
        if self.centers.len() != self.radii.len() {
            return Err(Error::input("anchor centers and radii must have equal length"));
        }
        if let Some(bad) = self.radii.iter().find(|r| !(**r > 0.0)) {
            return Err(Error::input(format!("anchor radius {bad} must be positive")));
        }
        if self.centers.iter().any(|c| c.len() != self.raw_dim) {
            return Err(Error::input("anchor center dimension mismatch"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }
}

/// Description of how raw vectors become model features; stored inside the
/// model file so predictions on raw inputs are self-contained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureMapDescriptor {
    Identity { raw_dim: usize },
    Stumps { raw_dim: usize, stumps: Vec<Stump> },
    Quadratic { raw_dim: usize },
    Anchors { anchors: AnchorSet },
}

impl FeatureMapDescriptor {
    pub fn raw_dim(&self) -> usize {
        match self {
            FeatureMapDescriptor::Identity { raw_dim }
            | FeatureMapDescriptor::Stumps { raw_dim, .. }
            | FeatureMapDescriptor::Quadratic { raw_dim } => *raw_dim,
            FeatureMapDescriptor::Anchors { anchors } => anchors.raw_dim,
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            FeatureMapDescriptor::Identity { raw_dim } => *raw_dim,
            FeatureMapDescriptor::Stumps { stumps, .. } => stumps.len(),
            FeatureMapDescriptor::Quadratic { raw_dim } => {
                raw_dim + raw_dim * (raw_dim + 1) / 2
            }
            FeatureMapDescriptor::Anchors { anchors } => {
                anchors.len() * (anchors.raw_dim + 1)
            }
        }
    }

    /// Group structure for group selection: one group of p+1 columns per
    /// anchor. Other kinds have no inherent groups.
    pub fn groups(&self) -> Option<Vec<Vec<usize>>> {
        match self {
            FeatureMapDescriptor::Anchors { anchors } => {
                let width = anchors.raw_dim + 1;
                Some(
                    (0..anchors.len())
                        .map(|j| (j * width..(j + 1) * width).collect())
                        .collect(),
                )
            }
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            FeatureMapDescriptor::Identity { raw_dim }
            | FeatureMapDescriptor::Quadratic { raw_dim } => {
                if *raw_dim == 0 {
                    Err(Error::input("raw dimension must be positive"))
                } else {
                    Ok(())
                }
            }
            FeatureMapDescriptor::Stumps { raw_dim, stumps } => {
                if stumps.is_empty() {
                    return Err(Error::input("stump map must contain at least one stump"));
                }
                if let Some(s) = stumps.iter().find(|s| s.raw_feature >= *raw_dim) {
                    return Err(Error::input(format!(
                        "stump feature {} out of range for raw dimension {raw_dim}",
                        s.raw_feature
                    )));
                }
                Ok(())
            }
            FeatureMapDescriptor::Anchors { anchors } => anchors.validate(),
        }
    }
}

/// Maps one raw vector through the descriptor.
pub fn apply_map(desc: &FeatureMapDescriptor, v: &[f64]) -> Result<Vec<f64>> {
    if v.len() != desc.raw_dim() {
        return Err(Error::input(format!(
            "raw vector has length {}, map expects {}",
            v.len(),
            desc.raw_dim()
        )));
    }
    let mut out = Vec::with_capacity(desc.output_dim());
    fill_mapped(desc, v, &mut out);
    Ok(out)
}

fn fill_mapped(desc: &FeatureMapDescriptor, v: &[f64], out: &mut Vec<f64>) {
    match desc {
        FeatureMapDescriptor::Identity { .. } => out.extend_from_slice(v),
        FeatureMapDescriptor::Stumps { stumps, .. } => {
            out.extend(stumps.iter().map(|s| s.evaluate(v)));
        }
        FeatureMapDescriptor::Quadratic { raw_dim } => {
            out.extend_from_slice(v);
            for i in 0..*raw_dim {
                for j in i..*raw_dim {
                    out.push(v[i] * v[j]);
                }
            }
        }
        FeatureMapDescriptor::Anchors { anchors } => {
            for (center, &radius) in anchors.centers.iter().zip(&anchors.radii) {
                let dist2: f64 =
                    v.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
                if dist2.sqrt() < radius {
                    out.extend_from_slice(v);
                    out.push(1.0);
                } else {
                    out.extend(std::iter::repeat(0.0).take(v.len() + 1));
                }
            }
        }
    }
}

/// Maps a whole dataset; labels and k are unchanged.
pub fn apply_map_dataset(desc: &FeatureMapDescriptor, raw: &Dataset) -> Result<Dataset> {
    if raw.d() != desc.raw_dim() {
        return Err(Error::input(format!(
            "dataset has {} features, map expects {}",
            raw.d(),
            desc.raw_dim()
        )));
    }
    raw.map_features(desc.output_dim(), |v, out| fill_mapped(desc, v, out))
}

/// Finds the single stump with the largest selection score. `residuals` is
/// the m x k row-major table of per-example loss gradients with respect to
/// the scores (rho_q - 1[q=y]) under the current model.
///
/// Per raw feature the values are sorted once and every candidate threshold
/// (midpoints of consecutive distinct values plus sentinels past both
/// extremes) is scored by an incremental per-class prefix sum, so the scan
/// is O(m log m) per feature instead of O(m^2). Ties break to the lowest
/// feature index, then the lowest threshold.
pub fn best_stump(raw: &Dataset, residuals: &[f64]) -> (usize, f64, f64) {
    let m = raw.m();
    let k = raw.k();
    assert_eq!(residuals.len(), m * k);
    exec::argbest(
        raw.d(),
        |feature| {
            let mut order: Vec<usize> = (0..m).collect();
            order.sort_by(|&a, &b| {
                raw.example(a)[feature].total_cmp(&raw.example(b)[feature])
            });
            let vmin = raw.example(order[0])[feature];
            let vmax = raw.example(order[m - 1])[feature];
            // the all-zero stump scores 0
            let mut best_theta = vmin - 1.0;
            let mut best_score = 0.0;
            let mut acc = vec![0.0; k];
            let mut pos = 0;
            while pos < m {
                let v = raw.example(order[pos])[feature];
                while pos < m && raw.example(order[pos])[feature] == v {
                    let e = order[pos];
                    for (a, r) in acc.iter_mut().zip(&residuals[e * k..(e + 1) * k]) {
                        *a += r;
                    }
                    pos += 1;
                }
                let theta = if pos < m {
                    0.5 * (v + raw.example(order[pos])[feature])
                } else {
                    vmax + 1.0
                };
                let score = acc.iter().map(|a| a.abs()).sum::<f64>() / m as f64;
                if score > best_score {
                    best_score = score;
                    best_theta = theta;
                }
            }
            (feature, best_theta, best_score)
        },
        |c, b| c.2 > b.2,
    )
    .expect("d >= 1")
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest_center(point: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centers.iter().enumerate() {
        let d2 = squared_distance(point, c);
        if d2 < best.1 {
            best = (j, d2);
        }
    }
    best
}

// k-means++ seeding: first center uniform, then each next center drawn with
// probability proportional to squared distance from the chosen set.
fn kmeans_pp_init(points: &[Vec<f64>], q: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(q);
    centers.push(points[rng.gen_range(0..points.len())].clone());
    let mut dist2: Vec<f64> = points
        .iter()
        .map(|p| squared_distance(p, &centers[0]))
        .collect();
    while centers.len() < q {
        let total: f64 = dist2.iter().sum();
        let next = if total <= 0.0 {
            // remaining mass degenerate: any uncovered point works
            dist2.iter().position(|&d| d > 0.0).unwrap_or(0)
        } else {
            let mut target = rng.gen_range(0.0..total);
            let mut chosen = points.len() - 1;
            for (i, &d) in dist2.iter().enumerate() {
                if target < d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        };
        centers.push(points[next].clone());
        for (d, p) in dist2.iter_mut().zip(points) {
            *d = d.min(squared_distance(p, centers.last().unwrap()));
        }
    }
    centers
}

// One pass of Lloyd's algorithm: assignment via the deterministic chunked
// reduction, then the mean update. Returns (new centers, inertia before the
// update). Empty clusters are re-seeded to the point farthest from its
// current center.
fn lloyd_step(points: &[Vec<f64>], centers: &[Vec<f64>]) -> (Vec<Vec<f64>>, f64) {
    let q = centers.len();
    let p = points[0].len();
    // per-cluster coordinate sums, counts, and total inertia in one pass
    let stats = exec::sum_vectors(points.len(), q * (p + 1) + 1, |i, acc| {
        let (j, d2) = nearest_center(&points[i], centers);
        for (slot, &x) in acc[j * (p + 1)..j * (p + 1) + p].iter_mut().zip(&points[i]) {
            *slot += x;
        }
        acc[j * (p + 1) + p] += 1.0;
        acc[q * (p + 1)] += d2;
    });
    let inertia = stats[q * (p + 1)];
    let mut new_centers = Vec::with_capacity(q);
    let mut empties = Vec::new();
    for j in 0..q {
        let count = stats[j * (p + 1) + p];
        if count > 0.0 {
            new_centers
                .push(stats[j * (p + 1)..j * (p + 1) + p].iter().map(|s| s / count).collect());
        } else {
            empties.push(j);
            new_centers.push(centers[j].clone());
        }
    }
    for j in empties {
        let far = exec::argbest(
            points.len(),
            |i| (i, nearest_center(&points[i], &new_centers).1),
            |c, b| c.1 > b.1,
        )
        .expect("non-empty points");
        new_centers[j] = points[far.0].clone();
    }
    (new_centers, inertia)
}

fn distinct_count(points: &[Vec<f64>]) -> usize {
    let mut seen: std::collections::BTreeSet<Vec<u64>> = std::collections::BTreeSet::new();
    for point in points {
        seen.insert(point.iter().map(|x| x.to_bits()).collect());
    }
    seen.len()
}

// Runs Lloyd until the largest center movement drops below 1e-6 or 100
// iterations; returns centers and the inertia recorded before each step.
fn kmeans_with_history(
    points: &[Vec<f64>],
    q: usize,
    seed: u64,
) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    if points.is_empty() {
        return Err(Error::input("cannot cluster an empty point set"));
    }
    if q == 0 {
        return Err(Error::input("cluster count must be positive"));
    }
    if q > distinct_count(points) {
        return Err(Error::input(format!(
            "cluster count {q} exceeds the number of distinct points"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = kmeans_pp_init(points, q, &mut rng);
    let mut inertias = Vec::new();
    for _ in 0..100 {
        let (next, inertia) = lloyd_step(points, &centers);
        inertias.push(inertia);
        let movement = centers
            .iter()
            .zip(&next)
            .map(|(a, b)| squared_distance(a, b).sqrt())
            .fold(0.0, f64::max);
        centers = next;
        if movement < 1e-6 {
            break;
        }
    }
    Ok((centers, inertias))
}

/// Seeded k-means clustering of the given points.
pub fn kmeans(points: &[Vec<f64>], q: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    kmeans_with_history(points, q, seed).map(|(centers, _)| centers)
}

// Linear-interpolation quantile of a sorted slice, t in (0,1).
fn quantile_sorted(sorted: &[f64], t: f64) -> f64 {
    let pos = t * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Builds the anchor map: k-means centers of the raw examples, one anchor
/// per (center, radius quantile) pair. Duplicate or non-positive radii at a
/// center are dropped with a warning.
pub fn build_anchor_map(
    raw: &Dataset,
    q: usize,
    radius_quantiles: &[f64],
    seed: u64,
) -> Result<FeatureMapDescriptor> {
    raw.require_non_empty()?;
    if q == 0 {
        return Err(Error::input("anchor count must be positive"));
    }
    if radius_quantiles.is_empty() {
        return Err(Error::input("at least one radius quantile is required"));
    }
    if let Some(bad) = radius_quantiles.iter().find(|t| !(**t > 0.0 && **t < 1.0)) {
        return Err(Error::input(format!("radius quantile {bad} must lie in (0,1)")));
    }
    let points: Vec<Vec<f64>> = (0..raw.m()).map(|i| raw.example(i).to_vec()).collect();
    let centers = kmeans(&points, q, seed)?;

    let mut anchors = Vec::new();
    let mut radii = Vec::new();
    for center in centers {
        let mut dists: Vec<f64> = points
            .iter()
            .map(|p| squared_distance(p, &center).sqrt())
            .collect();
        dists.sort_by(f64::total_cmp);
        let mut kept: Vec<f64> = Vec::new();
        for &t in radius_quantiles {
            let r = quantile_sorted(&dists, t);
            if r <= 0.0 {
                log::warn!("dropping non-positive radius at quantile {t}");
            } else if kept.iter().any(|&prev| prev == r) {
                log::warn!("dropping duplicate radius {r} at quantile {t}");
            } else {
                kept.push(r);
            }
        }
        if kept.is_empty() {
            // degenerate distance distribution: keep one usable radius
            let fallback = dists.last().copied().unwrap_or(0.0).max(1e-12);
            log::warn!("degenerate distances at a center; using single radius {fallback}");
            kept.push(fallback);
        }
        for r in kept {
            anchors.push(center.clone());
            radii.push(r);
        }
    }
    let set = AnchorSet { centers: anchors, radii, raw_dim: raw.d() };
    set.validate()?;
    Ok(FeatureMapDescriptor::Anchors { anchors: set })
}
