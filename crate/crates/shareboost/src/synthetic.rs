//! Seeded generators for the two illustrative constructions that separate
//! feature sharing from flat (per-class) feature use, together with their
//! reference weight matrices.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::WeightMatrix;

/// The "code" construction: x = [bin(y), 2 ln(k) e_y], where bin(y) is the
/// +-1 binary code of the class and e_y the one-hot indicator. A shared
/// model reads the log2(k) code columns; a flat model needs all k
/// indicator columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CodeDatasetSpec {
    pub k: usize,
    pub m: usize,
}

impl CodeDatasetSpec {
    pub fn new(k: usize, m: usize) -> Result<Self> {
        if k < 2 || !k.is_power_of_two() {
            return Err(Error::input(format!("class count {k} must be a power of two >= 2")));
        }
        if m == 0 {
            return Err(Error::input("example count m must be positive"));
        }
        Ok(CodeDatasetSpec { k, m })
    }

    pub fn code_length(&self) -> usize {
        self.k.trailing_zeros() as usize
    }

    pub fn multiplier(&self) -> f64 {
        2.0 * (self.k as f64).ln()
    }

    /// Total feature count: code block plus indicator block.
    pub fn d(&self) -> usize {
        self.code_length() + self.k
    }
}

/// The "block" construction: x holds s copies of bin(y), except that a
/// fraction eps of the examples have one copy zeroed. Averaging the blocks
/// strictly beats reading any single block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockDatasetSpec {
    pub k: usize,
    pub s: usize,
    pub m: usize,
    pub eps: f64,
}

impl BlockDatasetSpec {
    pub fn new(k: usize, s: usize, m: usize, eps: f64) -> Result<Self> {
        if k < 2 || !k.is_power_of_two() {
            return Err(Error::input(format!("class count {k} must be a power of two >= 2")));
        }
        if s < 2 {
            return Err(Error::input("block count s must be >= 2"));
        }
        if m == 0 {
            return Err(Error::input("example count m must be positive"));
        }
        if !(0.0..1.0).contains(&eps) {
            return Err(Error::input("eps must lie in [0,1)"));
        }
        Ok(BlockDatasetSpec { k, s, m, eps })
    }

    pub fn code_length(&self) -> usize {
        self.k.trailing_zeros() as usize
    }

    pub fn d(&self) -> usize {
        self.s * self.code_length()
    }
}

/// The shared-feature and flat reference matrices of a construction.
#[derive(Debug, Clone)]
pub struct ReferencePair {
    pub shared: WeightMatrix,
    pub flat: WeightMatrix,
}

/// The +-1 binary code of class `label` (0-based) over `bits` coordinates,
/// most significant bit first; bit 0 maps to -1. The encoded number is
/// label+1 reduced mod k, so for k=4: bin of class 0 -> [-1, 1] and of
/// class 3 -> [-1, -1].
pub fn bin_code(label: usize, k: usize, bits: usize) -> Vec<f64> {
    let value = (label + 1) % k;
    (0..bits)
        .map(|b| {
            if (value >> (bits - 1 - b)) & 1 == 1 {
                1.0
            } else {
                -1.0
            }
        })
        .collect()
}

/// Generates the code dataset with uniformly drawn labels. Features always
/// follow the drawn label's clean pattern; `label_noise` then flips the
/// recorded label to a uniform other class with the given probability, so a
/// noise fraction of the examples is unavoidably misclassified.
pub fn gen_code_dataset(spec: &CodeDatasetSpec, label_noise: f64, seed: u64) -> Result<Dataset> {
    if !(0.0..0.5).contains(&label_noise) {
        return Err(Error::input("label noise rate must lie in [0, 0.5)"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bits = spec.code_length();
    let mult = spec.multiplier();
    let mut features = Vec::with_capacity(spec.m * spec.d());
    let mut labels = Vec::with_capacity(spec.m);
    for _ in 0..spec.m {
        let true_label = rng.gen_range(0..spec.k);
        features.extend(bin_code(true_label, spec.k, bits));
        for c in 0..spec.k {
            features.push(if c == true_label { mult } else { 0.0 });
        }
        let label = if label_noise > 0.0 && rng.gen_bool(label_noise) {
            let shift = rng.gen_range(1..spec.k);
            (true_label + shift) % spec.k
        } else {
            true_label
        };
        labels.push(label);
    }
    Dataset::new(features, labels, spec.d(), spec.k)
}

/// Generates the block dataset. The examples with a zeroed block come last
/// and cycle through the block indices round-robin, so the empirical
/// zeroing distribution is exactly uniform and the comparison between the
/// shared and averaged references is deterministic. A non-integral eps*m is
/// rounded to the nearest count with a warning.
pub fn gen_block_dataset(spec: &BlockDatasetSpec, seed: u64) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bits = spec.code_length();
    let exact = spec.eps * spec.m as f64;
    let zeroed_count = exact.round() as usize;
    if (exact - zeroed_count as f64).abs() > 1e-9 {
        log::warn!(
            "eps*m = {exact} is not integral; generating {zeroed_count} zeroed-block examples"
        );
    }
    let mut features = Vec::with_capacity(spec.m * spec.d());
    let mut labels = Vec::with_capacity(spec.m);
    for i in 0..spec.m {
        let label = rng.gen_range(0..spec.k);
        let code = bin_code(label, spec.k, bits);
        let zeroed_block = if i >= spec.m - zeroed_count {
            Some((i - (spec.m - zeroed_count)) % spec.s)
        } else {
            None
        };
        for block in 0..spec.s {
            if Some(block) == zeroed_block {
                features.extend(std::iter::repeat(0.0).take(bits));
            } else {
                features.extend_from_slice(&code);
            }
        }
        labels.push(label);
    }
    Dataset::new(features, labels, spec.d(), spec.k)
}

/// Reference matrices for the code construction: the shared model reads the
/// code block (row y = [bin(y), 0...]), the flat model reads the indicator
/// block (row y = [0..., e_y]).
pub fn code_reference_matrices(spec: &CodeDatasetSpec) -> ReferencePair {
    let bits = spec.code_length();
    let d = spec.d();
    let mut shared = vec![0.0; spec.k * d];
    let mut flat = vec![0.0; spec.k * d];
    for y in 0..spec.k {
        let code = bin_code(y, spec.k, bits);
        shared[y * d..y * d + bits].copy_from_slice(&code);
        flat[y * d + bits + y] = 1.0;
    }
    ReferencePair {
        shared: WeightMatrix::from_entries(spec.k, d, shared).expect("shape by construction"),
        flat: WeightMatrix::from_entries(spec.k, d, flat).expect("shape by construction"),
    }
}

/// Reference matrices for the block construction: the shared model reads
/// the first block only, the flat model spreads the same total weight over
/// all s blocks. The block weights are dyadic (each block gets 1/p or 2/p
/// with p the next power of two above s), so they sum to exactly 1.0 and
/// the mixed-norm equality with the shared matrix is exact in floating
/// point, not just up to rounding.
pub fn block_reference_matrices(spec: &BlockDatasetSpec) -> ReferencePair {
    let bits = spec.code_length();
    let d = spec.d();
    let p = spec.s.next_power_of_two();
    let unit = 1.0 / p as f64;
    let doubled = p - spec.s; // blocks carrying a double share
    let mut shared = vec![0.0; spec.k * d];
    let mut flat = vec![0.0; spec.k * d];
    for y in 0..spec.k {
        let code = bin_code(y, spec.k, bits);
        shared[y * d..y * d + bits].copy_from_slice(&code);
        for block in 0..spec.s {
            let weight = if block < doubled { 2.0 * unit } else { unit };
            for b in 0..bits {
                flat[y * d + block * bits + b] = code[b] * weight;
            }
        }
    }
    ReferencePair {
        shared: WeightMatrix::from_entries(spec.k, d, shared).expect("shape by construction"),
        flat: WeightMatrix::from_entries(spec.k, d, flat).expect("shape by construction"),
    }
}
