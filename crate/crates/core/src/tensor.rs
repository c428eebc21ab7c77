//! Dense real tensors with row-major (last index fastest) flat indexing, and
//! the mode-marginal operation shared by the classical transport solvers.

use crate::error::{OtError, Result};

/// Dense `d`-mode real tensor. Entries are stored row-major: the flat index
/// of `(j_1, ..., j_d)` is `((j_1 * n_2 + j_2) * n_3 + ...) + j_d`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    dims: Vec<usize>,
    entries: Vec<f64>,
}

impl DenseTensor {
    pub fn new(dims: Vec<usize>, entries: Vec<f64>) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(OtError::InvalidInput(format!(
                "tensor dims must all be >= 1, got {dims:?}"
            )));
        }
        let count: usize = dims.iter().product();
        if entries.len() != count {
            return Err(OtError::DimensionMismatch(format!(
                "tensor with dims {dims:?} needs {count} entries, got {}",
                entries.len()
            )));
        }
        Ok(DenseTensor { dims, entries })
    }

    pub fn zeros(dims: Vec<usize>) -> Self {
        let count: usize = dims.iter().product();
        DenseTensor {
            dims,
            entries: vec![0.0; count],
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn modes(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn entries_mut(&mut self) -> &mut [f64] {
        &mut self.entries
    }

    /// Flat index of a multi-index (row-major, last index fastest).
    pub fn flat_index(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.dims.len());
        let mut flat = 0;
        for (k, &j) in idx.iter().enumerate() {
            debug_assert!(j < self.dims[k]);
            flat = flat * self.dims[k] + j;
        }
        flat
    }

    /// Multi-index of a flat index.
    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dims.len()];
        for k in (0..self.dims.len()).rev() {
            idx[k] = flat % self.dims[k];
            flat /= self.dims[k];
        }
        idx
    }

    /// Index of mode `i` (0-based) for a flat position, without materializing
    /// the full multi-index.
    #[inline]
    pub fn mode_index(&self, flat: usize, mode: usize) -> usize {
        let mut stride = 1;
        for k in (mode + 1)..self.dims.len() {
            stride *= self.dims[k];
        }
        (flat / stride) % self.dims[mode]
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.entries[self.flat_index(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: f64) {
        let f = self.flat_index(idx);
        self.entries[f] = v;
    }

    pub fn sum(&self) -> f64 {
        self.entries.iter().sum()
    }

    pub fn min_entry(&self) -> f64 {
        self.entries.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_entry(&self) -> f64 {
        self.entries
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn inner(&self, other: &DenseTensor) -> f64 {
        debug_assert_eq!(self.dims, other.dims);
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a * b)
            .sum()
    }

    /// Outer product of `d` vectors.
    pub fn outer(vectors: &[Vec<f64>]) -> Self {
        let dims: Vec<usize> = vectors.iter().map(|v| v.len()).collect();
        let mut t = DenseTensor::zeros(dims);
        for flat in 0..t.len() {
            let mut prod = 1.0;
            let mut rem = flat;
            for k in (0..vectors.len()).rev() {
                let j = rem % vectors[k].len();
                rem /= vectors[k].len();
                prod *= vectors[k][j];
            }
            t.entries[flat] = prod;
        }
        t
    }
}

/// Sum of `v` over all modes except `mode` (0-based): the mode marginal.
pub fn marginal(v: &DenseTensor, mode: usize) -> Result<Vec<f64>> {
    if mode >= v.modes() {
        return Err(OtError::ModeOutOfRange {
            index: mode,
            modes: v.modes(),
        });
    }
    let mut out = vec![0.0; v.dims()[mode]];
    let mut stride = 1;
    for k in (mode + 1)..v.modes() {
        stride *= v.dims()[k];
    }
    let n = v.dims()[mode];
    for (flat, &e) in v.entries().iter().enumerate() {
        out[(flat / stride) % n] += e;
    }
    Ok(out)
}
