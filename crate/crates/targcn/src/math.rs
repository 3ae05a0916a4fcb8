//! Minimal dense linear algebra over f64.
//!
//! The model is matvec-dominated and every reduction must happen in a fixed
//! order so that repeated runs are bit-identical. A thin row-major matrix
//! type with explicit loops keeps that under our control.

use rand::Rng;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Symmetric uniform init with limit sqrt(6 / (fan_in + fan_out)).
    pub fn xavier_uniform<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Self {
        let limit = (6.0 / (rows + cols) as f64).sqrt();
        let data = (0..rows * cols)
            .map(|_| rng.gen_range(-limit..limit))
            .collect();
        Mat { rows, cols, data }
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// y = self * x
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|r| dot(self.row(r), x)).collect()
    }

    /// y = self^T * x (x has length rows, y has length cols)
    pub fn matvec_t(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.rows);
        let mut y = vec![0.0; self.cols];
        for (row, &xr) in self.data.chunks_exact(self.cols).zip(x) {
            for (acc, &w) in y.iter_mut().zip(row) {
                *acc += w * xr;
            }
        }
        y
    }

    /// self += scale * (y ⊗ x), the rank-one update used by weight gradients.
    pub fn add_outer(&mut self, y: &[f64], x: &[f64], scale: f64) {
        debug_assert_eq!(y.len(), self.rows);
        debug_assert_eq!(x.len(), self.cols);
        for (row, &yr) in self.data.chunks_exact_mut(self.cols).zip(y) {
            let yr = yr * scale;
            for (slot, &xc) in row.iter_mut().zip(x) {
                *slot += yr * xc;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// a += scale * b
#[inline]
pub fn axpy(a: &mut [f64], b: &[f64], scale: f64) {
    debug_assert_eq!(a.len(), b.len());
    for (slot, &v) in a.iter_mut().zip(b) {
        *slot += scale * v;
    }
}

/// Numerically stable log(sum(exp(scores))).
pub fn log_sum_exp(scores: &[f64]) -> f64 {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let mut acc = 0.0;
    for &s in scores {
        acc += (s - max).exp();
    }
    max + acc.ln()
}

/// Deterministic seed derivation: splitmix64 folded over a context chain.
///
/// Used to give every (query, epoch, hop) its own reproducible RNG stream
/// independent of worker scheduling.
pub fn derive_seed(base: u64, context: &[u64]) -> u64 {
    let mut state = splitmix64(base ^ 0x9e37_79b9_7f4a_7c15);
    for &c in context {
        state = splitmix64(state ^ c);
    }
    state
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
