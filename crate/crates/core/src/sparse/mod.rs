//! CSR storage and the matrix-vector products every other module is built on.
//!
//! All access to `A` goes through [`SparseMatrix::apply`] and
//! [`SparseMatrix::apply_transpose`]; each call bumps an atomic MV counter so
//! callers can audit the cost model.

mod bounds;
mod mtx;

use std::sync::atomic::{AtomicU64, Ordering};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

pub use bounds::{
    estimate_spectrum_bounds, estimate_spectrum_bounds_with, BoundsConfig, SpectrumBounds,
};
pub use mtx::{parse_matrix_market, read_matrix_market_file, write_matrix_market};

use crate::dense::DenseBlock;
use crate::error::{Error, Result};

/// Real sparse matrix in canonical CSR form: column indices strictly
/// increasing within every row.
#[derive(Debug)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
    mv_count: AtomicU64,
}

impl Clone for SparseMatrix {
    /// The clone starts with a fresh MV counter.
    fn clone(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            row_offsets: self.row_offsets.clone(),
            col_indices: self.col_indices.clone(),
            values: self.values.clone(),
            mv_count: AtomicU64::new(0),
        }
    }
}

impl PartialEq for SparseMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self.row_offsets == other.row_offsets
            && self.col_indices == other.col_indices
            && self.values == other.values
    }
}

impl SparseMatrix {
    /// Wraps CSR arrays after checking the canonical-form invariants.
    pub fn from_csr(
        rows: usize,
        cols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if row_offsets.len() != rows + 1 {
            return Err(Error::InvalidStructure(format!(
                "row_offsets has length {}, expected {}",
                row_offsets.len(),
                rows + 1
            )));
        }
        if row_offsets[0] != 0 {
            return Err(Error::InvalidStructure("row_offsets[0] must be 0".into()));
        }
        if row_offsets.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidStructure(
                "row_offsets must be nondecreasing".into(),
            ));
        }
        let nnz = row_offsets[rows];
        if col_indices.len() != nnz || values.len() != nnz {
            return Err(Error::InvalidStructure(format!(
                "nnz mismatch: offsets say {nnz}, {} indices, {} values",
                col_indices.len(),
                values.len()
            )));
        }
        for r in 0..rows {
            let idx = &col_indices[row_offsets[r]..row_offsets[r + 1]];
            if idx.iter().any(|&c| c >= cols) {
                return Err(Error::InvalidStructure(format!(
                    "row {r}: column index out of range"
                )));
            }
            if idx.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidStructure(format!(
                    "row {r}: column indices not strictly increasing"
                )));
            }
        }
        Ok(Self {
            rows,
            cols,
            row_offsets,
            col_indices,
            values,
            mv_count: AtomicU64::new(0),
        })
    }

    /// Assembles from `(row, col, value)` triplets (0-based). Duplicates are
    /// summed.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        let mut entries = triplets.to_vec();
        for &(i, j, _) in &entries {
            if i >= rows || j >= cols {
                return Err(Error::InvalidStructure(format!(
                    "entry ({i}, {j}) outside {rows}x{cols}"
                )));
            }
        }
        entries.sort_by_key(|e| (e.0, e.1));
        let mut row_offsets = vec![0usize; rows + 1];
        let mut col_indices = Vec::with_capacity(entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in entries {
            if last == Some((i, j)) {
                *values.last_mut().expect("previous entry") += v;
            } else {
                col_indices.push(j);
                values.push(v);
                row_offsets[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for r in 0..rows {
            row_offsets[r + 1] += row_offsets[r];
        }
        Self::from_csr(rows, cols, row_offsets, col_indices, values)
    }

    pub fn from_dense(block: &DenseBlock) -> Self {
        let mut trips = Vec::new();
        for j in 0..block.cols() {
            for i in 0..block.rows() {
                let v = block.get(i, j);
                if v != 0.0 {
                    trips.push((i, j, v));
                }
            }
        }
        Self::from_triplets(block.rows(), block.cols(), &trips).expect("dense entries are in range")
    }

    /// Square diagonal matrix.
    pub fn diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let trips: Vec<_> = diag.iter().enumerate().map(|(i, &v)| (i, i, v)).collect();
        Self::from_triplets(n, n, &trips).expect("diagonal entries are in range")
    }

    /// Seeded random matrix with `per_col` standard-normal entries in
    /// distinct random rows of every column.
    pub fn random(rows: usize, cols: usize, per_col: usize, seed: u64) -> Result<Self> {
        if per_col > rows {
            return Err(Error::InvalidArgument(format!(
                "cannot place {per_col} entries in a column of height {rows}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut trips = Vec::with_capacity(cols * per_col);
        for c in 0..cols {
            for r in rand::seq::index::sample(&mut rng, rows, per_col) {
                trips.push((r, c, StandardNormal.sample(&mut rng)));
            }
        }
        Self::from_triplets(rows, cols, &trips)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Stored entries of row `r` as `(col, value)` pairs.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_offsets[r]..self.row_offsets[r + 1];
        self.col_indices[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    /// Number of matrix-vector products with `A` or `Aᵀ` performed so far.
    pub fn mv_count(&self) -> u64 {
        self.mv_count.load(Ordering::Relaxed)
    }

    pub fn reset_mv_count(&self) {
        self.mv_count.store(0, Ordering::Relaxed);
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut counts = vec![0usize; self.cols + 1];
        for &c in &self.col_indices {
            counts[c + 1] += 1;
        }
        for c in 0..self.cols {
            counts[c + 1] += counts[c];
        }
        let offsets = counts.clone();
        let mut next = counts;
        let mut col_indices = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for r in 0..self.rows {
            for (c, v) in self.row(r) {
                let slot = next[c];
                col_indices[slot] = r;
                values[slot] = v;
                next[c] += 1;
            }
        }
        SparseMatrix {
            rows: self.cols,
            cols: self.rows,
            row_offsets: offsets,
            col_indices,
            values,
            mv_count: AtomicU64::new(0),
        }
    }

    pub fn to_dense(&self) -> DenseBlock {
        let mut out = DenseBlock::zeros(self.rows, self.cols);
        for r in 0..self.rows {
            for (c, v) in self.row(r) {
                out.set(r, c, v);
            }
        }
        out
    }

    /// Frobenius norm of the stored values.
    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `y = A x`.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.cols, x.len())?;
        let mut y = vec![0.0; self.rows];
        self.apply_into(x, &mut y);
        Ok(y)
    }

    /// `x = Aᵀ y`.
    pub fn apply_transpose(&self, y: &[f64]) -> Result<Vec<f64>> {
        check_len(self.rows, y.len())?;
        let mut x = vec![0.0; self.cols];
        self.apply_transpose_into(y, &mut x);
        Ok(x)
    }

    pub(crate) fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(y.len(), self.rows);
        self.mv_count.fetch_add(1, Ordering::Relaxed);
        for (r, out) in y.iter_mut().enumerate() {
            let lo = self.row_offsets[r];
            let hi = self.row_offsets[r + 1];
            let mut acc = 0.0;
            for k in lo..hi {
                acc += self.values[k] * x[self.col_indices[k]];
            }
            *out = acc;
        }
    }

    pub(crate) fn apply_transpose_into(&self, y: &[f64], x: &mut [f64]) {
        debug_assert_eq!(y.len(), self.rows);
        debug_assert_eq!(x.len(), self.cols);
        self.mv_count.fetch_add(1, Ordering::Relaxed);
        x.fill(0.0);
        for (r, &yr) in y.iter().enumerate() {
            if yr == 0.0 {
                continue;
            }
            for k in self.row_offsets[r]..self.row_offsets[r + 1] {
                x[self.col_indices[k]] += self.values[k] * yr;
            }
        }
    }

    /// `A X` for a block, one MV per column.
    pub fn apply_block(&self, x: &DenseBlock) -> Result<DenseBlock> {
        check_len(self.cols, x.rows())?;
        let mut out = DenseBlock::zeros(self.rows, x.cols());
        if self.rows > 0 {
            out.as_mut_slice()
                .par_chunks_mut(self.rows)
                .zip(x.as_slice().par_chunks(self.cols.max(1)))
                .for_each(|(dst, src)| self.apply_into(src, dst));
        }
        Ok(out)
    }

    /// `Aᵀ Y` for a block, one MV per column.
    pub fn apply_transpose_block(&self, y: &DenseBlock) -> Result<DenseBlock> {
        check_len(self.rows, y.rows())?;
        let mut out = DenseBlock::zeros(self.cols, y.cols());
        if self.cols > 0 {
            out.as_mut_slice()
                .par_chunks_mut(self.cols)
                .zip(y.as_slice().par_chunks(self.rows.max(1)))
                .for_each(|(dst, src)| self.apply_transpose_into(src, dst));
        }
        Ok(out)
    }

    /// `l(S) X` with `S = AᵀA` and `l` the affine map sending
    /// `[sigma_min_est², sigma_max_est²]` onto `[-1, 1]`. Two MVs per column.
    pub fn apply_mapped_gram(&self, bounds: &SpectrumBounds, x: &DenseBlock) -> Result<DenseBlock> {
        check_len(self.cols, x.rows())?;
        let map = MappedGram::new(self, bounds)?;
        let mut out = DenseBlock::zeros(self.cols, x.cols());
        if self.cols > 0 {
            out.as_mut_slice()
                .par_chunks_mut(self.cols)
                .zip(x.as_slice().par_chunks(self.cols))
                .for_each_init(
                    || vec![0.0; self.rows],
                    |scratch, (dst, src)| map.apply_into(src, dst, scratch),
                );
        }
        Ok(out)
    }
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// The operator `l(AᵀA)` for fixed bounds; shared read-only across workers.
#[derive(Debug, Clone, Copy)]
pub(crate) struct MappedGram<'a> {
    a: &'a SparseMatrix,
    shift: f64,
    inv_half_width: f64,
}

impl<'a> MappedGram<'a> {
    pub(crate) fn new(a: &'a SparseMatrix, bounds: &SpectrumBounds) -> Result<Self> {
        let hi = bounds.sigma_max_est * bounds.sigma_max_est;
        let lo = bounds.sigma_min_est * bounds.sigma_min_est;
        if !(hi > lo) {
            return Err(Error::DegenerateBounds {
                max: bounds.sigma_max_est,
                min: bounds.sigma_min_est,
            });
        }
        Ok(Self {
            a,
            shift: hi + lo,
            inv_half_width: 1.0 / (hi - lo),
        })
    }

    pub(crate) fn dim(&self) -> usize {
        self.a.cols
    }

    pub(crate) fn a_rows(&self) -> usize {
        self.a.rows
    }

    /// `dst = l(S) src`; `scratch` has length `rows`.
    pub(crate) fn apply_into(&self, src: &[f64], dst: &mut [f64], scratch: &mut [f64]) {
        self.a.apply_into(src, scratch);
        self.a.apply_transpose_into(scratch, dst);
        for (d, s) in dst.iter_mut().zip(src) {
            *d = (2.0 * *d - self.shift * s) * self.inv_half_width;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::dot;
    use proptest::prelude::*;

    fn exact_bounds(max: f64, min: f64) -> SpectrumBounds {
        SpectrumBounds::exact(max, min).unwrap()
    }

    #[test]
    fn random_is_reproducible_and_sized() {
        let a = SparseMatrix::random(30, 20, 4, 5).unwrap();
        assert_eq!((a.rows(), a.cols(), a.nnz()), (30, 20, 80));
        assert_eq!(a, SparseMatrix::random(30, 20, 4, 5).unwrap());
        assert_ne!(a, SparseMatrix::random(30, 20, 4, 6).unwrap());
        assert!(SparseMatrix::random(3, 2, 4, 0).is_err());
    }

    #[test]
    fn diag_products() {
        let a = SparseMatrix::diagonal(&[3.0, 4.0]);
        assert_eq!(a.apply(&[1.0, 1.0]).unwrap(), vec![3.0, 4.0]);
        assert_eq!(a.apply_transpose(&[1.0, 0.0]).unwrap(), vec![3.0, 0.0]);
        assert_eq!(a.apply(&[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(a.mv_count(), 3);
    }

    #[test]
    fn tall_single_entry() {
        let a = SparseMatrix::from_triplets(3, 2, &[(2, 0, 7.0)]).unwrap();
        assert_eq!(a.apply(&[2.0, 0.0]).unwrap(), vec![0.0, 0.0, 14.0]);
        assert_eq!(a.apply_transpose(&[0.0, 0.0, 1.0]).unwrap(), vec![7.0, 0.0]);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let a = SparseMatrix::diagonal(&[1.0, 2.0]);
        assert!(matches!(
            a.apply(&[1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            a.apply_transpose(&[1.0, 2.0, 3.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert_eq!(a.mv_count(), 0);
    }

    #[test]
    fn duplicates_are_summed() {
        let a = SparseMatrix::from_triplets(2, 2, &[(0, 1, 1.0), (0, 1, 2.0)]).unwrap();
        assert_eq!(a.nnz(), 1);
        assert_eq!(a.values(), &[3.0]);
    }

    #[test]
    fn non_canonical_csr_is_rejected() {
        let err = SparseMatrix::from_csr(1, 3, vec![0, 2], vec![2, 1], vec![1.0, 1.0]);
        assert!(matches!(err, Err(Error::InvalidStructure(_))));
        let err = SparseMatrix::from_csr(1, 3, vec![0, 1], vec![3], vec![1.0]);
        assert!(matches!(err, Err(Error::InvalidStructure(_))));
    }

    #[test]
    fn mapped_gram_endpoints() {
        let a = SparseMatrix::diagonal(&[1.0, 2.0]);
        let x = DenseBlock::identity(2);
        let y = a.apply_mapped_gram(&exact_bounds(2.0, 1.0), &x).unwrap();
        assert_eq!(y.col(0), &[-1.0, 0.0]);
        assert_eq!(y.col(1), &[0.0, 1.0]);
        assert_eq!(a.mv_count(), 4);

        let a = SparseMatrix::diagonal(&[1.0, 2.0, 3.0]);
        let e2 = DenseBlock::from_columns(3, &[vec![0.0, 1.0, 0.0]]).unwrap();
        let y = a.apply_mapped_gram(&exact_bounds(3.0, 1.0), &e2).unwrap();
        assert!((y.get(1, 0) + 0.25).abs() < 1e-15);
        assert_eq!(y.get(0, 0), 0.0);
        assert_eq!(y.get(2, 0), 0.0);
    }

    #[test]
    fn transpose_matches_dense() {
        let a =
            SparseMatrix::from_triplets(3, 2, &[(0, 1, 2.0), (2, 0, -1.0), (1, 1, 5.0)]).unwrap();
        assert_eq!(a.transpose().to_dense(), a.to_dense().transpose());
        assert_eq!(a.transpose().transpose(), a);
    }

    fn arb_matrix() -> impl Strategy<Value = SparseMatrix> {
        (1usize..8, 1usize..8).prop_flat_map(|(m, n)| {
            proptest::collection::vec((0..m, 0..n, -10.0f64..10.0), 0..(m * n + 1))
                .prop_map(move |t| SparseMatrix::from_triplets(m, n, &t).unwrap())
        })
    }

    proptest! {
        #[test]
        fn adjoint_identity(a in arb_matrix(), seed in 0u64..1000) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let x: Vec<f64> = (0..a.cols()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let y: Vec<f64> = (0..a.rows()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let lhs = dot(&a.apply(&x).unwrap(), &y);
            let rhs = dot(&x, &a.apply_transpose(&y).unwrap());
            let scale = a.frobenius_norm() * crate::dense::norm(&x) * crate::dense::norm(&y);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * scale.max(f64::MIN_POSITIVE));
        }

        #[test]
        fn mapped_gram_costs_two_mvs_per_column(p in 1usize..6) {
            let a = SparseMatrix::diagonal(&[1.0, 2.0, 3.0]);
            let x = DenseBlock::zeros(3, p);
            a.apply_mapped_gram(&exact_bounds(3.0, 1.0), &x).unwrap();
            prop_assert_eq!(a.mv_count(), 2 * p as u64);
        }
    }
}
