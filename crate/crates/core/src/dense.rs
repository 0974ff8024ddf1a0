//! Small dense kernels for the Rayleigh–Ritz step.
//!
//! [`DenseBlock`] is a column-major block of column vectors. Blocks here are
//! tall and skinny (an `n x p` basis with `p` in the tens or hundreds) or
//! square and tiny (the `p x p` projected matrix), so everything is written
//! for clarity over cache tuning.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Column-major dense block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseBlock {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseBlock {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut out = Self::zeros(n, n);
        for i in 0..n {
            out.set(i, i, 1.0);
        }
        out
    }

    /// First `cols` columns of the `rows x rows` identity.
    pub fn eye_columns(rows: usize, cols: usize) -> Self {
        let mut out = Self::zeros(rows, cols);
        for i in 0..cols.min(rows) {
            out.set(i, i, 1.0);
        }
        out
    }

    pub fn from_col_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a block from row-major nested slices; handy in tests.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        let mut out = Self::zeros(m, n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                out.set(i, j, v);
            }
        }
        Ok(out)
    }

    pub fn from_columns(rows: usize, columns: &[Vec<f64>]) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * columns.len());
        for c in columns {
            if c.len() != rows {
                return Err(Error::DimensionMismatch {
                    expected: rows,
                    found: c.len(),
                });
            }
            data.extend_from_slice(c);
        }
        Ok(Self {
            rows,
            cols: columns.len(),
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.rows + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[j * self.rows + i] = v;
    }

    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[f64]> {
        // chunks_exact panics on a zero chunk size
        self.data.chunks(self.rows.max(1)).take(self.cols)
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for j in 0..self.cols {
            for i in 0..self.rows {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    /// `self * other`.
    pub fn matmul(&self, other: &DenseBlock) -> Result<DenseBlock> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: other.rows,
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for j in 0..other.cols {
            let dst = &mut out.data[j * self.rows..(j + 1) * self.rows];
            for (k, &w) in other.col(j).iter().enumerate() {
                if w != 0.0 {
                    axpy(w, self.col(k), dst);
                }
            }
        }
        Ok(out)
    }

    /// `selfᵀ * other`.
    pub fn t_matmul(&self, other: &DenseBlock) -> Result<DenseBlock> {
        if self.rows != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                found: other.rows,
            });
        }
        let mut out = Self::zeros(self.cols, other.cols);
        for j in 0..other.cols {
            for i in 0..self.cols {
                out.set(i, j, dot(self.col(i), other.col(j)));
            }
        }
        Ok(out)
    }

    /// Keeps the first `cols` columns.
    pub fn truncate_cols(&mut self, cols: usize) {
        if cols < self.cols {
            self.cols = cols;
            self.data.truncate(self.rows * cols);
        }
    }

    pub fn select_columns(&self, idx: &[usize]) -> DenseBlock {
        let mut data = Vec::with_capacity(self.rows * idx.len());
        for &j in idx {
            data.extend_from_slice(self.col(j));
        }
        DenseBlock {
            rows: self.rows,
            cols: idx.len(),
            data,
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm(&self.data)
    }

    /// `‖selfᵀself − I‖_F`.
    pub fn orthogonality_error(&self) -> f64 {
        let g = self.t_matmul(self).expect("square gram");
        let mut acc = 0.0;
        for j in 0..g.cols {
            for i in 0..g.rows {
                let d = g.get(i, j) - if i == j { 1.0 } else { 0.0 };
                acc += d * d;
            }
        }
        acc.sqrt()
    }

    pub fn sub(&self, other: &DenseBlock) -> Result<DenseBlock> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch {
                expected: self.rows * self.cols,
                found: other.rows * other.cols,
            });
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Ok(DenseBlock {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }
}

#[inline]
pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

#[inline]
pub fn norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scale(alpha: f64, x: &mut [f64]) {
    for xi in x.iter_mut() {
        *xi *= alpha;
    }
}

/// Thin QR factors: `q` is `rows x cols` with orthonormal columns, `r` is
/// `cols x cols` upper triangular with nonnegative diagonal.
#[derive(Debug, Clone)]
pub struct ThinQr {
    pub q: DenseBlock,
    pub r: DenseBlock,
}

/// Relative column-norm threshold below which [`thin_qr`] reports rank
/// deficiency.
pub const RANK_TOLERANCE: f64 = 1e-14;

/// Householder thin QR, rejecting numerically rank deficient blocks.
pub fn thin_qr(b: &DenseBlock) -> Result<ThinQr> {
    householder(b, true)
}

/// Householder thin QR that never fails. A column whose trailing norm vanishes
/// gets a zero diagonal in `r` and an arbitrary orthonormal completion in `q`.
pub fn thin_qr_unchecked(b: &DenseBlock) -> ThinQr {
    householder(b, false).expect("unchecked factorization cannot fail")
}

fn householder(b: &DenseBlock, checked: bool) -> Result<ThinQr> {
    let (m, p) = (b.rows, b.cols);
    if m < p {
        return Err(Error::InvalidArgument(format!(
            "thin QR needs rows >= cols, got {m}x{p}"
        )));
    }
    let threshold = RANK_TOLERANCE * b.frobenius_norm();
    let mut work = b.clone();
    // reflector k acts on rows k.. and is stored with v[0] at row k
    let mut reflectors: Vec<Vec<f64>> = Vec::with_capacity(p);
    let mut diag = vec![0.0; p];

    for k in 0..p {
        let x = &work.col(k)[k..];
        let alpha = norm(x);
        if checked && alpha <= threshold {
            return Err(Error::RankDeficient { column: k });
        }
        if alpha == 0.0 {
            reflectors.push(Vec::new());
            diag[k] = 0.0;
            continue;
        }
        let sign = if x[0] >= 0.0 { 1.0 } else { -1.0 };
        let mut v = x.to_vec();
        v[0] += sign * alpha;
        let vnorm = norm(&v);
        scale(1.0 / vnorm, &mut v);
        diag[k] = -sign * alpha;
        for j in k..p {
            let col = &mut work.col_mut(j)[k..];
            let t = 2.0 * dot(&v, col);
            axpy(-t, &v, col);
        }
        reflectors.push(v);
    }

    let mut r = DenseBlock::zeros(p, p);
    for j in 0..p {
        for i in 0..j {
            r.set(i, j, work.get(i, j));
        }
        r.set(j, j, diag[j]);
    }

    // Q = H_0 H_1 ... H_{p-1} [I; 0]
    let mut q = DenseBlock::eye_columns(m, p);
    for k in (0..p).rev() {
        let v = &reflectors[k];
        if v.is_empty() {
            continue;
        }
        for j in 0..p {
            let col = &mut q.col_mut(j)[k..];
            let t = 2.0 * dot(v, col);
            axpy(-t, v, col);
        }
    }

    for k in 0..p {
        if r.get(k, k) < 0.0 {
            for j in k..p {
                r.set(k, j, -r.get(k, j));
            }
            scale(-1.0, q.col_mut(k));
        }
    }
    Ok(ThinQr { q, r })
}

/// Full SVD `B = U diag(S) Vᵀ` of a small square block.
#[derive(Debug, Clone)]
pub struct SmallSvd {
    pub u: DenseBlock,
    /// Descending, nonnegative.
    pub s: Vec<f64>,
    pub v: DenseBlock,
}

const JACOBI_MAX_SWEEPS: usize = 80;

/// One-sided (Hestenes) Jacobi SVD of a `p x p` block.
///
/// Columns of `W = B V` are rotated pairwise until mutually orthogonal; the
/// singular values are their norms. Ties in the descending sort keep the
/// original column order.
pub fn svd_small(b: &DenseBlock) -> Result<SmallSvd> {
    let p = b.cols;
    if b.rows != p {
        return Err(Error::InvalidArgument(format!(
            "svd_small expects a square block, got {}x{}",
            b.rows, p
        )));
    }
    let mut w = b.clone();
    let mut v = DenseBlock::identity(p);
    let eps = f64::EPSILON;

    for _sweep in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..p {
            for j in (i + 1)..p {
                let alpha = dot(w.col(i), w.col(i));
                let beta = dot(w.col(j), w.col(j));
                let gamma = dot(w.col(i), w.col(j));
                if gamma == 0.0 || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_columns(&mut w, i, j, c, s);
                rotate_columns(&mut v, i, j, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = (0..p).map(|j| norm(w.col(j))).collect();
    let mut order: Vec<usize> = (0..p).collect();
    // stable sort: equal values keep column order
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]));

    let s: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let v = v.select_columns(&order);
    let smax = s.first().copied().unwrap_or(0.0);
    let cutoff = smax * eps * p as f64;

    let mut u = DenseBlock::zeros(p, p);
    let mut filled = vec![false; p];
    for (k, &j) in order.iter().enumerate() {
        if s[k] > cutoff && s[k] > 0.0 {
            let dst = u.col_mut(k);
            dst.copy_from_slice(w.col(j));
            scale(1.0 / s[k], dst);
            filled[k] = true;
        }
    }
    complete_orthonormal(&mut u, &filled);
    Ok(SmallSvd { u, s, v })
}

fn rotate_columns(m: &mut DenseBlock, i: usize, j: usize, c: f64, s: f64) {
    let rows = m.rows;
    let (lo, hi) = m.data.split_at_mut(j * rows);
    let ci = &mut lo[i * rows..(i + 1) * rows];
    let cj = &mut hi[..rows];
    for (x, y) in ci.iter_mut().zip(cj.iter_mut()) {
        let (a, b) = (*x, *y);
        *x = c * a - s * b;
        *y = s * a + c * b;
    }
}

/// Fills the columns with `filled[k] == false` with unit vectors orthogonal to
/// every other column, drawing candidates from the identity in order.
pub(crate) fn complete_orthonormal(u: &mut DenseBlock, filled: &[bool]) {
    let m = u.rows;
    let mut done: Vec<bool> = filled.to_vec();
    let mut candidate = 0usize;
    for k in 0..u.cols {
        if done[k] {
            continue;
        }
        while candidate < m {
            let mut e = vec![0.0; m];
            e[candidate] = 1.0;
            candidate += 1;
            for _ in 0..2 {
                for (j, &ok) in done.iter().enumerate() {
                    if ok {
                        let c = dot(u.col(j), &e);
                        axpy(-c, u.col(j), &mut e);
                    }
                }
            }
            let nrm = norm(&e);
            if nrm > 0.5 {
                scale(1.0 / nrm, &mut e);
                u.col_mut(k).copy_from_slice(&e);
                done[k] = true;
                break;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_block(rows: usize, cols: usize, seed: u64) -> DenseBlock {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..rows * cols)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        DenseBlock::from_col_major(rows, cols, data).unwrap()
    }

    fn reconstruct(svd: &SmallSvd) -> DenseBlock {
        let mut us = svd.u.clone();
        for (k, &s) in svd.s.iter().enumerate() {
            scale(s, us.col_mut(k));
        }
        us.matmul(&svd.v.transpose()).unwrap()
    }

    #[test]
    fn qr_of_three_four() {
        let b = DenseBlock::from_rows(&[vec![3.0], vec![4.0]]).unwrap();
        let f = thin_qr(&b).unwrap();
        assert!((f.q.get(0, 0) - 0.6).abs() < 1e-15);
        assert!((f.q.get(1, 0) - 0.8).abs() < 1e-15);
        assert!((f.r.get(0, 0) - 5.0).abs() < 1e-14);
    }

    #[test]
    fn qr_of_orthonormal_block_is_signed_identity() {
        let q0 = thin_qr(&random_block(12, 4, 3)).unwrap().q;
        let f = thin_qr(&q0).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((f.r.get(i, j).abs() - expect).abs() < 1e-13);
            }
            let same =
                f.q.col(i)
                    .iter()
                    .zip(q0.col(i))
                    .all(|(a, b)| (a - b).abs() < 1e-13);
            let flipped =
                f.q.col(i)
                    .iter()
                    .zip(q0.col(i))
                    .all(|(a, b)| (a + b).abs() < 1e-13);
            assert!(same || flipped);
        }
    }

    #[test]
    fn qr_random_tall_block() {
        let b = random_block(40, 7, 11);
        let f = thin_qr(&b).unwrap();
        let rec = f.q.matmul(&f.r).unwrap();
        assert!(rec.sub(&b).unwrap().frobenius_norm() <= 1e-13 * b.frobenius_norm());
        assert!(f.q.orthogonality_error() <= 1e-13 * (7f64).sqrt());
        for j in 0..7 {
            assert!(f.r.get(j, j) >= 0.0);
            for i in (j + 1)..7 {
                assert_eq!(f.r.get(i, j), 0.0);
            }
        }
    }

    #[test]
    fn qr_flags_rank_deficiency() {
        let mut b = random_block(10, 3, 5);
        let c0 = b.col(0).to_vec();
        b.col_mut(2).copy_from_slice(&c0);
        assert!(matches!(
            thin_qr(&b),
            Err(Error::RankDeficient { column: 2 })
        ));
        let f = thin_qr_unchecked(&b);
        assert!(f.q.orthogonality_error() < 1e-13);
    }

    #[test]
    fn svd_orders_diagonal() {
        let b = DenseBlock::from_rows(&[vec![2.0, 0.0], vec![0.0, 3.0]]).unwrap();
        let f = svd_small(&b).unwrap();
        assert_eq!(f.s, vec![3.0, 2.0]);
        assert!((f.u.get(1, 0).abs() - 1.0).abs() < 1e-15);
        assert!((f.v.get(1, 0).abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn svd_of_zero_is_identity() {
        let f = svd_small(&DenseBlock::zeros(3, 3)).unwrap();
        assert_eq!(f.s, vec![0.0; 3]);
        assert_eq!(f.u, DenseBlock::identity(3));
        assert_eq!(f.v, DenseBlock::identity(3));
    }

    #[test]
    fn svd_random_square() {
        let b = random_block(10, 10, 17);
        let f = svd_small(&b).unwrap();
        let bn = b.frobenius_norm();
        assert!(reconstruct(&f).sub(&b).unwrap().frobenius_norm() <= 1e-13 * 10.0 * bn);
        assert!(f.u.orthogonality_error() <= 1e-13 * 10.0);
        assert!(f.v.orthogonality_error() <= 1e-13 * 10.0);
        assert!(f.s.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn svd_rank_deficient_square() {
        let mut b = random_block(6, 6, 23);
        let c = b.col(1).to_vec();
        b.col_mut(4).copy_from_slice(&c);
        let f = svd_small(&b).unwrap();
        assert!(f.s[5] < 1e-14 * f.s[0]);
        assert!(f.u.orthogonality_error() < 1e-12);
        assert!(
            reconstruct(&f).sub(&b).unwrap().frobenius_norm() <= 1e-13 * 6.0 * b.frobenius_norm()
        );
    }
}
