//! Dense complex matrices and a Hermitian Cholesky factorization.
//!
//! The factorization keeps real and imaginary parts in separate row-major
//! arrays so the inner dot products run over contiguous `f64` slices.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // unused when a dependency links std
use num_traits::Float;

use crate::{Error, Result, C64};

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::invalid(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(CMatrix { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        CMatrix { rows, cols, data }
    }

    pub fn diagonal(d: &[C64]) -> Self {
        let n = d.len();
        let mut m = Self::zeros(n, n);
        for (i, v) in d.iter().enumerate() {
            m.data[i * n + i] = *v;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: C64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn row(&self, r: usize) -> &[C64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<C64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn set_column(&mut self, c: usize, v: &[C64]) {
        for (r, x) in v.iter().enumerate() {
            self.set(r, c, *x);
        }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> CMatrix {
        CMatrix::from_fn(self.cols, self.rows, |r, c| self.get(c, r).conj())
    }

    pub fn mul_vec(&self, x: &[C64]) -> Result<Vec<C64>> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: (self.cols, 1),
                actual: (x.len(), 1),
            });
        }
        Ok((0..self.rows)
            .map(|r| self.row(r).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// `selfᴴ · x`.
    pub fn adjoint_mul_vec(&self, x: &[C64]) -> Result<Vec<C64>> {
        if x.len() != self.rows {
            return Err(Error::DimensionMismatch {
                expected: (self.rows, 1),
                actual: (x.len(), 1),
            });
        }
        let mut out = vec![C64::new(0.0, 0.0); self.cols];
        for (r, xr) in x.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(r)) {
                *o += a.conj() * xr;
            }
        }
        Ok(out)
    }

    pub fn mul(&self, other: &CMatrix) -> Result<CMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                expected: (self.cols, other.cols),
                actual: (other.rows, other.cols),
            });
        }
        let mut out = CMatrix::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            let dst = &mut out.data[r * other.cols..(r + 1) * other.cols];
            for (k, a) in self.row(r).iter().enumerate() {
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                for (d, b) in dst.iter_mut().zip(other.row(k)) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `selfᴴ · self`.
    pub fn gram(&self) -> CMatrix {
        let n = self.cols;
        let mut out = CMatrix::zeros(n, n);
        for r in 0..self.rows {
            let row = self.row(r);
            for (i, a) in row.iter().enumerate() {
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let ac = a.conj();
                let dst = &mut out.data[i * n..(i + 1) * n];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += ac * b;
                }
            }
        }
        out
    }

    pub fn add_diagonal(&mut self, v: f64) {
        let n = self.rows.min(self.cols);
        for i in 0..n {
            self.data[i * self.cols + i].re += v;
        }
    }

    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Frobenius norm squared.
    pub fn energy(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum()
    }

    /// Symmetric row/column permutation: `out[i][j] = self[perm[i]][perm[j]]`.
    pub fn permuted(&self, perm: &[usize]) -> CMatrix {
        CMatrix::from_fn(perm.len(), perm.len(), |i, j| self.get(perm[i], perm[j]))
    }
}

/// Lower-triangular factor `L` of a Hermitian positive definite matrix,
/// `A = L·Lᴴ`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    // row-major n×n; only j <= i is meaningful
    re: Vec<f64>,
    im: Vec<f64>,
}

impl Cholesky {
    /// Factors `a`, reading only its lower triangle.
    pub fn factor(a: &CMatrix) -> Result<Cholesky> {
        if a.rows != a.cols {
            return Err(Error::DimensionMismatch {
                expected: (a.rows, a.rows),
                actual: (a.rows, a.cols),
            });
        }
        let n = a.rows;
        let mut re = vec![0.0; n * n];
        let mut im = vec![0.0; n * n];
        // rows are produced in groups so each earlier row is streamed once
        // per group rather than once per row
        let mut i0 = 0;
        while i0 < n {
            let rows = ROW_BLOCK.min(n - i0);
            for j in 0..i0 {
                let (rj, ij) = (&re[j * n..j * n + j], &im[j * n..j * n + j]);
                let sums = dot_conj_rows(&re, &im, n, i0, rows, j, rj, ij);
                let inv = 1.0 / re[j * n + j];
                for (r, (sr, si)) in sums.iter().take(rows).enumerate() {
                    let i = i0 + r;
                    let aij = a.get(i, j);
                    re[i * n + j] = (aij.re - sr) * inv;
                    im[i * n + j] = (aij.im - si) * inv;
                }
            }
            for i in i0..i0 + rows {
                for j in i0..=i {
                    let aij = a.get(i, j);
                    let (sr, si) = dot_conj(&re[i * n..i * n + j], &im[i * n..i * n + j], &re[j * n..j * n + j], &im[j * n..j * n + j]);
                    if i == j {
                        let d = aij.re - sr;
                        if !(d > 0.0) || !d.is_finite() {
                            return Err(Error::Singular { pivot: i });
                        }
                        re[i * n + i] = d.sqrt();
                    } else {
                        let inv = 1.0 / re[j * n + j];
                        re[i * n + j] = (aij.re - sr) * inv;
                        im[i * n + j] = (aij.im - si) * inv;
                    }
                }
            }
            i0 += rows;
        }
        Ok(Cholesky { n, re, im })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// `L[i][j]` for `j <= i`, zero above the diagonal.
    pub fn l(&self, i: usize, j: usize) -> C64 {
        if j > i {
            C64::new(0.0, 0.0)
        } else {
            C64::new(self.re[i * self.n + j], self.im[i * self.n + j])
        }
    }

    /// Real diagonal `L[i][i]`.
    pub fn diag(&self, i: usize) -> f64 {
        self.re[i * self.n + i]
    }

    /// Solves `L·x = b`.
    pub fn forward(&self, b: &[C64]) -> Vec<C64> {
        let n = self.n;
        assert_eq!(b.len(), n, "rhs length mismatch");
        let mut xr = vec![0.0; n];
        let mut xi = vec![0.0; n];
        for i in 0..n {
            let (sr, si) = dot_plain(
                &self.re[i * n..i * n + i],
                &self.im[i * n..i * n + i],
                &xr[..i],
                &xi[..i],
            );
            let d = 1.0 / self.re[i * n + i];
            xr[i] = (b[i].re - sr) * d;
            xi[i] = (b[i].im - si) * d;
        }
        xr.into_iter().zip(xi).map(|(r, i)| C64::new(r, i)).collect()
    }

    /// Solves `Lᴴ·x = b`.
    pub fn backward(&self, b: &[C64]) -> Vec<C64> {
        let n = self.n;
        assert_eq!(b.len(), n, "rhs length mismatch");
        let mut x = b.to_vec();
        for i in (0..n).rev() {
            let xi = x[i] / self.re[i * n + i];
            x[i] = xi;
            // column i of Lᴴ above the diagonal is conj(L[i][j]) for j < i
            for j in 0..i {
                let l = C64::new(self.re[i * n + j], -self.im[i * n + j]);
                x[j] -= l * xi;
            }
        }
        x
    }

    /// Solves `A·x = b`.
    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        self.backward(&self.forward(b))
    }

    /// Diagonal of `A⁻¹`.
    pub fn inverse_diagonal(&self) -> Vec<f64> {
        // A⁻¹ = L⁻ᴴ L⁻¹, so [A⁻¹]_ii is the squared norm of column i of L⁻¹.
        let n = self.n;
        let mut out = vec![0.0; n];
        let mut wr = vec![0.0; n];
        let mut wi = vec![0.0; n];
        for col in 0..n {
            // forward substitution for L w = e_col; w is zero above col
            wr[..col].iter_mut().for_each(|v| *v = 0.0);
            wi[..col].iter_mut().for_each(|v| *v = 0.0);
            wr[col] = 1.0 / self.re[col * n + col];
            wi[col] = 0.0;
            let mut acc = wr[col] * wr[col];
            for i in col + 1..n {
                let (sr, si) = dot_plain(
                    &self.re[i * n + col..i * n + i],
                    &self.im[i * n + col..i * n + i],
                    &wr[col..i],
                    &wi[col..i],
                );
                let d = 1.0 / self.re[i * n + i];
                wr[i] = -sr * d;
                wi[i] = -si * d;
                acc += wr[i] * wr[i] + wi[i] * wi[i];
            }
            out[col] = acc;
        }
        out
    }
}

const LANES: usize = 8;
const ROW_BLOCK: usize = 4;

// Σ_k L[i0+r][k]·conj(b_k) for up to ROW_BLOCK consecutive rows, sharing the
// loads of b
#[allow(clippy::too_many_arguments)]
#[inline]
fn dot_conj_rows(
    re: &[f64],
    im: &[f64],
    n: usize,
    i0: usize,
    rows: usize,
    len: usize,
    br: &[f64],
    bi: &[f64],
) -> [(f64, f64); ROW_BLOCK] {
    let mut out = [(0.0, 0.0); ROW_BLOCK];
    if rows < ROW_BLOCK {
        for (r, o) in out.iter_mut().take(rows).enumerate() {
            let i = i0 + r;
            *o = dot_conj(&re[i * n..i * n + len], &im[i * n..i * n + len], br, bi);
        }
        return out;
    }
    const W: usize = 2;
    let row = |r: usize| {
        let i = i0 + r;
        (&re[i * n..i * n + len], &im[i * n..i * n + len])
    };
    let (a0, a1, a2, a3) = (row(0), row(1), row(2), row(3));
    let (br, bi) = (&br[..len], &bi[..len]);
    let mut sr = [[0.0; W]; ROW_BLOCK];
    let mut si = [[0.0; W]; ROW_BLOCK];
    let whole = len - len % W;
    for k in (0..whole).step_by(W) {
        let (c, d) = (&br[k..k + W], &bi[k..k + W]);
        for (r, a) in [a0, a1, a2, a3].iter().enumerate() {
            let (x, y) = (&a.0[k..k + W], &a.1[k..k + W]);
            for w in 0..W {
                sr[r][w] += x[w] * c[w] + y[w] * d[w];
                si[r][w] += y[w] * c[w] - x[w] * d[w];
            }
        }
    }
    for (r, a) in [a0, a1, a2, a3].iter().enumerate() {
        let (mut tr, mut ti) = (sr[r].iter().sum::<f64>(), si[r].iter().sum::<f64>());
        for k in whole..len {
            tr += a.0[k] * br[k] + a.1[k] * bi[k];
            ti += a.1[k] * br[k] - a.0[k] * bi[k];
        }
        out[r] = (tr, ti);
    }
    out
}

// Σ a_k · conj(b_k), with lane-split partial sums so the loop vectorizes
#[inline]
fn dot_conj(ar: &[f64], ai: &[f64], br: &[f64], bi: &[f64]) -> (f64, f64) {
    dot(ar, ai, br, bi, true)
}

// Σ a_k · b_k
#[inline]
fn dot_plain(ar: &[f64], ai: &[f64], br: &[f64], bi: &[f64]) -> (f64, f64) {
    dot(ar, ai, br, bi, false)
}

#[inline(always)]
fn dot(ar: &[f64], ai: &[f64], br: &[f64], bi: &[f64], conj: bool) -> (f64, f64) {
    let n = ar.len();
    let (ai, br, bi) = (&ai[..n], &br[..n], &bi[..n]);
    let s = if conj { -1.0 } else { 1.0 };
    let mut rr = [0.0; LANES];
    let mut ii = [0.0; LANES];
    let mut ri = [0.0; LANES];
    let mut ir = [0.0; LANES];
    let whole = n - n % LANES;
    for k in (0..whole).step_by(LANES) {
        let (a, b, c, d) = (&ar[k..k + LANES], &ai[k..k + LANES], &br[k..k + LANES], &bi[k..k + LANES]);
        for j in 0..LANES {
            rr[j] += a[j] * c[j];
            ii[j] += b[j] * d[j];
            ri[j] += a[j] * d[j];
            ir[j] += b[j] * c[j];
        }
    }
    let (mut srr, mut sii, mut sri, mut sir) = (0.0, 0.0, 0.0, 0.0);
    for j in 0..LANES {
        srr += rr[j];
        sii += ii[j];
        sri += ri[j];
        sir += ir[j];
    }
    for k in whole..n {
        srr += ar[k] * br[k];
        sii += ai[k] * bi[k];
        sri += ar[k] * bi[k];
        sir += ai[k] * br[k];
    }
    // conj: (a_r + j a_i)(b_r − j b_i); plain: (a_r + j a_i)(b_r + j b_i)
    (srr - s * sii, sir + s * sri)
}
