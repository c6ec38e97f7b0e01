//! Empirical cross- and autocovariance surfaces and their integrals.
//!
//! Surfaces are available explicitly ([`cross_cov_surface`],
//! [`autocov_surface`]) but the estimators never build them. With `A`, `B`
//! the Gram matrices of the centered X and Y curves,
//!
//! ```text
//! ∫∫ Ĉ²_h            = n⁻² Σ_{i,j} A[i,j] B[i+h, j+h]
//! ∫  γ̂_ℓ(t,t) dt     = n⁻¹ Σ_i A[i, i+ℓ]
//! ∫∫ γ̂_ℓ γ̂_ℓ'        = n⁻² Σ_{i,j} A[i,j] A[i+ℓ, j+ℓ']
//! ```
//!
//! where the sums run over indices that stay inside `0..n`. The last
//! identity is the two-dimensional autocorrelation of the zero-padded Gram
//! matrix, which [`LagProductTable`] evaluates for every lag pair at once
//! with a 2-D FFT.

use std::io::Write;

use ndarray::{s, Array2};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{FtsError, FtsResult};
use crate::functional::{center, gram_matrix, FunctionalSample, Grid, GramMatrix};

/// Values of a bivariate function on the grid pairs `(t, s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovSurface {
    pub values: Array2<f64>,
    pub grid: Grid,
    pub lag: i64,
}

impl CovSurface {
    /// `∫∫ f(t, s) dt ds`.
    pub fn integrate(&self) -> f64 {
        let w = self.grid.weights();
        let mut total = 0.0;
        for (j, row) in self.values.rows().into_iter().enumerate() {
            let inner: f64 = row.iter().zip(w).map(|(v, wk)| v * wk).sum();
            total += w[j] * inner;
        }
        total
    }

    /// `∫ f(t, t) dt`.
    pub fn integrate_diagonal(&self) -> f64 {
        self.grid
            .weights()
            .iter()
            .enumerate()
            .map(|(j, w)| w * self.values[[j, j]])
            .sum()
    }

    /// `∫∫ f(t, s) g(t, s) dt ds`.
    pub fn inner(&self, other: &CovSurface) -> f64 {
        let w = self.grid.weights();
        let mut total = 0.0;
        for j in 0..w.len() {
            let mut inner = 0.0;
            for k in 0..w.len() {
                inner += w[k] * self.values[[j, k]] * other.values[[j, k]];
            }
            total += w[j] * inner;
        }
        total
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> FtsResult<()> {
        for row in self.values.rows() {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }
}

fn check_pair(x: &FunctionalSample, y: &FunctionalSample) -> FtsResult<()> {
    if x.n() != y.n() {
        return Err(FtsError::LengthMismatch {
            left: x.n(),
            right: y.n(),
        });
    }
    if x.grid().points() != y.grid().points() {
        return Err(FtsError::GridMismatch);
    }
    Ok(())
}

/// Index window `(first X index, count)` for lag `h`: pairs `(i, i+h)`
/// with both indices inside `0..n`.
fn lag_window(n: usize, h: i64) -> Option<(usize, usize)> {
    let k = h.unsigned_abs() as usize;
    if k >= n {
        return None;
    }
    let start = if h >= 0 { 0 } else { k };
    Some((start, n - k))
}

/// `Ĉ_h(t, s) = n⁻¹ Σ_i (X_i(t) − X̄(t)) (Y_{i+h}(s) − Ȳ(s))`.
pub fn cross_cov_surface(
    x: &FunctionalSample,
    y: &FunctionalSample,
    h: i64,
) -> FtsResult<CovSurface> {
    check_pair(x, y)?;
    let n = x.n();
    let m = x.m();
    let values = match lag_window(n, h) {
        None => Array2::zeros((m, m)),
        Some((start, count)) => {
            let xc = center(x);
            let yc = center(y);
            let ystart = (start as i64 + h) as usize;
            let xs = xc.values().slice(s![start..start + count, ..]);
            let ys = yc.values().slice(s![ystart..ystart + count, ..]);
            xs.t().dot(&ys) / n as f64
        }
    };
    Ok(CovSurface {
        values,
        grid: x.grid().clone(),
        lag: h,
    })
}

/// `γ̂_ℓ(t, s)`, the lag-`ℓ` autocovariance surface of one sample.
pub fn autocov_surface(x: &FunctionalSample, lag: i64) -> FtsResult<CovSurface> {
    cross_cov_surface(x, x, lag)
}

/// Gram matrix of a sample after subtracting its full-sample mean curve.
#[derive(Debug, Clone)]
pub struct CenteredGram(GramMatrix);

impl CenteredGram {
    pub fn new(sample: &FunctionalSample) -> Self {
        CenteredGram(gram_matrix(&center(sample)))
    }

    pub fn gram(&self) -> &GramMatrix {
        &self.0
    }

    pub fn n(&self) -> usize {
        self.0.n()
    }

    fn raw(&self) -> &[f64] {
        self.0
            .entries()
            .as_slice()
            .expect("gram matrix is stored contiguously")
    }

    /// `∫ γ̂_ℓ(t, t) dt = n⁻¹ Σ_i A[i, i+ℓ]`; even in `ℓ`.
    pub fn trace_autocov(&self, lag: i64) -> f64 {
        let n = self.n();
        let k = lag.unsigned_abs() as usize;
        if k >= n {
            return 0.0;
        }
        let a = self.raw();
        let total: f64 = (0..n - k).map(|i| a[i * n + i + k]).sum();
        total / n as f64
    }

    /// `∫ γ̂_ℓ(t, t) dt` for `ℓ = 0, 1, …, n−1`.
    pub fn trace_autocov_all(&self) -> Vec<f64> {
        (0..self.n() as i64).map(|l| self.trace_autocov(l)).collect()
    }
}

/// `n⁻² Σ_{i,j < n−k} early[i,j] · late[i+k, j+k]`.
fn shifted_product_sum(early: &CenteredGram, late: &CenteredGram, k: usize) -> f64 {
    let n = early.n();
    if k >= n {
        return 0.0;
    }
    let a = early.raw();
    let b = late.raw();
    let len = n - k;
    let mut total = 0.0;
    for i in 0..len {
        let arow = &a[i * n..i * n + len];
        let brow = &b[(i + k) * n + k..(i + k) * n + k + len];
        let row: f64 = arow.iter().zip(brow).map(|(p, q)| p * q).sum();
        total += row;
    }
    total / (n as f64 * n as f64)
}

/// `∫∫ Ĉ²_h` from the centered Gram matrices of X (`a`) and Y (`b`).
pub fn xi_from_grams(a: &CenteredGram, b: &CenteredGram, h: i64) -> f64 {
    let k = h.unsigned_abs() as usize;
    if h >= 0 {
        shifted_product_sum(a, b, k)
    } else {
        shifted_product_sum(b, a, k)
    }
}

/// `∫∫ Ĉ²_h(t, s) dt ds`, via the Gram factorization.
pub fn integrated_sq_cross_cov(
    x: &FunctionalSample,
    y: &FunctionalSample,
    h: i64,
) -> FtsResult<f64> {
    check_pair(x, y)?;
    Ok(xi_from_grams(&CenteredGram::new(x), &CenteredGram::new(y), h))
}

/// Integrated lag-`ℓ` autocovariance `∫ γ̂_ℓ(t, t) dt`, the sample analogue
/// of `∫ cov(X_0(t), X_ℓ(t)) dt`.
pub fn integrated_autocov(x: &FunctionalSample, lag: i64) -> f64 {
    CenteredGram::new(x).trace_autocov(lag)
}

/// Matrix of `∫∫ γ̂_ℓ γ̂_ℓ'` for `ℓ, ℓ' ∈ [−L, L]` (row/column `ℓ + L`),
/// computed directly from the centered Gram matrix.
pub fn gram_of_autocov_surfaces(x: &FunctionalSample, max_lag: usize) -> Array2<f64> {
    let gram = CenteredGram::new(x);
    autocov_products_direct(&gram, max_lag)
}

/// Direct `O(n²)`-per-entry evaluation of `∫∫ γ̂_ℓ γ̂_ℓ'` for `|ℓ|, |ℓ'| ≤ L`.
pub fn autocov_products_direct(gram: &CenteredGram, max_lag: usize) -> Array2<f64> {
    let n = gram.n();
    let a = gram.raw();
    let size = 2 * max_lag + 1;
    let mut out = Array2::zeros((size, size));
    let norm = 1.0 / (n as f64 * n as f64);
    let lags: Vec<i64> = (-(max_lag as i64)..=max_lag as i64).collect();
    for (p, &l1) in lags.iter().enumerate() {
        for (q, &l2) in lags.iter().enumerate().skip(p) {
            let value = match (lag_window(n, l1), lag_window(n, l2)) {
                (Some((si, ci)), Some((sj, cj))) => {
                    let mut total = 0.0;
                    for i in si..si + ci {
                        let i2 = (i as i64 + l1) as usize;
                        let row = &a[i * n..(i + 1) * n];
                        let row2 = &a[i2 * n..(i2 + 1) * n];
                        for j in sj..sj + cj {
                            let j2 = (j as i64 + l2) as usize;
                            total += row[j] * row2[j2];
                        }
                    }
                    total * norm
                }
                _ => 0.0,
            };
            out[[p, q]] = value;
            out[[q, p]] = value;
        }
    }
    out
}

/// `∫∫ γ̂_ℓ γ̂_ℓ'` for every `ℓ, ℓ' ∈ (−n, n)`, stored densely with row and
/// column index `ℓ + n − 1`.
#[derive(Debug, Clone)]
pub struct LagProductTable {
    n: usize,
    data: Vec<f64>,
}

impl LagProductTable {
    /// Side length `2n − 1`.
    pub fn dim(&self) -> usize {
        2 * self.n - 1
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `∫∫ γ̂_ℓ γ̂_ℓ'`; zero when either lag is out of range.
    pub fn get(&self, l1: i64, l2: i64) -> f64 {
        let off = self.n as i64 - 1;
        let (p, q) = (l1 + off, l2 + off);
        let d = self.dim() as i64;
        if p < 0 || q < 0 || p >= d || q >= d {
            return 0.0;
        }
        self.data[(p * d + q) as usize]
    }

    /// Row of the table for lag `ℓ` (index `ℓ' + n − 1`).
    pub fn row(&self, lag: i64) -> &[f64] {
        let d = self.dim();
        let p = (lag + self.n as i64 - 1) as usize;
        &self.data[p * d..(p + 1) * d]
    }

    /// Tables for one sample.
    pub fn single(gram: &CenteredGram) -> Self {
        let (table, _) = Self::pair(gram, gram);
        table
    }

    /// Tables for two samples of equal length, sharing one forward and one
    /// inverse complex FFT: `A + iB` is transformed, the two spectra are
    /// separated by Hermitian symmetry, and `|Â|² + i|B̂|²` is inverted.
    pub fn pair(a: &CenteredGram, b: &CenteredGram) -> (Self, Self) {
        assert_eq!(a.n(), b.n(), "lag tables need samples of equal length");
        let n = a.n();
        let size = fft_size(2 * n - 1);
        let mut buf = vec![Complex::new(0.0, 0.0); size * size];
        let (ra, rb) = (a.raw(), b.raw());
        for i in 0..n {
            for j in 0..n {
                buf[i * size + j] = Complex::new(ra[i * n + j], rb[i * n + j]);
            }
        }

        let mut planner = FftPlanner::<f64>::new();
        let forward = planner.plan_fft_forward(size);
        let inverse = planner.plan_fft_inverse(size);
        let mut scratch = vec![Complex::new(0.0, 0.0); forward.get_inplace_scratch_len()];

        forward.process_with_scratch(&mut buf, &mut scratch);
        transpose_square(&mut buf, size);
        forward.process_with_scratch(&mut buf, &mut scratch);

        // Split Z = Â + iB̂ and form |Â|² + i|B̂|²; the transposed layout is
        // harmless since (k1, k2) -> (-k1, -k2) commutes with transposition.
        for p in 0..size {
            let pm = (size - p) % size;
            for q in 0..size {
                let qm = (size - q) % size;
                let idx = p * size + q;
                let mirror = pm * size + qm;
                if mirror < idx {
                    continue;
                }
                let z = buf[idx];
                let zc = buf[mirror].conj();
                let fa = (z + zc) * 0.5;
                let fb = (z - zc) * 0.5;
                let value = Complex::new(fa.norm_sqr(), fb.norm_sqr());
                buf[idx] = value;
                buf[mirror] = value;
            }
        }

        let mut scratch = vec![Complex::new(0.0, 0.0); inverse.get_inplace_scratch_len()];
        inverse.process_with_scratch(&mut buf, &mut scratch);
        transpose_square(&mut buf, size);
        inverse.process_with_scratch(&mut buf, &mut scratch);

        let d = 2 * n - 1;
        let scale = 1.0 / (size as f64 * size as f64 * n as f64 * n as f64);
        let mut da = vec![0.0; d * d];
        let mut db = vec![0.0; d * d];
        let wrap = |l: i64| -> usize { l.rem_euclid(size as i64) as usize };
        for p in 0..d {
            let src_row = wrap(p as i64 - (n as i64 - 1)) * size;
            for q in 0..d {
                let v = buf[src_row + wrap(q as i64 - (n as i64 - 1))];
                da[p * d + q] = v.re * scale;
                db[p * d + q] = v.im * scale;
            }
        }
        symmetrize(&mut da, d);
        symmetrize(&mut db, d);
        (Self { n, data: da }, Self { n, data: db })
    }
}

/// The table is symmetric under `(ℓ, ℓ') ↔ (ℓ', ℓ)` and
/// `(ℓ, ℓ') ↔ (−ℓ, −ℓ')`; enforce both exactly.
fn symmetrize(data: &mut [f64], d: usize) {
    for p in 0..d {
        for q in 0..d {
            let (pr, qr) = (d - 1 - p, d - 1 - q);
            let cells = [(p, q), (q, p), (pr, qr), (qr, pr)];
            let lead = *cells.iter().min().expect("non-empty");
            if (p, q) != lead {
                continue;
            }
            let mean = cells.iter().map(|&(r, c)| data[r * d + c]).sum::<f64>() / 4.0;
            for &(r, c) in &cells {
                data[r * d + c] = mean;
            }
        }
    }
}

fn transpose_square(buf: &mut [Complex<f64>], size: usize) {
    const BLOCK: usize = 32;
    for ib in (0..size).step_by(BLOCK) {
        for jb in (ib..size).step_by(BLOCK) {
            for i in ib..(ib + BLOCK).min(size) {
                let jstart = if ib == jb { i + 1 } else { jb };
                for j in jstart..(jb + BLOCK).min(size) {
                    buf.swap(i * size + j, j * size + i);
                }
            }
        }
    }
}

/// Smallest 5-smooth integer `≥ len`.
fn fft_size(len: usize) -> usize {
    let mut candidate = len.max(1);
    loop {
        let mut r = candidate;
        for p in [2, 3, 5] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return candidate;
        }
        candidate += 1;
    }
}
