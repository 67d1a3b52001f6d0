//! Complex linear algebra and Gaussian-density kernels shared by the detectors.
//!
//! Only what the detectors need: a dense row-major complex matrix, a
//! Cholesky factorisation for Hermitian positive-definite systems, scalar
//! circularly-symmetric complex Gaussians and log-domain accumulation.
//!
//! Densities follow the standard circularly-symmetric convention
//! `CN(x; mu, s2) = exp(-|x - mu|^2 / s2) / (pi * s2)`.

use std::f64::consts::PI;
use std::ops::{Index, IndexMut};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Dense complex matrix stored row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |r, c| {
            if r == c {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m[(r, c)] = f(r, c);
            }
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries cannot form a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from its columns.
    pub fn from_columns(columns: &[Vec<Complex64>]) -> Result<Self> {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vec::len);
        if cols == 0 || rows == 0 || columns.iter().any(|c| c.len() != rows) {
            return Err(Error::Dimension("ragged or empty column set".into()));
        }
        Ok(Self::from_fn(rows, cols, |r, c| columns[c][r]))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn column(&self, c: usize) -> Vec<Complex64> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        if x.len() != self.cols {
            return Err(Error::Dimension(format!(
                "vector of length {} against {} columns",
                x.len(),
                self.cols
            )));
        }
        Ok(self
            .data
            .chunks_exact(self.cols)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn mul(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(Self::from_fn(self.rows, other.cols, |r, c| {
            (0..self.cols).map(|k| self[(r, k)] * other[(k, c)]).sum()
        }))
    }

    /// `A += alpha * v v^H`.
    pub fn add_outer(&mut self, v: &[Complex64], alpha: f64) {
        debug_assert!(self.rows == self.cols && v.len() == self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                self[(r, c)] += v[r] * v[c].conj() * alpha;
            }
        }
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|r| (0..=r).all(|c| (self[(r, c)] - self[(c, r)].conj()).norm() <= tol))
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.data[r * self.cols + c]
    }
}

/// `a^H b`.
pub fn dot_h(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt()
}

/// Lower-triangular Cholesky factor `A = L L^H` of a Hermitian positive-definite matrix.
#[derive(Clone, Debug)]
pub struct Cholesky {
    n: usize,
    // row-major lower triangle, diagonal real and positive
    l: Vec<Complex64>,
}

impl Cholesky {
    pub fn factor(a: &ComplexMatrix) -> Result<Self> {
        if a.rows() != a.cols() {
            return Err(Error::Dimension(format!(
                "Cholesky of a non-square {}x{} matrix",
                a.rows(),
                a.cols()
            )));
        }
        let n = a.rows();
        let mut l = vec![Complex64::new(0.0, 0.0); n * n];
        for j in 0..n {
            let mut d = a[(j, j)].re;
            for k in 0..j {
                d -= l[j * n + k].norm_sqr();
            }
            if !(d.is_finite() && d > 0.0) {
                return Err(Error::NotPositiveDefinite { pivot: j, value: d });
            }
            let d = d.sqrt();
            l[j * n + j] = Complex64::new(d, 0.0);
            for i in j + 1..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k].conj();
                }
                l[i * n + j] = s / d;
            }
        }
        Ok(Self { n, l })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `A x = b` by forward then backward substitution.
    pub fn solve(&self, b: &[Complex64]) -> Result<Vec<Complex64>> {
        let n = self.n;
        if b.len() != n {
            return Err(Error::Dimension(format!(
                "right-hand side of length {} for a {n}x{n} system",
                b.len()
            )));
        }
        let l = &self.l;
        let mut z = b.to_vec();
        for i in 0..n {
            let mut s = z[i];
            for k in 0..i {
                s -= l[i * n + k] * z[k];
            }
            z[i] = s / l[i * n + i].re;
        }
        for i in (0..n).rev() {
            let mut s = z[i];
            for k in i + 1..n {
                s -= l[k * n + i].conj() * z[k];
            }
            z[i] = s / l[i * n + i].re;
        }
        Ok(z)
    }

    /// `b^H A^{-1} b`, real and positive for `b != 0`.
    pub fn quadratic_form(&self, b: &[Complex64]) -> Result<f64> {
        let x = self.solve(b)?;
        Ok(dot_h(b, &x).re)
    }
}

/// Solves `A x = b` for Hermitian positive-definite `A`.
pub fn hermitian_solve(a: &ComplexMatrix, b: &[Complex64]) -> Result<Vec<Complex64>> {
    Cholesky::factor(a)?.solve(b)
}

/// Solves a general square system by Gaussian elimination with partial pivoting.
pub fn lu_solve(a: &ComplexMatrix, b: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = a.rows();
    if a.cols() != n || b.len() != n {
        return Err(Error::Dimension(format!(
            "{}x{} system with right-hand side of length {}",
            a.rows(),
            a.cols(),
            b.len()
        )));
    }
    let mut m: Vec<Vec<Complex64>> = (0..n)
        .map(|r| (0..n).map(|c| a[(r, c)]).chain(std::iter::once(b[r])).collect())
        .collect();
    for col in 0..n {
        let p = (col..n)
            .max_by(|&x, &y| m[x][col].norm().total_cmp(&m[y][col].norm()))
            .expect("non-empty pivot range");
        if m[p][col].norm() == 0.0 {
            return Err(Error::Dimension(format!("singular system at column {col}")));
        }
        m.swap(col, p);
        for r in col + 1..n {
            let f = m[r][col] / m[col][col];
            for k in col..=n {
                let t = m[col][k];
                m[r][k] -= f * t;
            }
        }
    }
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    for r in (0..n).rev() {
        let s: Complex64 = (r + 1..n).map(|k| m[r][k] * x[k]).sum();
        x[r] = (m[r][n] - s) / m[r][r];
    }
    Ok(x)
}

/// Circularly-symmetric complex Gaussian on a scalar.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianScalar {
    pub mean: Complex64,
    variance: f64,
}

impl GaussianScalar {
    pub fn new(mean: Complex64, variance: f64) -> Result<Self> {
        if !(variance.is_finite() && variance > 0.0) {
            return Err(Error::Variance(variance));
        }
        Ok(Self { mean, variance })
    }

    /// The unit-power prior `CN(0, 1)`.
    pub fn standard() -> Self {
        Self {
            mean: Complex64::new(0.0, 0.0),
            variance: 1.0,
        }
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn precision(&self) -> f64 {
        self.variance.recip()
    }

    pub fn log_density(&self, x: Complex64) -> f64 {
        -(x - self.mean).norm_sqr() / self.variance - (PI * self.variance).ln()
    }

    /// Product of two densities: the normalised product Gaussian and the log
    /// of the scale factor `CN(mu1; mu2, s1 + s2)`.
    pub fn product(&self, other: &GaussianScalar) -> (GaussianScalar, f64) {
        let p1 = self.precision();
        let p2 = other.precision();
        let precision = p1 + p2;
        let mean = (self.mean * p1 + other.mean * p2) / precision;
        let joint = self.variance + other.variance;
        let scale = -(self.mean - other.mean).norm_sqr() / joint - (PI * joint).ln();
        (
            GaussianScalar {
                mean,
                variance: precision.recip(),
            },
            scale,
        )
    }
}

/// How a log-domain sum is evaluated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LogSum {
    /// Exact `log sum exp`.
    #[default]
    Exact,
    /// Max-log approximation: `log sum exp(v) ~ max(v)`.
    MaxOnly,
}

/// `log(exp(a) + exp(b))`.
#[inline]
pub fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

pub fn log_sum_exp(values: &[f64]) -> Result<f64> {
    log_sum_exp_with(values, LogSum::Exact)
}

pub fn log_sum_exp_with(values: &[f64], mode: LogSum) -> Result<f64> {
    let max = values
        .iter()
        .copied()
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |m| m.max(v))))
        .ok_or(Error::Empty("log_sum_exp of an empty list"))?;
    Ok(match mode {
        LogSum::MaxOnly => max,
        LogSum::Exact if max == f64::NEG_INFINITY || !max.is_finite() => max,
        LogSum::Exact => max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln(),
    })
}

/// Shifts a log table so that it sums to one; returns the removed log mass.
pub fn normalize_log(table: &mut [f64]) -> f64 {
    let z = log_sum_exp(table).expect("probability tables are never empty");
    if !z.is_finite() {
        // no usable mass: fall back to uniform
        let u = -(table.len() as f64).ln();
        table.fill(u);
        return z;
    }
    for v in table.iter_mut() {
        *v -= z;
    }
    z
}
