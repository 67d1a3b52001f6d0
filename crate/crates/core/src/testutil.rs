//! Independent oracles for unit tests.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::{draw_channel, ChannelRealization};
use crate::numerics::ComplexMatrix;

/// Dense Gaussian elimination with partial pivoting.
pub fn eliminate(a: &ComplexMatrix, b: &[Complex64]) -> Vec<Complex64> {
    let n = a.rows();
    let mut m: Vec<Vec<Complex64>> = (0..n)
        .map(|r| {
            let mut row: Vec<_> = (0..n).map(|c| a[(r, c)]).collect();
            row.push(b[r]);
            row
        })
        .collect();
    for col in 0..n {
        let p = (col..n)
            .max_by(|&x, &y| m[x][col].norm().total_cmp(&m[y][col].norm()))
            .unwrap();
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
    x
}

/// `sigma2 I + sum_{k not in excluded} h_k h_k^H`, built entry by entry.
pub fn naive_covariance(ch: &ChannelRealization, excluded: &[usize]) -> ComplexMatrix {
    let n = ch.rx();
    ComplexMatrix::from_fn(n, n, |r, c| {
        let mut v = if r == c {
            Complex64::new(ch.sigma2(), 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        };
        for k in 0..ch.tx() {
            if !excluded.contains(&k) {
                v += ch.h()[(r, k)] * ch.h()[(c, k)].conj();
            }
        }
        v
    })
}

pub fn dot_h(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Seeded channel plus a received vector drawn from unit-power Gaussian inputs.
pub fn random_problem(seed: u64, rx: usize, tx: usize, sigma2: f64) -> (ChannelRealization, Vec<Complex64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ch = draw_channel(rx, tx, sigma2, &mut rng).unwrap();
    let y = (0..rx)
        .map(|_| Complex64::new(rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0))
        .collect();
    (ch, y)
}

/// Direct LMMSE estimate `h_j^H K^{-1} y` by elimination.
pub fn lmmse_oracle(ch: &ChannelRealization, y: &[Complex64]) -> Vec<Complex64> {
    let k = naive_covariance(ch, &[]);
    let w = eliminate(&k, y);
    (0..ch.tx()).map(|j| dot_h(ch.column(j), &w)).collect()
}

/// 2-norm condition number of `H` from power iteration on `H^H H` and its inverse.
pub fn condition_number(ch: &ChannelRealization) -> f64 {
    let h = ch.h();
    let gram = h.adjoint().mul(h).unwrap();
    let n = gram.rows();
    let power = |apply: &dyn Fn(&[Complex64]) -> Vec<Complex64>| {
        let mut v: Vec<Complex64> = (0..n).map(|k| Complex64::new(1.0 + k as f64, 0.5)).collect();
        let mut lambda = 0.0;
        for _ in 0..500 {
            let w = apply(&v);
            let nrm = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            lambda = nrm / v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            v = w.into_iter().map(|z| z / nrm).collect();
        }
        lambda
    };
    let largest = power(&|v| gram.mul_vec(v).unwrap());
    let inv_largest = power(&|v| eliminate(&gram, v));
    (largest * inv_largest).sqrt()
}
