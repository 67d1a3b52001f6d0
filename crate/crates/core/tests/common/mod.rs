//! Oracles shared by the integration tests. Linear algebra goes through
//! nalgebra so nothing here reuses the crate's own solvers.

#![allow(dead_code)]

use nalgebra::DMatrix;
use pwbp::channel::{ChannelRealization, Frame, FrameKey};
use pwbp::modem::{Constellation, Modulation};
use pwbp::Complex64;

pub fn frame(seed: u64, stream: u64, rx: usize, tx: usize, sigma2: f64, con: &Constellation) -> Frame {
    Frame::generate(FrameKey { seed, stream }, rx, tx, sigma2, con).unwrap()
}

pub fn qpsk() -> Constellation {
    Constellation::new(Modulation::Qpsk)
}

pub fn to_nalgebra(ch: &ChannelRealization) -> DMatrix<Complex64> {
    let h = ch.h();
    DMatrix::from_fn(h.rows(), h.cols(), |r, c| h[(r, c)])
}

/// `h_j^H (H H^H + s2 I)^{-1} y` through an explicit nalgebra inverse.
pub fn lmmse_direct(ch: &ChannelRealization, y: &[Complex64]) -> Vec<Complex64> {
    let h = to_nalgebra(ch);
    let n = h.nrows();
    let k = &h * h.adjoint() + DMatrix::<Complex64>::identity(n, n) * Complex64::new(ch.sigma2(), 0.0);
    let kinv = k.try_inverse().expect("covariance is invertible");
    let yv = nalgebra::DVector::from_column_slice(y);
    let w = kinv * yv;
    (0..h.ncols())
        .map(|j| (0..n).map(|r| h[(r, j)].conj() * w[r]).sum())
        .collect()
}

/// `max_j |a_j - b_j| / max_j |b_j|`.
pub fn relative_error(a: &[Complex64], b: &[Complex64]) -> f64 {
    let scale = b.iter().map(|v| v.norm()).fold(0.0, f64::max);
    a.iter().zip(b).map(|(x, z)| (x - z).norm()).fold(0.0, f64::max) / scale
}

fn lse(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Log marginals by listing every transmit vector.
pub fn brute_force_log_marginals(f: &Frame, con: &Constellation) -> Vec<Vec<f64>> {
    let h = to_nalgebra(&f.channel);
    let (m, q) = (h.ncols(), con.size());
    let y = nalgebra::DVector::from_column_slice(&f.y);
    let mut table: Vec<(Vec<usize>, f64)> = Vec::new();
    for idx in 0..q.pow(m as u32) {
        let labels: Vec<usize> = (0..m).map(|p| idx / q.pow(p as u32) % q).collect();
        let x = nalgebra::DVector::from_iterator(m, labels.iter().map(|&l| con.point(l)));
        let r = &y - &h * x;
        table.push((labels, -r.norm_squared() / f.channel.sigma2()));
    }
    let z = lse(&table.iter().map(|t| t.1).collect::<Vec<_>>());
    (0..m)
        .map(|j| {
            (0..q)
                .map(|s| lse(&table.iter().filter(|t| t.0[j] == s).map(|t| t.1).collect::<Vec<_>>()) - z)
                .collect()
        })
        .collect()
}

/// `(y', a_cross, a_self)` for the ordered pair `from -> to`, with the
/// covariance excluding both antennas inverted by nalgebra.
pub fn pair_projection(
    ch: &ChannelRealization,
    y: &[Complex64],
    from: usize,
    to: usize,
) -> (Complex64, Complex64, f64) {
    let h = to_nalgebra(ch);
    let n = h.nrows();
    let mut k = DMatrix::<Complex64>::identity(n, n) * Complex64::new(ch.sigma2(), 0.0);
    for c in (0..h.ncols()).filter(|&c| c != from && c != to) {
        k += h.column(c) * h.column(c).adjoint();
    }
    let filt = k.try_inverse().expect("covariance is invertible") * h.column(to);
    let yv = nalgebra::DVector::from_column_slice(y);
    let dot = |v: nalgebra::DVectorView<'_, Complex64>| filt.adjoint() * v;
    (
        (filt.adjoint() * yv)[0],
        dot(h.column(from))[0],
        dot(h.column(to))[0].re,
    )
}

/// Normalised `sum_{x_i} p(x_j | x_i, y') lambda(x_i)` in the probability domain.
pub fn literal_message(
    ch: &ChannelRealization,
    y: &[Complex64],
    from: usize,
    to: usize,
    con: &Constellation,
    lambda: &[f64],
) -> Vec<f64> {
    let (yp, ac, a_self) = pair_projection(ch, y, from, to);
    let var = 1.0 / (1.0 + a_self);
    let out: Vec<f64> = (0..con.size())
        .map(|j| {
            (0..con.size())
                .map(|i| {
                    let mean = (yp - ac * con.point(i)) * var;
                    (-(con.point(j) - mean).norm_sqr() / var).exp() * lambda[i]
                })
                .sum()
        })
        .collect();
    let z: f64 = out.iter().sum();
    out.into_iter().map(|v| v / z).collect()
}
