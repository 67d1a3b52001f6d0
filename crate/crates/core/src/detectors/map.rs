//! Exact marginal posteriors by enumerating every transmit hypothesis.

use num_complex::Complex64;

use super::{accumulate, DetectionResult, Observation, Odometer};
use crate::modem::{Constellation, SymbolPosterior};
use crate::numerics::LogSum;
use crate::{Error, Result};

/// Largest `mM` the enumerator accepts.
pub const MAP_BIT_LIMIT: usize = 24;

pub fn detect_map(obs: Observation<'_>, constellation: &Constellation) -> Result<DetectionResult> {
    run(obs, constellation, LogSum::Exact)
}

pub fn detect_map_with(obs: Observation<'_>, constellation: &Constellation, mode: LogSum) -> Result<DetectionResult> {
    run(obs, constellation, mode)
}

pub(super) fn run(obs: Observation<'_>, constellation: &Constellation, mode: LogSum) -> Result<DetectionResult> {
    let tx = obs.tx();
    let bits = tx * constellation.bits_per_symbol();
    if bits > MAP_BIT_LIMIT {
        return Err(Error::Complexity {
            detector: "map",
            bits,
            limit: MAP_BIT_LIMIT,
        });
    }
    let q = constellation.size();
    let rx = obs.channel.rx();
    let sigma2 = obs.channel.sigma2();

    // images[j][s] = h_j * point(s)
    let images: Vec<Vec<Vec<Complex64>>> = (0..tx)
        .map(|j| {
            let h = obs.channel.column(j);
            constellation
                .points()
                .iter()
                .map(|&s| h.iter().map(|&v| v * s).collect())
                .collect()
        })
        .collect();

    let acc = match mode {
        LogSum::Exact => enumerate_scaled(&images, obs.y, tx, q, sigma2)
            .unwrap_or_else(|| enumerate_log(&images, obs.y, tx, q, sigma2, mode)),
        LogSum::MaxOnly => enumerate_log(&images, obs.y, tx, q, sigma2, mode),
    };
    debug_assert_eq!(obs.y.len(), rx);

    let posteriors = acc.into_iter().map(SymbolPosterior::from_log_weights).collect();
    Ok(DetectionResult::from_posteriors(posteriors, constellation))
}

/// Visits every hypothesis with its metric `-|y - Hx|^2 / s2`.
///
/// `partial[p] = y - sum_{k < p} h_k x_k` is recomputed from the first changed digit on.
fn for_each_hypothesis(
    images: &[Vec<Vec<Complex64>>],
    y: &[Complex64],
    tx: usize,
    q: usize,
    sigma2: f64,
    mut visit: impl FnMut(&[usize], f64),
) {
    let mut partial = vec![y.to_vec(); tx + 1];
    let mut odo = Odometer::new(tx, q);
    let mut from = 0;
    loop {
        for p in from..tx {
            let img = &images[p][odo.digits[p]];
            let (head, tail) = partial.split_at_mut(p + 1);
            for ((dst, src), v) in tail[0].iter_mut().zip(&head[p]).zip(img) {
                *dst = src - v;
            }
        }
        let metric = -partial[tx].iter().map(Complex64::norm_sqr).sum::<f64>() / sigma2;
        visit(&odo.digits, metric);
        match odo.advance() {
            Some(p) => from = p,
            None => break,
        }
    }
}

fn enumerate_log(
    images: &[Vec<Vec<Complex64>>],
    y: &[Complex64],
    tx: usize,
    q: usize,
    sigma2: f64,
    mode: LogSum,
) -> Vec<Vec<f64>> {
    let mut acc = vec![vec![f64::NEG_INFINITY; q]; tx];
    for_each_hypothesis(images, y, tx, q, sigma2, |digits, metric| {
        for (j, &d) in digits.iter().enumerate() {
            accumulate(&mut acc[j][d], metric, mode);
        }
    });
    acc
}

/// Linear-domain sums relative to the running maximum metric; one `exp` per
/// hypothesis. `None` if some marginal underflows, so the caller can redo the
/// frame in the log domain.
fn enumerate_scaled(
    images: &[Vec<Vec<Complex64>>],
    y: &[Complex64],
    tx: usize,
    q: usize,
    sigma2: f64,
) -> Option<Vec<Vec<f64>>> {
    let mut acc = vec![vec![0.0; q]; tx];
    let mut reference = f64::NEG_INFINITY;
    for_each_hypothesis(images, y, tx, q, sigma2, |digits, metric| {
        if metric > reference {
            let scale = (reference - metric).exp();
            for v in acc.iter_mut().flatten() {
                *v *= scale;
            }
            reference = metric;
        }
        let w = (metric - reference).exp();
        for (j, &d) in digits.iter().enumerate() {
            acc[j][d] += w;
        }
    });
    if acc.iter().flatten().any(|&v| v.is_nan() || v <= 0.0) {
        return None;
    }
    Some(
        acc.into_iter()
            .map(|row| row.into_iter().map(|v| v.ln() + reference).collect())
            .collect(),
    )
}
