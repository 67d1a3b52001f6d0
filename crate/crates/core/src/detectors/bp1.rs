//! BP over the fully-connected factor graph: each receive antenna is an
//! observation node tied to every transmit symbol.

use super::{accumulate, BeliefSnapshot, DetectionResult, DetectorConfig, Observation, Odometer, BP1_BIT_LIMIT};
use crate::modem::{Constellation, SymbolPosterior};
use crate::numerics::normalize_log;
use crate::{Error, Result};

pub fn detect_bp1(obs: Observation<'_>, constellation: &Constellation, iters: usize) -> Result<DetectionResult> {
    DetectorConfig::new(super::DetectorKind::Bp1)
        .with_iters(iters)
        .detect(obs, constellation)
}

pub(super) fn run(
    obs: Observation<'_>,
    constellation: &Constellation,
    cfg: &DetectorConfig,
) -> Result<DetectionResult> {
    let tx = obs.tx();
    let rx = obs.channel.rx();
    let bits = tx * constellation.bits_per_symbol();
    if bits > BP1_BIT_LIMIT {
        return Err(Error::Complexity {
            detector: "bp1",
            bits,
            limit: BP1_BIT_LIMIT,
        });
    }
    let q = constellation.size();
    let sigma2 = obs.channel.sigma2();
    let h = obs.channel.h();
    let uniform = -(q as f64).ln();

    // lambda[i][j]: variable j -> observation i; pi[i][j]: observation i -> variable j
    let mut lambda = vec![vec![vec![uniform; q]; tx]; rx];
    let mut pi = vec![vec![vec![uniform; q]; tx]; rx];
    let mut trace = Vec::new();
    let mut beliefs = Vec::new();

    for _ in 0..cfg.iters {
        for i in 0..rx {
            let mut acc = vec![vec![f64::NEG_INFINITY; q]; tx];
            let mut partial = vec![num_complex::Complex64::new(0.0, 0.0); tx + 1];
            partial[0] = obs.y[i];
            let mut prior = vec![0.0; tx + 1];
            let mut odo = Odometer::new(tx, q);
            let mut from = 0;
            loop {
                for p in from..tx {
                    let d = odo.digits[p];
                    partial[p + 1] = partial[p] - h[(i, p)] * constellation.point(d);
                    prior[p + 1] = prior[p] + lambda[i][p][d];
                }
                let metric = -partial[tx].norm_sqr() / sigma2 + prior[tx];
                for (j, &d) in odo.digits.iter().enumerate() {
                    accumulate(&mut acc[j][d], metric, cfg.log_sum);
                }
                match odo.advance() {
                    Some(p) => from = p,
                    None => break,
                }
            }
            // drop the destination's own incoming message
            for (j, table) in acc.iter_mut().enumerate() {
                for (v, l) in table.iter_mut().zip(&lambda[i][j]) {
                    *v -= l;
                }
                normalize_log(table);
            }
            pi[i] = acc;
        }

        beliefs = (0..tx)
            .map(|j| {
                let mut b = vec![0.0; q];
                for table in pi.iter() {
                    for (v, p) in b.iter_mut().zip(&table[j]) {
                        *v += p;
                    }
                }
                b
            })
            .collect::<Vec<_>>();

        for i in 0..rx {
            for j in 0..tx {
                let mut l: Vec<f64> = (0..q)
                    .map(|s| (0..rx).filter(|&k| k != i).map(|k| pi[k][j][s]).sum())
                    .collect();
                normalize_log(&mut l);
                lambda[i][j] = l;
            }
        }

        if cfg.trace {
            trace.push(BeliefSnapshot::Discrete(
                beliefs.iter().cloned().map(SymbolPosterior::from_log_weights).collect(),
            ));
        }
    }

    let posteriors = beliefs.into_iter().map(SymbolPosterior::from_log_weights).collect();
    let mut result = DetectionResult::from_posteriors(posteriors, constellation);
    result.iterations_run = cfg.iters;
    result.trace = trace;
    Ok(result)
}
