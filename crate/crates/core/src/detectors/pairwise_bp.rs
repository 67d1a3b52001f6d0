//! Discrete message passing over the pair-wise graphs.
//!
//! A message `i -> j` is a log table over the alphabet of `x_j`. It is built
//! from the extrinsic table on `x_i` by summing the translation kernel
//! `p(x_j | x_i, y'_{j|i})` over `x_i`, then normalising.

use super::{accumulate, BeliefSnapshot, DetectionResult, DetectorConfig, DetectorKind, Observation};
use crate::modem::{Constellation, SymbolPosterior};
use crate::numerics::{normalize_log, LogSum};
use crate::pairwise::{compute_pair_statistics, PairStatistics, PairTable, PairTopology};
use crate::{Error, Result};

/// Log kernel of one ordered pair, `kernel[x_j * q + x_i]`.
fn kernel(stats: &PairStatistics, constellation: &Constellation) -> Vec<f64> {
    let tf = stats.translation();
    let pts = constellation.points();
    pts.iter()
        .flat_map(|&xj| pts.iter().map(move |&xi| tf.log_kernel(xj, xi)))
        .collect()
}

fn translate(kernel: &[f64], extrinsic: &[f64], mode: LogSum) -> Vec<f64> {
    let q = extrinsic.len();
    let mut out: Vec<f64> = kernel
        .chunks_exact(q)
        .map(|row| {
            let mut acc = f64::NEG_INFINITY;
            for (k, l) in row.iter().zip(extrinsic) {
                accumulate(&mut acc, k + l, mode);
            }
            acc
        })
        .collect();
    normalize_log(&mut out);
    out
}

/// Flooding-schedule BP over every ordered pair.
#[derive(Clone, Debug)]
pub struct FullyConnectedBp {
    m: usize,
    q: usize,
    kernels: Vec<Vec<f64>>,
    messages: Vec<Vec<f64>>,
    mode: LogSum,
}

impl FullyConnectedBp {
    pub fn new(table: &PairTable, constellation: &Constellation, mode: LogSum) -> Self {
        let m = table.antennas();
        let q = constellation.size();
        let mut kernels = vec![Vec::new(); m * m];
        for s in table.iter() {
            kernels[s.from * m + s.to] = kernel(s, constellation);
        }
        Self {
            m,
            q,
            kernels,
            messages: vec![vec![-(q as f64).ln(); q]; m * m],
            mode,
        }
    }

    /// Current message `from -> to` on `x_to`.
    pub fn message(&self, from: usize, to: usize) -> &[f64] {
        &self.messages[from * self.m + to]
    }

    /// Product of the messages into `from` except the one from `to`.
    pub fn extrinsic(&self, from: usize, to: usize) -> Vec<f64> {
        let mut l = vec![0.0; self.q];
        for k in (0..self.m).filter(|&k| k != from && k != to) {
            for (v, p) in l.iter_mut().zip(self.message(k, from)) {
                *v += p;
            }
        }
        l
    }

    /// One flooding iteration: every message is recomputed from the previous ones.
    pub fn step(&mut self) {
        let m = self.m;
        let next: Vec<Vec<f64>> = (0..m * m)
            .map(|idx| {
                let (i, j) = (idx / m, idx % m);
                if i == j {
                    return self.messages[idx].clone();
                }
                translate(&self.kernels[idx], &self.extrinsic(i, j), self.mode)
            })
            .collect();
        self.messages = next;
    }

    pub fn beliefs(&self) -> Vec<SymbolPosterior> {
        (0..self.m)
            .map(|j| {
                let mut b = vec![0.0; self.q];
                for k in (0..self.m).filter(|&k| k != j) {
                    for (v, p) in b.iter_mut().zip(self.message(k, j)) {
                        *v += p;
                    }
                }
                SymbolPosterior::from_log_weights(b)
            })
            .collect()
    }
}

/// Forward-backward BP around a ring.
///
/// `forward[p]` is the message from `order[p]` to its successor and
/// `backward[p]` the message from `order[p]` to its predecessor.
#[derive(Clone, Debug)]
pub struct RingBp {
    order: Vec<usize>,
    q: usize,
    forward_kernels: Vec<Vec<f64>>,
    backward_kernels: Vec<Vec<f64>>,
    forward: Vec<Vec<f64>>,
    backward: Vec<Vec<f64>>,
    mode: LogSum,
}

impl RingBp {
    pub fn new(table: &PairTable, constellation: &Constellation, mode: LogSum) -> Result<Self> {
        let topo = table.topology();
        if topo.kind() != crate::pairwise::TopologyKind::Ring {
            return Err(Error::NotRing);
        }
        let m = topo.antennas();
        let q = constellation.size();
        let order = topo.order().to_vec();
        let forward_kernels = (0..m)
            .map(|p| kernel(table.get(order[p], topo.next(p)), constellation))
            .collect();
        let backward_kernels = (0..m)
            .map(|p| kernel(table.get(order[p], topo.prev(p)), constellation))
            .collect();
        Ok(Self {
            order,
            q,
            forward_kernels,
            backward_kernels,
            forward: vec![vec![-(q as f64).ln(); q]; m],
            backward: vec![vec![-(q as f64).ln(); q]; m],
            mode,
        })
    }

    fn len(&self) -> usize {
        self.order.len()
    }

    pub fn forward_message(&self, pos: usize) -> &[f64] {
        &self.forward[pos]
    }

    pub fn backward_message(&self, pos: usize) -> &[f64] {
        &self.backward[pos]
    }

    /// One turn in the forward direction, starting at ring position 0.
    pub fn forward_sweep(&mut self) {
        let m = self.len();
        for p in 0..m {
            let incoming = &self.forward[(p + m - 1) % m];
            self.forward[p] = translate(&self.forward_kernels[p], incoming, self.mode);
        }
    }

    /// One turn in the backward direction, starting at ring position 0.
    pub fn backward_sweep(&mut self) {
        let m = self.len();
        for k in 0..m {
            let p = (m - k) % m;
            let incoming = &self.backward[(p + 1) % m];
            self.backward[p] = translate(&self.backward_kernels[p], incoming, self.mode);
        }
    }

    pub fn iterate(&mut self) {
        self.forward_sweep();
        self.backward_sweep();
    }

    /// Beliefs in antenna order.
    pub fn beliefs(&self) -> Vec<SymbolPosterior> {
        let m = self.len();
        let mut out = vec![SymbolPosterior::uniform(self.q); m];
        for p in 0..m {
            let from_prev = &self.forward[(p + m - 1) % m];
            let from_next = &self.backward[(p + 1) % m];
            out[self.order[p]] =
                SymbolPosterior::from_log_weights(from_prev.iter().zip(from_next).map(|(a, b)| a + b).collect());
        }
        out
    }
}

pub fn detect_bp2(obs: Observation<'_>, constellation: &Constellation, iters: usize) -> Result<DetectionResult> {
    DetectorConfig::new(DetectorKind::Bp2)
        .with_iters(iters)
        .detect(obs, constellation)
}

pub fn detect_bp3(
    obs: Observation<'_>,
    constellation: &Constellation,
    iters: usize,
    permutation: Option<Vec<usize>>,
) -> Result<DetectionResult> {
    let mut cfg = DetectorConfig::new(DetectorKind::Bp3).with_iters(iters);
    cfg.permutation = permutation;
    cfg.detect(obs, constellation)
}

pub(crate) fn ring_topology(m: usize, cfg: &DetectorConfig) -> Result<PairTopology> {
    match &cfg.permutation {
        Some(p) if p.len() != m => Err(Error::Permutation(p.clone())),
        Some(p) => PairTopology::ring_with_order(p.clone()),
        None => PairTopology::ring(m),
    }
}

pub(crate) fn require_pairs(m: usize) -> Result<()> {
    if m < 2 {
        return Err(Error::Config(format!(
            "pair-wise detectors need at least 2 transmit antennas, got {m}"
        )));
    }
    Ok(())
}

pub(super) fn run_fully_connected(
    obs: Observation<'_>,
    constellation: &Constellation,
    cfg: &DetectorConfig,
) -> Result<DetectionResult> {
    let m = obs.tx();
    require_pairs(m)?;
    let table = compute_pair_statistics(obs.channel, obs.y, &PairTopology::fully_connected(m))?;
    let mut bp = FullyConnectedBp::new(&table, constellation, cfg.log_sum);
    let mut trace = Vec::new();
    for _ in 0..cfg.iters {
        bp.step();
        if cfg.trace {
            trace.push(BeliefSnapshot::Discrete(bp.beliefs()));
        }
    }
    let mut result = DetectionResult::from_posteriors(bp.beliefs(), constellation);
    result.iterations_run = cfg.iters;
    result.trace = trace;
    Ok(result)
}

pub(super) fn run_ring(
    obs: Observation<'_>,
    constellation: &Constellation,
    cfg: &DetectorConfig,
) -> Result<DetectionResult> {
    let topo = ring_topology(obs.tx(), cfg)?;
    let table = compute_pair_statistics(obs.channel, obs.y, &topo)?;
    let mut bp = RingBp::new(&table, constellation, cfg.log_sum)?;
    let mut trace = Vec::new();
    for _ in 0..cfg.iters {
        bp.iterate();
        if cfg.trace {
            trace.push(BeliefSnapshot::Discrete(bp.beliefs()));
        }
    }
    let mut result = DetectionResult::from_posteriors(bp.beliefs(), constellation);
    result.iterations_run = cfg.iters;
    result.trace = trace;
    Ok(result)
}
