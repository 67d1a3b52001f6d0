//! Pair-wise message passing with Gaussian messages.
//!
//! Each message is a `CN(mean, variance)` on the destination symbol, obtained
//! by pushing the extrinsic Gaussian on the source through the pair's
//! conditional: mean `u + v mu`, variance `u_var + |v|^2 var`.

use super::pairwise_bp::{require_pairs, ring_topology};
use super::{BeliefSnapshot, DetectionResult, DetectorConfig, DetectorKind, Observation};
use crate::modem::Constellation;
use crate::numerics::GaussianScalar;
use crate::pairwise::{compute_pair_statistics, PairTable, PairTopology, TopologyKind, TranslationFunction};
use crate::{Error, Result};

/// Message means beyond this magnitude stop the iteration.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

fn blown_up(g: &GaussianScalar) -> bool {
    !g.mean.is_finite() || g.mean.norm() > DIVERGENCE_LIMIT || !g.variance().is_finite()
}

fn combine<'a>(messages: impl Iterator<Item = &'a GaussianScalar>) -> Option<GaussianScalar> {
    messages.fold(None, |acc, g| Some(acc.map_or(*g, |a: GaussianScalar| a.product(g).0)))
}

/// Flooding-schedule Gaussian BP over every ordered pair.
#[derive(Clone, Debug)]
pub struct FullyConnectedGaussianBp {
    m: usize,
    translations: Vec<Option<TranslationFunction>>,
    messages: Vec<GaussianScalar>,
}

impl FullyConnectedGaussianBp {
    pub fn new(table: &PairTable, init: GaussianScalar) -> Self {
        let m = table.antennas();
        let mut translations = vec![None; m * m];
        for s in table.iter() {
            translations[s.from * m + s.to] = Some(s.translation());
        }
        Self {
            m,
            translations,
            messages: vec![init; m * m],
        }
    }

    pub fn message(&self, from: usize, to: usize) -> &GaussianScalar {
        &self.messages[from * self.m + to]
    }

    /// Product of the messages into `from` except the one from `to`; the
    /// unit prior when there are none.
    pub fn extrinsic(&self, from: usize, to: usize) -> GaussianScalar {
        combine(
            (0..self.m)
                .filter(|&k| k != from && k != to)
                .map(|k| self.message(k, from)),
        )
        .unwrap_or_else(GaussianScalar::standard)
    }

    pub fn step(&mut self) {
        let m = self.m;
        let next = (0..m * m)
            .map(|idx| match &self.translations[idx] {
                Some(tf) => tf.propagate(&self.extrinsic(idx / m, idx % m)),
                None => self.messages[idx],
            })
            .collect();
        self.messages = next;
    }

    pub fn beliefs(&self) -> Vec<GaussianScalar> {
        (0..self.m)
            .map(|j| {
                combine((0..self.m).filter(|&k| k != j).map(|k| self.message(k, j)))
                    .unwrap_or_else(GaussianScalar::standard)
            })
            .collect()
    }

    pub fn diverged(&self) -> bool {
        self.messages.iter().any(blown_up)
    }
}

/// Forward-backward Gaussian BP around a ring.
#[derive(Clone, Debug)]
pub struct RingGaussianBp {
    order: Vec<usize>,
    forward_tf: Vec<TranslationFunction>,
    backward_tf: Vec<TranslationFunction>,
    forward: Vec<GaussianScalar>,
    backward: Vec<GaussianScalar>,
}

impl RingGaussianBp {
    pub fn new(table: &PairTable, init: GaussianScalar) -> Result<Self> {
        let topo = table.topology();
        if topo.kind() != TopologyKind::Ring {
            return Err(Error::NotRing);
        }
        let m = topo.antennas();
        let order = topo.order().to_vec();
        Ok(Self {
            forward_tf: (0..m)
                .map(|p| table.get(order[p], topo.next(p)).translation())
                .collect(),
            backward_tf: (0..m)
                .map(|p| table.get(order[p], topo.prev(p)).translation())
                .collect(),
            forward: vec![init; m],
            backward: vec![init; m],
            order,
        })
    }

    /// Message from ring position `pos` to its successor.
    pub fn forward_message(&self, pos: usize) -> &GaussianScalar {
        &self.forward[pos]
    }

    /// Message from ring position `pos` to its predecessor.
    pub fn backward_message(&self, pos: usize) -> &GaussianScalar {
        &self.backward[pos]
    }

    pub fn forward_sweep(&mut self) {
        let m = self.order.len();
        for p in 0..m {
            self.forward[p] = self.forward_tf[p].propagate(&self.forward[(p + m - 1) % m]);
        }
    }

    pub fn backward_sweep(&mut self) {
        let m = self.order.len();
        for k in 0..m {
            let p = (m - k) % m;
            self.backward[p] = self.backward_tf[p].propagate(&self.backward[(p + 1) % m]);
        }
    }

    pub fn iterate(&mut self) {
        self.forward_sweep();
        self.backward_sweep();
    }

    /// Beliefs in antenna order.
    pub fn beliefs(&self) -> Vec<GaussianScalar> {
        let m = self.order.len();
        let mut out = vec![GaussianScalar::standard(); m];
        for p in 0..m {
            out[self.order[p]] = self.forward[(p + m - 1) % m].product(&self.backward[(p + 1) % m]).0;
        }
        out
    }

    pub fn diverged(&self) -> bool {
        self.forward.iter().chain(&self.backward).any(blown_up)
    }
}

pub fn detect_gbp2(obs: Observation<'_>, constellation: &Constellation, iters: usize) -> Result<DetectionResult> {
    DetectorConfig::new(DetectorKind::Gbp2)
        .with_iters(iters)
        .detect(obs, constellation)
}

pub fn detect_gbp3(
    obs: Observation<'_>,
    constellation: &Constellation,
    iters: usize,
    permutation: Option<Vec<usize>>,
) -> Result<DetectionResult> {
    let mut cfg = DetectorConfig::new(DetectorKind::Gbp3).with_iters(iters);
    cfg.permutation = permutation;
    cfg.detect(obs, constellation)
}

trait GaussianEngine {
    fn advance(&mut self);
    fn beliefs(&self) -> Vec<GaussianScalar>;
    fn diverged(&self) -> bool;
}

impl GaussianEngine for FullyConnectedGaussianBp {
    fn advance(&mut self) {
        self.step();
    }
    fn beliefs(&self) -> Vec<GaussianScalar> {
        FullyConnectedGaussianBp::beliefs(self)
    }
    fn diverged(&self) -> bool {
        FullyConnectedGaussianBp::diverged(self)
    }
}

impl GaussianEngine for RingGaussianBp {
    fn advance(&mut self) {
        self.iterate();
    }
    fn beliefs(&self) -> Vec<GaussianScalar> {
        RingGaussianBp::beliefs(self)
    }
    fn diverged(&self) -> bool {
        RingGaussianBp::diverged(self)
    }
}

fn drive(mut engine: impl GaussianEngine, constellation: &Constellation, cfg: &DetectorConfig) -> DetectionResult {
    let mut trace = Vec::new();
    let mut run = 0;
    let mut diverged = false;
    while run < cfg.iters {
        engine.advance();
        run += 1;
        if engine.diverged() {
            diverged = true;
            break;
        }
        if cfg.trace {
            trace.push(BeliefSnapshot::Gaussian(engine.beliefs()));
        }
    }
    let beliefs = engine.beliefs();
    let mut result = DetectionResult::from_gaussians(beliefs, constellation);
    result.iterations_run = run;
    result.trace = trace;
    result.diverged = diverged;
    result
}

pub(super) fn run_fully_connected(
    obs: Observation<'_>,
    constellation: &Constellation,
    cfg: &DetectorConfig,
) -> Result<DetectionResult> {
    let m = obs.tx();
    require_pairs(m)?;
    let table = compute_pair_statistics(obs.channel, obs.y, &PairTopology::fully_connected(m))?;
    let init = cfg.gaussian_init.unwrap_or_else(GaussianScalar::standard);
    Ok(drive(FullyConnectedGaussianBp::new(&table, init), constellation, cfg))
}

pub(super) fn run_ring(
    obs: Observation<'_>,
    constellation: &Constellation,
    cfg: &DetectorConfig,
) -> Result<DetectionResult> {
    let topo = ring_topology(obs.tx(), cfg)?;
    let table = compute_pair_statistics(obs.channel, obs.y, &topo)?;
    let init = cfg.gaussian_init.unwrap_or_else(GaussianScalar::standard);
    Ok(drive(RingGaussianBp::new(&table, init)?, constellation, cfg))
}
