//! Per-pair preprocessing for the pair-wise detectors.
//!
//! For an ordered pair `i -> j` the received vector is projected onto the
//! conditional MMSE filter `c = K_{j,i}^{-1} h_j`, where
//! `K_{j,i} = s2 I + sum_{k not in {i,j}} h_k h_k^H`. The scalar observation
//! `y' = c^H y` depends only on `x_i`, `x_j` and coloured noise, which gives the
//! translation function
//!
//! ```text
//! p(x_j | x_i, y') = CN(x_j; (y' - a_cross x_i) / (1 + a_self), 1 / (1 + a_self))
//! ```
//!
//! with `a_cross = h_j^H K_{j,i}^{-1} h_i` and `a_self = h_j^H K_{j,i}^{-1} h_j`.
//! Written as an affine map `x_i -> u + v x_i`, the same coefficients drive the
//! Gaussian ring recursion and its convergence analysis.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelRealization;
use crate::numerics::{dot_h, Cholesky, ComplexMatrix, GaussianScalar};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TopologyKind {
    FullyConnected,
    Ring,
}

/// Which ordered pairs carry messages.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairTopology {
    kind: TopologyKind,
    // Ring: visiting order of the antennas. Fully connected: identity.
    order: Vec<usize>,
}

impl PairTopology {
    pub fn fully_connected(m: usize) -> Self {
        Self {
            kind: TopologyKind::FullyConnected,
            order: (0..m).collect(),
        }
    }

    /// Ring in natural antenna order.
    pub fn ring(m: usize) -> Result<Self> {
        Self::ring_with_order((0..m).collect())
    }

    /// Ring visiting antennas in `order` (a permutation of `0..M`).
    pub fn ring_with_order(order: Vec<usize>) -> Result<Self> {
        let m = order.len();
        let mut seen = vec![false; m];
        for &a in &order {
            if a >= m || std::mem::replace(&mut seen[a], true) {
                return Err(Error::Permutation(order));
            }
        }
        if m < 3 {
            return Err(Error::RingTooSmall(m));
        }
        Ok(Self {
            kind: TopologyKind::Ring,
            order,
        })
    }

    pub fn kind(&self) -> TopologyKind {
        self.kind
    }

    pub fn antennas(&self) -> usize {
        self.order.len()
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Antenna after ring position `pos` (wrapping).
    pub fn next(&self, pos: usize) -> usize {
        self.order[(pos + 1) % self.order.len()]
    }

    /// Antenna before ring position `pos` (wrapping).
    pub fn prev(&self, pos: usize) -> usize {
        let m = self.order.len();
        self.order[(pos + m - 1) % m]
    }

    /// Every ordered pair `(i, j)` along which a message `i -> j` flows.
    pub fn ordered_pairs(&self) -> Vec<(usize, usize)> {
        let m = self.order.len();
        match self.kind {
            TopologyKind::FullyConnected => (0..m)
                .flat_map(|i| (0..m).filter(move |&j| j != i).map(move |j| (i, j)))
                .collect(),
            TopologyKind::Ring => (0..m)
                .flat_map(|p| [(self.order[p], self.next(p)), (self.order[p], self.prev(p))])
                .collect(),
        }
    }

    /// Unordered pairs `{i, j}` with `i < j`; each shares one covariance `K_{i,j}`.
    pub fn unordered_pairs(&self) -> Vec<(usize, usize)> {
        let mut pairs: Vec<(usize, usize)> = self.ordered_pairs().into_iter().filter(|(i, j)| i < j).collect();
        pairs.sort_unstable();
        pairs.dedup();
        pairs
    }
}

/// `s2 I + sum_{k not in excluded} h_k h_k^H`.
pub fn exclusion_covariance(ch: &ChannelRealization, excluded: &[usize]) -> ComplexMatrix {
    let n = ch.rx();
    let mut k = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = Complex64::new(ch.sigma2(), 0.0);
    }
    for c in (0..ch.tx()).filter(|c| !excluded.contains(c)) {
        k.add_outer(ch.column(c), 1.0);
    }
    k
}

/// Affine map `mu -> offset + slope * mu` on complex means.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AffineMap {
    pub offset: Complex64,
    pub slope: Complex64,
}

impl AffineMap {
    pub const IDENTITY: AffineMap = AffineMap {
        offset: Complex64::new(0.0, 0.0),
        slope: Complex64::new(1.0, 0.0),
    };

    pub fn apply(&self, mu: Complex64) -> Complex64 {
        self.offset + self.slope * mu
    }

    /// `next o self`: apply `self` first.
    pub fn then(&self, next: &AffineMap) -> AffineMap {
        AffineMap {
            offset: next.offset + next.slope * self.offset,
            slope: next.slope * self.slope,
        }
    }

    /// Fixed point `offset / (1 - slope)`.
    pub fn fixed_point(&self) -> Complex64 {
        self.offset / (Complex64::new(1.0, 0.0) - self.slope)
    }
}

/// Affine map on variances.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VarianceMap {
    pub offset: f64,
    pub slope: f64,
}

impl VarianceMap {
    pub fn apply(&self, var: f64) -> f64 {
        self.offset + self.slope * var
    }

    pub fn then(&self, next: &VarianceMap) -> VarianceMap {
        VarianceMap {
            offset: next.offset + next.slope * self.offset,
            slope: next.slope * self.slope,
        }
    }

    pub fn fixed_point(&self) -> f64 {
        self.offset / (1.0 - self.slope)
    }
}

/// Conditional Gaussian `p(x_j | x_i, y')` for one ordered pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TranslationFunction {
    pub mean_map: AffineMap,
    pub variance: f64,
}

impl TranslationFunction {
    pub fn conditional(&self, x_i: Complex64) -> GaussianScalar {
        GaussianScalar::new(self.mean_map.apply(x_i), self.variance).expect("translation variance lies in (0, 1]")
    }

    /// `log p(x_j | x_i)` without the `-ln(pi var)` constant.
    #[inline]
    pub fn log_kernel(&self, x_j: Complex64, x_i: Complex64) -> f64 {
        -(x_j - self.mean_map.apply(x_i)).norm_sqr() / self.variance
    }

    /// Pushes a Gaussian belief on `x_i` through the conditional: the marginal on `x_j`.
    pub fn propagate(&self, source: &GaussianScalar) -> GaussianScalar {
        let mean = self.mean_map.apply(source.mean);
        let var = self.variance + self.mean_map.slope.norm_sqr() * source.variance();
        GaussianScalar::new(mean, var).expect("propagated variance is positive")
    }
}

/// Statistics of the ordered pair `from -> to` (message on `x_to` given `x_from`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairStatistics {
    pub from: usize,
    pub to: usize,
    /// `y' = h_to^H K^{-1} y`.
    pub y_prime: Complex64,
    /// `h_to^H K^{-1} h_from`.
    pub a_cross: Complex64,
    /// `h_to^H K^{-1} h_to`, the conditional SINR.
    pub a_self: f64,
    pub u: Complex64,
    pub v: Complex64,
    pub u_var: f64,
    pub v_var: f64,
}

impl PairStatistics {
    fn from_projections(from: usize, to: usize, y_prime: Complex64, a_cross: Complex64, a_self: f64) -> Self {
        let scale = (1.0 + a_self).recip();
        let v = -a_cross * scale;
        Self {
            from,
            to,
            y_prime,
            a_cross,
            a_self,
            u: y_prime * scale,
            v,
            u_var: scale,
            v_var: v.norm_sqr(),
        }
    }

    pub fn translation(&self) -> TranslationFunction {
        TranslationFunction {
            mean_map: AffineMap {
                offset: self.u,
                slope: self.v,
            },
            variance: self.u_var,
        }
    }

    pub fn variance_map(&self) -> VarianceMap {
        VarianceMap {
            offset: self.u_var,
            slope: self.v_var,
        }
    }
}

/// Statistics for every ordered pair of a topology.
#[derive(Clone, Debug)]
pub struct PairTable {
    topology: PairTopology,
    stats: Vec<Option<PairStatistics>>,
    inversion_lemma_residual: f64,
}

impl PairTable {
    pub fn topology(&self) -> &PairTopology {
        &self.topology
    }

    pub fn antennas(&self) -> usize {
        self.topology.antennas()
    }

    /// Statistics of `from -> to`; panics if the pair is not in the topology.
    pub fn get(&self, from: usize, to: usize) -> &PairStatistics {
        self.try_get(from, to)
            .unwrap_or_else(|| panic!("pair {from} -> {to} not in topology"))
    }

    pub fn try_get(&self, from: usize, to: usize) -> Option<&PairStatistics> {
        let m = self.antennas();
        self.stats.get(from * m + to).and_then(Option::as_ref)
    }

    pub fn iter(&self) -> impl Iterator<Item = &PairStatistics> {
        self.stats.iter().flatten()
    }

    /// Largest mismatch between `u, v` from `K_{j,i}` and from `K_{i}` via the
    /// matrix inversion lemma, `|a - b| / max(1, |a|, |b|)`.
    pub fn inversion_lemma_residual(&self) -> f64 {
        self.inversion_lemma_residual
    }
}

fn mixed_error(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / 1f64.max(a.norm()).max(b.norm())
}

/// Factorises `K_{i,j}` once per unordered pair and fills both directions.
/// `u` and `v` are cross-checked against `h_j^H K_{i}^{-1} y` and
/// `-h_j^H K_{i}^{-1} h_i`, and the worst mismatch is recorded.
pub fn compute_pair_statistics(ch: &ChannelRealization, y: &[Complex64], topology: &PairTopology) -> Result<PairTable> {
    let m = ch.tx();
    if topology.antennas() != m {
        return Err(Error::Dimension(format!(
            "topology over {} antennas for a channel with {m}",
            topology.antennas()
        )));
    }
    if y.len() != ch.rx() {
        return Err(Error::Dimension(format!(
            "received vector of length {} for {} receive antennas",
            y.len(),
            ch.rx()
        )));
    }
    let mut stats = vec![None; m * m];
    let ordered = topology.ordered_pairs();
    for (i, j) in topology.unordered_pairs() {
        let chol = Cholesky::factor(&exclusion_covariance(ch, &[i, j]))?;
        let (hi, hj) = (ch.column(i), ch.column(j));
        let ky = chol.solve(y)?;
        let khi = chol.solve(hi)?;
        let khj = chol.solve(hj)?;
        if ordered.contains(&(i, j)) {
            stats[i * m + j] = Some(PairStatistics::from_projections(
                i,
                j,
                dot_h(hj, &ky),
                dot_h(hj, &khi),
                dot_h(hj, &khj).re,
            ));
        }
        if ordered.contains(&(j, i)) {
            stats[j * m + i] = Some(PairStatistics::from_projections(
                j,
                i,
                dot_h(hi, &ky),
                dot_h(hi, &khj),
                dot_h(hi, &khi).re,
            ));
        }
    }

    let mut residual: f64 = 0.0;
    let mut sources: Vec<usize> = ordered.iter().map(|p| p.0).collect();
    sources.sort_unstable();
    sources.dedup();
    for i in sources {
        let chol = Cholesky::factor(&exclusion_covariance(ch, &[i]))?;
        let ky = chol.solve(y)?;
        let khi = chol.solve(ch.column(i))?;
        for s in stats.iter().flatten().filter(|s| s.from == i) {
            let hj = ch.column(s.to);
            residual = residual
                .max(mixed_error(s.u, dot_h(hj, &ky)))
                .max(mixed_error(s.v, -dot_h(hj, &khi)));
        }
    }

    Ok(PairTable {
        topology: topology.clone(),
        stats,
        inversion_lemma_residual: residual,
    })
}

/// Per-node recursion operators of the Gaussian ring detector, indexed by ring position.
///
/// `forward[p]` maps the message arriving at `order[p]` from its predecessor
/// to the message it sends to its successor; `backward[p]` is the mirror image.
#[derive(Clone, Debug)]
pub struct RingOperators {
    order: Vec<usize>,
    pub forward: Vec<AffineMap>,
    pub backward: Vec<AffineMap>,
    pub forward_var: Vec<VarianceMap>,
    pub backward_var: Vec<VarianceMap>,
    forward_sinr: Vec<f64>,
    backward_sinr: Vec<f64>,
}

pub fn forward_backward_operators(table: &PairTable) -> Result<RingOperators> {
    let topo = table.topology();
    if topo.kind() != TopologyKind::Ring {
        return Err(Error::NotRing);
    }
    let m = topo.antennas();
    let mut ops = RingOperators {
        order: topo.order().to_vec(),
        forward: Vec::with_capacity(m),
        backward: Vec::with_capacity(m),
        forward_var: Vec::with_capacity(m),
        backward_var: Vec::with_capacity(m),
        forward_sinr: Vec::with_capacity(m),
        backward_sinr: Vec::with_capacity(m),
    };
    for p in 0..m {
        let node = topo.order()[p];
        let fwd = table.get(node, topo.next(p));
        let bwd = table.get(node, topo.prev(p));
        ops.forward.push(fwd.translation().mean_map);
        ops.backward.push(bwd.translation().mean_map);
        ops.forward_var.push(fwd.variance_map());
        ops.backward_var.push(bwd.variance_map());
        ops.forward_sinr.push(fwd.a_self);
        ops.backward_sinr.push(bwd.a_self);
    }
    Ok(ops)
}

impl RingOperators {
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    fn len(&self) -> usize {
        self.order.len()
    }

    /// One forward turn seen from ring position `start`: maps the message
    /// arriving at `order[start]` to the same message one turn later.
    pub fn forward_turn(&self, start: usize) -> AffineMap {
        let m = self.len();
        (0..m)
            .map(|k| self.forward[(start + k) % m])
            .fold(AffineMap::IDENTITY, |acc, op| acc.then(&op))
    }

    /// Backward counterpart of [`forward_turn`](Self::forward_turn).
    pub fn backward_turn(&self, start: usize) -> AffineMap {
        let m = self.len();
        (0..m)
            .map(|k| self.backward[(start + m - k) % m])
            .fold(AffineMap::IDENTITY, |acc, op| acc.then(&op))
    }

    pub fn forward_variance_turn(&self, start: usize) -> VarianceMap {
        let m = self.len();
        (0..m).map(|k| self.forward_var[(start + k) % m]).fold(
            VarianceMap {
                offset: 0.0,
                slope: 1.0,
            },
            |acc, op| acc.then(&op),
        )
    }

    pub fn backward_variance_turn(&self, start: usize) -> VarianceMap {
        let m = self.len();
        (0..m).map(|k| self.backward_var[(start + m - k) % m]).fold(
            VarianceMap {
                offset: 0.0,
                slope: 1.0,
            },
            |acc, op| acc.then(&op),
        )
    }

    /// `prod_j v_{j,j-1}`, the forward contraction factor.
    pub fn forward_contraction(&self) -> Complex64 {
        self.forward.iter().map(|f| f.slope).product()
    }

    /// `prod_j v_{j,j+1}`, the backward contraction factor.
    pub fn backward_contraction(&self) -> Complex64 {
        self.backward.iter().map(|b| b.slope).product()
    }

    /// `prod_j s_{j|j-1} / (1 + s_{j|j-1})` bounding `|forward_contraction|`.
    pub fn forward_bound(&self) -> f64 {
        self.forward_sinr.iter().map(|s| s / (1.0 + s)).product()
    }

    pub fn backward_bound(&self) -> f64 {
        self.backward_sinr.iter().map(|s| s / (1.0 + s)).product()
    }
}
