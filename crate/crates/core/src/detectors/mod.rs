//! MIMO soft detectors behind one interface.
//!
//! | id | method | cost per frame |
//! |---|---|---|
//! | `map` | exact marginal posterior by enumeration | `2^{mM}` hypotheses |
//! | `mmse` | linear MMSE estimate projected onto the alphabet | one `N x N` solve |
//! | `bp1` | BP over the fully-connected factor graph, one observation node per receive antenna | `N 2^{mM}` per iteration |
//! | `bp2` | pair-wise BP over all ordered pairs, flooding schedule | `M(M-1) 2^{2m}` per iteration |
//! | `bp3` | pair-wise BP over a ring, forward then backward sweep | `2M 2^{2m}` per iteration |
//! | `gbp2` | Gaussian messages over all ordered pairs | `M(M-1)` per iteration |
//! | `gbp3` | Gaussian messages over a ring | `2M` per iteration |
//!
//! Priors are uniform over the alphabet. Discrete messages start uniform and
//! Gaussian messages start at `CN(0, 1)` unless another start is given.

mod bp1;
mod gaussian;
mod lmmse;
mod map;
mod pairwise_bp;

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelRealization, Frame};
use crate::modem::{Constellation, SymbolPosterior};
use crate::numerics::{GaussianScalar, LogSum};
use crate::simharness::{op_count, OpCount};
use crate::{Error, Result};

pub use bp1::detect_bp1;
pub use gaussian::{detect_gbp2, detect_gbp3, FullyConnectedGaussianBp, RingGaussianBp, DIVERGENCE_LIMIT};
pub use lmmse::detect_lmmse;
pub use map::{detect_map, detect_map_with, MAP_BIT_LIMIT};
pub use pairwise_bp::{detect_bp2, detect_bp3, FullyConnectedBp, RingBp};

/// Largest `mM` accepted by BP1.
pub const BP1_BIT_LIMIT: usize = 16;

/// Channel and received vector handed to a detector.
#[derive(Clone, Copy, Debug)]
pub struct Observation<'a> {
    pub channel: &'a ChannelRealization,
    pub y: &'a [Complex64],
}

impl<'a> Observation<'a> {
    pub fn new(channel: &'a ChannelRealization, y: &'a [Complex64]) -> Result<Self> {
        if y.len() != channel.rx() {
            return Err(Error::Dimension(format!(
                "received vector of length {} for {} receive antennas",
                y.len(),
                channel.rx()
            )));
        }
        Ok(Self { channel, y })
    }

    pub fn tx(&self) -> usize {
        self.channel.tx()
    }
}

impl<'a> From<&'a Frame> for Observation<'a> {
    fn from(frame: &'a Frame) -> Self {
        Self {
            channel: &frame.channel,
            y: &frame.y,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectorKind {
    Map,
    Mmse,
    Bp1,
    Bp2,
    Bp3,
    Gbp2,
    Gbp3,
}

impl DetectorKind {
    pub const ALL: [DetectorKind; 7] = [
        DetectorKind::Map,
        DetectorKind::Mmse,
        DetectorKind::Bp1,
        DetectorKind::Bp2,
        DetectorKind::Bp3,
        DetectorKind::Gbp2,
        DetectorKind::Gbp3,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DetectorKind::Map => "map",
            DetectorKind::Mmse => "mmse",
            DetectorKind::Bp1 => "bp1",
            DetectorKind::Bp2 => "bp2",
            DetectorKind::Bp3 => "bp3",
            DetectorKind::Gbp2 => "gbp2",
            DetectorKind::Gbp3 => "gbp3",
        }
    }

    /// Default iteration count; zero for non-iterative detectors.
    pub fn default_iters(self) -> usize {
        match self {
            DetectorKind::Map | DetectorKind::Mmse => 0,
            DetectorKind::Bp1 | DetectorKind::Bp2 => 4,
            DetectorKind::Bp3 => 6,
            DetectorKind::Gbp2 | DetectorKind::Gbp3 => 50,
        }
    }

    pub fn is_iterative(self) -> bool {
        self.default_iters() > 0
    }

    pub fn uses_ring(self) -> bool {
        matches!(self, DetectorKind::Bp3 | DetectorKind::Gbp3)
    }
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DetectorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.to_ascii_lowercase();
        DetectorKind::ALL
            .into_iter()
            .find(|d| {
                d.name() == s || (s == "ml" && *d == DetectorKind::Map) || (s == "lmmse" && *d == DetectorKind::Mmse)
            })
            .ok_or(Error::Unknown {
                kind: "detector",
                name: s,
            })
    }
}

/// Detector selection and its tuning knobs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub kind: DetectorKind,
    pub iters: usize,
    /// Ring visiting order for `bp3` / `gbp3`; natural order when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub permutation: Option<Vec<usize>>,
    #[serde(default)]
    pub log_sum: LogSum,
    /// Record beliefs after every iteration.
    #[serde(default, skip)]
    pub trace: bool,
    /// Initial Gaussian message for `gbp2` / `gbp3`.
    #[serde(default, skip)]
    pub gaussian_init: Option<GaussianScalar>,
}

impl DetectorConfig {
    pub fn new(kind: DetectorKind) -> Self {
        Self {
            kind,
            iters: kind.default_iters(),
            permutation: None,
            log_sum: LogSum::Exact,
            trace: false,
            gaussian_init: None,
        }
    }

    pub fn with_iters(mut self, iters: usize) -> Self {
        self.iters = iters;
        self
    }

    pub fn with_permutation(mut self, perm: Vec<usize>) -> Self {
        self.permutation = Some(perm);
        self
    }

    pub fn with_trace(mut self, trace: bool) -> Self {
        self.trace = trace;
        self
    }

    pub fn with_gaussian_init(mut self, init: GaussianScalar) -> Self {
        self.gaussian_init = Some(init);
        self
    }

    pub fn with_log_sum(mut self, mode: LogSum) -> Self {
        self.log_sum = mode;
        self
    }

    pub(crate) fn check_iters(&self) -> Result<()> {
        if self.kind.is_iterative() && self.iters == 0 {
            return Err(Error::Config(format!("{} needs at least one iteration", self.kind)));
        }
        Ok(())
    }

    pub fn detect(&self, obs: Observation<'_>, constellation: &Constellation) -> Result<DetectionResult> {
        self.check_iters()?;
        let mut result = match self.kind {
            DetectorKind::Map => map::run(obs, constellation, self.log_sum),
            DetectorKind::Mmse => lmmse::run(obs, constellation),
            DetectorKind::Bp1 => bp1::run(obs, constellation, self),
            DetectorKind::Bp2 => pairwise_bp::run_fully_connected(obs, constellation, self),
            DetectorKind::Bp3 => pairwise_bp::run_ring(obs, constellation, self),
            DetectorKind::Gbp2 => gaussian::run_fully_connected(obs, constellation, self),
            DetectorKind::Gbp3 => gaussian::run_ring(obs, constellation, self),
        }?;
        result.op_count = op_count(self.kind, obs.tx(), constellation.bits_per_symbol(), self.iters).ok();
        Ok(result)
    }
}

/// Beliefs after one iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum BeliefSnapshot {
    Discrete(Vec<SymbolPosterior>),
    Gaussian(Vec<GaussianScalar>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct DetectionResult {
    /// One posterior per transmit antenna.
    pub posteriors: Vec<SymbolPosterior>,
    /// `m` LLRs per antenna, antenna-major.
    pub llrs: Vec<f64>,
    /// Gaussian beliefs for `mmse`, `gbp2` and `gbp3`.
    pub gaussian: Option<Vec<GaussianScalar>>,
    pub iterations_run: usize,
    pub trace: Vec<BeliefSnapshot>,
    pub op_count: Option<OpCount>,
    /// Set when the Gaussian divergence watchdog fired.
    pub diverged: bool,
}

impl DetectionResult {
    pub(crate) fn from_posteriors(posteriors: Vec<SymbolPosterior>, constellation: &Constellation) -> Self {
        let llrs = posteriors.iter().flat_map(|p| constellation.bit_llrs(p)).collect();
        Self {
            posteriors,
            llrs,
            gaussian: None,
            iterations_run: 0,
            trace: Vec::new(),
            op_count: None,
            diverged: false,
        }
    }

    pub(crate) fn from_gaussians(beliefs: Vec<GaussianScalar>, constellation: &Constellation) -> Self {
        let posteriors = beliefs.iter().map(|g| project(g, constellation)).collect();
        let mut r = Self::from_posteriors(posteriors, constellation);
        r.gaussian = Some(beliefs);
        r
    }

    /// Most probable label per antenna.
    pub fn hard_labels(&self) -> Vec<usize> {
        self.posteriors.iter().map(SymbolPosterior::argmax).collect()
    }

    /// Bit decisions from LLR signs (`llr >= 0` decides 0).
    pub fn hard_bits(&self) -> Vec<u8> {
        self.llrs.iter().map(|&l| u8::from(l < 0.0)).collect()
    }
}

/// Evaluates a Gaussian belief on the alphabet and normalises.
pub fn project(belief: &GaussianScalar, constellation: &Constellation) -> SymbolPosterior {
    if !belief.mean.is_finite() || !belief.variance().is_finite() {
        return SymbolPosterior::uniform(constellation.size());
    }
    SymbolPosterior::from_log_weights(
        constellation
            .points()
            .iter()
            .map(|&s| -(s - belief.mean).norm_sqr() / belief.variance())
            .collect(),
    )
}

/// Mixed-radix counter over `digits` positions with `radix` values each.
/// `advance` returns the most significant position that changed.
pub(crate) struct Odometer {
    pub digits: Vec<usize>,
    radix: usize,
}

impl Odometer {
    pub fn new(positions: usize, radix: usize) -> Self {
        Self {
            digits: vec![0; positions],
            radix,
        }
    }

    /// Steps to the next hypothesis; `None` once all have been visited.
    pub fn advance(&mut self) -> Option<usize> {
        for p in (0..self.digits.len()).rev() {
            self.digits[p] += 1;
            if self.digits[p] < self.radix {
                return Some(p);
            }
            self.digits[p] = 0;
        }
        None
    }
}

/// Accumulates into `acc` with the chosen log-sum rule.
#[inline]
pub(crate) fn accumulate(acc: &mut f64, value: f64, mode: LogSum) {
    *acc = match mode {
        LogSum::Exact => crate::numerics::log_add(*acc, value),
        LogSum::MaxOnly => acc.max(value),
    };
}

#[cfg(test)]
mod tests;
