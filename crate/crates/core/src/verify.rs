//! Numerical verification suites behind `pwbp verify`.
//!
//! Each suite draws seeded problems, checks one family of identities against
//! straightforward recomputations (dense elimination, full enumeration,
//! literal message formulas) and reports how many trials passed.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::channel::{draw_channel, ChannelRealization, Frame, FrameKey};
use crate::detectors::{
    detect_map, DetectorConfig, DetectorKind, FullyConnectedBp, Observation, RingBp, RingGaussianBp,
};
use crate::modem::{Constellation, Modulation};
use crate::numerics::{dot_h, log_sum_exp, lu_solve, ComplexMatrix, GaussianScalar, LogSum};
use crate::pairwise::{compute_pair_statistics, exclusion_covariance, forward_backward_operators, PairTopology};
use crate::{Error, Result};

/// Iteration floor for the ring mean recursion checks.
pub const THEOREM_ITERS: usize = 300;
/// Relative tolerance on ring means against the direct LMMSE solve.
pub const THEOREM_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    PairIdentities,
    Gbp3Theorem1,
    Lemma3,
    MapOracle,
    BpLiteral,
    FixedPoint,
    Uniqueness,
    Noiseless,
    Normalization,
}

impl Suite {
    pub const ALL: [Suite; 9] = [
        Suite::PairIdentities,
        Suite::Gbp3Theorem1,
        Suite::Lemma3,
        Suite::MapOracle,
        Suite::BpLiteral,
        Suite::FixedPoint,
        Suite::Uniqueness,
        Suite::Noiseless,
        Suite::Normalization,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::PairIdentities => "pair-identities",
            Suite::Gbp3Theorem1 => "gbp3-theorem1",
            Suite::Lemma3 => "lemma3",
            Suite::MapOracle => "map-oracle",
            Suite::BpLiteral => "bp-literal",
            Suite::FixedPoint => "fixed-point",
            Suite::Uniqueness => "uniqueness",
            Suite::Noiseless => "noiseless",
            Suite::Normalization => "normalization",
        }
    }

    pub fn run(self, trials: usize, seed: u64) -> Result<SuiteReport> {
        match self {
            Suite::PairIdentities => pair_identities(trials, seed),
            Suite::Gbp3Theorem1 => gbp3_theorem1(trials, seed),
            Suite::Lemma3 => lemma3(trials, seed),
            Suite::MapOracle => map_oracle(trials, seed),
            Suite::BpLiteral => bp_literal(trials, seed),
            Suite::FixedPoint => fixed_point(trials, seed),
            Suite::Uniqueness => uniqueness(trials, seed),
            Suite::Noiseless => noiseless(trials, seed),
            Suite::Normalization => normalization(trials, seed),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::Unknown {
                kind: "suite",
                name: s.to_string(),
            })
    }
}

/// Outcome of one suite.
#[derive(Clone, Debug, PartialEq)]
pub struct SuiteReport {
    pub suite: Suite,
    pub passed: usize,
    pub total: usize,
    /// What a passing trial established.
    pub claim: String,
    /// Largest error seen, for the record.
    pub worst: f64,
}

impl SuiteReport {
    pub fn ok(&self) -> bool {
        self.passed == self.total
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {}: {}/{} {} (worst {:.3e})",
            if self.ok() { "PASS" } else { "FAIL" },
            self.suite,
            self.passed,
            self.total,
            self.claim,
            self.worst
        )
    }
}

struct Tally {
    passed: usize,
    total: usize,
    worst: f64,
}

impl Tally {
    fn new() -> Self {
        Self {
            passed: 0,
            total: 0,
            worst: 0.0,
        }
    }

    /// Records a trial whose error must not exceed `tol`.
    fn check(&mut self, err: f64, tol: f64) {
        self.total += 1;
        self.worst = self.worst.max(err);
        if err <= tol {
            self.passed += 1;
        }
    }

    fn flag(&mut self, ok: bool) {
        self.total += 1;
        self.passed += usize::from(ok);
    }

    fn report(self, suite: Suite, claim: impl Into<String>) -> SuiteReport {
        SuiteReport {
            suite,
            passed: self.passed,
            total: self.total,
            claim: claim.into(),
            worst: self.worst,
        }
    }
}

/// Antenna counts and noise variances cycled through by the channel suites.
const GRID: [(usize, f64); 6] = [(3, 0.1), (3, 1.0), (4, 0.1), (4, 1.0), (6, 0.1), (6, 1.0)];

fn problem(seed: u64, trial: usize, rx: usize, tx: usize, sigma2: f64) -> Result<(ChannelRealization, Vec<Complex64>)> {
    let mut rng = FrameKey {
        seed,
        stream: trial as u64,
    }
    .rng();
    let ch = draw_channel(rx, tx, sigma2, &mut rng)?;
    let y = (0..rx)
        .map(|_| crate::channel::complex_normal(&mut rng, 1.0 + sigma2))
        .collect();
    Ok((ch, y))
}

fn mixed(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / 1f64.max(a.norm()).max(b.norm())
}

/// `h_j^H K^{-1} y` for every `j`, with `K` inverted by elimination.
pub fn lmmse_by_elimination(ch: &ChannelRealization, y: &[Complex64]) -> Result<Vec<Complex64>> {
    let w = lu_solve(&exclusion_covariance(ch, &[]), y)?;
    Ok((0..ch.tx()).map(|j| dot_h(ch.column(j), &w)).collect())
}

/// `max_j |a_j - b_j| / max_j |b_j|`.
pub fn relative_error(estimate: &[Complex64], reference: &[Complex64]) -> f64 {
    let scale = reference
        .iter()
        .map(|v| v.norm())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    estimate
        .iter()
        .zip(reference)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max)
        / scale
}

fn pair_identities(trials: usize, seed: u64) -> Result<SuiteReport> {
    let mut t = Tally::new();
    for trial in 0..trials {
        let (m, s2) = GRID[trial % GRID.len()];
        let (ch, y) = problem(seed, trial, m, m, s2)?;
        let table = compute_pair_statistics(&ch, &y, &PairTopology::fully_connected(m))?;
        let mut err = table.inversion_lemma_residual();
        let mut sane = true;
        for s in table.iter() {
            let filt = lu_solve(&exclusion_covariance(&ch, &[s.from, s.to]), ch.column(s.to))?;
            err = err
                .max(mixed(s.y_prime, dot_h(&filt, &y)))
                .max(mixed(s.a_cross, dot_h(&filt, ch.column(s.from))))
                .max(mixed(Complex64::new(s.a_self, 0.0), dot_h(&filt, ch.column(s.to))));
            sane &= s.a_self > 0.0 && s.u_var > 0.0 && s.u_var <= 1.0;
        }
        t.check(if sane { err } else { f64::INFINITY }, 1e-9);
    }
    Ok(t.report(
        Suite::PairIdentities,
        "pair statistics agree with elimination and the inversion lemma within 1e-9",
    ))
}

/// Iterations for the ring means to shrink an O(1) error below `1e-9`.
pub fn theorem_iterations(contraction: f64) -> usize {
    if contraction <= 0.0 {
        return THEOREM_ITERS;
    }
    let needed = (1e-9f64.ln() / contraction.ln()).ceil();
    if needed.is_finite() && needed > 0.0 {
        THEOREM_ITERS.max(needed as usize)
    } else {
        THEOREM_ITERS
    }
}

fn gbp3_theorem1(trials: usize, seed: u64) -> Result<SuiteReport> {
    let mut t = Tally::new();
    let con = Constellation::new(Modulation::Qpsk);
    let init = GaussianScalar::new(Complex64::new(7.0, 3.0), 1.0)?;
    for trial in 0..trials {
        let (m, s2) = GRID[trial % GRID.len()];
        let (ch, y) = problem(seed, trial, m, m, s2)?;
        let table = compute_pair_statistics(&ch, &y, &PairTopology::ring(m)?)?;
        let ops = forward_backward_operators(&table)?;
        let f = ops.forward_contraction().norm().max(ops.backward_contraction().norm());
        let r = DetectorConfig::new(DetectorKind::Gbp3)
            .with_iters(theorem_iterations(f))
            .with_gaussian_init(init)
            .detect(Observation::new(&ch, &y)?, &con)?;
        let means: Vec<Complex64> = r.gaussian.unwrap_or_default().iter().map(|g| g.mean).collect();
        t.check(relative_error(&means, &lmmse_by_elimination(&ch, &y)?), THEOREM_TOL);
    }
    Ok(t.report(
        Suite::Gbp3Theorem1,
        format!("converged to LMMSE within {THEOREM_TOL:e}"),
    ))
}

fn lemma3(trials: usize, seed: u64) -> Result<SuiteReport> {
    let mut t = Tally::new();
    for trial in 0..trials {
        let s2 = [0.1, 1.0, 10.0][trial % 3];
        let (ch, y) = problem(seed, trial, 4, 4, s2)?;
        let table = compute_pair_statistics(&ch, &y, &PairTopology::ring(4)?)?;
        let ops = forward_backward_operators(&table)?;
        let mut ok = true;
        let mut worst: f64 = 0.0;
        for start in 0..4 {
            let f = ops.forward_turn(start).slope.norm();
            let b = ops.backward_turn(start).slope.norm();
            ok &= f < 1.0 && b < 1.0;
            ok &= f <= ops.forward_bound() * (1.0 + 1e-12) && b <= ops.backward_bound() * (1.0 + 1e-12);
            worst = worst.max(f / ops.forward_bound()).max(b / ops.backward_bound());
        }
        t.worst = t.worst.max(worst);
        t.flag(ok);
    }
    Ok(t.report(
        Suite::Lemma3,
        "ring contractions below one and below the SINR product bound (worst = ratio to bound)",
    ))
}

/// Exact marginals by enumerating full symbol vectors in the probability domain.
pub fn enumerate_marginals(frame: &Frame, con: &Constellation) -> Result<Vec<Vec<f64>>> {
    let (m, q) = (frame.channel.tx(), con.size());
    let total = q.pow(m as u32);
    let mut metrics = Vec::with_capacity(total);
    for idx in 0..total {
        let labels: Vec<usize> = (0..m).map(|p| (idx / q.pow((m - 1 - p) as u32)) % q).collect();
        let x: Vec<Complex64> = labels.iter().map(|&l| con.point(l)).collect();
        let hx = frame.channel.h().mul_vec(&x)?;
        let d: f64 = frame.y.iter().zip(&hx).map(|(a, b)| (a - b).norm_sqr()).sum();
        metrics.push((labels, -d / frame.channel.sigma2()));
    }
    let z = log_sum_exp(&metrics.iter().map(|(_, v)| *v).collect::<Vec<_>>())?;
    (0..m)
        .map(|j| {
            (0..q)
                .map(|s| {
                    let vals: Vec<f64> = metrics.iter().filter(|(l, _)| l[j] == s).map(|(_, v)| *v).collect();
                    Ok(log_sum_exp(&vals)? - z)
                })
                .collect()
        })
        .collect()
}

fn map_oracle(trials: usize, seed: u64) -> Result<SuiteReport> {
    let mut t = Tally::new();
    let con = Constellation::new(Modulation::Qpsk);
    for trial in 0..trials {
        let m = 1 + trial % 3;
        let s2 = [0.05, 0.3, 1.0][(trial / 3) % 3];
        let frame = Frame::generate(
            FrameKey {
                seed,
                stream: trial as u64,
            },
            3,
            m,
            s2,
            &con,
        )?;
        let r = detect_map(Observation::from(&frame), &con)?;
        let oracle = enumerate_marginals(&frame, &con)?;
        let err = r
            .posteriors
            .iter()
            .zip(&oracle)
            .flat_map(|(p, o)| p.log_probs.iter().zip(o).map(|(a, b)| (a - b).abs() / b.abs().max(1.0)))
            .fold(0.0, f64::max);
        t.check(err, 1e-12);
    }
    Ok(t.report(
        Suite::MapOracle,
        "MAP log-posteriors match full enumeration within 1e-12",
    ))
}

/// `alpha sum_{x_i} p(x_j | x_i) lambda(x_i)` with the conditional built from
/// an explicit solve, in the probability domain.
pub fn literal_translation(
    ch: &ChannelRealization,
    y: &[Complex64],
    from: usize,
    to: usize,
    con: &Constellation,
    lambda: &[f64],
) -> Result<Vec<f64>> {
    let filt = lu_solve(&exclusion_covariance(ch, &[from, to]), ch.column(to))?;
    let yp = dot_h(&filt, y);
    let ac = dot_h(&filt, ch.column(from));
    let a_self = dot_h(&filt, ch.column(to)).re;
    let out: Vec<f64> = con
        .points()
        .iter()
        .map(|&xj| {
            con.points()
                .iter()
                .zip(lambda)
                .map(|(&xi, l)| {
                    let mean = (yp - ac * xi) / (1.0 + a_self);
                    (-(xj - mean).norm_sqr() * (1.0 + a_self)).exp() * l
                })
                .sum()
        })
        .collect();
    let z: f64 = out.iter().sum();
    Ok(out.into_iter().map(|v| v / z).collect())
}

fn max_prob_gap(log_table: &[f64], probs: &[f64]) -> f64 {
    log_table
        .iter()
        .zip(probs)
        .map(|(a, b)| (a.exp() - b).abs())
        .fold(0.0, f64::max)
}

fn bp_literal(trials: usize, seed: u64) -> Result<SuiteReport> {
    let mut t = Tally::new();
    let con = Constellation::new(Modulation::Qpsk);
    let q = con.size();
    for trial in 0..trials {
        let m = 3 + trial % 2;
        let frame = Frame::generate(
            FrameKey {
                seed,
                stream: trial as u64,
            },
            m,
            m,
            0.5,
            &con,
        )?;
        let (ch, y) = (&frame.channel, &frame.y);

        // one flooding update from the messages of the previous iteration
        let table = compute_pair_statistics(ch, y, &PairTopology::fully_connected(m))?;
        let mut bp = FullyConnectedBp::new(&table, &con, LogSum::Exact);
        bp.step();
        let prev: Vec<Vec<f64>> = (0..m * m)
            .map(|idx| bp.message(idx / m, idx % m).iter().map(|v| v.exp()).collect())
            .collect();
        bp.step();
        let mut err: f64 = 0.0;
        for i in 0..m {
            for j in (0..m).filter(|&j| j != i) {
                let mut lambda = vec![1.0; q];
                for k in (0..m).filter(|&k| k != i && k != j) {
                    for (l, p) in lambda.iter_mut().zip(&prev[k * m + i]) {
                        *l *= p;
                    }
                }
                let lit = literal_translation(ch, y, i, j, &con, &lambda)?;
                err = err.max(max_prob_gap(bp.message(i, j), &lit));
            }
        }

        // one forward-backward turn from uniform messages
        let table = compute_pair_statistics(ch, y, &PairTopology::ring(m)?)?;
        let mut ring = RingBp::new(&table, &con, LogSum::Exact)?;
        ring.iterate();
        let mut fwd = vec![vec![1.0 / q as f64; q]; m];
        let mut bwd = fwd.clone();
        for p in 0..m {
            fwd[p] = literal_translation(ch, y, p, (p + 1) % m, &con, &fwd[(p + m - 1) % m])?;
        }
        for k in 0..m {
            let p = (m - k) % m;
            bwd[p] = literal_translation(ch, y, p, (p + m - 1) % m, &con, &bwd[(p + 1) % m])?;
        }
        for p in 0..m {
            err = err
                .max(max_prob_gap(ring.forward_message(p), &fwd[p]))
                .max(max_prob_gap(ring.backward_message(p), &bwd[p]));
        }
        t.check(err, 1e-12);
    }
    Ok(t.report(
        Suite::BpLiteral,
        "BP2/BP3 message updates match the literal sums within 1e-12",
    ))
}

fn fixed_point(trials: usize, seed: u64) -> Result<SuiteReport> {
    let mut t = Tally::new();
    for trial in 0..trials {
        let (m, s2) = GRID[trial % GRID.len()];
        let (ch, y) = problem(seed, trial, m, m, s2)?;
        let table = compute_pair_statistics(&ch, &y, &PairTopology::ring(m)?)?;
        let ops = forward_backward_operators(&table)?;
        let lmmse = lmmse_by_elimination(&ch, &y)?;
        let mut err: f64 = 0.0;
        for p in 0..m {
            let node = ops.order()[p];
            err = err
                .max(mixed(ops.forward_turn(p).fixed_point(), lmmse[node]))
                .max(mixed(ops.backward_turn(p).fixed_point(), lmmse[node]));
        }
        // the variance recursion settles; its limit is not asserted to be the LMMSE error
        let mut bp = RingGaussianBp::new(&table, GaussianScalar::standard())?;
        for _ in 0..THEOREM_ITERS {
            bp.iterate();
        }
        let before = bp.beliefs();
        bp.iterate();
        let drift = before
            .iter()
            .zip(bp.beliefs())
            .map(|(a, b)| (a.variance() - b.variance()).abs())
            .fold(0.0, f64::max);
        t.check(err.max(drift), 1e-10);
    }
    Ok(t.report(
        Suite::FixedPoint,
        "per-node turn fixed points equal LMMSE and variances settle within 1e-10",
    ))
}

fn uniqueness(trials: usize, seed: u64) -> Result<SuiteReport> {
    let mut t = Tally::new();
    for trial in 0..trials {
        let (m, s2) = GRID[trial % GRID.len()];
        let (ch, y) = problem(seed, trial, m, m, s2)?;
        let table = compute_pair_statistics(&ch, &y, &PairTopology::ring(m)?)?;
        let mut a = RingGaussianBp::new(&table, GaussianScalar::standard())?;
        let mut b = RingGaussianBp::new(&table, GaussianScalar::new(Complex64::new(-4.0, 9.0), 25.0)?)?;
        for _ in 0..THEOREM_ITERS {
            a.iterate();
            b.iterate();
        }
        let err = a
            .beliefs()
            .iter()
            .zip(b.beliefs())
            .map(|(x, z)| (x.mean - z.mean).norm().max((x.variance() - z.variance()).abs()))
            .fold(0.0, f64::max);
        t.check(err, 1e-10);
    }
    Ok(t.report(
        Suite::Uniqueness,
        "two starting points reach the same mean and variance within 1e-10",
    ))
}

/// 2-norm condition number from power iterations on `H^H H` and its inverse.
pub fn condition_number(h: &ComplexMatrix) -> Result<f64> {
    let gram = h.adjoint().mul(h)?;
    let n = gram.rows();
    let power = |apply: &dyn Fn(&[Complex64]) -> Result<Vec<Complex64>>| -> Result<f64> {
        let mut v: Vec<Complex64> = (0..n).map(|k| Complex64::new(1.0, 0.1 * k as f64)).collect();
        let mut lambda = 0.0;
        for _ in 0..300 {
            let w = apply(&v)?;
            let nw = crate::numerics::norm(&w);
            lambda = nw / crate::numerics::norm(&v);
            v = w.into_iter().map(|z| z / nw).collect();
        }
        Ok(lambda)
    };
    let hi = power(&|v| gram.mul_vec(v))?;
    let inv = power(&|v| lu_solve(&gram, v))?;
    Ok((hi * inv).sqrt())
}

fn noiseless(trials: usize, seed: u64) -> Result<SuiteReport> {
    let mut t = Tally::new();
    let con = Constellation::new(Modulation::Qpsk);
    let mut stream = 0u64;
    while t.total < trials {
        let frame = Frame::generate(FrameKey { seed, stream }, 4, 4, 1e-6, &con)?;
        stream += 1;
        if condition_number(frame.channel.h())? >= 10.0 {
            continue;
        }
        let mut ok = true;
        for kind in DetectorKind::ALL {
            let r = DetectorConfig::new(kind).detect(Observation::from(&frame), &con)?;
            ok &= r.hard_labels() == frame.tx_labels && r.hard_bits() == frame.tx_bits;
        }
        t.flag(ok);
    }
    Ok(t.report(
        Suite::Noiseless,
        "well-conditioned noiseless frames recovered by every detector",
    ))
}

fn normalization(trials: usize, seed: u64) -> Result<SuiteReport> {
    let mut t = Tally::new();
    let con = Constellation::new(Modulation::Qam16);
    for trial in 0..trials {
        let m = 3 + trial % 2;
        let frame = Frame::generate(
            FrameKey {
                seed,
                stream: trial as u64,
            },
            m,
            m,
            0.1,
            &con,
        )?;
        let full = compute_pair_statistics(&frame.channel, &frame.y, &PairTopology::fully_connected(m))?;
        let ring = compute_pair_statistics(&frame.channel, &frame.y, &PairTopology::ring(m)?)?;
        let mut bp = FullyConnectedBp::new(&full, &con, LogSum::Exact);
        let mut rb = RingBp::new(&ring, &con, LogSum::Exact)?;
        let mut err: f64 = 0.0;
        for _ in 0..4 {
            bp.step();
            rb.iterate();
            for i in 0..m {
                for j in (0..m).filter(|&j| j != i) {
                    err = err.max(log_sum_exp(bp.message(i, j))?.abs());
                }
                err = err
                    .max(log_sum_exp(rb.forward_message(i))?.abs())
                    .max(log_sum_exp(rb.backward_message(i))?.abs());
            }
        }
        t.check(err, 1e-9);
    }
    Ok(t.report(Suite::Normalization, "every discrete message sums to one within 1e-9"))
}
