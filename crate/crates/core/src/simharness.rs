//! Monte-Carlo link simulation: SNR sweeps, iteration sweeps and operation counts.
//!
//! Frames for one SNR point come from ChaCha8 streams keyed by a per-point
//! seed and the frame index. The per-point seed depends only on the master
//! seed and the SNR, so every detector and every iteration count sees the same
//! frames. Frames are detected in batches (in parallel when enabled) and
//! folded in frame order, so the stop rule fires on the same frame whatever
//! the worker count.

use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::channel::{Frame, FrameKey};
use crate::detectors::{BeliefSnapshot, DetectorConfig, DetectorKind, Observation};
use crate::modem::{Constellation, Modulation};
use crate::{Error, Result};

/// Operation counts under the closed-form complexity model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCount {
    pub pre: u64,
    pub post: u64,
    pub total: u64,
}

fn checked_count(pre: Option<u64>, post: Option<u64>) -> Result<OpCount> {
    let overflow = || Error::Config("operation count overflows u64".into());
    let (pre, post) = (pre.ok_or_else(overflow)?, post.ok_or_else(overflow)?);
    Ok(OpCount {
        pre,
        post,
        total: pre.checked_add(post).ok_or_else(overflow)?,
    })
}

/// Approximate operations to detect one vector with `tx` antennas, `bits`
/// bits per symbol and `iters` iterations.
///
/// | detector | pre-processing | detection |
/// |---|---|---|
/// | `mmse` | `24M^3 + 18M^2 + 2M` | `6M 2^m` |
/// | `map` | 0 | `2^{mM} (8M^2 + 9M)` |
/// | `bp2` | `16M^4 + 60M^3 + 437M^2 - 486M` | `(2^{2m}(2v + 21) + 2^m v) M(M-1)` |
/// | `bp3` | `56M^3 + 113M^2 + 914M` | `2^{2m}(2v + 21) 2M` |
///
/// `bp1`, `gbp2` and `gbp3` have no model.
pub fn op_count(kind: DetectorKind, tx: usize, bits: usize, iters: usize) -> Result<OpCount> {
    if tx == 0 || bits == 0 {
        return Err(Error::Config(format!(
            "operation count needs M >= 1 and m >= 1, got M={tx}, m={bits}"
        )));
    }
    let m = tx as u64;
    let q = 1u64.checked_shl(bits as u32).filter(|_| bits < 64);
    let q2 = q.and_then(|q| q.checked_mul(q));
    let nu = iters as u64;
    match kind {
        DetectorKind::Mmse => checked_count(
            Some(24 * m.pow(3) + 18 * m * m + 2 * m),
            q.and_then(|q| q.checked_mul(6 * m)),
        ),
        DetectorKind::Map => {
            let hyp = bits.checked_mul(tx).filter(|&b| b < 64).map(|b| 1u64 << b);
            checked_count(Some(0), hyp.and_then(|h| h.checked_mul(8 * m * m + 9 * m)))
        }
        DetectorKind::Bp2 => {
            let per_pair = q2
                .and_then(|q2| q2.checked_mul(2 * nu + 21))
                .zip(q.and_then(|q| q.checked_mul(nu)))
                .and_then(|(a, b)| a.checked_add(b));
            checked_count(
                (16 * m.pow(4) + 60 * m.pow(3) + 437 * m * m).checked_sub(486 * m),
                per_pair.and_then(|p| p.checked_mul(m * (m - 1))),
            )
        }
        DetectorKind::Bp3 => checked_count(
            Some(56 * m.pow(3) + 113 * m * m + 914 * m),
            q2.and_then(|q2| q2.checked_mul(2 * nu + 21))
                .and_then(|p| p.checked_mul(2 * m)),
        ),
        DetectorKind::Bp1 | DetectorKind::Gbp2 | DetectorKind::Gbp3 => {
            Err(Error::NoComplexityModel(kind.name().to_string()))
        }
    }
}

/// One Monte-Carlo experiment: a detector, an antenna setup and an SNR grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub detector: DetectorConfig,
    pub tx: usize,
    pub rx: usize,
    pub modulation: Modulation,
    /// SNR grid in dB, SNR = 1 / noise variance.
    pub snr_db: Vec<f64>,
    /// A point stops once this many bit errors have been counted...
    pub min_errors: u64,
    /// ...or after this many frames.
    pub max_frames: u64,
    pub seed: u64,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.snr_db.is_empty() {
            return Err(Error::Config("SNR grid is empty".into()));
        }
        if let Some(s) = self.snr_db.iter().find(|s| !s.is_finite()) {
            return Err(Error::Config(format!("SNR value {s} is not finite")));
        }
        if self.tx == 0 || self.rx < self.tx {
            return Err(Error::AntennaCount {
                rx: self.rx,
                tx: self.tx,
            });
        }
        if self.max_frames == 0 {
            return Err(Error::Config("max_frames must be positive".into()));
        }
        if let Some(p) = &self.detector.permutation {
            if p.len() != self.tx {
                return Err(Error::Permutation(p.clone()));
            }
        }
        self.detector.check_iters()
    }

    /// At least 100 errors per point for a reportable BER.
    pub fn is_publishable(&self) -> bool {
        self.min_errors >= 100
    }

    pub fn with_detector(&self, detector: DetectorConfig) -> Self {
        Self {
            detector,
            ..self.clone()
        }
    }
}

/// Noise variance for an SNR in dB.
pub fn noise_variance(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the frame streams at one SNR point.
pub fn point_seed(master: u64, snr_db: f64) -> u64 {
    splitmix64(master ^ splitmix64(snr_db.to_bits()))
}

/// How frames are spread over threads.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Rayon pool with this many threads; 0 picks the rayon default.
    /// Runs sequentially when the `parallel` feature is off.
    Parallel {
        workers: usize,
    },
}

impl Default for Execution {
    fn default() -> Self {
        Execution::Parallel { workers: 0 }
    }
}

struct Runner {
    #[cfg(feature = "parallel")]
    pool: Option<rayon::ThreadPool>,
}

impl Runner {
    fn new(exec: Execution) -> Result<Self> {
        #[cfg(feature = "parallel")]
        {
            let pool = match exec {
                Execution::Sequential => None,
                Execution::Parallel { workers } => Some(
                    rayon::ThreadPoolBuilder::new()
                        .num_threads(workers)
                        .build()
                        .map_err(|e| Error::Config(format!("thread pool: {e}")))?,
                ),
            };
            Ok(Self { pool })
        }
        #[cfg(not(feature = "parallel"))]
        {
            let _ = exec;
            Ok(Self {})
        }
    }

    fn map<T, F>(&self, start: u64, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if let Some(pool) = &self.pool {
            use rayon::prelude::*;
            return pool.install(|| (0..len).into_par_iter().map(|k| f(start + k as u64)).collect());
        }
        (0..len).map(|k| f(start + k as u64)).collect()
    }
}

const FIRST_BATCH: u64 = 64;
const MAX_BATCH: u64 = 4096;

#[derive(Clone, Copy, Debug, Default)]
struct FrameOutcome {
    bit_errors: u64,
    symbol_errors: u64,
    diverged: bool,
}

fn detect_frame(cfg: &SweepConfig, constellation: &Constellation, key: FrameKey, sigma2: f64) -> Result<FrameOutcome> {
    let frame = Frame::generate(key, cfg.rx, cfg.tx, sigma2, constellation)?;
    let result = cfg.detector.detect(Observation::from(&frame), constellation)?;
    let bit_errors = result
        .hard_bits()
        .iter()
        .zip(&frame.tx_bits)
        .filter(|(a, b)| a != b)
        .count() as u64;
    let symbol_errors = result
        .hard_labels()
        .iter()
        .zip(&frame.tx_labels)
        .filter(|(a, b)| a != b)
        .count() as u64;
    Ok(FrameOutcome {
        bit_errors,
        symbol_errors,
        diverged: result.diverged,
    })
}

/// Why a point stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    MinErrors,
    MaxFrames,
}

/// Result of one SNR point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub detector: DetectorKind,
    pub tx: usize,
    pub rx: usize,
    pub modulation: Modulation,
    pub snr_db: f64,
    pub iters: usize,
    pub frames: u64,
    pub bits: u64,
    pub bit_errors: u64,
    pub symbols: u64,
    pub symbol_errors: u64,
    pub diverged_frames: u64,
    pub stop: StopReason,
    pub elapsed_ms: f64,
}

impl SweepPoint {
    pub fn ber(&self) -> f64 {
        self.bit_errors as f64 / self.bits as f64
    }

    pub fn ser(&self) -> f64 {
        self.symbol_errors as f64 / self.symbols as f64
    }

    /// 95% Wilson interval on the BER.
    pub fn ber_interval(&self) -> (f64, f64) {
        wilson_interval(self.bit_errors, self.bits, WILSON_Z95)
    }

    pub fn op_count(&self) -> Option<OpCount> {
        op_count(self.detector, self.tx, self.modulation.bits_per_symbol(), self.iters).ok()
    }
}

/// Two-sided 95% normal quantile.
pub const WILSON_Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Runs one SNR point until the stop rule fires.
pub fn run_point(cfg: &SweepConfig, snr_db: f64, exec: Execution) -> Result<SweepPoint> {
    cfg.validate()?;
    run_point_with(cfg, snr_db, &Runner::new(exec)?)
}

fn run_point_with(cfg: &SweepConfig, snr_db: f64, runner: &Runner) -> Result<SweepPoint> {
    let start = Instant::now();
    let constellation = Constellation::new(cfg.modulation);
    let sigma2 = noise_variance(snr_db);
    let seed = point_seed(cfg.seed, snr_db);

    let mut frames = 0u64;
    let mut bit_errors = 0u64;
    let mut symbol_errors = 0u64;
    let mut diverged_frames = 0u64;
    let mut batch = FIRST_BATCH;
    let stop = 'outer: loop {
        let len = batch.min(cfg.max_frames - frames) as usize;
        let outcomes = runner.map(frames, len, |stream| {
            detect_frame(cfg, &constellation, FrameKey { seed, stream }, sigma2)
        });
        for outcome in outcomes {
            let o = outcome?;
            frames += 1;
            bit_errors += o.bit_errors;
            symbol_errors += o.symbol_errors;
            diverged_frames += u64::from(o.diverged);
            if bit_errors >= cfg.min_errors {
                break 'outer StopReason::MinErrors;
            }
            if frames >= cfg.max_frames {
                break 'outer StopReason::MaxFrames;
            }
        }
        batch = (batch * 2).min(MAX_BATCH);
    };

    Ok(SweepPoint {
        detector: cfg.detector.kind,
        tx: cfg.tx,
        rx: cfg.rx,
        modulation: cfg.modulation,
        snr_db,
        iters: cfg.detector.iters,
        frames,
        bits: frames * (cfg.tx * constellation.bits_per_symbol()) as u64,
        bit_errors,
        symbols: frames * cfg.tx as u64,
        symbol_errors,
        diverged_frames,
        stop,
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

/// Runs every point of the SNR grid.
pub fn run_sweep(cfg: &SweepConfig, exec: Execution) -> Result<Vec<SweepPoint>> {
    cfg.validate()?;
    let runner = Runner::new(exec)?;
    cfg.snr_db.iter().map(|&s| run_point_with(cfg, s, &runner)).collect()
}

/// Replays the same frames for each iteration count. Returns one curve per entry of `iters`.
pub fn iteration_sweep(cfg: &SweepConfig, iters: &[usize], exec: Execution) -> Result<Vec<Vec<SweepPoint>>> {
    if !cfg.detector.kind.is_iterative() || cfg.detector.kind == DetectorKind::Bp1 {
        return Err(Error::Config(format!(
            "iteration sweeps need bp2, bp3, gbp2 or gbp3, got {}",
            cfg.detector.kind
        )));
    }
    iters
        .iter()
        .map(|&n| run_sweep(&cfg.with_detector(cfg.detector.clone().with_iters(n)), exec))
        .collect()
}

/// SNR at which a curve reaches `ber`, by linear interpolation of log BER
/// between grid points. `None` outside the curve or where BER is zero.
pub fn snr_at_ber(curve: &[(f64, f64)], ber: f64) -> Option<f64> {
    curve.windows(2).find_map(|w| {
        let ((s0, b0), (s1, b1)) = (w[0], w[1]);
        if b0 <= 0.0 || b1 <= 0.0 || ber <= 0.0 {
            return None;
        }
        let (l0, l1, l) = (b0.ln(), b1.ln(), ber.ln());
        let (lo, hi) = if l0 <= l1 { (l0, l1) } else { (l1, l0) };
        if l < lo || l > hi {
            return None;
        }
        if l0 == l1 {
            return Some(s0);
        }
        Some(s0 + (l - l0) / (l1 - l0) * (s1 - s0))
    })
}

/// Largest horizontal distance in dB from the points of `other` to `reference`,
/// over the points whose BER lies within the range of `reference`.
pub fn snr_gap_db(reference: &[(f64, f64)], other: &[(f64, f64)]) -> Option<f64> {
    other
        .iter()
        .filter_map(|&(s, b)| snr_at_ber(reference, b).map(|r| (s - r).abs()))
        .fold(None, |acc: Option<f64>, g| Some(acc.map_or(g, |a| a.max(g))))
}

/// `(snr_db, ber)` pairs of a sweep.
pub fn ber_curve(points: &[SweepPoint]) -> Vec<(f64, f64)> {
    points.iter().map(|p| (p.snr_db, p.ber())).collect()
}

#[derive(Serialize)]
struct CsvRow<'a> {
    detector: &'a str,
    #[serde(rename = "M")]
    tx: usize,
    #[serde(rename = "N")]
    rx: usize,
    #[serde(rename = "mod")]
    modulation: &'a str,
    snr_db: f64,
    iters: usize,
    frames: u64,
    bits: u64,
    bit_errors: u64,
    ber: f64,
    ser: f64,
    ci_low: f64,
    ci_high: f64,
    op_pre: Option<u64>,
    op_post: Option<u64>,
    elapsed_ms: f64,
    stop: StopReason,
}

/// Writes sweep points, one row per point. `op_pre`/`op_post` are empty for
/// detectors without a complexity model; `stop` records which rule ended the point.
pub fn write_csv<W: Write>(points: &[SweepPoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for p in points {
        let (ci_low, ci_high) = p.ber_interval();
        let ops = p.op_count();
        w.serialize(CsvRow {
            detector: p.detector.name(),
            tx: p.tx,
            rx: p.rx,
            modulation: p.modulation.name(),
            snr_db: p.snr_db,
            iters: p.iters,
            frames: p.frames,
            bits: p.bits,
            bit_errors: p.bit_errors,
            ber: p.ber(),
            ser: p.ser(),
            ci_low,
            ci_high,
            op_pre: ops.map(|o| o.pre),
            op_post: ops.map(|o| o.post),
            elapsed_ms: p.elapsed_ms,
            stop: p.stop,
        })?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct TraceRow {
    snr_db: f64,
    frame: u64,
    iteration: usize,
    antenna: usize,
    mean_re: Option<f64>,
    mean_im: Option<f64>,
    variance: Option<f64>,
    top_label: usize,
    top_log_prob: f64,
}

/// Writes per-iteration beliefs of the first `frames` frames of each SNR point.
pub fn write_trace<W: Write>(cfg: &SweepConfig, frames: u64, out: W) -> Result<()> {
    cfg.validate()?;
    let constellation = Constellation::new(cfg.modulation);
    let detector = cfg.detector.clone().with_trace(true);
    let mut w = csv::Writer::from_writer(out);
    for &snr_db in &cfg.snr_db {
        let seed = point_seed(cfg.seed, snr_db);
        for stream in 0..frames {
            let frame = Frame::generate(
                FrameKey { seed, stream },
                cfg.rx,
                cfg.tx,
                noise_variance(snr_db),
                &constellation,
            )?;
            let result = detector.detect(Observation::from(&frame), &constellation)?;
            for (it, snap) in result.trace.iter().enumerate() {
                let rows: Vec<TraceRow> = match snap {
                    BeliefSnapshot::Discrete(post) => post
                        .iter()
                        .enumerate()
                        .map(|(a, p)| {
                            let top = p.argmax();
                            TraceRow {
                                snr_db,
                                frame: stream,
                                iteration: it + 1,
                                antenna: a,
                                mean_re: None,
                                mean_im: None,
                                variance: None,
                                top_label: top,
                                top_log_prob: p.log_probs[top],
                            }
                        })
                        .collect(),
                    BeliefSnapshot::Gaussian(g) => g
                        .iter()
                        .enumerate()
                        .map(|(a, g)| {
                            let p = crate::detectors::project(g, &constellation);
                            let top = p.argmax();
                            TraceRow {
                                snr_db,
                                frame: stream,
                                iteration: it + 1,
                                antenna: a,
                                mean_re: Some(g.mean.re),
                                mean_im: Some(g.mean.im),
                                variance: Some(g.variance()),
                                top_label: top,
                                top_log_prob: p.log_probs[top],
                            }
                        })
                        .collect(),
                };
                for r in rows {
                    w.serialize(r)?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes the first `frames` frames of each SNR point as JSON lines.
pub fn dump_frames<W: Write>(cfg: &SweepConfig, frames: u64, mut out: W) -> Result<()> {
    cfg.validate()?;
    let constellation = Constellation::new(cfg.modulation);
    for &snr_db in &cfg.snr_db {
        let seed = point_seed(cfg.seed, snr_db);
        for stream in 0..frames {
            let frame = Frame::generate(
                FrameKey { seed, stream },
                cfg.rx,
                cfg.tx,
                noise_variance(snr_db),
                &constellation,
            )?;
            serde_json::to_writer(&mut out, &frame.record())?;
            out.write_all(b"\n")?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(kind: DetectorKind) -> SweepConfig {
        SweepConfig {
            detector: DetectorConfig::new(kind),
            tx: 2,
            rx: 2,
            modulation: Modulation::Qpsk,
            snr_db: vec![4.0, 8.0],
            min_errors: 50,
            max_frames: 2000,
            seed: 11,
        }
    }

    #[test]
    fn table_counts_for_linear_and_ring_detectors() {
        // tabulated columns (M=6, m=2, v=6) and (M=4, m=4, v=6)
        assert_eq!(op_count(DetectorKind::Mmse, 6, 2, 0).unwrap().total, 5_988);
        assert_eq!(op_count(DetectorKind::Mmse, 4, 4, 0).unwrap().total, 2_216);
        assert_eq!(op_count(DetectorKind::Bp3, 6, 2, 6).unwrap().total, 27_984);
        assert_eq!(op_count(DetectorKind::Bp3, 4, 4, 6).unwrap().total, 76_632);
    }

    #[test]
    fn formula_counts_for_full_graph_and_enumeration() {
        assert_eq!(op_count(DetectorKind::Bp2, 6, 2, 4).unwrap().total, 60_912);
        assert_eq!(op_count(DetectorKind::Bp2, 4, 4, 4).unwrap().total, 102_840);
        assert_eq!(op_count(DetectorKind::Map, 6, 2, 0).unwrap().total, 1_400_832);
        assert_eq!(op_count(DetectorKind::Map, 4, 4, 0).unwrap().total, 10_747_904);
    }

    #[test]
    fn counts_split_and_reject_unmodelled() {
        let c = op_count(DetectorKind::Mmse, 6, 2, 0).unwrap();
        assert_eq!((c.pre, c.post), (5_844, 144));
        for k in [DetectorKind::Bp1, DetectorKind::Gbp2, DetectorKind::Gbp3] {
            assert!(matches!(op_count(k, 4, 2, 4), Err(Error::NoComplexityModel(_))));
        }
        assert!(op_count(DetectorKind::Map, 40, 2, 0).is_err());
    }

    #[test]
    fn wilson_interval_reference_values() {
        // k=10, n=100: p=0.1, centre=(0.1+0.019208)/1.038415, half=0.059770
        let (lo, hi) = wilson_interval(10, 100, WILSON_Z95);
        assert!((lo - 0.055_229_1).abs() < 1e-6, "{lo}");
        assert!((hi - 0.174_365_7).abs() < 1e-6, "{hi}");
        let (lo, hi) = wilson_interval(0, 50, WILSON_Z95);
        assert!(lo.abs() < 1e-12);
        assert!(hi > 0.0 && hi < 0.1);
    }

    #[test]
    fn snr_interpolation_in_log_ber() {
        let curve = [(0.0, 1e-1), (10.0, 1e-3)];
        assert!((snr_at_ber(&curve, 1e-2).unwrap() - 5.0).abs() < 1e-12);
        assert!(snr_at_ber(&curve, 1e-4).is_none());
        let shifted = [(1.0, 1e-1), (11.0, 1e-3)];
        assert!((snr_gap_db(&curve, &shifted).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn stop_rule_is_exact() {
        let cfg = config(DetectorKind::Mmse);
        let p = run_point(&cfg, 4.0, Execution::Sequential).unwrap();
        assert_eq!(p.stop, StopReason::MinErrors);
        assert!(p.bit_errors >= cfg.min_errors);
        let capped = SweepConfig {
            max_frames: 10,
            min_errors: 1_000_000,
            ..cfg
        };
        let p = run_point(&capped, 4.0, Execution::Sequential).unwrap();
        assert_eq!((p.frames, p.stop), (10, StopReason::MaxFrames));
        assert_eq!(p.bits, 40);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let cfg = config(DetectorKind::Bp2);
        let strip = |v: Vec<SweepPoint>| {
            v.into_iter()
                .map(|p| SweepPoint { elapsed_ms: 0.0, ..p })
                .collect::<Vec<_>>()
        };
        let a = strip(run_sweep(&cfg, Execution::Sequential).unwrap());
        let b = strip(run_sweep(&cfg, Execution::Parallel { workers: 3 }).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn config_round_trips_through_json() {
        let cfg = config(DetectorKind::Bp3)
            .with_detector(DetectorConfig::new(DetectorKind::Bp3).with_permutation(vec![1, 0]));
        let back: SweepConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut cfg = config(DetectorKind::Mmse);
        cfg.snr_db.clear();
        assert!(cfg.validate().is_err());
        let mut cfg = config(DetectorKind::Mmse);
        cfg.rx = 1;
        assert!(cfg.validate().is_err());
        let cfg = config(DetectorKind::Bp2).with_detector(DetectorConfig::new(DetectorKind::Bp2).with_iters(0));
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn csv_header_matches_schema() {
        let cfg = SweepConfig {
            max_frames: 5,
            ..config(DetectorKind::Mmse)
        };
        let pts = run_sweep(&cfg, Execution::Sequential).unwrap();
        let mut buf = Vec::new();
        write_csv(&pts, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let header = text.lines().next().unwrap();
        assert_eq!(
            header,
            "detector,M,N,mod,snr_db,iters,frames,bits,bit_errors,ber,ser,ci_low,ci_high,op_pre,op_post,elapsed_ms,stop"
        );
        assert_eq!(text.lines().count(), 3);
    }

    #[test]
    fn seeds_differ_per_point() {
        assert_ne!(point_seed(1, 4.0), point_seed(1, 6.0));
        assert_ne!(point_seed(1, 4.0), point_seed(2, 4.0));
        assert!((noise_variance(10.0) - 0.1).abs() < 1e-15);
    }
}
