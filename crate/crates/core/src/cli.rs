//! The `pwbp` command line.
//!
//! Exit status: 0 on success, 1 on a runtime or verification failure, 2 on a
//! usage error.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::detectors::{DetectorConfig, DetectorKind};
use crate::modem::{Constellation, Modulation};
use crate::numerics::LogSum;
use crate::simharness::{self, Execution, SweepConfig, SweepPoint};
use crate::verify::Suite;
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(
    name = "pwbp",
    version,
    about = "Pair-wise BP MIMO detection and link-level simulation"
)]
pub struct Cli {
    /// Progress on stderr; repeat for more.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// BER/SER over an SNR grid.
    Sweep(SweepArgs),
    /// BER over an SNR grid for several iteration counts on the same frames.
    Iterate {
        #[command(flatten)]
        sweep: SweepArgs,
        /// Iteration counts, e.g. 1,2,4,8.
        #[arg(long, value_delimiter = ',', required = true)]
        iters_list: Vec<usize>,
    },
    /// Run numerical verification suites.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Operation counts under the closed-form complexity model.
    Opcount {
        #[arg(long)]
        detector: DetectorKind,
        #[arg(long)]
        tx: usize,
        #[arg(long = "mod")]
        modulation: Modulation,
        #[arg(long)]
        iters: Option<usize>,
    },
    /// Write the constellation labelling as CSV.
    DumpConstellation {
        #[arg(long = "mod")]
        modulation: Modulation,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// JSON sweep configuration; replaces the experiment flags below.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, required_unless_present = "config")]
    pub detector: Option<DetectorKind>,
    /// Transmit antennas M.
    #[arg(long, required_unless_present = "config")]
    pub tx: Option<usize>,
    /// Receive antennas N (defaults to M).
    #[arg(long)]
    pub rx: Option<usize>,
    #[arg(long = "mod", default_value = "qpsk")]
    pub modulation: Modulation,
    /// SNR grid in dB as lo:step:hi, or a single value.
    #[arg(long, value_parser = parse_snr_grid, required_unless_present = "config")]
    pub snr: Option<SnrGrid>,
    #[arg(long)]
    pub iters: Option<usize>,
    /// Ring visiting order for bp3/gbp3, e.g. 2,0,3,1.
    #[arg(long, value_delimiter = ',')]
    pub perm: Option<Vec<usize>>,
    #[arg(long, required_unless_present = "config")]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 500)]
    pub min_errors: u64,
    #[arg(long, default_value_t = 1_000_000)]
    pub max_frames: u64,
    /// Use the max-log approximation in discrete detectors.
    #[arg(long)]
    pub max_log: bool,
    /// CSV output; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write per-iteration beliefs of the first frames of each point.
    #[arg(long)]
    pub debug_trace: bool,
    #[arg(long, default_value_t = 4)]
    pub trace_frames: u64,
    /// Also write the first frames of each point as JSON lines to this path.
    #[arg(long)]
    pub dump_frames: Option<PathBuf>,
    #[arg(long, default_value_t = 16)]
    pub dump_count: u64,
    /// Worker threads; 0 uses all cores, 1 runs sequentially.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    /// Write the resolved configuration as JSON before running.
    #[arg(long)]
    pub emit_config: Option<PathBuf>,
}

/// Parsed `lo:step:hi` grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SnrGrid(pub Vec<f64>);

pub fn parse_snr_grid(s: &str) -> std::result::Result<SnrGrid, String> {
    let parts: Vec<f64> = s
        .split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("bad SNR value {p:?}: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    match parts[..] {
        [v] => Ok(SnrGrid(vec![v])),
        [lo, step, hi] => {
            if !(step.is_finite() && step > 0.0) || hi < lo {
                return Err(format!("expected lo:step:hi with step > 0 and hi >= lo, got {s}"));
            }
            let n = ((hi - lo) / step + 1e-9).floor() as usize + 1;
            Ok(SnrGrid((0..n).map(|k| lo + k as f64 * step).collect()))
        }
        _ => Err(format!("expected lo:step:hi or a single value, got {s}")),
    }
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

impl SweepArgs {
    fn resolve(&self) -> std::result::Result<SweepConfig, Failure> {
        let cfg = match &self.config {
            Some(path) => {
                let text =
                    std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
                serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?
            }
            None => {
                let kind = self.detector.expect("required by clap");
                let tx = self.tx.expect("required by clap");
                let mut detector = DetectorConfig::new(kind)
                    .with_iters(self.iters.unwrap_or(kind.default_iters()))
                    .with_log_sum(if self.max_log { LogSum::MaxOnly } else { LogSum::Exact });
                detector.permutation = self.perm.clone();
                SweepConfig {
                    detector,
                    tx,
                    rx: self.rx.unwrap_or(tx),
                    modulation: self.modulation,
                    snr_db: self.snr.clone().expect("required by clap").0,
                    min_errors: self.min_errors,
                    max_frames: self.max_frames,
                    seed: self.seed.expect("required by clap"),
                }
            }
        };
        cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
        Ok(cfg)
    }

    fn execution(&self) -> Execution {
        match self.workers {
            1 => Execution::Sequential,
            workers => Execution::Parallel { workers },
        }
    }

    fn side_outputs(&self, cfg: &SweepConfig) -> std::result::Result<(), Failure> {
        if let Some(path) = &self.emit_config {
            std::fs::write(path, serde_json::to_string_pretty(cfg).map_err(Error::from)? + "\n")?;
        }
        if let Some(path) = &self.dump_frames {
            let mut w = BufWriter::new(File::create(path)?);
            simharness::dump_frames(cfg, self.dump_count, &mut w)?;
            w.flush()?;
        }
        if self.debug_trace {
            let path = trace_path(self.out.as_deref());
            let mut w = BufWriter::new(File::create(&path)?);
            simharness::write_trace(cfg, self.trace_frames, &mut w)?;
            w.flush()?;
        }
        Ok(())
    }
}

/// `<out>.trace.csv`, or `trace.csv` when writing to stdout.
fn trace_path(out: Option<&Path>) -> PathBuf {
    match out {
        Some(p) => p.with_extension("trace.csv"),
        None => PathBuf::from("trace.csv"),
    }
}

fn write_points(points: &[SweepPoint], out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            simharness::write_csv(points, &mut w)?;
            w.flush()?;
            Ok(())
        }
        None => simharness::write_csv(points, io::stdout().lock()),
    }
}

fn log_points(verbose: u8, points: &[SweepPoint]) {
    if verbose == 0 {
        return;
    }
    for p in points {
        eprintln!(
            "{} iters={} snr={} dB: {} frames, {} bit errors, BER {:.3e} ({:?}, {:.0} ms)",
            p.detector,
            p.iters,
            p.snr_db,
            p.frames,
            p.bit_errors,
            p.ber(),
            p.stop,
            p.elapsed_ms
        );
    }
}

fn run(cli: Cli) -> std::result::Result<(), Failure> {
    match cli.command {
        Command::Sweep(args) => {
            let cfg = args.resolve()?;
            args.side_outputs(&cfg)?;
            let points = simharness::run_sweep(&cfg, args.execution())?;
            log_points(cli.verbose, &points);
            write_points(&points, args.out.as_deref())?;
        }
        Command::Iterate { sweep, iters_list } => {
            let cfg = sweep.resolve()?;
            if iters_list.contains(&0) {
                return Err(Failure::Usage("iteration counts must be positive".into()));
            }
            sweep.side_outputs(&cfg)?;
            let curves = simharness::iteration_sweep(&cfg, &iters_list, sweep.execution()).map_err(|e| match e {
                Error::Config(m) => Failure::Usage(m),
                e => e.into(),
            })?;
            let points: Vec<SweepPoint> = curves.into_iter().flatten().collect();
            log_points(cli.verbose, &points);
            write_points(&points, sweep.out.as_deref())?;
        }
        Command::Verify { suite, trials, seed } => {
            let suites: Vec<Suite> = if suite == "all" {
                Suite::ALL.to_vec()
            } else {
                vec![suite.parse().map_err(|e: Error| Failure::Usage(e.to_string()))?]
            };
            let mut failed = 0;
            for s in suites {
                let report = s.run(trials, seed)?;
                println!("{report}");
                failed += usize::from(!report.ok());
            }
            if failed > 0 {
                return Err(Failure::Runtime(format!("{failed} suite(s) failed")));
            }
        }
        Command::Opcount {
            detector,
            tx,
            modulation,
            iters,
        } => {
            let iters = iters.unwrap_or(detector.default_iters());
            let c = simharness::op_count(detector, tx, modulation.bits_per_symbol(), iters)?;
            println!(
                "{detector} M={tx} m={} iters={iters}: pre {} post {} total {}",
                modulation.bits_per_symbol(),
                c.pre,
                c.post,
                c.total
            );
        }
        Command::DumpConstellation { modulation, out } => {
            let c = Constellation::new(modulation);
            match out {
                Some(p) => {
                    let mut w = BufWriter::new(File::create(p)?);
                    c.write_csv(&mut w)?;
                    w.flush()?;
                }
                None => c.write_csv(io::stdout().lock())?,
            }
        }
    }
    Ok(())
}

/// Parses `argv` (program name first), runs the command and returns the exit status.
pub fn parse_and_run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            2
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            1
        }
    }
}
