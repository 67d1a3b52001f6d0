//! Constellations, bit mapping and bit LLR extraction.
//!
//! Points are stored in label order: `points()[label]` is the symbol carrying
//! `label`, with the first transmitted bit in the most significant position.
//!
//! Labelling tables (first bit listed first):
//!
//! | modulation | mapping |
//! |---|---|
//! | BPSK | `0 -> +1`, `1 -> -1` |
//! | QPSK | `b0 b1 -> ((1 - 2 b0) + i (1 - 2 b1)) / sqrt(2)` |
//! | 4-PAM | `00 -> +3`, `01 -> +1`, `11 -> -1`, `10 -> -3`, scaled by `1/sqrt(5)` |
//! | 16-QAM | bits 0-1 pick the in-phase 4-PAM level, bits 2-3 the quadrature level, scaled by `1/sqrt(10)` |
//! | 32-QAM cross | 6x6 grid without corners, row-major from the top-left, label = Gray code of the row-major index, scaled by `1/sqrt(20)` |
//!
//! The 32-point cross constellation is not Gray labelled; adjacent points in
//! the row-major scan differ in one bit.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::numerics::{log_add, normalize_log};
use crate::{Error, Result};

/// LLR magnitude limit.
pub const LLR_CLAMP: f64 = 50.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Modulation {
    #[serde(rename = "bpsk")]
    Bpsk,
    #[serde(rename = "qpsk")]
    Qpsk,
    #[serde(rename = "4pam")]
    Pam4,
    #[serde(rename = "16qam")]
    Qam16,
    #[serde(rename = "32qam")]
    Qam32Cross,
}

impl Modulation {
    pub const ALL: [Modulation; 5] = [
        Modulation::Bpsk,
        Modulation::Qpsk,
        Modulation::Pam4,
        Modulation::Qam16,
        Modulation::Qam32Cross,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Modulation::Bpsk => "bpsk",
            Modulation::Qpsk => "qpsk",
            Modulation::Pam4 => "4pam",
            Modulation::Qam16 => "16qam",
            Modulation::Qam32Cross => "32qam",
        }
    }

    pub fn bits_per_symbol(self) -> usize {
        match self {
            Modulation::Bpsk => 1,
            Modulation::Qpsk | Modulation::Pam4 => 2,
            Modulation::Qam16 => 4,
            Modulation::Qam32Cross => 5,
        }
    }
}

impl fmt::Display for Modulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Modulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Modulation::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Unknown {
                kind: "modulation",
                name: s.to_string(),
            })
    }
}

/// Gray-labelled 4-level amplitude for a 2-bit word (unnormalised).
fn pam4_level(bits: u32) -> f64 {
    match bits & 0b11 {
        0b00 => 3.0,
        0b01 => 1.0,
        0b11 => -1.0,
        _ => -3.0,
    }
}

/// Symbol alphabet with its bit labelling.
#[derive(Clone, Debug, PartialEq)]
pub struct Constellation {
    modulation: Modulation,
    bits_per_symbol: usize,
    points: Vec<Complex64>,
}

impl Constellation {
    pub fn new(modulation: Modulation) -> Self {
        let points: Vec<Complex64> = match modulation {
            Modulation::Bpsk => vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)],
            Modulation::Qpsk => {
                let a = std::f64::consts::FRAC_1_SQRT_2;
                (0..4u32)
                    .map(|l| {
                        let sign = |b: u32| if b == 0 { a } else { -a };
                        Complex64::new(sign(l >> 1), sign(l & 1))
                    })
                    .collect()
            }
            Modulation::Pam4 => {
                let s = 5f64.sqrt().recip();
                (0..4u32).map(|l| Complex64::new(pam4_level(l) * s, 0.0)).collect()
            }
            Modulation::Qam16 => {
                let s = 10f64.sqrt().recip();
                (0..16u32)
                    .map(|l| Complex64::new(pam4_level(l >> 2) * s, pam4_level(l) * s))
                    .collect()
            }
            Modulation::Qam32Cross => {
                let s = 20f64.sqrt().recip();
                let levels = [-5.0, -3.0, -1.0, 1.0, 3.0, 5.0];
                let mut grid = Vec::with_capacity(32);
                for q in levels.iter().rev() {
                    for i in levels.iter() {
                        if f64::abs(*i) == 5.0 && f64::abs(*q) == 5.0 {
                            continue;
                        }
                        grid.push(Complex64::new(i * s, q * s));
                    }
                }
                let mut points = vec![Complex64::new(0.0, 0.0); 32];
                for (idx, p) in grid.into_iter().enumerate() {
                    let idx = idx as u32;
                    points[(idx ^ (idx >> 1)) as usize] = p;
                }
                points
            }
        };
        Self {
            modulation,
            bits_per_symbol: modulation.bits_per_symbol(),
            points,
        }
    }

    pub fn modulation(&self) -> Modulation {
        self.modulation
    }

    /// Bits per symbol `m`.
    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    /// Alphabet size `2^m`.
    pub fn size(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn point(&self, label: usize) -> Complex64 {
        self.points[label]
    }

    /// Bit `k` (0 = first transmitted) of `label`.
    pub fn bit(&self, label: usize, k: usize) -> u8 {
        ((label >> (self.bits_per_symbol - 1 - k)) & 1) as u8
    }

    pub fn label_bits(&self, label: usize) -> Vec<u8> {
        (0..self.bits_per_symbol).map(|k| self.bit(label, k)).collect()
    }

    pub fn label_of(&self, bits: &[u8]) -> usize {
        bits.iter().fold(0, |acc, &b| (acc << 1) | usize::from(b & 1))
    }

    pub fn mean_power(&self) -> f64 {
        self.points.iter().map(Complex64::norm_sqr).sum::<f64>() / self.size() as f64
    }

    /// Maps a bit word onto one symbol label per antenna.
    pub fn map_labels(&self, bits: &[u8]) -> Result<Vec<usize>> {
        if !bits.len().is_multiple_of(self.bits_per_symbol) {
            return Err(Error::BitLength {
                len: bits.len(),
                bits_per_symbol: self.bits_per_symbol,
            });
        }
        Ok(bits
            .chunks_exact(self.bits_per_symbol)
            .map(|g| self.label_of(g))
            .collect())
    }

    /// Maps a bit word onto symbols, `m` bits per symbol.
    pub fn map_bits(&self, bits: &[u8]) -> Result<Vec<Complex64>> {
        Ok(self.map_labels(bits)?.into_iter().map(|l| self.points[l]).collect())
    }

    /// Per-bit LLRs `log P(b=0) - log P(b=1)` clamped to `+-LLR_CLAMP`.
    pub fn bit_llrs(&self, posterior: &SymbolPosterior) -> Vec<f64> {
        debug_assert_eq!(posterior.log_probs.len(), self.size());
        (0..self.bits_per_symbol)
            .map(|k| {
                let (mut zero, mut one) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
                for (label, &lp) in posterior.log_probs.iter().enumerate() {
                    if self.bit(label, k) == 0 {
                        zero = log_add(zero, lp);
                    } else {
                        one = log_add(one, lp);
                    }
                }
                let llr = zero - one;
                if llr.is_nan() {
                    0.0
                } else {
                    llr.clamp(-LLR_CLAMP, LLR_CLAMP)
                }
            })
            .collect()
    }

    /// `label,bits,re,im` rows for auditing the labelling.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["label", "bits", "re", "im"])?;
        for (label, p) in self.points.iter().enumerate() {
            let bits: String = self.label_bits(label).iter().map(|b| char::from(b'0' + b)).collect();
            w.write_record([
                label.to_string(),
                bits,
                format!("{:.17}", p.re),
                format!("{:.17}", p.im),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Normalised log-probability table over the alphabet, indexed by label.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolPosterior {
    pub log_probs: Vec<f64>,
}

impl SymbolPosterior {
    pub fn from_log_weights(mut log_weights: Vec<f64>) -> Self {
        normalize_log(&mut log_weights);
        Self { log_probs: log_weights }
    }

    pub fn uniform(size: usize) -> Self {
        Self {
            log_probs: vec![-(size as f64).ln(); size],
        }
    }

    /// Most probable label.
    pub fn argmax(&self) -> usize {
        self.log_probs
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0)
    }

    pub fn probs(&self) -> Vec<f64> {
        self.log_probs.iter().map(|v| v.exp()).collect()
    }

    pub fn total_variation(&self, other: &SymbolPosterior) -> f64 {
        0.5 * self
            .probs()
            .iter()
            .zip(other.probs())
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    }
}
