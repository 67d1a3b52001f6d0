//! I.i.d. Rayleigh MIMO channels, AWGN and reproducible frames.
//!
//! Every frame draws its own channel matrix. Randomness comes from ChaCha8
//! keyed by a seed and a stream number (the frame index), so any frame can be
//! regenerated on its own and parallel runs reproduce serial runs exactly.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::modem::Constellation;
use crate::numerics::ComplexMatrix;
use crate::{Error, Result};

/// Channel matrix `H` (N x M) together with the noise variance.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelRealization {
    h: ComplexMatrix,
    columns: Vec<Vec<Complex64>>,
    sigma2: f64,
}

impl ChannelRealization {
    pub fn new(h: ComplexMatrix, sigma2: f64) -> Result<Self> {
        if h.rows() < h.cols() {
            return Err(Error::AntennaCount {
                rx: h.rows(),
                tx: h.cols(),
            });
        }
        if !(sigma2.is_finite() && sigma2 > 0.0) {
            return Err(Error::NoiseVariance(sigma2));
        }
        let columns = (0..h.cols()).map(|c| h.column(c)).collect();
        Ok(Self { h, columns, sigma2 })
    }

    pub fn h(&self) -> &ComplexMatrix {
        &self.h
    }

    /// Column `h_k`.
    pub fn column(&self, k: usize) -> &[Complex64] {
        &self.columns[k]
    }

    pub fn columns(&self) -> &[Vec<Complex64>] {
        &self.columns
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn with_sigma2(&self, sigma2: f64) -> Result<Self> {
        Self::new(self.h.clone(), sigma2)
    }

    /// Receive antennas `N`.
    pub fn rx(&self) -> usize {
        self.h.rows()
    }

    /// Transmit antennas `M`.
    pub fn tx(&self) -> usize {
        self.h.cols()
    }
}

/// One `CN(0, var)` sample.
pub fn complex_normal(rng: &mut impl Rng, var: f64) -> Complex64 {
    let s = (0.5 * var).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * s, im * s)
}

/// Draws an `rx x tx` matrix with i.i.d. `CN(0, 1)` entries.
pub fn draw_channel(rx: usize, tx: usize, sigma2: f64, rng: &mut impl Rng) -> Result<ChannelRealization> {
    if tx == 0 || rx < tx {
        return Err(Error::AntennaCount { rx, tx });
    }
    let h = ComplexMatrix::from_fn(rx, tx, |_, _| complex_normal(rng, 1.0));
    ChannelRealization::new(h, sigma2)
}

/// `y = H x + n`, `n ~ CN(0, sigma2 I)`.
pub fn transmit(x: &[Complex64], ch: &ChannelRealization, rng: &mut impl Rng) -> Result<Vec<Complex64>> {
    let mut y = ch.h().mul_vec(x)?;
    for v in &mut y {
        *v += complex_normal(rng, ch.sigma2());
    }
    Ok(y)
}

/// Seed record sufficient to regenerate a frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FrameKey {
    pub seed: u64,
    pub stream: u64,
}

impl FrameKey {
    pub fn rng(self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// One channel use: random bits, their symbols, a fresh channel and the received vector.
#[derive(Clone, Debug)]
pub struct Frame {
    pub key: FrameKey,
    pub tx_bits: Vec<u8>,
    pub tx_labels: Vec<usize>,
    pub tx_symbols: Vec<Complex64>,
    pub y: Vec<Complex64>,
    pub channel: ChannelRealization,
}

impl Frame {
    /// Generates the frame for `key`: bits, then `H`, then noise, all from the key's stream.
    pub fn generate(key: FrameKey, rx: usize, tx: usize, sigma2: f64, constellation: &Constellation) -> Result<Self> {
        let mut rng = key.rng();
        let tx_bits: Vec<u8> = (0..tx * constellation.bits_per_symbol())
            .map(|_| rng.random_range(0..2u8))
            .collect();
        let tx_labels = constellation.map_labels(&tx_bits)?;
        let tx_symbols: Vec<Complex64> = tx_labels.iter().map(|&l| constellation.point(l)).collect();
        let channel = draw_channel(rx, tx, sigma2, &mut rng)?;
        let y = transmit(&tx_symbols, &channel, &mut rng)?;
        Ok(Self {
            key,
            tx_bits,
            tx_labels,
            tx_symbols,
            y,
            channel,
        })
    }

    pub fn record(&self) -> FrameRecord {
        let h = self.channel.h();
        FrameRecord {
            seed: self.key.seed,
            stream: self.key.stream,
            rx: h.rows(),
            tx: h.cols(),
            sigma2: self.channel.sigma2(),
            h: (0..h.rows())
                .map(|r| (0..h.cols()).map(|c| [h[(r, c)].re, h[(r, c)].im]).collect())
                .collect(),
            bits: self.tx_bits.clone(),
            y: self.y.iter().map(|v| [v.re, v.im]).collect(),
        }
    }
}

/// Line-delimited JSON record of a frame, for cross-implementation regression.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub seed: u64,
    pub stream: u64,
    pub rx: usize,
    pub tx: usize,
    pub sigma2: f64,
    /// Rows of `H`, each entry `[re, im]`.
    pub h: Vec<Vec<[f64; 2]>>,
    pub bits: Vec<u8>,
    pub y: Vec<[f64; 2]>,
}

impl FrameRecord {
    pub fn channel(&self) -> Result<ChannelRealization> {
        let data = self
            .h
            .iter()
            .flat_map(|row| row.iter().map(|e| Complex64::new(e[0], e[1])))
            .collect();
        ChannelRealization::new(ComplexMatrix::from_row_major(self.rx, self.tx, data)?, self.sigma2)
    }
}
