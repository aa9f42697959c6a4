//! Single-carrier zero-padded block transmission.
//!
//! ```text
//! bits → Gray M-QAM → blocks of N_b → H (P × N_b Toeplitz) + AWGN → ZF → min-distance → bits
//! ```
//!
//! Every transmit block of `N_b` symbols is followed by `L_c` guard zeros, so the
//! observed block has `P = N_b + L_c` samples and the tall Toeplitz channel
//! matrix has full column rank whenever at least one tap is nonzero. The
//! zero-forcing equalizer therefore recovers the block exactly when the link is
//! noiseless.
//!
//! Noise is parameterized by the per-symbol SNR at the receiver. Constellations
//! are normalized to unit average energy, so `N0 = 10^(-snr/10)` and each real
//! dimension of the noise carries `N0 / 2`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Taps whose magnitudes all fall below this are treated as a dead channel.
pub const RANK_EPS: f64 = 1e-12;

/// Square M-QAM with per-axis Gray labelling.
///
/// The first half of a symbol's bits selects the in-phase amplitude, the second
/// half the quadrature amplitude. On each axis the level index `j` (ascending
/// amplitude) carries the Gray label `j ^ (j >> 1)`, so for 16-QAM the axis
/// order is `00 → -3, 01 → -1, 11 → +1, 10 → +3`, scaled by `1/√10`.
///
/// The constellation index of a point is the integer formed by its label bits
/// (MSB first). Demodulation ties are broken towards the lowest index.
#[derive(Debug, Clone, PartialEq)]
pub struct Modulation {
    order: usize,
    bits_per_symbol: usize,
    normalization: f64,
    points: Vec<Complex64>,
}

impl Modulation {
    pub fn new(order: usize) -> Result<Self> {
        if order < 4 || !order.is_power_of_two() || !order.trailing_zeros().is_multiple_of(2) {
            return Err(Error::config(
                "modulation_order",
                format!("{order} is not a power of 4 (square QAM)"),
            ));
        }
        let bits_per_symbol = order.trailing_zeros() as usize;
        let axis_bits = bits_per_symbol / 2;
        let levels = 1usize << axis_bits;
        // mean |s|^2 of the unnormalized grid {±1, ±3, ...}^2
        let normalization = (3.0 / (2.0 * (order as f64 - 1.0))).sqrt();

        let mut points = vec![Complex64::new(0.0, 0.0); order];
        for i_level in 0..levels {
            for q_level in 0..levels {
                let label = (gray(i_level) << axis_bits) | gray(q_level);
                points[label] = Complex64::new(
                    axis_amplitude(i_level, levels) * normalization,
                    axis_amplitude(q_level, levels) * normalization,
                );
            }
        }
        Ok(Self {
            order,
            bits_per_symbol,
            normalization,
            points,
        })
    }

    pub fn qam16() -> Self {
        Self::new(16).expect("16 is a power of 4")
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    /// Scale factor applied to the integer grid, `1/√10` for 16-QAM.
    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    /// Constellation points indexed by their bit label.
    pub fn constellation(&self) -> &[Complex64] {
        &self.points
    }

    /// Map a bit label (MSB first) to its point.
    pub fn point(&self, label: usize) -> Complex64 {
        self.points[label]
    }

    /// Label bits of constellation index `label`, MSB first.
    pub fn label_bits(&self, label: usize) -> Vec<bool> {
        (0..self.bits_per_symbol)
            .rev()
            .map(|shift| (label >> shift) & 1 == 1)
            .collect()
    }

    /// Index of the nearest constellation point. Exact ties go to the lowest index.
    pub fn nearest(&self, sample: Complex64) -> usize {
        let mut best = 0;
        let mut best_dist = f64::INFINITY;
        for (idx, p) in self.points.iter().enumerate() {
            let d = (sample - p).norm_sqr();
            if d < best_dist {
                best = idx;
                best_dist = d;
            }
        }
        best
    }
}

fn gray(j: usize) -> usize {
    j ^ (j >> 1)
}

fn axis_amplitude(level: usize, levels: usize) -> f64 {
    (2 * level) as f64 - (levels as f64 - 1.0)
}

/// Map bits to symbols, `bits_per_symbol` bits per symbol.
pub fn modulate(bits: &[bool], modulation: &Modulation) -> Result<Vec<Complex64>> {
    let k = modulation.bits_per_symbol();
    if !bits.len().is_multiple_of(k) {
        return Err(Error::Framing(format!(
            "{} bits is not a multiple of {k} bits per symbol",
            bits.len()
        )));
    }
    Ok(bits
        .chunks_exact(k)
        .map(|chunk| {
            let label = chunk
                .iter()
                .fold(0usize, |acc, &b| (acc << 1) | usize::from(b));
            modulation.point(label)
        })
        .collect())
}

/// Minimum-distance hard decision, one label per symbol.
pub fn demodulate(symbols: &[Complex64], modulation: &Modulation) -> Vec<bool> {
    let mut bits = Vec::with_capacity(symbols.len() * modulation.bits_per_symbol());
    for &s in symbols {
        bits.extend(modulation.label_bits(modulation.nearest(s)));
    }
    bits
}

/// Fraction of positions where `a` and `b` differ.
pub fn ber(a: &[bool], b: &[bool]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Comparison(format!(
            "length mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::Comparison("empty bit sequences".into()));
    }
    let errors = a.iter().zip(b).filter(|(x, y)| x != y).count();
    Ok(errors as f64 / a.len() as f64)
}

/// Per-dimension noise variance for a per-symbol SNR in dB with unit symbol energy.
///
/// An infinite SNR yields a noiseless link.
pub fn noise_variance_for_snr(snr_db: f64) -> f64 {
    if snr_db == f64::INFINITY {
        0.0
    } else {
        0.5 * 10f64.powf(-snr_db / 10.0)
    }
}

/// `P × N_b` Toeplitz convolution matrix with `[H]_{p,n} = h(p - n)`.
pub fn build_toeplitz(
    taps: &[Complex64],
    channel_order: usize,
    block_size: usize,
) -> Result<DMatrix<Complex64>> {
    if taps.len() != channel_order + 1 {
        return Err(Error::config(
            "channel_order",
            format!(
                "{} taps given for channel order {channel_order}",
                taps.len()
            ),
        ));
    }
    let rows = block_size + channel_order;
    Ok(DMatrix::from_fn(rows, block_size, |p, n| {
        p.checked_sub(n)
            .and_then(|lag| taps.get(lag))
            .copied()
            .unwrap_or_default()
    }))
}

/// Frequency-selective block channel with known taps and AWGN.
#[derive(Debug, Clone)]
pub struct ChannelModel {
    taps: Vec<Complex64>,
    block_size: usize,
    noise_variance: f64,
    toeplitz: DMatrix<Complex64>,
    zf: DMatrix<Complex64>,
}

impl ChannelModel {
    pub fn new(
        taps: Vec<Complex64>,
        channel_order: usize,
        block_size: usize,
        noise_variance: f64,
    ) -> Result<Self> {
        if block_size == 0 {
            return Err(Error::config("block_size", "must be at least 1"));
        }
        if !(noise_variance >= 0.0 && noise_variance.is_finite()) {
            return Err(Error::config(
                "snr_db",
                format!("noise variance {noise_variance} is not a finite non-negative value"),
            ));
        }
        let toeplitz = build_toeplitz(&taps, channel_order, block_size)?;
        if taps.iter().all(|h| h.norm() < RANK_EPS) {
            return Err(Error::Channel(
                "all channel taps are numerically zero".into(),
            ));
        }
        let zf = toeplitz
            .clone()
            .svd(true, true)
            .pseudo_inverse(RANK_EPS)
            .map_err(|e| Error::Channel(e.to_string()))?;
        Ok(Self {
            taps,
            block_size,
            noise_variance,
            toeplitz,
            zf,
        })
    }

    /// Unit-energy taps with `h[0] = 1` before normalization and the remaining
    /// taps complex Gaussian, power decaying 6 dB per tap.
    pub fn random_taps<R: Rng + ?Sized>(channel_order: usize, rng: &mut R) -> Vec<Complex64> {
        let mut taps = Vec::with_capacity(channel_order + 1);
        taps.push(Complex64::new(1.0, 0.0));
        for k in 1..=channel_order {
            let sigma = (0.5 * 10f64.powf(-0.6 * k as f64)).sqrt();
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            taps.push(Complex64::new(re * sigma, im * sigma));
        }
        let energy: f64 = taps.iter().map(|h| h.norm_sqr()).sum();
        let scale = energy.sqrt().recip();
        taps.iter_mut().for_each(|h| *h *= scale);
        taps
    }

    pub fn identity(channel_order: usize, block_size: usize, noise_variance: f64) -> Result<Self> {
        let mut taps = vec![Complex64::default(); channel_order + 1];
        taps[0] = Complex64::new(1.0, 0.0);
        Self::new(taps, channel_order, block_size, noise_variance)
    }

    pub fn taps(&self) -> &[Complex64] {
        &self.taps
    }

    pub fn channel_order(&self) -> usize {
        self.taps.len() - 1
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    /// Linear convolution length `P = N_b + L_c`.
    pub fn conv_length(&self) -> usize {
        self.block_size + self.channel_order()
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }

    pub fn toeplitz(&self) -> &DMatrix<Complex64> {
        &self.toeplitz
    }

    pub fn with_noise_variance(&self, noise_variance: f64) -> Result<Self> {
        Self::new(
            self.taps.clone(),
            self.channel_order(),
            self.block_size,
            noise_variance,
        )
    }
}

/// A transmit block `U(i)` (length `N_b`) or an observed block `Z(i)` (length `P`).
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolBlock {
    pub index: usize,
    pub symbols: Vec<Complex64>,
}

/// Group a symbol stream into consecutive transmit blocks of `block_size`.
pub fn into_blocks(symbols: &[Complex64], block_size: usize) -> Result<Vec<SymbolBlock>> {
    if block_size == 0 || !symbols.len().is_multiple_of(block_size) {
        return Err(Error::Framing(format!(
            "{} symbols do not fill whole blocks of {block_size}",
            symbols.len()
        )));
    }
    Ok(symbols
        .chunks_exact(block_size)
        .enumerate()
        .map(|(index, chunk)| SymbolBlock {
            index,
            symbols: chunk.to_vec(),
        })
        .collect())
}

/// `Z(i) = H U(i) + ζ(i)`.
pub fn transmit_block<R: Rng + ?Sized>(
    block: &SymbolBlock,
    channel: &ChannelModel,
    rng: &mut R,
) -> Result<SymbolBlock> {
    if block.symbols.len() != channel.block_size() {
        return Err(Error::Framing(format!(
            "transmit block has {} symbols, expected {}",
            block.symbols.len(),
            channel.block_size()
        )));
    }
    let u = DVector::from_column_slice(&block.symbols);
    let mut z = channel.toeplitz() * u;
    let sigma = channel.noise_variance().sqrt();
    if sigma > 0.0 {
        for sample in z.iter_mut() {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *sample += Complex64::new(re * sigma, im * sigma);
        }
    }
    Ok(SymbolBlock {
        index: block.index,
        symbols: z.as_slice().to_vec(),
    })
}

/// Zero-forcing estimate `pinv(H) Z(i)`.
pub fn equalize(observed: &SymbolBlock, channel: &ChannelModel) -> Result<SymbolBlock> {
    if observed.symbols.len() != channel.conv_length() {
        return Err(Error::Framing(format!(
            "observed block has {} samples, expected {}",
            observed.symbols.len(),
            channel.conv_length()
        )));
    }
    let z = DVector::from_column_slice(&observed.symbols);
    let u = &channel.zf * z;
    Ok(SymbolBlock {
        index: observed.index,
        symbols: u.as_slice().to_vec(),
    })
}

/// Frame, transmit, and equalize a whole symbol stream. Returns the
/// equalized soft symbols in stream order.
pub fn send_through<R: Rng + ?Sized>(
    symbols: &[Complex64],
    channel: &ChannelModel,
    rng: &mut R,
) -> Result<Vec<Complex64>> {
    let mut out = Vec::with_capacity(symbols.len());
    for block in into_blocks(symbols, channel.block_size())? {
        let observed = transmit_block(&block, channel, rng)?;
        out.extend(equalize(&observed, channel)?.symbols);
    }
    Ok(out)
}
