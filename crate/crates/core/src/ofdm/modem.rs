//! Slot assembly, DCO-OFDM modulation, channel application and detection.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::grid::{ModemConfig, PilotPattern, ResourceGrid};
use super::qam::{demap_qam64, map_qam64};
use crate::channel::ChannelRealization;
use crate::dsp::{fft_in_place, ifft_in_place, C64};
use crate::error::{Error, Result};

/// Relative tolerance on grid Hermitian symmetry accepted by [`modulate`].
pub const HERMITIAN_TOL: f64 = 1e-12;

pub fn random_bits<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<u8> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let word: u64 = rng.random();
        out.extend((0..64).map(|i| ((word >> i) & 1) as u8).take(n - out.len()));
    }
    out
}

/// Places pilots and 64-QAM data in the first half, mirrors the second half.
pub fn assemble_slot(data_bits: &[u8], pattern: &PilotPattern, cfg: &ModemConfig) -> Result<ResourceGrid> {
    cfg.validate()?;
    pattern.validate(cfg)?;
    if data_bits.len() != cfg.bits_per_slot() {
        return Err(Error::Length {
            what: "slot data bits",
            expected: cfg.bits_per_slot(),
            actual: data_bits.len(),
        });
    }
    let symbols = map_qam64(data_bits)?;
    let mut grid = ResourceGrid::zeros(cfg.n_f, cfg.n_s);
    let tones = cfg.data_tones();
    for (chunk, s) in symbols.chunks_exact(tones.len()).zip(cfg.data_symbols()) {
        grid.symbol_mut(s)[tones.clone()].copy_from_slice(chunk);
    }
    for &s in &pattern.symbols {
        for (&k, &v) in pattern.tones.iter().zip(&pattern.values) {
            grid.set(k, s, v);
        }
    }
    grid.mirror();
    Ok(grid)
}

/// Real, non-negative transmit waveform of one slot.
#[derive(Debug, Clone)]
pub struct TxSignal {
    pub samples: Vec<f64>,
    /// DC bias added to every sample before clipping.
    pub bias: f64,
    /// Samples that were still negative after biasing and got clipped to zero.
    pub clipped: usize,
    /// Largest imaginary part of the inverse transforms relative to the slot norm.
    pub imag_ratio: f64,
}

/// Inverse transform per symbol, cyclic prefix, DC bias and zero clipping.
pub fn modulate(grid: &ResourceGrid, cfg: &ModemConfig) -> Result<TxSignal> {
    cfg.validate()?;
    if grid.n_f() != cfg.n_f || grid.n_s() != cfg.n_s {
        return Err(Error::Shape(format!(
            "grid is {}x{}, modem expects {}x{}",
            grid.n_f(),
            grid.n_s(),
            cfg.n_f,
            cfg.n_s
        )));
    }
    grid.check_hermitian(HERMITIAN_TOL)?;

    let (n_f, l_cp) = (cfg.n_f, cfg.l_cp);
    let mut bodies = Vec::with_capacity(cfg.n_s * n_f);
    let mut max_imag = 0f64;
    let mut buf = vec![C64::new(0.0, 0.0); n_f];
    for s in 0..cfg.n_s {
        buf.copy_from_slice(grid.symbol(s));
        ifft_in_place(&mut buf);
        for v in &buf {
            max_imag = max_imag.max(v.im.abs());
            bodies.push(v.re);
        }
    }
    let norm = bodies.iter().map(|x| x * x).sum::<f64>().sqrt();
    let ac_std = (bodies.iter().map(|x| x * x).sum::<f64>() / bodies.len() as f64).sqrt();
    let bias = cfg.bias_sigma * ac_std;

    let mut samples = Vec::with_capacity(cfg.samples_per_slot());
    let mut clipped = 0;
    for body in bodies.chunks_exact(n_f) {
        for &x in body[n_f - l_cp..].iter().chain(body) {
            let v = x + bias;
            if v < 0.0 {
                clipped += 1;
                samples.push(0.0);
            } else {
                samples.push(v);
            }
        }
    }
    Ok(TxSignal {
        samples,
        bias,
        clipped,
        imag_ratio: if norm > 0.0 { max_imag / norm } else { 0.0 },
    })
}

/// Passes a slot waveform through `ch` and adds white Gaussian noise.
///
/// The channel is constant over the slot and its memory stays inside the
/// cyclic prefix, so each symbol window sees the circular convolution of its
/// body with the length-`n_f` sampled response. For integer delays up to
/// `l_cp` this is the same as linear convolution with the causal taps.
pub fn apply_channel<R: Rng + ?Sized>(
    signal: &[f64],
    ch: &ChannelRealization,
    cfg: &ModemConfig,
    noise_std: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    apply_response(signal, &ch.frequency_response(cfg.n_f)?, cfg, noise_std, rng)
}

/// [`apply_channel`] with a precomputed frequency response.
pub fn apply_response<R: Rng + ?Sized>(
    signal: &[f64],
    response: &[C64],
    cfg: &ModemConfig,
    noise_std: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let (n_f, l_cp) = (cfg.n_f, cfg.l_cp);
    if signal.len() != cfg.samples_per_slot() {
        return Err(Error::Length {
            what: "slot waveform",
            expected: cfg.samples_per_slot(),
            actual: signal.len(),
        });
    }
    if response.len() != n_f {
        return Err(Error::Length {
            what: "channel response",
            expected: n_f,
            actual: response.len(),
        });
    }
    let mut out = Vec::with_capacity(signal.len());
    let mut buf = vec![C64::new(0.0, 0.0); n_f];
    for sym in signal.chunks_exact(n_f + l_cp) {
        for (b, &x) in buf.iter_mut().zip(&sym[l_cp..]) {
            *b = C64::new(x, 0.0);
        }
        fft_in_place(&mut buf);
        for (b, h) in buf.iter_mut().zip(response) {
            *b *= h;
        }
        ifft_in_place(&mut buf);
        out.extend(buf[n_f - l_cp..].iter().chain(&buf).map(|v| v.re));
    }
    if noise_std > 0.0 {
        for v in &mut out {
            let w: f64 = StandardNormal.sample(rng);
            *v += noise_std * w;
        }
    }
    Ok(out)
}

/// Time-domain noise standard deviation that yields `snr_db` per used
/// subcarrier after the forward transform.
///
/// The forward transform is unnormalized, so real white noise of variance
/// `s^2` becomes `n_f s^2` per bin.
pub fn noise_std_for_snr(grid: &ResourceGrid, response: &[C64], snr_db: f64) -> Result<f64> {
    if !snr_db.is_finite() {
        return Err(Error::Domain {
            name: "snr_db",
            value: snr_db,
            expected: "a finite value",
        });
    }
    if response.len() != grid.n_f() {
        return Err(Error::Length {
            what: "channel response",
            expected: grid.n_f(),
            actual: response.len(),
        });
    }
    let mut power = 0.0;
    let mut used = 0usize;
    for s in 0..grid.n_s() {
        for (x, h) in grid.symbol(s).iter().zip(response) {
            if x.norm_sqr() > 0.0 {
                power += (x * h).norm_sqr();
                used += 1;
            }
        }
    }
    if used == 0 || power == 0.0 {
        return Err(Error::ZeroEnergy("received signal"));
    }
    let per_tone = power / used as f64;
    Ok((per_tone / (grid.n_f() as f64 * 10f64.powf(snr_db / 10.0))).sqrt())
}

/// Drops cyclic prefixes, transforms each symbol and removes the known bias.
///
/// A constant only reaches bin 0, so the bias comes off there after the
/// transform. Subtracting it sample by sample would cancel a large constant
/// against a received signal that can be a million times smaller.
pub fn demodulate(signal: &[f64], bias: f64, cfg: &ModemConfig) -> Result<ResourceGrid> {
    let (n_f, l_cp) = (cfg.n_f, cfg.l_cp);
    if signal.len() != cfg.samples_per_slot() {
        return Err(Error::Length {
            what: "slot waveform",
            expected: cfg.samples_per_slot(),
            actual: signal.len(),
        });
    }
    let mut grid = ResourceGrid::zeros(n_f, cfg.n_s);
    for (s, sym) in signal.chunks_exact(n_f + l_cp).enumerate() {
        let col = grid.symbol_mut(s);
        for (c, &x) in col.iter_mut().zip(&sym[l_cp..]) {
            *c = C64::new(x, 0.0);
        }
        fft_in_place(col);
        col[0] -= bias * n_f as f64;
    }
    Ok(grid)
}

/// One-tap equalization of the data tones followed by hard 64-QAM decisions.
pub fn equalize_and_decode(grid: &ResourceGrid, h_est: &[C64], cfg: &ModemConfig) -> Result<Vec<u8>> {
    if h_est.len() != cfg.n_f {
        return Err(Error::Length {
            what: "channel estimate",
            expected: cfg.n_f,
            actual: h_est.len(),
        });
    }
    let tones = cfg.data_tones();
    if let Some(k) = tones.clone().find(|&k| h_est[k].norm_sqr() == 0.0) {
        return Err(Error::ZeroDivisor {
            what: "channel estimate on a data tone",
            index: k,
        });
    }
    let mut eq = Vec::with_capacity(cfg.data_symbols().len() * tones.len());
    for s in cfg.data_symbols() {
        let col = grid.symbol(s);
        eq.extend(tones.clone().map(|k| col[k] / h_est[k]));
    }
    Ok(demap_qam64(&eq))
}
