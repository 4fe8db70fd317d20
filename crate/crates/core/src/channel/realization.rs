use std::f64::consts::PI;

use rand::Rng;

use super::geometry::{draw_receiver, los_gain, specular_path, ScenarioConfig, Wall};
use crate::dsp::{ifft, C64};
use crate::error::{Error, Result};
use crate::rng::{domain, substream};

/// Receiver draws allowed before giving up on finding a lit position.
pub const MAX_POSE_ATTEMPTS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NlosPath {
    pub gain: f64,
    /// Excess delay in samples; may be fractional.
    pub delay: f64,
}

/// Slot-constant two-path (or more) intensity channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub h_los: f64,
    pub nlos: Vec<NlosPath>,
}

impl ChannelRealization {
    pub fn flat(h_los: f64) -> Self {
        Self {
            h_los,
            nlos: Vec::new(),
        }
    }

    pub fn two_path(h_los: f64, h_nlos: f64, delay: f64) -> Self {
        Self {
            h_los,
            nlos: vec![NlosPath { gain: h_nlos, delay }],
        }
    }

    /// Sampled frequency response over `n_f` subcarriers.
    ///
    /// Bins above `n_f/2` are negative frequencies, so the response is
    /// Hermitian and its inverse transform is real for any delay. The
    /// Nyquist bin keeps only the real part. For integer delays this is
    /// `h_los + sum_m h_m e^{-j 2 pi k tau_m / n_f}` on every bin.
    pub fn frequency_response(&self, n_f: usize) -> Result<Vec<C64>> {
        if n_f < 2 || n_f % 2 != 0 {
            return Err(Error::Domain {
                name: "n_f",
                value: n_f as f64,
                expected: "even and >= 2",
            });
        }
        let half = n_f / 2;
        let mut h = vec![C64::new(self.h_los, 0.0); n_f];
        for (k, v) in h.iter_mut().enumerate() {
            let freq = if k <= half { k as f64 } else { k as f64 - n_f as f64 };
            for p in &self.nlos {
                let phase = -2.0 * PI * freq * p.delay / n_f as f64;
                *v += C64::from_polar(p.gain, phase);
            }
        }
        h[half] = C64::new(h[half].re, 0.0);
        Ok(h)
    }

    /// First `n_taps` samples of the inverse transform of the frequency response.
    pub fn impulse_taps(&self, n_f: usize, n_taps: usize) -> Result<Vec<C64>> {
        if n_taps > n_f {
            return Err(Error::Domain {
                name: "n_taps",
                value: n_taps as f64,
                expected: "<= n_f",
            });
        }
        let mut taps = ifft(&self.frequency_response(n_f)?);
        taps.truncate(n_taps);
        Ok(taps)
    }

    pub fn max_delay(&self) -> f64 {
        self.nlos.iter().map(|p| p.delay).fold(0.0, f64::max)
    }
}

/// Draws one channel with the generator stream of `seed`.
pub fn sample_realization(cfg: &ScenarioConfig, seed: u64) -> Result<ChannelRealization> {
    sample_realization_with(cfg, &mut substream(seed, domain::CHANNEL, 0))
}

/// Draws a receiver pose until it sees the transmitter, then keeps the
/// strongest `n_paths - 1` specular reflections.
pub fn sample_realization_with<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> Result<ChannelRealization> {
    cfg.validate()?;
    let tx = cfg.tx_pose();
    for _ in 0..MAX_POSE_ATTEMPTS {
        let rx = draw_receiver(cfg, rng);
        let h_los = los_gain(tx, rx, cfg)?;
        if h_los <= 0.0 {
            continue;
        }
        let mut paths = Vec::with_capacity(Wall::ALL.len());
        for wall in Wall::ALL {
            let p = specular_path(tx, rx, wall, cfg)?;
            if p.gain > 0.0 {
                paths.push(NlosPath {
                    gain: p.gain,
                    delay: p.delay * cfg.sample_rate,
                });
            }
        }
        paths.sort_by(|a, b| b.gain.total_cmp(&a.gain));
        paths.truncate(cfg.n_paths - 1);
        return Ok(ChannelRealization { h_los, nlos: paths });
    }
    Err(Error::RejectionCap {
        what: "a receiver pose with nonzero LOS gain".into(),
        attempts: MAX_POSE_ATTEMPTS,
        accepted: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::energy;

    /// Direct O(N^2) inverse DFT, independent of the FFT path.
    fn brute_idft(h: &[C64]) -> Vec<C64> {
        let n = h.len();
        (0..n)
            .map(|t| {
                h.iter()
                    .enumerate()
                    .map(|(k, &v)| v * C64::from_polar(1.0, 2.0 * PI * (k * t) as f64 / n as f64))
                    .sum::<C64>()
                    / n as f64
            })
            .collect()
    }

    #[test]
    fn flat_channel_response() {
        let ch = ChannelRealization::flat(3e-6);
        assert!(ch
            .frequency_response(324)
            .unwrap()
            .iter()
            .all(|&v| v == C64::new(3e-6, 0.0)));
        let taps = ch.impulse_taps(324, 8).unwrap();
        assert!((taps[0].re - 3e-6).abs() < 1e-20);
        assert!(taps[1..].iter().all(|t| t.norm() < 1e-20));
    }

    #[test]
    fn integer_delay_response_and_taps() {
        let ch = ChannelRealization::two_path(1.0, 0.2, 2.0);
        let h = ch.frequency_response(324).unwrap();
        for (k, v) in h.iter().enumerate() {
            let expected = 1.0 + 0.2 * C64::from_polar(1.0, -4.0 * PI * k as f64 / 324.0);
            assert!((v - expected).norm() < 1e-12, "k={k}");
            assert!(v.norm() <= 1.2 + 1e-12 && v.norm() >= 0.8 - 1e-12);
        }
        assert!((h[0].re - 1.2).abs() < 1e-15);

        let ch = ChannelRealization::two_path(1.0, 0.3, 3.0);
        let taps = ch.impulse_taps(324, 324).unwrap();
        assert!((taps[0].re - 1.0).abs() < 1e-12);
        assert!((taps[3].re - 0.3).abs() < 1e-12);
        for (n, t) in taps.iter().enumerate().filter(|(n, _)| *n != 0 && *n != 3) {
            assert!(t.norm() < 1e-12, "tap {n} = {t}");
        }
    }

    #[test]
    fn fractional_delay_leaks_and_keeps_parseval() {
        let ch = ChannelRealization::two_path(1.0, 0.3, 2.5);
        let h = ch.frequency_response(324).unwrap();
        let taps = ch.impulse_taps(324, 324).unwrap();
        let brute = brute_idft(&h);
        for (a, b) in taps.iter().zip(&brute) {
            assert!((a - b).norm() < 1e-12);
        }
        assert!(taps[2].norm() > 0.1 && taps[3].norm() > 0.1);
        assert!(taps.iter().all(|t| t.im.abs() < 1e-12));
        let time = energy(&taps);
        let freq = energy(&h) / 324.0;
        assert!((time - freq).abs() < 1e-9 * freq);
    }

    #[test]
    fn realizations_are_deterministic_and_bounded() {
        let cfg = ScenarioConfig::default();
        let a = sample_realization(&cfg, 11).unwrap();
        let b = sample_realization(&cfg, 11).unwrap();
        assert_eq!(a, b);
        assert!(a.nlos.len() <= 1);

        let one = ScenarioConfig {
            n_paths: 1,
            ..cfg.clone()
        };
        assert!(sample_realization(&one, 11).unwrap().nlos.is_empty());
    }

    #[test]
    fn invalid_sizes_rejected() {
        let ch = ChannelRealization::flat(1.0);
        assert!(ch.frequency_response(7).is_err());
        assert!(ch.impulse_taps(8, 9).is_err());
    }
}
