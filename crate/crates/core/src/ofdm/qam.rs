//! Gray-mapped square 64-QAM with unit average energy.
//!
//! Each axis carries three bits. The 3-bit Gray word `g` selects level
//! `L = gray^-1(g)` with amplitude `7 - 2L`, so `000` is `+7` and `100` is `-7`.
//! The first three bits drive the in-phase axis, the last three quadrature.

use crate::dsp::C64;
use crate::error::{Error, Result};

pub const BITS_PER_SYMBOL: usize = 6;

/// `1 / sqrt(42)`: average energy of the raw `{+-1, +-3, +-5, +-7}^2` grid is 42.
pub const SCALE: f64 = 0.154_303_349_962_091_9;

fn gray(l: u8) -> u8 {
    l ^ (l >> 1)
}

fn gray_inverse(g: u8) -> u8 {
    let mut l = g;
    let mut shift = g >> 1;
    while shift != 0 {
        l ^= shift;
        shift >>= 1;
    }
    l
}

fn axis_amplitude(b: &[u8]) -> f64 {
    let g = (b[0] << 2) | (b[1] << 1) | b[2];
    7.0 - 2.0 * gray_inverse(g) as f64
}

fn axis_bits(x: f64, out: &mut Vec<u8>) {
    let t = (7.0 - x / SCALE) / 2.0;
    let lower = t.floor();
    let level = if t - lower == 0.5 {
        // exact boundary: prefer the neighbour with the smaller Gray word
        let a = lower.clamp(0.0, 7.0) as u8;
        let b = (lower + 1.0).clamp(0.0, 7.0) as u8;
        if gray(a) <= gray(b) {
            a
        } else {
            b
        }
    } else {
        t.round().clamp(0.0, 7.0) as u8
    };
    let g = gray(level);
    out.extend_from_slice(&[(g >> 2) & 1, (g >> 1) & 1, g & 1]);
}

/// Maps bits (one per byte, 0 or 1) onto constellation points.
pub fn map_qam64(bits: &[u8]) -> Result<Vec<C64>> {
    if bits.len() % BITS_PER_SYMBOL != 0 {
        return Err(Error::Length {
            what: "64-QAM bit stream (multiple of 6)",
            expected: bits.len().next_multiple_of(BITS_PER_SYMBOL),
            actual: bits.len(),
        });
    }
    Ok(bits
        .chunks_exact(BITS_PER_SYMBOL)
        .map(|b| C64::new(axis_amplitude(&b[..3]), axis_amplitude(&b[3..])) * SCALE)
        .collect())
}

/// Hard-decision nearest-point demapping.
pub fn demap_qam64(symbols: &[C64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(symbols.len() * BITS_PER_SYMBOL);
    for s in symbols {
        axis_bits(s.re, &mut out);
        axis_bits(s.im, &mut out);
    }
    out
}

/// All 64 points indexed by their 6-bit word (MSB first).
pub fn constellation() -> Vec<C64> {
    let bits: Vec<u8> = (0u8..64)
        .flat_map(|w| (0..6).rev().map(move |i| (w >> i) & 1))
        .collect();
    map_qam64(&bits).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn word_bits(w: u8) -> Vec<u8> {
        (0..6).rev().map(|i| (w >> i) & 1).collect()
    }

    #[test]
    fn scale_constant() {
        assert!((SCALE - 1.0 / 42f64.sqrt()).abs() < 1e-16);
    }

    #[test]
    fn zero_word_is_positive_corner() {
        let s = map_qam64(&[0; 6]).unwrap()[0];
        assert!((s - C64::new(7.0, 7.0) / 42f64.sqrt()).norm() < 1e-15);
    }

    #[test]
    fn unit_average_energy() {
        let pts = constellation();
        let e: f64 = pts.iter().map(|p| p.norm_sqr()).sum::<f64>() / 64.0;
        assert!((e - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exhaustive_bijection() {
        let pts = constellation();
        for (w, p) in pts.iter().enumerate() {
            assert_eq!(demap_qam64(&[*p]), word_bits(w as u8));
        }
        for i in 0..64 {
            for j in 0..i {
                assert!((pts[i] - pts[j]).norm() > 1e-9);
            }
        }
    }

    #[test]
    fn neighbours_differ_in_one_bit() {
        let pts = constellation();
        let d_min = 2.0 * SCALE;
        for i in 0..64usize {
            for j in 0..64usize {
                if ((pts[i] - pts[j]).norm() - d_min).abs() < 1e-9 {
                    assert_eq!((i ^ j).count_ones(), 1);
                }
            }
        }
    }

    #[test]
    fn small_noise_keeps_decisions() {
        let pts = constellation();
        let r = 0.49 * SCALE;
        for (w, p) in pts.iter().enumerate() {
            for ang in 0..8 {
                let n = C64::from_polar(r, ang as f64 * std::f64::consts::FRAC_PI_4);
                assert_eq!(demap_qam64(&[p + n]), word_bits(w as u8));
            }
        }
    }

    #[test]
    fn boundary_tie_goes_to_lower_gray_word() {
        // x = 0 lies between +1 (level 3, Gray 010) and -1 (level 4, Gray 110)
        assert_eq!(&demap_qam64(&[C64::new(0.0, 0.0)])[..3], &[0, 1, 0]);
        // between +7 (Gray 000) and +5 (Gray 001)
        assert_eq!(&demap_qam64(&[C64::new(6.0 * SCALE, 0.0)])[..3], &[0, 0, 0]);
        // between -5 (level 6, Gray 101) and -7 (level 7, Gray 100)
        let bits = demap_qam64(&[C64::new(-6.0 * SCALE, 0.0)]);
        assert_eq!(&bits[..3], &[1, 0, 0]);
    }

    #[test]
    fn far_points_clamp_to_corners() {
        assert_eq!(demap_qam64(&[C64::new(100.0, -100.0)]), [0, 0, 0, 1, 0, 0]);
    }

    #[test]
    fn length_must_be_multiple_of_six() {
        assert!(map_qam64(&[0; 7]).is_err());
    }
}
