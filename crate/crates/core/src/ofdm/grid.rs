use std::f64::consts::PI;

use crate::dsp::C64;
use crate::error::{Error, Result};

/// Slot layout of the DCO-OFDM modem.
#[derive(Debug, Clone, PartialEq)]
pub struct ModemConfig {
    pub n_f: usize,
    pub n_s: usize,
    pub l_cp: usize,
    /// Pilot tone spacing.
    pub l_s: usize,
    /// 1-based indices of the pilot symbols within the slot.
    pub pilot_symbols: Vec<usize>,
    /// DC bias in units of the slot's AC standard deviation.
    pub bias_sigma: f64,
}

impl Default for ModemConfig {
    fn default() -> Self {
        Self {
            n_f: 324,
            n_s: 14,
            l_cp: 7,
            l_s: 5,
            pilot_symbols: vec![3, 6, 9, 12],
            bias_sigma: 3.0,
        }
    }
}

impl ModemConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_f < 4 || self.n_f % 2 != 0 {
            return Err(Error::Config(format!("n_f = {} must be even and >= 4", self.n_f)));
        }
        if self.l_cp >= self.n_f {
            return Err(Error::Config(format!("l_cp = {} must be below n_f", self.l_cp)));
        }
        if self.l_s == 0 {
            return Err(Error::Config("pilot spacing must be positive".into()));
        }
        if self.pilot_symbols.is_empty() {
            return Err(Error::Config("at least one pilot symbol is required".into()));
        }
        let mut last = 0;
        for &s in &self.pilot_symbols {
            if s == 0 || s > self.n_s || s <= last {
                return Err(Error::Config(format!(
                    "pilot symbol indices {:?} must be strictly increasing within 1..={}",
                    self.pilot_symbols, self.n_s
                )));
            }
            last = s;
        }
        if !(self.bias_sigma >= 0.0 && self.bias_sigma.is_finite()) {
            return Err(Error::Config("bias_sigma must be finite and non-negative".into()));
        }
        Ok(())
    }

    /// Tones carrying data in data symbols: `1..n_f/2`.
    pub fn data_tones(&self) -> std::ops::Range<usize> {
        1..self.n_f / 2
    }

    /// 0-based data symbol indices.
    pub fn data_symbols(&self) -> Vec<usize> {
        (0..self.n_s)
            .filter(|s| !self.pilot_symbols.contains(&(s + 1)))
            .collect()
    }

    pub fn bits_per_slot(&self) -> usize {
        self.data_symbols().len() * self.data_tones().len() * super::qam::BITS_PER_SYMBOL
    }

    pub fn samples_per_slot(&self) -> usize {
        self.n_s * (self.n_f + self.l_cp)
    }
}

/// Pilot positions and values in the first half of the band.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotPattern {
    pub tones: Vec<usize>,
    /// 0-based pilot symbol indices.
    pub symbols: Vec<usize>,
    pub values: Vec<C64>,
}

impl PilotPattern {
    /// Tones `1, 1 + l_s, ...` below `n_f/2`. Pilots have unit modulus like
    /// the average data tone, with quadratic phases `pi m^2 / M` so the pilot
    /// symbols have a flat envelope and stay clear of the clipping floor.
    /// Equal pilots would add up to a peak that the bias cannot cover.
    pub fn from_config(cfg: &ModemConfig) -> Result<Self> {
        cfg.validate()?;
        let tones: Vec<usize> = (1..cfg.n_f / 2).step_by(cfg.l_s).collect();
        let m = tones.len() as f64;
        let values = (0..tones.len())
            .map(|i| C64::from_polar(1.0, PI * (i * i) as f64 / m))
            .collect();
        Ok(Self {
            tones,
            symbols: cfg.pilot_symbols.iter().map(|s| s - 1).collect(),
            values,
        })
    }

    pub fn n_tones(&self) -> usize {
        self.tones.len()
    }

    pub fn n_symbols(&self) -> usize {
        self.symbols.len()
    }

    pub fn validate(&self, cfg: &ModemConfig) -> Result<()> {
        if self.tones.len() != self.values.len() {
            return Err(Error::Length {
                what: "pilot values",
                expected: self.tones.len(),
                actual: self.values.len(),
            });
        }
        if self.tones.len() < 2 {
            return Err(Error::Config("at least two pilot tones are required".into()));
        }
        let ok = self.tones.windows(2).all(|w| w[0] < w[1])
            && self.tones[0] >= 1
            && *self.tones.last().unwrap() < cfg.n_f / 2;
        if !ok {
            return Err(Error::Config(
                "pilot tones must increase strictly within 1..n_f/2".into(),
            ));
        }
        if self.symbols.iter().any(|&s| s >= cfg.n_s) {
            return Err(Error::Config("pilot symbol outside the slot".into()));
        }
        Ok(())
    }
}

/// `n_f x n_s` frequency-domain slot, stored symbol by symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct ResourceGrid {
    n_f: usize,
    n_s: usize,
    data: Vec<C64>,
}

impl ResourceGrid {
    pub fn zeros(n_f: usize, n_s: usize) -> Self {
        Self {
            n_f,
            n_s,
            data: vec![C64::new(0.0, 0.0); n_f * n_s],
        }
    }

    pub fn n_f(&self) -> usize {
        self.n_f
    }

    pub fn n_s(&self) -> usize {
        self.n_s
    }

    pub fn get(&self, tone: usize, symbol: usize) -> C64 {
        self.data[symbol * self.n_f + tone]
    }

    pub fn set(&mut self, tone: usize, symbol: usize, v: C64) {
        self.data[symbol * self.n_f + tone] = v;
    }

    pub fn symbol(&self, s: usize) -> &[C64] {
        &self.data[s * self.n_f..(s + 1) * self.n_f]
    }

    pub fn symbol_mut(&mut self, s: usize) -> &mut [C64] {
        &mut self.data[s * self.n_f..(s + 1) * self.n_f]
    }

    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    /// Fills bins above `n_f/2` with conjugates of the first half.
    pub fn mirror(&mut self) {
        let n = self.n_f;
        for s in 0..self.n_s {
            let col = self.symbol_mut(s);
            for k in 1..n / 2 {
                col[n - k] = col[k].conj();
            }
        }
    }

    /// Largest violation of `X(k) = conj(X(n_f - k))` with zero DC and Nyquist bins.
    pub fn hermitian_error(&self) -> (f64, usize, usize) {
        let n = self.n_f;
        let mut worst = (0.0, 0, 0);
        for s in 0..self.n_s {
            let col = self.symbol(s);
            let mut bump = |err: f64, k: usize| {
                if err > worst.0 {
                    worst = (err, s, k);
                }
            };
            bump(col[0].norm(), 0);
            bump(col[n / 2].norm(), n / 2);
            for k in 1..n / 2 {
                bump((col[k] - col[n - k].conj()).norm(), k);
            }
        }
        worst
    }

    pub fn check_hermitian(&self, rel_tol: f64) -> Result<()> {
        let scale = self.data.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let (err, symbol, tone) = self.hermitian_error();
        if err > rel_tol * scale {
            return Err(Error::NotHermitian {
                symbol,
                tone,
                mismatch: err,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_layout_counts() {
        let cfg = ModemConfig::default();
        let p = PilotPattern::from_config(&cfg).unwrap();
        assert_eq!(p.n_tones(), 33);
        assert_eq!(p.tones[0], 1);
        assert_eq!(*p.tones.last().unwrap(), 161);
        assert_eq!(p.symbols, vec![2, 5, 8, 11]);
        assert_eq!(cfg.data_symbols().len(), 10);
        assert_eq!(cfg.data_tones().len(), 161);
        assert_eq!(cfg.bits_per_slot(), 9660);
        assert_eq!(cfg.samples_per_slot(), 4634);
        p.validate(&cfg).unwrap();
    }

    #[test]
    fn bad_configs_rejected() {
        let bad = [
            ModemConfig {
                n_f: 323,
                ..Default::default()
            },
            ModemConfig {
                l_cp: 324,
                ..Default::default()
            },
            ModemConfig {
                pilot_symbols: vec![0, 3],
                ..Default::default()
            },
            ModemConfig {
                pilot_symbols: vec![3, 15],
                ..Default::default()
            },
            ModemConfig {
                pilot_symbols: vec![6, 3],
                ..Default::default()
            },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn mirror_produces_hermitian_grid() {
        let mut g = ResourceGrid::zeros(8, 2);
        for k in 1..4 {
            g.set(k, 1, C64::new(k as f64, -1.0));
        }
        assert!(g.check_hermitian(1e-12).is_err());
        g.mirror();
        g.check_hermitian(0.0).unwrap();
        assert_eq!(g.get(7, 1), C64::new(1.0, 1.0));
    }
}
