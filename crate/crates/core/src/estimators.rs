//! Pilot-based LS and linear MMSE channel estimation.

use nalgebra::{DMatrix, DVector};

use std::path::Path;

use crate::dsp::C64;
use crate::error::{Error, Result};
use crate::nn::{Tensor, TensorFile};
use crate::ofdm::{PilotPattern, ResourceGrid};

/// Per-pilot LS observations, `n_tones x n_symbols`, stored tone-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotObservation {
    n_tones: usize,
    n_symbols: usize,
    data: Vec<C64>,
}

impl PilotObservation {
    pub fn new(n_tones: usize, n_symbols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != n_tones * n_symbols {
            return Err(Error::Length {
                what: "pilot observation",
                expected: n_tones * n_symbols,
                actual: data.len(),
            });
        }
        Ok(Self {
            n_tones,
            n_symbols,
            data,
        })
    }

    pub fn n_tones(&self) -> usize {
        self.n_tones
    }

    pub fn n_symbols(&self) -> usize {
        self.n_symbols
    }

    pub fn get(&self, tone: usize, symbol: usize) -> C64 {
        self.data[tone * self.n_symbols + symbol]
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    /// Average over pilot symbols; the channel is constant over the slot.
    pub fn averaged(&self) -> Vec<C64> {
        self.data
            .chunks_exact(self.n_symbols)
            .map(|row| row.iter().sum::<C64>() / self.n_symbols as f64)
            .collect()
    }

    pub fn scaled(&self, c: C64) -> Self {
        Self {
            data: self.data.iter().map(|v| v * c).collect(),
            ..self.clone()
        }
    }
}

/// `Y_p / X_p` at every pilot of every pilot symbol.
pub fn ls_pilots(grid: &ResourceGrid, pattern: &PilotPattern) -> Result<PilotObservation> {
    if let Some(i) = pattern.values.iter().position(|v| v.norm_sqr() == 0.0) {
        return Err(Error::ZeroDivisor {
            what: "pilot value",
            index: i,
        });
    }
    if pattern.symbols.iter().any(|&s| s >= grid.n_s()) || pattern.tones.iter().any(|&k| k >= grid.n_f()) {
        return Err(Error::Shape("pilot pattern does not fit the grid".into()));
    }
    let mut data = Vec::with_capacity(pattern.n_tones() * pattern.n_symbols());
    for (&k, &x) in pattern.tones.iter().zip(&pattern.values) {
        for &s in &pattern.symbols {
            data.push(grid.get(k, s) / x);
        }
    }
    PilotObservation::new(pattern.n_tones(), pattern.n_symbols(), data)
}

/// LS estimate at the pilot tones, averaged over the pilot symbols.
///
/// Averaging divides the per-tone noise variance by the number of pilot symbols.
pub fn ls_estimate(grid: &ResourceGrid, pattern: &PilotPattern) -> Result<Vec<C64>> {
    Ok(ls_pilots(grid, pattern)?.averaged())
}

/// Effective noise variance on averaged LS pilots given the per-bin noise variance.
pub fn ls_noise_variance(bin_noise_var: f64, pattern: &PilotPattern) -> f64 {
    let mean_pilot_power = pattern.values.iter().map(|v| v.norm_sqr()).sum::<f64>() / pattern.values.len() as f64;
    bin_noise_var / (pattern.n_symbols() as f64 * mean_pilot_power)
}

/// Ensemble correlations `R_HHp` (`n_f x n_p`) and `R_HpHp` (`n_p x n_p`), row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationSet {
    pub n_f: usize,
    pub n_p: usize,
    pub r_hhp: Vec<C64>,
    pub r_hphp: Vec<C64>,
    pub sample_count: usize,
}

/// Streaming sample-average of `H H_p^H` and `H_p H_p^H`.
#[derive(Debug, Clone)]
pub struct CorrelationAccumulator {
    tones: Vec<usize>,
    n_f: usize,
    r_hhp: Vec<C64>,
    r_hphp: Vec<C64>,
    count: usize,
}

impl CorrelationAccumulator {
    pub fn new(pattern: &PilotPattern, n_f: usize) -> Self {
        let n_p = pattern.n_tones();
        Self {
            tones: pattern.tones.clone(),
            n_f,
            r_hhp: vec![C64::new(0.0, 0.0); n_f * n_p],
            r_hphp: vec![C64::new(0.0, 0.0); n_p * n_p],
            count: 0,
        }
    }

    pub fn add(&mut self, h: &[C64]) -> Result<()> {
        if h.len() != self.n_f {
            return Err(Error::Length {
                what: "frequency response",
                expected: self.n_f,
                actual: h.len(),
            });
        }
        let n_p = self.tones.len();
        let hp_conj: Vec<C64> = self.tones.iter().map(|&k| h[k].conj()).collect();
        for (row, &hk) in self.r_hhp.chunks_exact_mut(n_p).zip(h) {
            for (r, &c) in row.iter_mut().zip(&hp_conj) {
                *r += hk * c;
            }
        }
        for (row, &k) in self.r_hphp.chunks_exact_mut(n_p).zip(&self.tones) {
            for (r, &c) in row.iter_mut().zip(&hp_conj) {
                *r += h[k] * c;
            }
        }
        self.count += 1;
        Ok(())
    }

    pub fn finish(self) -> Result<CorrelationSet> {
        if self.count == 0 {
            return Err(Error::Empty("correlation corpus"));
        }
        let inv = 1.0 / self.count as f64;
        Ok(CorrelationSet {
            n_f: self.n_f,
            n_p: self.tones.len(),
            r_hhp: self.r_hhp.into_iter().map(|v| v * inv).collect(),
            r_hphp: self.r_hphp.into_iter().map(|v| v * inv).collect(),
            sample_count: self.count,
        })
    }
}

/// Correlation statistics of a corpus of frequency responses.
pub fn estimate_correlations<'a, I>(responses: I, pattern: &PilotPattern, n_f: usize) -> Result<CorrelationSet>
where
    I: IntoIterator<Item = &'a [C64]>,
{
    let mut acc = CorrelationAccumulator::new(pattern, n_f);
    for h in responses {
        acc.add(h)?;
    }
    acc.finish()
}

impl CorrelationSet {
    fn pilot_matrix(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.n_p, self.n_p, &self.r_hphp)
    }

    fn cross_matrix(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.n_f, self.n_p, &self.r_hhp)
    }
}

impl CorrelationSet {
    /// Container form: both matrices divided by their mean pilot power (kept
    /// as the file scale) so they survive `f32` storage, as `[rows, cols, 2]`.
    pub fn to_tensor_file(&self) -> Result<TensorFile> {
        let scale = (0..self.n_p).map(|i| self.r_hphp[i * self.n_p + i].re).sum::<f64>() / self.n_p as f64;
        if !(scale > 0.0) {
            return Err(Error::ZeroEnergy("pilot autocorrelation"));
        }
        let planes = |m: &[C64]| {
            m.iter()
                .flat_map(|c| [(c.re / scale) as f32, (c.im / scale) as f32])
                .collect()
        };
        Ok(TensorFile {
            tag: format!(
                "correlation n_f={} n_p={} samples={}",
                self.n_f, self.n_p, self.sample_count
            ),
            scale,
            tensors: vec![
                (
                    "r_hhp".into(),
                    Tensor::new(vec![self.n_f, self.n_p, 2], planes(&self.r_hhp))?,
                ),
                (
                    "r_hphp".into(),
                    Tensor::new(vec![self.n_p, self.n_p, 2], planes(&self.r_hphp))?,
                ),
            ],
        })
    }

    pub fn from_tensor_file(file: &TensorFile) -> Result<Self> {
        let bad = || Error::Format(format!("not a correlation file: tag {:?}", file.tag));
        let mut fields = file.tag.split_whitespace();
        if fields.next() != Some("correlation") {
            return Err(bad());
        }
        let mut get = |key: &str| -> Result<usize> {
            let kv = fields.next().ok_or_else(bad)?;
            kv.strip_prefix(key)
                .and_then(|v| v.strip_prefix('='))
                .and_then(|v| v.parse().ok())
                .ok_or_else(bad)
        };
        let (n_f, n_p, sample_count) = (get("n_f")?, get("n_p")?, get("samples")?);
        let matrix = |name: &str, rows: usize| -> Result<Vec<C64>> {
            let t = file.get(name)?;
            if t.shape() != [rows, n_p, 2] {
                return Err(Error::Shape(format!(
                    "{name}: expected [{rows}, {n_p}, 2], found {:?}",
                    t.shape()
                )));
            }
            Ok(t.data()
                .chunks_exact(2)
                .map(|p| C64::new(p[0] as f64 * file.scale, p[1] as f64 * file.scale))
                .collect())
        };
        Ok(Self {
            n_f,
            n_p,
            r_hhp: matrix("r_hhp", n_f)?,
            r_hphp: matrix("r_hphp", n_p)?,
            sample_count,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.to_tensor_file()?.save(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_tensor_file(&TensorFile::load(path)?)
    }
}

/// Pivot ratio below which the regularized system is treated as singular.
const SINGULAR_RATIO: f64 = 1e-13;

/// Wiener interpolation `R_HHp (R_HpHp + s^2 I)^-1 h_ls`, solved by LU.
pub fn mmse_estimate(h_ls: &[C64], corr: &CorrelationSet, noise_var: f64) -> Result<Vec<C64>> {
    if h_ls.len() != corr.n_p {
        return Err(Error::Length {
            what: "LS pilot estimate",
            expected: corr.n_p,
            actual: h_ls.len(),
        });
    }
    if !(noise_var >= 0.0) {
        return Err(Error::Domain {
            name: "noise_var",
            value: noise_var,
            expected: "[0, inf)",
        });
    }
    if noise_var.is_infinite() {
        return Ok(vec![C64::new(0.0, 0.0); corr.n_f]);
    }
    let mut a = corr.pilot_matrix();
    for i in 0..corr.n_p {
        a[(i, i)] += C64::new(noise_var, 0.0);
    }
    let lu = a.lu();
    let u = lu.u();
    let pivots: Vec<f64> = (0..corr.n_p).map(|i| u[(i, i)].norm()).collect();
    let max = pivots.iter().cloned().fold(0.0, f64::max);
    let min = pivots.iter().cloned().fold(f64::INFINITY, f64::min);
    if max == 0.0 || min <= SINGULAR_RATIO * max {
        return Err(Error::Singular);
    }
    let x = lu.solve(&DVector::from_column_slice(h_ls)).ok_or(Error::Singular)?;
    Ok((corr.cross_matrix() * x).iter().copied().collect())
}

/// Piecewise-linear interpolation of pilot estimates over the first half of
/// the band, nearest-value extrapolation at the edges, Hermitian mirror above.
pub fn ls_interpolate(h_ls: &[C64], pattern: &PilotPattern, n_f: usize) -> Result<Vec<C64>> {
    if h_ls.len() != pattern.n_tones() {
        return Err(Error::Length {
            what: "LS pilot estimate",
            expected: pattern.n_tones(),
            actual: h_ls.len(),
        });
    }
    if pattern.n_tones() < 2 {
        return Err(Error::Config("interpolation needs at least two pilots".into()));
    }
    let mut out = vec![C64::new(0.0, 0.0); n_f];
    let half = n_f / 2;
    let tones = &pattern.tones;
    let mut seg = 0;
    for (k, slot) in out.iter_mut().enumerate().take(half + 1) {
        *slot = if k <= tones[0] {
            h_ls[0]
        } else if k >= *tones.last().unwrap() {
            *h_ls.last().unwrap()
        } else {
            while tones[seg + 1] < k {
                seg += 1;
            }
            let (k0, k1) = (tones[seg] as f64, tones[seg + 1] as f64);
            let w = (k as f64 - k0) / (k1 - k0);
            h_ls[seg] * (1.0 - w) + h_ls[seg + 1] * w
        };
    }
    for k in 1..half {
        out[n_f - k] = out[k].conj();
    }
    Ok(out)
}

/// Single complex gain: the mean of all pilot LS observations.
pub fn direct_detection_gain(grid: &ResourceGrid, pattern: &PilotPattern) -> Result<C64> {
    let obs = ls_pilots(grid, pattern)?;
    Ok(obs.data().iter().sum::<C64>() / obs.data().len() as f64)
}
