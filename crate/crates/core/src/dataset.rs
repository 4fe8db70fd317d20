//! Labelled training corpora and their binary file format.
//!
//! File layout, all little-endian:
//!
//! | offset | size | field |
//! |-------:|-----:|-------|
//! | 0  | 4 | magic `OWCD` |
//! | 4  | 2 | version (1) |
//! | 6  | 1 | class tag: 0 LDS, 1 MDS, 2 HDS, 3 mixed |
//! | 7  | 1 | reserved (0) |
//! | 8  | 8 | sample count (u64) |
//! | 16 | 4 | n_f (u32) |
//! | 20 | 4 | pilot tones per symbol (u32) |
//! | 24 | 4 | pilot symbols (u32) |
//! | 28 | 4 | reserved (0) |
//! | 32 | 8 | SNR min, dB (f64) |
//! | 40 | 8 | SNR max, dB (f64) |
//! | 48 | 8 | generator seed (u64) |
//!
//! Each record is the LS pilot grid (`tones x symbols` complex, tone-major,
//! re/im `f32`), the true response (`n_f` complex `f32`), the label (`u8`)
//! and the SNR in dB (`f32`).

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::channel::{sample_realization_with, ChannelRealization, ClassTemplates, DelayClass};
use crate::config::SystemConfig;
use crate::dsp::{ifft, C64};
use crate::error::{Error, Result};
use crate::estimators::{ls_pilots, PilotObservation};
use crate::link::transmit_slot;
use crate::nn::{write_atomic, Reader};
use crate::rng::{derive_seed, domain, substream};

pub const MAGIC: [u8; 4] = *b"OWCD";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 56;
/// Draws allowed per class-conditioned channel.
pub const MAX_CLASS_ATTEMPTS: usize = 10_000;

/// Which channels a corpus holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CorpusClass {
    Only(DelayClass),
    Mixed,
}

impl CorpusClass {
    pub fn code(self) -> u8 {
        match self {
            CorpusClass::Only(c) => c.code(),
            CorpusClass::Mixed => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        if code == 3 {
            Some(CorpusClass::Mixed)
        } else {
            DelayClass::from_code(code).map(CorpusClass::Only)
        }
    }
}

impl fmt::Display for CorpusClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CorpusClass::Only(c) => c.fmt(f),
            CorpusClass::Mixed => f.write_str("mixed"),
        }
    }
}

impl FromStr for CorpusClass {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("mixed") {
            Ok(CorpusClass::Mixed)
        } else {
            s.parse().map(CorpusClass::Only)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetHeader {
    pub class: CorpusClass,
    pub count: u64,
    pub n_f: u32,
    pub pilot_tones: u32,
    pub pilot_symbols: u32,
    pub snr_min_db: f64,
    pub snr_max_db: f64,
    pub seed: u64,
}

impl DatasetHeader {
    pub fn record_len(&self) -> usize {
        (self.pilot_tones as usize * self.pilot_symbols as usize + self.n_f as usize) * 8 + 1 + 4
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub pilot_ls: PilotObservation,
    pub true_h: Vec<C64>,
    pub label: DelayClass,
    pub snr_db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub header: DatasetHeader,
    pub samples: Vec<Sample>,
}

fn round_f32(v: &[C64]) -> Vec<C64> {
    v.iter()
        .map(|c| C64::new(c.re as f32 as f64, c.im as f32 as f64))
        .collect()
}

/// Class of a stored response, computed exactly as a reader would.
pub fn label_of_response(h: &[C64], templates: &ClassTemplates) -> Result<DelayClass> {
    crate::channel::label_class(&ifft(h), templates)
}

/// A realization together with its `f32`-rounded response and label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelledChannel {
    pub channel: ChannelRealization,
    pub response: Vec<C64>,
    pub label: DelayClass,
    pub attempts: usize,
}

fn draw_labelled<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    templates: &ClassTemplates,
    rng: &mut R,
) -> Result<LabelledChannel> {
    let channel = sample_realization_with(&cfg.scenario, rng)?;
    let exact = channel.frequency_response(cfg.modem.n_f)?;
    let label = crate::channel::label_class(&ifft(&exact), templates)?;
    let response = round_f32(&exact);
    Ok(LabelledChannel {
        channel,
        response,
        label,
        attempts: 1,
    })
}

/// Draws realizations from the seed's channel stream until one falls in
/// `class` (and keeps that label after rounding to `f32`).
pub fn rejection_sample_class(cfg: &SystemConfig, class: DelayClass, seed: u64) -> Result<LabelledChannel> {
    let templates = cfg.templates()?;
    let mut rng = substream(seed, domain::CHANNEL, 0);
    let mut hits = 0;
    for attempt in 1..=MAX_CLASS_ATTEMPTS {
        let mut d = draw_labelled(cfg, &templates, &mut rng)?;
        if d.label == class {
            hits += 1;
            if label_of_response(&d.response, &templates)? == class {
                d.attempts = attempt;
                return Ok(d);
            }
        }
    }
    Err(Error::RejectionCap {
        what: format!("delay class {class}"),
        attempts: MAX_CLASS_ATTEMPTS,
        accepted: hits,
    })
}

/// One unconditioned channel, redrawn only if rounding to `f32` would change
/// its label.
pub fn sample_labelled(cfg: &SystemConfig, seed: u64) -> Result<LabelledChannel> {
    let templates = cfg.templates()?;
    let mut rng = substream(seed, domain::CHANNEL, 0);
    for attempt in 1..=MAX_CLASS_ATTEMPTS {
        let mut d = draw_labelled(cfg, &templates, &mut rng)?;
        if label_of_response(&d.response, &templates)? == d.label {
            d.attempts = attempt;
            return Ok(d);
        }
    }
    Err(Error::RejectionCap {
        what: "label-stable channel".into(),
        attempts: MAX_CLASS_ATTEMPTS,
        accepted: 0,
    })
}

pub fn draw_channel(cfg: &SystemConfig, class: CorpusClass, seed: u64) -> Result<LabelledChannel> {
    match class {
        CorpusClass::Only(c) => rejection_sample_class(cfg, c, seed),
        CorpusClass::Mixed => sample_labelled(cfg, seed),
    }
}

/// Sample `index` of a corpus: its channel, SNR, data and noise each come
/// from their own counter-based stream. `snr_range = (inf, inf)` gives
/// noiseless observations.
pub fn generate_sample(
    cfg: &SystemConfig,
    class: CorpusClass,
    snr_range: (f64, f64),
    seed: u64,
    index: u64,
) -> Result<Sample> {
    let ch = draw_channel(cfg, class, derive_seed(seed, domain::CHANNEL, index))?;
    let (lo, hi) = snr_range;
    let snr_db = if lo == hi {
        lo
    } else {
        substream(seed, domain::SNR, index).random_range(lo..hi)
    };
    let pattern = cfg.pattern()?;
    let slot = transmit_slot(
        &ch.response,
        snr_db,
        &cfg.modem,
        &pattern,
        &mut substream(seed, domain::BITS, index),
        &mut substream(seed, domain::NOISE, index),
    )?;
    let obs = ls_pilots(&slot.rx, &pattern)?;
    let pilot_ls = PilotObservation::new(obs.n_tones(), obs.n_symbols(), round_f32(obs.data()))?;
    Ok(Sample {
        pilot_ls,
        true_h: ch.response,
        label: ch.label,
        snr_db: snr_db as f32 as f64,
    })
}

pub fn generate_samples(
    cfg: &SystemConfig,
    class: CorpusClass,
    count: usize,
    snr_range: (f64, f64),
    seed: u64,
) -> Result<Dataset> {
    if count == 0 {
        return Err(Error::Empty("requested dataset"));
    }
    let (lo, hi) = snr_range;
    if !(lo <= hi) || lo.is_nan() || (lo.is_infinite() && lo != hi) {
        return Err(Error::Config(format!("bad SNR range {lo}..{hi}")));
    }
    let pattern = cfg.pattern()?;
    let samples = (0..count as u64)
        .map(|i| generate_sample(cfg, class, snr_range, seed, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset {
        header: DatasetHeader {
            class,
            count: count as u64,
            n_f: cfg.modem.n_f as u32,
            pilot_tones: pattern.n_tones() as u32,
            pilot_symbols: pattern.n_symbols() as u32,
            snr_min_db: lo,
            snr_max_db: hi,
            seed,
        },
        samples,
    })
}

/// Generates a corpus and writes it atomically to `path`.
pub fn generate_dataset(
    cfg: &SystemConfig,
    class: CorpusClass,
    count: usize,
    snr_range: (f64, f64),
    seed: u64,
    path: &Path,
) -> Result<DatasetHeader> {
    let ds = generate_samples(cfg, class, count, snr_range, seed)?;
    ds.save(path)?;
    Ok(ds.header)
}

impl Dataset {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let h = &self.header;
        if h.count as usize != self.samples.len() {
            return Err(Error::Length {
                what: "dataset samples",
                expected: h.count as usize,
                actual: self.samples.len(),
            });
        }
        let mut out = Vec::with_capacity(HEADER_LEN + self.samples.len() * h.record_len());
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.push(h.class.code());
        out.push(0);
        out.extend_from_slice(&h.count.to_le_bytes());
        out.extend_from_slice(&h.n_f.to_le_bytes());
        out.extend_from_slice(&h.pilot_tones.to_le_bytes());
        out.extend_from_slice(&h.pilot_symbols.to_le_bytes());
        out.extend_from_slice(&0u32.to_le_bytes());
        out.extend_from_slice(&h.snr_min_db.to_le_bytes());
        out.extend_from_slice(&h.snr_max_db.to_le_bytes());
        out.extend_from_slice(&h.seed.to_le_bytes());
        debug_assert_eq!(out.len(), HEADER_LEN);
        for s in &self.samples {
            if s.pilot_ls.n_tones() != h.pilot_tones as usize
                || s.pilot_ls.n_symbols() != h.pilot_symbols as usize
                || s.true_h.len() != h.n_f as usize
            {
                return Err(Error::Shape("sample does not match the dataset header".into()));
            }
            for c in s.pilot_ls.data().iter().chain(&s.true_h) {
                out.extend_from_slice(&(c.re as f32).to_le_bytes());
                out.extend_from_slice(&(c.im as f32).to_le_bytes());
            }
            out.push(s.label.code());
            out.extend_from_slice(&(s.snr_db as f32).to_le_bytes());
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { buf: bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::Format("bad magic, not a dataset file".into()));
        }
        let version = r.u16()?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported dataset version {version}")));
        }
        let code = r.u8()?;
        let class = CorpusClass::from_code(code).ok_or_else(|| Error::Format(format!("unknown class tag {code}")))?;
        r.u8()?;
        let count = r.u64()?;
        let n_f = r.u32()?;
        let pilot_tones = r.u32()?;
        let pilot_symbols = r.u32()?;
        r.u32()?;
        let header = DatasetHeader {
            class,
            count,
            n_f,
            pilot_tones,
            pilot_symbols,
            snr_min_db: r.f64()?,
            snr_max_db: r.f64()?,
            seed: r.u64()?,
        };
        let expected = (count as u128) * header.record_len() as u128 + HEADER_LEN as u128;
        if expected != bytes.len() as u128 {
            return Err(Error::Format(format!(
                "header promises {count} records ({expected} bytes), file has {} bytes",
                bytes.len()
            )));
        }
        let n_p = pilot_tones as usize * pilot_symbols as usize;
        let complex = |n: usize, r: &mut Reader| -> Result<Vec<C64>> {
            (0..n).map(|_| Ok(C64::new(r.f32()? as f64, r.f32()? as f64))).collect()
        };
        let mut samples = Vec::with_capacity(count as usize);
        for _ in 0..count {
            let pilot_ls = PilotObservation::new(pilot_tones as usize, pilot_symbols as usize, complex(n_p, &mut r)?)?;
            let true_h = complex(n_f as usize, &mut r)?;
            let code = r.u8()?;
            let label = DelayClass::from_code(code).ok_or_else(|| Error::Format(format!("unknown label {code}")))?;
            let snr_db = r.f32()? as f64;
            samples.push(Sample {
                pilot_ls,
                true_h,
                label,
                snr_db,
            });
        }
        Ok(Self { header, samples })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_bytes()?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }

    /// Seeded shuffle, then the first `floor(n * ratio)` samples train and the
    /// rest validate.
    pub fn split(&self, ratio: f64) -> Result<(Vec<&Sample>, Vec<&Sample>)> {
        let (train, val) = split_indices(self.samples.len(), ratio, self.header.seed)?;
        Ok((
            train.iter().map(|&i| &self.samples[i]).collect(),
            val.iter().map(|&i| &self.samples[i]).collect(),
        ))
    }
}

/// Train/validation index sets for `n` items.
pub fn split_indices(n: usize, ratio: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::Domain {
            name: "split ratio",
            value: ratio,
            expected: "(0, 1)",
        });
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut substream(seed, domain::SPLIT, 0));
    let n_train = (n as f64 * ratio).floor() as usize;
    let val = idx.split_off(n_train);
    Ok((idx, val))
}

/// Reads a dataset file and splits it.
pub fn split_dataset(path: &Path, ratio: f64) -> Result<(Vec<Sample>, Vec<Sample>)> {
    let ds = Dataset::load(path)?;
    let (t, v) = ds.split(ratio)?;
    Ok((t.into_iter().cloned().collect(), v.into_iter().cloned().collect()))
}
