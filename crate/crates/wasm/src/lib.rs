//! Browser bindings. [`Session`] holds the demo state and is plain Rust so it
//! can be tested natively; [`Demo`] is its thin JavaScript-facing wrapper.

use owc_core::channel::{CirProfile, DelayClass};
use owc_core::config::SystemConfig;
use owc_core::dataset::{draw_channel, CorpusClass, LabelledChannel};
use owc_core::dsp::C64;
use owc_core::estimators::{ls_pilots, CorrelationSet};
use owc_core::experiments::{EstimatorKind, EstimatorSet};
use owc_core::link::{transmit_slot, SlotRecord};
use owc_core::metrics::{bit_errors, nmse};
use owc_core::nn::{Net, TensorFile};
use owc_core::ofdm::equalize_and_decode;
use owc_core::pipeline::{bank_from_nets, build_correlations, default_architecture};
use owc_core::rng::{domain, substream};
use owc_core::selector::{estimate_cir_magnitudes, SelectorBank};
use owc_core::{Error, Result};
use wasm_bindgen::prelude::*;

/// Channels averaged for the demo's MMSE statistics; small enough to build
/// in well under a second.
const DEMO_CORR_COUNT: usize = 4_000;

pub struct Session {
    cfg: SystemConfig,
    corr: CorrelationSet,
    bank: Option<SelectorBank<Net<f32>>>,
    channel: Option<LabelledChannel>,
    slot: Option<SlotRecord>,
}

/// Magnitude of the first half of a response, tones `0..=n_f/2`.
fn half_band(h: &[C64]) -> Vec<f64> {
    h[..=h.len() / 2].iter().map(|v| v.norm()).collect()
}

pub struct ChannelSummary {
    pub label: DelayClass,
    pub response_mag: Vec<f64>,
    pub taps: CirProfile,
    pub attempts: usize,
}

pub struct Comparison {
    pub estimators: Vec<EstimatorKind>,
    pub nmse: Vec<f64>,
    /// Half-band magnitudes, one row per estimator.
    pub curves: Vec<Vec<f64>>,
    pub truth: Vec<f64>,
}

pub struct Constellation {
    /// Equalized data symbols as interleaved real and imaginary parts.
    pub points: Vec<f64>,
    pub ber: f64,
}

impl Session {
    pub fn new(seed: u64) -> Result<Self> {
        let cfg = SystemConfig::default();
        let corr = build_correlations(&cfg, DEMO_CORR_COUNT, seed)?;
        Ok(Self {
            cfg,
            corr,
            bank: None,
            channel: None,
            slot: None,
        })
    }

    /// Installs trained LDS, MDS and HDS weights, enabling the network estimators.
    pub fn load_weights(&mut self, lds: &[u8], mds: &[u8], hds: &[u8]) -> Result<()> {
        let arch = default_architecture(&self.cfg)?;
        let net = |b: &[u8]| Net::<f32>::from_weights(&TensorFile::from_bytes(b)?, Some(&arch));
        self.bank = Some(bank_from_nets(&self.cfg, [net(lds)?, net(mds)?, net(hds)?])?);
        Ok(())
    }

    pub fn has_networks(&self) -> bool {
        self.bank.is_some()
    }

    pub fn draw_channel(&mut self, class: CorpusClass, seed: u64) -> Result<ChannelSummary> {
        let ch = draw_channel(&self.cfg, class, seed)?;
        let summary = ChannelSummary {
            label: ch.label,
            response_mag: half_band(&ch.response),
            taps: estimate_cir_magnitudes(&ch.response, self.cfg.modem.l_cp)?,
            attempts: ch.attempts,
        };
        self.channel = Some(ch);
        self.slot = None;
        Ok(summary)
    }

    fn kinds(&self) -> Vec<EstimatorKind> {
        let mut k = vec![EstimatorKind::Ls, EstimatorKind::Mmse, EstimatorKind::Flat];
        if self.bank.is_some() {
            k.extend([EstimatorKind::HdsOnly, EstimatorKind::Adaptive]);
        }
        k
    }

    fn estimates(&self, kinds: &[EstimatorKind]) -> Result<Vec<Vec<C64>>> {
        let slot = self.slot.as_ref().ok_or(Error::Empty("transmitted slot"))?;
        EstimatorSet::new(&self.cfg, Some(&self.corr), self.bank.as_ref())?.estimate_all(kinds, slot)
    }

    /// Sends one slot over the current channel and scores every estimator.
    pub fn compare(&mut self, snr_db: f64, seed: u64) -> Result<Comparison> {
        let ch = self.channel.as_ref().ok_or(Error::Empty("channel"))?;
        let pattern = self.cfg.pattern()?;
        self.slot = Some(transmit_slot(
            &ch.response,
            snr_db,
            &self.cfg.modem,
            &pattern,
            &mut substream(seed, domain::BITS, 0),
            &mut substream(seed, domain::NOISE, 0),
        )?);
        let kinds = self.kinds();
        let est = self.estimates(&kinds)?;
        Ok(Comparison {
            nmse: est.iter().map(|e| nmse(e, &ch.response)).collect::<Result<_>>()?,
            curves: est.iter().map(|e| half_band(e)).collect(),
            truth: half_band(&ch.response),
            estimators: kinds,
        })
    }

    /// Data symbols of the last slot after one-tap equalization with `kind`.
    pub fn constellation(&self, kind: EstimatorKind) -> Result<Constellation> {
        let slot = self.slot.as_ref().ok_or(Error::Empty("transmitted slot"))?;
        let h = match kind {
            EstimatorKind::Direct => vec![C64::new(1.0, 0.0); self.cfg.modem.n_f],
            k => self.estimates(&[k])?.remove(0),
        };
        let m = &self.cfg.modem;
        let mut points = Vec::new();
        for s in m.data_symbols() {
            for k in m.data_tones() {
                let z = slot.rx.get(k, s) / h[k];
                points.extend([z.re, z.im]);
            }
        }
        let bits = equalize_and_decode(&slot.rx, &h, m)?;
        Ok(Constellation {
            points,
            ber: bit_errors(&bits, &slot.tx_bits)? as f64 / bits.len() as f64,
        })
    }

    /// NMSE of the symbol-averaged LS pilot estimate of the last slot.
    pub fn pilot_error(&self) -> Result<f64> {
        let slot = self.slot.as_ref().ok_or(Error::Empty("transmitted slot"))?;
        let ch = self.channel.as_ref().ok_or(Error::Empty("channel"))?;
        let pattern = self.cfg.pattern()?;
        let avg = ls_pilots(&slot.rx, &pattern)?.averaged();
        let truth: Vec<C64> = pattern.tones.iter().map(|&k| ch.response[k]).collect();
        nmse(&avg, &truth)
    }
}

fn js(e: Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub struct ChannelView {
    label: String,
    response_mag: Vec<f64>,
    taps: Vec<f64>,
    attempts: usize,
}

#[wasm_bindgen]
impl ChannelView {
    #[wasm_bindgen(getter)]
    pub fn label(&self) -> String {
        self.label.clone()
    }
    #[wasm_bindgen(getter, js_name = responseMag)]
    pub fn response_mag(&self) -> Vec<f64> {
        self.response_mag.clone()
    }
    /// `|h(0)|` followed by the tail taps.
    #[wasm_bindgen(getter)]
    pub fn taps(&self) -> Vec<f64> {
        self.taps.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn attempts(&self) -> usize {
        self.attempts
    }
}

#[wasm_bindgen]
pub struct ComparisonView {
    names: Vec<String>,
    nmse: Vec<f64>,
    curves: Vec<f64>,
    truth: Vec<f64>,
}

#[wasm_bindgen]
impl ComparisonView {
    #[wasm_bindgen(getter)]
    pub fn names(&self) -> Vec<String> {
        self.names.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn nmse(&self) -> Vec<f64> {
        self.nmse.clone()
    }
    /// Row-major, one half-band magnitude curve per estimator.
    #[wasm_bindgen(getter)]
    pub fn curves(&self) -> Vec<f64> {
        self.curves.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn truth(&self) -> Vec<f64> {
        self.truth.clone()
    }
}

#[wasm_bindgen]
pub struct ConstellationView {
    points: Vec<f64>,
    ber: f64,
}

#[wasm_bindgen]
impl ConstellationView {
    #[wasm_bindgen(getter)]
    pub fn points(&self) -> Vec<f64> {
        self.points.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn ber(&self) -> f64 {
        self.ber
    }
}

#[wasm_bindgen]
pub struct Demo {
    inner: Session,
}

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new(seed: u32) -> std::result::Result<Demo, JsError> {
        Ok(Demo {
            inner: Session::new(seed as u64).map_err(js)?,
        })
    }

    #[wasm_bindgen(js_name = loadWeights)]
    pub fn load_weights(&mut self, lds: &[u8], mds: &[u8], hds: &[u8]) -> std::result::Result<(), JsError> {
        self.inner.load_weights(lds, mds, hds).map_err(js)
    }

    /// `class` is `lds`, `mds`, `hds` or `mixed`.
    #[wasm_bindgen(js_name = drawChannel)]
    pub fn draw_channel(&mut self, class: &str, seed: u32) -> std::result::Result<ChannelView, JsError> {
        let class: CorpusClass = class.parse().map_err(js)?;
        let s = self.inner.draw_channel(class, seed as u64).map_err(js)?;
        Ok(ChannelView {
            label: s.label.to_string(),
            response_mag: s.response_mag,
            taps: std::iter::once(s.taps.los).chain(s.taps.tail).collect(),
            attempts: s.attempts,
        })
    }

    pub fn compare(&mut self, snr_db: f64, seed: u32) -> std::result::Result<ComparisonView, JsError> {
        let c = self.inner.compare(snr_db, seed as u64).map_err(js)?;
        Ok(ComparisonView {
            names: c.estimators.iter().map(|k| k.to_string()).collect(),
            nmse: c.nmse,
            curves: c.curves.concat(),
            truth: c.truth,
        })
    }

    pub fn constellation(&self, estimator: &str) -> std::result::Result<ConstellationView, JsError> {
        let kind: EstimatorKind = estimator.parse().map_err(js)?;
        let c = self.inner.constellation(kind).map_err(js)?;
        Ok(ConstellationView {
            points: c.points,
            ber: c.ber,
        })
    }
}
