use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use rand::Rng;

use super::layers::{
    col_mean_backward, col_mean_forward, conv_backward, conv_forward, relu_backward, relu_forward, ConvShape, RowResize,
};
use super::real::Real;
use super::tensor::{Tensor, TensorFile};
use crate::dsp::C64;
use crate::error::{Error, Result};
use crate::estimators::PilotObservation;
use crate::ofdm::PilotPattern;
use crate::rng::{domain, substream};

/// Shape of the pilot-to-band estimator.
///
/// The pilot grid is resampled onto tones `0..=n_f/2` (the rest of the band
/// is the conjugate mirror), passed through a stack of same-padded 3x3
/// convolutions and averaged over the pilot-symbol axis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Architecture {
    pub n_f: usize,
    pub pilot_first: usize,
    pub pilot_step: usize,
    pub pilot_count: usize,
    pub n_cols: usize,
    /// Channel widths from input (2) to output (2).
    pub widths: Vec<usize>,
}

impl Default for Architecture {
    fn default() -> Self {
        Self {
            n_f: 324,
            pilot_first: 1,
            pilot_step: 5,
            pilot_count: 33,
            n_cols: 4,
            widths: vec![2, 32, 30, 2],
        }
    }
}

impl Architecture {
    /// Down-scaled variant used for gradient checks.
    pub fn compact() -> Self {
        Self {
            widths: vec![2, 4, 4, 2],
            ..Self::default()
        }
    }

    /// Default widths on the layout of `pattern`, which must be evenly spaced.
    pub fn for_pattern(pattern: &PilotPattern, n_f: usize) -> Result<Self> {
        let t = &pattern.tones;
        if t.len() < 2 || t.windows(2).any(|w| w[1] - w[0] != t[1] - t[0]) {
            return Err(Error::Config("network input needs evenly spaced pilot tones".into()));
        }
        Ok(Self {
            n_f,
            pilot_first: t[0],
            pilot_step: t[1] - t[0],
            pilot_count: t.len(),
            n_cols: pattern.n_symbols(),
            ..Self::default()
        })
    }

    pub fn rows(&self) -> usize {
        self.n_f / 2 + 1
    }

    pub fn pilot_tones(&self) -> Vec<usize> {
        (0..self.pilot_count)
            .map(|i| self.pilot_first + i * self.pilot_step)
            .collect()
    }

    pub fn n_layers(&self) -> usize {
        self.widths.len() - 1
    }

    pub fn param_count(&self) -> usize {
        self.widths.windows(2).map(|w| 9 * w[0] * w[1] + w[1]).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_f < 4 || self.n_f % 2 != 0 {
            return Err(Error::Config(format!("n_f must be even and >= 4, got {}", self.n_f)));
        }
        if self.widths.len() < 2 || self.widths[0] != 2 || *self.widths.last().unwrap() != 2 {
            return Err(Error::Config("layer widths must start and end at 2".into()));
        }
        if self.widths.contains(&0) || self.n_cols == 0 || self.pilot_count < 2 || self.pilot_step == 0 {
            return Err(Error::Config("degenerate network shape".into()));
        }
        if self.pilot_first + (self.pilot_count - 1) * self.pilot_step >= self.rows() {
            return Err(Error::Config("pilot tones exceed the first half of the band".into()));
        }
        Ok(())
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let widths: Vec<String> = self.widths.iter().map(|w| w.to_string()).collect();
        write!(
            f,
            "cnn3x3 n_f={} pilots={}:{}:{} cols={} widths={}",
            self.n_f,
            self.pilot_first,
            self.pilot_step,
            self.pilot_count,
            self.n_cols,
            widths.join(",")
        )
    }
}

impl FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Format(format!("unrecognized architecture tag {s:?}"));
        let mut it = s.split_whitespace();
        if it.next() != Some("cnn3x3") {
            return Err(bad());
        }
        let (mut n_f, mut pilots, mut cols, mut widths) = (None, None, None, None);
        for kv in it {
            let (k, v) = kv.split_once('=').ok_or_else(bad)?;
            match k {
                "n_f" => n_f = Some(v.parse::<usize>().map_err(|_| bad())?),
                "cols" => cols = Some(v.parse::<usize>().map_err(|_| bad())?),
                "pilots" => {
                    let p: Vec<usize> = v
                        .split(':')
                        .map(|x| x.parse())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| bad())?;
                    if p.len() != 3 {
                        return Err(bad());
                    }
                    pilots = Some((p[0], p[1], p[2]));
                }
                "widths" => {
                    widths = Some(
                        v.split(',')
                            .map(|x| x.parse())
                            .collect::<std::result::Result<Vec<usize>, _>>()
                            .map_err(|_| bad())?,
                    )
                }
                _ => return Err(bad()),
            }
        }
        let (pilot_first, pilot_step, pilot_count) = pilots.ok_or_else(bad)?;
        let arch = Self {
            n_f: n_f.ok_or_else(bad)?,
            pilot_first,
            pilot_step,
            pilot_count,
            n_cols: cols.ok_or_else(bad)?,
            widths: widths.ok_or_else(bad)?,
        };
        arch.validate()?;
        Ok(arch)
    }
}

#[derive(Debug, Clone, PartialEq)]
struct LayerSlot {
    cin: usize,
    cout: usize,
    weight: Range<usize>,
    bias: Range<usize>,
}

/// Buffers reused across forward/backward calls.
#[derive(Debug, Default)]
pub struct Workspace<T> {
    resized: Vec<T>,
    acts: Vec<Vec<T>>,
    out: Vec<T>,
    dact: Vec<T>,
    dprev: Vec<T>,
    scratch: Vec<T>,
}

/// Convolutional channel estimator with all parameters in one flat vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Net<T> {
    arch: Architecture,
    resize: RowResize,
    slots: Vec<LayerSlot>,
    params: Vec<T>,
    norm_scale: f64,
}

impl<T: Real> Net<T> {
    pub fn zeros(arch: Architecture, norm_scale: f64) -> Result<Self> {
        arch.validate()?;
        if !(norm_scale > 0.0 && norm_scale.is_finite()) {
            return Err(Error::Domain {
                name: "norm_scale",
                value: norm_scale,
                expected: "(0, inf)",
            });
        }
        let resize = RowResize::new(&arch.pilot_tones(), arch.rows())?;
        let mut slots = Vec::new();
        let mut off = 0;
        for w in arch.widths.windows(2) {
            let (cin, cout) = (w[0], w[1]);
            let weight = off..off + 9 * cin * cout;
            let bias = weight.end..weight.end + cout;
            off = bias.end;
            slots.push(LayerSlot {
                cin,
                cout,
                weight,
                bias,
            });
        }
        Ok(Self {
            arch,
            resize,
            slots,
            params: vec![T::zero(); off],
            norm_scale,
        })
    }

    /// Uniform fan-in scaled kernels, `U(-b, b)` with `b = sqrt(6 / (9 cin))`,
    /// and zero biases.
    pub fn init(arch: Architecture, norm_scale: f64, seed: u64) -> Result<Self> {
        let mut net = Self::zeros(arch, norm_scale)?;
        for (i, slot) in net.slots.iter().enumerate() {
            let mut rng = substream(seed, domain::INIT, i as u64);
            let bound = (6.0 / (9 * slot.cin) as f64).sqrt();
            for p in &mut net.params[slot.weight.clone()] {
                *p = T::of(rng.random_range(-bound..bound));
            }
        }
        Ok(net)
    }

    pub fn arch(&self) -> &Architecture {
        &self.arch
    }

    pub fn norm_scale(&self) -> f64 {
        self.norm_scale
    }

    pub fn params(&self) -> &[T] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [T] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    /// Index ranges of the kernel and bias of layer `i`.
    pub fn layer_ranges(&self, i: usize) -> (Range<usize>, Range<usize>) {
        (self.slots[i].weight.clone(), self.slots[i].bias.clone())
    }

    pub fn cast<U: Real>(&self) -> Net<U> {
        Net {
            arch: self.arch.clone(),
            resize: self.resize.clone(),
            slots: self.slots.clone(),
            params: self.params.iter().map(|&p| U::of(p.f64())).collect(),
            norm_scale: self.norm_scale,
        }
    }

    /// Input elements per sample: `[pilot, column, re/im]`.
    pub fn input_len(&self) -> usize {
        self.arch.pilot_count * self.arch.n_cols * 2
    }

    /// Output elements per sample: `[tone 0..=n_f/2, re/im]`.
    pub fn output_len(&self) -> usize {
        self.arch.rows() * 2
    }

    pub fn encode_input(&self, obs: &PilotObservation) -> Result<Vec<T>> {
        if obs.n_tones() != self.arch.pilot_count || obs.n_symbols() != self.arch.n_cols {
            return Err(Error::Shape(format!(
                "network expects {}x{} pilots, got {}x{}",
                self.arch.pilot_count,
                self.arch.n_cols,
                obs.n_tones(),
                obs.n_symbols()
            )));
        }
        Ok(planes(obs.data(), self.norm_scale))
    }

    pub fn encode_target(&self, h: &[C64]) -> Result<Vec<T>> {
        if h.len() != self.arch.n_f {
            return Err(Error::Length {
                what: "target response",
                expected: self.arch.n_f,
                actual: h.len(),
            });
        }
        Ok(planes(&h[..self.arch.rows()], self.norm_scale))
    }

    /// Full Hermitian band from one output sample.
    pub fn decode_output(&self, out: &[T]) -> Vec<C64> {
        let n_f = self.arch.n_f;
        let inv = 1.0 / self.norm_scale;
        let mut h = vec![C64::new(0.0, 0.0); n_f];
        for (k, p) in out.chunks_exact(2).enumerate() {
            h[k] = C64::new(p[0].f64() * inv, p[1].f64() * inv);
        }
        h[0].im = 0.0;
        h[n_f / 2].im = 0.0;
        for k in 1..n_f / 2 {
            h[n_f - k] = h[k].conj();
        }
        h
    }

    fn shape(&self, layer: usize, batch: usize) -> ConvShape {
        ConvShape {
            batch,
            rows: self.arch.rows(),
            cols: self.arch.n_cols,
            cin: self.slots[layer].cin,
            cout: self.slots[layer].cout,
        }
    }

    /// Forward pass on normalized inputs; the result stays in `ws.out`.
    fn run(&self, x: &[T], batch: usize, ws: &mut Workspace<T>) {
        assert_eq!(x.len(), batch * self.input_len());
        let inner = self.arch.n_cols * 2;
        ws.resized.resize(batch * self.arch.rows() * inner, T::zero());
        self.resize.forward(x, inner, &mut ws.resized);
        let n = self.slots.len();
        ws.acts.resize_with(n, Vec::new);
        for i in 0..n {
            let s = self.shape(i, batch);
            let slot = &self.slots[i];
            let mut y = std::mem::take(&mut ws.acts[i]);
            y.resize(s.positions() * s.cout, T::zero());
            let input = if i == 0 { &ws.resized } else { &ws.acts[i - 1] };
            conv_forward(
                input,
                &self.params[slot.weight.clone()],
                &self.params[slot.bias.clone()],
                s,
                &mut ws.scratch,
                &mut y,
            );
            if i + 1 < n {
                relu_forward(&mut y);
            }
            ws.acts[i] = y;
        }
        ws.out.resize(batch * self.output_len(), T::zero());
        col_mean_forward(&ws.acts[n - 1], self.arch.n_cols, 2, &mut ws.out);
    }

    /// Batched forward pass on normalized inputs.
    pub fn forward_normalized(&self, x: &[T], batch: usize) -> Vec<T> {
        let mut ws = Workspace::default();
        self.run(x, batch, &mut ws);
        ws.out
    }

    /// Full-band estimate from one pilot observation.
    pub fn predict(&self, obs: &PilotObservation) -> Result<Vec<C64>> {
        let x = self.encode_input(obs)?;
        Ok(self.decode_output(&self.forward_normalized(&x, 1)))
    }

    /// Mean squared error over the normalized output planes plus `l2` times
    /// the squared kernel norm, and its gradient with respect to `params`.
    pub fn loss_and_grads_normalized(
        &self,
        x: &[T],
        y: &[T],
        batch: usize,
        l2: f64,
        ws: &mut Workspace<T>,
    ) -> (f64, Vec<T>) {
        assert!(batch > 0, "empty batch");
        assert_eq!(y.len(), batch * self.output_len());
        self.run(x, batch, ws);
        let count = y.len() as f64;
        let mut loss = 0.0;
        let g_scale = T::of(2.0 / count);
        let mut dout: Vec<T> = Vec::with_capacity(y.len());
        for (&o, &t) in ws.out.iter().zip(y) {
            let e = o - t;
            loss += e.f64() * e.f64();
            dout.push(e * g_scale);
        }
        loss /= count;

        let mut grads = vec![T::zero(); self.params.len()];
        let n = self.slots.len();
        let last = self.shape(n - 1, batch);
        ws.dact.clear();
        ws.dact.resize(last.positions() * 2, T::zero());
        col_mean_backward(&dout, self.arch.n_cols, 2, &mut ws.dact);
        for i in (0..n).rev() {
            let s = self.shape(i, batch);
            let slot = &self.slots[i];
            if i + 1 < n {
                relu_backward(&ws.acts[i], &mut ws.dact);
            }
            let (gw, gb) = split_grads(&mut grads, slot);
            let dx = if i > 0 {
                ws.dprev.clear();
                ws.dprev.resize(s.positions() * s.cin, T::zero());
                Some(&mut ws.dprev[..])
            } else {
                None
            };
            let input = if i == 0 { &ws.resized } else { &ws.acts[i - 1] };
            conv_backward(
                input,
                &ws.dact,
                &self.params[slot.weight.clone()],
                s,
                gw,
                gb,
                dx,
                &mut ws.scratch,
            );
            if i > 0 {
                std::mem::swap(&mut ws.dact, &mut ws.dprev);
            }
        }
        if l2 > 0.0 {
            let k = T::of(2.0 * l2);
            for slot in &self.slots {
                for j in slot.weight.clone() {
                    let w = self.params[j];
                    loss += l2 * w.f64() * w.f64();
                    grads[j] = grads[j] + k * w;
                }
            }
        }
        (loss, grads)
    }

    /// Loss and gradients on raw `(pilot observation, true response)` pairs.
    pub fn loss_and_grads(&self, batch: &[(PilotObservation, Vec<C64>)], l2: f64) -> Result<(f64, Vec<T>)> {
        if batch.is_empty() {
            return Err(Error::Empty("batch"));
        }
        let mut x = Vec::with_capacity(batch.len() * self.input_len());
        let mut y = Vec::with_capacity(batch.len() * self.output_len());
        for (obs, h) in batch {
            x.extend(self.encode_input(obs)?);
            y.extend(self.encode_target(h)?);
        }
        Ok(self.loss_and_grads_normalized(&x, &y, batch.len(), l2, &mut Workspace::default()))
    }

    /// Serializable form; tensors are `conv{i}.weight` `[3, 3, cin, cout]`
    /// and `conv{i}.bias` `[cout]`.
    pub fn to_weights(&self) -> TensorFile {
        let mut tensors = Vec::new();
        for (i, s) in self.slots.iter().enumerate() {
            let w: Vec<f32> = self.params[s.weight.clone()].iter().map(|v| v.f64() as f32).collect();
            let b: Vec<f32> = self.params[s.bias.clone()].iter().map(|v| v.f64() as f32).collect();
            tensors.push((
                format!("conv{i}.weight"),
                Tensor::new(vec![3, 3, s.cin, s.cout], w).unwrap(),
            ));
            tensors.push((format!("conv{i}.bias"), Tensor::new(vec![s.cout], b).unwrap()));
        }
        TensorFile {
            tag: self.arch.to_string(),
            scale: self.norm_scale,
            tensors,
        }
    }

    /// Rebuilds a network, rejecting files whose architecture differs from
    /// `expected` (when given) or whose tensors do not match their tag.
    pub fn from_weights(file: &TensorFile, expected: Option<&Architecture>) -> Result<Self> {
        let arch: Architecture = file.tag.parse()?;
        if let Some(e) = expected {
            if *e != arch {
                return Err(Error::Architecture {
                    expected: e.to_string(),
                    found: file.tag.clone(),
                });
            }
        }
        let mut net = Self::zeros(arch, file.scale)?;
        if file.tensors.len() != 2 * net.slots.len() {
            return Err(Error::Format(format!(
                "expected {} tensors, found {}",
                2 * net.slots.len(),
                file.tensors.len()
            )));
        }
        for (i, s) in net.slots.iter().enumerate() {
            for (name, shape, range) in [
                (format!("conv{i}.weight"), vec![3, 3, s.cin, s.cout], s.weight.clone()),
                (format!("conv{i}.bias"), vec![s.cout], s.bias.clone()),
            ] {
                let t = file.get(&name)?;
                if t.shape() != shape.as_slice() {
                    return Err(Error::Shape(format!(
                        "{name}: expected {shape:?}, found {:?}",
                        t.shape()
                    )));
                }
                for (p, &v) in net.params[range].iter_mut().zip(t.data()) {
                    *p = T::of(v as f64);
                }
            }
        }
        Ok(net)
    }
}

fn split_grads<'a, T>(grads: &'a mut [T], slot: &LayerSlot) -> (&'a mut [T], &'a mut [T]) {
    debug_assert_eq!(slot.weight.end, slot.bias.start);
    let (w, b) = grads[slot.weight.start..slot.bias.end].split_at_mut(slot.weight.len());
    (w, b)
}

fn planes<T: Real>(v: &[C64], scale: f64) -> Vec<T> {
    v.iter()
        .flat_map(|c| [T::of(c.re * scale), T::of(c.im * scale)])
        .collect()
}
