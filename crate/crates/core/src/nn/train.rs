use rand::seq::SliceRandom;

use super::adam::{learning_rate, Adam};
use super::net::{Net, Workspace};
use super::real::Real;
use crate::dsp::C64;
use crate::error::{Error, Result};
use crate::estimators::PilotObservation;
use crate::rng::{domain, substream};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub lr0: f64,
    /// Multiplicative learning-rate drop applied every `decay_every` epochs.
    pub lr_decay: f64,
    pub decay_every: usize,
    pub epochs: usize,
    pub batch: usize,
    /// Coefficient of the squared kernel norm added to the loss.
    pub l2: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr0: 2e-4,
            lr_decay: 0.3,
            decay_every: 10,
            epochs: 100,
            batch: 64,
            l2: 1e-9,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [("lr0", self.lr0), ("lr_decay", self.lr_decay)];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Domain {
                    name,
                    value: v,
                    expected: "(0, inf)",
                });
            }
        }
        if !(self.l2 >= 0.0) {
            return Err(Error::Domain {
                name: "l2",
                value: self.l2,
                expected: "[0, inf)",
            });
        }
        if self.epochs == 0 || self.batch == 0 || self.decay_every == 0 {
            return Err(Error::Config("epochs, batch and decay_every must be at least 1".into()));
        }
        Ok(())
    }
}

/// Inputs and targets already scaled into a network's normalized units.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet<T> {
    x: Vec<T>,
    y: Vec<T>,
    input_len: usize,
    output_len: usize,
}

impl<T: Real> TrainingSet<T> {
    pub fn encode<'a, I>(net: &Net<T>, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a PilotObservation, &'a [C64])>,
    {
        let (mut x, mut y) = (Vec::new(), Vec::new());
        for (obs, h) in pairs {
            x.extend(net.encode_input(obs)?);
            y.extend(net.encode_target(h)?);
        }
        Ok(Self {
            x,
            y,
            input_len: net.input_len(),
            output_len: net.output_len(),
        })
    }

    pub fn len(&self) -> usize {
        self.x.len() / self.input_len
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Mean squared error of `net` over the set, without regularization.
    pub fn loss(&self, net: &Net<T>) -> f64 {
        const CHUNK: usize = 256;
        let mut ws = Workspace::default();
        let mut total = 0.0;
        for start in (0..self.len()).step_by(CHUNK) {
            let n = CHUNK.min(self.len() - start);
            let (l, _) = net.loss_and_grads_normalized(
                &self.x[start * self.input_len..(start + n) * self.input_len],
                &self.y[start * self.output_len..(start + n) * self.output_len],
                n,
                0.0,
                &mut ws,
            );
            total += l * n as f64;
        }
        total / self.len() as f64
    }
}

/// Root-mean-square magnitude over a corpus of responses; its reciprocal
/// brings the training targets to unit scale.
pub fn rms_magnitude<'a, I: IntoIterator<Item = &'a [C64]>>(responses: I) -> Result<f64> {
    let (mut sum, mut n) = (0.0, 0usize);
    for h in responses {
        sum += h.iter().map(|v| v.norm_sqr()).sum::<f64>();
        n += h.len();
    }
    if n == 0 || sum == 0.0 {
        return Err(Error::ZeroEnergy("training targets"));
    }
    Ok((sum / n as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub lr: f64,
    /// Sample-weighted mean of the regularized minibatch losses.
    pub train_loss: f64,
    pub val_loss: Option<f64>,
}

/// Minibatch Adam starting from `net`, reshuffling every epoch.
pub fn train<T: Real>(
    mut net: Net<T>,
    data: &TrainingSet<T>,
    val: Option<&TrainingSet<T>>,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochStats),
) -> Result<(Net<T>, Vec<EpochStats>)> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::Empty("training set"));
    }
    if data.input_len != net.input_len() || data.output_len != net.output_len() {
        return Err(Error::Shape("training set was encoded for a different network".into()));
    }
    let mut opt = Adam::new(net.param_count());
    let mut ws = Workspace::default();
    let mut order: Vec<usize> = (0..data.len()).collect();
    let (mut bx, mut by) = (Vec::new(), Vec::new());
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.sort_unstable();
        order.shuffle(&mut substream(cfg.seed, domain::SHUFFLE, epoch as u64));
        let lr = learning_rate(cfg.lr0, cfg.lr_decay, cfg.decay_every, epoch);
        let mut total = 0.0;
        for chunk in order.chunks(cfg.batch) {
            bx.clear();
            by.clear();
            for &i in chunk {
                bx.extend_from_slice(&data.x[i * data.input_len..(i + 1) * data.input_len]);
                by.extend_from_slice(&data.y[i * data.output_len..(i + 1) * data.output_len]);
            }
            let (loss, grads) = net.loss_and_grads_normalized(&bx, &by, chunk.len(), cfg.l2, &mut ws);
            if !loss.is_finite() {
                return Err(Error::Domain {
                    name: "training loss",
                    value: loss,
                    expected: "a finite value",
                });
            }
            total += loss * chunk.len() as f64;
            opt.step(net.params_mut(), &grads, lr);
        }
        let stats = EpochStats {
            epoch,
            lr,
            train_loss: total / data.len() as f64,
            val_loss: val.filter(|v| !v.is_empty()).map(|v| v.loss(&net)),
        };
        on_epoch(&stats);
        history.push(stats);
    }
    Ok((net, history))
}
