//! Glue between corpora, correlation statistics and network training.

use std::path::Path;

use crate::channel::sample_realization;
use crate::config::SystemConfig;
use crate::dataset::{Dataset, Sample};
use crate::error::Result;
use crate::estimators::{CorrelationAccumulator, CorrelationSet};
use crate::nn::{rms_magnitude, train, Architecture, EpochStats, Net, TensorFile, TrainConfig, TrainingSet};
use crate::rng::{derive_seed, domain};
use crate::selector::SelectorBank;

/// Share of each corpus used for training; the rest is validation.
pub const TRAIN_RATIO: f64 = 0.95;

/// Ensemble correlations over `count` unconditioned channels.
pub fn build_correlations(cfg: &SystemConfig, count: usize, seed: u64) -> Result<CorrelationSet> {
    let pattern = cfg.pattern()?;
    let mut acc = CorrelationAccumulator::new(&pattern, cfg.modem.n_f);
    for i in 0..count as u64 {
        let ch = sample_realization(&cfg.scenario, derive_seed(seed, domain::CORRELATION, i))?;
        acc.add(&ch.frequency_response(cfg.modem.n_f)?)?;
    }
    acc.finish()
}

pub fn default_architecture(cfg: &SystemConfig) -> Result<Architecture> {
    Architecture::for_pattern(&cfg.pattern()?, cfg.modem.n_f)
}

/// Trains one network on `train_set`, scaling data by the reciprocal RMS
/// magnitude of its targets.
pub fn train_on_samples(
    arch: Architecture,
    train_set: &[&Sample],
    val_set: &[&Sample],
    tc: &TrainConfig,
    on_epoch: impl FnMut(&EpochStats),
) -> Result<(Net<f32>, Vec<EpochStats>)> {
    let rms = rms_magnitude(train_set.iter().map(|s| s.true_h.as_slice()))?;
    let net = Net::<f32>::init(arch, 1.0 / rms, tc.seed)?;
    let pairs = |set: &[&Sample]| -> Result<TrainingSet<f32>> {
        TrainingSet::encode(&net, set.iter().map(|s| (&s.pilot_ls, s.true_h.as_slice())))
    };
    let (tr, va) = (pairs(train_set)?, pairs(val_set)?);
    train(net, &tr, Some(&va), tc, on_epoch)
}

/// Splits a corpus 95/5 and trains on it.
pub fn train_on_dataset(
    cfg: &SystemConfig,
    ds: &Dataset,
    tc: &TrainConfig,
    on_epoch: impl FnMut(&EpochStats),
) -> Result<(Net<f32>, Vec<EpochStats>)> {
    let (tr, va) = ds.split(TRAIN_RATIO)?;
    train_on_samples(default_architecture(cfg)?, &tr, &va, tc, on_epoch)
}

pub fn load_net(path: &Path, arch: &Architecture) -> Result<Net<f32>> {
    Net::from_weights(&TensorFile::load(path)?, Some(arch))
}

/// Loads the three class networks; the templates come from `cfg`.
pub fn load_bank(cfg: &SystemConfig, lds: &Path, mds: &Path, hds: &Path) -> Result<SelectorBank<Net<f32>>> {
    let arch = default_architecture(cfg)?;
    SelectorBank::new(
        load_net(lds, &arch)?,
        load_net(mds, &arch)?,
        load_net(hds, &arch)?,
        cfg.templates()?,
        cfg.modem.l_cp,
    )
}

/// Bank from networks already in memory, in LDS, MDS, HDS order.
pub fn bank_from_nets(cfg: &SystemConfig, nets: [Net<f32>; 3]) -> Result<SelectorBank<Net<f32>>> {
    let [lds, mds, hds] = nets;
    SelectorBank::new(lds, mds, hds, cfg.templates()?, cfg.modem.l_cp)
}
