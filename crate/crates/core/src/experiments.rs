//! Monte Carlo experiments: NMSE against SNR, NMSE along a class schedule,
//! and BER against SNR. Every trial draws its channel, data and noise from
//! counter-based streams keyed by the trial index, so all estimators and all
//! SNR points see the same channels.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::Serialize;

use crate::channel::{sample_realization, DelayClass};
use crate::config::SystemConfig;
use crate::dataset::rejection_sample_class;
use crate::dsp::{hermitian_fold, C64};
use crate::error::{Error, Result};
use crate::estimators::{
    direct_detection_gain, ls_interpolate, ls_noise_variance, ls_pilots, mmse_estimate, CorrelationSet,
};
use crate::link::{transmit_slot, SlotRecord};
use crate::metrics::{bit_errors, nmse, MeanStat};
use crate::ofdm::{equalize_and_decode, PilotPattern};
use crate::rng::{derive_seed, domain, substream};
use crate::selector::{adaptive_from_pre_estimate, ChannelNet, SelectorBank};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EstimatorKind {
    /// Averaged pilot LS, linearly interpolated over the band.
    Ls,
    Mmse,
    /// HDS network applied to every slot.
    HdsOnly,
    Adaptive,
    /// No channel compensation at all (unit estimate).
    Direct,
    /// One complex gain from the pilot average applied to every tone.
    Flat,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 6] = [
        EstimatorKind::Ls,
        EstimatorKind::Mmse,
        EstimatorKind::HdsOnly,
        EstimatorKind::Adaptive,
        EstimatorKind::Direct,
        EstimatorKind::Flat,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EstimatorKind::Ls => "ls",
            EstimatorKind::Mmse => "mmse",
            EstimatorKind::HdsOnly => "hds_only",
            EstimatorKind::Adaptive => "adaptive",
            EstimatorKind::Direct => "direct",
            EstimatorKind::Flat => "flat",
        }
    }

    fn needs_nets(self) -> bool {
        matches!(self, EstimatorKind::HdsOnly | EstimatorKind::Adaptive)
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.to_ascii_lowercase().replace('-', "_");
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s || (s == "hds" && *k == EstimatorKind::HdsOnly))
            .ok_or_else(|| Error::Config(format!("unknown estimator `{s}`")))
    }
}

/// Everything the estimators need besides the received slot.
pub struct EstimatorSet<'a, N> {
    pub pattern: PilotPattern,
    pub n_f: usize,
    pub correlations: Option<&'a CorrelationSet>,
    pub bank: Option<&'a SelectorBank<N>>,
}

impl<'a, N: ChannelNet> EstimatorSet<'a, N> {
    pub fn new(
        cfg: &SystemConfig,
        correlations: Option<&'a CorrelationSet>,
        bank: Option<&'a SelectorBank<N>>,
    ) -> Result<Self> {
        Ok(Self {
            pattern: cfg.pattern()?,
            n_f: cfg.modem.n_f,
            correlations,
            bank,
        })
    }

    /// Fails early if a requested estimator lacks its model files.
    pub fn check(&self, kinds: &[EstimatorKind]) -> Result<()> {
        if kinds.is_empty() {
            return Err(Error::Empty("estimator list"));
        }
        if kinds.contains(&EstimatorKind::Mmse) && self.correlations.is_none() {
            return Err(Error::Config("the mmse estimator needs a correlation file".into()));
        }
        if kinds.iter().any(|k| k.needs_nets()) && self.bank.is_none() {
            return Err(Error::Config(
                "network estimators need LDS, MDS and HDS weight files".into(),
            ));
        }
        Ok(())
    }

    /// Full-band estimates for `kinds` on one received slot, in order. The
    /// HDS network runs once even when both network estimators are asked for.
    pub fn estimate_all(&self, kinds: &[EstimatorKind], slot: &SlotRecord) -> Result<Vec<Vec<C64>>> {
        let obs = ls_pilots(&slot.rx, &self.pattern)?;
        let h_ls = obs.averaged();
        let mut pre: Option<Vec<C64>> = None;
        let mut out = Vec::with_capacity(kinds.len());
        for &k in kinds {
            let est = match k {
                EstimatorKind::Ls => ls_interpolate(&h_ls, &self.pattern, self.n_f)?,
                EstimatorKind::Mmse => {
                    let corr = self
                        .correlations
                        .ok_or_else(|| Error::Config("missing correlation set".into()))?;
                    let mut h = mmse_estimate(&h_ls, corr, ls_noise_variance(slot.bin_noise_var, &self.pattern))?;
                    hermitian_fold(&mut h);
                    h
                }
                EstimatorKind::HdsOnly | EstimatorKind::Adaptive => {
                    let bank = self.bank.ok_or_else(|| Error::Config("missing network bank".into()))?;
                    if pre.is_none() {
                        pre = Some(bank.net(DelayClass::Hds).predict(&obs)?);
                    }
                    let pre = pre.clone().unwrap();
                    if k == EstimatorKind::HdsOnly {
                        pre
                    } else {
                        adaptive_from_pre_estimate(&obs, pre, bank)?.estimate
                    }
                }
                EstimatorKind::Direct => vec![C64::new(1.0, 0.0); self.n_f],
                EstimatorKind::Flat => vec![direct_detection_gain(&slot.rx, &self.pattern)?; self.n_f],
            };
            out.push(est);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NmseSnrRow {
    pub snr_db: f64,
    pub estimator: String,
    /// Mean over trials of the per-slot NMSE.
    pub nmse_mean: f64,
    pub nmse_stderr: f64,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NmseTimeRow {
    pub t_s: usize,
    pub active_class: String,
    pub estimator: String,
    pub nmse_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BerRow {
    pub snr_db: f64,
    pub estimator: String,
    pub ber: f64,
    pub bits_counted: usize,
}

fn trial_slot(
    cfg: &SystemConfig,
    pattern: &PilotPattern,
    response: &[C64],
    snr_db: f64,
    seed: u64,
    trial: u64,
) -> Result<SlotRecord> {
    transmit_slot(
        response,
        snr_db,
        &cfg.modem,
        pattern,
        &mut substream(seed, domain::BITS, trial),
        &mut substream(seed, domain::NOISE, trial),
    )
}

fn mixed_response(cfg: &SystemConfig, seed: u64, trial: u64) -> Result<Vec<C64>> {
    sample_realization(&cfg.scenario, derive_seed(seed, domain::CHANNEL, trial))?.frequency_response(cfg.modem.n_f)
}

/// Mean NMSE per SNR point and estimator over fresh unconditioned channels.
pub fn run_nmse_vs_snr<N: ChannelNet>(
    cfg: &SystemConfig,
    est: &EstimatorSet<N>,
    kinds: &[EstimatorKind],
    snr_grid: &[f64],
    trials: usize,
    seed: u64,
) -> Result<Vec<NmseSnrRow>> {
    est.check(kinds)?;
    if trials == 0 || snr_grid.is_empty() {
        return Err(Error::Config("need at least one trial and one SNR point".into()));
    }
    let mut stats = vec![vec![MeanStat::default(); kinds.len()]; snr_grid.len()];
    for t in 0..trials as u64 {
        let h = mixed_response(cfg, seed, t)?;
        for (row, &snr) in stats.iter_mut().zip(snr_grid) {
            let slot = trial_slot(cfg, &est.pattern, &h, snr, seed, t)?;
            for (s, e) in row.iter_mut().zip(est.estimate_all(kinds, &slot)?) {
                s.push(nmse(&e, &h)?);
            }
        }
    }
    let mut rows = Vec::new();
    for (row, &snr) in stats.iter().zip(snr_grid) {
        for (s, k) in row.iter().zip(kinds) {
            rows.push(NmseSnrRow {
                snr_db: snr,
                estimator: k.to_string(),
                nmse_mean: s.mean(),
                nmse_stderr: s.stderr(),
                trials,
                seed,
            });
        }
    }
    Ok(rows)
}

/// Class active at second `t`: LDS, MDS, HDS in turn, `dwell_s` seconds each.
pub fn class_schedule(t: usize, dwell_s: usize) -> DelayClass {
    DelayClass::ALL[(t / dwell_s.max(1)) % 3]
}

/// One point per second; each averages `per_point` channels of the active class.
#[allow(clippy::too_many_arguments)]
pub fn run_nmse_vs_time<N: ChannelNet>(
    cfg: &SystemConfig,
    est: &EstimatorSet<N>,
    kinds: &[EstimatorKind],
    duration_s: usize,
    dwell_s: usize,
    per_point: usize,
    snr_db: f64,
    seed: u64,
) -> Result<Vec<NmseTimeRow>> {
    est.check(kinds)?;
    if duration_s == 0 || dwell_s == 0 || per_point == 0 {
        return Err(Error::Config(
            "duration, dwell and realizations must be at least 1".into(),
        ));
    }
    let mut rows = Vec::with_capacity(duration_s * kinds.len());
    for t in 0..duration_s {
        let class = class_schedule(t, dwell_s);
        let mut stats = vec![MeanStat::default(); kinds.len()];
        for r in 0..per_point {
            let trial = (t * per_point + r) as u64;
            let ch = rejection_sample_class(cfg, class, derive_seed(seed, domain::CHANNEL, trial))?;
            let h = ch.channel.frequency_response(cfg.modem.n_f)?;
            let slot = trial_slot(cfg, &est.pattern, &h, snr_db, seed, trial)?;
            for (s, e) in stats.iter_mut().zip(est.estimate_all(kinds, &slot)?) {
                s.push(nmse(&e, &h)?);
            }
        }
        for (s, k) in stats.iter().zip(kinds) {
            rows.push(NmseTimeRow {
                t_s: t,
                active_class: class.to_string(),
                estimator: k.to_string(),
                nmse_mean: s.mean(),
            });
        }
    }
    Ok(rows)
}

/// Mean and variance of each estimator's trace, in first-seen order.
pub fn trace_summary(rows: &[NmseTimeRow]) -> Vec<(String, f64, f64)> {
    let mut out: Vec<(String, MeanStat)> = Vec::new();
    for r in rows {
        match out.iter_mut().find(|(e, _)| *e == r.estimator) {
            Some((_, s)) => s.push(r.nmse_mean),
            None => {
                let mut s = MeanStat::default();
                s.push(r.nmse_mean);
                out.push((r.estimator.clone(), s));
            }
        }
    }
    out.into_iter().map(|(e, s)| (e, s.mean(), s.variance())).collect()
}

/// Uncoded BER after one-tap equalization with each estimate.
pub fn run_ber_vs_snr<N: ChannelNet>(
    cfg: &SystemConfig,
    est: &EstimatorSet<N>,
    kinds: &[EstimatorKind],
    snr_grid: &[f64],
    trials: usize,
    seed: u64,
) -> Result<Vec<BerRow>> {
    est.check(kinds)?;
    if trials == 0 || snr_grid.is_empty() {
        return Err(Error::Config("need at least one trial and one SNR point".into()));
    }
    let mut errors = vec![vec![0usize; kinds.len()]; snr_grid.len()];
    let mut bits = 0usize;
    for t in 0..trials as u64 {
        let h = mixed_response(cfg, seed, t)?;
        for (row, &snr) in errors.iter_mut().zip(snr_grid) {
            let slot = trial_slot(cfg, &est.pattern, &h, snr, seed, t)?;
            for (e, h_est) in row.iter_mut().zip(est.estimate_all(kinds, &slot)?) {
                *e += bit_errors(&equalize_and_decode(&slot.rx, &h_est, &cfg.modem)?, &slot.tx_bits)?;
            }
        }
        bits += cfg.modem.bits_per_slot();
    }
    let mut rows = Vec::new();
    for (row, &snr) in errors.iter().zip(snr_grid) {
        for (&e, k) in row.iter().zip(kinds) {
            rows.push(BerRow {
                snr_db: snr,
                estimator: k.to_string(),
                ber: e as f64 / bits as f64,
                bits_counted: bits,
            });
        }
    }
    Ok(rows)
}

/// Writes rows as CSV with a header line.
pub fn write_csv<W: Write, S: Serialize>(out: W, rows: &[S]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_cycles_every_dwell() {
        let seq: Vec<DelayClass> = (0..35).step_by(5).map(|t| class_schedule(t, 10)).collect();
        use DelayClass::*;
        assert_eq!(seq, vec![Lds, Lds, Mds, Mds, Hds, Hds, Lds]);
        assert_eq!(class_schedule(89, 10), Hds);
    }

    #[test]
    fn estimator_names_roundtrip() {
        for k in EstimatorKind::ALL {
            assert_eq!(k.as_str().parse::<EstimatorKind>().unwrap(), k);
        }
        assert_eq!("HDS".parse::<EstimatorKind>().unwrap(), EstimatorKind::HdsOnly);
        assert!("wiener".parse::<EstimatorKind>().is_err());
    }

    #[test]
    fn csv_has_header_and_rows() {
        let rows = vec![BerRow {
            snr_db: 20.0,
            estimator: "ls".into(),
            ber: 0.01,
            bits_counted: 9660,
        }];
        let mut buf = Vec::new();
        write_csv(&mut buf, &rows).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "snr_db,estimator,ber,bits_counted\n20.0,ls,0.01,9660\n"
        );
    }
}
