//! Delay-spread-adaptive estimation: a generalist pre-estimate, a delay
//! class decision on its impulse response, and a rerun with the matching
//! specialist network.

use std::cell::Cell;

use crate::channel::{CirProfile, ClassTemplates, DelayClass};
use crate::dsp::{ifft, C64};
use crate::error::{Error, Result};
use crate::estimators::PilotObservation;
use crate::nn::{Net, Real};

/// Anything mapping pilot observations to a full-band response estimate.
pub trait ChannelNet {
    fn predict(&self, obs: &PilotObservation) -> Result<Vec<C64>>;
}

impl<T: Real> ChannelNet for Net<T> {
    fn predict(&self, obs: &PilotObservation) -> Result<Vec<C64>> {
        Net::predict(self, obs)
    }
}

/// Wraps a network and counts its forward passes.
#[derive(Debug)]
pub struct Counted<N> {
    pub inner: N,
    calls: Cell<usize>,
}

impl<N> Counted<N> {
    pub fn new(inner: N) -> Self {
        Self {
            inner,
            calls: Cell::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.get()
    }
}

impl<N: ChannelNet> ChannelNet for Counted<N> {
    fn predict(&self, obs: &PilotObservation) -> Result<Vec<C64>> {
        self.calls.set(self.calls.get() + 1);
        self.inner.predict(obs)
    }
}

/// Three class networks and the template pair that picks between them.
#[derive(Debug, Clone)]
pub struct SelectorBank<N> {
    lds: N,
    mds: N,
    hds: N,
    templates: ClassTemplates,
    l_cp: usize,
}

impl<N: ChannelNet> SelectorBank<N> {
    /// `templates` already guarantees HDS thresholds above LDS ones; the
    /// compared taps must also fit inside the cyclic prefix.
    pub fn new(lds: N, mds: N, hds: N, templates: ClassTemplates, l_cp: usize) -> Result<Self> {
        if templates.n_tail() > l_cp {
            return Err(Error::Config(format!(
                "templates compare {} tail taps, cyclic prefix has {l_cp}",
                templates.n_tail()
            )));
        }
        Ok(Self {
            lds,
            mds,
            hds,
            templates,
            l_cp,
        })
    }

    pub fn net(&self, class: DelayClass) -> &N {
        match class {
            DelayClass::Lds => &self.lds,
            DelayClass::Mds => &self.mds,
            DelayClass::Hds => &self.hds,
        }
    }

    pub fn templates(&self) -> &ClassTemplates {
        &self.templates
    }

    pub fn l_cp(&self) -> usize {
        self.l_cp
    }
}

/// Tap magnitudes `|h(0)|` and `|h(1)| .. |h(l_cp)|` of the inverse transform
/// of a full-band response.
pub fn estimate_cir_magnitudes(h: &[C64], l_cp: usize) -> Result<CirProfile> {
    if l_cp >= h.len() {
        return Err(Error::Config(format!(
            "l_cp = {l_cp} must be below the band size {}",
            h.len()
        )));
    }
    CirProfile::from_taps(&ifft(h), l_cp)
}

pub fn classify<N>(profile: &CirProfile, bank: &SelectorBank<N>) -> Result<DelayClass> {
    bank.templates.classify(profile)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveOutcome {
    pub estimate: Vec<C64>,
    pub decision: DelayClass,
    /// Whether a class network replaced the pre-estimate.
    pub reran: bool,
}

/// HDS pre-estimate, classification of its impulse response, and a rerun
/// with the LDS or MDS network when the profile falls in their region.
pub fn adaptive_estimate<N: ChannelNet>(obs: &PilotObservation, bank: &SelectorBank<N>) -> Result<AdaptiveOutcome> {
    let pre = bank.hds.predict(obs)?;
    adaptive_from_pre_estimate(obs, pre, bank)
}

/// [`adaptive_estimate`] with the HDS pre-estimate already computed.
pub fn adaptive_from_pre_estimate<N: ChannelNet>(
    obs: &PilotObservation,
    pre: Vec<C64>,
    bank: &SelectorBank<N>,
) -> Result<AdaptiveOutcome> {
    let decision = classify(&estimate_cir_magnitudes(&pre, bank.l_cp)?, bank)?;
    Ok(match decision {
        DelayClass::Hds => AdaptiveOutcome {
            estimate: pre,
            decision,
            reran: false,
        },
        c => AdaptiveOutcome {
            estimate: bank.net(c).predict(obs)?,
            decision,
            reran: true,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{ChannelRealization, PdpTemplate, TemplateScaling};

    /// Returns a fixed response regardless of input.
    struct Fixed(Vec<C64>);

    impl ChannelNet for Fixed {
        fn predict(&self, _: &PilotObservation) -> Result<Vec<C64>> {
            Ok(self.0.clone())
        }
    }

    fn bank(hds_out: Vec<C64>) -> SelectorBank<Counted<Fixed>> {
        let templates = ClassTemplates::new(
            PdpTemplate::default_lds(),
            PdpTemplate::default_hds(),
            TemplateScaling::LosRelative,
        )
        .unwrap();
        let one = vec![C64::new(1.0, 0.0); 324];
        SelectorBank::new(
            Counted::new(Fixed(one.clone())),
            Counted::new(Fixed(one.iter().map(|v| v * 2.0).collect())),
            Counted::new(Fixed(hds_out)),
            templates,
            7,
        )
        .unwrap()
    }

    fn obs() -> PilotObservation {
        PilotObservation::new(33, 4, vec![C64::new(0.0, 0.0); 132]).unwrap()
    }

    #[test]
    fn flat_pre_estimate_picks_lds_with_two_passes() {
        let b = bank(vec![C64::new(3e-6, 0.0); 324]);
        let out = adaptive_estimate(&obs(), &b).unwrap();
        assert_eq!(out.decision, DelayClass::Lds);
        assert!(out.reran);
        assert_eq!(out.estimate[0], C64::new(1.0, 0.0));
        assert_eq!(b.net(DelayClass::Hds).calls() + b.net(DelayClass::Lds).calls(), 2);
    }

    #[test]
    fn dispersive_pre_estimate_keeps_hds_with_one_pass() {
        let h = ChannelRealization::two_path(1.0, 0.5, 2.0)
            .frequency_response(324)
            .unwrap();
        let b = bank(h.clone());
        let out = adaptive_estimate(&obs(), &b).unwrap();
        assert_eq!(out.decision, DelayClass::Hds);
        assert!(!out.reran);
        assert_eq!(out.estimate, h);
        let total: usize = DelayClass::ALL.iter().map(|&c| b.net(c).calls()).sum();
        assert_eq!(total, 1);
    }

    #[test]
    fn cir_profile_of_integer_delay() {
        let h = ChannelRealization::two_path(2.0, 0.5, 2.0)
            .frequency_response(324)
            .unwrap();
        let p = estimate_cir_magnitudes(&h, 7).unwrap();
        assert_eq!(p.tail.len(), 7);
        assert!((p.los - 2.0).abs() < 1e-12);
        assert!((p.tail[1] - 0.5).abs() < 1e-9);
        assert!(p.tail.iter().enumerate().all(|(i, &m)| i == 1 || m < 1e-12));
        assert!(estimate_cir_magnitudes(&h, 324).is_err());
    }

    #[test]
    fn bank_rejects_templates_longer_than_prefix() {
        let t = ClassTemplates::new(
            PdpTemplate::default_lds(),
            PdpTemplate::default_hds(),
            TemplateScaling::Absolute,
        )
        .unwrap();
        let f = || Fixed(vec![]);
        assert!(SelectorBank::new(f(), f(), f(), t, 3).is_err());
    }
}
