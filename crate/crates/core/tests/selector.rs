//! Adaptive selection against true channels and counting networks.

use std::cell::RefCell;

use owc_core::channel::{label_class, sample_realization, ClassTemplates, DelayClass, PdpTemplate, TemplateScaling};
use owc_core::config::SystemConfig;
use owc_core::dataset::rejection_sample_class;
use owc_core::dsp::C64;
use owc_core::estimators::PilotObservation;
use owc_core::selector::{adaptive_estimate, classify, estimate_cir_magnitudes, ChannelNet, Counted, SelectorBank};
use owc_core::Result;

/// Returns whatever response the test last handed it.
#[derive(Default)]
struct Genie(RefCell<Vec<C64>>);

impl ChannelNet for Genie {
    fn predict(&self, _: &PilotObservation) -> Result<Vec<C64>> {
        Ok(self.0.borrow().clone())
    }
}

fn bank(cfg: &SystemConfig) -> SelectorBank<Counted<Genie>> {
    let n = || Counted::new(Genie::default());
    SelectorBank::new(n(), n(), n(), cfg.templates().unwrap(), cfg.modem.l_cp).unwrap()
}

#[test]
fn true_response_classification_matches_labels() {
    let cfg = SystemConfig::default();
    let bank = bank(&cfg);
    let templates = cfg.templates().unwrap();
    let mut counts = [0usize; 3];
    for seed in 0..10_000 {
        let ch = sample_realization(&cfg.scenario, seed).unwrap();
        let label = label_class(&ch.impulse_taps(324, 324).unwrap(), &templates).unwrap();
        let h = ch.frequency_response(324).unwrap();
        let decided = classify(&estimate_cir_magnitudes(&h, cfg.modem.l_cp).unwrap(), &bank).unwrap();
        assert_eq!(decided, label, "seed {seed}");
        counts[label.code() as usize] += 1;
    }
    assert!(counts.iter().all(|&c| c > 0), "{counts:?}");
}

#[test]
fn at_most_two_forward_passes_per_slot() {
    let cfg = SystemConfig::default();
    let bank = bank(&cfg);
    let obs = PilotObservation::new(33, 4, vec![C64::new(1.0, 0.0); 132]).unwrap();
    let mut seen = [false; 3];
    for i in 0..300 {
        let class = DelayClass::ALL[i % 3];
        let ch = rejection_sample_class(&cfg, class, i as u64).unwrap();
        for c in DelayClass::ALL {
            *bank.net(c).inner.0.borrow_mut() = ch.response.clone();
        }
        let before: Vec<usize> = DelayClass::ALL.iter().map(|&c| bank.net(c).calls()).collect();
        let out = adaptive_estimate(&obs, &bank).unwrap();
        let after: Vec<usize> = DelayClass::ALL.iter().map(|&c| bank.net(c).calls()).collect();
        let passes: usize = after.iter().zip(&before).map(|(a, b)| a - b).sum();

        assert_eq!(out.decision, class);
        assert_eq!(after[2] - before[2], 1, "HDS runs first, exactly once");
        assert_eq!(passes, if class == DelayClass::Hds { 1 } else { 2 });
        assert_eq!(out.reran, class != DelayClass::Hds);
        seen[class.code() as usize] = true;
    }
    assert_eq!(seen, [true; 3]);
}

#[test]
fn inverted_templates_are_rejected() {
    let lds = PdpTemplate::default_lds();
    let hds = PdpTemplate::default_hds();
    assert!(ClassTemplates::new(hds.clone(), lds.clone(), TemplateScaling::LosRelative).is_err());
    assert!(ClassTemplates::new(lds.clone(), lds, TemplateScaling::Absolute).is_err());
    assert!(ClassTemplates::new(PdpTemplate::default_lds(), hds, TemplateScaling::Absolute).is_ok());
}

#[test]
fn decision_is_scale_invariant() {
    let cfg = SystemConfig::default();
    let t = cfg.templates().unwrap();
    for seed in 0..500 {
        let h = sample_realization(&cfg.scenario, 20_000 + seed)
            .unwrap()
            .frequency_response(324)
            .unwrap();
        let p = estimate_cir_magnitudes(&h, 7).unwrap();
        let base = t.classify(&p).unwrap();
        for c in [1e-3, 3.7, 1e4] {
            let scaled_h: Vec<C64> = h.iter().map(|v| v * c).collect();
            let q = estimate_cir_magnitudes(&scaled_h, 7).unwrap();
            let t2 = ClassTemplates::new(t.lds().scaled(c), t.hds().scaled(c), t.scaling()).unwrap();
            assert_eq!(t2.classify(&q).unwrap(), base, "seed {seed} scale {c}");
        }
    }
}
