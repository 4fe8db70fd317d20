use owc_core::channel::DelayClass;
use owc_core::config::SystemConfig;
use owc_core::dataset::CorpusClass;
use owc_core::experiments::EstimatorKind;
use owc_core::nn::Net;
use owc_core::pipeline::default_architecture;
use owc_wasm::Session;

fn session() -> Session {
    Session::new(3).unwrap()
}

#[test]
fn drawn_channel_carries_requested_class() {
    let mut s = session();
    for (class, label) in [
        (CorpusClass::Only(DelayClass::Lds), DelayClass::Lds),
        (CorpusClass::Only(DelayClass::Hds), DelayClass::Hds),
    ] {
        let c = s.draw_channel(class, 11).unwrap();
        assert_eq!(c.label, label);
        assert_eq!(c.response_mag.len(), 163);
        assert!(c.taps.los > 0.0);
    }
}

#[test]
fn operations_need_a_channel_and_slot_first() {
    let mut s = session();
    assert!(s.compare(20.0, 1).is_err());
    assert!(s.constellation(EstimatorKind::Ls).is_err());
    s.draw_channel(CorpusClass::Mixed, 5).unwrap();
    assert!(s.constellation(EstimatorKind::Ls).is_err());
}

#[test]
fn high_snr_slot_gives_exact_pilots_and_clean_constellation() {
    let mut s = session();
    s.draw_channel(CorpusClass::Mixed, 2).unwrap();
    s.compare(80.0, 4).unwrap();
    assert!(s.pilot_error().unwrap() < 1e-6);
    let mmse = s.constellation(EstimatorKind::Mmse).unwrap();
    assert_eq!(mmse.ber, 0.0);
    let direct = s.constellation(EstimatorKind::Direct).unwrap();
    assert!(direct.ber > 0.2, "unequalized BER {}", direct.ber);
    assert_eq!(mmse.points.len(), direct.points.len());
}

#[test]
fn comparison_scores_classical_estimators_without_networks() {
    let mut s = session();
    s.draw_channel(CorpusClass::Only(DelayClass::Mds), 8).unwrap();
    let c = s.compare(30.0, 9).unwrap();
    assert_eq!(
        c.estimators,
        [EstimatorKind::Ls, EstimatorKind::Mmse, EstimatorKind::Flat]
    );
    assert_eq!(c.curves.len(), 3);
    assert!(c.nmse.iter().all(|v| v.is_finite() && *v > 0.0));
    assert!(s.constellation(EstimatorKind::Adaptive).is_err());
}

#[test]
fn weights_enable_network_estimators() {
    let mut s = session();
    assert!(s.load_weights(b"junk", b"junk", b"junk").is_err());
    assert!(!s.has_networks());
    let arch = default_architecture(&SystemConfig::default()).unwrap();
    let bytes: Vec<Vec<u8>> = (0..3)
        .map(|i| {
            Net::<f32>::init(arch.clone(), 1e5, i)
                .unwrap()
                .to_weights()
                .to_bytes()
                .unwrap()
        })
        .collect();
    s.load_weights(&bytes[0], &bytes[1], &bytes[2]).unwrap();
    s.draw_channel(CorpusClass::Mixed, 1).unwrap();
    let c = s.compare(25.0, 2).unwrap();
    assert_eq!(c.estimators.len(), 5);
    assert!(c.nmse.iter().all(|v| v.is_finite()));
}
