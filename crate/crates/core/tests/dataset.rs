//! Corpus generation: labels, determinism and the on-disk format.

use owc_core::channel::DelayClass;
use owc_core::config::SystemConfig;
use owc_core::dataset::{
    generate_dataset, generate_samples, label_of_response, rejection_sample_class, split_dataset, CorpusClass, Dataset,
    HEADER_LEN,
};

#[test]
fn class_conditioned_draws_are_pure_and_not_rare() {
    let cfg = SystemConfig::default();
    let templates = cfg.templates().unwrap();
    for class in DelayClass::ALL {
        let mut attempts = 0;
        for seed in 0..1_000 {
            let ch = rejection_sample_class(&cfg, class, seed).unwrap();
            assert_eq!(ch.label, class);
            assert_eq!(label_of_response(&ch.response, &templates).unwrap(), class);
            attempts += ch.attempts;
        }
        let rate = 1_000.0 / attempts as f64;
        assert!(rate > 0.01, "{class}: acceptance {rate}");
    }
}

#[test]
fn reruns_write_identical_bytes() {
    let cfg = SystemConfig::default();
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.owcd"), dir.path().join("b.owcd"));
    for p in [&a, &b] {
        generate_dataset(&cfg, CorpusClass::Only(DelayClass::Mds), 100, (15.0, 30.0), 11, p).unwrap();
    }
    let bytes = std::fs::read(&a).unwrap();
    assert_eq!(bytes, std::fs::read(&b).unwrap());
    assert_eq!(bytes.len(), HEADER_LEN + 100 * (33 * 4 + 324) * 8 + 100 * 5);
    assert_eq!(&bytes[..4], b"OWCD");

    let ds = Dataset::load(&a).unwrap();
    assert!(ds.samples.iter().all(|s| (15.0..30.0).contains(&s.snr_db)));
    let templates = cfg.templates().unwrap();
    for s in &ds.samples {
        assert_eq!(label_of_response(&s.true_h, &templates).unwrap(), s.label);
    }
}

#[test]
fn noiseless_observations_equal_the_response() {
    let cfg = SystemConfig::default();
    let pattern = cfg.pattern().unwrap();
    let ds = generate_samples(&cfg, CorpusClass::Mixed, 20, (f64::INFINITY, f64::INFINITY), 5).unwrap();
    for s in &ds.samples {
        for (i, &k) in pattern.tones.iter().enumerate() {
            for sym in 0..4 {
                let e = s.pilot_ls.get(i, sym);
                assert!((e - s.true_h[k]).norm() <= 1e-9 * s.true_h[k].norm());
            }
        }
    }
}

#[test]
fn file_split_is_disjoint_and_exhaustive() {
    let cfg = SystemConfig::default();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mixed.owcd");
    generate_dataset(&cfg, CorpusClass::Mixed, 40, (20.0, 20.0), 3, &path).unwrap();
    let (train, val) = split_dataset(&path, 0.95).unwrap();
    assert_eq!((train.len(), val.len()), (38, 2));
    let all = Dataset::load(&path).unwrap().samples;
    let mut seen = vec![false; all.len()];
    for s in train.iter().chain(&val) {
        let i = all.iter().position(|o| o == s).unwrap();
        assert!(!seen[i]);
        seen[i] = true;
    }
    assert!(seen.iter().all(|&b| b));
}
