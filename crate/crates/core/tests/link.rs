//! Monte Carlo checks of the full transmit, channel and receive chain.

use owc_core::channel::{sample_realization, ChannelRealization, ScenarioConfig};
use owc_core::config::SystemConfig;
use owc_core::dsp::C64;
use owc_core::estimators::{ls_noise_variance, ls_pilots, mmse_estimate};
use owc_core::link::transmit_slot;
use owc_core::metrics::bit_errors;
use owc_core::ofdm::{apply_response, equalize_and_decode, ModemConfig, PilotPattern};
use owc_core::pipeline::build_correlations;
use owc_core::rng::{domain, substream};

fn setup() -> (ModemConfig, PilotPattern) {
    let m = ModemConfig::default();
    let p = PilotPattern::from_config(&m).unwrap();
    (m, p)
}

fn slot(h: &[C64], snr: f64, seed: u64, t: u64) -> owc_core::link::SlotRecord {
    let (m, p) = setup();
    transmit_slot(
        h,
        snr,
        &m,
        &p,
        &mut substream(seed, domain::BITS, t),
        &mut substream(seed, domain::NOISE, t),
    )
    .unwrap()
}

#[test]
fn three_sigma_bias_rarely_clips() {
    let h = ChannelRealization::flat(1e-6).frequency_response(324).unwrap();
    let clipped: usize = (0..100).map(|t| slot(&h, 20.0, 1, t).clipped).sum();
    let rate = clipped as f64 / (100.0 * 14.0 * 331.0);
    assert!(rate < 0.005, "clip rate {rate}");
}

#[test]
fn added_noise_has_requested_variance() {
    let (m, _) = setup();
    let h = vec![C64::new(1.0, 0.0); 324];
    let zeros = vec![0.0; m.samples_per_slot()];
    let mut rng = substream(2, domain::NOISE, 0);
    let (mut sum, mut sq, mut n) = (0.0, 0.0, 0usize);
    while n < 1_000_000 {
        for v in apply_response(&zeros, &h, &m, 0.3, &mut rng).unwrap() {
            sum += v;
            sq += v * v;
            n += 1;
        }
    }
    let mean = sum / n as f64;
    let var = sq / n as f64 - mean * mean;
    assert!((var / 0.09 - 1.0).abs() < 0.01, "variance {var}");
}

#[test]
fn measured_snr_matches_target() {
    let cfg = ScenarioConfig::default();
    let (_, p) = setup();
    let (mut sig, mut noise) = (0.0, 0.0);
    for t in 0..1_000 {
        let h = sample_realization(&cfg, 900 + t)
            .unwrap()
            .frequency_response(324)
            .unwrap();
        let clean = slot(&h, f64::INFINITY, 3, t);
        let noisy = slot(&h, 20.0, 3, t);
        // Used tones only: bin 0 holds the leftover bias and pilot symbols
        // leave most tones empty.
        for sym in 0..14 {
            let pilot = p.symbols.contains(&sym);
            for k in (1..324).filter(|&k| k != 162) {
                if pilot && !p.tones.contains(&k.min(324 - k)) {
                    continue;
                }
                let (c, y) = (clean.rx.get(k, sym), noisy.rx.get(k, sym));
                sig += c.norm_sqr();
                noise += (y - c).norm_sqr();
            }
        }
    }
    let measured = 10.0 * (sig / noise).log10();
    assert!((measured - 20.0).abs() < 0.2, "measured {measured} dB");
}

#[test]
fn conjugated_estimate_scrambles_bits() {
    let (m, _) = setup();
    let h = ChannelRealization::two_path(1e-6, 9e-7, 3.0)
        .frequency_response(324)
        .unwrap();
    let conj: Vec<C64> = h.iter().map(|v| v.conj()).collect();
    let (mut errs, mut bits) = (0, 0);
    for t in 0..20 {
        let s = slot(&h, 30.0, 4, t);
        let rx = equalize_and_decode(&s.rx, &conj, &m).unwrap();
        errs += bit_errors(&rx, &s.tx_bits).unwrap();
        bits += rx.len();
    }
    let ber = errs as f64 / bits as f64;
    assert!(ber > 0.3 && ber < 0.55, "ber {ber}");
}

#[test]
fn mmse_ber_falls_with_snr() {
    let cfg = SystemConfig::default();
    let (m, p) = setup();
    let corr = build_correlations(&cfg, 20_000, 77).unwrap();
    let trials = 10_000u64;
    let mut points = Vec::new();
    for snr in [15.0, 20.0, 25.0, 30.0] {
        let mut errs = 0usize;
        for t in 0..trials {
            let h = sample_realization(&cfg.scenario, 50_000 + t)
                .unwrap()
                .frequency_response(324)
                .unwrap();
            let s = slot(&h, snr, 5, t);
            let h_ls = ls_pilots(&s.rx, &p).unwrap().averaged();
            let est = mmse_estimate(&h_ls, &corr, ls_noise_variance(s.bin_noise_var, &p)).unwrap();
            errs += bit_errors(&equalize_and_decode(&s.rx, &est, &m).unwrap(), &s.tx_bits).unwrap();
        }
        let n = (trials as usize * m.bits_per_slot()) as f64;
        let ber = errs as f64 / n;
        points.push((ber, (ber * (1.0 - ber) / n).sqrt()));
    }
    let mut inversions = 0;
    for w in points.windows(2) {
        let ((a, sa), (b, sb)) = (w[0], w[1]);
        if b > a {
            inversions += 1;
            assert!(b - a < 2.0 * (sa * sa + sb * sb).sqrt(), "{points:?}");
        }
    }
    assert!(inversions <= 1, "{points:?}");
}
