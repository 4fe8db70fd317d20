//! Framing and transform identities over many random slots and channels.

use owc_core::channel::{sample_realization, ChannelRealization, NlosPath, ScenarioConfig};
use owc_core::dsp::C64;
use owc_core::ofdm::{apply_response, assemble_slot, demodulate, modulate, random_bits, ModemConfig, PilotPattern};
use owc_core::rng::substream;
use rand::Rng;

fn random_grid(modem: &ModemConfig, seed: u64) -> owc_core::ofdm::ResourceGrid {
    let pattern = PilotPattern::from_config(modem).unwrap();
    let bits = random_bits(modem.bits_per_slot(), &mut substream(seed, 60, 0));
    assemble_slot(&bits, &pattern, modem).unwrap()
}

fn rel_err(a: &[C64], b: &[C64]) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    (d / b.iter().map(|v| v.norm_sqr()).sum::<f64>()).sqrt()
}

#[test]
fn hermitian_slots_modulate_to_real_signals() {
    let modem = ModemConfig::default();
    for seed in 0..1_000 {
        let tx = modulate(&random_grid(&modem, seed), &modem).unwrap();
        assert!(tx.imag_ratio < 1e-10, "seed {seed}: {:e}", tx.imag_ratio);
        assert_eq!(tx.samples.len(), 14 * 331);
    }
}

#[test]
fn modulation_roundtrip_without_clipping() {
    let modem = ModemConfig {
        bias_sigma: 8.0,
        ..ModemConfig::default()
    };
    for seed in 0..50 {
        let grid = random_grid(&modem, seed);
        let tx = modulate(&grid, &modem).unwrap();
        assert_eq!(tx.clipped, 0);
        let rx = demodulate(&tx.samples, tx.bias, &modem).unwrap();
        assert!(rel_err(rx.entries(), grid.entries()) < 1e-9);
    }
}

#[test]
fn integer_delay_channel_multiplies_each_tone() {
    let modem = ModemConfig {
        bias_sigma: 8.0,
        ..ModemConfig::default()
    };
    let mut r = substream(5, 61, 0);
    for seed in 0..50 {
        let ch = ChannelRealization {
            h_los: 1e-6 * (1.0 + r.random::<f64>()),
            nlos: (0..2)
                .map(|_| NlosPath {
                    gain: 1e-6 * r.random::<f64>(),
                    delay: r.random_range(1..=modem.l_cp) as f64,
                })
                .collect(),
        };
        let h = ch.frequency_response(modem.n_f).unwrap();
        let grid = random_grid(&modem, seed);
        let tx = modulate(&grid, &modem).unwrap();
        let rx = apply_response(&tx.samples, &h, &modem, 0.0, &mut r).unwrap();
        let y = demodulate(&rx, tx.bias, &modem).unwrap();
        for s in 0..modem.n_s {
            // Bin 0 carries the leftover bias (the receiver cannot know H_0).
            let want: Vec<C64> = (1..modem.n_f).map(|k| grid.get(k, s) * h[k]).collect();
            let got: Vec<C64> = (1..modem.n_f).map(|k| y.get(k, s)).collect();
            assert!(rel_err(&got, &want) < 1e-9);
        }
    }
}

/// Closed-form taps of a sum of band-limited paths: bins `-(N/2-1)..N/2-1`
/// give a Dirichlet kernel and the real Nyquist bin adds `cos(pi x)`.
fn closed_form_taps(ch: &ChannelRealization, n_f: usize) -> Vec<f64> {
    let n = n_f as f64;
    (0..n_f)
        .map(|i| {
            let mut t = if i == 0 { ch.h_los } else { 0.0 };
            for p in &ch.nlos {
                let x = i as f64 - p.delay;
                let s = (std::f64::consts::PI * x / n).sin();
                let kernel = if s.abs() < 1e-12 {
                    n - 1.0
                } else {
                    (std::f64::consts::PI * (n - 1.0) * x / n).sin() / s
                };
                t += p.gain * (kernel + (std::f64::consts::PI * x).cos()) / n;
            }
            t
        })
        .collect()
}

#[test]
fn taps_and_response_are_dual_and_energy_preserving() {
    let cfg = ScenarioConfig::default();
    for seed in 0..1_000 {
        let ch = sample_realization(&cfg, seed).unwrap();
        let h = ch.frequency_response(324).unwrap();
        let taps = ch.impulse_taps(324, 324).unwrap();
        let want: Vec<C64> = closed_form_taps(&ch, 324)
            .into_iter()
            .map(|t| C64::new(t, 0.0))
            .collect();
        assert!(rel_err(&taps, &want) < 1e-9, "seed {seed}");
        let freq: f64 = h.iter().map(|v| v.norm_sqr()).sum::<f64>() / 324.0;
        let time: f64 = taps.iter().map(|v| v.norm_sqr()).sum();
        assert!((freq - time).abs() < 1e-9 * time);
        assert!(taps.iter().all(|t| t.im.abs() < 1e-12 * taps[0].norm()));
    }
}
