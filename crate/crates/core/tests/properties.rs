//! Randomized invariants.

use owc_core::dsp::{hermitian_fold, ifft, C64};
use owc_core::estimators::{ls_interpolate, ls_pilots};
use owc_core::metrics::nmse;
use owc_core::nn::{Tensor, TensorFile};
use owc_core::ofdm::{assemble_slot, demap_qam64, map_qam64, ModemConfig, PilotPattern, ResourceGrid};
use proptest::prelude::*;

fn complex_vec(n: usize) -> impl Strategy<Value = Vec<C64>> {
    proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n)
        .prop_map(|v| v.into_iter().map(|(a, b)| C64::new(a, b)).collect())
}

fn hermitian(n: usize) -> impl Strategy<Value = Vec<C64>> {
    complex_vec(n).prop_map(|mut h| {
        h[0] += C64::new(3.0, 0.0);
        hermitian_fold(&mut h);
        h
    })
}

/// Noiseless received grid `H X` for a slot of zero data bits.
fn received(h: &[C64]) -> (ResourceGrid, PilotPattern) {
    let m = ModemConfig::default();
    let p = PilotPattern::from_config(&m).unwrap();
    let mut g = assemble_slot(&vec![0; m.bits_per_slot()], &p, &m).unwrap();
    for s in 0..m.n_s {
        for (v, hk) in g.symbol_mut(s).iter_mut().zip(h) {
            *v *= hk;
        }
    }
    (g, p)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn qam_roundtrip(bits in proptest::collection::vec(0u8..2, 0..60usize).prop_map(|mut b| { b.truncate(b.len() / 6 * 6); b })) {
        let s = map_qam64(&bits).unwrap();
        prop_assert_eq!(demap_qam64(&s), bits);
    }

    #[test]
    fn ls_is_equivariant(h in hermitian(324), re in -2.0f64..2.0, im in -2.0f64..2.0) {
        prop_assume!(re.abs() + im.abs() > 1e-3);
        let c = C64::new(re, im);
        let (g, p) = received(&h);
        let scaled: Vec<C64> = h.iter().map(|v| v * c).collect();
        let (gc, _) = received(&scaled);
        let a = ls_pilots(&g, &p).unwrap();
        let b = ls_pilots(&gc, &p).unwrap();
        for (x, y) in a.data().iter().zip(b.data()) {
            prop_assert!((x * c - y).norm() <= 1e-12 * (1.0 + y.norm()));
        }
    }

    #[test]
    fn nmse_closed_forms(h in complex_vec(32)) {
        prop_assume!(h.iter().any(|v| v.norm() > 1e-3));
        let zero = vec![C64::new(0.0, 0.0); 32];
        let twice: Vec<C64> = h.iter().map(|v| v * 2.0).collect();
        prop_assert_eq!(nmse(&h, &h).unwrap(), 0.0);
        prop_assert!((nmse(&zero, &h).unwrap() - 1.0).abs() < 1e-12);
        prop_assert!((nmse(&twice, &h).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn interpolation_reproduces_lines(a in -1.0f64..1.0, b in -0.01f64..0.01, c in -1.0f64..1.0) {
        let p = PilotPattern::from_config(&ModemConfig::default()).unwrap();
        let line = |k: usize| C64::new(a + b * k as f64, c - b * k as f64);
        let h_ls: Vec<C64> = p.tones.iter().map(|&k| line(k)).collect();
        let est = ls_interpolate(&h_ls, &p, 324).unwrap();
        for k in 1..=161 {
            prop_assert!((est[k] - line(k)).norm() < 1e-12);
            prop_assert!((est[324 - k] - line(k).conj()).norm() < 1e-12);
        }
    }

    #[test]
    fn folded_responses_have_real_taps(h in complex_vec(64)) {
        let mut h = h;
        hermitian_fold(&mut h);
        let again = { let mut g = h.clone(); hermitian_fold(&mut g); g };
        prop_assert_eq!(&again, &h);
        let scale = h.iter().map(|v| v.norm()).sum::<f64>() + 1.0;
        prop_assert!(ifft(&h).iter().all(|t| t.im.abs() < 1e-12 * scale));
    }

    #[test]
    fn tensor_files_roundtrip(
        tag in "[a-z0-9 =,]{0,40}",
        scale in proptest::num::f64::NORMAL,
        dims in proptest::collection::vec(1usize..5, 0..4),
        seed in any::<u32>(),
    ) {
        let n: usize = dims.iter().product();
        let data: Vec<f32> = (0..n).map(|i| (i as f32 + seed as f32).sin()).collect();
        let file = TensorFile {
            tag,
            scale,
            tensors: vec![("t".into(), Tensor::new(dims, data).unwrap())],
        };
        let bytes = file.to_bytes().unwrap();
        prop_assert_eq!(TensorFile::from_bytes(&bytes).unwrap(), file);
        prop_assert!(TensorFile::from_bytes(&bytes[..bytes.len() - 1]).is_err());
    }
}
