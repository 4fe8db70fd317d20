//! One slot through the full transmit chain: random data, pilots, DCO-OFDM
//! modulation, channel, noise and demodulation.

use rand::Rng;

use crate::dsp::C64;
use crate::error::Result;
use crate::ofdm::{
    apply_response, assemble_slot, demodulate, modulate, noise_std_for_snr, random_bits, ModemConfig, PilotPattern,
    ResourceGrid,
};

#[derive(Debug, Clone)]
pub struct SlotRecord {
    pub tx_bits: Vec<u8>,
    pub rx: ResourceGrid,
    /// Noise variance per frequency bin after the forward transform.
    pub bin_noise_var: f64,
    /// Transmit samples clipped at zero.
    pub clipped: usize,
}

/// Sends one random slot through `response` at `snr_db` per used tone.
/// An infinite SNR gives a noiseless slot.
pub fn transmit_slot<B: Rng + ?Sized, N: Rng + ?Sized>(
    response: &[C64],
    snr_db: f64,
    modem: &ModemConfig,
    pattern: &PilotPattern,
    bits_rng: &mut B,
    noise_rng: &mut N,
) -> Result<SlotRecord> {
    let tx_bits = random_bits(modem.bits_per_slot(), bits_rng);
    let grid = assemble_slot(&tx_bits, pattern, modem)?;
    let tx = modulate(&grid, modem)?;
    let noise_std = if snr_db == f64::INFINITY {
        0.0
    } else {
        noise_std_for_snr(&grid, response, snr_db)?
    };
    let rx = apply_response(&tx.samples, response, modem, noise_std, noise_rng)?;
    Ok(SlotRecord {
        tx_bits,
        rx: demodulate(&rx, tx.bias, modem)?,
        bin_noise_var: modem.n_f as f64 * noise_std * noise_std,
        clipped: tx.clipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ChannelRealization;
    use crate::estimators::ls_estimate;
    use crate::ofdm::equalize_and_decode;
    use crate::rng::{domain, substream};

    #[test]
    fn noiseless_slot_decodes_with_true_response() {
        let modem = ModemConfig::default();
        let pattern = PilotPattern::from_config(&modem).unwrap();
        let h = ChannelRealization::two_path(2e-6, 5e-7, 1.3)
            .frequency_response(modem.n_f)
            .unwrap();
        let slot = transmit_slot(
            &h,
            f64::INFINITY,
            &modem,
            &pattern,
            &mut substream(1, domain::BITS, 0),
            &mut substream(1, domain::NOISE, 0),
        )
        .unwrap();
        assert_eq!(slot.bin_noise_var, 0.0);
        let bits = equalize_and_decode(&slot.rx, &h, &modem).unwrap();
        assert_eq!(bits, slot.tx_bits);
        let ls = ls_estimate(&slot.rx, &pattern).unwrap();
        for (e, &k) in ls.iter().zip(&pattern.tones) {
            assert!((e - h[k]).norm() < 1e-9 * h[k].norm());
        }
    }
}
