//! DCO-OFDM modem.

mod grid;
mod modem;
pub mod qam;

pub use grid::{ModemConfig, PilotPattern, ResourceGrid};
pub use modem::{
    apply_channel, apply_response, assemble_slot, demodulate, equalize_and_decode, modulate, noise_std_for_snr,
    random_bits, TxSignal, HERMITIAN_TOL,
};
pub use qam::{demap_qam64, map_qam64};
