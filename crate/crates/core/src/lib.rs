//! Link-level simulation of indoor optical wireless DCO-OFDM with LS, MMSE
//! and delay-spread-adaptive neural channel estimation.

pub mod channel;
pub mod config;
pub mod dataset;
pub mod dsp;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod link;
pub mod metrics;
pub mod nn;
pub mod ofdm;
pub mod pipeline;
pub mod rng;
pub mod selector;

pub use error::{Error, Result};
