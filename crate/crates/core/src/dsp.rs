//! Discrete Fourier transforms with the conventions used throughout:
//! the forward transform is unnormalized, the inverse carries `1/n`.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub type C64 = Complex64;

type Plans = (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>);

thread_local! {
    static PLANS: RefCell<(FftPlanner<f64>, HashMap<usize, Plans>)> =
        RefCell::new((FftPlanner::new(), HashMap::new()));
}

fn plans(n: usize) -> Plans {
    PLANS.with(|cell| {
        let (planner, cache) = &mut *cell.borrow_mut();
        cache
            .entry(n)
            .or_insert_with(|| (planner.plan_fft_forward(n), planner.plan_fft_inverse(n)))
            .clone()
    })
}

/// In-place forward DFT, `X_k = sum_n x_n e^{-j 2 pi k n / N}`.
pub fn fft_in_place(buf: &mut [C64]) {
    if buf.is_empty() {
        return;
    }
    plans(buf.len()).0.process(buf);
}

/// In-place inverse DFT including the `1/N` factor.
pub fn ifft_in_place(buf: &mut [C64]) {
    if buf.is_empty() {
        return;
    }
    let n = buf.len();
    plans(n).1.process(buf);
    let scale = 1.0 / n as f64;
    for v in buf.iter_mut() {
        *v *= scale;
    }
}

pub fn fft(input: &[C64]) -> Vec<C64> {
    let mut buf = input.to_vec();
    fft_in_place(&mut buf);
    buf
}

pub fn ifft(input: &[C64]) -> Vec<C64> {
    let mut buf = input.to_vec();
    ifft_in_place(&mut buf);
    buf
}

/// Squared Euclidean norm.
pub fn energy(v: &[C64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum()
}

/// Forces `h[n-k] = conj(h[k])` from the first half, with real DC and Nyquist bins.
pub fn hermitian_fold(h: &mut [C64]) {
    let n = h.len();
    if n == 0 {
        return;
    }
    h[0] = C64::new(h[0].re, 0.0);
    if n % 2 == 0 {
        h[n / 2] = C64::new(h[n / 2].re, 0.0);
    }
    for k in 1..n.div_ceil(2) {
        h[n - k] = h[k].conj();
    }
}
