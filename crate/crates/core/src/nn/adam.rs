use super::real::Real;

/// Step-decayed learning rate: `lr0 * decay^floor(epoch / every)`.
pub fn learning_rate(lr0: f64, decay: f64, every: usize, epoch: usize) -> f64 {
    lr0 * decay.powi((epoch / every.max(1)) as i32)
}

/// Adam with bias correction.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam<T> {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<T>,
    v: Vec<T>,
    t: u64,
}

impl<T: Real> Adam<T> {
    pub fn new(n_params: usize) -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![T::zero(); n_params],
            v: vec![T::zero(); n_params],
            t: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn step(&mut self, params: &mut [T], grads: &[T], lr: f64) {
        assert_eq!(params.len(), self.m.len());
        assert_eq!(grads.len(), self.m.len());
        self.t += 1;
        let (b1, b2) = (T::of(self.beta1), T::of(self.beta2));
        let (c1, c2) = (T::one() - b1, T::one() - b2);
        let m_corr = T::of(1.0 / (1.0 - self.beta1.powi(self.t as i32)));
        let v_corr = T::of(1.0 / (1.0 - self.beta2.powi(self.t as i32)));
        let (lr, eps) = (T::of(lr), T::of(self.eps));
        for (((p, &g), m), v) in params.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            *m = b1 * *m + c1 * g;
            *v = b2 * *v + c2 * g * g;
            let m_hat = *m * m_corr;
            let v_hat = *v * v_corr;
            *p = *p - lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
}
