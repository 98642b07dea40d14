//! Adaptive-moment optimizer with decoupled weight decay, and a linear
//! warmup/decay learning-rate schedule.

use serde::{Deserialize, Serialize};

/// A set of flat parameter tensors in a fixed order.
pub trait Parameters {
    fn tensors(&self) -> Vec<&[f64]>;
    fn tensors_mut(&mut self) -> Vec<&mut [f64]>;

    /// Which tensors receive weight decay. Biases and scalar gates usually do not.
    fn decay_mask(&self) -> Vec<bool> {
        vec![true; self.tensors().len()]
    }

    fn all_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|x| x.is_finite()))
    }

    fn add_assign(&mut self, other: &Self)
    where
        Self: Sized,
    {
        for (dst, src) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += s;
            }
        }
    }

    fn scale(&mut self, factor: f64) {
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|x| *x *= factor);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamWConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamWState {
    pub config: AdamWConfig,
    pub step: u64,
    /// Steps skipped because the gradient was not finite.
    pub skipped: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl AdamWState {
    pub fn new<P: Parameters>(params: &P) -> Self {
        Self::with_config(params, AdamWConfig::default())
    }

    pub fn with_config<P: Parameters>(params: &P, config: AdamWConfig) -> Self {
        let shapes: Vec<usize> = params.tensors().iter().map(|t| t.len()).collect();
        Self {
            config,
            step: 0,
            skipped: 0,
            m: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            v: shapes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }
}

/// One AdamW update. Returns `false` (and counts a skip) on a non-finite gradient.
pub fn optimizer_step<P: Parameters, G: Parameters>(
    params: &mut P,
    grads: &G,
    state: &mut AdamWState,
    lr: f64,
    weight_decay: f64,
) -> bool {
    if !grads.all_finite() {
        state.skipped += 1;
        return false;
    }
    state.step += 1;
    let AdamWConfig { beta1, beta2, eps } = state.config;
    let t = state.step as i32;
    let bias1 = 1.0 - beta1.powi(t);
    let bias2 = 1.0 - beta2.powi(t);

    let grad_tensors = grads.tensors();
    let decay = params.decay_mask();
    for (k, p) in params.tensors_mut().into_iter().enumerate() {
        let g = grad_tensors[k];
        let weight_decay = if decay[k] { weight_decay } else { 0.0 };
        assert_eq!(p.len(), g.len(), "gradient shape mismatch in tensor {k}");
        let (m, v) = (&mut state.m[k], &mut state.v[k]);
        for i in 0..p.len() {
            m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
            v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
            let m_hat = m[i] / bias1;
            let v_hat = v[i] / bias2;
            p[i] -= lr * (m_hat / (v_hat.sqrt() + eps) + weight_decay * p[i]);
        }
    }
    true
}

/// Linear warmup to `peak` over `warmup` steps, then linear decay to zero at `total`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearSchedule {
    pub peak: f64,
    pub warmup: usize,
    pub total: usize,
}

impl LinearSchedule {
    pub fn lr(&self, step: usize) -> f64 {
        if step < self.warmup {
            return self.peak * (step + 1) as f64 / self.warmup as f64;
        }
        let remaining = self.total.saturating_sub(step) as f64;
        let span = self.total.saturating_sub(self.warmup).max(1) as f64;
        self.peak * (remaining / span).clamp(0.0, 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Clone, Debug, PartialEq)]
    struct Vecs(Vec<f64>);

    impl Parameters for Vecs {
        fn tensors(&self) -> Vec<&[f64]> {
            vec![&self.0]
        }
        fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
            vec![&mut self.0]
        }
    }

    #[test]
    fn zero_gradient_is_fixed_point() {
        let mut p = Vecs(vec![1.0, -2.0]);
        let mut st = AdamWState::new(&p);
        assert!(optimizer_step(&mut p, &Vecs(vec![0.0, 0.0]), &mut st, 0.1, 0.0));
        assert_eq!(p, Vecs(vec![1.0, -2.0]));
    }

    #[test]
    fn identical_calls_identical_results() {
        let p0 = Vecs(vec![0.3, 0.7]);
        let g = Vecs(vec![0.5, -1.5]);
        let (mut a, mut b) = (p0.clone(), p0.clone());
        let (mut sa, mut sb) = (AdamWState::new(&a), AdamWState::new(&b));
        optimizer_step(&mut a, &g, &mut sa, 0.01, 0.01);
        optimizer_step(&mut b, &g, &mut sb, 0.01, 0.01);
        assert_eq!(a, b);
        assert_eq!(sa, sb);
    }

    #[test]
    fn one_step_decreases_quadratic() {
        // f(x) = sum (x - 3)^2, gradient 2 (x - 3)
        let f = |x: &[f64]| x.iter().map(|v| (v - 3.0).powi(2)).sum::<f64>();
        let mut p = Vecs(vec![0.0, 5.0, -1.0]);
        let before = f(&p.0);
        let g = Vecs(p.0.iter().map(|v| 2.0 * (v - 3.0)).collect());
        let mut st = AdamWState::new(&p);
        optimizer_step(&mut p, &g, &mut st, 0.1, 0.0);
        assert!(f(&p.0) < before);
    }

    #[test]
    fn non_finite_gradient_skipped() {
        let mut p = Vecs(vec![1.0]);
        let mut st = AdamWState::new(&p);
        assert!(!optimizer_step(&mut p, &Vecs(vec![f64::NAN]), &mut st, 0.1, 0.0));
        assert_eq!(st.skipped, 1);
        assert_eq!(st.step, 0);
        assert_eq!(p, Vecs(vec![1.0]));
    }

    #[test]
    fn schedule_shape() {
        let s = LinearSchedule { peak: 1.0, warmup: 10, total: 110 };
        assert!((s.lr(0) - 0.1).abs() < 1e-12);
        assert!((s.lr(9) - 1.0).abs() < 1e-12);
        assert!((s.lr(60) - 0.5).abs() < 1e-12);
        assert_eq!(s.lr(110), 0.0);
        let flat = LinearSchedule { peak: 2.0, warmup: 0, total: 0 };
        assert_eq!(flat.lr(0), 0.0);
    }
}
