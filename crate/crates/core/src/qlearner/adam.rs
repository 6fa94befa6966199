use ndarray::Zip;

use super::mlp::{Mlp, Real};

pub const LEARNING_RATE: f64 = 1e-3;
pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

/// Adam with bias-corrected moment estimates.
#[derive(Clone, Debug, PartialEq)]
pub struct Adam<F> {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub step: u64,
    pub first_moment: Mlp<F>,
    pub second_moment: Mlp<F>,
}

impl<F: Real> Adam<F> {
    pub fn new(shape: &Mlp<F>, learning_rate: f64) -> Self {
        let widths = shape.widths();
        Adam {
            learning_rate,
            beta1: BETA1,
            beta2: BETA2,
            epsilon: EPSILON,
            step: 0,
            first_moment: Mlp::zeros(&widths),
            second_moment: Mlp::zeros(&widths),
        }
    }

    pub fn update(&mut self, params: &mut Mlp<F>, grads: &Mlp<F>) {
        self.step += 1;
        let t = self.step as i32;
        let c = |v: f64| F::from_f64(v).unwrap();
        let (b1, b2) = (c(self.beta1), c(self.beta2));
        let (one_b1, one_b2) = (c(1.0 - self.beta1), c(1.0 - self.beta2));
        let corr1 = c(1.0 - self.beta1.powi(t));
        let corr2 = c(1.0 - self.beta2.powi(t));
        let lr = c(self.learning_rate);
        let eps = c(self.epsilon);
        // Moments of rarely active inputs decay into the subnormal range, where
        // x86 arithmetic is ~100x slower; flushing them changes nothing measurable.
        let tiny = F::min_positive_value();
        let flush = |x: F| if x.abs() < tiny { F::zero() } else { x };
        let tensors = params
            .tensors_mut()
            .zip(grads.tensors())
            .zip(self.first_moment.tensors_mut())
            .zip(self.second_moment.tensors_mut());
        for (((p, g), m), v) in tensors {
            Zip::from(p).and(g).and(m).and(v).for_each(|p, &g, m, v| {
                *m = flush(b1 * *m + one_b1 * g);
                *v = flush(b2 * *v + one_b2 * g * g);
                let m_hat = *m / corr1;
                let v_hat = *v / corr2;
                *p -= lr * m_hat / (v_hat.sqrt() + eps);
            });
        }
    }
}
