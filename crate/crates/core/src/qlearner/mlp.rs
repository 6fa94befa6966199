use ndarray::linalg::general_mat_mul;
use ndarray::{Array1, Array2, ArrayView2, Axis, NdFloat, Zip};
use rand::Rng;

use crate::error::{Error, Result};

/// Scalar type the network can be instantiated with.
pub trait Real: NdFloat + num_traits::FromPrimitive + std::str::FromStr {}

impl<T: NdFloat + num_traits::FromPrimitive + std::str::FromStr> Real for T {}

#[derive(Clone, Debug, PartialEq)]
pub struct Dense<F> {
    /// `[fan_in, fan_out]`
    pub weights: Array2<F>,
    pub bias: Array1<F>,
}

impl<F: Real> Dense<F> {
    fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Dense {
            weights: Array2::zeros((fan_in, fan_out)),
            bias: Array1::zeros(fan_out),
        }
    }
}

/// Fully connected network with rectified-linear hidden layers and a linear output.
#[derive(Clone, Debug, PartialEq)]
pub struct Mlp<F> {
    pub layers: Vec<Dense<F>>,
}

/// Per-layer outputs of the last forward pass; `outputs[0]` is the input.
#[derive(Clone, Debug)]
pub struct Activations<F> {
    outputs: Vec<Array2<F>>,
    deltas: Vec<Array2<F>>,
}

impl<F> Default for Activations<F> {
    fn default() -> Self {
        Activations {
            outputs: Vec::new(),
            deltas: Vec::new(),
        }
    }
}

impl<F: Real> Activations<F> {
    /// Network output of the last forward pass.
    pub fn q_values(&self) -> ArrayView2<'_, F> {
        self.outputs.last().expect("forward was run").view()
    }
}

impl<F: Real> Mlp<F> {
    pub fn zeros(widths: &[usize]) -> Self {
        assert!(widths.len() >= 2, "need at least input and output widths");
        Mlp {
            layers: widths.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect(),
        }
    }

    /// Uniform Glorot initialization, zero biases.
    pub fn glorot<R: Rng + ?Sized>(widths: &[usize], rng: &mut R) -> Self {
        let mut net = Mlp::zeros(widths);
        for layer in &mut net.layers {
            let (fan_in, fan_out) = layer.weights.dim();
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            layer
                .weights
                .mapv_inplace(|_| F::from_f64(rng.random_range(-limit..limit)).unwrap());
        }
        net
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].weights.nrows()
    }

    pub fn output_width(&self) -> usize {
        self.layers.last().unwrap().weights.ncols()
    }

    pub fn widths(&self) -> Vec<usize> {
        let mut w = vec![self.input_width()];
        w.extend(self.layers.iter().map(|l| l.weights.ncols()));
        w
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(|l| {
            l.weights.iter().all(|v| v.is_finite()) && l.bias.iter().all(|v| v.is_finite())
        })
    }

    /// Visits every parameter tensor (weights then bias, layer by layer).
    pub fn tensors_mut(&mut self) -> impl Iterator<Item = ndarray::ArrayViewMut1<'_, F>> {
        self.layers.iter_mut().flat_map(|l| {
            let len = l.weights.len();
            let w = l.weights.view_mut().into_shape_with_order(len).unwrap();
            [w, l.bias.view_mut()]
        })
    }

    pub fn tensors(&self) -> impl Iterator<Item = ndarray::ArrayView1<'_, F>> {
        self.layers.iter().flat_map(|l| {
            let w = l.weights.view().into_shape_with_order(l.weights.len()).unwrap();
            [w, l.bias.view()]
        })
    }

    /// Batched forward pass; rows of `x` are observations.
    pub fn forward_into(&self, x: ArrayView2<'_, F>, acts: &mut Activations<F>) -> Result<()> {
        if x.ncols() != self.input_width() {
            return Err(Error::Shape {
                expected: self.input_width(),
                actual: x.ncols(),
            });
        }
        let batch = x.nrows();
        let n = self.layers.len();
        acts.outputs.resize_with(n + 1, || Array2::zeros((0, 0)));
        if acts.outputs[0].dim() != x.dim() {
            acts.outputs[0] = Array2::zeros(x.dim());
        }
        acts.outputs[0].assign(&x);
        for (i, layer) in self.layers.iter().enumerate() {
            let (prev, rest) = acts.outputs.split_at_mut(i + 1);
            let out = &mut rest[0];
            let width = layer.weights.ncols();
            if out.dim() != (batch, width) {
                *out = Array2::zeros((batch, width));
            }
            general_mat_mul(F::one(), &prev[i], &layer.weights, F::zero(), out);
            *out += &layer.bias;
            if i + 1 < n {
                out.mapv_inplace(|v| v.max(F::zero()));
            }
        }
        Ok(())
    }

    /// Action values for a single observation.
    pub fn forward(&self, x: &[F]) -> Result<Vec<F>> {
        let view = ArrayView2::from_shape((1, x.len()), x).expect("row vector");
        let mut acts = Activations::default();
        self.forward_into(view, &mut acts)?;
        Ok(acts.q_values().row(0).to_vec())
    }

    /// Backpropagates `d_out` (gradient of the loss w.r.t. the outputs of the
    /// last forward pass) and writes parameter gradients into `grads`.
    pub fn backward(&self, acts: &mut Activations<F>, d_out: ArrayView2<'_, F>, grads: &mut Mlp<F>) {
        let n = self.layers.len();
        acts.deltas.resize_with(n, || Array2::zeros((0, 0)));
        if acts.deltas[n - 1].dim() != d_out.dim() {
            acts.deltas[n - 1] = Array2::zeros(d_out.dim());
        }
        acts.deltas[n - 1].assign(&d_out);
        for i in (0..n).rev() {
            let input = &acts.outputs[i];
            let (lower, upper) = acts.deltas.split_at_mut(i);
            let delta = &upper[0];
            let g = &mut grads.layers[i];
            general_mat_mul(F::one(), &input.t(), delta, F::zero(), &mut g.weights);
            g.bias.assign(&delta.sum_axis(Axis(0)));
            if i > 0 {
                let prev = &mut lower[i - 1];
                if prev.dim() != input.dim() {
                    *prev = Array2::zeros(input.dim());
                }
                general_mat_mul(F::one(), delta, &self.layers[i].weights.t(), F::zero(), prev);
                // ReLU derivative from the stored post-activation
                Zip::from(prev).and(input).for_each(|d, &a| {
                    if a <= F::zero() {
                        *d = F::zero();
                    }
                });
            }
        }
    }

    /// Weighted squared TD loss `mean_i w_i (Q(s_i, a_i) - y_i)^2` and its
    /// parameter gradient. Returns the loss and the per-sample TD errors.
    pub fn td_loss_grad(
        &self,
        states: ArrayView2<'_, F>,
        actions: &[usize],
        targets: &[F],
        weights: Option<&[F]>,
        acts: &mut Activations<F>,
        d_out: &mut Array2<F>,
        grads: &mut Mlp<F>,
    ) -> Result<(F, Vec<F>)> {
        self.forward_into(states, acts)?;
        let batch = states.nrows();
        if actions.len() != batch || targets.len() != batch {
            return Err(Error::Shape {
                expected: batch,
                actual: actions.len().min(targets.len()),
            });
        }
        if d_out.dim() != (batch, self.output_width()) {
            *d_out = Array2::zeros((batch, self.output_width()));
        } else {
            d_out.fill(F::zero());
        }
        let q = acts.q_values();
        let scale = F::from_usize(batch).unwrap();
        let two = F::from_f64(2.0).unwrap();
        let mut loss = F::zero();
        let mut td = Vec::with_capacity(batch);
        for i in 0..batch {
            let a = actions[i];
            if a >= self.output_width() {
                return Err(Error::Shape {
                    expected: self.output_width(),
                    actual: a,
                });
            }
            let err = q[[i, a]] - targets[i];
            let w = weights.map_or(F::one(), |w| w[i]);
            loss += w * err * err;
            d_out[[i, a]] = two * w * err / scale;
            td.push(err);
        }
        self.backward(acts, d_out.view(), grads);
        Ok((loss / scale, td))
    }
}
