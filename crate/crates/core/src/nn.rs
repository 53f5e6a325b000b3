//! Fully connected networks with hand-written backpropagation.
//!
//! Parameters of a network live in one flat vector; layer `l` occupies
//! `in_l * out_l` weights (input-major, so `w[i * out + o]`) followed by
//! `out_l` biases. Optimizers, target averaging and serialization all work
//! on that flat view.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OutputActivation {
    Linear,
    /// `bound * tanh(z)`.
    TanhScaled(f64),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NnError {
    #[error("input has {got} values, expected a multiple of {expected}")]
    InputShape { expected: usize, got: usize },
    #[error("parameter vector has {got} values, layer sizes need {expected}")]
    ParamCount { expected: usize, got: usize },
    #[error("a network needs at least an input and an output layer")]
    TooFewLayers,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    sizes: Vec<usize>,
    params: Vec<f64>,
    output: OutputActivation,
}

fn param_count(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

impl Mlp {
    pub fn zeros(sizes: &[usize], output: OutputActivation) -> Result<Self, NnError> {
        if sizes.len() < 2 {
            return Err(NnError::TooFewLayers);
        }
        Ok(Self {
            sizes: sizes.to_vec(),
            params: vec![0.0; param_count(sizes)],
            output,
        })
    }

    /// Uniform fan-in initialization, `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`
    /// for weights and biases.
    pub fn new<R: Rng + ?Sized>(
        sizes: &[usize],
        output: OutputActivation,
        rng: &mut R,
    ) -> Result<Self, NnError> {
        let mut net = Self::zeros(sizes, output)?;
        let mut offset = 0;
        for w in sizes.windows(2) {
            let bound = 1.0 / libm::sqrt(w[0] as f64);
            let n = w[0] * w[1] + w[1];
            for p in &mut net.params[offset..offset + n] {
                *p = rng.random_range(-bound..bound);
            }
            offset += n;
        }
        Ok(net)
    }

    pub fn from_params(
        sizes: &[usize],
        output: OutputActivation,
        params: Vec<f64>,
    ) -> Result<Self, NnError> {
        let mut net = Self::zeros(sizes, output)?;
        if params.len() != net.params.len() {
            return Err(NnError::ParamCount {
                expected: net.params.len(),
                got: params.len(),
            });
        }
        net.params = params;
        Ok(net)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn output_activation(&self) -> OutputActivation {
        self.output
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn num_layers(&self) -> usize {
        self.sizes.len() - 1
    }

    /// `(weights, biases)` offsets of layer `l` within the flat parameters.
    pub fn layer_offsets(&self, l: usize) -> (usize, usize) {
        let start: usize = self.sizes[..l + 1]
            .windows(2)
            .map(|w| w[0] * w[1] + w[1])
            .sum();
        (start, start + self.sizes[l] * self.sizes[l + 1])
    }

    pub fn all_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }

    /// Single-sample forward pass.
    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>, NnError> {
        let mut ws = Workspace::default();
        Ok(self.forward_batch(input, &mut ws)?.to_vec())
    }

    /// Forward over a row-major batch. Intermediate activations are kept in
    /// `ws` for a subsequent [`Mlp::backward`].
    pub fn forward_batch<'w>(
        &self,
        input: &[f64],
        ws: &'w mut Workspace,
    ) -> Result<&'w [f64], NnError> {
        let in_dim = self.sizes[0];
        if in_dim == 0 || input.len() % in_dim != 0 || input.is_empty() {
            return Err(NnError::InputShape {
                expected: in_dim,
                got: input.len(),
            });
        }
        let batch = input.len() / in_dim;
        ws.batch = batch;
        ws.acts.resize_with(self.sizes.len(), Vec::new);
        ws.acts[0].clear();
        ws.acts[0].extend_from_slice(input);
        let last = self.num_layers() - 1;
        for l in 0..self.num_layers() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let (w_off, b_off) = self.layer_offsets(l);
            let w = &self.params[w_off..b_off];
            let b = &self.params[b_off..b_off + n_out];
            let (prev, rest) = ws.acts.split_at_mut(l + 1);
            let x = &prev[l];
            let z = &mut rest[0];
            z.resize(batch * n_out, 0.0);
            dense_forward(x, w, b, n_in, n_out, z);
            if l < last {
                for v in z.iter_mut() {
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                }
            } else if let OutputActivation::TanhScaled(bound) = self.output {
                for v in z.iter_mut() {
                    *v = bound * libm::tanh(*v);
                }
            }
        }
        Ok(&ws.acts[self.sizes.len() - 1])
    }

    /// Backpropagate `grad_out` (d loss / d output, batch-major) through the
    /// pass cached in `ws`. Parameter gradients overwrite `grads` when given;
    /// `grad_input` receives d loss / d input when given.
    pub fn backward(
        &self,
        ws: &mut Workspace,
        grad_out: &[f64],
        mut grads: Option<&mut [f64]>,
        grad_input: Option<&mut Vec<f64>>,
    ) {
        let batch = ws.batch;
        let layers = self.num_layers();
        debug_assert_eq!(grad_out.len(), batch * self.output_dim());
        if let Some(g) = grads.as_deref() {
            debug_assert_eq!(g.len(), self.params.len());
        }
        ws.delta.clear();
        ws.delta.extend_from_slice(grad_out);
        if let OutputActivation::TanhScaled(bound) = self.output {
            let y = &ws.acts[layers];
            for (d, &yv) in ws.delta.iter_mut().zip(y) {
                let t = yv / bound;
                *d *= bound * (1.0 - t * t);
            }
        }
        let mut grad_input = grad_input;
        for l in (0..layers).rev() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let (w_off, b_off) = self.layer_offsets(l);
            let x = &ws.acts[l];
            if let Some(g) = grads.as_deref_mut() {
                let (gw, gb) = g[w_off..b_off + n_out].split_at_mut(b_off - w_off);
                dense_param_grads(x, &ws.delta, n_in, n_out, gw, gb);
            }
            let need_input = l > 0 || grad_input.is_some();
            if !need_input {
                break;
            }
            let w = &self.params[w_off..b_off];
            ws.next_delta.resize(batch * n_in, 0.0);
            dense_input_grads(w, &ws.delta, n_in, n_out, &mut ws.next_delta);
            if l > 0 {
                for (d, &xv) in ws.next_delta.iter_mut().zip(x) {
                    if xv <= 0.0 {
                        *d = 0.0;
                    }
                }
            } else if let Some(gi) = grad_input.as_deref_mut() {
                gi.clear();
                gi.extend_from_slice(&ws.next_delta);
            }
            core::mem::swap(&mut ws.delta, &mut ws.next_delta);
        }
    }
}

/// Scratch buffers for batched passes; reuse across calls to avoid
/// reallocation.
#[derive(Debug, Clone, Default)]
pub struct Workspace {
    batch: usize,
    acts: Vec<Vec<f64>>,
    delta: Vec<f64>,
    next_delta: Vec<f64>,
}

impl Workspace {
    pub fn output(&self) -> &[f64] {
        self.acts.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

fn dense_forward(x: &[f64], w: &[f64], b: &[f64], n_in: usize, n_out: usize, z: &mut [f64]) {
    for (xr, zr) in x.chunks_exact(n_in).zip(z.chunks_exact_mut(n_out)) {
        zr.copy_from_slice(b);
        for (i, &xi) in xr.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            let wr = &w[i * n_out..(i + 1) * n_out];
            for (zv, &wv) in zr.iter_mut().zip(wr) {
                *zv += xi * wv;
            }
        }
    }
}

fn dense_param_grads(
    x: &[f64],
    delta: &[f64],
    n_in: usize,
    n_out: usize,
    gw: &mut [f64],
    gb: &mut [f64],
) {
    gw.fill(0.0);
    gb.fill(0.0);
    for (xr, dr) in x.chunks_exact(n_in).zip(delta.chunks_exact(n_out)) {
        for (g, &d) in gb.iter_mut().zip(dr) {
            *g += d;
        }
        for (i, &xi) in xr.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            let gr = &mut gw[i * n_out..(i + 1) * n_out];
            for (g, &d) in gr.iter_mut().zip(dr) {
                *g += xi * d;
            }
        }
    }
}

fn dense_input_grads(w: &[f64], delta: &[f64], n_in: usize, n_out: usize, gx: &mut [f64]) {
    for (dr, gr) in delta.chunks_exact(n_out).zip(gx.chunks_exact_mut(n_in)) {
        for (i, g) in gr.iter_mut().enumerate() {
            *g = dot(&w[i * n_out..(i + 1) * n_out], dr);
        }
    }
}

/// Dot product with four fixed-order partial sums.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in ra.iter().zip(rb) {
        s += x * y;
    }
    s
}

/// Bias-corrected Adam.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    pub fn new(num_params: usize) -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; num_params],
            v: vec![0.0; num_params],
            t: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn moments(&self) -> (&[f64], &[f64]) {
        (&self.m, &self.v)
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64], lr: f64) {
        debug_assert_eq!(params.len(), self.m.len());
        self.t += 1;
        let t = self.t as f64;
        let bc1 = 1.0 - libm::pow(self.beta1, t);
        let bc2 = 1.0 - libm::pow(self.beta2, t);
        let (b1, b2, eps) = (self.beta1, self.beta2, self.eps);
        for (((p, &g), m), v) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut())
            .zip(self.v.iter_mut())
        {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *p -= lr * m_hat / (libm::sqrt(v_hat) + eps);
        }
    }
}

/// `target <- tau * source + (1 - tau) * target`.
pub fn polyak_update(target: &mut [f64], source: &[f64], tau: f64) {
    for (t, &s) in target.iter_mut().zip(source) {
        *t = tau * s + (1.0 - tau) * *t;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    #[test]
    fn zero_weights_output_activation_of_bias() {
        let mut actor = Mlp::zeros(&[3, 4, 2], OutputActivation::TanhScaled(2.0)).unwrap();
        let (_, b_off) = actor.layer_offsets(1);
        actor.params_mut()[b_off] = 0.3;
        actor.params_mut()[b_off + 1] = -1.2;
        let y = actor.forward(&[1.0, -1.0, 0.5]).unwrap();
        assert!((y[0] - 2.0 * 0.3f64.tanh()).abs() < 1e-15);
        assert!((y[1] - 2.0 * (-1.2f64).tanh()).abs() < 1e-15);

        let mut critic = Mlp::zeros(&[2, 3, 1], OutputActivation::Linear).unwrap();
        let (_, b0) = critic.layer_offsets(0);
        critic.params_mut()[b0] = -1.0; // ReLU kills it
        let (_, b1) = critic.layer_offsets(1);
        critic.params_mut()[b1] = 0.7;
        assert_eq!(critic.forward(&[5.0, 5.0]).unwrap(), vec![0.7]);
    }

    #[test]
    fn one_by_one_linear_layer() {
        let net = Mlp::from_params(&[1, 1], OutputActivation::Linear, vec![2.0, 0.0]).unwrap();
        assert_eq!(net.forward(&[3.0]).unwrap(), vec![6.0]);
    }

    #[test]
    fn two_three_one_matches_scalar_recomputation() {
        let mut rng = SplitMix64::new(17);
        let net = Mlp::new(&[2, 3, 1], OutputActivation::Linear, &mut rng).unwrap();
        let p = net.params();
        let x = [0.4, -1.3];
        // independent scalar oracle using the documented flat layout
        let mut h = [0.0; 3];
        for (o, hv) in h.iter_mut().enumerate() {
            let z = p[6 + o] + x[0] * p[o] + x[1] * p[3 + o];
            *hv = if z > 0.0 { z } else { 0.0 };
        }
        let y = p[12] + h[0] * p[9] + h[1] * p[10] + h[2] * p[11];
        let got = net.forward(&x).unwrap()[0];
        assert!((got - y).abs() < 1e-14, "{got} vs {y}");
    }

    #[test]
    fn shape_errors() {
        let net = Mlp::zeros(&[3, 1], OutputActivation::Linear).unwrap();
        assert!(matches!(net.forward(&[1.0, 2.0]), Err(NnError::InputShape { .. })));
        assert!(matches!(
            Mlp::from_params(&[3, 1], OutputActivation::Linear, vec![0.0; 3]),
            Err(NnError::ParamCount { expected: 4, got: 3 })
        ));
        assert_eq!(Mlp::zeros(&[3], OutputActivation::Linear), Err(NnError::TooFewLayers));
    }

    #[test]
    fn init_within_fan_in_bounds() {
        let mut rng = SplitMix64::new(1);
        let net = Mlp::new(&[16, 8, 1], OutputActivation::Linear, &mut rng).unwrap();
        let (w1, _) = net.layer_offsets(1);
        assert!(net.params()[..w1].iter().all(|p| p.abs() < 0.25));
        assert!(net.params()[w1..].iter().all(|p| p.abs() < 1.0 / 8f64.sqrt()));
    }

    #[test]
    fn single_weight_squared_error_gradient() {
        // d/dw (w x - y)^2 = 2 x (w x - y); x=1, y=0, w=0.5 -> 1.0
        let net = Mlp::from_params(&[1, 1], OutputActivation::Linear, vec![0.5, 0.0]).unwrap();
        let mut ws = Workspace::default();
        let out = net.forward_batch(&[1.0], &mut ws).unwrap()[0];
        let mut g = vec![0.0; 2];
        net.backward(&mut ws, &[2.0 * (out - 0.0)], Some(&mut g), None);
        assert_eq!(g[0], 1.0);
    }

    #[test]
    fn adam_zero_gradient_is_noop() {
        let mut p = vec![1.0, -2.0, 3.0];
        let mut adam = Adam::new(3);
        adam.step(&mut p, &[0.0; 3], 1e-3);
        assert_eq!(p, vec![1.0, -2.0, 3.0]);
        assert_eq!(adam.steps(), 1);
    }

    #[test]
    fn adam_first_step_moves_by_lr_against_sign() {
        let mut p = vec![0.0, 0.0, 0.0];
        let mut adam = Adam::new(3);
        adam.step(&mut p, &[0.5, -3.0, 1e-3], 0.01);
        assert!((p[0] + 0.01).abs() < 1e-9);
        assert!((p[1] - 0.01).abs() < 1e-9);
        assert!((p[2] + 0.01).abs() < 1e-7);
    }

    #[test]
    fn adam_three_steps_vs_hand_recomputation() {
        let grads = [0.5, -0.2, 0.8];
        let lr = 0.1;
        let (b1, b2, eps) = (0.9f64, 0.999f64, 1e-8);
        let (mut m, mut v, mut x) = (0.0f64, 0.0f64, 1.0f64);
        for (t, g) in grads.iter().enumerate() {
            let t = (t + 1) as i32;
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            x -= lr * (m / (1.0 - b1.powi(t))) / ((v / (1.0 - b2.powi(t))).sqrt() + eps);
        }
        let mut p = vec![1.0];
        let mut adam = Adam::new(1);
        for g in grads {
            adam.step(&mut p, &[g], lr);
        }
        assert!((p[0] - x).abs() < 1e-14, "{} vs {x}", p[0]);
    }

    #[test]
    fn polyak_three_iterations_by_hand() {
        let mut target = vec![1.0];
        let source = [0.0];
        for _ in 0..3 {
            polyak_update(&mut target, &source, 0.005);
        }
        assert!((target[0] - 0.995f64.powi(3)).abs() < 1e-15);
        polyak_update(&mut target, &[4.0], 1.0);
        assert_eq!(target[0], 4.0);
    }
}
