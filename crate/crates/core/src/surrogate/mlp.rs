//! Fully connected tanh network with a linear output layer.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::grad::Real;

/// Weights are stored flat: per layer an `out × in` row-major matrix, then the bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub sizes: Vec<usize>,
    pub params: Vec<f64>,
}

/// Per-layer activations of a batch, kept for the backward pass.
pub struct BatchTrace {
    batch: usize,
    acts: Vec<Vec<f64>>,
}

impl BatchTrace {
    pub fn output(&self) -> &[f64] {
        self.acts.last().unwrap()
    }

    pub fn batch(&self) -> usize {
        self.batch
    }
}

impl Mlp {
    /// Glorot-uniform weights, zero biases.
    pub fn new(sizes: &[usize], seed: u64) -> Self {
        assert!(sizes.len() >= 2 && sizes.iter().all(|&s| s > 0));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = Vec::with_capacity(Self::param_count(sizes));
        for w in sizes.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
            params.extend((0..fan_in * fan_out).map(|_| rng.gen_range(-a..a)));
            params.extend(std::iter::repeat(0.0).take(fan_out));
        }
        Mlp { sizes: sizes.to_vec(), params }
    }

    /// Zeroes the output layer so the network starts as the zero function.
    pub fn zero_output_layer(&mut self) {
        let offs = self.layer_offsets();
        let l = self.sizes.len() - 2;
        self.params[offs[l]..offs[l + 1]].iter_mut().for_each(|p| *p = 0.0);
    }

    pub fn param_count(sizes: &[usize]) -> usize {
        sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    pub fn n_inputs(&self) -> usize {
        self.sizes[0]
    }

    pub fn n_outputs(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    fn layer_offsets(&self) -> Vec<usize> {
        let mut offs = vec![0];
        for w in self.sizes.windows(2) {
            offs.push(offs.last().unwrap() + w[0] * w[1] + w[1]);
        }
        offs
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }

    /// Single-sample forward pass over any scalar type.
    pub fn forward<T: Real>(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.n_inputs());
        let offs = self.layer_offsets();
        let last = self.sizes.len() - 2;
        let mut a: Vec<T> = x.to_vec();
        for (l, w) in self.sizes.windows(2).enumerate() {
            let (n_in, n_out) = (w[0], w[1]);
            let base = offs[l];
            let bias = &self.params[base + n_in * n_out..base + n_in * n_out + n_out];
            a = (0..n_out)
                .map(|o| {
                    let row = &self.params[base + o * n_in..base + (o + 1) * n_in];
                    let z = T::linear_combination(row, &a) + bias[o];
                    if l == last {
                        z
                    } else {
                        z.tanh()
                    }
                })
                .collect();
        }
        a
    }

    /// Batched forward pass; `x` is `batch × n_inputs` row-major.
    pub fn forward_batch(&self, x: &[f64], batch: usize) -> BatchTrace {
        assert_eq!(x.len(), batch * self.n_inputs());
        let offs = self.layer_offsets();
        let last = self.sizes.len() - 2;
        let mut acts = vec![x.to_vec()];
        for (l, w) in self.sizes.windows(2).enumerate() {
            let (n_in, n_out) = (w[0], w[1]);
            let base = offs[l];
            let wts = &self.params[base..base + n_in * n_out];
            let bias = &self.params[base + n_in * n_out..base + n_in * n_out + n_out];
            let mut z = vec![0.0; batch * n_out];
            for r in 0..batch {
                z[r * n_out..(r + 1) * n_out].copy_from_slice(bias);
            }
            let a = acts.last().unwrap();
            // z (batch × out) += a (batch × in) · Wᵀ (in × out)
            unsafe {
                matrixmultiply::dgemm(
                    batch,
                    n_in,
                    n_out,
                    1.0,
                    a.as_ptr(),
                    n_in as isize,
                    1,
                    wts.as_ptr(),
                    1,
                    n_in as isize,
                    1.0,
                    z.as_mut_ptr(),
                    n_out as isize,
                    1,
                );
            }
            if l != last {
                z.iter_mut().for_each(|v| *v = v.tanh());
            }
            acts.push(z);
        }
        BatchTrace { batch, acts }
    }

    /// Parameter gradient given `d loss / d output` for a traced batch.
    pub fn backward_batch(&self, trace: &BatchTrace, d_out: &[f64]) -> Vec<f64> {
        let batch = trace.batch;
        assert_eq!(d_out.len(), batch * self.n_outputs());
        let offs = self.layer_offsets();
        let mut grad = vec![0.0; self.params.len()];
        let mut delta = d_out.to_vec();
        for l in (0..self.sizes.len() - 1).rev() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let base = offs[l];
            let a_prev = &trace.acts[l];
            let (gw, gb) = grad[base..base + n_in * n_out + n_out].split_at_mut(n_in * n_out);
            // gW (out × in) = deltaᵀ (out × batch) · a_prev (batch × in)
            unsafe {
                matrixmultiply::dgemm(
                    n_out,
                    batch,
                    n_in,
                    1.0,
                    delta.as_ptr(),
                    1,
                    n_out as isize,
                    a_prev.as_ptr(),
                    n_in as isize,
                    1,
                    0.0,
                    gw.as_mut_ptr(),
                    n_in as isize,
                    1,
                );
            }
            for r in 0..batch {
                for o in 0..n_out {
                    gb[o] += delta[r * n_out + o];
                }
            }
            if l == 0 {
                break;
            }
            let wts = &self.params[base..base + n_in * n_out];
            let mut prev = vec![0.0; batch * n_in];
            // prev (batch × in) = delta (batch × out) · W (out × in)
            unsafe {
                matrixmultiply::dgemm(
                    batch,
                    n_out,
                    n_in,
                    1.0,
                    delta.as_ptr(),
                    n_out as isize,
                    1,
                    wts.as_ptr(),
                    n_in as isize,
                    1,
                    0.0,
                    prev.as_mut_ptr(),
                    n_in as isize,
                    1,
                );
            }
            for (p, a) in prev.iter_mut().zip(a_prev) {
                *p *= 1.0 - a * a;
            }
            delta = prev;
        }
        grad
    }
}

/// Affine map `W x + b` with `W` stored `out × in` row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearHead {
    pub n_in: usize,
    pub n_out: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl LinearHead {
    pub fn zeros(n_in: usize, n_out: usize) -> Self {
        LinearHead { n_in, n_out, weights: vec![0.0; n_in * n_out], bias: vec![0.0; n_out] }
    }

    pub fn forward<T: Real>(&self, x: &[T]) -> Vec<T> {
        (0..self.n_out)
            .map(|o| T::linear_combination(&self.weights[o * self.n_in..(o + 1) * self.n_in], x) + self.bias[o])
            .collect()
    }

    pub fn forward_batch(&self, x: &[f64], rows: usize) -> Vec<f64> {
        let mut z = Vec::with_capacity(rows * self.n_out);
        for _ in 0..rows {
            z.extend_from_slice(&self.bias);
        }
        unsafe {
            matrixmultiply::dgemm(
                rows,
                self.n_in,
                self.n_out,
                1.0,
                x.as_ptr(),
                self.n_in as isize,
                1,
                self.weights.as_ptr(),
                1,
                self.n_in as isize,
                1.0,
                z.as_mut_ptr(),
                self.n_out as isize,
                1,
            );
        }
        z
    }

    /// Ridge least squares on centered data. The penalty is `ridge` times the mean
    /// diagonal of the centered Gram matrix.
    pub fn fit(x: &[f64], y: &[f64], rows: usize, n_in: usize, n_out: usize, ridge: f64) -> Self {
        use nalgebra::DMatrix;
        assert!(rows > 0);
        let xm = DMatrix::from_row_slice(rows, n_in, x);
        let ym = DMatrix::from_row_slice(rows, n_out, y);
        let x_mean = xm.row_mean();
        let y_mean = ym.row_mean();
        let mut xc = xm;
        let mut yc = ym;
        for r in 0..rows {
            let mut row = xc.row_mut(r);
            row -= &x_mean;
            let mut row = yc.row_mut(r);
            row -= &y_mean;
        }
        let mut gram = xc.transpose() * &xc;
        let lambda = ridge * (gram.trace() / n_in as f64).max(1e-300);
        for i in 0..n_in {
            gram[(i, i)] += lambda;
        }
        let rhs = xc.transpose() * yc;
        let w = match gram.clone().cholesky() {
            Some(ch) => ch.solve(&rhs),
            None => return LinearHead::zeros(n_in, n_out),
        };
        // w is in × out; store transposed.
        let mut weights = vec![0.0; n_in * n_out];
        for o in 0..n_out {
            for i in 0..n_in {
                weights[o * n_in + i] = w[(i, o)];
            }
        }
        let bias = (0..n_out).map(|o| y_mean[o] - (0..n_in).map(|i| w[(i, o)] * x_mean[i]).sum::<f64>()).collect();
        LinearHead { n_in, n_out, weights, bias }
    }
}
