use rand::Rng;
use serde::{Deserialize, Serialize};

use super::NetError;

/// Fully connected network: tanh hidden layers, linear output head.
///
/// Parameters live in one flat vector. For each layer the weight block is
/// stored input-major (`w[j * out + k]` connects input `j` to output `k`),
/// followed by the bias block. Input-major storage lets the forward pass
/// skip zero inputs, which dominate the one-hot observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseNet {
    sizes: Vec<usize>,
    params: Vec<f64>,
}

/// Per-layer activations recorded by [`DenseNet::forward_tape`].
#[derive(Debug, Clone, Default)]
pub struct Tape {
    acts: Vec<Vec<f64>>,
}

impl Tape {
    pub fn output(&self) -> &[f64] {
        self.acts.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

impl DenseNet {
    /// All-zero network.
    pub fn zeros(sizes: &[usize]) -> Result<Self, NetError> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(NetError::BadArchitecture(sizes.to_vec()));
        }
        let n = sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
        Ok(Self {
            sizes: sizes.to_vec(),
            params: vec![0.0; n],
        })
    }

    /// He-uniform weights scaled by fan-in, zero biases. The output layer is
    /// further multiplied by `output_gain`.
    pub fn init<R: Rng + ?Sized>(sizes: &[usize], output_gain: f64, rng: &mut R) -> Result<Self, NetError> {
        let mut net = Self::zeros(sizes)?;
        let layers = net.sizes.len() - 1;
        let mut off = 0;
        for l in 0..layers {
            let (fan_in, fan_out) = (net.sizes[l], net.sizes[l + 1]);
            let bound = (6.0 / fan_in as f64).sqrt() * if l + 1 == layers { output_gain } else { 1.0 };
            for w in &mut net.params[off..off + fan_in * fan_out] {
                *w = rng.gen_range(-1.0..=1.0) * bound;
            }
            off += fan_in * fan_out + fan_out;
        }
        Ok(net)
    }

    pub fn from_params(sizes: &[usize], params: Vec<f64>) -> Result<Self, NetError> {
        let mut net = Self::zeros(sizes)?;
        if params.len() != net.params.len() {
            return Err(NetError::DimensionMismatch {
                expected: net.params.len(),
                found: params.len(),
            });
        }
        net.params = params;
        Ok(net)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_len(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_len(&self) -> usize {
        *self.sizes.last().unwrap_or(&0)
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>, NetError> {
        let mut tape = Tape::default();
        self.forward_tape(input, &mut tape)?;
        Ok(tape.acts.pop().unwrap_or_default())
    }

    /// Forward pass that keeps every layer's activations for [`DenseNet::backward`].
    pub fn forward_tape(&self, input: &[f64], tape: &mut Tape) -> Result<(), NetError> {
        if input.len() != self.sizes[0] {
            return Err(NetError::DimensionMismatch {
                expected: self.sizes[0],
                found: input.len(),
            });
        }
        let layers = self.sizes.len() - 1;
        tape.acts.resize_with(layers + 1, Vec::new);
        tape.acts[0].clear();
        tape.acts[0].extend_from_slice(input);
        let mut off = 0;
        for l in 0..layers {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let (w, rest) = self.params[off..].split_at(n_in * n_out);
            let b = &rest[..n_out];
            let (prev, next) = tape.acts.split_at_mut(l + 1);
            let x = &prev[l];
            let y = &mut next[0];
            y.clear();
            y.extend_from_slice(b);
            for (j, &xj) in x.iter().enumerate() {
                if xj != 0.0 {
                    let row = &w[j * n_out..(j + 1) * n_out];
                    for (yk, wk) in y.iter_mut().zip(row) {
                        *yk += xj * wk;
                    }
                }
            }
            let hidden = l + 1 < layers;
            for yk in y.iter_mut() {
                if !yk.is_finite() {
                    *yk = if yk.is_nan() { 0.0 } else { yk.signum() * f64::MAX };
                }
                if hidden {
                    *yk = yk.tanh();
                }
            }
            off += n_in * n_out + n_out;
        }
        Ok(())
    }

    /// Reverse-mode gradients for the activations stored in `tape`.
    ///
    /// Parameter gradients are *added* into `grads` (length [`DenseNet::num_params`]).
    /// When `input_grad` is given it is overwritten with d(output . output_grad)/d(input).
    pub fn backward(
        &self,
        tape: &Tape,
        output_grad: &[f64],
        grads: &mut [f64],
        mut input_grad: Option<&mut [f64]>,
    ) -> Result<(), NetError> {
        let layers = self.sizes.len() - 1;
        if output_grad.len() != self.output_len() {
            return Err(NetError::DimensionMismatch {
                expected: self.output_len(),
                found: output_grad.len(),
            });
        }
        if grads.len() != self.params.len() {
            return Err(NetError::DimensionMismatch {
                expected: self.params.len(),
                found: grads.len(),
            });
        }
        if tape.acts.len() != layers + 1 || tape.acts[0].len() != self.sizes[0] {
            return Err(NetError::DimensionMismatch {
                expected: layers + 1,
                found: tape.acts.len(),
            });
        }
        if let Some(g) = input_grad.as_deref() {
            if g.len() != self.sizes[0] {
                return Err(NetError::DimensionMismatch {
                    expected: self.sizes[0],
                    found: g.len(),
                });
            }
        }

        let mut offsets = Vec::with_capacity(layers);
        let mut off = 0;
        for l in 0..layers {
            offsets.push(off);
            off += self.sizes[l] * self.sizes[l + 1] + self.sizes[l + 1];
        }

        let mut delta = output_grad.to_vec();
        let mut below = Vec::new();
        for l in (0..layers).rev() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let off = offsets[l];
            let x = &tape.acts[l];
            {
                let (gw, gb) = grads[off..off + n_in * n_out + n_out].split_at_mut(n_in * n_out);
                for (gbk, dk) in gb.iter_mut().zip(&delta) {
                    *gbk += dk;
                }
                for (j, &xj) in x.iter().enumerate() {
                    if xj != 0.0 {
                        for (g, dk) in gw[j * n_out..(j + 1) * n_out].iter_mut().zip(&delta) {
                            *g += xj * dk;
                        }
                    }
                }
            }
            let need_below = l > 0 || input_grad.is_some();
            if !need_below {
                break;
            }
            let w = &self.params[off..off + n_in * n_out];
            below.clear();
            below.extend((0..n_in).map(|j| dot(&w[j * n_out..(j + 1) * n_out], &delta)));
            if l > 0 {
                for (bj, aj) in below.iter_mut().zip(x) {
                    *bj *= 1.0 - aj * aj;
                }
                std::mem::swap(&mut delta, &mut below);
            } else if let Some(g) = input_grad.as_deref_mut() {
                g.copy_from_slice(&below);
            }
        }
        Ok(())
    }
}

/// Dot product with four independent accumulators so the loop vectorizes.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        for (lane, slot) in acc.iter_mut().enumerate() {
            *slot += a[c * 4 + lane] * b[c * 4 + lane];
        }
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in chunks * 4..a.len() {
        s += a[i] * b[i];
    }
    s
}
