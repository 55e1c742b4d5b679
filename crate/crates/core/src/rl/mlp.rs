use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OutputActivation {
    Linear,
    /// `limit * tanh(z)`.
    ScaledTanh(f64),
}

/// Fully connected network with tanh hidden layers.
///
/// Parameters live in one flat vector, layer by layer: the row-major
/// `out x in` weight matrix followed by the `out` biases.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub widths: Vec<usize>,
    pub output: OutputActivation,
    pub params: Vec<f64>,
}

/// Pre- and post-activation values of one forward pass.
#[derive(Debug, Clone)]
pub struct Trace {
    /// `activations[0]` is the input, `activations[l + 1]` the output of layer `l`.
    pub activations: Vec<Vec<f64>>,
}

impl Trace {
    pub fn output(&self) -> &[f64] {
        self.activations.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

pub fn param_count(widths: &[usize]) -> usize {
    widths.windows(2).map(|w| w[1] * w[0] + w[1]).sum()
}

impl Mlp {
    pub fn zeros(widths: &[usize], output: OutputActivation) -> Self {
        Self {
            widths: widths.to_vec(),
            output,
            params: vec![0.0; param_count(widths)],
        }
    }

    /// Uniform fan-in initialization in `±1/sqrt(fan_in)`.
    pub fn new(widths: &[usize], output: OutputActivation, rng: &mut impl Rng) -> Self {
        let mut net = Self::zeros(widths, output);
        let mut offset = 0;
        for w in widths.windows(2) {
            let bound = 1.0 / (w[0] as f64).sqrt();
            for p in &mut net.params[offset..offset + w[1] * w[0] + w[1]] {
                *p = rng.gen_range(-bound..bound);
            }
            offset += w[1] * w[0] + w[1];
        }
        net
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.widths.last().unwrap_or(&0)
    }

    fn layers(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        let mut offset = 0;
        self.widths.windows(2).map(move |w| {
            let start = offset;
            offset += w[1] * w[0] + w[1];
            (start, w[0], w[1])
        })
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::Dimension {
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn forward_trace(&self, x: &[f64]) -> Result<Trace> {
        self.check_input(x)?;
        let last = self.widths.len() - 2;
        let mut activations = vec![x.to_vec()];
        for (l, (offset, n_in, n_out)) in self.layers().enumerate() {
            let input = &activations[l];
            let (w, b) = self.params[offset..offset + n_out * n_in + n_out].split_at(n_out * n_in);
            let out: Vec<f64> = (0..n_out)
                .map(|o| {
                    let z = b[o]
                        + w[o * n_in..(o + 1) * n_in]
                            .iter()
                            .zip(input)
                            .map(|(a, b)| a * b)
                            .sum::<f64>();
                    match (l == last, self.output) {
                        (false, _) => z.tanh(),
                        (true, OutputActivation::Linear) => z,
                        (true, OutputActivation::ScaledTanh(limit)) => limit * z.tanh(),
                    }
                })
                .collect();
            activations.push(out);
        }
        Ok(Trace { activations })
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward_trace(x)?.activations.pop().unwrap_or_default())
    }

    /// Accumulates `d loss / d params` into `grad` given `d loss / d output`,
    /// and returns `d loss / d input`.
    pub fn backward(&self, trace: &Trace, grad_output: &[f64], grad: &mut [f64]) -> Vec<f64> {
        let layers: Vec<_> = self.layers().collect();
        let last = layers.len() - 1;
        let mut delta = grad_output.to_vec();
        for (l, &(offset, n_in, n_out)) in layers.iter().enumerate().rev() {
            let out = &trace.activations[l + 1];
            for o in 0..n_out {
                delta[o] *= match (l == last, self.output) {
                    (false, _) => 1.0 - out[o] * out[o],
                    (true, OutputActivation::Linear) => 1.0,
                    (true, OutputActivation::ScaledTanh(limit)) => {
                        let t = out[o] / limit;
                        limit * (1.0 - t * t)
                    }
                };
            }
            let input = &trace.activations[l];
            let w = &self.params[offset..offset + n_out * n_in];
            let (gw, gb) = grad[offset..offset + n_out * n_in + n_out].split_at_mut(n_out * n_in);
            let mut back = vec![0.0; n_in];
            for o in 0..n_out {
                gb[o] += delta[o];
                let row = o * n_in;
                for i in 0..n_in {
                    gw[row + i] += delta[o] * input[i];
                    back[i] += delta[o] * w[row + i];
                }
            }
            delta = back;
        }
        delta
    }

    /// Loss and parameter gradient over a batch. `loss_fn` maps the batch of
    /// outputs to the loss and its derivative with respect to each output.
    pub fn gradient<F>(&self, batch: &[Vec<f64>], loss_fn: F) -> Result<(f64, Vec<f64>)>
    where
        F: FnOnce(&[Vec<f64>]) -> (f64, Vec<Vec<f64>>),
    {
        let traces = batch
            .iter()
            .map(|x| self.forward_trace(x))
            .collect::<Result<Vec<_>>>()?;
        let outputs: Vec<Vec<f64>> = traces.iter().map(|t| t.output().to_vec()).collect();
        let (loss, grads) = loss_fn(&outputs);
        let mut grad = vec![0.0; self.params.len()];
        for (t, g) in traces.iter().zip(&grads) {
            self.backward(t, g, &mut grad);
        }
        Ok((loss, grad))
    }

    /// `self = tau * source + (1 - tau) * self`.
    pub fn polyak_from(&mut self, source: &Mlp, tau: f64) {
        for (t, s) in self.params.iter_mut().zip(&source.params) {
            *t = tau * s + (1.0 - tau) * *t;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }
}

/// Adam optimizer state for one parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(len: usize, lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for (((p, g), m), v) in params.iter_mut().zip(grad).zip(&mut self.m).zip(&mut self.v) {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            *p -= self.lr * (*m / c1) / ((*v / c2).sqrt() + self.eps);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn one_unit_net_is_tanh() {
        let mut net = Mlp::zeros(&[1, 1, 1], OutputActivation::Linear);
        net.params = vec![1.0, 0.0, 1.0, 0.0];
        for x in [-2.0, 0.3, 1.5] {
            assert_eq!(net.forward(&[x]).unwrap()[0], x.tanh());
        }
    }

    #[test]
    fn zero_weights_give_bias_chain() {
        let mut net = Mlp::zeros(&[3, 2, 1], OutputActivation::Linear);
        // Hidden biases 0.5 and -0.25, output bias 0.1.
        net.params[6] = 0.5;
        net.params[7] = -0.25;
        net.params[10] = 0.1;
        assert_eq!(net.forward(&[9.0, -9.0, 4.0]).unwrap(), vec![0.1]);
    }

    #[test]
    fn dimension_mismatch() {
        let net = Mlp::zeros(&[3, 2, 1], OutputActivation::Linear);
        assert!(matches!(
            net.forward(&[1.0]),
            Err(Error::Dimension { expected: 3, got: 1 })
        ));
    }

    #[test]
    fn polyak_extremes() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let a = Mlp::new(&[2, 3, 1], OutputActivation::Linear, &mut rng);
        let mut b = Mlp::new(&[2, 3, 1], OutputActivation::Linear, &mut rng);
        let before = b.clone();
        b.polyak_from(&a, 0.0);
        assert_eq!(b, before);
        b.polyak_from(&a, 1.0);
        assert_eq!(b, a);
    }

    #[test]
    fn adam_minimizes_quadratic() {
        let mut x = vec![3.0, -2.0];
        let mut opt = Adam::new(2, 0.05);
        for _ in 0..2000 {
            let g: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
            opt.step(&mut x, &g);
        }
        assert!(x.iter().all(|v| v.abs() < 1e-3), "{x:?}");
    }
}
