use std::sync::{Arc, OnceLock};

use rand::Rng as _;

use super::{softmax, DiscretePolicy, Policy};
use crate::rng::{self, Rng};

/// Fully connected ReLU network with a flat parameter vector.
///
/// Layer `l` stores its `out × in` weight matrix row-major followed by its
/// `out` biases. Hidden layers use ReLU; the last layer is linear.
#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    sizes: Vec<usize>,
    params: Vec<f64>,
}

/// Uniform initialization bound is `sqrt(INIT_GAIN / fan_in)` (He-uniform).
pub const INIT_GAIN: f64 = 6.0;

impl Mlp {
    pub fn parameter_count(sizes: &[usize]) -> usize {
        sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    /// He-uniform weights, zero biases, drawn from `seed`.
    pub fn init(sizes: &[usize], seed: u64) -> Self {
        assert!(sizes.len() >= 2, "a network needs an input and an output layer");
        let mut rng = rng::stream(seed, 0);
        let mut params = Vec::with_capacity(Self::parameter_count(sizes));
        for w in sizes.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let bound = (INIT_GAIN / fan_in as f64).sqrt();
            params.extend((0..fan_in * fan_out).map(|_| rng.gen_range(-bound..bound)));
            params.extend(std::iter::repeat(0.0).take(fan_out));
        }
        Self {
            sizes: sizes.to_vec(),
            params,
        }
    }

    pub fn from_params(sizes: &[usize], params: Vec<f64>) -> Self {
        assert_eq!(params.len(), Self::parameter_count(sizes));
        Self {
            sizes: sizes.to_vec(),
            params,
        }
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    /// Post-activation outputs of every layer, input first, logits last.
    pub fn forward(&self, input: &[f64]) -> Vec<Vec<f64>> {
        debug_assert_eq!(input.len(), self.sizes[0]);
        let n_layers = self.sizes.len() - 1;
        let mut acts = Vec::with_capacity(n_layers + 1);
        acts.push(input.to_vec());
        let mut offset = 0;
        for l in 0..n_layers {
            let (fan_in, fan_out) = (self.sizes[l], self.sizes[l + 1]);
            let weights = &self.params[offset..offset + fan_in * fan_out];
            let biases = &self.params[offset + fan_in * fan_out..offset + fan_in * fan_out + fan_out];
            let prev = &acts[l];
            let mut out: Vec<f64> = weights
                .chunks_exact(fan_in)
                .zip(biases)
                .map(|(row, b)| row.iter().zip(prev).map(|(w, x)| w * x).sum::<f64>() + b)
                .collect();
            if l + 1 < n_layers {
                out.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            acts.push(out);
            offset += fan_in * fan_out + fan_out;
        }
        acts
    }

    /// Reverse-mode pass: adds `(∂logits/∂θ)ᵀ upstream` into `grad`.
    pub fn backward(&self, acts: &[Vec<f64>], upstream: &[f64], grad: &mut [f64]) {
        let n_layers = self.sizes.len() - 1;
        let mut offsets = Vec::with_capacity(n_layers);
        let mut offset = 0;
        for l in 0..n_layers {
            offsets.push(offset);
            offset += self.sizes[l] * self.sizes[l + 1] + self.sizes[l + 1];
        }
        let mut delta = upstream.to_vec();
        for l in (0..n_layers).rev() {
            let (fan_in, fan_out) = (self.sizes[l], self.sizes[l + 1]);
            let base = offsets[l];
            let input = &acts[l];
            for (o, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                let row = &mut grad[base + o * fan_in..base + (o + 1) * fan_in];
                row.iter_mut().zip(input).for_each(|(g, x)| *g += d * x);
                grad[base + fan_in * fan_out + o] += d;
            }
            if l == 0 {
                break;
            }
            let weights = &self.params[base..base + fan_in * fan_out];
            let mut next = vec![0.0; fan_in];
            for (o, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                let row = &weights[o * fan_in..(o + 1) * fan_in];
                next.iter_mut().zip(row).for_each(|(n, w)| *n += d * w);
            }
            // ReLU mask of the layer that produced `input`
            next.iter_mut().zip(input).for_each(|(n, x)| {
                if *x <= 0.0 {
                    *n = 0.0;
                }
            });
            delta = next;
        }
    }
}

/// Categorical policy over a finite state space whose states are encoded by a
/// fixed input table (one row per state index).
#[derive(Clone, Debug)]
pub struct CategoricalMlpPolicy {
    net: Mlp,
    inputs: Arc<Vec<Vec<f64>>>,
    cache: Arc<Vec<OnceLock<Vec<f64>>>>,
}

impl CategoricalMlpPolicy {
    /// Three hidden layers of 64 ReLU units.
    pub const HIDDEN: [usize; 3] = [64, 64, 64];

    pub fn new(inputs: Arc<Vec<Vec<f64>>>, n_actions: usize, seed: u64) -> Self {
        let input_dim = inputs.first().map_or(0, Vec::len);
        let mut sizes = vec![input_dim];
        sizes.extend(Self::HIDDEN);
        sizes.push(n_actions);
        Self::from_net(Mlp::init(&sizes, seed), inputs)
    }

    pub fn from_net(net: Mlp, inputs: Arc<Vec<Vec<f64>>>) -> Self {
        let cache = Arc::new((0..inputs.len()).map(|_| OnceLock::new()).collect());
        Self { net, inputs, cache }
    }

    pub fn net(&self) -> &Mlp {
        &self.net
    }

    pub fn inputs(&self) -> &Arc<Vec<Vec<f64>>> {
        &self.inputs
    }

    pub fn n_actions(&self) -> usize {
        *self.net.sizes().last().expect("non-empty")
    }

    /// Copy with the final layer (weights and biases) set to zero.
    pub fn with_zero_output_layer(&self) -> Self {
        let sizes = self.net.sizes();
        let last = Mlp::parameter_count(&sizes[..sizes.len() - 1]);
        let mut params = self.net.params().to_vec();
        params[last..].iter_mut().for_each(|p| *p = 0.0);
        self.with_params(&params)
    }

    pub fn logits(&self, state: usize) -> Vec<f64> {
        self.net.forward(&self.inputs[state]).pop().expect("output layer")
    }

    pub fn action_probabilities(&self, state: usize) -> &[f64] {
        self.cache[state].get_or_init(|| softmax(&self.logits(state)))
    }
}

impl Policy<usize> for CategoricalMlpPolicy {
    type Action = usize;

    fn family(&self) -> &'static str {
        "mlp"
    }

    fn params(&self) -> &[f64] {
        self.net.params()
    }

    fn with_params(&self, params: &[f64]) -> Self {
        Self::from_net(Mlp::from_params(self.net.sizes(), params.to_vec()), Arc::clone(&self.inputs))
    }

    fn sample(&self, state: &usize, rng: &mut Rng) -> usize {
        let probs = self.action_probabilities(*state);
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (a, p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return a;
            }
        }
        probs.len() - 1
    }

    fn log_prob(&self, state: &usize, action: &usize) -> f64 {
        let logits = self.logits(*state);
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
        logits[*action] - lse
    }

    fn grad_log_prob(&self, state: &usize, action: &usize) -> Vec<f64> {
        let acts = self.net.forward(&self.inputs[*state]);
        let probs = softmax(acts.last().expect("output layer"));
        let upstream: Vec<f64> = probs
            .iter()
            .enumerate()
            .map(|(a, p)| if a == *action { 1.0 - p } else { -p })
            .collect();
        let mut grad = vec![0.0; self.net.params().len()];
        self.net.backward(&acts, &upstream, &mut grad);
        grad
    }

    /// Scores are linear in the logit gradient `e_a − π(·|s)`, so weights are
    /// first summed per state and each visited state is back-propagated once.
    fn accumulate_scores<'a, I>(&self, steps: I, out: &mut [f64])
    where
        I: IntoIterator<Item = (&'a usize, &'a usize, f64)>,
    {
        let n_actions = self.n_actions();
        let mut upstream: Vec<Option<Vec<f64>>> = vec![None; self.inputs.len()];
        let mut order = Vec::new();
        for (&s, &a, w) in steps {
            if w == 0.0 {
                continue;
            }
            let probs = self.action_probabilities(s);
            let entry = upstream[s].get_or_insert_with(|| {
                order.push(s);
                vec![0.0; n_actions]
            });
            for (k, p) in probs.iter().enumerate() {
                entry[k] -= w * p;
            }
            entry[a] += w;
        }
        for s in order {
            let up = upstream[s].take().expect("recorded state");
            let acts = self.net.forward(&self.inputs[s]);
            self.net.backward(&acts, &up, out);
        }
    }
}

impl DiscretePolicy for CategoricalMlpPolicy {
    fn probabilities(&self, state: usize, n_actions: usize) -> Vec<f64> {
        debug_assert_eq!(n_actions, self.n_actions());
        self.action_probabilities(state).to_vec()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_policy(seed: u64) -> CategoricalMlpPolicy {
        let inputs: Vec<Vec<f64>> = (0..5)
            .map(|i| vec![i as f64 / 4.0, 1.0 - i as f64 / 4.0, 1.0, 0.0, 0.0, 0.0])
            .collect();
        CategoricalMlpPolicy::new(Arc::new(inputs), 4, seed)
    }

    #[test]
    fn parameter_layout() {
        let p = toy_policy(1);
        assert_eq!(p.params().len(), 6 * 64 + 64 + 64 * 64 + 64 + 64 * 64 + 64 + 64 * 4 + 4);
    }

    #[test]
    fn zero_output_layer_is_uniform() {
        let p = toy_policy(2).with_zero_output_layer();
        for s in 0..5 {
            for &q in p.action_probabilities(s) {
                assert!((q - 0.25).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn aggregated_scores_match_per_step_sum() {
        let p = toy_policy(3);
        let steps = [(0usize, 1usize, 0.5), (3, 2, -1.5), (0, 3, 2.0), (4, 0, 0.25)];
        let mut fast = vec![0.0; p.params().len()];
        p.accumulate_scores(steps.iter().map(|(s, a, w)| (s, a, *w)), &mut fast);
        let mut slow = vec![0.0; p.params().len()];
        for (s, a, w) in &steps {
            for (o, g) in slow.iter_mut().zip(p.grad_log_prob(s, a)) {
                *o += w * g;
            }
        }
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).abs() < 1e-12 * (1.0 + b.abs()));
        }
    }
}
