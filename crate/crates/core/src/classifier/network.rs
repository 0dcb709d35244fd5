//! Two-hidden-layer perceptron over sparse binary inputs.
//!
//! Layer 1 never materializes the dense indicator: its pre-activation is the
//! bias plus the weight rows of the active ingredients, and its weight
//! gradient only touches those rows.

use ndarray::{Array1, Array2, Axis, Zip};
use rand::Rng;

/// Weights are stored `fan_in × fan_out`, so a batch forward is `x · W + b`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dense {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Dense {
    pub fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Dense {
            weights: Array2::zeros((fan_in, fan_out)),
            bias: Array1::zeros(fan_out),
        }
    }

    /// Symmetric uniform `±sqrt(6 / fan_in)`, zero bias.
    pub fn init<R: Rng>(fan_in: usize, fan_out: usize, rng: &mut R) -> Self {
        let limit = (6.0 / fan_in as f64).sqrt();
        let weights = Array2::from_shape_simple_fn((fan_in, fan_out), || rng.random_range(-limit..=limit));
        Dense {
            weights,
            bias: Array1::zeros(fan_out),
        }
    }

    pub fn fan_in(&self) -> usize {
        self.weights.nrows()
    }

    pub fn fan_out(&self) -> usize {
        self.weights.ncols()
    }
}

/// Inverted-dropout scale factors for both hidden layers: each entry is
/// either 0 or `1 / (1 - rate)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DropoutMasks {
    pub hidden1: Array2<f64>,
    pub hidden2: Array2<f64>,
}

impl DropoutMasks {
    pub fn sample<R: Rng>(batch: usize, dims: (usize, usize), rate: f64, rng: &mut R) -> Self {
        let keep = 1.0 / (1.0 - rate);
        let mut draw =
            |cols| Array2::from_shape_simple_fn((batch, cols), || if rng.random::<f64>() < rate { 0.0 } else { keep });
        let hidden1 = draw(dims.0);
        let hidden2 = draw(dims.1);
        DropoutMasks { hidden1, hidden2 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    pub layers: [Dense; 3],
}

/// Activations kept from a forward pass for backpropagation.
pub struct ForwardCache {
    pre1: Array2<f64>,
    act1: Array2<f64>,
    pre2: Array2<f64>,
    act2: Array2<f64>,
    /// Row-wise softmax output.
    pub probs: Array2<f64>,
    /// Row-wise log-softmax, used for a finite cross-entropy.
    pub log_probs: Array2<f64>,
}

#[derive(Clone, Debug)]
pub struct Gradients {
    pub layers: [Dense; 3],
    touched: Vec<usize>,
    touched_flag: Vec<bool>,
}

impl Gradients {
    pub fn zeros_like(net: &Network) -> Self {
        let layers = net.layers.clone().map(|l| Dense::zeros(l.fan_in(), l.fan_out()));
        let rows = layers[0].fan_in();
        Gradients {
            layers,
            touched: Vec::new(),
            touched_flag: vec![false; rows],
        }
    }

    /// Zeroes the buffers; for layer 1 only the rows written since the last clear.
    pub fn clear(&mut self) {
        for &r in &self.touched {
            self.layers[0].weights.row_mut(r).fill(0.0);
            self.touched_flag[r] = false;
        }
        self.touched.clear();
        self.layers[0].bias.fill(0.0);
        for layer in &mut self.layers[1..] {
            layer.weights.fill(0.0);
            layer.bias.fill(0.0);
        }
    }

    pub fn slices(&self) -> [&[f64]; 6] {
        let [a, b, c] = &self.layers;
        [
            a.weights.as_slice().unwrap(),
            a.bias.as_slice().unwrap(),
            b.weights.as_slice().unwrap(),
            b.bias.as_slice().unwrap(),
            c.weights.as_slice().unwrap(),
            c.bias.as_slice().unwrap(),
        ]
    }

    pub fn norm(&self) -> f64 {
        self.slices()
            .iter()
            .flat_map(|s| s.iter())
            .map(|g| g * g)
            .sum::<f64>()
            .sqrt()
    }
}

fn relu_in_place(a: &mut Array2<f64>) {
    a.mapv_inplace(|v| v.max(0.0));
}

fn add_bias(a: &mut Array2<f64>, bias: &Array1<f64>) {
    for mut row in a.rows_mut() {
        row += bias;
    }
}

impl Network {
    pub fn new<R: Rng>(inputs: usize, hidden: (usize, usize), outputs: usize, rng: &mut R) -> Self {
        Network {
            layers: [
                Dense::init(inputs, hidden.0, rng),
                Dense::init(hidden.0, hidden.1, rng),
                Dense::init(hidden.1, outputs, rng),
            ],
        }
    }

    pub fn zeros(inputs: usize, hidden: (usize, usize), outputs: usize) -> Self {
        Network {
            layers: [
                Dense::zeros(inputs, hidden.0),
                Dense::zeros(hidden.0, hidden.1),
                Dense::zeros(hidden.1, outputs),
            ],
        }
    }

    pub fn inputs(&self) -> usize {
        self.layers[0].fan_in()
    }

    pub fn hidden(&self) -> (usize, usize) {
        (self.layers[0].fan_out(), self.layers[1].fan_out())
    }

    pub fn outputs(&self) -> usize {
        self.layers[2].fan_out()
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn slices(&self) -> [&[f64]; 6] {
        let [a, b, c] = &self.layers;
        [
            a.weights.as_slice().unwrap(),
            a.bias.as_slice().unwrap(),
            b.weights.as_slice().unwrap(),
            b.bias.as_slice().unwrap(),
            c.weights.as_slice().unwrap(),
            c.bias.as_slice().unwrap(),
        ]
    }

    pub fn slices_mut(&mut self) -> [&mut [f64]; 6] {
        let [a, b, c] = &mut self.layers;
        [
            a.weights.as_slice_mut().unwrap(),
            a.bias.as_slice_mut().unwrap(),
            b.weights.as_slice_mut().unwrap(),
            b.bias.as_slice_mut().unwrap(),
            c.weights.as_slice_mut().unwrap(),
            c.bias.as_slice_mut().unwrap(),
        ]
    }

    pub fn all_finite(&self) -> bool {
        self.slices().iter().all(|s| s.iter().all(|v| v.is_finite()))
    }

    /// Batch forward. `inputs[b]` lists the active input indices of row `b`.
    pub fn forward(&self, inputs: &[&[usize]], masks: Option<&DropoutMasks>) -> ForwardCache {
        let [l1, l2, l3] = &self.layers;
        let mut pre1 = Array2::zeros((inputs.len(), l1.fan_out()));
        for (mut row, active) in pre1.rows_mut().into_iter().zip(inputs) {
            row.assign(&l1.bias);
            for &i in active.iter() {
                row.scaled_add(1.0, &l1.weights.row(i));
            }
        }
        let mut act1 = pre1.clone();
        relu_in_place(&mut act1);
        if let Some(m) = masks {
            act1 *= &m.hidden1;
        }

        let mut pre2 = act1.dot(&l2.weights);
        add_bias(&mut pre2, &l2.bias);
        let mut act2 = pre2.clone();
        relu_in_place(&mut act2);
        if let Some(m) = masks {
            act2 *= &m.hidden2;
        }

        let mut logits = act2.dot(&l3.weights);
        add_bias(&mut logits, &l3.bias);
        let (probs, log_probs) = softmax_rows(logits);
        ForwardCache {
            pre1,
            act1,
            pre2,
            act2,
            probs,
            log_probs,
        }
    }

    /// Mean cross-entropy of a cached forward pass against integer labels.
    pub fn loss(cache: &ForwardCache, labels: &[usize]) -> f64 {
        let total: f64 = labels.iter().enumerate().map(|(b, &y)| -cache.log_probs[[b, y]]).sum();
        total / labels.len() as f64
    }

    /// Accumulates the gradient of the mean cross-entropy into `grads`.
    pub fn backward(
        &self,
        inputs: &[&[usize]],
        labels: &[usize],
        cache: &ForwardCache,
        masks: Option<&DropoutMasks>,
        grads: &mut Gradients,
    ) {
        let [_, l2, l3] = &self.layers;
        let scale = 1.0 / labels.len() as f64;

        let mut d_logits = cache.probs.clone();
        for (b, &y) in labels.iter().enumerate() {
            d_logits[[b, y]] -= 1.0;
        }
        d_logits *= scale;

        grads.layers[2].weights += &cache.act2.t().dot(&d_logits);
        grads.layers[2].bias += &d_logits.sum_axis(Axis(0));

        let mut d_pre2 = d_logits.dot(&l3.weights.t());
        if let Some(m) = masks {
            d_pre2 *= &m.hidden2;
        }
        Zip::from(&mut d_pre2).and(&cache.pre2).for_each(|d, &z| {
            if z <= 0.0 {
                *d = 0.0
            }
        });

        grads.layers[1].weights += &cache.act1.t().dot(&d_pre2);
        grads.layers[1].bias += &d_pre2.sum_axis(Axis(0));

        let mut d_pre1 = d_pre2.dot(&l2.weights.t());
        if let Some(m) = masks {
            d_pre1 *= &m.hidden1;
        }
        Zip::from(&mut d_pre1).and(&cache.pre1).for_each(|d, &z| {
            if z <= 0.0 {
                *d = 0.0
            }
        });

        grads.layers[0].bias += &d_pre1.sum_axis(Axis(0));
        for (row, active) in d_pre1.rows().into_iter().zip(inputs) {
            for &i in active.iter() {
                if !grads.touched_flag[i] {
                    grads.touched_flag[i] = true;
                    grads.touched.push(i);
                }
                grads.layers[0].weights.row_mut(i).scaled_add(1.0, &row);
            }
        }
    }

    /// Loss and freshly computed gradient for one batch.
    pub fn loss_and_gradients(
        &self,
        inputs: &[&[usize]],
        labels: &[usize],
        masks: Option<&DropoutMasks>,
    ) -> (f64, Gradients) {
        let cache = self.forward(inputs, masks);
        let mut grads = Gradients::zeros_like(self);
        self.backward(inputs, labels, &cache, masks, &mut grads);
        (Network::loss(&cache, labels), grads)
    }
}

/// Numerically stable row-wise softmax; returns `(probs, log_probs)`.
pub fn softmax_rows(mut logits: Array2<f64>) -> (Array2<f64>, Array2<f64>) {
    for mut row in logits.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        let log_sum = row.iter().map(|&v| (v - max).exp()).sum::<f64>().ln();
        row.mapv_inplace(|v| v - max - log_sum);
    }
    let probs = logits.mapv(f64::exp);
    (probs, logits)
}
