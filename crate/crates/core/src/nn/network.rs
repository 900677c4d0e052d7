use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative expressed through the activation output.
    #[inline]
    fn slope_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - a * a,
        }
    }
}

/// Affine map of `[lo, hi]` onto `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinMax {
    pub lo: f64,
    pub hi: f64,
}

impl MinMax {
    pub const IDENTITY: MinMax = MinMax { lo: -1.0, hi: 1.0 };

    /// Fits the map to data. A constant signal gets a unit half-width
    /// around its value so the map stays invertible.
    pub fn fit(data: &[f64]) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::Contract("cannot fit normalization to no data".into()));
        }
        let lo = data.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = data.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::NonFinite("normalization data"));
        }
        if hi > lo {
            Ok(Self { lo, hi })
        } else {
            Ok(Self {
                lo: lo - 1.0,
                hi: hi + 1.0,
            })
        }
    }

    pub fn is_degenerate_fit(data: &[f64]) -> bool {
        data.windows(2).all(|w| w[0] == w[1])
    }

    #[inline]
    pub fn normalize(&self, x: f64) -> f64 {
        2.0 * (x - self.lo) / (self.hi - self.lo) - 1.0
    }

    #[inline]
    pub fn denormalize(&self, y: f64) -> f64 {
        self.lo + 0.5 * (y + 1.0) * (self.hi - self.lo)
    }

    /// `d(physical)/d(normalized)`.
    pub fn gain(&self) -> f64 {
        0.5 * (self.hi - self.lo)
    }
}

/// Normalized inputs and targets, one sample per column.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub x: Array2<f64>,
    pub t: Array2<f64>,
}

impl Batch {
    pub fn new(x: Vec<f64>, t: Vec<f64>) -> Result<Self> {
        if x.len() != t.len() {
            return Err(Error::Contract(format!("{} inputs vs {} targets", x.len(), t.len())));
        }
        let n = x.len();
        Ok(Self {
            x: Array2::from_shape_vec((1, n), x).expect("shape"),
            t: Array2::from_shape_vec((1, n), t).expect("shape"),
        })
    }

    pub fn len(&self) -> usize {
        self.x.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Fully connected network with one scalar input and one scalar output.
/// Parameters live in one flat vector, layer by layer, each layer being
/// its row-major weight matrix followed by its bias.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkModel {
    sizes: Vec<usize>,
    params: Vec<f64>,
    activation: Activation,
    pub input_norm: MinMax,
    pub output_norm: MinMax,
}

impl NetworkModel {
    /// Zero-initialized network with the given hidden widths.
    pub fn new(hidden: &[usize], activation: Activation, input_norm: MinMax, output_norm: MinMax) -> Result<Self> {
        if hidden.contains(&0) {
            return Err(Error::InvalidConfig("hidden layers must be non-empty".into()));
        }
        let mut sizes = Vec::with_capacity(hidden.len() + 2);
        sizes.push(1);
        sizes.extend_from_slice(hidden);
        sizes.push(1);
        let n = sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
        Ok(Self {
            sizes,
            params: vec![0.0; n],
            activation,
            input_norm,
            output_norm,
        })
    }

    pub fn from_parts(
        sizes: Vec<usize>,
        params: Vec<f64>,
        activation: Activation,
        input_norm: MinMax,
        output_norm: MinMax,
    ) -> Result<Self> {
        if sizes.len() < 2 || sizes[0] != 1 || *sizes.last().unwrap() != 1 || sizes.contains(&0) {
            return Err(Error::InvalidConfig(format!("bad layer sizes {sizes:?}")));
        }
        let n: usize = sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
        if params.len() != n {
            return Err(Error::InvalidConfig(format!(
                "expected {n} parameters, got {}",
                params.len()
            )));
        }
        Ok(Self {
            sizes,
            params,
            activation,
            input_norm,
            output_norm,
        })
    }

    /// Uniform in `±sqrt(6 / (fan_in + fan_out))`, zero biases.
    pub fn init_glorot<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let mut off = 0;
        for w in self.sizes.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for p in &mut self.params[off..off + fan_in * fan_out] {
                *p = rng.random_range(-limit..=limit);
            }
            off += fan_in * fan_out;
            for p in &mut self.params[off..off + fan_out] {
                *p = 0.0;
            }
            off += fan_out;
        }
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn hidden(&self) -> &[usize] {
        &self.sizes[1..self.sizes.len() - 1]
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn set_params(&mut self, params: &[f64]) {
        self.params.copy_from_slice(params);
    }

    fn n_layers(&self) -> usize {
        self.sizes.len() - 1
    }

    fn layer_views<'a>(&self, params: &'a [f64]) -> Vec<(ArrayView2<'a, f64>, ArrayView1<'a, f64>)> {
        let mut off = 0;
        self.sizes
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let weights = ArrayView2::from_shape((fan_out, fan_in), &params[off..off + fan_in * fan_out])
                    .expect("layer shape");
                off += fan_in * fan_out;
                let bias = ArrayView1::from(&params[off..off + fan_out]);
                off += fan_out;
                (weights, bias)
            })
            .collect()
    }

    /// Activations of every layer for a normalized input row; the last
    /// entry is the (linear) normalized output.
    fn activations(&self, params: &[f64], x: ArrayView2<f64>) -> Vec<Array2<f64>> {
        let layers = self.layer_views(params);
        let last = layers.len() - 1;
        let mut acts: Vec<Array2<f64>> = Vec::with_capacity(layers.len());
        for (j, (w, b)) in layers.iter().enumerate() {
            let prev = if j == 0 { x } else { acts[j - 1].view() };
            let mut z = w.dot(&prev);
            z += &b.view().insert_axis(Axis(1));
            if j != last {
                let act = self.activation;
                z.mapv_inplace(|v| act.apply(v));
            }
            acts.push(z);
        }
        acts
    }

    /// Physical-units prediction for one speed.
    pub fn forward(&self, v: f64) -> f64 {
        self.forward_batch(&[v])[0]
    }

    pub fn forward_batch(&self, v: &[f64]) -> Vec<f64> {
        let x: Vec<f64> = v.iter().map(|&s| self.input_norm.normalize(s)).collect();
        let x = Array2::from_shape_vec((1, x.len()), x).expect("shape");
        let out = self
            .activations(&self.params, x.view())
            .pop()
            .expect("at least one layer");
        out.iter().map(|&y| self.output_norm.denormalize(y)).collect()
    }

    /// Mean squared error over a normalized batch at `params`.
    pub fn loss_at(&self, params: &[f64], batch: &Batch) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::Contract("loss over an empty batch".into()));
        }
        let out = self.activations(params, batch.x.view()).pop().expect("layer");
        let n = batch.len() as f64;
        Ok(out
            .iter()
            .zip(batch.t.iter())
            .map(|(y, t)| (t - y) * (t - y))
            .sum::<f64>()
            / n)
    }

    /// Loss and its gradient with respect to the flat parameter vector.
    pub fn loss_grad_at(&self, params: &[f64], batch: &Batch) -> Result<(f64, Vec<f64>)> {
        if batch.is_empty() {
            return Err(Error::Contract("gradient over an empty batch".into()));
        }
        let n = batch.len() as f64;
        let layers = self.layer_views(params);
        let acts = self.activations(params, batch.x.view());
        let out = &acts[self.n_layers() - 1];
        let residual = &batch.t - out;
        let loss = residual.iter().map(|r| r * r).sum::<f64>() / n;

        let mut grad = vec![0.0; params.len()];
        let offsets: Vec<usize> = self
            .sizes
            .windows(2)
            .scan(0, |off, w| {
                let start = *off;
                *off += w[0] * w[1] + w[1];
                Some(start)
            })
            .collect();
        // output-layer delta, per sample, scaled by 1/N for the mean
        let mut delta: Array2<f64> = residual.mapv(|r| -2.0 * r / n);
        for j in (0..self.n_layers()).rev() {
            let prev = if j == 0 { batch.x.view() } else { acts[j - 1].view() };
            let gw = delta.dot(&prev.t());
            let gb = delta.sum_axis(Axis(1));
            let (fan_in, fan_out) = (self.sizes[j], self.sizes[j + 1]);
            let off = offsets[j];
            grad[off..off + fan_in * fan_out].copy_from_slice(gw.as_standard_layout().as_slice().expect("contiguous"));
            grad[off + fan_in * fan_out..off + fan_in * fan_out + fan_out]
                .copy_from_slice(gb.as_slice().expect("contiguous"));
            if j > 0 {
                let mut back = layers[j].0.t().dot(&delta);
                let act = self.activation;
                back.zip_mut_with(&acts[j - 1], |d, &a| *d *= act.slope_from_output(a));
                delta = back;
            }
        }
        Ok((loss, grad))
    }

    pub fn loss(&self, batch: &Batch) -> Result<f64> {
        self.loss_at(&self.params, batch)
    }

    pub fn loss_grad(&self, batch: &Batch) -> Result<(f64, Vec<f64>)> {
        self.loss_grad_at(&self.params, batch)
    }

    /// Builds a normalized batch from physical samples.
    pub fn batch(&self, v: &[f64], u: &[f64]) -> Result<Batch> {
        Batch::new(
            v.iter().map(|&s| self.input_norm.normalize(s)).collect(),
            u.iter().map(|&s| self.output_norm.normalize(s)).collect(),
        )
    }

    /// Weight matrices and biases as owned arrays, for inspection.
    pub fn layers(&self) -> Vec<(Array2<f64>, Array1<f64>)> {
        self.layer_views(&self.params)
            .into_iter()
            .map(|(w, b)| (w.to_owned(), b.to_owned()))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_network_outputs_zero() {
        let net = NetworkModel::new(&[5, 3], Activation::Tanh, MinMax::IDENTITY, MinMax::IDENTITY).unwrap();
        for v in [-3.0, 0.0, 0.7, 12.0] {
            assert_eq!(net.forward(v), 0.0);
        }
    }

    #[test]
    fn single_hidden_unit_by_hand() {
        // u = 1.5 * tanh(2 v - 0.5) + 0.25
        let net = NetworkModel::from_parts(
            vec![1, 1, 1],
            vec![2.0, -0.5, 1.5, 0.25],
            Activation::Tanh,
            MinMax::IDENTITY,
            MinMax::IDENTITY,
        )
        .unwrap();
        for v in [-1.0, 0.0, 0.3, 0.9] {
            let expected = 1.5 * (2.0 * v - 0.5f64).tanh() + 0.25;
            assert_relative_eq!(net.forward(v), expected, epsilon = 1e-15);
        }
        assert_eq!(net.forward(0.3), net.forward(0.3));
    }

    #[test]
    fn normalization_maps_range_onto_unit_interval() {
        let m = MinMax::fit(&[2.0, 5.0, 3.0]).unwrap();
        assert_eq!(m.normalize(2.0), -1.0);
        assert_eq!(m.normalize(5.0), 1.0);
        let c = MinMax::fit(&[4.0, 4.0]).unwrap();
        assert_eq!(c.normalize(4.0), 0.0);
        assert!(MinMax::is_degenerate_fit(&[4.0, 4.0]));
    }

    #[test]
    fn output_delta_is_twice_the_residual() {
        // For one sample, dJ/d(output bias) is the output-layer delta.
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut net = NetworkModel::new(&[4], Activation::Tanh, MinMax::IDENTITY, MinMax::IDENTITY).unwrap();
        net.init_glorot(&mut rng);
        let batch = Batch::new(vec![0.4], vec![0.9]).unwrap();
        let y = net.forward(0.4);
        let (_, g) = net.loss_grad(&batch).unwrap();
        assert_relative_eq!(*g.last().unwrap(), -2.0 * (0.9 - y), epsilon = 1e-14);
    }

    #[test]
    fn perfect_fit_has_zero_loss_and_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut net = NetworkModel::new(&[3, 2], Activation::Tanh, MinMax::IDENTITY, MinMax::IDENTITY).unwrap();
        net.init_glorot(&mut rng);
        let x = vec![-0.5, 0.1, 0.8];
        let t = net.forward_batch(&x);
        let (loss, g) = net.loss_grad(&Batch::new(x, t).unwrap()).unwrap();
        assert!(loss < 1e-28);
        assert!(g.iter().all(|&gi| gi.abs() < 1e-14));
    }

    #[test]
    fn empty_batch_is_a_contract_violation() {
        let net = NetworkModel::new(&[2], Activation::Tanh, MinMax::IDENTITY, MinMax::IDENTITY).unwrap();
        let empty = Batch::new(vec![], vec![]).unwrap();
        assert!(matches!(net.loss_grad(&empty), Err(Error::Contract(_))));
    }

    proptest! {
        #[test]
        fn normalization_round_trips(lo in -1e3f64..1e3, width in 1e-3f64..1e3, x in -2e3f64..2e3) {
            let m = MinMax { lo, hi: lo + width };
            let back = m.denormalize(m.normalize(x));
            prop_assert!((back - x).abs() <= 1e-12 * (1.0 + x.abs() + lo.abs() + width));
        }
    }
}
