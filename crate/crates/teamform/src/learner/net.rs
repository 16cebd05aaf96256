//! Hand-rolled function approximators with explicit backward passes: a ReLU
//! MLP for action values and a small convolutional actor-critic trunk. Both
//! expose their parameters as flat slices so the optimizers and eligibility
//! traces stay shape-agnostic.

use ndarray::{Array1, Array2, Array3, Array4};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Anything holding parameters (or gradients with the same layout) as a
/// fixed, ordered collection of dense slices.
pub trait ParamSet {
    fn slices(&self) -> Vec<&[f64]>;
    fn slices_mut(&mut self) -> Vec<&mut [f64]>;

    fn flat_len(&self) -> usize {
        self.slices().iter().map(|s| s.len()).sum()
    }

    fn all_finite(&self) -> bool {
        self.slices().iter().all(|s| s.iter().all(|x| x.is_finite()))
    }

    fn get_flat(&self, idx: usize) -> f64 {
        let mut offset = 0;
        for s in self.slices() {
            if idx < offset + s.len() {
                return s[idx - offset];
            }
            offset += s.len();
        }
        panic!("flat index out of range");
    }

    fn add_flat(&mut self, idx: usize, delta: f64) {
        let mut offset = 0;
        for s in self.slices_mut() {
            if idx < offset + s.len() {
                s[idx - offset] += delta;
                return;
            }
            offset += s.len();
        }
        panic!("flat index out of range");
    }

    /// self = a*self + b*other, elementwise over the shared layout.
    fn scale_add(&mut self, a: f64, other: &dyn ParamSet, b: f64) {
        let theirs = other.slices();
        for (mine, other) in self.slices_mut().into_iter().zip(theirs) {
            for (x, y) in mine.iter_mut().zip(other) {
                *x = a * *x + b * *y;
            }
        }
    }

    fn zero(&mut self) {
        for s in self.slices_mut() {
            s.fill(0.0);
        }
    }
}

fn relu(x: f64) -> f64 {
    x.max(0.0)
}

/// y = W x + b. He-normal initialization; `scale` shrinks head layers so
/// fresh nets start near zero outputs (uniform policies, zero values).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Dense {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
    pub use_bias: bool,
}

impl Dense {
    pub fn new<R: Rng + ?Sized>(
        n_in: usize,
        n_out: usize,
        use_bias: bool,
        scale: f64,
        rng: &mut R,
    ) -> Self {
        let std = (2.0 / n_in as f64).sqrt() * scale;
        let dist = Normal::new(0.0, std).unwrap();
        let w = Array2::from_shape_fn((n_out, n_in), |_| dist.sample(rng));
        Dense { w, b: Array1::zeros(n_out), use_bias }
    }

    pub fn forward(&self, x: &Array1<f64>) -> Array1<f64> {
        let mut y = self.w.dot(x);
        if self.use_bias {
            y += &self.b;
        }
        y
    }

    /// Returns (dW, db, dx) for upstream gradient `gout`. Rows with zero
    /// upstream gradient are skipped, which matters for the one-hot head
    /// gradients of the action-value net.
    pub fn backward(
        &self,
        x: &Array1<f64>,
        gout: &Array1<f64>,
    ) -> (Array2<f64>, Array1<f64>, Array1<f64>) {
        let mut dw = Array2::zeros((gout.len(), x.len()));
        let mut dx = Array1::zeros(x.len());
        let xs = x.as_slice().unwrap();
        let dxs = dx.as_slice_mut().unwrap();
        for (i, g) in gout.iter().enumerate() {
            if *g == 0.0 {
                continue;
            }
            let wrow = self.w.row(i);
            let wrow = wrow.as_slice().unwrap();
            let dwrow = dw.row_mut(i);
            let dwrow = dwrow.into_slice().unwrap();
            for j in 0..xs.len() {
                dwrow[j] = g * xs[j];
                dxs[j] += g * wrow[j];
            }
        }
        let db = if self.use_bias { gout.clone() } else { Array1::zeros(gout.len()) };
        (dw, db, dx)
    }
}

/// ReLU MLP with a linear output layer.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<Dense>,
}

/// Gradient (or trace / optimizer moment) buffer shaped like an [`Mlp`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MlpGrads {
    pub blocks: Vec<(Array2<f64>, Array1<f64>)>,
}

pub struct MlpCache {
    /// Input to each layer (post-activation of the previous one).
    inputs: Vec<Array1<f64>>,
    /// Pre-activation output of each layer.
    pre: Vec<Array1<f64>>,
}

impl Mlp {
    /// `dims` lists input, hidden..., output sizes. The output layer is
    /// down-scaled at init and may drop its bias (tabular tests want a pure
    /// weight lookup).
    pub fn new<R: Rng + ?Sized>(dims: &[usize], output_bias: bool, rng: &mut R) -> Self {
        assert!(dims.len() >= 2, "need at least input and output dims");
        let mut layers = Vec::with_capacity(dims.len() - 1);
        for k in 0..dims.len() - 1 {
            let last = k == dims.len() - 2;
            let scale = if last { 0.01 } else { 1.0 };
            layers.push(Dense::new(dims[k], dims[k + 1], !last || output_bias, scale, rng));
        }
        Mlp { layers }
    }

    pub fn zeros_like_grads(&self) -> MlpGrads {
        MlpGrads {
            blocks: self
                .layers
                .iter()
                .map(|l| (Array2::zeros(l.w.raw_dim()), Array1::zeros(l.b.raw_dim())))
                .collect(),
        }
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].w.ncols()
    }

    pub fn out_dim(&self) -> usize {
        self.layers.last().unwrap().w.nrows()
    }

    pub fn forward(&self, x: &[f64]) -> Array1<f64> {
        let mut h = Array1::from_iter(x.iter().cloned());
        for (k, layer) in self.layers.iter().enumerate() {
            h = layer.forward(&h);
            if k + 1 < self.layers.len() {
                h.mapv_inplace(relu);
            }
        }
        h
    }

    pub fn forward_cached(&self, x: &[f64]) -> (Array1<f64>, MlpCache) {
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut h = Array1::from_iter(x.iter().cloned());
        for (k, layer) in self.layers.iter().enumerate() {
            inputs.push(h.clone());
            let z = layer.forward(&h);
            pre.push(z.clone());
            h = if k + 1 < self.layers.len() { z.mapv(relu) } else { z };
        }
        (h, MlpCache { inputs, pre })
    }

    /// Backprop `dout` (gradient at the linear output) to parameter space.
    pub fn backward(&self, cache: &MlpCache, dout: &Array1<f64>) -> MlpGrads {
        let mut blocks: Vec<(Array2<f64>, Array1<f64>)> = Vec::with_capacity(self.layers.len());
        let mut g = dout.clone();
        for k in (0..self.layers.len()).rev() {
            let (dw, db, dx) = self.layers[k].backward(&cache.inputs[k], &g);
            blocks.push((dw, db));
            if k > 0 {
                g = dx;
                for (gi, zi) in g.iter_mut().zip(cache.pre[k - 1].iter()) {
                    if *zi <= 0.0 {
                        *gi = 0.0;
                    }
                }
            }
        }
        blocks.reverse();
        MlpGrads { blocks }
    }
}

impl ParamSet for Mlp {
    fn slices(&self) -> Vec<&[f64]> {
        let mut out = Vec::with_capacity(self.layers.len() * 2);
        for l in &self.layers {
            out.push(l.w.as_slice().unwrap());
            out.push(l.b.as_slice().unwrap());
        }
        out
    }

    fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::with_capacity(self.layers.len() * 2);
        for l in &mut self.layers {
            out.push(l.w.as_slice_mut().unwrap());
            out.push(l.b.as_slice_mut().unwrap());
        }
        out
    }
}

impl ParamSet for MlpGrads {
    fn slices(&self) -> Vec<&[f64]> {
        let mut out = Vec::with_capacity(self.blocks.len() * 2);
        for (w, b) in &self.blocks {
            out.push(w.as_slice().unwrap());
            out.push(b.as_slice().unwrap());
        }
        out
    }

    fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::with_capacity(self.blocks.len() * 2);
        for (w, b) in &mut self.blocks {
            out.push(w.as_slice_mut().unwrap());
            out.push(b.as_slice_mut().unwrap());
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamHyper {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        AdamHyper { learning_rate: 1e-4, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// Optimizer over flat parameter space. Adam keeps first/second moments;
/// `Sgd` is the plain-gradient variant used by the tabular-equivalence tests.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Optimizer {
    Sgd { learning_rate: f64 },
    Adam { hyper: AdamHyper, m: Vec<f64>, v: Vec<f64>, t: u64 },
}

impl Optimizer {
    pub fn sgd(learning_rate: f64) -> Self {
        Optimizer::Sgd { learning_rate }
    }

    pub fn adam(hyper: AdamHyper, param_len: usize) -> Self {
        Optimizer::Adam { hyper, m: vec![0.0; param_len], v: vec![0.0; param_len], t: 0 }
    }

    /// Apply one minimization step for gradient `grads`.
    pub fn step(&mut self, params: &mut dyn ParamSet, grads: &dyn ParamSet) {
        match self {
            Optimizer::Sgd { learning_rate } => {
                params.scale_add(1.0, grads, -*learning_rate);
            }
            Optimizer::Adam { hyper, m, v, t } => {
                *t += 1;
                let inv_b1t = 1.0 / (1.0 - hyper.beta1.powi(*t as i32));
                let inv_b2t = 1.0 / (1.0 - hyper.beta2.powi(*t as i32));
                let (b1, b2) = (hyper.beta1, hyper.beta2);
                let (c1, c2) = (1.0 - b1, 1.0 - b2);
                let mut offset = 0;
                let gslices = grads.slices();
                for (pslice, gslice) in params.slices_mut().into_iter().zip(gslices) {
                    for (k, (p, g)) in pslice.iter_mut().zip(gslice).enumerate() {
                        let i = offset + k;
                        // untouched parameters (zero gradient so far) need no step
                        if *g == 0.0 && m[i] == 0.0 && v[i] == 0.0 {
                            continue;
                        }
                        m[i] = b1 * m[i] + c1 * g;
                        v[i] = b2 * v[i] + c2 * g * g;
                        let mhat = m[i] * inv_b1t;
                        let vhat = v[i] * inv_b2t;
                        *p -= hyper.learning_rate * mhat / (vhat.sqrt() + hyper.eps);
                    }
                    offset += pslice.len();
                }
            }
        }
    }
}

/// Actor-critic network for the spatial environment: one convolution over
/// the ego window (valid padding), then two ReLU layers shared by linear
/// policy and value heads. Flat features are concatenated after the
/// convolution.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvAc {
    pub conv_w: Array4<f64>, // (out_c, in_c, k, k)
    pub conv_b: Array1<f64>,
    pub fc1: Dense,
    pub fc2: Dense,
    pub policy: Dense,
    pub value: Dense,
    pub in_channels: usize,
    pub in_size: usize,
    pub extras_len: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvAcGrads {
    pub conv_w: Array4<f64>,
    pub conv_b: Array1<f64>,
    pub fc1: (Array2<f64>, Array1<f64>),
    pub fc2: (Array2<f64>, Array1<f64>),
    pub policy: (Array2<f64>, Array1<f64>),
    pub value: (Array2<f64>, Array1<f64>),
}

pub struct ConvAcCache {
    grid: Array3<f64>,
    conv_pre: Array3<f64>,
    trunk_in: Array1<f64>,
    fc1_pre: Array1<f64>,
    fc1_out: Array1<f64>,
    fc2_pre: Array1<f64>,
    fc2_out: Array1<f64>,
    pub logits: Array1<f64>,
    pub value: f64,
}

pub const CONV_CHANNELS: usize = 6;
pub const CONV_KERNEL: usize = 3;

impl ConvAc {
    pub fn new<R: Rng + ?Sized>(
        in_channels: usize,
        in_size: usize,
        extras_len: usize,
        n_actions: usize,
        hidden: usize,
        rng: &mut R,
    ) -> Self {
        let fan_in = in_channels * CONV_KERNEL * CONV_KERNEL;
        let dist = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).unwrap();
        let conv_w = Array4::from_shape_fn(
            (CONV_CHANNELS, in_channels, CONV_KERNEL, CONV_KERNEL),
            |_| dist.sample(rng),
        );
        let out_size = in_size - CONV_KERNEL + 1;
        let trunk_in = CONV_CHANNELS * out_size * out_size + extras_len;
        ConvAc {
            conv_w,
            conv_b: Array1::zeros(CONV_CHANNELS),
            fc1: Dense::new(trunk_in, hidden, true, 1.0, rng),
            fc2: Dense::new(hidden, hidden, true, 1.0, rng),
            policy: Dense::new(hidden, n_actions, true, 0.01, rng),
            value: Dense::new(hidden, 1, true, 0.01, rng),
            in_channels,
            in_size,
            extras_len,
        }
    }

    pub fn n_actions(&self) -> usize {
        self.policy.w.nrows()
    }

    fn conv_out_size(&self) -> usize {
        self.in_size - CONV_KERNEL + 1
    }

    /// `grid` is (channels, size, size); `extras` is the flat feature tail.
    pub fn forward_cached(&self, grid: &Array3<f64>, extras: &[f64]) -> Result<ConvAcCache> {
        if grid.dim() != (self.in_channels, self.in_size, self.in_size) {
            return Err(Error::Contract(format!(
                "grid shape {:?} does not match ({}, {}, {})",
                grid.dim(),
                self.in_channels,
                self.in_size,
                self.in_size
            )));
        }
        if extras.len() != self.extras_len {
            return Err(Error::Contract(format!(
                "extras len {} != {}",
                extras.len(),
                self.extras_len
            )));
        }
        let out = self.conv_out_size();
        let mut conv_pre = Array3::zeros((CONV_CHANNELS, out, out));
        for o in 0..CONV_CHANNELS {
            for i in 0..out {
                for j in 0..out {
                    let mut acc = self.conv_b[o];
                    for c in 0..self.in_channels {
                        for di in 0..CONV_KERNEL {
                            for dj in 0..CONV_KERNEL {
                                acc += self.conv_w[(o, c, di, dj)] * grid[(c, i + di, j + dj)];
                            }
                        }
                    }
                    conv_pre[(o, i, j)] = acc;
                }
            }
        }
        let mut trunk_in = Array1::zeros(CONV_CHANNELS * out * out + self.extras_len);
        for (k, v) in conv_pre.iter().enumerate() {
            trunk_in[k] = relu(*v);
        }
        for (k, v) in extras.iter().enumerate() {
            trunk_in[CONV_CHANNELS * out * out + k] = *v;
        }
        let fc1_pre = self.fc1.forward(&trunk_in);
        let fc1_out = fc1_pre.mapv(relu);
        let fc2_pre = self.fc2.forward(&fc1_out);
        let fc2_out = fc2_pre.mapv(relu);
        let logits = self.policy.forward(&fc2_out);
        let value = self.value.forward(&fc2_out)[0];
        Ok(ConvAcCache {
            grid: grid.clone(),
            conv_pre,
            trunk_in,
            fc1_pre,
            fc1_out,
            fc2_pre,
            fc2_out,
            logits,
            value,
        })
    }

    /// Masked policy distribution and state value; masked actions get
    /// probability exactly 0.
    pub fn policy_value(
        &self,
        grid: &Array3<f64>,
        extras: &[f64],
        mask: Option<&[bool]>,
    ) -> Result<(Vec<f64>, f64)> {
        let cache = self.forward_cached(grid, extras)?;
        let probs = masked_softmax(cache.logits.as_slice().unwrap(), mask)?;
        Ok((probs, cache.value))
    }

    /// Backprop given gradients at the policy logits and at the value output.
    pub fn backward(
        &self,
        cache: &ConvAcCache,
        dlogits: &Array1<f64>,
        dvalue: f64,
    ) -> ConvAcGrads {
        let (dpol_w, dpol_b, dx_pol) = self.policy.backward(&cache.fc2_out, dlogits);
        let dval_arr = Array1::from(vec![dvalue]);
        let (dval_w, dval_b, dx_val) = self.value.backward(&cache.fc2_out, &dval_arr);
        let mut g2 = dx_pol + dx_val;
        for (gi, zi) in g2.iter_mut().zip(cache.fc2_pre.iter()) {
            if *zi <= 0.0 {
                *gi = 0.0;
            }
        }
        let (dfc2_w, dfc2_b, mut g1) = self.fc2.backward(&cache.fc1_out, &g2);
        for (gi, zi) in g1.iter_mut().zip(cache.fc1_pre.iter()) {
            if *zi <= 0.0 {
                *gi = 0.0;
            }
        }
        let (dfc1_w, dfc1_b, dtrunk) = self.fc1.backward(&cache.trunk_in, &g1);
        let out = self.conv_out_size();
        let mut dconv_w = Array4::zeros(self.conv_w.raw_dim());
        let mut dconv_b = Array1::zeros(CONV_CHANNELS);
        for o in 0..CONV_CHANNELS {
            for i in 0..out {
                for j in 0..out {
                    if cache.conv_pre[(o, i, j)] <= 0.0 {
                        continue;
                    }
                    let g = dtrunk[o * out * out + i * out + j];
                    if g == 0.0 {
                        continue;
                    }
                    dconv_b[o] += g;
                    for c in 0..self.in_channels {
                        for di in 0..CONV_KERNEL {
                            for dj in 0..CONV_KERNEL {
                                dconv_w[(o, c, di, dj)] += g * cache.grid[(c, i + di, j + dj)];
                            }
                        }
                    }
                }
            }
        }
        ConvAcGrads {
            conv_w: dconv_w,
            conv_b: dconv_b,
            fc1: (dfc1_w, dfc1_b),
            fc2: (dfc2_w, dfc2_b),
            policy: (dpol_w, dpol_b),
            value: (dval_w, dval_b),
        }
    }

    pub fn zeros_like_grads(&self) -> ConvAcGrads {
        ConvAcGrads {
            conv_w: Array4::zeros(self.conv_w.raw_dim()),
            conv_b: Array1::zeros(self.conv_b.raw_dim()),
            fc1: (Array2::zeros(self.fc1.w.raw_dim()), Array1::zeros(self.fc1.b.raw_dim())),
            fc2: (Array2::zeros(self.fc2.w.raw_dim()), Array1::zeros(self.fc2.b.raw_dim())),
            policy: (
                Array2::zeros(self.policy.w.raw_dim()),
                Array1::zeros(self.policy.b.raw_dim()),
            ),
            value: (Array2::zeros(self.value.w.raw_dim()), Array1::zeros(self.value.b.raw_dim())),
        }
    }
}

macro_rules! convac_slices {
    ($self:ident, $slice:ident) => {
        vec![
            $self.conv_w.$slice().unwrap(),
            $self.conv_b.$slice().unwrap(),
            $self.fc1.w.$slice().unwrap(),
            $self.fc1.b.$slice().unwrap(),
            $self.fc2.w.$slice().unwrap(),
            $self.fc2.b.$slice().unwrap(),
            $self.policy.w.$slice().unwrap(),
            $self.policy.b.$slice().unwrap(),
            $self.value.w.$slice().unwrap(),
            $self.value.b.$slice().unwrap(),
        ]
    };
}

macro_rules! convac_grad_slices {
    ($self:ident, $slice:ident) => {
        vec![
            $self.conv_w.$slice().unwrap(),
            $self.conv_b.$slice().unwrap(),
            $self.fc1.0.$slice().unwrap(),
            $self.fc1.1.$slice().unwrap(),
            $self.fc2.0.$slice().unwrap(),
            $self.fc2.1.$slice().unwrap(),
            $self.policy.0.$slice().unwrap(),
            $self.policy.1.$slice().unwrap(),
            $self.value.0.$slice().unwrap(),
            $self.value.1.$slice().unwrap(),
        ]
    };
}

impl ParamSet for ConvAc {
    fn slices(&self) -> Vec<&[f64]> {
        convac_slices!(self, as_slice)
    }
    fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        convac_slices!(self, as_slice_mut)
    }
}

impl ParamSet for ConvAcGrads {
    fn slices(&self) -> Vec<&[f64]> {
        convac_grad_slices!(self, as_slice)
    }
    fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        convac_grad_slices!(self, as_slice_mut)
    }
}

/// Softmax restricted to unmasked entries. Errors when nothing is legal.
pub fn masked_softmax(logits: &[f64], mask: Option<&[bool]>) -> Result<Vec<f64>> {
    let legal = |i: usize| mask.map_or(true, |m| m[i]);
    if let Some(m) = mask {
        if m.len() != logits.len() {
            return Err(Error::Contract("mask length mismatch".into()));
        }
        if !m.iter().any(|&x| x) {
            return Err(Error::Contract("empty action mask".into()));
        }
    }
    let max = logits
        .iter()
        .enumerate()
        .filter(|(i, _)| legal(*i))
        .map(|(_, &v)| v)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut probs = vec![0.0; logits.len()];
    let mut z = 0.0;
    for (i, &l) in logits.iter().enumerate() {
        if legal(i) {
            let e = (l - max).exp();
            probs[i] = e;
            z += e;
        }
    }
    for p in &mut probs {
        *p /= z;
    }
    Ok(probs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_parameters_give_zero_outputs_and_uniform_policies() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut mlp = Mlp::new(&[4, 8, 3], true, &mut rng);
        for s in mlp.slices_mut() {
            s.fill(0.0);
        }
        let q = mlp.forward(&[0.3, -0.2, 0.9, 0.1]);
        assert!(q.iter().all(|&v| v == 0.0));
        let probs = masked_softmax(q.as_slice().unwrap(), None).unwrap();
        for p in probs {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn masked_actions_have_zero_probability() {
        let logits = [1.0, 2.0, 3.0, -1.0];
        let mask = [true, false, true, false];
        let probs = masked_softmax(&logits, Some(&mask)).unwrap();
        assert_eq!(probs[1], 0.0);
        assert_eq!(probs[3], 0.0);
        assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    /// Central finite differences against the analytic MLP gradient of a
    /// single action value.
    #[test]
    fn mlp_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for trial in 0..6 {
            let n_in = 2 + (trial % 3);
            let n_out = 2 + (trial % 2);
            let mut mlp = Mlp::new(&[n_in, 5, 4, n_out], true, &mut rng);
            // head scale 0.01 makes grads tiny; bump weights for a fair check
            for s in mlp.slices_mut() {
                for v in s.iter_mut() {
                    *v += 0.1 * (rng.gen::<f64>() - 0.5);
                }
            }
            let x: Vec<f64> = (0..n_in).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
            let a = rng.gen_range(0..n_out);
            let (out, cache) = mlp.forward_cached(&x);
            let mut dout = Array1::zeros(out.len());
            dout[a] = 1.0;
            let grads = mlp.backward(&cache, &dout);
            let flat_len = mlp.flat_len();
            let h = 1e-5;
            for _ in 0..60 {
                let idx = rng.gen_range(0..flat_len);
                let analytic = grads.get_flat(idx);
                mlp.add_flat(idx, h);
                let up = mlp.forward(&x)[a];
                mlp.add_flat(idx, -2.0 * h);
                let down = mlp.forward(&x)[a];
                mlp.add_flat(idx, h);
                let numeric = (up - down) / (2.0 * h);
                let denom = analytic.abs().max(numeric.abs()).max(1e-6);
                assert!(
                    (analytic - numeric).abs() / denom < 1e-4,
                    "idx {idx}: analytic {analytic} vs numeric {numeric}"
                );
            }
        }
    }

    #[test]
    fn adam_first_step_with_zero_gradient_is_a_no_op() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut mlp = Mlp::new(&[3, 4, 2], true, &mut rng);
        let before: Vec<f64> = mlp.slices().concat();
        let zeros = mlp.zeros_like_grads();
        let mut opt = Optimizer::adam(AdamHyper::default(), mlp.flat_len());
        opt.step(&mut mlp, &zeros);
        assert_eq!(before, mlp.slices().concat());
    }

    #[test]
    fn zero_learning_rate_changes_nothing() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut mlp = Mlp::new(&[3, 4, 2], true, &mut rng);
        let before: Vec<f64> = mlp.slices().concat();
        let mut grads = mlp.zeros_like_grads();
        for s in grads.slices_mut() {
            s.fill(1.0);
        }
        let mut opt =
            Optimizer::adam(AdamHyper { learning_rate: 0.0, ..Default::default() }, mlp.flat_len());
        opt.step(&mut mlp, &grads);
        assert_eq!(before, mlp.slices().concat());
    }
}
