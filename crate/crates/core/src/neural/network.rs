//! Two stacked LSTM layers followed by a dense head.
//!
//! All weights live in one flat row-major buffer so the optimizer and the
//! gradient accumulators can treat them as a single vector. Gate rows are
//! ordered input, forget, cell candidate, output.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HeadKind {
    /// Softmax over actions; the network plays the strategy directly.
    StrategySoftmax,
    /// `alpha * tanh(.)`; the network predicts the next regret.
    PredictionBounded,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub input: usize,
    pub hidden: usize,
    pub actions: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Block {
    Layer1Input,
    Layer1Recurrent,
    Layer1Bias,
    Layer2Input,
    Layer2Recurrent,
    Layer2Bias,
    HeadWeight,
    HeadBias,
}

impl Block {
    pub const ALL: [Block; 8] = [
        Block::Layer1Input,
        Block::Layer1Recurrent,
        Block::Layer1Bias,
        Block::Layer2Input,
        Block::Layer2Recurrent,
        Block::Layer2Bias,
        Block::HeadWeight,
        Block::HeadBias,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Block::Layer1Input => "layer1.w_input",
            Block::Layer1Recurrent => "layer1.w_recurrent",
            Block::Layer1Bias => "layer1.bias",
            Block::Layer2Input => "layer2.w_input",
            Block::Layer2Recurrent => "layer2.w_recurrent",
            Block::Layer2Bias => "layer2.bias",
            Block::HeadWeight => "head.weight",
            Block::HeadBias => "head.bias",
        }
    }

    /// `(rows, cols)`; biases are `(n, 1)`.
    pub fn shape(self, dims: Dims) -> (usize, usize) {
        let g = 4 * dims.hidden;
        match self {
            Block::Layer1Input => (g, dims.input),
            Block::Layer1Recurrent | Block::Layer2Input | Block::Layer2Recurrent => {
                (g, dims.hidden)
            }
            Block::Layer1Bias | Block::Layer2Bias => (g, 1),
            Block::HeadWeight => (dims.actions, dims.hidden),
            Block::HeadBias => (dims.actions, 1),
        }
    }

    pub fn len(self, dims: Dims) -> usize {
        let (r, c) = self.shape(dims);
        r * c
    }

    pub fn offset(self, dims: Dims) -> usize {
        Block::ALL
            .iter()
            .take_while(|b| **b != self)
            .map(|b| b.len(dims))
            .sum()
    }
}

pub fn param_count(dims: Dims) -> usize {
    Block::ALL.iter().map(|b| b.len(dims)).sum()
}

#[derive(Clone, Debug, PartialEq)]
pub struct NetworkParams {
    dims: Dims,
    head: HeadKind,
    alpha: f64,
    data: Vec<f64>,
}

impl NetworkParams {
    /// Uniform `[-1/sqrt(fan_in), 1/sqrt(fan_in)]` recurrent weights and a
    /// zero head, so an untrained predictor outputs exactly zero and an
    /// untrained strategy head outputs the uniform strategy.
    pub fn init<R: Rng + ?Sized>(
        dims: Dims,
        head: HeadKind,
        alpha: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let mut params = Self::zeros(dims, head, alpha)?;
        for (block, fan_in) in [
            (Block::Layer1Input, dims.input + dims.hidden),
            (Block::Layer1Recurrent, dims.input + dims.hidden),
            (Block::Layer1Bias, dims.input + dims.hidden),
            (Block::Layer2Input, 2 * dims.hidden),
            (Block::Layer2Recurrent, 2 * dims.hidden),
            (Block::Layer2Bias, 2 * dims.hidden),
        ] {
            let bound = 1.0 / (fan_in as f64).sqrt();
            for w in params.block_mut(block) {
                *w = rng.random_range(-bound..=bound);
            }
        }
        Ok(params)
    }

    pub fn zeros(dims: Dims, head: HeadKind, alpha: f64) -> Result<Self> {
        if dims.input == 0 || dims.hidden == 0 || dims.actions == 0 {
            return Err(Error::InvalidArgument(format!(
                "degenerate network dims {dims:?}"
            )));
        }
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "alpha must be finite and >= 0, got {alpha}"
            )));
        }
        Ok(NetworkParams {
            dims,
            head,
            alpha,
            data: vec![0.0; param_count(dims)],
        })
    }

    pub fn from_parts(dims: Dims, head: HeadKind, alpha: f64, data: Vec<f64>) -> Result<Self> {
        let mut params = Self::zeros(dims, head, alpha)?;
        check_dim(params.data.len(), data.len())?;
        if data.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidArgument("non-finite weight".into()));
        }
        params.data = data;
        Ok(params)
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn head_kind(&self) -> HeadKind {
        self.head
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn block(&self, block: Block) -> &[f64] {
        let off = block.offset(self.dims);
        &self.data[off..off + block.len(self.dims)]
    }

    pub fn block_mut(&mut self, block: Block) -> &mut [f64] {
        let off = block.offset(self.dims);
        let len = block.len(self.dims);
        &mut self.data[off..off + len]
    }

    /// Maps the raw head pre-activation to the head output.
    pub fn head_output(&self, pre: &[f64]) -> Vec<f64> {
        match self.head {
            HeadKind::StrategySoftmax => softmax(pre),
            HeadKind::PredictionBounded => pre.iter().map(|y| self.alpha * y.tanh()).collect(),
        }
    }

    /// One forward step; `state` is advanced in place.
    pub fn step(&self, input: &[f64], state: &mut RecurrentState) -> Result<StepCache> {
        check_dim(self.dims.input, input.len())?;
        let d = self.dims;
        let l1 = lstm_forward(
            d.hidden,
            self.block(Block::Layer1Input),
            self.block(Block::Layer1Recurrent),
            self.block(Block::Layer1Bias),
            input,
            &state.h[0],
            &state.c[0],
        );
        let l2 = lstm_forward(
            d.hidden,
            self.block(Block::Layer2Input),
            self.block(Block::Layer2Recurrent),
            self.block(Block::Layer2Bias),
            &l1.h,
            &state.h[1],
            &state.c[1],
        );
        let w = self.block(Block::HeadWeight);
        let b = self.block(Block::HeadBias);
        let head: Vec<f64> = (0..d.actions)
            .map(|a| b[a] + dot(&w[a * d.hidden..(a + 1) * d.hidden], &l2.h))
            .collect();
        if head.iter().any(|y| !y.is_finite()) {
            return Err(Error::Numeric {
                step: 0,
                what: "recurrent head activation".into(),
            });
        }
        state.h[0].clone_from(&l1.h);
        state.c[0].clone_from(&l1.c);
        state.h[1].clone_from(&l2.h);
        state.c[1].clone_from(&l2.c);
        Ok(StepCache {
            layers: [l1, l2],
            head,
        })
    }

    /// Backward through one step.
    ///
    /// `d_head` is the gradient w.r.t. the head pre-activation; `carry` holds
    /// the hidden and cell gradients flowing back from the following step and
    /// is replaced by the gradients w.r.t. this step's incoming state.
    pub fn step_backward(
        &self,
        cache: &StepCache,
        d_head: &[f64],
        carry: &mut StateGrad,
        grads: &mut [f64],
    ) {
        let d = self.dims;
        let hidden = d.hidden;
        let (hw_off, hb_off) = (Block::HeadWeight.offset(d), Block::HeadBias.offset(d));
        let w = self.block(Block::HeadWeight);
        let mut dh2 = carry.h[1].clone();
        for a in 0..d.actions {
            let g = d_head[a];
            if g == 0.0 {
                continue;
            }
            grads[hb_off + a] += g;
            let row = &mut grads[hw_off + a * hidden..hw_off + (a + 1) * hidden];
            for (gw, h) in row.iter_mut().zip(&cache.layers[1].h) {
                *gw += g * h;
            }
            for (dh, wv) in dh2.iter_mut().zip(&w[a * hidden..(a + 1) * hidden]) {
                *dh += g * wv;
            }
        }

        let l2 = lstm_backward(
            hidden,
            self.block(Block::Layer2Input),
            self.block(Block::Layer2Recurrent),
            &cache.layers[1],
            &dh2,
            &carry.c[1],
            grads,
            [
                Block::Layer2Input,
                Block::Layer2Recurrent,
                Block::Layer2Bias,
            ]
            .map(|b| b.offset(d)),
            true,
        );
        let mut dh1 = carry.h[0].clone();
        for (a, b) in dh1.iter_mut().zip(&l2.d_input) {
            *a += b;
        }
        let l1 = lstm_backward(
            hidden,
            self.block(Block::Layer1Input),
            self.block(Block::Layer1Recurrent),
            &cache.layers[0],
            &dh1,
            &carry.c[0],
            grads,
            [
                Block::Layer1Input,
                Block::Layer1Recurrent,
                Block::Layer1Bias,
            ]
            .map(|b| b.offset(d)),
            false,
        );
        carry.h = [l1.d_h_prev, l2.d_h_prev];
        carry.c = [l1.d_c_prev, l2.d_c_prev];
    }
}

/// Per-layer hidden and cell vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct RecurrentState {
    pub h: [Vec<f64>; 2],
    pub c: [Vec<f64>; 2],
}

impl RecurrentState {
    pub fn zeros(hidden: usize) -> Self {
        let z = vec![0.0; hidden];
        RecurrentState {
            h: [z.clone(), z.clone()],
            c: [z.clone(), z],
        }
    }
}

/// Gradient w.r.t. a [`RecurrentState`].
#[derive(Clone, Debug)]
pub struct StateGrad {
    pub h: [Vec<f64>; 2],
    pub c: [Vec<f64>; 2],
}

impl StateGrad {
    pub fn zeros(hidden: usize) -> Self {
        let z = vec![0.0; hidden];
        StateGrad {
            h: [z.clone(), z.clone()],
            c: [z.clone(), z],
        }
    }
}

#[derive(Clone, Debug)]
pub struct LayerCache {
    input: Vec<f64>,
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    /// Activated gates `[i; f; g; o]`.
    gates: Vec<f64>,
    c: Vec<f64>,
    tanh_c: Vec<f64>,
    h: Vec<f64>,
}

/// Everything a backward pass needs from one forward step.
#[derive(Clone, Debug)]
pub struct StepCache {
    layers: [LayerCache; 2],
    /// Head pre-activation.
    pub head: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

fn lstm_forward(
    hidden: usize,
    w_in: &[f64],
    w_rec: &[f64],
    bias: &[f64],
    input: &[f64],
    h_prev: &[f64],
    c_prev: &[f64],
) -> LayerCache {
    let n_in = input.len();
    let mut gates = vec![0.0; 4 * hidden];
    for (row, z) in gates.iter_mut().enumerate() {
        *z = bias[row]
            + dot(&w_in[row * n_in..(row + 1) * n_in], input)
            + dot(&w_rec[row * hidden..(row + 1) * hidden], h_prev);
    }
    for k in 0..hidden {
        gates[k] = sigmoid(gates[k]);
        gates[hidden + k] = sigmoid(gates[hidden + k]);
        gates[2 * hidden + k] = gates[2 * hidden + k].tanh();
        gates[3 * hidden + k] = sigmoid(gates[3 * hidden + k]);
    }
    let mut c = vec![0.0; hidden];
    let mut tanh_c = vec![0.0; hidden];
    let mut h = vec![0.0; hidden];
    for k in 0..hidden {
        c[k] = gates[hidden + k] * c_prev[k] + gates[k] * gates[2 * hidden + k];
        tanh_c[k] = c[k].tanh();
        h[k] = gates[3 * hidden + k] * tanh_c[k];
    }
    LayerCache {
        input: input.to_vec(),
        h_prev: h_prev.to_vec(),
        c_prev: c_prev.to_vec(),
        gates,
        c,
        tanh_c,
        h,
    }
}

struct LayerGrad {
    d_input: Vec<f64>,
    d_h_prev: Vec<f64>,
    d_c_prev: Vec<f64>,
}

#[allow(clippy::too_many_arguments)]
fn lstm_backward(
    hidden: usize,
    w_in: &[f64],
    w_rec: &[f64],
    cache: &LayerCache,
    dh: &[f64],
    dc_next: &[f64],
    grads: &mut [f64],
    [in_off, rec_off, bias_off]: [usize; 3],
    want_input: bool,
) -> LayerGrad {
    let n_in = cache.input.len();
    let g = &cache.gates;
    let mut dz = vec![0.0; 4 * hidden];
    let mut d_c_prev = vec![0.0; hidden];
    for k in 0..hidden {
        let (i, f, cand, o) = (g[k], g[hidden + k], g[2 * hidden + k], g[3 * hidden + k]);
        let tc = cache.tanh_c[k];
        let dc = dc_next[k] + dh[k] * o * (1.0 - tc * tc);
        dz[k] = dc * cand * i * (1.0 - i);
        dz[hidden + k] = dc * cache.c_prev[k] * f * (1.0 - f);
        dz[2 * hidden + k] = dc * i * (1.0 - cand * cand);
        dz[3 * hidden + k] = dh[k] * tc * o * (1.0 - o);
        d_c_prev[k] = dc * f;
    }
    let mut d_input = vec![0.0; if want_input { n_in } else { 0 }];
    let mut d_h_prev = vec![0.0; hidden];
    for (row, &z) in dz.iter().enumerate() {
        if z == 0.0 {
            continue;
        }
        grads[bias_off + row] += z;
        let gi = &mut grads[in_off + row * n_in..in_off + (row + 1) * n_in];
        for (gw, x) in gi.iter_mut().zip(&cache.input) {
            *gw += z * x;
        }
        let gr = &mut grads[rec_off + row * hidden..rec_off + (row + 1) * hidden];
        for (gw, h) in gr.iter_mut().zip(&cache.h_prev) {
            *gw += z * h;
        }
        if want_input {
            for (d, w) in d_input.iter_mut().zip(&w_in[row * n_in..(row + 1) * n_in]) {
                *d += z * w;
            }
        }
        for (d, w) in d_h_prev
            .iter_mut()
            .zip(&w_rec[row * hidden..(row + 1) * hidden])
        {
            *d += z * w;
        }
    }
    LayerGrad {
        d_input,
        d_h_prev,
        d_c_prev,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const DIMS: Dims = Dims {
        input: 5,
        hidden: 4,
        actions: 3,
    };

    #[test]
    fn zero_head_outputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let soft = NetworkParams::init(DIMS, HeadKind::StrategySoftmax, 0.0, &mut rng).unwrap();
        let mut state = RecurrentState::zeros(4);
        let cache = soft.step(&[0.3, -1.0, 2.0, 0.0, 1.0], &mut state).unwrap();
        let out = soft.head_output(&cache.head);
        for p in out {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }

        let pred = NetworkParams::init(DIMS, HeadKind::PredictionBounded, 8.0, &mut rng).unwrap();
        let cache = pred.step(&[0.3, -1.0, 2.0, 0.0, 1.0], &mut state).unwrap();
        assert_eq!(pred.head_output(&cache.head), vec![0.0; 3]);
    }

    #[test]
    fn prediction_head_is_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut params =
            NetworkParams::init(DIMS, HeadKind::PredictionBounded, 2.5, &mut rng).unwrap();
        for w in params.block_mut(Block::HeadWeight) {
            *w = rng.random_range(-50.0..50.0);
        }
        let mut state = RecurrentState::zeros(4);
        for _ in 0..20 {
            let x: Vec<f64> = (0..5).map(|_| rng.random_range(-10.0..10.0)).collect();
            let cache = params.step(&x, &mut state).unwrap();
            for p in params.head_output(&cache.head) {
                assert!(p.abs() <= 2.5);
            }
        }
    }

    #[test]
    fn forward_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let params = NetworkParams::init(DIMS, HeadKind::StrategySoftmax, 0.0, &mut rng).unwrap();
        let x = [0.1, 0.2, 0.3, 0.4, 0.5];
        let (mut s1, mut s2) = (RecurrentState::zeros(4), RecurrentState::zeros(4));
        let a = params.step(&x, &mut s1).unwrap();
        let b = params.step(&x, &mut s2).unwrap();
        assert_eq!(a.head, b.head);
        assert_eq!(s1, s2);
    }

    #[test]
    fn block_layout_covers_buffer() {
        let total: usize = Block::ALL.iter().map(|b| b.len(DIMS)).sum();
        assert_eq!(total, param_count(DIMS));
        assert_eq!(Block::HeadBias.offset(DIMS) + DIMS.actions, total);
    }

    #[test]
    fn rejects_wrong_input_width() {
        let params = NetworkParams::zeros(DIMS, HeadKind::StrategySoftmax, 0.0).unwrap();
        let mut state = RecurrentState::zeros(4);
        assert!(params.step(&[0.0; 4], &mut state).is_err());
    }
}
