//! A small transformer encoder: summed token/segment/position embeddings,
//! layer-normed, followed by post-norm self-attention blocks, with hand-written
//! reverse-mode gradients.

pub mod container;
mod layer;
mod train;

use ndarray::{s, Array2, ArrayView1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{normal, Tensors};

use layer::{layer_norm, layer_norm_backward};
pub use layer::{LayerCache, LayerParams};
pub use train::{fit, grad, BatchGrad, Head, TrainConfig};

/// `n × d` matrix of token vectors; row 0 is the `[CLS]` position.
pub type ContextMatrix = Array2<f64>;

const INIT_STD: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub n_layers: usize,
    pub n_heads: usize,
    pub hidden_size: usize,
    pub max_len: usize,
    pub ff_size: usize,
    pub vocab_size: usize,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self { n_layers: 2, n_heads: 4, hidden_size: 64, max_len: 128, ff_size: 128, vocab_size: 0 }
    }
}

impl EncoderConfig {
    pub fn with_vocab_size(mut self, vocab_size: usize) -> Self {
        self.vocab_size = vocab_size;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_heads == 0 || self.hidden_size == 0 || self.hidden_size % self.n_heads != 0 {
            return Err(Error::Invalid(format!(
                "hidden_size {} must be a positive multiple of n_heads {}",
                self.hidden_size, self.n_heads
            )));
        }
        if self.max_len == 0 || self.ff_size == 0 || self.vocab_size == 0 {
            return Err(Error::Invalid("max_len, ff_size and vocab_size must be positive".into()));
        }
        Ok(())
    }

    pub fn head_dim(&self) -> usize {
        self.hidden_size / self.n_heads
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParams {
    pub token_emb: Array2<f64>,
    pub segment_emb: Array2<f64>,
    pub position_emb: Array2<f64>,
    /// Layer norm applied to the summed embeddings.
    pub emb_ln_g: Array2<f64>,
    pub emb_ln_b: Array2<f64>,
    pub layers: Vec<LayerParams>,
}

impl EncoderParams {
    pub fn zeros(config: &EncoderConfig) -> Self {
        let d = config.hidden_size;
        Self {
            token_emb: Array2::zeros((config.vocab_size, d)),
            segment_emb: Array2::zeros((2, d)),
            position_emb: Array2::zeros((config.max_len, d)),
            emb_ln_g: Array2::zeros((1, d)),
            emb_ln_b: Array2::zeros((1, d)),
            layers: (0..config.n_layers).map(|_| LayerParams::zeros(d, config.ff_size)).collect(),
        }
    }

    /// Weights ~ N(0, 0.02²), layer-norm gains 1, biases 0.
    pub fn init(config: &EncoderConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(Self::init_with(config, &mut rng))
    }

    pub fn init_with(config: &EncoderConfig, rng: &mut impl Rng) -> Self {
        let d = config.hidden_size;
        Self {
            token_emb: normal(config.vocab_size, d, INIT_STD, rng),
            segment_emb: normal(2, d, INIT_STD, rng),
            position_emb: normal(config.max_len, d, INIT_STD, rng),
            emb_ln_g: Array2::ones((1, d)),
            emb_ln_b: Array2::zeros((1, d)),
            layers: (0..config.n_layers).map(|_| LayerParams::init(d, config.ff_size, INIT_STD, rng)).collect(),
        }
    }

    /// Check that tensor shapes agree with `config`.
    pub fn check_shapes(&self, config: &EncoderConfig) -> Result<()> {
        let expected = EncoderParams::zeros(config);
        let mine = self.named();
        let theirs = expected.named();
        if mine.len() != theirs.len() {
            return Err(Error::Shape(format!("{} tensors, expected {}", mine.len(), theirs.len())));
        }
        for ((name, a), (_, b)) in mine.iter().zip(&theirs) {
            if a.dim() != b.dim() {
                return Err(Error::Shape(format!("{name}: {:?}, expected {:?}", a.dim(), b.dim())));
            }
        }
        Ok(())
    }
}

impl Tensors for EncoderParams {
    fn named(&self) -> Vec<(String, &Array2<f64>)> {
        let mut v = vec![
            ("emb.token".to_string(), &self.token_emb),
            ("emb.segment".to_string(), &self.segment_emb),
            ("emb.position".to_string(), &self.position_emb),
            ("emb.ln_g".to_string(), &self.emb_ln_g),
            ("emb.ln_b".to_string(), &self.emb_ln_b),
        ];
        for (i, l) in self.layers.iter().enumerate() {
            v.extend(l.named().into_iter().map(|(n, t)| (format!("layer{i}.{n}"), t)));
        }
        v
    }

    fn named_mut(&mut self) -> Vec<(String, &mut Array2<f64>)> {
        let mut v = vec![
            ("emb.token".to_string(), &mut self.token_emb),
            ("emb.segment".to_string(), &mut self.segment_emb),
            ("emb.position".to_string(), &mut self.position_emb),
            ("emb.ln_g".to_string(), &mut self.emb_ln_g),
            ("emb.ln_b".to_string(), &mut self.emb_ln_b),
        ];
        for (i, l) in self.layers.iter_mut().enumerate() {
            v.extend(l.named_mut().into_iter().map(|(n, t)| (format!("layer{i}.{n}"), t)));
        }
        v
    }

    fn zeros_like(&self) -> Self {
        Self {
            token_emb: Array2::zeros(self.token_emb.dim()),
            segment_emb: Array2::zeros(self.segment_emb.dim()),
            position_emb: Array2::zeros(self.position_emb.dim()),
            emb_ln_g: Array2::zeros(self.emb_ln_g.dim()),
            emb_ln_b: Array2::zeros(self.emb_ln_b.dim()),
            layers: self.layers.iter().map(|l| l.zeros_like()).collect(),
        }
    }
}

/// Row `i` = `token_emb[ids[i]] + segment_emb[segments[i]] + position_emb[i]`.
pub fn embed(ids: &[usize], segments: &[usize], params: &EncoderParams) -> Result<ContextMatrix> {
    let n = ids.len();
    if segments.len() != n {
        return Err(Error::Shape(format!("{n} ids but {} segment ids", segments.len())));
    }
    if n > params.position_emb.nrows() {
        return Err(Error::Shape(format!("sequence length {n} exceeds max_len {}", params.position_emb.nrows())));
    }
    let d = params.token_emb.ncols();
    let mut x = Array2::zeros((n, d));
    for (i, (&id, &seg)) in ids.iter().zip(segments).enumerate() {
        if id >= params.token_emb.nrows() {
            return Err(Error::Shape(format!("token id {id} out of range for vocabulary of {}", params.token_emb.nrows())));
        }
        if seg >= params.segment_emb.nrows() {
            return Err(Error::Shape(format!("segment id {seg} out of range")));
        }
        let mut row = x.row_mut(i);
        row += &params.token_emb.row(id);
        row += &params.segment_emb.row(seg);
        row += &params.position_emb.row(i);
    }
    Ok(x)
}

/// Everything the backward pass needs from one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub layers: Vec<LayerCache>,
    emb_xhat: Array2<f64>,
    emb_inv: Vec<f64>,
}

/// Run the layer stack, keeping intermediates for [`backward`].
pub fn encode_with_cache(x: &ContextMatrix, params: &EncoderParams, config: &EncoderConfig) -> Result<(ContextMatrix, ForwardCache)> {
    if x.ncols() != config.hidden_size {
        return Err(Error::Shape(format!("input width {} != hidden_size {}", x.ncols(), config.hidden_size)));
    }
    if x.nrows() > config.max_len {
        return Err(Error::Shape(format!("sequence length {} exceeds max_len {}", x.nrows(), config.max_len)));
    }
    if params.layers.len() != config.n_layers {
        return Err(Error::Shape(format!("{} layers, config says {}", params.layers.len(), config.n_layers)));
    }
    let (mut h, emb_xhat, emb_inv) = layer_norm(x, &params.emb_ln_g, &params.emb_ln_b);
    let mut caches = Vec::with_capacity(params.layers.len());
    for (i, layer) in params.layers.iter().enumerate() {
        let (out, cache) = layer.forward(&h, config.n_heads);
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric { layer: i, what: "layer output".into() });
        }
        caches.push(cache);
        h = out;
    }
    Ok((h, ForwardCache { layers: caches, emb_xhat, emb_inv }))
}

pub fn encode(x: &ContextMatrix, params: &EncoderParams, config: &EncoderConfig) -> Result<ContextMatrix> {
    encode_with_cache(x, params, config).map(|(y, _)| y)
}

/// `embed` followed by `encode`.
pub fn forward(ids: &[usize], segments: &[usize], params: &EncoderParams, config: &EncoderConfig) -> Result<ContextMatrix> {
    let x = embed(ids, segments, params)?;
    encode(&x, params, config)
}

/// Attention weights of every head of every layer for input `x`.
pub fn attention_maps(x: &ContextMatrix, params: &EncoderParams, config: &EncoderConfig) -> Result<Vec<Vec<Array2<f64>>>> {
    let (_, cache) = encode_with_cache(x, params, config)?;
    Ok(cache.layers.into_iter().map(|c| c.attn).collect())
}

/// The `[CLS]` vector (row 0).
pub fn cls_vector(x: &ContextMatrix) -> Result<ArrayView1<'_, f64>> {
    if x.nrows() == 0 {
        return Err(Error::Shape("empty sequence has no CLS vector".into()));
    }
    Ok(x.row(0))
}

/// Gradients of all encoder parameters given `d_out = ∂L/∂output`.
pub fn backward(
    ids: &[usize],
    segments: &[usize],
    cache: &ForwardCache,
    d_out: &Array2<f64>,
    params: &EncoderParams,
    config: &EncoderConfig,
) -> Result<EncoderParams> {
    let mut grads = params.zeros_like();
    let mut d = d_out.clone();
    for (i, (layer, lc)) in params.layers.iter().zip(&cache.layers).enumerate().rev() {
        d = layer.backward(lc, &d, config.n_heads, &mut grads.layers[i]);
        if d.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric { layer: i, what: "gradient".into() });
        }
    }
    let d = layer_norm_backward(&d, &cache.emb_xhat, &cache.emb_inv, &params.emb_ln_g, &mut grads.emb_ln_g, &mut grads.emb_ln_b);
    let n = ids.len();
    for i in 0..n {
        let row = d.row(i);
        let mut t = grads.token_emb.row_mut(ids[i]);
        t += &row;
        let mut sg = grads.segment_emb.row_mut(segments[i]);
        sg += &row;
    }
    let mut pos = grads.position_emb.slice_mut(s![..n, ..]);
    pos += &d;
    Ok(grads)
}
