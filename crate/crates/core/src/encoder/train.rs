use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{backward, embed, encode_with_cache, EncoderConfig, EncoderParams};
use crate::error::{Error, Result};
use crate::optim::Adam;
use crate::tensor::Tensors;

/// A differentiable task head on top of the encoder output.
pub trait Head: Sync {
    type Example: Sync;
    type Params: Tensors + Clone + Send + Sync;

    /// Token ids and segment ids fed to the encoder.
    fn inputs<'a>(&self, ex: &'a Self::Example) -> (&'a [usize], &'a [usize]);

    /// Loss for one example, its gradient with respect to the encoder
    /// output, and the head-parameter gradient.
    fn loss_grad(&self, params: &Self::Params, ex: &Self::Example, out: &Array2<f64>) -> (f64, Array2<f64>, Self::Params);
}

/// Summed loss and gradients over a batch.
#[derive(Debug, Clone)]
pub struct BatchGrad<P> {
    pub loss: f64,
    pub encoder: EncoderParams,
    pub head: P,
}

/// Exact reverse-mode gradient of the summed head loss over `batch`.
/// Items run in parallel; the reduction is in batch order so results are
/// bit-identical across thread counts.
pub fn grad<H: Head>(
    head: &H,
    head_params: &H::Params,
    params: &EncoderParams,
    config: &EncoderConfig,
    batch: &[H::Example],
) -> Result<BatchGrad<H::Params>> {
    let refs: Vec<&H::Example> = batch.iter().collect();
    grad_refs(head, head_params, params, config, &refs)
}

fn grad_refs<H: Head>(
    head: &H,
    head_params: &H::Params,
    params: &EncoderParams,
    config: &EncoderConfig,
    batch: &[&H::Example],
) -> Result<BatchGrad<H::Params>> {
    if batch.is_empty() {
        return Err(Error::Invalid("gradient of an empty batch".into()));
    }
    let per_item: Vec<Result<(f64, EncoderParams, H::Params)>> = batch
        .par_iter()
        .map(|ex| {
            let (ids, segs) = head.inputs(ex);
            let x = embed(ids, segs, params)?;
            let (out, cache) = encode_with_cache(&x, params, config)?;
            let (loss, d_out, g_head) = head.loss_grad(head_params, ex, &out);
            let g_enc = backward(ids, segs, &cache, &d_out, params, config)?;
            Ok((loss, g_enc, g_head))
        })
        .collect();
    let mut iter = per_item.into_iter();
    let (mut loss, mut g_enc, mut g_head) = iter.next().unwrap()?;
    for item in iter {
        let (l, e, h) = item?;
        loss += l;
        g_enc.add_assign(&e);
        g_head.add_assign(&h);
    }
    if !loss.is_finite() {
        return Err(Error::Numeric { layer: config.n_layers, what: "loss".into() });
    }
    if let Some(name) = g_enc.first_non_finite().or_else(|| g_head.first_non_finite()) {
        return Err(Error::Numeric { layer: config.n_layers, what: format!("gradient of {name}") });
    }
    Ok(BatchGrad { loss, encoder: g_enc, head: g_head })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { epochs: 10, batch_size: 17, learning_rate: 1e-3, seed: 0 }
    }
}

/// Mini-batch Adam on the mean batch loss, shuffling with `train.seed` each
/// epoch. Returns the mean per-example loss of every epoch.
pub fn fit<H: Head>(
    head: &H,
    head_params: &mut H::Params,
    params: &mut EncoderParams,
    config: &EncoderConfig,
    examples: &[H::Example],
    train: &TrainConfig,
) -> Result<Vec<f64>> {
    if examples.is_empty() {
        return Err(Error::Invalid("empty training set".into()));
    }
    if train.batch_size == 0 {
        return Err(Error::Invalid("batch size must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(train.seed);
    let mut opt = Adam::new(train.learning_rate);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut trace = Vec::with_capacity(train.epochs);
    let mut batch: Vec<&H::Example> = Vec::with_capacity(train.batch_size);
    for epoch in 0..train.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for idx in order.chunks(train.batch_size) {
            batch.clear();
            batch.extend(idx.iter().map(|&i| &examples[i]));
            let g = grad_refs(head, head_params, params, config, &batch)?;
            total += g.loss;
            let mut ge = g.encoder;
            let mut gh = g.head;
            let scale = 1.0 / idx.len() as f64;
            ge.scale(scale);
            gh.scale(scale);
            let mut ps: Vec<&mut Array2<f64>> = params.named_mut().into_iter().map(|(_, t)| t).collect();
            ps.extend(head_params.named_mut().into_iter().map(|(_, t)| t));
            let mut gs: Vec<&Array2<f64>> = ge.named().into_iter().map(|(_, t)| t).collect();
            gs.extend(gh.named().into_iter().map(|(_, t)| t));
            opt.step(ps, gs);
        }
        let mean = total / examples.len() as f64;
        log::info!("epoch {}: mean loss {mean:.6}", epoch + 1);
        trace.push(mean);
    }
    Ok(trace)
}

