use ndarray::{s, Array2, Axis};
use rand::Rng;

use crate::tensor::normal;

const LN_EPS: f64 = 1e-12;
const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2 / pi)
const GELU_A: f64 = 0.044_715;

/// One post-norm encoder block.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub wq: Array2<f64>,
    pub bq: Array2<f64>,
    pub wk: Array2<f64>,
    pub bk: Array2<f64>,
    pub wv: Array2<f64>,
    pub bv: Array2<f64>,
    pub wo: Array2<f64>,
    pub bo: Array2<f64>,
    pub ln1_g: Array2<f64>,
    pub ln1_b: Array2<f64>,
    pub w1: Array2<f64>,
    pub b1: Array2<f64>,
    pub w2: Array2<f64>,
    pub b2: Array2<f64>,
    pub ln2_g: Array2<f64>,
    pub ln2_b: Array2<f64>,
}

macro_rules! fields {
    (ref $self:ident, $($f:ident),*) => { vec![$((stringify!($f).to_string(), &$self.$f)),*] };
    (mut $self:ident, $($f:ident),*) => { vec![$((stringify!($f).to_string(), &mut $self.$f)),*] };
}

impl LayerParams {
    pub fn zeros(d: usize, ff: usize) -> Self {
        let z = |r, c| Array2::zeros((r, c));
        Self {
            wq: z(d, d),
            bq: z(1, d),
            wk: z(d, d),
            bk: z(1, d),
            wv: z(d, d),
            bv: z(1, d),
            wo: z(d, d),
            bo: z(1, d),
            ln1_g: z(1, d),
            ln1_b: z(1, d),
            w1: z(d, ff),
            b1: z(1, ff),
            w2: z(ff, d),
            b2: z(1, d),
            ln2_g: z(1, d),
            ln2_b: z(1, d),
        }
    }

    pub fn init(d: usize, ff: usize, std: f64, rng: &mut impl Rng) -> Self {
        let mut p = Self::zeros(d, ff);
        p.wq = normal(d, d, std, rng);
        p.wk = normal(d, d, std, rng);
        p.wv = normal(d, d, std, rng);
        p.wo = normal(d, d, std, rng);
        p.w1 = normal(d, ff, std, rng);
        p.w2 = normal(ff, d, std, rng);
        p.ln1_g.fill(1.0);
        p.ln2_g.fill(1.0);
        p
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.wq.nrows(), self.w1.ncols())
    }

    pub fn named(&self) -> Vec<(String, &Array2<f64>)> {
        fields!(ref self, wq, bq, wk, bk, wv, bv, wo, bo, ln1_g, ln1_b, w1, b1, w2, b2, ln2_g, ln2_b)
    }

    pub fn named_mut(&mut self) -> Vec<(String, &mut Array2<f64>)> {
        fields!(mut self, wq, bq, wk, bk, wv, bv, wo, bo, ln1_g, ln1_b, w1, b1, w2, b2, ln2_g, ln2_b)
    }
}

/// Intermediates of one block's forward pass.
#[derive(Debug, Clone)]
pub struct LayerCache {
    pub(crate) x: Array2<f64>,
    pub(crate) q: Array2<f64>,
    k: Array2<f64>,
    pub(crate) v: Array2<f64>,
    /// Row-stochastic attention weights, one `n × n` matrix per head.
    pub attn: Vec<Array2<f64>>,
    pub(crate) ctx: Array2<f64>,
    xhat1: Array2<f64>,
    inv1: Vec<f64>,
    h1: Array2<f64>,
    u: Array2<f64>,
    f: Array2<f64>,
    xhat2: Array2<f64>,
    inv2: Vec<f64>,
}

fn affine(x: &Array2<f64>, w: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
    x.dot(w) + b
}

fn softmax_rows(m: &mut Array2<f64>) {
    for mut row in m.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row /= sum;
    }
}

pub(crate) fn layer_norm(x: &Array2<f64>, g: &Array2<f64>, b: &Array2<f64>) -> (Array2<f64>, Array2<f64>, Vec<f64>) {
    let d = x.ncols() as f64;
    let mut xhat = x.clone();
    let mut inv = Vec::with_capacity(x.nrows());
    for mut row in xhat.rows_mut() {
        let mu = row.sum() / d;
        row.mapv_inplace(|v| v - mu);
        let var = row.iter().map(|v| v * v).sum::<f64>() / d;
        let is = 1.0 / (var + LN_EPS).sqrt();
        row.mapv_inplace(|v| v * is);
        inv.push(is);
    }
    let y = &xhat * g + b;
    (y, xhat, inv)
}

/// Returns `dx` and accumulates `dg`, `db`.
pub(crate) fn layer_norm_backward(
    dy: &Array2<f64>,
    xhat: &Array2<f64>,
    inv: &[f64],
    g: &Array2<f64>,
    dg: &mut Array2<f64>,
    db: &mut Array2<f64>,
) -> Array2<f64> {
    *dg += &(dy * xhat).sum_axis(Axis(0)).insert_axis(Axis(0));
    *db += &dy.sum_axis(Axis(0)).insert_axis(Axis(0));
    let dxhat = dy * g;
    let d = xhat.ncols() as f64;
    let mut dx = Array2::zeros(dy.dim());
    for i in 0..dy.nrows() {
        let r = dxhat.row(i);
        let xh = xhat.row(i);
        let mean_r = r.sum() / d;
        let mean_rx = r.dot(&xh) / d;
        let mut out = dx.row_mut(i);
        for j in 0..out.len() {
            out[j] = inv[i] * (r[j] - mean_r - xh[j] * mean_rx);
        }
    }
    dx
}

fn gelu(u: f64) -> f64 {
    0.5 * u * (1.0 + (GELU_C * (u + GELU_A * u * u * u)).tanh())
}

fn gelu_grad(u: f64) -> f64 {
    let t = (GELU_C * (u + GELU_A * u * u * u)).tanh();
    0.5 * (1.0 + t) + 0.5 * u * (1.0 - t * t) * GELU_C * (1.0 + 3.0 * GELU_A * u * u)
}

fn row_sum(m: &Array2<f64>) -> Array2<f64> {
    m.sum_axis(Axis(0)).insert_axis(Axis(0))
}

impl LayerParams {
    pub fn forward(&self, x: &Array2<f64>, n_heads: usize) -> (Array2<f64>, LayerCache) {
        let (n, d) = x.dim();
        let dh = d / n_heads;
        let scale = 1.0 / (dh as f64).sqrt();
        let q = affine(x, &self.wq, &self.bq);
        let k = affine(x, &self.wk, &self.bk);
        let v = affine(x, &self.wv, &self.bv);
        let mut ctx = Array2::zeros((n, d));
        let mut attn = Vec::with_capacity(n_heads);
        for h in 0..n_heads {
            let cols = s![.., h * dh..(h + 1) * dh];
            let mut a = q.slice(cols).dot(&k.slice(cols).t()) * scale;
            softmax_rows(&mut a);
            ctx.slice_mut(cols).assign(&a.dot(&v.slice(cols)));
            attn.push(a);
        }
        let r1 = x + &affine(&ctx, &self.wo, &self.bo);
        let (h1, xhat1, inv1) = layer_norm(&r1, &self.ln1_g, &self.ln1_b);
        let u = affine(&h1, &self.w1, &self.b1);
        let f = u.mapv(gelu);
        let r2 = &h1 + &affine(&f, &self.w2, &self.b2);
        let (y, xhat2, inv2) = layer_norm(&r2, &self.ln2_g, &self.ln2_b);
        let cache = LayerCache { x: x.clone(), q, k, v, attn, ctx, xhat1, inv1, h1, u, f, xhat2, inv2 };
        (y, cache)
    }

    /// Backpropagate `dy` through the block, accumulating into `g`; returns
    /// the gradient with respect to the block input.
    pub fn backward(&self, c: &LayerCache, dy: &Array2<f64>, n_heads: usize, g: &mut LayerParams) -> Array2<f64> {
        let (_, d) = dy.dim();
        let dh = d / n_heads;
        let scale = 1.0 / (dh as f64).sqrt();

        let dr2 = layer_norm_backward(dy, &c.xhat2, &c.inv2, &self.ln2_g, &mut g.ln2_g, &mut g.ln2_b);
        g.w2 += &c.f.t().dot(&dr2);
        g.b2 += &row_sum(&dr2);
        let df = dr2.dot(&self.w2.t());
        let du = &df * &c.u.mapv(gelu_grad);
        g.w1 += &c.h1.t().dot(&du);
        g.b1 += &row_sum(&du);
        let dh1 = &dr2 + &du.dot(&self.w1.t());

        let dr1 = layer_norm_backward(&dh1, &c.xhat1, &c.inv1, &self.ln1_g, &mut g.ln1_g, &mut g.ln1_b);
        g.wo += &c.ctx.t().dot(&dr1);
        g.bo += &row_sum(&dr1);
        let dctx = dr1.dot(&self.wo.t());

        let mut dq = Array2::zeros(c.q.dim());
        let mut dk = Array2::zeros(c.k.dim());
        let mut dv = Array2::zeros(c.v.dim());
        for (h, a) in c.attn.iter().enumerate() {
            let cols = s![.., h * dh..(h + 1) * dh];
            let dc = dctx.slice(cols);
            let da = dc.dot(&c.v.slice(cols).t());
            dv.slice_mut(cols).assign(&a.t().dot(&dc));
            let mut ds = Array2::zeros(a.dim());
            for i in 0..a.nrows() {
                let dot = a.row(i).dot(&da.row(i));
                for j in 0..a.ncols() {
                    ds[[i, j]] = a[[i, j]] * (da[[i, j]] - dot) * scale;
                }
            }
            dq.slice_mut(cols).assign(&ds.dot(&c.k.slice(cols)));
            dk.slice_mut(cols).assign(&ds.t().dot(&c.q.slice(cols)));
        }
        g.wq += &c.x.t().dot(&dq);
        g.bq += &row_sum(&dq);
        g.wk += &c.x.t().dot(&dk);
        g.bk += &row_sum(&dk);
        g.wv += &c.x.t().dot(&dv);
        g.bv += &row_sum(&dv);

        dr1 + dq.dot(&self.wq.t()) + dk.dot(&self.wk.t()) + dv.dot(&self.wv.t())
    }
}
