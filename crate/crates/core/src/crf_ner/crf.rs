//! Linear-chain CRF over per-position tag scores ("emissions").
//!
//! A tag path `t` over `n` positions scores
//! `start[t0] + Σ emit[i][ti] + Σ trans[ti][ti+1] + end[t(n-1)]`.
//! All normalizers are computed in log space with max-shifted log-sum-exp.

use ndarray::{Array1, Array2, ArrayView2};
use rand::Rng;

use super::tags::{Tag, NUM_TAGS};
use crate::tensor::{normal, Tensors};

/// Score of a transition that never occurs in a valid IOB2 sequence.
pub const BLOCKED: f64 = -1e4;

#[derive(Debug, Clone, PartialEq)]
pub struct CrfParams {
    /// `transitions[[from, to]]`.
    pub transitions: Array2<f64>,
    pub start: Array2<f64>,
    pub end: Array2<f64>,
    /// Projects `d`-dimensional encoder outputs to `K` emission scores.
    pub emission: Array2<f64>,
}

impl CrfParams {
    pub fn zeros(num_tags: usize, hidden: usize) -> Self {
        Self {
            transitions: Array2::zeros((num_tags, num_tags)),
            start: Array2::zeros((1, num_tags)),
            end: Array2::zeros((1, num_tags)),
            emission: Array2::zeros((hidden, num_tags)),
        }
    }

    /// Small random emission weights; transitions and start scores that no
    /// valid IOB2 sequence uses start at [`BLOCKED`].
    pub fn init(num_tags: usize, hidden: usize, rng: &mut impl Rng) -> Self {
        let mut p = Self::zeros(num_tags, hidden);
        p.emission = normal(hidden, num_tags, 0.02, rng);
        if num_tags == NUM_TAGS {
            for j in 0..num_tags {
                let to = Tag::from_index(j).unwrap();
                if let Tag::I(t) = to {
                    p.start[(0, j)] = BLOCKED;
                    for i in 0..num_tags {
                        if !matches!(Tag::from_index(i).unwrap(), Tag::B(u) | Tag::I(u) if u == t) {
                            p.transitions[(i, j)] = BLOCKED;
                        }
                    }
                }
            }
        }
        p
    }

    pub fn num_tags(&self) -> usize {
        self.transitions.nrows()
    }
}

impl Tensors for CrfParams {
    fn named(&self) -> Vec<(String, &Array2<f64>)> {
        vec![
            ("crf.transitions".into(), &self.transitions),
            ("crf.start".into(), &self.start),
            ("crf.end".into(), &self.end),
            ("crf.emission".into(), &self.emission),
        ]
    }

    fn named_mut(&mut self) -> Vec<(String, &mut Array2<f64>)> {
        vec![
            ("crf.transitions".into(), &mut self.transitions),
            ("crf.start".into(), &mut self.start),
            ("crf.end".into(), &mut self.end),
            ("crf.emission".into(), &mut self.emission),
        ]
    }

    fn zeros_like(&self) -> Self {
        Self::zeros(self.num_tags(), self.emission.nrows())
    }
}

pub(crate) fn log_sum_exp(xs: impl IntoIterator<Item = f64>) -> f64 {
    let xs: Vec<f64> = xs.into_iter().collect();
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

pub fn crf_score(emissions: ArrayView2<f64>, tags: &[usize], params: &CrfParams) -> f64 {
    assert_eq!(emissions.nrows(), tags.len());
    if tags.is_empty() {
        return 0.0;
    }
    let mut s = params.start[[0, tags[0]]] + params.end[[0, tags[tags.len() - 1]]];
    for (i, &t) in tags.iter().enumerate() {
        s += emissions[[i, t]];
        if i + 1 < tags.len() {
            s += params.transitions[[t, tags[i + 1]]];
        }
    }
    s
}

/// `alpha[[i, t]]`: log-sum of scores of all prefixes ending in tag `t` at `i`
/// (including emission `i`, excluding the end score).
fn forward(emissions: ArrayView2<f64>, params: &CrfParams) -> Array2<f64> {
    let (n, k) = emissions.dim();
    let mut alpha = Array2::zeros((n, k));
    for t in 0..k {
        alpha[[0, t]] = params.start[[0, t]] + emissions[[0, t]];
    }
    for i in 1..n {
        for t in 0..k {
            let prev = (0..k).map(|p| alpha[[i - 1, p]] + params.transitions[[p, t]]);
            alpha[[i, t]] = log_sum_exp(prev) + emissions[[i, t]];
        }
    }
    alpha
}

/// `beta[[i, t]]`: log-sum of scores of all suffixes after `i` given tag `t`
/// at `i` (including the end score, excluding emission `i`).
fn backward(emissions: ArrayView2<f64>, params: &CrfParams) -> Array2<f64> {
    let (n, k) = emissions.dim();
    let mut beta = Array2::zeros((n, k));
    for t in 0..k {
        beta[[n - 1, t]] = params.end[[0, t]];
    }
    for i in (0..n - 1).rev() {
        for t in 0..k {
            let next = (0..k).map(|q| params.transitions[[t, q]] + emissions[[i + 1, q]] + beta[[i + 1, q]]);
            beta[[i, t]] = log_sum_exp(next);
        }
    }
    beta
}

/// `log Σ_paths exp(score)`. Requires `n ≥ 1`.
pub fn crf_log_partition(emissions: ArrayView2<f64>, params: &CrfParams) -> f64 {
    let n = emissions.nrows();
    assert!(n >= 1, "log partition needs at least one position");
    let alpha = forward(emissions, params);
    log_sum_exp((0..emissions.ncols()).map(|t| alpha[[n - 1, t]] + params.end[[0, t]]))
}

/// Best-scoring path and its score. Ties resolve to the lowest tag index.
pub fn crf_viterbi(emissions: ArrayView2<f64>, params: &CrfParams) -> (Vec<usize>, f64) {
    let (n, k) = emissions.dim();
    assert!(n >= 1, "viterbi needs at least one position");
    let mut delta = Array2::<f64>::zeros((n, k));
    let mut back = Array2::<usize>::zeros((n, k));
    for t in 0..k {
        delta[[0, t]] = params.start[[0, t]] + emissions[[0, t]];
    }
    for i in 1..n {
        for t in 0..k {
            let mut best = 0;
            let mut best_v = f64::NEG_INFINITY;
            for p in 0..k {
                let v = delta[[i - 1, p]] + params.transitions[[p, t]];
                if v > best_v {
                    best_v = v;
                    best = p;
                }
            }
            delta[[i, t]] = best_v + emissions[[i, t]];
            back[[i, t]] = best;
        }
    }
    let mut last = 0;
    let mut best_v = f64::NEG_INFINITY;
    for t in 0..k {
        let v = delta[[n - 1, t]] + params.end[[0, t]];
        if v > best_v {
            best_v = v;
            last = t;
        }
    }
    let mut path = vec![0; n];
    path[n - 1] = last;
    for i in (1..n).rev() {
        path[i - 1] = back[[i, path[i]]];
    }
    (path, best_v)
}

/// Per-position tag posteriors by forward–backward.
pub fn crf_marginals(emissions: ArrayView2<f64>, params: &CrfParams) -> Array2<f64> {
    let (n, k) = emissions.dim();
    assert!(n >= 1, "marginals need at least one position");
    let alpha = forward(emissions, params);
    let beta = backward(emissions, params);
    let log_z = log_sum_exp((0..k).map(|t| alpha[[n - 1, t]] + params.end[[0, t]]));
    Array2::from_shape_fn((n, k), |(i, t)| (alpha[[i, t]] + beta[[i, t]] - log_z).exp())
}

/// Negative log-likelihood of `gold` and its gradient with respect to the
/// emissions and the transition/start/end scores. The `emission` field of the
/// returned gradient is left at zero; callers own the projection.
pub fn crf_nll_grad(emissions: ArrayView2<f64>, gold: &[usize], params: &CrfParams) -> (f64, Array2<f64>, CrfParams) {
    let (n, k) = emissions.dim();
    assert_eq!(gold.len(), n);
    let alpha = forward(emissions, params);
    let beta = backward(emissions, params);
    let log_z = log_sum_exp((0..k).map(|t| alpha[[n - 1, t]] + params.end[[0, t]]));
    let nll = log_z - crf_score(emissions, gold, params);

    let mut grad = params.zeros_like();
    let mut d_emit = Array2::from_shape_fn((n, k), |(i, t)| (alpha[[i, t]] + beta[[i, t]] - log_z).exp());
    for t in 0..k {
        grad.start[[0, t]] = d_emit[[0, t]];
        grad.end[[0, t]] = d_emit[[n - 1, t]];
    }
    for i in 0..n.saturating_sub(1) {
        for p in 0..k {
            for q in 0..k {
                let lp = alpha[[i, p]] + params.transitions[[p, q]] + emissions[[i + 1, q]] + beta[[i + 1, q]] - log_z;
                grad.transitions[[p, q]] += lp.exp();
            }
        }
    }
    grad.start[[0, gold[0]]] -= 1.0;
    grad.end[[0, gold[n - 1]]] -= 1.0;
    for (i, &t) in gold.iter().enumerate() {
        d_emit[[i, t]] -= 1.0;
        if i + 1 < n {
            grad.transitions[[t, gold[i + 1]]] -= 1.0;
        }
    }
    (nll, d_emit, grad)
}

/// Row sums of a marginal matrix (each should be 1).
pub fn row_sums(m: &Array2<f64>) -> Array1<f64> {
    m.sum_axis(ndarray::Axis(1))
}
