//! Named parameter collections shared by the encoder and the task heads.

use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, Normal};

/// A fixed, ordered set of named 2-D parameter tensors.
pub trait Tensors: Sized {
    fn named(&self) -> Vec<(String, &Array2<f64>)>;
    fn named_mut(&mut self) -> Vec<(String, &mut Array2<f64>)>;

    fn zeros_like(&self) -> Self;

    fn add_assign(&mut self, other: &Self) {
        let theirs = other.named();
        for ((_, mine), (_, t)) in self.named_mut().into_iter().zip(theirs) {
            *mine += t;
        }
    }

    fn scale(&mut self, factor: f64) {
        for (_, t) in self.named_mut() {
            t.mapv_inplace(|v| v * factor);
        }
    }

    fn all_finite(&self) -> bool {
        self.named().iter().all(|(_, t)| t.iter().all(|v| v.is_finite()))
    }

    fn n_values(&self) -> usize {
        self.named().iter().map(|(_, t)| t.len()).sum()
    }

    /// Name of the first tensor holding a non-finite value.
    fn first_non_finite(&self) -> Option<String> {
        self.named().into_iter().find(|(_, t)| t.iter().any(|v| !v.is_finite())).map(|(n, _)| n)
    }
}

pub fn normal(rows: usize, cols: usize, std: f64, rng: &mut impl Rng) -> Array2<f64> {
    let dist = Normal::new(0.0, std).expect("valid std");
    Array2::from_shape_simple_fn((rows, cols), || dist.sample(rng))
}
