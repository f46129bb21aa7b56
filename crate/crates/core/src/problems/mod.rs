//! Benchmark objectives with analytic gradients and Hessian-vector products,
//! libsvm data ingestion, and seeded mini-batch sampling.

mod dataset;
mod logreg;
mod mlp;
mod welsch;

pub use dataset::{parse_libsvm, write_libsvm, Dataset};
pub use logreg::LogisticWelsch;
pub use mlp::{Activation, MlpArchitecture, MlpWelsch};
pub use welsch::{welsch_grad, welsch_hvp, welsch_value, welsch_value_grad_hvp};

use rand::Rng;

use crate::{Error, ParamVector, Result};

/// Indices of the samples an oracle call averages over.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MiniBatch {
    pub indices: Vec<usize>,
}

impl MiniBatch {
    pub fn full(n: usize) -> Self {
        MiniBatch {
            indices: (0..n).collect(),
        }
    }

    pub fn size(&self) -> usize {
        self.indices.len()
    }
}

/// Draw `b` indices uniformly with replacement from `[0, n)`.
/// Deterministic given the RNG state and call sequence.
pub fn sample_batch<R: Rng>(rng: &mut R, n: usize, b: usize) -> Result<MiniBatch> {
    if b < 1 {
        return Err(Error::Config("batch size must be at least 1".into()));
    }
    if n < 1 {
        return Err(Error::Config("cannot sample from an empty dataset".into()));
    }
    let indices = (0..b).map(|_| rng.random_range(0..n)).collect();
    Ok(MiniBatch { indices })
}

/// A stochastic objective: batch-averaged value, gradient, and exact
/// Hessian-vector product.
pub trait Problem {
    /// Number of optimization variables.
    fn dim(&self) -> usize;

    /// Number of data samples (for batch construction).
    fn n_samples(&self) -> usize;

    fn value_grad(&self, x: &ParamVector, batch: &MiniBatch) -> Result<(f64, ParamVector)>;

    fn hvp(&self, x: &ParamVector, v: &ParamVector, batch: &MiniBatch) -> Result<ParamVector>;

    fn value(&self, x: &ParamVector, batch: &MiniBatch) -> Result<f64> {
        Ok(self.value_grad(x, batch)?.0)
    }

    fn full_value_grad(&self, x: &ParamVector) -> Result<(f64, ParamVector)> {
        self.value_grad(x, &MiniBatch::full(self.n_samples()))
    }
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimMismatch { expected, got })
    }
}

fn check_batch(batch: &MiniBatch, n: usize) -> Result<()> {
    if batch.indices.is_empty() {
        return Err(Error::Config("empty mini-batch".into()));
    }
    if let Some(&i) = batch.indices.iter().find(|&&i| i >= n) {
        return Err(Error::Config(format!("batch index {i} out of range 0..{n}")));
    }
    Ok(())
}

/// Numerically stable log(1 + exp(z)).
pub(crate) fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Numerically stable logistic sigmoid.
pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}
