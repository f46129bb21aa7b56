//! Logistic regression with the Welsch penalty.
//!
//! Per sample: `softplus(-y * <a, x>)`. Batch-averaged, plus `R(x)`.
//! Gradient: `-(1/B) sum_i y_i s_i a_i + R'(x)` with `s_i = sigmoid(-y_i <a_i, x>)`.
//! Hessian-vector product: `(1/B) sum_i s_i (1 - s_i) <a_i, v> a_i + R''(x) v`.

use ndarray::Array1;

use super::{check_batch, check_dim, sigmoid, softplus, welsch_grad, welsch_hvp, welsch_value};
use super::{Dataset, MiniBatch, Problem};
use crate::{ParamVector, Result};

#[derive(Debug, Clone)]
pub struct LogisticWelsch {
    pub data: Dataset,
    pub lambda: f64,
}

impl LogisticWelsch {
    pub fn new(data: Dataset, lambda: f64) -> Self {
        LogisticWelsch { data, lambda }
    }
}

impl Problem for LogisticWelsch {
    fn dim(&self) -> usize {
        self.data.n_features()
    }

    fn n_samples(&self) -> usize {
        self.data.n_samples()
    }

    fn value_grad(&self, x: &ParamVector, batch: &MiniBatch) -> Result<(f64, ParamVector)> {
        check_dim(self.dim(), x.len())?;
        check_batch(batch, self.n_samples())?;
        let inv_b = 1.0 / batch.size() as f64;
        let mut value = 0.0;
        let mut grad: ParamVector = Array1::zeros(self.dim());
        for &i in &batch.indices {
            let a = self.data.features.row(i);
            let y = self.data.labels[i];
            let t = -y * a.dot(x);
            value += softplus(t);
            let s = sigmoid(t);
            grad.scaled_add(-y * s * inv_b, &a);
        }
        value *= inv_b;
        value += welsch_value(x, self.lambda);
        grad += &welsch_grad(x, self.lambda);
        Ok((value, grad))
    }

    fn hvp(&self, x: &ParamVector, v: &ParamVector, batch: &MiniBatch) -> Result<ParamVector> {
        check_dim(self.dim(), x.len())?;
        check_dim(self.dim(), v.len())?;
        check_batch(batch, self.n_samples())?;
        let inv_b = 1.0 / batch.size() as f64;
        let mut out = welsch_hvp(x, v, self.lambda);
        for &i in &batch.indices {
            let a = self.data.features.row(i);
            let y = self.data.labels[i];
            let s = sigmoid(-y * a.dot(x));
            out.scaled_add(s * (1.0 - s) * a.dot(v) * inv_b, &a);
        }
        Ok(out)
    }
}
