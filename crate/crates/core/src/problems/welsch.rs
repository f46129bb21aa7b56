//! Welsch penalty `R(x) = lambda * sum_i x_i^2 / (1 + x_i^2)`.
//!
//! Bounded and nonconvex, with a diagonal Hessian:
//! `R'_i = 2 lambda x_i / (1+x_i^2)^2` and
//! `R''_ii = lambda (2 - 6 x_i^2) / (1+x_i^2)^3`.

use crate::{ParamVector, Result};

pub fn welsch_value(x: &ParamVector, lambda: f64) -> f64 {
    lambda * x.iter().map(|&t| t * t / (1.0 + t * t)).sum::<f64>()
}

pub fn welsch_grad(x: &ParamVector, lambda: f64) -> ParamVector {
    x.mapv(|t| {
        let q = 1.0 + t * t;
        lambda * 2.0 * t / (q * q)
    })
}

pub fn welsch_hvp(x: &ParamVector, v: &ParamVector, lambda: f64) -> ParamVector {
    let mut out = v.clone();
    for (o, &t) in out.iter_mut().zip(x.iter()) {
        let q = 1.0 + t * t;
        *o *= lambda * (2.0 - 6.0 * t * t) / (q * q * q);
    }
    out
}

pub fn welsch_value_grad_hvp(
    x: &ParamVector,
    v: &ParamVector,
    lambda: f64,
) -> Result<(f64, ParamVector, ParamVector)> {
    if x.iter().chain(v.iter()).any(|t| !t.is_finite()) {
        return Err(crate::Error::NonFinite { context: "welsch input" });
    }
    Ok((
        welsch_value(x, lambda),
        welsch_grad(x, lambda),
        welsch_hvp(x, v, lambda),
    ))
}
