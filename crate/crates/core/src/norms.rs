//! Norms, dual norms, and exact linear minimization oracles over norm balls.
//!
//! The LMO over a ball of radius `eta` returns
//! `argmin_{||x|| <= eta} <m, x>`, which has a closed form for each of the
//! three supported norms. The defining identity, used throughout the
//! verification suite, is `<m, lmo(m)> = -eta * ||m||_*`.

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::{Error, ParamVector, Result};

/// Primal norm defining the LMO ball. The dual norm is implied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    #[serde(alias = "l2")]
    Euclidean,
    LInf,
    L1,
}

impl NormKind {
    /// Dual pairing: l2 is self-dual, linf and l1 are dual to each other.
    pub fn dual(self) -> NormKind {
        match self {
            NormKind::Euclidean => NormKind::Euclidean,
            NormKind::LInf => NormKind::L1,
            NormKind::L1 => NormKind::LInf,
        }
    }
}

/// Constants relating the primal/dual norms to the Euclidean norm:
/// `rho_lower*||x||_2 <= ||x||_* <= rho_upper*||x||_2` and
/// `theta_lower*||x||_2 <= ||x|| <= theta_upper*||x||_2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormEquivConstants {
    pub rho_lower: f64,
    pub rho_upper: f64,
    pub theta_lower: f64,
    pub theta_upper: f64,
}

impl NormEquivConstants {
    pub fn new(rho_lower: f64, rho_upper: f64, theta_lower: f64, theta_upper: f64) -> Result<Self> {
        let c = Self {
            rho_lower,
            rho_upper,
            theta_lower,
            theta_upper,
        };
        if !(rho_lower > 0.0 && theta_lower > 0.0) || rho_lower > rho_upper || theta_lower > theta_upper {
            return Err(Error::Config(format!("invalid norm-equivalence constants: {c:?}")));
        }
        Ok(c)
    }

    /// Exact constants for each norm in dimension `d`.
    ///
    /// Euclidean: all 1. LInf primal (dual l1): `||x||_2 <= ||x||_1 <= sqrt(d)||x||_2`
    /// and `||x||_2/sqrt(d) <= ||x||_inf <= ||x||_2`. L1 primal is the mirror image.
    pub fn exact_for(kind: NormKind, d: usize) -> Self {
        let sqrt_d = (d as f64).sqrt();
        match kind {
            NormKind::Euclidean => Self {
                rho_lower: 1.0,
                rho_upper: 1.0,
                theta_lower: 1.0,
                theta_upper: 1.0,
            },
            NormKind::LInf => Self {
                rho_lower: 1.0,
                rho_upper: sqrt_d,
                theta_lower: 1.0 / sqrt_d,
                theta_upper: 1.0,
            },
            NormKind::L1 => Self {
                rho_lower: 1.0 / sqrt_d,
                rho_upper: 1.0,
                theta_lower: 1.0,
                theta_upper: sqrt_d,
            },
        }
    }

    pub fn rho_ratio(&self) -> f64 {
        self.rho_upper / self.rho_lower
    }
}

fn check_finite(x: &ParamVector, context: &'static str) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { context })
    }
}

fn raw_norm(kind: NormKind, x: &ParamVector) -> f64 {
    match kind {
        NormKind::Euclidean => x.iter().map(|v| v * v).sum::<f64>().sqrt(),
        NormKind::LInf => x.iter().fold(0.0_f64, |a, v| a.max(v.abs())),
        NormKind::L1 => x.iter().map(|v| v.abs()).sum(),
    }
}

/// Primal norm `||x||` under `kind`.
pub fn norm(kind: NormKind, x: &ParamVector) -> Result<f64> {
    check_finite(x, "norm input")?;
    Ok(raw_norm(kind, x))
}

/// Dual norm `||x||_*` of the primal `kind`.
pub fn dual_norm(kind: NormKind, x: &ParamVector) -> Result<f64> {
    check_finite(x, "dual_norm input")?;
    Ok(raw_norm(kind.dual(), x))
}

/// Exact LMO: `argmin_{||x|| <= eta} <m, x>`.
///
/// Euclidean: `-eta * m / ||m||_2`. LInf: `-eta * sign(m)` elementwise with
/// `sign(0) = 0`. L1: a single vertex `-eta * sign(m_i*) * e_i*` at the
/// largest `|m_i|`, lowest index on ties. `lmo(0) = 0` by convention.
pub fn lmo(kind: NormKind, m: &ParamVector, eta: f64) -> Result<ParamVector> {
    if !(eta > 0.0) {
        return Err(Error::InvalidRadius(eta));
    }
    check_finite(m, "lmo direction")?;
    let d = m.len();
    match kind {
        NormKind::Euclidean => {
            let n = raw_norm(NormKind::Euclidean, m);
            if n == 0.0 {
                return Ok(Array1::zeros(d));
            }
            Ok(m.mapv(|v| -eta * v / n))
        }
        NormKind::LInf => Ok(m.mapv(|v| {
            if v > 0.0 {
                -eta
            } else if v < 0.0 {
                eta
            } else {
                0.0
            }
        })),
        NormKind::L1 => {
            let mut best = 0usize;
            let mut best_abs = 0.0_f64;
            for (i, &v) in m.iter().enumerate() {
                if v.abs() > best_abs {
                    best_abs = v.abs();
                    best = i;
                }
            }
            let mut out = Array1::zeros(d);
            if best_abs > 0.0 {
                out[best] = if m[best] > 0.0 { -eta } else { eta };
            }
            Ok(out)
        }
    }
}
