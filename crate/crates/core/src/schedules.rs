//! Parameter schedules for (alpha_k, eta_k, beta_k).
//!
//! Two families: the experimental polynomial-decay rules (one per momentum
//! family) and the constant-in-horizon rules prescribed by the convergence
//! theorems, whose base stepsize `eta_hat` depends on smoothness constants
//! and the norm-equivalence ratio.

use serde::{Deserialize, Serialize};

use crate::norms::NormEquivConstants;
use crate::{Error, Result};

/// Smoothness and variance constants consumed by the theorem schedules.
///
/// `l0,l1`: gradient (L0,L1)-smoothness; `m0,m1`: Hessian (M0,M1)-smoothness;
/// `cal_l0,cal_l1`: mean-squared smoothness; `sigma_g,sigma_h`: gradient and
/// Hessian noise levels. A zero constant means "not binding": `1/0` inside a
/// min is treated as +inf.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessConfig {
    pub l0: f64,
    pub l1: f64,
    pub m0: f64,
    pub m1: f64,
    pub cal_l0: f64,
    pub cal_l1: f64,
    pub sigma_g: f64,
    pub sigma_h: f64,
    pub norm_equiv: NormEquivConstants,
}

impl SmoothnessConfig {
    pub fn validate(&self) -> Result<()> {
        let vals = [
            self.l0, self.l1, self.m0, self.m1, self.cal_l0, self.cal_l1, self.sigma_g,
            self.sigma_h,
        ];
        if vals.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Config(
                "smoothness constants must be finite and nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// Per-iteration coefficients consumed by the momentum engines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepCoeffs {
    pub alpha: f64,
    pub eta: f64,
    pub beta: f64,
    pub k: usize,
}

/// How beta_k is produced. The analyzed setting is `beta_k = 1 - alpha_k`;
/// a constant beta is exposed for the beta-SOM experiments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaRule {
    OneMinusAlpha,
    Constant(f64),
}

impl Default for BetaRule {
    fn default() -> Self {
        BetaRule::OneMinusAlpha
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ScheduleKind {
    /// alpha_k = 1/sqrt(k+1), eta_k = eta0/(k+1)^{3/4}
    PolyakExp { eta0: f64 },
    /// alpha_k = 1/(k+1)^{4/7}, eta_k = eta0/(k+1)^{5/7}
    IgtExp { eta0: f64 },
    /// alpha_k = 1/(k+1)^{2/3}, eta_k = eta0/(k+1)^{2/3}
    SomExp { eta0: f64 },
    /// alpha = 1/(K+1)^{2/3}, eta = eta_hat/(K+1)^{2/3},
    /// eta_hat = (1/(80 L1)) * (rho_upper/rho_lower)^{-1}
    TheoremSomV1,
    /// alpha = 1/(K+1)^{2/3}, eta = eta_hat/(K+1)^{2/3},
    /// eta_hat = (1/3) min{1/L1, 1/sqrt(M1)}
    TheoremSomV2,
    /// alpha = 1/(K+1)^{4/7}, eta = eta_hat/(K+1)^{5/7},
    /// eta_hat = min{1/(3 L1), 1/(3 sqrt(M1))}
    TheoremIgt,
    /// alpha = 1/(K+1)^{2/3}, eta = eta_hat/(K+1)^{2/3},
    /// eta_hat = (1/3) min{1/L1, (1/(11 calL1)) * (rho_upper/rho_lower)^{-1}}
    TheoremMvr,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    #[serde(flatten)]
    pub kind: ScheduleKind,
    #[serde(default)]
    pub beta_rule: BetaRule,
    /// Horizon; required by the theorem kinds.
    #[serde(default)]
    pub horizon: Option<usize>,
    #[serde(default)]
    pub smoothness: Option<SmoothnessConfig>,
}

/// 1/x with 1/0 = +inf, for the min{...} terms of the eta_hat formulas.
fn recip_or_inf(x: f64) -> f64 {
    if x > 0.0 {
        1.0 / x
    } else {
        f64::INFINITY
    }
}

fn finite_min(terms: &[f64]) -> Result<f64> {
    let m = terms.iter().fold(f64::INFINITY, |a, b| a.min(*b));
    if m.is_finite() {
        Ok(m)
    } else {
        Err(Error::Config(
            "eta_hat unbounded; supply nonzero smoothness constants".into(),
        ))
    }
}

impl Schedule {
    pub fn experimental(kind: ScheduleKind, beta_rule: BetaRule) -> Self {
        Schedule {
            kind,
            beta_rule,
            horizon: None,
            smoothness: None,
        }
    }

    pub fn theorem(
        kind: ScheduleKind,
        horizon: usize,
        smoothness: SmoothnessConfig,
        beta_rule: BetaRule,
    ) -> Self {
        Schedule {
            kind,
            beta_rule,
            horizon: Some(horizon),
            smoothness: Some(smoothness),
        }
    }

    fn theorem_inputs(&self) -> Result<(f64, &SmoothnessConfig)> {
        let horizon = self
            .horizon
            .ok_or_else(|| Error::Config("theorem schedule requires a horizon K".into()))?;
        let sm = self
            .smoothness
            .as_ref()
            .ok_or_else(|| Error::Config("theorem schedule requires smoothness constants".into()))?;
        sm.validate()?;
        Ok(((horizon + 1) as f64, sm))
    }

    /// Base stepsize of the theorem schedules, before the horizon scaling.
    pub fn eta_hat(&self) -> Result<f64> {
        let (_, sm) = self.theorem_inputs()?;
        match self.kind {
            ScheduleKind::TheoremSomV1 => {
                finite_min(&[recip_or_inf(80.0 * sm.l1 * sm.norm_equiv.rho_ratio())])
            }
            ScheduleKind::TheoremSomV2 => Ok(finite_min(&[
                recip_or_inf(sm.l1),
                recip_or_inf(sm.m1.sqrt()),
            ])? / 3.0),
            ScheduleKind::TheoremIgt => finite_min(&[
                recip_or_inf(3.0 * sm.l1),
                recip_or_inf(3.0 * sm.m1.sqrt()),
            ]),
            ScheduleKind::TheoremMvr => Ok(finite_min(&[
                recip_or_inf(sm.l1),
                recip_or_inf(11.0 * sm.cal_l1 * sm.norm_equiv.rho_ratio()),
            ])? / 3.0),
            _ => Err(Error::Config("eta_hat is defined for theorem kinds only".into())),
        }
    }

    /// Coefficients at iteration `k`.
    pub fn coeffs_at(&self, k: usize) -> Result<StepCoeffs> {
        let t = (k + 1) as f64;
        let (alpha, eta) = match self.kind {
            ScheduleKind::PolyakExp { eta0 } => (1.0 / t.sqrt(), eta0 / t.powf(0.75)),
            ScheduleKind::IgtExp { eta0 } => {
                (1.0 / t.powf(4.0 / 7.0), eta0 / t.powf(5.0 / 7.0))
            }
            ScheduleKind::SomExp { eta0 } => {
                let a = 1.0 / t.powf(2.0 / 3.0);
                (a, eta0 * a)
            }
            ScheduleKind::TheoremSomV1 | ScheduleKind::TheoremSomV2 | ScheduleKind::TheoremMvr => {
                let (kp1, _) = self.theorem_inputs()?;
                let a = 1.0 / kp1.powf(2.0 / 3.0);
                (a, self.eta_hat()? * a)
            }
            ScheduleKind::TheoremIgt => {
                let (kp1, _) = self.theorem_inputs()?;
                (
                    1.0 / kp1.powf(4.0 / 7.0),
                    self.eta_hat()? / kp1.powf(5.0 / 7.0),
                )
            }
        };
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::Config(format!("schedule produced eta = {eta} at k = {k}")));
        }
        let beta = match self.beta_rule {
            BetaRule::OneMinusAlpha => 1.0 - alpha,
            BetaRule::Constant(c) => c,
        };
        Ok(StepCoeffs { alpha, eta, beta, k })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norms::NormKind;

    fn sm(l1: f64, m1: f64, cal_l1: f64) -> SmoothnessConfig {
        SmoothnessConfig {
            l0: 1.0,
            l1,
            m0: 0.0,
            m1,
            cal_l0: 0.0,
            cal_l1,
            sigma_g: 0.0,
            sigma_h: 0.0,
            norm_equiv: NormEquivConstants::exact_for(NormKind::Euclidean, 1),
        }
    }

    #[test]
    fn polyak_exp_first_step() {
        let s = Schedule::experimental(ScheduleKind::PolyakExp { eta0: 0.1 }, BetaRule::OneMinusAlpha);
        let c = s.coeffs_at(0).unwrap();
        assert_eq!(c.alpha, 1.0);
        assert_eq!(c.eta, 0.1);
        assert_eq!(c.beta, 0.0);
    }

    #[test]
    fn som_exp_k7() {
        // 8^{2/3} = 4
        let s = Schedule::experimental(ScheduleKind::SomExp { eta0: 1.0 }, BetaRule::OneMinusAlpha);
        let c = s.coeffs_at(7).unwrap();
        assert!((c.alpha - 0.25).abs() < 1e-15);
        assert!((c.eta - 0.25).abs() < 1e-15);
    }

    #[test]
    fn theorem_som_v2_values() {
        // L1=1, M1=9, K+1=1000: eta_hat = (1/3)min{1, 1/3} = 1/9,
        // eta = 1/9/100 = 1/900, alpha = 1/100
        let s = Schedule::theorem(
            ScheduleKind::TheoremSomV2,
            999,
            sm(1.0, 9.0, 0.0),
            BetaRule::OneMinusAlpha,
        );
        let c = s.coeffs_at(0).unwrap();
        assert!((c.alpha - 0.01).abs() < 1e-15);
        assert!((c.eta - 1.0 / 900.0).abs() < 1e-17);
        assert!((s.eta_hat().unwrap() - 1.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn theorem_som_v1_eta_hat() {
        let mut cfg = sm(2.0, 0.0, 0.0);
        cfg.norm_equiv = NormEquivConstants::exact_for(NormKind::LInf, 4); // ratio 2
        let s = Schedule::theorem(ScheduleKind::TheoremSomV1, 99, cfg, BetaRule::OneMinusAlpha);
        assert!((s.eta_hat().unwrap() - 1.0 / 320.0).abs() < 1e-18);
    }

    #[test]
    fn theorem_mvr_eta_hat() {
        let s = Schedule::theorem(
            ScheduleKind::TheoremMvr,
            99,
            sm(0.0, 0.0, 2.0),
            BetaRule::OneMinusAlpha,
        );
        // min{inf, 1/22}/3
        assert!((s.eta_hat().unwrap() - 1.0 / 66.0).abs() < 1e-18);
    }

    #[test]
    fn theorem_constant_in_k() {
        let s = Schedule::theorem(
            ScheduleKind::TheoremIgt,
            499,
            sm(1.0, 4.0, 0.0),
            BetaRule::OneMinusAlpha,
        );
        let a = s.coeffs_at(0).unwrap();
        let b = s.coeffs_at(499).unwrap();
        assert_eq!(a.alpha, b.alpha);
        assert_eq!(a.eta, b.eta);
    }

    #[test]
    fn degenerate_constants() {
        // L1 = 0, M1 = 4 survives via the Hessian term
        let s = Schedule::theorem(
            ScheduleKind::TheoremSomV2,
            9,
            sm(0.0, 4.0, 0.0),
            BetaRule::OneMinusAlpha,
        );
        assert!((s.eta_hat().unwrap() - 1.0 / 6.0).abs() < 1e-15);
        // all zero -> documented error, never a division by zero
        let s = Schedule::theorem(
            ScheduleKind::TheoremSomV2,
            9,
            sm(0.0, 0.0, 0.0),
            BetaRule::OneMinusAlpha,
        );
        assert!(s.eta_hat().is_err());
        assert!(s.coeffs_at(0).is_err());
    }

    #[test]
    fn experimental_monotone_decay() {
        for kind in [
            ScheduleKind::PolyakExp { eta0: 0.5 },
            ScheduleKind::IgtExp { eta0: 0.5 },
            ScheduleKind::SomExp { eta0: 0.5 },
        ] {
            let s = Schedule::experimental(kind, BetaRule::OneMinusAlpha);
            let mut prev = s.coeffs_at(0).unwrap();
            for k in 1..200 {
                let c = s.coeffs_at(k).unwrap();
                assert!(c.alpha < prev.alpha && c.eta < prev.eta, "{kind:?} at k={k}");
                prev = c;
            }
        }
    }

    #[test]
    fn decay_exponents() {
        let cases: [(ScheduleKind, f64); 3] = [
            (ScheduleKind::PolyakExp { eta0: 0.3 }, 0.75),
            (ScheduleKind::IgtExp { eta0: 0.3 }, 5.0 / 7.0),
            (ScheduleKind::SomExp { eta0: 0.3 }, 2.0 / 3.0),
        ];
        for (kind, p) in cases {
            let s = Schedule::experimental(kind, BetaRule::OneMinusAlpha);
            let (k1, k2) = (3usize, 47usize);
            let e1 = s.coeffs_at(k1).unwrap().eta;
            let e2 = s.coeffs_at(k2).unwrap().eta;
            let lhs = e1.ln() - e2.ln();
            let rhs = -p * (((k1 + 1) as f64).ln() - ((k2 + 1) as f64).ln());
            assert!((lhs - rhs).abs() < 1e-12, "{kind:?}");
        }
    }

    #[test]
    fn constant_beta_rule() {
        let s = Schedule::experimental(ScheduleKind::SomExp { eta0: 1.0 }, BetaRule::Constant(0.5));
        assert_eq!(s.coeffs_at(3).unwrap().beta, 0.5);
    }
}
