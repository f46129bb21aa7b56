//! Independent oracles and property suites.
//!
//! Everything here deliberately avoids the analytic code paths it checks:
//! finite differences for gradients and Hessian-vector products, sampling
//! for LMO optimality, and standalone reference loops for the momentum
//! equivalences. The `verify` CLI subcommand runs the whole battery and
//! emits a machine-readable report.

use ndarray::Array1;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::momentum::{MomentumEngine, VariantKind};
use crate::norms::{dual_norm, lmo, norm, NormKind};
use crate::problems::{
    sample_batch, Activation, Dataset, LogisticWelsch, MiniBatch, MlpArchitecture, MlpWelsch,
    Problem,
};
use crate::runner::{initial_point, substream_seed};
use crate::schedules::StepCoeffs;
use crate::{ParamVector, Result};

/// Central-difference configuration.
#[derive(Debug, Clone, Copy)]
pub struct FdSpec {
    /// Base step; the per-coordinate step is `base_eps * (1 + |x_i|)`.
    pub base_eps: f64,
}

impl Default for FdSpec {
    fn default() -> Self {
        FdSpec { base_eps: 1e-6 }
    }
}

/// Central finite-difference gradient, one coordinate at a time.
pub fn fd_gradient<P: Problem>(
    problem: &P,
    x: &ParamVector,
    batch: &MiniBatch,
    fd: FdSpec,
) -> Result<ParamVector> {
    let mut g = Array1::zeros(x.len());
    let mut xp = x.clone();
    for i in 0..x.len() {
        let eps = fd.base_eps * (1.0 + x[i].abs());
        let orig = x[i];
        xp[i] = orig + eps;
        let fp = problem.value(&xp, batch)?;
        xp[i] = orig - eps;
        let fm = problem.value(&xp, batch)?;
        xp[i] = orig;
        g[i] = (fp - fm) / (2.0 * eps);
    }
    Ok(g)
}

/// Finite-difference Hessian-vector product:
/// `(grad f(x + eps v) - grad f(x - eps v)) / (2 eps)` with
/// `eps = 1e-5 (1 + ||x||_2) / (1 + ||v||_2)`.
pub fn fd_hvp<P: Problem>(
    problem: &P,
    x: &ParamVector,
    v: &ParamVector,
    batch: &MiniBatch,
) -> Result<ParamVector> {
    let vnorm = v.iter().map(|t| t * t).sum::<f64>().sqrt();
    if vnorm == 0.0 {
        return Ok(Array1::zeros(x.len()));
    }
    let xnorm = x.iter().map(|t| t * t).sum::<f64>().sqrt();
    let eps = 1e-5 * (1.0 + xnorm) / (1.0 + vnorm);
    let (_, gp) = problem.value_grad(&(x + &(eps * v)), batch)?;
    let (_, gm) = problem.value_grad(&(x - &(eps * v)), batch)?;
    Ok((&gp - &gm) / (2.0 * eps))
}

/// Sample feasible points and assert none beats `lmo(m)`, plus the exact
/// identity `<m, lmo(m)> = -eta ||m||_*`.
pub fn lmo_bruteforce_check<R: Rng>(
    kind: NormKind,
    m: &ParamVector,
    eta: f64,
    samples: usize,
    rng: &mut R,
) -> Result<bool> {
    let s = lmo(kind, m, eta)?;
    let best = m.dot(&s);
    let identity = -eta * dual_norm(kind, m)?;
    let scale = 1.0_f64.max(identity.abs());
    if (best - identity).abs() > 1e-12 * scale {
        return Ok(false);
    }
    if norm(kind, &s)? > eta * (1.0 + 1e-12) {
        return Ok(false);
    }
    let d = m.len();
    for _ in 0..samples {
        // random box direction rescaled to a random radius inside the ball;
        // covers the boundary (where the minimizer lives) as u -> 1
        let x = Array1::from_vec((0..d).map(|_| rng.random_range(-1.0..=1.0)).collect());
        let n = norm(kind, &x)?;
        if n == 0.0 {
            continue;
        }
        let u: f64 = rng.random();
        let x = x.mapv(|t| t * eta * u / n);
        debug_assert!(norm(kind, &x)? <= eta * (1.0 + 1e-12));
        if m.dot(&x) < best - 1e-10 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Empirical curvature-vs-gradient-norm scatter along a trajectory, with a
/// least-squares fit of `curvature = L0 + L1 * grad_norm`. Descriptive only.
pub fn smoothness_probe<P: Problem>(
    problem: &P,
    trajectory: &[ParamVector],
    kind: NormKind,
) -> Result<(Vec<(f64, f64)>, f64, f64)> {
    let mut pairs = Vec::new();
    for w in trajectory.windows(2) {
        let (x, y) = (&w[0], &w[1]);
        let dist = norm(kind, &(x - y))?;
        if dist == 0.0 {
            continue;
        }
        let (_, gx) = problem.full_value_grad(x)?;
        let (_, gy) = problem.full_value_grad(y)?;
        let grad_sup = dual_norm(kind, &gx)?.max(dual_norm(kind, &gy)?);
        let curvature = dual_norm(kind, &(&gx - &gy))? / dist;
        pairs.push((grad_sup, curvature));
    }
    // least squares for curvature = l0 + l1 * grad_sup
    let (l0, l1) = if pairs.len() >= 2 {
        let n = pairs.len() as f64;
        let sx: f64 = pairs.iter().map(|p| p.0).sum();
        let sy: f64 = pairs.iter().map(|p| p.1).sum();
        let sxx: f64 = pairs.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pairs.iter().map(|p| p.0 * p.1).sum();
        let denom = n * sxx - sx * sx;
        if denom.abs() > 1e-300 {
            let slope = (n * sxy - sx * sy) / denom;
            ((sy - slope * sx) / n, slope)
        } else {
            (sy / n, 0.0)
        }
    } else {
        (0.0, 0.0)
    };
    Ok((pairs, l0, l1))
}

// ---------------------------------------------------------------------------
// Equivalence suite
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub max_abs_diff: f64,
    pub first_divergence: Option<usize>,
    pub note: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct EquivalenceReport {
    pub checks: Vec<CheckResult>,
}

impl EquivalenceReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn small_problem(seed: u64) -> LogisticWelsch {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    LogisticWelsch::new(Dataset::synthesize(&mut rng, 20, 5, 0.15), 0.01)
}

/// Coefficients for the equivalence runs; the closure form lets checks pin
/// alpha or beta exactly.
type CoeffFn = dyn Fn(usize) -> StepCoeffs;

/// Per-iteration snapshot of (iterate, momentum): divergence in either shows
/// up as early as possible.
fn snapshot(x: &ParamVector, m: &ParamVector) -> ParamVector {
    Array1::from_iter(x.iter().chain(m.iter()).copied())
}

fn som_exp_coeffs(eta0: f64) -> impl Fn(usize) -> StepCoeffs {
    move |k| {
        let t = ((k + 1) as f64).powf(2.0 / 3.0);
        let alpha = 1.0 / t;
        StepCoeffs {
            alpha,
            eta: eta0 / t,
            beta: 1.0 - alpha,
            k,
        }
    }
}

/// Run a momentum engine through the standard loop. Mirrors the runner's RNG
/// discipline so traces line up across engines under a shared seed.
fn engine_loop<P: Problem>(
    problem: &P,
    mut engine: MomentumEngine,
    norm_kind: NormKind,
    coeffs: &CoeffFn,
    iters: usize,
    seed: u64,
    batch_size: usize,
) -> Result<Vec<ParamVector>> {
    let mut x = initial_point(seed, problem.dim());
    let mut batch_rng = ChaCha12Rng::seed_from_u64(substream_seed(seed, 2));
    let b0 = sample_batch(&mut batch_rng, problem.n_samples(), batch_size)?;
    engine.m = problem.value_grad(&x, &b0)?.1;
    let mut xs = Vec::with_capacity(iters);
    for k in 0..iters {
        let c = coeffs(k);
        let step = lmo(norm_kind, &engine.m, c.eta)?;
        let x_prev = x.clone();
        x = &x + &step;
        let batch = sample_batch(&mut batch_rng, problem.n_samples(), batch_size)?;
        engine.update(problem, &batch, &c, &x, &x_prev)?;
        xs.push(snapshot(&x, &engine.m));
    }
    Ok(xs)
}

/// Standalone STORM loop, written against the published recursion
/// `m <- (1-a)(m + [g(x_new) - g(x_old)]) + a * g_anchor` rather than the
/// engine's corrected form. `anchor_new` selects the gradient the alpha term
/// uses.
fn storm_reference_loop<P: Problem>(
    problem: &P,
    norm_kind: NormKind,
    coeffs: &CoeffFn,
    iters: usize,
    seed: u64,
    batch_size: usize,
    anchor_new: bool,
) -> Result<Vec<ParamVector>> {
    let mut x = initial_point(seed, problem.dim());
    let mut batch_rng = ChaCha12Rng::seed_from_u64(substream_seed(seed, 2));
    let b0 = sample_batch(&mut batch_rng, problem.n_samples(), batch_size)?;
    let mut m = problem.value_grad(&x, &b0)?.1;
    let mut xs = Vec::with_capacity(iters);
    for k in 0..iters {
        let c = coeffs(k);
        let step = lmo(norm_kind, &m, c.eta)?;
        let x_prev = x.clone();
        x = &x + &step;
        let batch = sample_batch(&mut batch_rng, problem.n_samples(), batch_size)?;
        let (_, g_new) = problem.value_grad(&x, &batch)?;
        let (_, g_old) = problem.value_grad(&x_prev, &batch)?;
        let a = c.alpha;
        let anchor = if anchor_new { &g_new } else { &g_old };
        for (((mi, &gn), &go), &an) in m
            .iter_mut()
            .zip(g_new.iter())
            .zip(g_old.iter())
            .zip(anchor.iter())
        {
            // (1-a)(m + diff) + a*anchor, with the (1-a) factor distributed the
            // same way the engine evaluates beta*diff at beta = 1-a
            *mi = ((1.0 - a) * *mi + (1.0 - a) * (gn - go)) + a * an;
        }
        xs.push(snapshot(&x, &m));
    }
    Ok(xs)
}

/// Standalone memoryless loop: `m = g(x_new)` each step, i.e. normalized/sign
/// SGD under the chosen norm.
fn memoryless_reference_loop<P: Problem>(
    problem: &P,
    norm_kind: NormKind,
    eta_at: impl Fn(usize) -> f64,
    iters: usize,
    seed: u64,
    batch_size: usize,
) -> Result<Vec<ParamVector>> {
    let mut x = initial_point(seed, problem.dim());
    let mut batch_rng = ChaCha12Rng::seed_from_u64(substream_seed(seed, 2));
    let b0 = sample_batch(&mut batch_rng, problem.n_samples(), batch_size)?;
    let mut m = problem.value_grad(&x, &b0)?.1;
    let mut xs = Vec::with_capacity(iters);
    for k in 0..iters {
        let step = lmo(norm_kind, &m, eta_at(k))?;
        x = &x + &step;
        let batch = sample_batch(&mut batch_rng, problem.n_samples(), batch_size)?;
        m = problem.value_grad(&x, &batch)?.1;
        xs.push(snapshot(&x, &m));
    }
    Ok(xs)
}

fn diff_trajectories(a: &[ParamVector], b: &[ParamVector]) -> (f64, Option<usize>) {
    let mut max_diff = 0.0_f64;
    let mut first = None;
    for (k, (xa, xb)) in a.iter().zip(b.iter()).enumerate() {
        let d = xa
            .iter()
            .zip(xb.iter())
            .fold(0.0_f64, |acc, (p, q)| acc.max((p - q).abs()));
        if d > 0.0 && first.is_none() {
            first = Some(k);
        }
        max_diff = max_diff.max(d);
    }
    (max_diff, first)
}

/// Options for [`equivalence_suite`]; `beta_scale != 1` is a mutation hook
/// that must make the MARS/STORM check fail at k = 0.
#[derive(Debug, Clone, Copy)]
pub struct EquivalenceOptions {
    pub seed: u64,
    pub iters: usize,
    pub beta_scale: f64,
}

impl Default for EquivalenceOptions {
    fn default() -> Self {
        EquivalenceOptions {
            seed: 17,
            iters: 200,
            beta_scale: 1.0,
        }
    }
}

/// Bitwise equivalence checks on a d=5, N=20 synthetic problem.
pub fn equivalence_suite(opts: EquivalenceOptions) -> Result<EquivalenceReport> {
    let problem = small_problem(123);
    let nk = NormKind::Euclidean;
    let (iters, seed, bsz) = (opts.iters, opts.seed, 4usize);
    let d = problem.dim();
    let mut checks = Vec::new();

    let base = som_exp_coeffs(0.1);
    let scale = opts.beta_scale;
    let scaled = move |k: usize| {
        let mut c = base(k);
        c.beta *= scale;
        c
    };

    // MARS(beta = 1-alpha, anchor = new) vs the standalone STORM loop
    {
        let mars = engine_loop(
            &problem,
            MomentumEngine::new(VariantKind::Mars, Array1::zeros(d), substream_seed(seed, 3)),
            nk,
            &scaled,
            iters,
            seed,
            bsz,
        )?;
        let storm = storm_reference_loop(&problem, nk, &som_exp_coeffs(0.1), iters, seed, bsz, true)?;
        let (max_diff, first) = diff_trajectories(&mars, &storm);
        checks.push(CheckResult {
            name: "mars_equals_storm".into(),
            passed: max_diff == 0.0,
            max_abs_diff: max_diff,
            first_divergence: first,
            note: "beta = 1 - alpha, anchor at the new iterate".into(),
        });
    }

    // MARS with the literal published anchor (old iterate) must differ from
    // the anchor-new STORM reference: the discrepancy is real, not a bug.
    {
        let mut engine =
            MomentumEngine::new(VariantKind::Mars, Array1::zeros(d), substream_seed(seed, 3));
        engine.mars_anchor = crate::momentum::MarsAnchor::Old;
        let mars_old = engine_loop(&problem, engine, nk, &som_exp_coeffs(0.1), iters, seed, bsz)?;
        let storm = storm_reference_loop(&problem, nk, &som_exp_coeffs(0.1), iters, seed, bsz, true)?;
        let (max_diff, first) = diff_trajectories(&mars_old, &storm);
        checks.push(CheckResult {
            name: "mars_anchor_old_differs".into(),
            passed: max_diff > 0.0,
            max_abs_diff: max_diff,
            first_divergence: first,
            note: "EXPECTED-DIFFERENT: anchor-point ambiguity between update forms".into(),
        });
    }

    // SOM-V1 with the interpolation draw pinned to 1 vs SOM-V2
    {
        let mut v1 =
            MomentumEngine::new(VariantKind::SomV1, Array1::zeros(d), substream_seed(seed, 3));
        v1.b_override = Some(1.0);
        let v2 =
            MomentumEngine::new(VariantKind::SomV2, Array1::zeros(d), substream_seed(seed, 3));
        let a = engine_loop(&problem, v1, nk, &som_exp_coeffs(0.1), iters, seed, bsz)?;
        let b = engine_loop(&problem, v2, nk, &som_exp_coeffs(0.1), iters, seed, bsz)?;
        let (max_diff, first) = diff_trajectories(&a, &b);
        checks.push(CheckResult {
            name: "som_v1_pinned_equals_v2".into(),
            passed: max_diff == 0.0,
            max_abs_diff: max_diff,
            first_divergence: first,
            note: "V1 interpolation coefficient pinned to 1".into(),
        });
    }

    // beta = 0 collapses every corrected variant to Polyak
    {
        let beta_zero = |k: usize| {
            let mut c = som_exp_coeffs(0.1)(k);
            c.beta = 0.0;
            c
        };
        let polyak = engine_loop(
            &problem,
            MomentumEngine::new(VariantKind::Polyak, Array1::zeros(d), substream_seed(seed, 3)),
            nk,
            &beta_zero,
            iters,
            seed,
            bsz,
        )?;
        for variant in [VariantKind::Mars, VariantKind::SomV1, VariantKind::SomV2] {
            let other = engine_loop(
                &problem,
                MomentumEngine::new(variant, Array1::zeros(d), substream_seed(seed, 3)),
                nk,
                &beta_zero,
                iters,
                seed,
                bsz,
            )?;
            let (max_diff, first) = diff_trajectories(&polyak, &other);
            checks.push(CheckResult {
                name: format!("beta_zero_collapse_{variant:?}"),
                passed: max_diff == 0.0,
                max_abs_diff: max_diff,
                first_divergence: first,
                note: "beta = 0 must reduce to the Polyak recursion".into(),
            });
        }
    }

    // alpha = 1, beta = 0 is memoryless normalized/sign SGD
    {
        let eta_at = |k: usize| 0.1 / ((k + 1) as f64).powf(2.0 / 3.0);
        let memoryless = move |k: usize| StepCoeffs {
            alpha: 1.0,
            beta: 0.0,
            eta: eta_at(k),
            k,
        };
        let reference = memoryless_reference_loop(&problem, nk, eta_at, iters, seed, bsz)?;
        for variant in [
            VariantKind::Polyak,
            VariantKind::Igt,
            VariantKind::Mars,
            VariantKind::SomV1,
            VariantKind::SomV2,
        ] {
            let run = engine_loop(
                &problem,
                MomentumEngine::new(variant, Array1::zeros(d), substream_seed(seed, 3)),
                nk,
                &memoryless,
                iters,
                seed,
                bsz,
            )?;
            let (max_diff, first) = diff_trajectories(&reference, &run);
            checks.push(CheckResult {
                name: format!("alpha_one_memoryless_{variant:?}"),
                passed: max_diff == 0.0,
                max_abs_diff: max_diff,
                first_divergence: first,
                note: "alpha = 1, beta = 0 must match plain normalized SGD".into(),
            });
        }
    }

    Ok(EquivalenceReport { checks })
}

// ---------------------------------------------------------------------------
// Full verification battery (the `verify` CLI)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct SectionReport {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub sections: Vec<SectionReport>,
    pub passed: bool,
}

fn rand_vec<R: Rng>(rng: &mut R, d: usize) -> ParamVector {
    let n = StandardNormal;
    Array1::from_vec((0..d).map(|_| n.sample(rng)).collect())
}

fn max_rel_err(a: &ParamVector, b: &ParamVector) -> f64 {
    let scale = b.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1e-12);
    a.iter()
        .zip(b.iter())
        .fold(0.0_f64, |m, (p, q)| m.max((p - q).abs()))
        / scale
}

/// Run the whole battery: LMO identity/feasibility/optimality over random
/// triples, FD validation of both problems' derivatives, and the
/// equivalence suite.
pub fn run_verification(seed: u64) -> Result<VerifyReport> {
    let mut sections = Vec::new();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);

    // LMO: 1000 random (norm, m, eta) triples; 100 sampled feasible points
    // each keeps the battery fast, the acceptance suite runs the full 1000.
    {
        let kinds = [NormKind::Euclidean, NormKind::LInf, NormKind::L1];
        let mut failures = 0usize;
        for i in 0..1000 {
            let kind = kinds[i % 3];
            let d = rng.random_range(1..10);
            let m = rand_vec(&mut rng, d);
            let eta = 10f64.powf(rng.random_range(-3.0..1.0));
            if !lmo_bruteforce_check(kind, &m, eta, 100, &mut rng)? {
                failures += 1;
            }
        }
        sections.push(SectionReport {
            name: "lmo_identity_feasibility_optimality".into(),
            passed: failures == 0,
            detail: format!("{failures}/1000 triples failed"),
        });
    }

    // derivative oracles on both problems
    {
        let mut data_rng = ChaCha12Rng::seed_from_u64(seed ^ 0xD5);
        let data = Dataset::synthesize(&mut data_rng, 40, 8, 0.1);
        let logreg = LogisticWelsch::new(data.clone(), 0.01);
        let mlp = MlpWelsch::new(
            MlpArchitecture::new(8, vec![6, 4], Activation::Tanh),
            data,
            0.01,
        )?;
        let mut worst_g = 0.0_f64;
        let mut worst_h = 0.0_f64;
        for _ in 0..10 {
            let batch = sample_batch(&mut rng, 40, 8)?;
            let x = rand_vec(&mut rng, logreg.dim());
            let (_, g) = logreg.value_grad(&x, &batch)?;
            worst_g = worst_g.max(max_rel_err(&g, &fd_gradient(&logreg, &x, &batch, FdSpec::default())?));
            let v = rand_vec(&mut rng, logreg.dim());
            let h = logreg.hvp(&x, &v, &batch)?;
            worst_h = worst_h.max(max_rel_err(&h, &fd_hvp(&logreg, &x, &v, &batch)?));

            let xm = rand_vec(&mut rng, mlp.dim()).mapv(|t| 0.5 * t);
            let (_, gm) = mlp.value_grad(&xm, &batch)?;
            worst_g = worst_g.max(max_rel_err(&gm, &fd_gradient(&mlp, &xm, &batch, FdSpec::default())?));
            let vm = rand_vec(&mut rng, mlp.dim());
            let hm = mlp.hvp(&xm, &vm, &batch)?;
            worst_h = worst_h.max(max_rel_err(&hm, &fd_hvp(&mlp, &xm, &vm, &batch)?));
        }
        sections.push(SectionReport {
            name: "derivative_oracles".into(),
            passed: worst_g < 1e-5 && worst_h < 1e-4,
            detail: format!("worst grad rel err {worst_g:.2e}, worst hvp rel err {worst_h:.2e}"),
        });
    }

    // momentum equivalences
    {
        let report = equivalence_suite(EquivalenceOptions::default())?;
        let detail = report
            .checks
            .iter()
            .map(|c| format!("{}={}", c.name, if c.passed { "ok" } else { "FAIL" }))
            .collect::<Vec<_>>()
            .join(", ");
        sections.push(SectionReport {
            name: "equivalence_suite".into(),
            passed: report.all_passed(),
            detail,
        });
    }

    let passed = sections.iter().all(|s| s.passed);
    Ok(VerifyReport { sections, passed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Error;

    /// f(x) = ||x||^2 / 2, gradient x, Hessian I. Data-free test objective.
    struct Quadratic {
        dim: usize,
    }

    impl Problem for Quadratic {
        fn dim(&self) -> usize {
            self.dim
        }
        fn n_samples(&self) -> usize {
            1
        }
        fn value_grad(&self, x: &ParamVector, _b: &MiniBatch) -> Result<(f64, ParamVector)> {
            Ok((0.5 * x.dot(x), x.clone()))
        }
        fn hvp(&self, _x: &ParamVector, v: &ParamVector, _b: &MiniBatch) -> Result<ParamVector> {
            Ok(v.clone())
        }
    }

    /// 1-D f(x) = exp(x); curvature equals gradient norm everywhere.
    struct Exp1d;

    impl Problem for Exp1d {
        fn dim(&self) -> usize {
            1
        }
        fn n_samples(&self) -> usize {
            1
        }
        fn value_grad(&self, x: &ParamVector, _b: &MiniBatch) -> Result<(f64, ParamVector)> {
            Ok((x[0].exp(), ndarray::array![x[0].exp()]))
        }
        fn hvp(&self, x: &ParamVector, v: &ParamVector, _b: &MiniBatch) -> Result<ParamVector> {
            Ok(ndarray::array![x[0].exp() * v[0]])
        }
    }

    #[test]
    fn fd_gradient_on_quadratic() {
        let p = Quadratic { dim: 6 };
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        let x = rand_vec(&mut rng, 6);
        let g = fd_gradient(&p, &x, &MiniBatch::full(1), FdSpec::default()).unwrap();
        assert!(max_rel_err(&g, &x) < 1e-9);
    }

    #[test]
    fn fd_gradient_on_constant_is_zero() {
        struct Constant;
        impl Problem for Constant {
            fn dim(&self) -> usize {
                3
            }
            fn n_samples(&self) -> usize {
                1
            }
            fn value_grad(&self, _x: &ParamVector, _b: &MiniBatch) -> Result<(f64, ParamVector)> {
                Ok((4.2, Array1::zeros(3)))
            }
            fn hvp(&self, _x: &ParamVector, v: &ParamVector, _b: &MiniBatch) -> Result<ParamVector> {
                let _ = v;
                Ok(Array1::zeros(3))
            }
        }
        let g = fd_gradient(
            &Constant,
            &ndarray::array![1.0, 2.0, 3.0],
            &MiniBatch::full(1),
            FdSpec::default(),
        )
        .unwrap();
        assert!(g.iter().all(|&t| t.abs() < 1e-9));
    }

    #[test]
    fn fd_hvp_on_quadratic_returns_v() {
        let p = Quadratic { dim: 4 };
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let x = rand_vec(&mut rng, 4);
        let v = rand_vec(&mut rng, 4);
        let h = fd_hvp(&p, &x, &v, &MiniBatch::full(1)).unwrap();
        assert!(max_rel_err(&h, &v) < 1e-8);
        let z = fd_hvp(&p, &x, &Array1::zeros(4), &MiniBatch::full(1)).unwrap();
        assert!(z.iter().all(|&t| t == 0.0));
    }

    #[test]
    fn bruteforce_accepts_closed_forms() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        for kind in [NormKind::Euclidean, NormKind::LInf, NormKind::L1] {
            let m = rand_vec(&mut rng, 5);
            assert!(lmo_bruteforce_check(kind, &m, 0.7, 500, &mut rng).unwrap());
        }
        // m = 0: trivially optimal
        let z = Array1::zeros(4);
        assert!(lmo_bruteforce_check(NormKind::L1, &z, 1.0, 50, &mut rng).unwrap());
        // near-tie under l1: both vertices give the same objective
        let m = ndarray::array![2.0, -2.0, 0.0];
        assert!(lmo_bruteforce_check(NormKind::L1, &m, 1.0, 500, &mut rng).unwrap());
    }

    #[test]
    fn probe_quadratic_has_unit_curvature() {
        let p = Quadratic { dim: 3 };
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        let traj: Vec<ParamVector> = (0..12).map(|_| rand_vec(&mut rng, 3)).collect();
        let (pairs, _, l1) = smoothness_probe(&p, &traj, NormKind::Euclidean).unwrap();
        for (_, c) in &pairs {
            assert!((c - 1.0).abs() < 1e-12);
        }
        assert!(l1.abs() < 1e-9);
    }

    #[test]
    fn probe_exp_slope_near_one() {
        // dense 1-D grid: curvature ~ grad norm, so the fitted slope -> 1
        let traj: Vec<ParamVector> = (0..200)
            .map(|i| ndarray::array![-1.0 + 2.0 * i as f64 / 199.0 * 1e-1 + i as f64 * 0.01])
            .collect();
        let (_, _, l1) = smoothness_probe(&Exp1d, &traj, NormKind::Euclidean).unwrap();
        assert!((l1 - 1.0).abs() < 0.05, "fitted L1 = {l1}");
    }

    #[test]
    fn probe_short_trajectory_empty() {
        let p = Quadratic { dim: 2 };
        let (pairs, _, _) =
            smoothness_probe(&p, &[ndarray::array![1.0, 2.0]], NormKind::Euclidean).unwrap();
        assert!(pairs.is_empty());
        // consecutive duplicates skipped
        let x = ndarray::array![1.0, 2.0];
        let (pairs, _, _) = smoothness_probe(&p, &[x.clone(), x], NormKind::Euclidean).unwrap();
        assert!(pairs.is_empty());
    }

    #[test]
    fn default_suite_passes() {
        let report = equivalence_suite(EquivalenceOptions {
            iters: 60,
            ..Default::default()
        })
        .unwrap();
        for c in &report.checks {
            assert!(c.passed, "{}: max diff {}", c.name, c.max_abs_diff);
        }
    }

    #[test]
    fn corrupted_beta_fails_at_zero() {
        let report = equivalence_suite(EquivalenceOptions {
            iters: 10,
            beta_scale: 1.01,
            ..Default::default()
        })
        .unwrap();
        let mars = report
            .checks
            .iter()
            .find(|c| c.name == "mars_equals_storm")
            .unwrap();
        assert!(!mars.passed);
        // beta_0 = 1 - alpha_0 = 0 under this schedule, so the first
        // corrupted combination is the k = 1 momentum update
        assert_eq!(mars.first_divergence, Some(1));
    }

    #[test]
    fn verification_report_green() {
        let report = run_verification(3).unwrap();
        assert!(report.passed, "{:?}", report.sections);
    }

    #[test]
    fn quadratic_divergence_guard() {
        // feeding a non-finite iterate into norm() errors rather than NaN-ing
        let m = ndarray::array![f64::NAN];
        assert!(matches!(
            norm(NormKind::Euclidean, &m),
            Err(Error::NonFinite { .. })
        ));
    }
}
