//! Offline stepsize sweep used to pin the benchmark constants.
//!
//! Prints mean final running minima per (variant, eta0), the batch-size
//! study for constant-beta SOM-V2, and the horizon study for the theorem
//! schedules. Not part of the test suite; run with
//! `cargo run --release --example sweep`.

use lmopt::momentum::{MarsAnchor, VariantKind};
use lmopt::norms::{NormEquivConstants, NormKind};
use lmopt::runner::{run_on, DataSource, ProblemSpec, RunConfig};
use lmopt::schedules::{BetaRule, Schedule, ScheduleKind, SmoothnessConfig};

const SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

fn base_config(variant: VariantKind, schedule: Schedule, seed: u64) -> RunConfig {
    RunConfig {
        problem: ProblemSpec::Logreg {
            data: DataSource::Synthetic {
                n: 1000,
                d: 60,
                label_noise: 0.15,
                data_seed: 2024,
            },
            lambda: 0.01,
        },
        norm: NormKind::Euclidean,
        variant,
        mars_anchor: MarsAnchor::New,
        schedule,
        batch_size: 16,
        iters: 20000,
        seed,
        eval_every: 500,
        momentum_init: Default::default(),
        timing: false,
        full_batch: false,
    }
}

fn mean_finals(problem: &impl lmopt::problems::Problem, mk: impl Fn(u64) -> RunConfig) -> (f64, f64) {
    let mut loss = 0.0;
    let mut grad = 0.0;
    for &seed in &SEEDS {
        let out = run_on(problem, &mk(seed)).expect("run failed");
        if out.diverged.is_some() {
            return (f64::INFINITY, f64::INFINITY);
        }
        loss += out.trace.final_runmin_loss().unwrap();
        grad += out.trace.final_runmin_grad().unwrap();
    }
    (loss / SEEDS.len() as f64, grad / SEEDS.len() as f64)
}

fn main() {
    let spec = base_config(
        VariantKind::Polyak,
        Schedule::experimental(ScheduleKind::PolyakExp { eta0: 0.1 }, BetaRule::OneMinusAlpha),
        0,
    );
    let problem = spec.problem.build().expect("synthetic dataset");
    let grid = [0.001, 0.01, 0.1, 1.0];

    println!("== eta0 sweep (mean over {} seeds, final runmin) ==", SEEDS.len());
    for (name, variant) in [
        ("polyak", VariantKind::Polyak),
        ("som-v1", VariantKind::SomV1),
        ("som-v2", VariantKind::SomV2),
    ] {
        for eta0 in grid {
            let kind = match variant {
                VariantKind::Polyak => ScheduleKind::PolyakExp { eta0 },
                _ => ScheduleKind::SomExp { eta0 },
            };
            let sched = Schedule::experimental(kind, BetaRule::OneMinusAlpha);
            let (l, g) = mean_finals(&problem, |s| base_config(variant, sched, s));
            println!("{name:<8} eta0={eta0:<7} loss={l:.6e} grad={g:.6e}");
        }
    }

    println!("== batch-size study: som-v2, beta=0.5 ==");
    for eta0 in [0.1, 0.3, 1.0] {
        for b in [1usize, 16, 32] {
            let sched =
                Schedule::experimental(ScheduleKind::SomExp { eta0 }, BetaRule::Constant(0.5));
            let (l, g) = mean_finals(&problem, |s| {
                let mut c = base_config(VariantKind::SomV2, sched, s);
                c.batch_size = b;
                c
            });
            println!("eta0={eta0:<6} B={b:<3} loss={l:.6e} grad={g:.6e}");
        }
    }

    println!("== theorem schedules, full batch, horizon study ==");
    let smooth = |l1: f64, m1: f64, cal_l1: f64| SmoothnessConfig {
        l0: 0.5,
        l1,
        m0: 0.1,
        m1,
        cal_l0: 0.0,
        cal_l1,
        sigma_g: 0.0,
        sigma_h: 0.0,
        norm_equiv: NormEquivConstants::exact_for(NormKind::Euclidean, 60),
    };
    for c in [0.05, 0.2, 0.8, 3.2, 12.8] {
        println!("-- constants l1 = m1 = cal_l1 = {c} --");
        for (name, variant, kind) in [
            ("som-v1", VariantKind::SomV1, ScheduleKind::TheoremSomV1),
            ("som-v2", VariantKind::SomV2, ScheduleKind::TheoremSomV2),
            ("igt", VariantKind::Igt, ScheduleKind::TheoremIgt),
            ("mvr", VariantKind::Mars, ScheduleKind::TheoremMvr),
        ] {
            let horizons = [500usize, 2000, 8000];
            let mut pts = Vec::new();
            for &horizon in &horizons {
                let sched = Schedule::theorem(kind, horizon, smooth(c, c, c), BetaRule::OneMinusAlpha);
                let mut cfg = base_config(variant, sched, 1);
                cfg.iters = horizon;
                cfg.full_batch = true;
                cfg.eval_every = 25;
                let out = run_on(&problem, &cfg).expect("run failed");
                assert!(out.diverged.is_none(), "{name} K={horizon} diverged");
                pts.push(((horizon as f64).ln(), out.trace.final_runmin_grad().unwrap()));
            }
            // least-squares slope of ln(min grad) vs ln K
            let n = pts.len() as f64;
            let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
            let my = pts.iter().map(|p| p.1.ln()).sum::<f64>() / n;
            let slope = pts.iter().map(|p| (p.0 - mx) * (p.1.ln() - my)).sum::<f64>()
                / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
            let gs: Vec<String> = pts.iter().map(|p| format!("{:.3e}", p.1)).collect();
            println!("{name:<8} grads=[{}] slope={slope:.3}", gs.join(", "));
        }
    }
}
