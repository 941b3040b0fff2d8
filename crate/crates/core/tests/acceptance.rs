//! One line per acceptance criterion. The test fails if any criterion does.

mod common;

use std::time::{Duration, Instant};

use aosnet::config::{ExperimentConfig, ResourceScenario};
use aosnet::dynamics::aos_update;
use aosnet::experiment::{run_experiment, ExperimentOutput};
use aosnet::forecast::fit_gmm_traced;
use aosnet::schedulers::build_scheduler;
use aosnet::simulator::{run_episode, run_with, EpisodeResult};
use aosnet::solvers::{brute_force_oracle, solve_exact, SolveOptions, SolveStatus};
use aosnet::{build_model, Environment};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

const HEURISTICS: [&str; 4] = ["rhcop", "greedy", "gmmpre", "random"];

struct Verdict {
    id: usize,
    pass: bool,
    detail: String,
}

#[derive(Default)]
struct Ledger {
    verdicts: Vec<Verdict>,
    /// Every episode played for criteria 1, 2, 3 and 7, with its config.
    episodes: Vec<(ExperimentConfig, EpisodeResult)>,
}

impl Ledger {
    fn record(&mut self, id: usize, pass: bool, detail: String) {
        println!("criterion {id}: {} | {detail}", if pass { "PASS" } else { "FAIL" });
        self.verdicts.push(Verdict { id, pass, detail });
    }

    fn keep(&mut self, config: &ExperimentConfig, out: &ExperimentOutput) {
        for e in &out.episodes {
            let mut c = config.clone();
            if let (Some(axis), Some(v)) = (&out.axis, e.axis_value) {
                c = c
                    .with_axis_value(aosnet::config::SweepAxis::parse(axis).unwrap(), v)
                    .unwrap();
            }
            self.episodes.push((c, e.result.clone()));
        }
    }
}

fn sweep(base: &ExperimentConfig, schedulers: &[&str], runs: usize) -> ExperimentConfig {
    let mut c = base.clone();
    c.experiment.schedulers = schedulers.iter().map(|s| s.to_string()).collect();
    c.experiment.runs = runs;
    c.experiment.seed = 1;
    c
}

fn mean_of(out: &ExperimentOutput, scheduler: &str, axis_value: Option<f64>) -> Option<(f64, usize)> {
    out.summary
        .iter()
        .find(|r| r.scheduler == scheduler && r.axis_value == axis_value)
        .map(|r| (r.mean, r.n))
}

fn fmt_secs(d: Duration) -> String {
    format!("{:.1}s", d.as_secs_f64())
}

fn criterion_1(ledger: &mut Ledger) {
    let mut base = ExperimentConfig::default();
    base.network.gateways = 1;
    let heur = sweep(&base, &HEURISTICS, 50);
    let start = Instant::now();
    let h = run_experiment(&heur).unwrap();
    let t_heur = start.elapsed();
    let exact = sweep(&base, &["milp"], 50);
    let start = Instant::now();
    let m = run_experiment(&exact).unwrap();
    let t_all = t_heur + start.elapsed();
    ledger.keep(&heur, &h);
    ledger.keep(&exact, &m);

    let mut parts = Vec::new();
    let mut ok = m.skipped.is_empty();
    for s in ["milp", "rhcop", "greedy", "gmmpre", "random"] {
        let out = if s == "milp" { &m } else { &h };
        match mean_of(out, s, None) {
            Some((mean, n)) => {
                ok &= n == 50 && (mean - 6.5).abs() <= 0.01;
                parts.push(format!("{s}={mean:.3}(n={n})"));
            }
            None => {
                ok = false;
                parts.push(format!("{s}=none"));
            }
        }
    }
    ok &= t_heur <= Duration::from_secs(120) && t_all <= Duration::from_secs(1800);
    ledger.record(
        1,
        ok,
        format!(
            "|V_G|=1, |R|=3, 50 seeds: {}; runtime {} without milp, {} with milp ({} milp skipped)",
            parts.join(" "),
            fmt_secs(t_heur),
            fmt_secs(t_all),
            m.skipped.len()
        ),
    );
}

fn criterion_2(ledger: &mut Ledger) {
    let mut base = ExperimentConfig::default();
    base.energy.scenario = ResourceScenario::Both;
    let heur = sweep(&base, &HEURISTICS, 50);
    let h = run_experiment(&heur).unwrap();
    // the full-horizon model at |R|=3 exceeds the default variable cap
    let mut reduced = base.clone();
    reduced.workload.requests = 2;
    let exact = sweep(&reduced, &["milp"], 50);
    let m = run_experiment(&exact).unwrap();
    ledger.keep(&heur, &h);
    ledger.keep(&exact, &m);

    let mut ok = m.skipped.is_empty();
    let mut parts = Vec::new();
    for s in ["milp", "rhcop", "greedy", "gmmpre", "random"] {
        let out = if s == "milp" { &m } else { &h };
        let objs: Vec<f64> = out
            .raw
            .iter()
            .filter(|r| r.scheduler == s)
            .map(|r| r.objective)
            .collect();
        let at_one = objs.iter().filter(|&&x| x == 1.0).count();
        let worst = objs.iter().cloned().fold(f64::NAN, f64::max);
        ok &= !objs.is_empty() && at_one == objs.len();
        parts.push(format!("{s}: {at_one}/{} at 1.00 (max {worst:.3})", objs.len()));
    }
    ledger.record(
        2,
        ok,
        format!(
            "unlimited gateways+servers, 50 seeds (milp at |R|=2, {} skipped): {}",
            m.skipped.len(),
            parts.join("; ")
        ),
    );
}

fn criterion_3(ledger: &mut Ledger) {
    let mut base = ExperimentConfig::default();
    base.scheduling.milp_variable_cap = 10_000;
    base.scheduling.milp_time_limit_s = 60.0;
    let runs = 30;
    let c = sweep(&base, &["rhcop", "greedy", "gmmpre", "random"], runs);
    let h = run_experiment(&c).unwrap();
    ledger.keep(&c, &h);

    let solved: Vec<Option<EpisodeResult>> = (0..runs)
        .into_par_iter()
        .map(|run| {
            let env = Environment::generate(&base, aosnet::experiment::episode_seed(1, run)).unwrap();
            let mut milp = aosnet::schedulers::OfflineMilp::new(&env).unwrap();
            milp.proven_optimal().then(|| run_with(&env, &mut milp).unwrap())
        })
        .collect();
    let mut proven = 0;
    let mut per_seed_ok = true;
    let mut breaches = Vec::new();
    for res in solved.into_iter().flatten() {
        proven += 1;
        for s in HEURISTICS {
            let other = h
                .raw
                .iter()
                .find(|r| r.scheduler == s && r.seed == res.seed)
                .unwrap()
                .objective;
            if res.objective > other + 1e-9 {
                per_seed_ok = false;
                breaches.push(format!("seed {}: milp {} > {s} {other}", res.seed, res.objective));
            }
        }
        ledger.episodes.push((base.clone(), res));
    }
    let mean = |s: &str| mean_of(&h, s, None).unwrap().0;
    let (rh, gr, ra, gm) = (mean("rhcop"), mean("greedy"), mean("random"), mean("gmmpre"));
    let order_ok = rh <= gr && gr <= ra;
    ledger.record(
        3,
        per_seed_ok && order_ok && proven > 0,
        format!(
            "defaults (3 gateways, 3 servers, |R|=3, |T|=12), {runs} seeds: milp proven on {proven}/{runs}, \
             milp <= every heuristic on all of them: {per_seed_ok}{}; means rhcop={rh:.3} greedy={gr:.3} \
             random={ra:.3} (gmmpre={gm:.3}); rhcop<=greedy: {}, greedy<=random: {}",
            if breaches.is_empty() { String::new() } else { format!(" ({})", breaches.join(", ")) },
            rh <= gr,
            gr <= ra
        ),
    );
}

fn criterion_4(ledger: &mut Ledger) {
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for seed in 0..200 {
        let tiny = common::tiny_instance(seed, 24);
        let snap = tiny.snapshot();
        let model = build_model(&snap).unwrap();
        let exact = solve_exact(&model, &snap, &SolveOptions::default()).unwrap();
        let brute = brute_force_oracle(&snap).unwrap();
        match (exact.status, exact.objective, brute.objective) {
            (SolveStatus::Optimal, Some(a), Some(b)) => worst = worst.max((a - b).abs()),
            _ => ok = false,
        }
    }
    ok &= worst <= 1e-6;
    ledger.record(4, ok, format!("200 tiny instances (<=24 binaries), largest gap {worst:e}"));
}

fn criterion_5(ledger: &mut Ledger) {
    let mut bad = Vec::new();
    for z in [0u32, 1] {
        for prev in 1..=12u32 {
            let ((lo, hi), a) = common::pinned_aos(12.0, f64::from(z), f64::from(prev));
            let unique = lo == hi && lo == f64::from(z * prev);
            if !unique || a != f64::from(aos_update(prev, z == 1)) {
                bad.push(format!("(z={z}, a_prev={prev})"));
            }
        }
    }
    ledger.record(
        5,
        bad.is_empty(),
        format!("24 (z, a_prev) pairs with psi=12, non-unique or wrong: {}", bad.len()),
    );
}

fn criterion_6(ledger: &mut Ledger) {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let failures: Vec<String> = (0..50)
        .filter_map(|_| common::audit_random_dimensions(&mut rng).err())
        .collect();
    ledger.record(
        6,
        failures.is_empty(),
        format!("50 random dimension tuples, mismatches: {} {}", failures.len(), failures.join("; ")),
    );
}

fn criterion_7(ledger: &mut Ledger) {
    let tol = 0.1;
    let axes: [(&str, [f64; 3], bool); 3] = [
        ("gateways", [1.0, 3.0, 5.0], false),
        ("panel_side", [20.0, 60.0, 100.0], false),
        ("requests", [1.0, 3.0, 5.0], true),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (axis, values, increasing) in axes {
        let mut c = sweep(&ExperimentConfig::default(), &["greedy", "rhcop"], 30);
        c.experiment.axis = Some(axis.into());
        c.experiment.values = values.to_vec();
        let out = run_experiment(&c).unwrap();
        ledger.keep(&c, &out);
        for s in ["greedy", "rhcop"] {
            let means: Vec<f64> = values.iter().map(|&v| mean_of(&out, s, Some(v)).unwrap().0).collect();
            let holds = means.windows(2).all(|w| {
                if increasing {
                    w[1] >= w[0] - tol
                } else {
                    w[1] <= w[0] + tol
                }
            });
            ok &= holds;
            parts.push(format!(
                "{s} over {axis} {}: [{}]{}",
                if increasing { "non-decreasing" } else { "non-increasing" },
                means.iter().map(|m| format!("{m:.3}")).collect::<Vec<_>>().join(", "),
                if holds { "" } else { " BROKEN" }
            ));
        }
    }
    ledger.record(7, ok, format!("30 seeds, tolerance {tol}: {}", parts.join("; ")));
}

fn criterion_8(ledger: &mut Ledger) {
    let total = ledger.episodes.len();
    let mut violations = 0;
    let mut rejected = 0;
    for (_, r) in &ledger.episodes {
        violations += r.invariant_violations.len();
        rejected += r.rejected;
    }
    // replay one episode per distinct (config, scheduler) point
    let mut replayed = 0;
    let mut mismatched = 0;
    let mut seen: Vec<(&ExperimentConfig, &str)> = Vec::new();
    for (c, r) in &ledger.episodes {
        if seen.iter().any(|(sc, ss)| *sc == c && *ss == r.scheduler) {
            continue;
        }
        seen.push((c, &r.scheduler));
        let again = run_episode(c, &r.scheduler, r.seed).unwrap();
        replayed += 1;
        if &again != r {
            mismatched += 1;
        }
    }
    let ok = total > 0 && violations == 0 && rejected == 0 && mismatched == 0;
    ledger.record(
        8,
        ok,
        format!(
            "{total} episodes from criteria 1-3 and 7: {violations} invariant violations, {rejected} rejected \
             decisions; {replayed} replays, {mismatched} not bit-identical"
        ),
    );
}

fn criterion_9(ledger: &mut Ledger) {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let a = Normal::new(0.0, 1.0).unwrap();
    let b = Normal::new(10.0, 1.0).unwrap();
    let samples: Vec<f64> = (0..10_000)
        .map(|i| if i % 2 == 0 { a.sample(&mut rng) } else { b.sample(&mut rng) })
        .collect();
    let report = fit_gmm_traced(&samples, 2, 500, 1e-10).unwrap();
    let mut means: Vec<f64> = report.gmm.components.iter().map(|c| c.mean).collect();
    means.sort_by(f64::total_cmp);
    let means_ok = (means[0] - 0.0).abs() < 0.2 && (means[1] - 10.0).abs() < 0.2;
    let analytic = 5.0;
    let predicted = report.gmm.predict_mean();
    let mean_ok = (predicted - analytic).abs() / analytic < 0.01;
    let drops = report
        .log_likelihood
        .windows(2)
        .filter(|w| w[1] < w[0] - 1e-12)
        .count();
    ledger.record(
        9,
        means_ok && mean_ok && drops == 0,
        format!(
            "10^4 samples of 0.5 N(0,1) + 0.5 N(10,1): means [{:.3}, {:.3}], predict_mean {predicted:.4} \
             vs {analytic}, {} EM iterations with {drops} likelihood decreases",
            means[0], means[1], report.iterations
        ),
    );
}

fn criterion_10(ledger: &mut Ledger) {
    let sizes = [1usize, 3, 5, 7, 9];
    let episodes = 40;
    let mut times = Vec::new();
    for &r in &sizes {
        let mut c = ExperimentConfig::default();
        c.workload.requests = r;
        c.scheduling.training_slots = 10;
        let envs: Vec<Environment> = (0..episodes).map(|s| Environment::generate(&c, s as u64).unwrap()).collect();
        let mut best = Duration::MAX;
        for _ in 0..5 {
            let start = Instant::now();
            for env in &envs {
                let mut p = build_scheduler("greedy", env).unwrap();
                std::hint::black_box(run_with(env, p.as_mut()).unwrap());
            }
            best = best.min(start.elapsed());
        }
        times.push(best.as_secs_f64() / episodes as f64);
    }
    // least-squares exponent of time against |R|
    let xs: Vec<f64> = sizes.iter().map(|&r| (r as f64).ln()).collect();
    let ys: Vec<f64> = times.iter().map(|t| t.ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / 5.0, ys.iter().sum::<f64>() / 5.0);
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    let ratio = times[4] / times[0];
    ledger.record(
        10,
        slope <= 2.0 && ratio <= 81.0,
        format!(
            "greedy episode time over |R| {sizes:?}: [{}] ms; log-log slope {slope:.2}, t(9)/t(1) {ratio:.1} (quadratic bound 81)",
            times.iter().map(|t| format!("{:.3}", t * 1e3)).collect::<Vec<_>>().join(", ")
        ),
    );
}

#[test]
fn acceptance_criteria() {
    let mut ledger = Ledger::default();
    criterion_1(&mut ledger);
    criterion_2(&mut ledger);
    criterion_3(&mut ledger);
    criterion_4(&mut ledger);
    criterion_5(&mut ledger);
    criterion_6(&mut ledger);
    criterion_7(&mut ledger);
    criterion_8(&mut ledger);
    criterion_9(&mut ledger);
    criterion_10(&mut ledger);
    let failed: Vec<String> = ledger
        .verdicts
        .iter()
        .filter(|v| !v.pass)
        .map(|v| format!("criterion {}: {}", v.id, v.detail))
        .collect();
    assert!(failed.is_empty(), "failed criteria:\n{}", failed.join("\n"));
}
