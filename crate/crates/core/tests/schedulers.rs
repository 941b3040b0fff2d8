use aosnet::config::ExperimentConfig;
use aosnet::dynamics::{validate_decision, SlotContext};
use aosnet::energy::device_upload_energy;
use aosnet::environment::scheduler_rng;
use aosnet::schedulers::{
    build_scheduler, greedy_plan, GmmForecaster, GmmPre, Observation, OfflineMilp, RandomPolicy, Rhcop,
    ScheduleDecision, Scheduler, TraceForecaster,
};
use aosnet::simulator::run_with;
use aosnet::solvers::{solve_exact, SolveOptions, SolveStatus};
use aosnet::{build_model, Environment, Result};

fn small_config() -> ExperimentConfig {
    let mut c = ExperimentConfig::default();
    c.network.gateways = 2;
    c.network.servers = 2;
    c.network.devices_per_gateway = 1;
    c.workload.requests = 2;
    c.workload.vnfs_per_dag = 3;
    c.scheduling.slots = 5;
    c.scheduling.training_slots = 100;
    c.energy.gateway_battery = 40.0;
    c.energy.server_battery = 40.0;
    c
}

fn small(seed: u64) -> Environment {
    Environment::generate(&small_config(), seed).unwrap()
}

struct Fixture {
    env: Environment,
    levels: Vec<f64>,
    costs: Vec<f64>,
    ages: Vec<u32>,
    accumulated: Vec<u64>,
}

impl Fixture {
    fn new(env: Environment, ages: Vec<u32>) -> Self {
        let costs = (0..env.network.devices.len())
            .map(|d| device_upload_energy(&env.network, &env.requests, d, env.gains[0][d], 150e-9, 1.0))
            .collect();
        let levels = env.initial_levels.clone();
        let accumulated = vec![0; env.requests.len()];
        Self {
            env,
            levels,
            costs,
            ages,
            accumulated,
        }
    }

    fn observation(&self) -> Observation<'_> {
        Observation {
            slot: 0,
            horizon: self.env.horizon(),
            network: &self.env.network,
            requests: &self.env.requests,
            levels: &self.levels,
            previous_levels: &self.levels,
            arrivals: &self.env.arrivals[0],
            gains: &self.env.gains[0],
            device_costs: &self.costs,
            ages: &self.ages,
            accumulated_age: &self.accumulated,
            sense_energy_per_bit: 150e-9,
            slot_duration: 1.0,
        }
    }

    fn plan(&self) -> ScheduleDecision {
        greedy_plan(&self.env.network, &self.env.requests, &self.levels, &self.costs, &self.ages, 1.0)
    }

    fn valid(&self, d: &ScheduleDecision) -> bool {
        let ctx = SlotContext {
            network: &self.env.network,
            requests: &self.env.requests,
            levels: &self.levels,
            device_costs: &self.costs,
            slot_duration: 1.0,
        };
        validate_decision(&ctx, d).is_empty()
    }
}

/// One gateway, one server, two single-collector requests.
fn two_requests() -> Environment {
    let mut c = small_config();
    c.network.gateways = 1;
    c.network.servers = 1;
    c.workload.vnfs_per_dag = 2;
    c.energy.gateway_battery = 1e4;
    c.energy.server_battery = 1e4;
    Environment::generate(&c, 8).unwrap()
}

#[test]
fn greedy_serves_everything_when_resources_allow() {
    let f = Fixture::new(two_requests(), vec![3, 3]);
    let plan = f.plan();
    assert_eq!(plan.served, vec![true, true]);
    assert!(f.valid(&plan));
}

#[test]
fn greedy_gives_scarce_energy_to_the_oldest_request() {
    for (ages, winner) in [(vec![1, 5], 1), (vec![5, 1], 0), (vec![4, 4], 0)] {
        let mut f = Fixture::new(two_requests(), ages.clone());
        let gw = f.env.network.gateway_node(0);
        let per_mc = f.env.network.caps(gw).energy_per_megacycle();
        let need: Vec<f64> = f
            .env
            .requests
            .iter()
            .map(|r| r.collectors.iter().map(|c| c.compute).sum::<f64>() * per_mc)
            .collect();
        let low = need[0].min(need[1]);
        f.levels[gw] = need[winner] + 0.5 * low;
        let plan = f.plan();
        let mut expected = vec![false, false];
        expected[winner] = true;
        assert_eq!(plan.served, expected, "ages {ages:?} need {need:?}");
        assert!(f.valid(&plan));
    }
}

#[test]
fn greedy_serves_nothing_on_an_empty_gateway() {
    let mut f = Fixture::new(two_requests(), vec![2, 2]);
    let gw = f.env.network.gateway_node(0);
    f.levels[gw] = 0.0;
    let plan = f.plan();
    assert_eq!(plan, ScheduleDecision::empty(&f.env.network, &f.env.requests));
}

#[test]
fn greedy_plans_always_validate() {
    for seed in 0..40 {
        let env = small(seed);
        let ages: Vec<u32> = (0..env.requests.len() as u32).map(|r| r + seed as u32 % 3).collect();
        let mut f = Fixture::new(env, ages);
        for (n, l) in f.levels.iter_mut().enumerate() {
            *l *= ((seed as usize * 7 + n * 3) % 10) as f64 / 9.0;
        }
        let plan = f.plan();
        assert!(f.valid(&plan), "seed {seed}");
    }
}

#[test]
fn gmmpre_believes_previous_level_plus_mean_forecast() {
    let env = small(4);
    let forecaster = GmmForecaster::train(&env).unwrap();
    let means = forecaster.mean_arrivals().to_vec();
    let policy = GmmPre::new(forecaster, 8);
    let f = Fixture::new(env, vec![1, 1]);
    let believed = policy.believed_levels(&f.observation());
    for (n, b) in believed.iter().enumerate() {
        let cap = f.env.network.caps(n).battery_capacity;
        let want = (f.levels[n] + means[n]).min(cap);
        assert!((b - want).abs() < 1e-9 * cap.max(1.0), "node {n}: {b} vs {want}");
    }
}

#[test]
fn gmmpre_vetoes_plans_the_true_levels_cannot_pay_for() {
    let env = two_requests();
    let forecaster = GmmForecaster::train(&env).unwrap();
    let mut policy = GmmPre::new(forecaster, 8);
    let mut f = Fixture::new(env, vec![2, 2]);
    let gw = f.env.network.gateway_node(0);
    let previous = f.levels.clone();
    f.levels[gw] = 0.0;
    let obs = Observation {
        previous_levels: &previous,
        ..f.observation()
    };
    let d = policy.decide(&obs).unwrap();
    assert_eq!(d, ScheduleDecision::empty(&f.env.network, &f.env.requests));
    assert_eq!(policy.report().vetoes, 1);
}

#[test]
fn random_subset_sizes_are_uniform() {
    let mut p = RandomPolicy::new(scheduler_rng(9));
    let draws = 40_000;
    let mut by_size = [0usize; 4];
    let mut singles = [0usize; 3];
    for _ in 0..draws {
        let s = p.draw_subset(3);
        let k = s.iter().filter(|b| **b).count();
        by_size[k] += 1;
        if k == 1 {
            singles[s.iter().position(|b| *b).unwrap()] += 1;
        }
    }
    for n in by_size {
        assert!((n as f64 / draws as f64 - 0.25).abs() < 0.01, "{by_size:?}");
    }
    let ones = by_size[1] as f64;
    for n in singles {
        assert!((n as f64 / ones - 1.0 / 3.0).abs() < 0.02, "{singles:?}");
    }
}

/// Plays `inner` and checks every decision against `check`.
struct Checked<S, F> {
    inner: S,
    check: F,
}

impl<S: Scheduler, F: FnMut(&Observation<'_>, &ScheduleDecision) + Send> Scheduler for Checked<S, F> {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn decide(&mut self, obs: &Observation<'_>) -> Result<ScheduleDecision> {
        let d = self.inner.decide(obs)?;
        (self.check)(obs, &d);
        Ok(d)
    }

    fn report(&self) -> aosnet::schedulers::SchedulerReport {
        self.inner.report()
    }
}

#[test]
fn random_serves_exactly_its_draw_or_nothing() {
    for seed in 0..10 {
        let env = small(seed);
        let mut twin = RandomPolicy::new(scheduler_rng(seed));
        let mut policy = Checked {
            inner: RandomPolicy::new(scheduler_rng(seed)),
            check: |obs: &Observation<'_>, d: &ScheduleDecision| {
                let drawn = twin.draw_subset(obs.requests.len());
                if d.served_count() > 0 {
                    assert_eq!(d.served, drawn, "seed {seed} slot {}", obs.slot);
                }
            },
        };
        let res = run_with(&env, &mut policy).unwrap();
        assert_eq!(res.rejected, 0);
    }
}

#[test]
fn single_slot_window_matches_the_one_slot_solve() {
    for seed in 0..8 {
        let env = small(seed);
        let mut policy = Checked {
            inner: Rhcop::new(Box::new(TraceForecaster::of(&env)), 1, SolveOptions::default(), None),
            check: |obs: &Observation<'_>, d: &ScheduleDecision| {
                let snap = obs.slot_snapshot();
                let model = build_model(&snap).unwrap();
                let sol = solve_exact(&model, &snap, &SolveOptions::default()).unwrap();
                assert_eq!(sol.status, SolveStatus::Optimal);
                assert_eq!(&sol.schedule[0], d, "seed {seed} slot {}", obs.slot);
            },
        };
        let res = run_with(&env, &mut policy).unwrap();
        assert_eq!(res.report.fallbacks, 0);
    }
}

#[test]
fn full_window_on_the_true_trace_matches_offline_optimum() {
    let mut compared = 0;
    for seed in 0..10 {
        let env = small(seed);
        let offline = OfflineMilp::new(&env).unwrap();
        if !offline.proven_optimal() {
            continue;
        }
        let best = offline.solution.objective.unwrap();
        let mut milp = offline;
        let replayed = run_with(&env, &mut milp).unwrap();
        assert!((replayed.objective - best).abs() < 1e-9, "seed {seed}");
        let mut rhc = Rhcop::new(Box::new(TraceForecaster::of(&env)), env.horizon(), SolveOptions::default(), None);
        let res = run_with(&env, &mut rhc).unwrap();
        assert_eq!(res.report.unproven, 0, "seed {seed}");
        assert!((res.objective - best).abs() < 1e-9, "seed {seed}: rhc {} offline {best}", res.objective);
        compared += 1;
    }
    assert!(compared >= 8, "only {compared} offline solves finished");
}

#[test]
fn offline_optimum_bounds_every_policy() {
    for seed in 0..10 {
        let env = small(seed);
        let mut milp = OfflineMilp::new(&env).unwrap();
        if !milp.proven_optimal() {
            continue;
        }
        let best = run_with(&env, &mut milp).unwrap().objective;
        for name in ["rhcop", "greedy", "gmmpre", "random", "idle"] {
            let mut p = build_scheduler(name, &env).unwrap();
            let obj = run_with(&env, p.as_mut()).unwrap().objective;
            assert!(best <= obj + 1e-9, "seed {seed}: milp {best} > {name} {obj}");
        }
    }
}

#[test]
fn idle_sits_on_the_saturation_floor() {
    let env = Environment::generate(&ExperimentConfig::default(), 3).unwrap();
    let mut p = build_scheduler("idle", &env).unwrap();
    let res = run_with(&env, p.as_mut()).unwrap();
    assert!((res.objective - 6.5).abs() < 1e-12);
}

#[test]
fn unknown_scheduler_is_an_error() {
    let env = small(0);
    assert!(build_scheduler("oracle", &env).is_err());
}

#[test]
fn milp_refuses_oversized_models() {
    let mut c = small_config();
    c.scheduling.milp_variable_cap = 10;
    let env = Environment::generate(&c, 0).unwrap();
    assert!(matches!(
        build_scheduler("milp", &env),
        Err(aosnet::Error::ModelTooLarge { cap: 10, .. })
    ));
}
