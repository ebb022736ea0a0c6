//! Fast self-checks run by the `validate` subcommand.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::channel::{draw_initial_channel, evolve_channel, simulate_ergodic_rate, LinkSimConfig};
use crate::error::Result;
use crate::grouping::group_scenario;
use crate::netgen::{bessel_j0, generate_scenario, ScenarioConfig};
use crate::ratebound::{
    asymptotic_reference_rate, improvement_condition, sum_rate_lb, worst_case_outdated_rate, AsymptoticInputs,
};
use crate::scheduler::{
    brute_force_schedule, marginal_gain, submod_max_cardinality, ApproxConfig, ScheduleVector, SchedulingInstance,
};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn outcome(name: &'static str, passed: bool, detail: String) -> CheckOutcome {
    CheckOutcome { name, passed, detail }
}

fn random_instance(seed: u64, groups: usize, budget: usize) -> Result<SchedulingInstance> {
    let cfg = ScenarioConfig {
        users_per_cell: groups,
        rng_seed: seed,
        ..ScenarioConfig::default()
    };
    let scenario = generate_scenario(&cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(7);
    let mut g = group_scenario(&scenario, 3, &mut rng)?;
    let delays: Vec<u32> = (0..groups).map(|_| rng.random_range(0..=3)).collect();
    g.set_delays(&delays)?;
    let weights = (0..groups)
        .map(|_| (0..cfg.num_cells).map(|_| rng.random::<f64>()).collect())
        .collect();
    SchedulingInstance::from_scenario(&scenario, &g, weights, delays, budget, 100)
}

fn bessel_check() -> CheckOutcome {
    const TABLE: [(f64, f64); 5] = [
        (0.0, 1.0),
        (1.0, 0.765_197_686_557_966_6),
        (2.404_825_557_695_773, -6.108_765_448_335_75e-17),
        (5.0, -0.177_596_771_314_338_3),
        (10.0, -0.245_935_764_451_348_3),
    ];
    let worst = TABLE
        .iter()
        .map(|&(x, want)| (bessel_j0(x) - want).abs())
        .fold(0.0, f64::max);
    outcome("bessel_j0 reference values", worst <= 1e-10, format!("max error {worst:.2e}"))
}

fn autocorrelation_check(seed: u64) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (rho, d, n) = (0.9f64, 2u32, 20_000usize);
    let mut acc = 0.0;
    for _ in 0..n {
        let h0 = draw_initial_channel(1.0, 1, &mut rng);
        let mut h = h0.clone();
        for _ in 0..d {
            h = evolve_channel(&h, rho, &mut rng);
        }
        acc += (h.0[0] * h0.0[0].conj()).re;
    }
    let est = acc / n as f64;
    let want = rho.powi(d as i32);
    // Var[Re(h_d conj(h_0))] = (1 + want^2) / 2 for unit complex Gaussians
    let sigma = ((1.0 + want * want) / 2.0 / n as f64).sqrt();
    let z = (est - want) / sigma;
    outcome("AR(1) lag autocorrelation", z.abs() <= 4.0, format!("estimate {est:.4}, target {want:.4}, z = {z:.2}"))
}

fn submodularity_check(seed: u64) -> Result<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::INFINITY;
    for i in 0..10 {
        let n = rng.random_range(3..=10);
        let inst = random_instance(seed.wrapping_add(i), n, n)?;
        for _ in 0..20 {
            let cand = rng.random_range(0..n);
            let mut x = ScheduleVector::empty(n);
            let mut z = ScheduleVector::empty(n);
            for g in (0..n).filter(|&g| g != cand) {
                match rng.random_range(0..3) {
                    0 => {}
                    1 => z.0[g] = true,
                    _ => {
                        x.0[g] = true;
                        z.0[g] = true;
                    }
                }
            }
            let slack = marginal_gain(&inst, &x, cand)? - marginal_gain(&inst, &z, cand)?;
            worst = worst.min(slack);
        }
    }
    Ok(outcome("diminishing returns", worst >= -1e-9, format!("worst slack {worst:.3e} over 200 triples")))
}

fn approximation_check(seed: u64) -> Result<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = ApproxConfig::default();
    let mut worst: f64 = 1.0;
    for i in 0..30 {
        let n = rng.random_range(1..=8);
        let budget = rng.random_range(0..=n.min(4));
        let inst = random_instance(seed.wrapping_add(100 + i), n, budget)?;
        let opt = brute_force_schedule(&inst)?.objective;
        let got = submod_max_cardinality(&inst, &cfg)?.objective;
        if opt > 0.0 {
            worst = worst.min(got / opt);
        }
    }
    let floor = 1.0 / (4.0 + cfg.alpha());
    Ok(outcome("approximation guarantee", worst >= floor, format!("worst ratio {worst:.4}, floor {floor:.4}")))
}

fn condition_check(seed: u64) -> Result<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mismatches = 0;
    for _ in 0..500 {
        let cells = rng.random_range(1..=7);
        let slot_symbols = 200;
        let num_groups = rng.random_range(2..slot_symbols);
        let inputs = AsymptoticInputs {
            beta_row: (0..cells).map(|_| rng.random_range(1e-6..1.0)).collect(),
            own_cell: rng.random_range(0..cells),
            rho_min: rng.random_range(0.5..1.0),
            rho_max: 1.0,
            num_groups,
            trained: rng.random_range(0..num_groups),
            slot_symbols,
            delay: rng.random_range(0..6),
        };
        let inputs = AsymptoticInputs {
            rho_max: rng.random_range(inputs.rho_min..=1.0),
            ..inputs
        };
        let holds = improvement_condition(&inputs)?.holds;
        let outdated = worst_case_outdated_rate(&inputs);
        let reference =
            asymptotic_reference_rate(&inputs.beta_row, inputs.own_cell, num_groups, slot_symbols);
        let agrees = if holds {
            outdated >= reference - 1e-9
        } else {
            outdated < reference + 1e-9
        };
        mismatches += usize::from(!agrees);
    }
    Ok(outcome(
        "improvement condition vs rate ordering",
        mismatches == 0,
        format!("{mismatches} disagreements in 500 instances"),
    ))
}

fn bound_check(seed: u64) -> Result<CheckOutcome> {
    let cfg = ScenarioConfig {
        users_per_cell: 4,
        rng_seed: seed,
        ..ScenarioConfig::default()
    };
    let scenario = generate_scenario(&cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut groups = group_scenario(&scenario, 3, &mut rng)?;
    let delays: Vec<u32> = (0..groups.len()).map(|_| rng.random_range(0..=2)).collect();
    groups.set_delays(&delays)?;
    let bound = sum_rate_lb(&scenario, &groups, &delays, 2, 32)?;
    let sim = simulate_ergodic_rate(
        &scenario,
        &groups,
        &delays,
        &LinkSimConfig {
            antennas: 32,
            trained_groups: 2,
            num_drops: 300,
            seed,
            symbols: Default::default(),
        },
    )?;
    let ok = bound
        .per_user
        .iter()
        .filter(|b| b.rate <= sim.user(b.group, b.cell).mean + 3.0 * sim.user(b.group, b.cell).std_err)
        .count();
    let frac = ok as f64 / bound.per_user.len() as f64;
    Ok(outcome("bound below simulation", frac >= 0.99, format!("{ok}/{} users", bound.per_user.len())))
}

/// Runs every self-check; the result lists one outcome per check.
pub fn run_checks(seed: u64) -> Result<Vec<CheckOutcome>> {
    Ok(vec![
        bessel_check(),
        autocorrelation_check(seed),
        submodularity_check(seed)?,
        approximation_check(seed)?,
        condition_check(seed)?,
        bound_check(seed)?,
    ])
}
