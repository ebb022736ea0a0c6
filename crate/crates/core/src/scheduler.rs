//! Training schedule selection: which copilot groups refresh their CSI in
//! the current slot, under a budget of `tau` groups.
//!
//! The objective is `(1 - |Y|/T_s) * sum_{g,l} w_gl log2(1 + SINR_gl)`.
//! Unscheduled groups keep the bound at their current delay. How a
//! scheduled group is credited is set by [`RefreshModel`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grouping::CopilotGroups;
use crate::netgen::Scenario;
use crate::ratebound::{inputs_for, log_rate, refreshed_signal_log_rate, RateBoundInputs};

pub const BRUTE_FORCE_GUARD: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ScheduleVector(pub Vec<bool>);

impl ScheduleVector {
    pub fn empty(groups: usize) -> Self {
        Self(vec![false; groups])
    }

    pub fn from_indices(groups: usize, selected: &[usize]) -> Self {
        let mut y = Self::empty(groups);
        for &g in selected {
            y.0[g] = true;
        }
        y
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn contains(&self, g: usize) -> bool {
        self.0[g]
    }

    pub fn selected(&self) -> Vec<usize> {
        (0..self.0.len()).filter(|&g| self.0[g]).collect()
    }

    fn with(&self, g: usize, on: bool) -> Self {
        let mut y = self.clone();
        y.0[g] = on;
        y
    }
}

/// Rate credited to a group that trains in the current slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RefreshModel {
    /// Only the useful-signal decay is removed; contamination and residual
    /// terms stay at the group's current delay. Refreshing never lowers a
    /// group's rate, which keeps the objective submodular.
    #[default]
    SignalOnly,
    /// The whole bound is re-evaluated at zero delay. Aging can lower
    /// contamination faster than the useful signal, so refreshing may reduce
    /// a rate and the objective is then not submodular in general.
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchedulingInstance {
    pub slot_symbols: usize,
    /// Maximum number of groups trained per slot (tau).
    pub budget: usize,
    pub delays: Vec<u32>,
    /// `weights[g][l]`
    pub weights: Vec<Vec<f64>>,
    /// `users[g][l]`; the `delay` field is ignored in favour of `delays`.
    pub users: Vec<Vec<RateBoundInputs>>,
    #[serde(default)]
    pub refresh: RefreshModel,
}

/// Weighted unit-prefactor rate of one group at its current delay and with
/// fresh CSI.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupTerm {
    pub stale: f64,
    pub fresh: f64,
}

impl GroupTerm {
    pub fn refresh_gain(&self) -> f64 {
        self.fresh - self.stale
    }
}

impl SchedulingInstance {
    pub fn from_scenario(
        scenario: &Scenario,
        groups: &CopilotGroups,
        weights: Vec<Vec<f64>>,
        delays: Vec<u32>,
        budget: usize,
        antennas: usize,
    ) -> Result<Self> {
        let users = (0..groups.len())
            .map(|g| {
                (0..scenario.num_cells())
                    .map(|l| inputs_for(scenario, groups, g, l, delays.get(g).copied().unwrap_or(0), budget, antennas))
                    .collect()
            })
            .collect();
        let instance = Self {
            slot_symbols: scenario.config.slot_symbols,
            budget,
            delays,
            weights,
            users,
            refresh: RefreshModel::default(),
        };
        instance.validate()?;
        Ok(instance)
    }

    pub fn num_groups(&self) -> usize {
        self.delays.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_groups();
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.weights.len() != n || self.users.len() != n {
            return bad(format!(
                "{} delays, {} weight rows, {} user rows",
                n,
                self.weights.len(),
                self.users.len()
            ));
        }
        if self.budget > n || self.budget > self.slot_symbols {
            return bad(format!("budget {} exceeds {} groups or slot length", self.budget, n));
        }
        for (w, u) in self.weights.iter().zip(&self.users) {
            if w.len() != u.len() {
                return bad("weight row and user row lengths differ".into());
            }
            if w.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                return bad("weights must be finite and non-negative".into());
            }
            for inputs in u {
                inputs.validate()?;
            }
        }
        Ok(())
    }

    pub fn terms(&self) -> Vec<GroupTerm> {
        self.users
            .iter()
            .zip(&self.weights)
            .zip(&self.delays)
            .map(|((users, weights), &d)| {
                let weighted = |rate: &dyn Fn(&RateBoundInputs) -> f64| -> f64 {
                    users
                        .iter()
                        .zip(weights)
                        .map(|(u, w)| if *w == 0.0 { 0.0 } else { w * rate(u) })
                        .sum()
                };
                let fresh = match self.refresh {
                    RefreshModel::SignalOnly => weighted(&|u| refreshed_signal_log_rate(&u.with_delay(d))),
                    RefreshModel::Full => weighted(&|u| log_rate(&u.with_delay(0))),
                };
                GroupTerm {
                    stale: weighted(&|u| log_rate(&u.with_delay(d))),
                    fresh,
                }
            })
            .collect()
    }

    fn check(&self, y: &ScheduleVector) -> Result<()> {
        if y.len() != self.num_groups() {
            return Err(Error::InvalidConfig(format!(
                "schedule has {} entries for {} groups",
                y.len(),
                self.num_groups()
            )));
        }
        if y.count() > self.slot_symbols {
            return Err(Error::ConstraintViolation {
                selected: y.count(),
                limit: self.slot_symbols,
            });
        }
        Ok(())
    }
}

/// Precomputed per-group terms; the objective is separable in them.
struct Evaluator {
    terms: Vec<GroupTerm>,
    slot_symbols: f64,
    budget: usize,
}

impl Evaluator {
    fn new(instance: &SchedulingInstance) -> Self {
        Self {
            terms: instance.terms(),
            slot_symbols: instance.slot_symbols as f64,
            budget: instance.budget,
        }
    }

    fn n(&self) -> usize {
        self.terms.len()
    }

    fn value(&self, y: &ScheduleVector) -> f64 {
        let mut total = 0.0;
        let mut count = 0usize;
        for (t, &on) in self.terms.iter().zip(&y.0) {
            if on {
                total += t.fresh;
                count += 1;
            } else {
                total += t.stale;
            }
        }
        (1.0 - count as f64 / self.slot_symbols) * total
    }
}

pub fn objective(instance: &SchedulingInstance, y: &ScheduleVector) -> Result<f64> {
    instance.check(y)?;
    Ok(Evaluator::new(instance).value(y))
}

/// `f(X + n) - f(X)`; negative when training `n` costs more overhead than
/// it recovers.
pub fn marginal_gain(instance: &SchedulingInstance, x: &ScheduleVector, n: usize) -> Result<f64> {
    instance.check(x)?;
    if x.contains(n) {
        return Err(Error::AlreadySelected(n));
    }
    let eval = Evaluator::new(instance);
    let with = x.with(n, true);
    instance.check(&with)?;
    Ok(eval.value(&with) - eval.value(x))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum GreedyMode {
    /// Stop as soon as no candidate has a positive marginal gain.
    #[default]
    StopOnNonPositive,
    /// Always add the best candidate until the budget is used.
    FillBudget,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApproxConfig {
    /// A local-search move must improve the objective by a factor of at
    /// least `1 + eps / N_g^2`.
    pub local_search_eps: f64,
    pub greedy_mode: GreedyMode,
}

impl Default for ApproxConfig {
    fn default() -> Self {
        Self {
            local_search_eps: 0.1,
            greedy_mode: GreedyMode::StopOnNonPositive,
        }
    }
}

impl ApproxConfig {
    /// Guarantee parameter of the composed algorithm: the result is within
    /// a factor `4 + alpha` of the optimum.
    pub fn alpha(&self) -> f64 {
        self.local_search_eps
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.local_search_eps > 0.0 && self.local_search_eps.is_finite()) {
            return Err(Error::InvalidConfig("local_search_eps must be positive".into()));
        }
        Ok(())
    }
}

fn greedy_on(eval: &Evaluator, ground: &[bool], mode: GreedyMode) -> ScheduleVector {
    let mut y = ScheduleVector::empty(eval.n());
    let mut current = eval.value(&y);
    while y.count() < eval.budget {
        let mut best: Option<(usize, f64)> = None;
        for g in (0..eval.n()).filter(|&g| ground[g] && !y.contains(g)) {
            let gain = eval.value(&y.with(g, true)) - current;
            if best.is_none_or(|(_, b)| gain > b) {
                best = Some((g, gain));
            }
        }
        match best {
            Some((g, gain)) if gain > 0.0 || mode == GreedyMode::FillBudget => {
                y.0[g] = true;
                current = eval.value(&y);
            }
            _ => break,
        }
    }
    y
}

fn improves(new: f64, old: f64, factor: f64) -> bool {
    if old <= 0.0 {
        new > old
    } else {
        new >= factor * old && new > old
    }
}

fn local_search_on(eval: &Evaluator, start: ScheduleVector, ground: &[bool], eps: f64) -> ScheduleVector {
    let n = eval.n();
    let factor = 1.0 + eps / (n.max(1) * n.max(1)) as f64;
    let mut y = start;
    let mut current = eval.value(&y);
    'moves: loop {
        let outside: Vec<usize> = (0..n).filter(|&g| ground[g] && !y.contains(g)).collect();
        let inside = y.selected();
        if y.count() < eval.budget {
            for &j in &outside {
                let cand = y.with(j, true);
                let v = eval.value(&cand);
                if improves(v, current, factor) {
                    (y, current) = (cand, v);
                    continue 'moves;
                }
            }
        }
        for &i in &inside {
            let cand = y.with(i, false);
            let v = eval.value(&cand);
            if improves(v, current, factor) {
                (y, current) = (cand, v);
                continue 'moves;
            }
        }
        for &i in &inside {
            for &j in &outside {
                let cand = y.with(i, false).with(j, true);
                let v = eval.value(&cand);
                if improves(v, current, factor) {
                    (y, current) = (cand, v);
                    continue 'moves;
                }
            }
        }
        return y;
    }
}

/// Greedy selection over all groups; ties go to the lowest index.
pub fn greedy_select(instance: &SchedulingInstance, mode: GreedyMode) -> ScheduleVector {
    let eval = Evaluator::new(instance);
    greedy_on(&eval, &vec![true; eval.n()], mode)
}

/// First-improvement local search from `start` with add, delete and swap
/// moves, scanned in that order with ascending indices.
pub fn local_search(instance: &SchedulingInstance, start: ScheduleVector, eps: f64) -> Result<ScheduleVector> {
    instance.check(&start)?;
    if start.count() > instance.budget {
        return Err(Error::ConstraintViolation {
            selected: start.count(),
            limit: instance.budget,
        });
    }
    let eval = Evaluator::new(instance);
    Ok(local_search_on(&eval, start, &vec![true; eval.n()], eps))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub schedule: ScheduleVector,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproxSolution {
    pub schedule: ScheduleVector,
    pub objective: f64,
    pub alpha: f64,
}

/// Greedy, local search from the greedy set, and the same pair on the
/// groups the first greedy pass left out; the best of the four wins.
pub fn submod_max_cardinality(instance: &SchedulingInstance, config: &ApproxConfig) -> Result<ApproxSolution> {
    instance.validate()?;
    config.validate()?;
    let eval = Evaluator::new(instance);
    let all = vec![true; eval.n()];
    let s1 = greedy_on(&eval, &all, config.greedy_mode);
    let s2 = local_search_on(&eval, s1.clone(), &all, config.local_search_eps);
    let rest: Vec<bool> = s1.0.iter().map(|&b| !b).collect();
    let s3 = greedy_on(&eval, &rest, config.greedy_mode);
    let s4 = local_search_on(&eval, s3.clone(), &rest, config.local_search_eps);

    let mut best = (eval.value(&s1), s1);
    for cand in [s2, s3, s4] {
        let v = eval.value(&cand);
        if v > best.0 {
            best = (v, cand);
        }
    }
    Ok(ApproxSolution {
        schedule: best.1,
        objective: best.0,
        alpha: config.alpha(),
    })
}

/// Exhaustive search over every schedule within the budget.
pub fn brute_force_schedule(instance: &SchedulingInstance) -> Result<Solution> {
    let n = instance.num_groups();
    if n > BRUTE_FORCE_GUARD {
        return Err(Error::TooLarge {
            groups: n,
            guard: BRUTE_FORCE_GUARD,
        });
    }
    instance.validate()?;
    let eval = Evaluator::new(instance);
    let mut best = Solution {
        schedule: ScheduleVector::empty(n),
        objective: eval.value(&ScheduleVector::empty(n)),
    };
    for mask in 1u32..(1u32 << n) {
        if mask.count_ones() as usize > instance.budget {
            continue;
        }
        let y = ScheduleVector((0..n).map(|g| mask >> g & 1 == 1).collect());
        let v = eval.value(&y);
        if v > best.objective {
            best = Solution {
                schedule: y,
                objective: v,
            };
        }
    }
    Ok(best)
}

/// Weighted per-user terms of the objective under `y`, prefactor included,
/// as `(group, cell, value)`. They sum to [`objective`].
pub fn user_contributions(instance: &SchedulingInstance, y: &ScheduleVector) -> Result<Vec<(usize, usize, f64)>> {
    instance.check(y)?;
    let prefactor = 1.0 - y.count() as f64 / instance.slot_symbols as f64;
    let mut out = Vec::new();
    for (g, (users, weights)) in instance.users.iter().zip(&instance.weights).enumerate() {
        let d = instance.delays[g];
        for (l, (u, w)) in users.iter().zip(weights).enumerate() {
            let rate = if !y.contains(g) {
                log_rate(&u.with_delay(d))
            } else {
                match instance.refresh {
                    RefreshModel::SignalOnly => refreshed_signal_log_rate(&u.with_delay(d)),
                    RefreshModel::Full => log_rate(&u.with_delay(0)),
                }
            };
            out.push((g, l, prefactor * w * rate));
        }
    }
    Ok(out)
}

/// Trained groups restart at zero delay; the rest age by one slot.
pub fn advance_delays(delays: &[u32], y: &ScheduleVector) -> Vec<u32> {
    delays
        .iter()
        .zip(&y.0)
        .map(|(&d, &on)| if on { 0 } else { d.saturating_add(1) })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grouping::group_scenario;
    use crate::netgen::{generate_scenario, ScenarioConfig};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn user(beta: f64, rho: f64) -> RateBoundInputs {
        RateBoundInputs {
            antennas: 100,
            slot_symbols: 200,
            trained: 1,
            delay: 0,
            own_cell: 0,
            beta_row: vec![beta],
            beta_others: 0.0,
            rho_row: vec![rho],
            pilot_power: 10.0,
            uplink_power: 10.0,
        }
    }

    /// Single-cell instance; group `g` has one user with the given rho.
    fn toy(rhos: &[f64], delays: &[u32], weights: &[f64], budget: usize, t_s: usize) -> SchedulingInstance {
        SchedulingInstance {
            slot_symbols: t_s,
            budget,
            delays: delays.to_vec(),
            weights: weights.iter().map(|&w| vec![w]).collect(),
            users: rhos
                .iter()
                .map(|&r| {
                    let mut u = user(1.0, r);
                    u.slot_symbols = t_s;
                    vec![u]
                })
                .collect(),
            refresh: RefreshModel::Full,
        }
    }

    fn from_seed(seed: u64, groups: usize, budget: usize) -> SchedulingInstance {
        let cfg = ScenarioConfig {
            users_per_cell: groups,
            rng_seed: seed,
            ..ScenarioConfig::default()
        };
        let s = generate_scenario(&cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let g = group_scenario(&s, 3, &mut rng).unwrap();
        let weights = (0..groups).map(|_| (0..7).map(|_| rng.random::<f64>()).collect()).collect();
        let delays = (0..groups).map(|_| rng.random_range(0..=3)).collect();
        SchedulingInstance::from_scenario(&s, &g, weights, delays, budget, 100).unwrap()
    }

    #[test]
    fn objective_examples() {
        let inst = toy(&[0.9, 0.8], &[2, 3], &[1.0, 0.5], 2, 200);
        let base = objective(&inst, &ScheduleVector::empty(2)).unwrap();
        let want = log_rate(&user(1.0, 0.9).with_delay(2)) + 0.5 * log_rate(&user(1.0, 0.8).with_delay(3));
        assert!((base - want).abs() < 1e-12);

        let zero = toy(&[0.9, 0.8], &[2, 3], &[0.0, 0.0], 2, 200);
        for mask in 0..4 {
            let y = ScheduleVector::from_indices(2, &[0, 1].into_iter().filter(|g| mask >> g & 1 == 1).collect::<Vec<_>>());
            assert_eq!(objective(&zero, &y).unwrap(), 0.0);
        }

        let one = toy(&[0.95], &[4], &[1.0], 1, 200);
        let on = objective(&one, &ScheduleVector(vec![true])).unwrap();
        let off = objective(&one, &ScheduleVector(vec![false])).unwrap();
        let r0 = log_rate(&user(1.0, 0.95));
        let rd = log_rate(&user(1.0, 0.95).with_delay(4));
        assert!((on - (1.0 - 1.0 / 200.0) * r0).abs() < 1e-12);
        assert_eq!(on > off, (1.0 - 1.0 / 200.0) * r0 > rd);
        let best = brute_force_schedule(&one).unwrap();
        assert_eq!(best.schedule.contains(0), on > off);
    }

    #[test]
    fn constraint_violation_on_oversized_schedule() {
        let inst = toy(&[0.9, 0.9, 0.9], &[1, 1, 1], &[1.0; 3], 2, 2);
        let y = ScheduleVector(vec![true; 3]);
        assert!(matches!(objective(&inst, &y), Err(Error::ConstraintViolation { .. })));
    }

    #[test]
    fn marginal_gain_examples() {
        let inst = toy(&[0.8, 0.9], &[5, 1], &[1.0, 0.0], 2, 200);
        let gain = marginal_gain(&inst, &ScheduleVector::empty(2), 0).unwrap();
        assert!(gain > 0.0);
        let f0 = objective(&inst, &ScheduleVector::empty(2)).unwrap();
        let f1 = objective(&inst, &ScheduleVector(vec![true, false])).unwrap();
        assert!((gain - (f1 - f0)).abs() < 1e-12);

        let overhead = marginal_gain(&inst, &ScheduleVector::empty(2), 1).unwrap();
        assert!((overhead + f0 / 200.0).abs() < 1e-12);

        assert!(matches!(
            marginal_gain(&inst, &ScheduleVector(vec![true, false]), 0),
            Err(Error::AlreadySelected(0))
        ));
    }

    #[test]
    fn greedy_examples() {
        let zero_budget = toy(&[0.8, 0.9], &[5, 5], &[1.0, 1.0], 0, 200);
        assert_eq!(greedy_select(&zero_budget, GreedyMode::StopOnNonPositive).count(), 0);

        // fresh CSI changes nothing, so every gain is pure overhead
        let static_users = toy(&[1.0, 1.0], &[3, 3], &[1.0, 1.0], 2, 200);
        assert_eq!(greedy_select(&static_users, GreedyMode::StopOnNonPositive).count(), 0);
        assert_eq!(greedy_select(&static_users, GreedyMode::FillBudget), ScheduleVector(vec![true, true]));

        let inst = toy(&[0.9, 0.6, 0.8], &[2, 2, 2], &[1.0, 1.0, 1.0], 2, 200);
        let y = greedy_select(&inst, GreedyMode::StopOnNonPositive);
        assert_eq!(y.selected(), vec![1, 2]);
        let best = brute_force_schedule(&inst).unwrap();
        assert_eq!(best.schedule, y);
    }

    #[test]
    fn greedy_tie_break_lowest_index() {
        let inst = toy(&[0.7, 0.7, 0.7], &[2, 2, 2], &[1.0; 3], 1, 200);
        assert_eq!(greedy_select(&inst, GreedyMode::StopOnNonPositive).selected(), vec![0]);
    }

    #[test]
    fn local_search_examples() {
        let inst = toy(&[0.9, 0.6, 0.8], &[2, 2, 2], &[1.0, 1.0, 1.0], 2, 200);
        let opt = brute_force_schedule(&inst).unwrap().schedule;
        assert_eq!(local_search(&inst, opt.clone(), 0.1).unwrap(), opt);
        let from_empty = local_search(&inst, ScheduleVector::empty(3), 0.1).unwrap();
        assert!(from_empty.count() >= 1);
        assert!(objective(&inst, &from_empty).unwrap() > objective(&inst, &ScheduleVector::empty(3)).unwrap());
    }

    #[test]
    fn single_group_composition_is_exact() {
        for rho in [1.0, 0.99, 0.9, 0.5] {
            let inst = toy(&[rho], &[3], &[1.0], 1, 200);
            let got = submod_max_cardinality(&inst, &ApproxConfig::default()).unwrap();
            let best = brute_force_schedule(&inst).unwrap();
            assert_eq!(got.objective, best.objective);
        }
    }

    #[test]
    fn brute_force_examples() {
        let inst = toy(&[0.6, 0.95], &[3, 1], &[1.0, 1.0], 2, 200);
        let best = brute_force_schedule(&inst).unwrap();
        assert_eq!(objective(&inst, &best.schedule).unwrap(), best.objective);
        for mask in 0..4usize {
            let y = ScheduleVector((0..2).map(|g| mask >> g & 1 == 1).collect());
            assert!(objective(&inst, &y).unwrap() <= best.objective);
        }
        let big = toy(&[0.9; 21], &[1; 21], &[1.0; 21], 3, 200);
        assert!(matches!(brute_force_schedule(&big), Err(Error::TooLarge { groups: 21, guard: 20 })));
    }

    #[test]
    fn greedy_near_optimal_when_overhead_vanishes() {
        for seed in 0..10 {
            let mut inst = from_seed(seed, 8, 4);
            inst.slot_symbols = 1_000_000_000;
            let g = greedy_select(&inst, GreedyMode::StopOnNonPositive);
            let opt = brute_force_schedule(&inst).unwrap().objective;
            let got = objective(&inst, &g).unwrap();
            assert!(got >= (1.0 - (-1.0f64).exp()) * opt);
        }
    }

    #[test]
    fn full_refresh_can_lower_a_rate() {
        // a static user whose strong copilot decorrelates quickly
        let u = RateBoundInputs {
            beta_row: vec![1.0, 0.8],
            rho_row: vec![1.0, 0.5],
            ..user(1.0, 1.0)
        };
        let mut inst = SchedulingInstance {
            slot_symbols: 200,
            budget: 1,
            delays: vec![2],
            weights: vec![vec![1.0]],
            users: vec![vec![u]],
            refresh: RefreshModel::Full,
        };
        assert!(inst.terms()[0].refresh_gain() < 0.0);
        inst.refresh = RefreshModel::SignalOnly;
        assert!(inst.terms()[0].refresh_gain() >= 0.0);
    }

    #[test]
    fn signal_only_gains_non_negative_on_scenarios() {
        for seed in 0..20 {
            let inst = from_seed(seed, 10, 5);
            assert_eq!(inst.refresh, RefreshModel::SignalOnly);
            assert!(inst.terms().iter().all(|t| t.refresh_gain() >= 0.0));
        }
    }

    #[test]
    fn advance_delay_examples() {
        assert_eq!(advance_delays(&[3, 1, 0], &ScheduleVector(vec![true; 3])), vec![0, 0, 0]);
        assert_eq!(advance_delays(&[3, 1, 0], &ScheduleVector(vec![false; 3])), vec![4, 2, 1]);
        assert_eq!(advance_delays(&[3, 1, 0], &ScheduleVector(vec![true, false, true])), vec![0, 2, 0]);
    }

    #[test]
    fn contributions_sum_to_objective() {
        let inst = from_seed(5, 6, 3);
        let y = ScheduleVector::from_indices(6, &[1, 4]);
        let total: f64 = user_contributions(&inst, &y).unwrap().iter().map(|c| c.2).sum();
        assert!((total - objective(&inst, &y).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn json_round_trip() {
        let inst = from_seed(3, 4, 2);
        let text = serde_json::to_string(&inst).unwrap();
        let back: SchedulingInstance = serde_json::from_str(&text).unwrap();
        assert_eq!(back, inst);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn algorithms_feasible_and_bounded(seed in 0u64..10_000, n in 1usize..9, budget_frac in 0.0f64..=1.0) {
            let budget = ((n as f64) * budget_frac).round() as usize;
            let inst = from_seed(seed, n, budget);
            let opt = brute_force_schedule(&inst).unwrap();
            let cfg = ApproxConfig::default();
            let sol = submod_max_cardinality(&inst, &cfg).unwrap();
            prop_assert!(sol.schedule.count() <= budget);
            prop_assert!(sol.objective >= 0.0);
            prop_assert!(sol.objective <= opt.objective + 1e-12);
            prop_assert!(sol.objective * (4.0 + sol.alpha) >= opt.objective);
            let g = greedy_select(&inst, GreedyMode::StopOnNonPositive);
            let ls = local_search(&inst, g.clone(), cfg.local_search_eps).unwrap();
            prop_assert!(objective(&inst, &ls).unwrap() >= objective(&inst, &g).unwrap());
            prop_assert_eq!(greedy_select(&inst, GreedyMode::StopOnNonPositive), g);
        }

        #[test]
        fn diminishing_returns(seed in 0u64..10_000, n in 2usize..10, picks in proptest::collection::vec(0u8..3, 10)) {
            let inst = from_seed(seed, n, n);
            let cand = n - 1;
            let mut x = ScheduleVector::empty(n);
            let mut z = ScheduleVector::empty(n);
            for g in 0..cand {
                match picks[g] {
                    0 => {}
                    1 => z.0[g] = true,
                    _ => { x.0[g] = true; z.0[g] = true; }
                }
            }
            let gx = marginal_gain(&inst, &x, cand).unwrap();
            let gz = marginal_gain(&inst, &z, cand).unwrap();
            prop_assert!(gx - gz >= -1e-9, "gx={gx} gz={gz}");
        }
    }
}
