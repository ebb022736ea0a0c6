//! Closed-form uplink rate bound with outdated CSI, the large-array
//! improvement condition, and the every-slot-training reference rate.
//!
//! All rates are in bits/s/Hz (log base 2).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grouping::CopilotGroups;
use crate::netgen::Scenario;

/// Everything the bound needs for one user (group `g`, cell `l`), with all
/// gains taken toward the user's serving BS `l`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateBoundInputs {
    pub antennas: usize,
    pub slot_symbols: usize,
    /// Groups trained in the slot (tau).
    pub trained: usize,
    /// CSI age in slots.
    pub delay: u32,
    /// Index of the user's own cell in `beta_row` / `rho_row`.
    pub own_cell: usize,
    /// Gains of the group's copilot users, one per cell.
    pub beta_row: Vec<f64>,
    /// Sum of gains of every user outside the group.
    pub beta_others: f64,
    /// Per-slot autocorrelation of the copilot users, one per cell.
    pub rho_row: Vec<f64>,
    pub pilot_power: f64,
    pub uplink_power: f64,
}

impl RateBoundInputs {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.beta_row.len() != self.rho_row.len() || self.own_cell >= self.beta_row.len() {
            return bad("beta_row / rho_row / own_cell mismatch");
        }
        if self.trained > self.slot_symbols {
            return bad("trained groups exceed slot_symbols");
        }
        if self.beta_row.iter().any(|&b| !(b > 0.0)) || !(self.beta_others >= 0.0) {
            return bad("gains must be positive");
        }
        if self.rho_row.iter().any(|r| !(r.abs() <= 1.0)) {
            return bad("|rho| must not exceed 1");
        }
        if !(self.pilot_power > 0.0 && self.uplink_power > 0.0) {
            return bad("powers must be positive");
        }
        Ok(())
    }

    pub fn with_delay(&self, delay: u32) -> Self {
        Self {
            delay,
            ..self.clone()
        }
    }

    fn decay(&self, c: usize) -> f64 {
        self.rho_row[c].powi(2 * self.delay as i32)
    }

    fn pilot_denominator(&self) -> f64 {
        1.0 / self.pilot_power + self.beta_row.iter().sum::<f64>()
    }
}

/// Copilot contamination `sum_{c != l} rho_c^{2d} beta_c^2`.
pub fn pilot_interference(inputs: &RateBoundInputs) -> f64 {
    (0..inputs.beta_row.len())
        .filter(|&c| c != inputs.own_cell)
        .map(|c| inputs.decay(c) * inputs.beta_row[c].powi(2))
        .sum()
}

/// Noise, estimation error, aging and other-group interference, scaled by
/// the pilot denominator `1/P_p + sum_b beta_b`.
pub fn noise_interference(inputs: &RateBoundInputs) -> f64 {
    let denom = inputs.pilot_denominator();
    let residual: f64 = (0..inputs.beta_row.len())
        .map(|c| {
            let b = inputs.beta_row[c];
            b - inputs.decay(c) * b * b / denom
        })
        .sum();
    (inputs.beta_others + residual + 1.0 / inputs.uplink_power) * denom
}

/// Effective SINR inside the bound's logarithm. Zero for a single antenna.
pub fn bound_sinr(inputs: &RateBoundInputs) -> f64 {
    sinr_with_signal_delay(inputs, inputs.delay)
}

/// Bound SINR whose useful term decays over `signal_delay` slots while both
/// interference terms keep `inputs.delay`.
pub fn sinr_with_signal_delay(inputs: &RateBoundInputs, signal_delay: u32) -> f64 {
    if inputs.antennas < 2 {
        return 0.0;
    }
    let m1 = (inputs.antennas - 1) as f64;
    let own = inputs.beta_row[inputs.own_cell];
    let decay = inputs.rho_row[inputs.own_cell].powi(2 * signal_delay as i32);
    let useful = m1 * own * own * decay;
    useful / (m1 * pilot_interference(inputs) + noise_interference(inputs))
}

/// `log2(1 + SINR)` without any training overhead.
pub fn log_rate(inputs: &RateBoundInputs) -> f64 {
    bound_sinr(inputs).ln_1p() / std::f64::consts::LN_2
}

/// [`log_rate`] with the useful term restored to full strength and the
/// interference terms left at `inputs.delay`.
pub fn refreshed_signal_log_rate(inputs: &RateBoundInputs) -> f64 {
    sinr_with_signal_delay(inputs, 0).ln_1p() / std::f64::consts::LN_2
}

/// Per-user lower bound `(1 - tau/T_s) log2(1 + SINR)`.
pub fn user_rate_lb(inputs: &RateBoundInputs) -> f64 {
    rate_with_overhead(inputs, inputs.trained)
}

/// Bound with an explicit number of training symbols in the prefactor.
pub fn rate_with_overhead(inputs: &RateBoundInputs, trained: usize) -> f64 {
    let prefactor = 1.0 - trained as f64 / inputs.slot_symbols as f64;
    if prefactor <= 0.0 {
        return 0.0;
    }
    prefactor * log_rate(inputs)
}

/// Reference scheme: every one of `num_groups` groups trains each slot, so
/// CSI is fresh and the prefactor is `1 - N_g/T_s`.
pub fn reference_rate(inputs: &RateBoundInputs, num_groups: usize) -> Result<f64> {
    if num_groups > inputs.slot_symbols {
        return Err(Error::InvalidRegime(format!(
            "{num_groups} groups cannot all train in a {}-symbol slot",
            inputs.slot_symbols
        )));
    }
    Ok(rate_with_overhead(&inputs.with_delay(0), num_groups))
}

/// Builds the inputs for the user of group `group` in cell `cell`.
pub fn inputs_for(
    scenario: &Scenario,
    groups: &CopilotGroups,
    group: usize,
    cell: usize,
    delay: u32,
    trained: usize,
    antennas: usize,
) -> RateBoundInputs {
    let cells = scenario.num_cells();
    let members = &groups.groups[group].members;
    let beta_row = (0..cells).map(|c| scenario.beta.get(cell, c, members[c])).collect();
    let rho_row = (0..cells).map(|c| scenario.rho.get(cell, c, members[c])).collect();
    let beta_others = groups
        .groups
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != group)
        .flat_map(|(_, other)| (0..cells).map(move |c| scenario.beta.get(cell, c, other.members[c])))
        .sum();
    RateBoundInputs {
        antennas,
        slot_symbols: scenario.config.slot_symbols,
        trained,
        delay,
        own_cell: cell,
        beta_row,
        beta_others,
        rho_row,
        pilot_power: scenario.config.pilot_power,
        uplink_power: scenario.config.uplink_power,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UserBound {
    pub group: usize,
    pub cell: usize,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSummary {
    /// Ordered by group, then cell.
    pub per_user: Vec<UserBound>,
    pub total: f64,
}

/// Applies [`user_rate_lb`] to every grouped user.
pub fn sum_rate_lb(
    scenario: &Scenario,
    groups: &CopilotGroups,
    delays: &[u32],
    trained: usize,
    antennas: usize,
) -> Result<RateSummary> {
    if delays.len() != groups.len() {
        return Err(Error::InvalidConfig(format!(
            "{} delays for {} groups",
            delays.len(),
            groups.len()
        )));
    }
    let mut per_user = Vec::with_capacity(groups.len() * scenario.num_cells());
    for (g, &d) in delays.iter().enumerate() {
        for l in 0..scenario.num_cells() {
            let inputs = inputs_for(scenario, groups, g, l, d, trained, antennas);
            per_user.push(UserBound {
                group: g,
                cell: l,
                rate: user_rate_lb(&inputs),
            });
        }
    }
    let total = per_user.iter().map(|u| u.rate).sum();
    Ok(RateSummary { per_user, total })
}

/// Large-array SINR of a user with fresh CSI: `beta_l^2 / sum_{b != l}
/// beta_b^2`. `f64::INFINITY` when there is no copilot contamination.
pub fn asymptotic_sinr(beta_row: &[f64], own_cell: usize) -> f64 {
    let contamination: f64 = beta_row
        .iter()
        .enumerate()
        .filter(|&(c, _)| c != own_cell)
        .map(|(_, b)| b * b)
        .sum();
    if contamination == 0.0 {
        return f64::INFINITY;
    }
    beta_row[own_cell].powi(2) / contamination
}

/// Inputs of the large-array improvement condition for one user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticInputs {
    pub beta_row: Vec<f64>,
    pub own_cell: usize,
    /// Smallest per-slot autocorrelation in the user's group.
    pub rho_min: f64,
    /// Largest per-slot autocorrelation in the user's group.
    pub rho_max: f64,
    pub num_groups: usize,
    pub trained: usize,
    pub slot_symbols: usize,
    pub delay: u32,
}

impl AsymptoticInputs {
    fn check(&self) -> Result<()> {
        if !(self.trained < self.num_groups && self.num_groups < self.slot_symbols) {
            return Err(Error::InvalidRegime(format!(
                "need tau < N_g < T_s, got {} / {} / {}",
                self.trained, self.num_groups, self.slot_symbols
            )));
        }
        if !(self.rho_min > 0.0 && self.rho_min <= self.rho_max && self.rho_max <= 1.0) {
            return Err(Error::InvalidConfig("need 0 < rho_min <= rho_max <= 1".into()));
        }
        Ok(())
    }

    fn exponent(&self) -> f64 {
        (self.slot_symbols - self.num_groups) as f64 / (self.slot_symbols - self.trained) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionOutcome {
    pub holds: bool,
    /// `(rho_min^2 / rho_max^2)^d`
    pub lhs: f64,
    /// `((1 + SINR)^{(T_s - N_g)/(T_s - tau)} - 1) / SINR`
    pub rhs: f64,
    pub margin: f64,
}

/// Whether reusing `delay`-slot-old CSI beats training every group every
/// slot for this user as the array grows, assuming the worst case where the
/// user ages fastest in its group and every copilot ages slowest.
///
/// Without contamination (infinite SINR) the right-hand side is its limit,
/// zero, since the exponent is below one.
pub fn improvement_condition(inputs: &AsymptoticInputs) -> Result<ConditionOutcome> {
    inputs.check()?;
    let ratio = (inputs.rho_min / inputs.rho_max).powi(2);
    let lhs = ratio.powi(inputs.delay as i32);
    let sinr = asymptotic_sinr(&inputs.beta_row, inputs.own_cell);
    let rhs = if sinr.is_infinite() {
        0.0
    } else {
        // (1+s)^e - 1 via exp_m1 to keep precision for small s
        (inputs.exponent() * sinr.ln_1p()).exp_m1() / sinr
    };
    Ok(ConditionOutcome {
        holds: lhs >= rhs,
        lhs,
        rhs,
        margin: lhs - rhs,
    })
}

/// Large-array limit of the outdated-CSI bound for an arbitrary rho row.
pub fn asymptotic_outdated_rate(
    beta_row: &[f64],
    rho_row: &[f64],
    own_cell: usize,
    delay: u32,
    trained: usize,
    slot_symbols: usize,
) -> f64 {
    let decay = |c: usize| rho_row[c].powi(2 * delay as i32);
    let contamination: f64 = (0..beta_row.len())
        .filter(|&c| c != own_cell)
        .map(|c| decay(c) * beta_row[c].powi(2))
        .sum();
    let useful = beta_row[own_cell].powi(2) * decay(own_cell);
    let sinr = if contamination > 0.0 { useful / contamination } else { f64::INFINITY };
    let prefactor = 1.0 - trained as f64 / slot_symbols as f64;
    prefactor * sinr.ln_1p() / std::f64::consts::LN_2
}

/// Large-array outdated-CSI rate under the worst-case substitution
/// `rho_l = rho_min`, `rho_b = rho_max` for every copilot `b != l`.
pub fn worst_case_outdated_rate(inputs: &AsymptoticInputs) -> f64 {
    let rho_row: Vec<f64> = (0..inputs.beta_row.len())
        .map(|c| if c == inputs.own_cell { inputs.rho_min } else { inputs.rho_max })
        .collect();
    asymptotic_outdated_rate(
        &inputs.beta_row,
        &rho_row,
        inputs.own_cell,
        inputs.delay,
        inputs.trained,
        inputs.slot_symbols,
    )
}

/// Large-array limit of [`reference_rate`]: `(1 - N_g/T_s) log2(1 + SINR)`.
pub fn asymptotic_reference_rate(
    beta_row: &[f64],
    own_cell: usize,
    num_groups: usize,
    slot_symbols: usize,
) -> f64 {
    let prefactor = 1.0 - num_groups as f64 / slot_symbols as f64;
    prefactor * asymptotic_sinr(beta_row, own_cell).ln_1p() / std::f64::consts::LN_2
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn single(beta: f64, rho: f64, d: u32, p: f64, m: usize, tau: usize) -> RateBoundInputs {
        RateBoundInputs {
            antennas: m,
            slot_symbols: 200,
            trained: tau,
            delay: d,
            own_cell: 0,
            beta_row: vec![beta],
            beta_others: 0.0,
            rho_row: vec![rho],
            pilot_power: p,
            uplink_power: p,
        }
    }

    #[test]
    fn pilot_interference_examples() {
        assert_eq!(pilot_interference(&single(1.0, 1.0, 0, 1.0, 10, 1)), 0.0);
        let two = RateBoundInputs {
            beta_row: vec![1.0, 0.1],
            rho_row: vec![1.0, 0.9],
            delay: 1,
            ..single(1.0, 1.0, 0, 1.0, 10, 1)
        };
        assert!((pilot_interference(&two) - 0.0081).abs() < 1e-15);
        assert!(pilot_interference(&two.with_delay(5000)) < 1e-300);
    }

    #[test]
    fn noise_interference_examples() {
        assert!((noise_interference(&single(1.0, 1.0, 0, 1.0, 10, 1)) - 3.0).abs() < 1e-15);
        assert!(noise_interference(&single(1.0, 1.0, 0, 1e15, 10, 1)) < 1e-12);
        let base = single(0.7, 0.95, 0, 2.0, 10, 1);
        let mut prev = noise_interference(&base);
        for d in 1..20 {
            let next = noise_interference(&base.with_delay(d));
            assert!(next >= prev);
            prev = next;
        }
    }

    #[test]
    fn user_rate_examples() {
        assert_eq!(user_rate_lb(&single(1.0, 1.0, 0, 1.0, 1, 15)), 0.0);
        assert_eq!(user_rate_lb(&single(1.0, 1.0, 0, 1.0, 101, 200)), 0.0);
        let r = user_rate_lb(&single(1.0, 1.0, 0, 1.0, 101, 15));
        // Ip = 0 and In = 3, so SINR = 100 / 3
        let want = 0.925 * (1.0f64 + 100.0 / 3.0).log2();
        assert!((r - want).abs() < 1e-12);
        assert!((r - 4.718_922_674_477_41).abs() < 1e-9);
    }

    #[test]
    fn asymptotic_sinr_examples() {
        assert_eq!(asymptotic_sinr(&[0.3, 0.3], 0), 1.0);
        assert!(asymptotic_sinr(&[0.3], 0).is_infinite());
        assert_eq!(asymptotic_sinr(&[1.0, 0.5], 0), 4.0);
    }

    fn asym(ratio_sq: f64, d: u32) -> AsymptoticInputs {
        AsymptoticInputs {
            beta_row: vec![1.0, 1.0],
            own_cell: 0,
            rho_min: ratio_sq.sqrt(),
            rho_max: 1.0,
            num_groups: 30,
            trained: 15,
            slot_symbols: 200,
            delay: d,
        }
    }

    #[test]
    fn condition_examples() {
        let fresh = improvement_condition(&asym(0.5, 0)).unwrap();
        assert!(fresh.holds && fresh.lhs == 1.0 && fresh.rhs < 1.0);
        let homogeneous = improvement_condition(&asym(1.0, 7)).unwrap();
        assert!(homogeneous.holds);

        let want_rhs = 2f64.powf(170.0 / 185.0) - 1.0;
        let c0 = improvement_condition(&asym(0.8, 0)).unwrap();
        assert!((c0.rhs - want_rhs).abs() < 1e-12);
        assert!((c0.rhs - 0.890_697_971_166_727).abs() < 1e-12);
        assert!(c0.holds);
        for d in 1..5 {
            assert!(!improvement_condition(&asym(0.8, d)).unwrap().holds);
        }

        let mut bad = asym(0.8, 1);
        bad.trained = 30;
        assert!(matches!(improvement_condition(&bad), Err(Error::InvalidRegime(_))));
        bad.trained = 15;
        bad.num_groups = 200;
        assert!(matches!(improvement_condition(&bad), Err(Error::InvalidRegime(_))));
    }

    #[test]
    fn uncontaminated_condition_always_holds() {
        let mut a = asym(0.3, 4);
        a.beta_row = vec![1.0];
        let out = improvement_condition(&a).unwrap();
        assert!(out.holds);
        assert_eq!(out.rhs, 0.0);
    }

    #[test]
    fn reference_rate_examples() {
        let base = single(0.8, 0.9, 3, 10.0, 64, 15);
        assert_eq!(reference_rate(&base, 200).unwrap(), 0.0);
        assert!(matches!(reference_rate(&base, 201), Err(Error::InvalidRegime(_))));
        let mut fresh = base.with_delay(0);
        fresh.trained = 30;
        assert_eq!(reference_rate(&base, 30).unwrap(), user_rate_lb(&fresh));
    }

    #[test]
    fn large_array_limits() {
        let inputs = RateBoundInputs {
            antennas: 100_000_000,
            slot_symbols: 200,
            trained: 30,
            delay: 0,
            own_cell: 0,
            beta_row: vec![1.0, 0.3, 0.2],
            beta_others: 0.5,
            rho_row: vec![0.95, 0.9, 0.99],
            pilot_power: 10.0,
            uplink_power: 10.0,
        };
        let lim = asymptotic_reference_rate(&inputs.beta_row, 0, 30, 200);
        assert!((reference_rate(&inputs, 30).unwrap() - lim).abs() < 1e-6);
        let outdated = inputs.with_delay(2);
        let lim = asymptotic_outdated_rate(&outdated.beta_row, &outdated.rho_row, 0, 2, 30, 200);
        assert!((user_rate_lb(&outdated) - lim).abs() < 1e-6);
    }

    #[test]
    fn scale_invariance_of_asymptotic_sinr() {
        let row = [0.7, 0.1, 0.05];
        let doubled: Vec<f64> = row.iter().map(|b| 2.0 * b).collect();
        assert!((asymptotic_sinr(&row, 0) - asymptotic_sinr(&doubled, 0)).abs() < 1e-12);
        let mut a = asym(0.7, 2);
        a.beta_row = row.to_vec();
        let r1 = improvement_condition(&a).unwrap().rhs;
        a.beta_row = doubled;
        let r2 = improvement_condition(&a).unwrap().rhs;
        assert!((r1 - r2).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn single_cell_rate_non_increasing_in_delay(
            beta in 1e-6f64..1.0, rho in 0.0f64..1.0, p in 0.1f64..1e6, m in 2usize..400
        ) {
            let base = single(beta, rho, 0, p, m, 10);
            let mut prev = user_rate_lb(&base);
            for d in 1..12 {
                let r = user_rate_lb(&base.with_delay(d));
                prop_assert!(r <= prev + 1e-12);
                prop_assert!(r.is_finite() && r >= 0.0);
                prev = r;
            }
        }

        #[test]
        fn refreshed_signal_dominates(
            betas in proptest::collection::vec(1e-9f64..1.0, 1..8),
            rhos in proptest::collection::vec(-1.0f64..=1.0, 8),
            d in 0u32..6, m in 2usize..500,
        ) {
            let n = betas.len();
            let inputs = RateBoundInputs {
                antennas: m, slot_symbols: 200, trained: 7, delay: d, own_cell: 0,
                beta_row: betas, beta_others: 0.3, rho_row: rhos[..n].to_vec(),
                pilot_power: 100.0, uplink_power: 100.0,
            };
            prop_assert!(refreshed_signal_log_rate(&inputs) >= log_rate(&inputs));
            let fresh = inputs.with_delay(0);
            prop_assert_eq!(refreshed_signal_log_rate(&fresh), log_rate(&fresh));
        }

        #[test]
        fn outputs_finite_and_non_negative(
            betas in proptest::collection::vec(1e-9f64..1.0, 1..8),
            rhos in proptest::collection::vec(-1.0f64..=1.0, 8),
            others in 0.0f64..10.0, d in 0u32..6, m in 1usize..500, p in 1e-2f64..1e9,
        ) {
            let n = betas.len();
            let inputs = RateBoundInputs {
                antennas: m, slot_symbols: 200, trained: 7, delay: d, own_cell: 0,
                beta_row: betas, beta_others: others, rho_row: rhos[..n].to_vec(),
                pilot_power: p, uplink_power: p,
            };
            prop_assert!(inputs.validate().is_ok());
            for v in [pilot_interference(&inputs), noise_interference(&inputs), user_rate_lb(&inputs)] {
                prop_assert!(v.is_finite() && v >= 0.0);
            }
        }
    }
}
