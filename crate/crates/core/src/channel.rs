//! Time-varying channel simulation: Gauss-Markov aging, MMSE pilot
//! estimation, matched-filter reception and the Monte-Carlo ergodic rate
//! used to check the closed-form bound.
//!
//! Pilot sequences are not simulated as waveforms. For one copilot group at
//! BS `l` the despread pilot observation is `y = sum_c g_c + w / sqrt(P_p)`
//! and every MMSE estimate is a scaling of it, `g_hat_c = beta_c / (1/P_p +
//! sum_b beta_b) * y`. That gives each estimate the CN(0, beta_c^2 / (1/P_p +
//! sum_b beta_b)) law and makes copilot estimates exact multiples of each
//! other.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grouping::CopilotGroups;
use crate::netgen::Scenario;

/// One draw of CN(0, variance).
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

/// Per-antenna complex gains from one user to one BS.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelVector(pub Vec<Complex64>);

impl ChannelVector {
    pub fn zeros(m: usize) -> Self {
        Self(vec![Complex64::new(0.0, 0.0); m])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Hermitian inner product `self^H other`.
    pub fn dot(&self, other: &ChannelVector) -> Complex64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn scaled(&self, k: f64) -> ChannelVector {
        ChannelVector(self.0.iter().map(|z| z * k).collect())
    }

    /// `self += k * other`
    pub fn add_scaled(&mut self, k: Complex64, other: &ChannelVector) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += k * b;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateStats {
    /// Per-antenna variance of the MMSE estimate.
    pub est_variance: f64,
    /// Per-antenna variance of the estimation error.
    pub err_variance: f64,
}

/// MMSE statistics for every copilot user of one group toward one BS.
/// `beta_row[c]` is the gain of the group's user in cell `c` toward that BS.
pub fn mmse_estimate_variance(beta_row: &[f64], pilot_power: f64) -> Vec<EstimateStats> {
    let denom = 1.0 / pilot_power + beta_row.iter().sum::<f64>();
    beta_row
        .iter()
        .map(|&b| {
            let est = b * b / denom;
            EstimateStats {
                est_variance: est,
                err_variance: b - est,
            }
        })
        .collect()
}

/// `m` i.i.d. CN(0, beta) entries; `beta = 0` yields the zero vector.
pub fn draw_initial_channel<R: Rng + ?Sized>(beta: f64, m: usize, rng: &mut R) -> ChannelVector {
    if beta <= 0.0 {
        return ChannelVector::zeros(m);
    }
    ChannelVector((0..m).map(|_| complex_normal(rng, beta)).collect())
}

/// One Gauss-Markov step on the unit-variance part: `rho h + eps`,
/// `eps ~ CN(0, 1 - rho^2)`.
pub fn evolve_channel<R: Rng + ?Sized>(h: &ChannelVector, rho: f64, rng: &mut R) -> ChannelVector {
    let innovation = (1.0 - rho * rho).max(0.0);
    ChannelVector(
        h.0.iter()
            .map(|z| z * rho + complex_normal(rng, innovation))
            .collect(),
    )
}

/// Variance per antenna of the innovation accumulated over `delay` steps of
/// a channel with gain `beta`: `beta (1 - rho^{2d})`.
pub fn accumulated_innovation_variance(beta: f64, rho: f64, delay: u32) -> f64 {
    beta * (1.0 - rho.powi(2 * delay as i32)).max(0.0)
}

/// `delay` Gauss-Markov steps applied in one shot to a full channel `g`
/// (including its `sqrt(beta)` scaling).
pub fn age_channel<R: Rng + ?Sized>(
    g: &ChannelVector,
    beta: f64,
    rho: f64,
    delay: u32,
    rng: &mut R,
) -> ChannelVector {
    if delay == 0 {
        return g.clone();
    }
    let decay = rho.powi(delay as i32);
    let var = accumulated_innovation_variance(beta, rho, delay);
    ChannelVector(g.0.iter().map(|z| z * decay + complex_normal(rng, var)).collect())
}

/// Unit-norm matched filter `g_hat / |g_hat|`.
pub fn matched_filter(estimate: &ChannelVector) -> Result<ChannelVector> {
    let n = estimate.norm();
    if n == 0.0 || !n.is_finite() {
        return Err(Error::ZeroEstimate);
    }
    Ok(estimate.scaled(1.0 / n))
}

/// True channels and MMSE estimates of one copilot group toward one BS at
/// the training instant.
#[derive(Debug, Clone)]
pub struct PilotOutcome {
    pub channels: Vec<ChannelVector>,
    pub estimates: Vec<ChannelVector>,
}

/// Simulates uplink training for one copilot group at one BS.
pub fn train_copilot_group<R: Rng + ?Sized>(
    beta_row: &[f64],
    pilot_power: f64,
    m: usize,
    rng: &mut R,
) -> PilotOutcome {
    let channels: Vec<ChannelVector> = beta_row
        .iter()
        .map(|&b| draw_initial_channel(b, m, rng))
        .collect();
    let mut observation = ChannelVector::zeros(m);
    for g in &channels {
        observation.add_scaled(Complex64::new(1.0, 0.0), g);
    }
    let noise_var = 1.0 / pilot_power;
    for z in observation.0.iter_mut() {
        *z += complex_normal(rng, noise_var);
    }
    let denom = noise_var + beta_row.iter().sum::<f64>();
    let estimates = beta_row
        .iter()
        .map(|&b| observation.scaled(b / denom))
        .collect();
    PilotOutcome { channels, estimates }
}

/// Distribution of the uplink data symbols. Both have unit power.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum SymbolModel {
    /// `exp(j phi)` with uniform phase.
    #[default]
    UnitModulus,
    /// CN(0, 1).
    Gaussian,
}

impl SymbolModel {
    pub fn draw<R: Rng + ?Sized>(self, rng: &mut R) -> Complex64 {
        match self {
            SymbolModel::UnitModulus => {
                let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                Complex64::from_polar(1.0, phi)
            }
            SymbolModel::Gaussian => complex_normal(rng, 1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkSimConfig {
    pub antennas: usize,
    /// Groups trained per slot; sets the `1 - tau/T_s` prefactor.
    pub trained_groups: usize,
    pub num_drops: usize,
    pub seed: u64,
    pub symbols: SymbolModel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UserRateEstimate {
    pub group: usize,
    pub cell: usize,
    /// Mean over drops, bits/s/Hz.
    pub mean: f64,
    /// Standard error of the mean.
    pub std_err: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErgodicRates {
    pub cells: usize,
    /// Ordered by group, then cell.
    pub users: Vec<UserRateEstimate>,
    /// `per_drop[drop][group * C + cell]`.
    pub per_drop: Vec<Vec<f64>>,
}

impl ErgodicRates {
    pub fn user(&self, group: usize, cell: usize) -> &UserRateEstimate {
        &self.users[group * self.cells + cell]
    }

    /// Writes `drop,group,cell,rate` rows.
    pub fn write_trace(&self, path: &std::path::Path) -> Result<()> {
        let rows = self.per_drop.iter().enumerate().flat_map(|(d, rates)| {
            self.users.iter().zip(rates).map(move |(u, r)| {
                vec![d.to_string(), u.group.to_string(), u.cell.to_string(), r.to_string()]
            })
        });
        crate::netgen::io::write_rows(path, &["drop", "group", "cell", "rate"], rows)
    }
}

/// Monte-Carlo ergodic spectral efficiency of every grouped user with a
/// matched filter built from CSI that is `delays[g]` slots old.
///
/// Each drop realises, independently at every BS, the training of every
/// group, Gauss-Markov aging over its delay, and one uplink data symbol from
/// every user. The per-user rate is
/// `(1 - tau/T_s) log2(1 + |u^H I1|^2 / (|u^H I2|^2 + |u^H I3|^2))` with `I1`
/// the useful term, `I2` the copilot (contamination) term and `I3`
/// everything else.
pub fn simulate_ergodic_rate(
    scenario: &Scenario,
    groups: &CopilotGroups,
    delays: &[u32],
    cfg: &LinkSimConfig,
) -> Result<ErgodicRates> {
    let cells = scenario.num_cells();
    let n_groups = groups.len();
    if delays.len() != n_groups {
        return Err(Error::InvalidConfig(format!(
            "{} delays for {} groups",
            delays.len(),
            n_groups
        )));
    }
    if cfg.antennas < 2 || cfg.num_drops == 0 {
        return Err(Error::InvalidConfig("need antennas >= 2 and num_drops >= 1".into()));
    }
    let t_s = scenario.config.slot_symbols;
    if cfg.trained_groups > t_s {
        return Err(Error::InvalidConfig("trained_groups exceeds slot_symbols".into()));
    }
    let prefactor = 1.0 - cfg.trained_groups as f64 / t_s as f64;

    let per_drop: Vec<Vec<f64>> = (0..cfg.num_drops)
        .into_par_iter()
        .map(|drop| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(drop as u64);
            let mut rates = vec![0.0; n_groups * cells];
            for bs in 0..cells {
                let sinrs = loop {
                    match simulate_bs(scenario, groups, delays, cfg, bs, &mut rng) {
                        Ok(s) => break s,
                        Err(Error::ZeroEstimate) => continue,
                        Err(e) => unreachable!("{e}"),
                    }
                };
                for (g, sinr) in sinrs.into_iter().enumerate() {
                    rates[g * cells + bs] = prefactor * (1.0 + sinr).log2();
                }
            }
            rates
        })
        .collect();

    let n = cfg.num_drops as f64;
    let mut users = Vec::with_capacity(n_groups * cells);
    for g in 0..n_groups {
        for l in 0..cells {
            let idx = g * cells + l;
            let mean = per_drop.iter().map(|r| r[idx]).sum::<f64>() / n;
            let var = if cfg.num_drops > 1 {
                per_drop.iter().map(|r| (r[idx] - mean).powi(2)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            users.push(UserRateEstimate {
                group: g,
                cell: l,
                mean,
                std_err: (var / n).sqrt(),
            });
        }
    }
    Ok(ErgodicRates {
        cells,
        users,
        per_drop,
    })
}

/// One drop at BS `bs`: returns the instantaneous SINR of each group's
/// user in cell `bs`.
fn simulate_bs(
    scenario: &Scenario,
    groups: &CopilotGroups,
    delays: &[u32],
    cfg: &LinkSimConfig,
    bs: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>> {
    let cells = scenario.num_cells();
    let m = cfg.antennas;
    let pilot_power = scenario.config.pilot_power;
    let mut received = ChannelVector::zeros(m);
    let mut per_group = Vec::with_capacity(groups.len());

    for (g, group) in groups.groups.iter().enumerate() {
        let d = delays[g];
        let beta_row: Vec<f64> = (0..cells)
            .map(|c| scenario.beta.get(bs, c, group.members[c]))
            .collect();
        let rho_row: Vec<f64> = (0..cells)
            .map(|c| scenario.rho.get(bs, c, group.members[c]))
            .collect();
        let trained = train_copilot_group(&beta_row, pilot_power, m, rng);
        let symbols: Vec<Complex64> = (0..cells).map(|_| cfg.symbols.draw(rng)).collect();
        for c in 0..cells {
            let now = age_channel(&trained.channels[c], beta_row[c], rho_row[c], d, rng);
            received.add_scaled(symbols[c], &now);
        }
        per_group.push((trained.estimates, rho_row, symbols, d));
    }
    let noise_var = 1.0 / scenario.config.uplink_power;
    for z in received.0.iter_mut() {
        *z += complex_normal(rng, noise_var);
    }

    let mut sinrs = Vec::with_capacity(groups.len());
    for (estimates, rho_row, symbols, d) in &per_group {
        let u = matched_filter(&estimates[bs])?;
        let decay = |c: usize| rho_row[c].powi(*d as i32);
        let useful = u.dot(&estimates[bs]) * decay(bs) * symbols[bs];
        let mut contamination = Complex64::new(0.0, 0.0);
        for c in (0..cells).filter(|&c| c != bs) {
            contamination += u.dot(&estimates[c]) * decay(c) * symbols[c];
        }
        let rest = u.dot(&received) - useful - contamination;
        let denom = contamination.norm_sqr() + rest.norm_sqr();
        sinrs.push(useful.norm_sqr() / denom);
    }
    Ok(sinrs)
}
