//! Experiment runners behind the command-line tool: spectral-efficiency
//! distributions, rate versus array size, and weighted objective versus
//! training budget.

mod checks;
mod report;
mod spec;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub use checks::{run_checks, CheckOutcome};
pub use report::{
    emit_report, outage_rate, read_curve, read_user_rows, Curve, CurvePoint, Distribution, ExperimentReport,
    Outage, UserRow, USER_HEADER,
};
pub use spec::{EvalMode, ExperimentKind, ExperimentSpec, WeightsMode};

use crate::channel::{simulate_ergodic_rate, LinkSimConfig};
use crate::error::Result;
use crate::grouping::{cluster_count, group_scenario, CopilotGroups};
use crate::netgen::{generate_scenario, Scenario};
use crate::ratebound::sum_rate_lb;
use crate::scheduler::{
    brute_force_schedule, submod_max_cardinality, user_contributions, SchedulingInstance, BRUTE_FORCE_GUARD,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const OUTAGE_QUANTILE: f64 = 0.05;

/// One scenario redraw with its groups, random delays and weights.
#[derive(Debug, Clone)]
pub struct Realization {
    pub scenario: Scenario,
    pub groups: CopilotGroups,
    /// `weights[g][l]`
    pub weights: Vec<Vec<f64>>,
    mc_seed: u64,
}

impl Realization {
    pub fn delays(&self) -> Vec<u32> {
        self.groups.delays()
    }
}

fn redraw_seed(master: u64, redraw: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(redraw as u64);
    rng.next_u64()
}

/// Draws scenario `redraw` of `spec`: geometry and mobility, k-means
/// grouping, delays uniform on `0..=d_max` and weights.
pub fn realize(spec: &ExperimentSpec, redraw: usize) -> Result<Realization> {
    let seed = redraw_seed(spec.seed(), redraw);
    let config = crate::netgen::ScenarioConfig {
        rng_seed: seed,
        ..spec.scenario.clone()
    };
    let scenario = generate_scenario(&config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let n_c = cluster_count(spec.t_max, config.slot_duration);
    let mut groups = group_scenario(&scenario, n_c, &mut rng)?;
    let delays: Vec<u32> = (0..groups.len()).map(|_| rng.random_range(0..=spec.d_max)).collect();
    groups.set_delays(&delays)?;
    let weights = (0..groups.len())
        .map(|_| {
            (0..config.num_cells)
                .map(|_| match spec.weights {
                    WeightsMode::UniformRandom => rng.random::<f64>(),
                    WeightsMode::Ones => 1.0,
                })
                .collect()
        })
        .collect();
    Ok(Realization {
        scenario,
        groups,
        weights,
        mc_seed: rng.next_u64(),
    })
}

/// Per-user rates `(group, cell, rate, std_err)` of one series.
type SeriesRates = (String, Vec<(usize, usize, f64, f64)>);

/// Proposed scheme (random delays, `tau` trained) and reference scheme
/// (fresh CSI, every group trained) under the requested evaluation modes.
fn evaluate(spec: &ExperimentSpec, real: &Realization, tau: usize, m: usize, m_index: usize) -> Result<Vec<SeriesRates>> {
    let n_g = real.groups.len();
    let delays = real.delays();
    let fresh = vec![0; n_g];
    let schemes = [("proposed", &delays, tau), ("reference", &fresh, n_g)];
    let mut out = Vec::new();
    if spec.mode.closed_form() {
        for (name, d, trained) in schemes {
            let summary = sum_rate_lb(&real.scenario, &real.groups, d, trained, m)?;
            out.push((
                format!("bound_{name}"),
                summary.per_user.iter().map(|u| (u.group, u.cell, u.rate, 0.0)).collect(),
            ));
        }
    }
    if spec.mode.monte_carlo() {
        for (k, (name, d, trained)) in schemes.into_iter().enumerate() {
            let cfg = LinkSimConfig {
                antennas: m,
                trained_groups: trained,
                num_drops: spec.num_drops,
                seed: real.mc_seed.wrapping_add((2 * m_index + k) as u64),
                symbols: spec.symbols,
            };
            let rates = simulate_ergodic_rate(&real.scenario, &real.groups, d, &cfg)?;
            out.push((
                format!("mc_{name}"),
                rates.users.iter().map(|u| (u.group, u.cell, u.mean, u.std_err)).collect(),
            ));
        }
    }
    Ok(out)
}

fn base_report(spec: &ExperimentSpec, kind: ExperimentKind) -> ExperimentReport {
    ExperimentReport {
        kind,
        seed: spec.seed(),
        config_echo: spec.to_kv(),
        version: VERSION.to_string(),
        user_rows: Vec::new(),
        curves: Vec::new(),
        distributions: Vec::new(),
        outages: Vec::new(),
    }
}

/// Evaluates every redraw at every antenna count; rows come back in
/// (redraw, M, series, group, cell) order.
fn sweep_antennas(spec: &ExperimentSpec) -> Result<Vec<UserRow>> {
    let tau = spec.trained[0];
    let per_redraw: Vec<Vec<UserRow>> = (0..spec.redraws)
        .into_par_iter()
        .map(|r| -> Result<Vec<UserRow>> {
            let real = realize(spec, r)?;
            let mut rows = Vec::new();
            for (i, &m) in spec.antennas.iter().enumerate() {
                for (series, users) in evaluate(spec, &real, tau, m, i)? {
                    rows.extend(users.into_iter().map(|(group, cell, rate, std_err)| UserRow {
                        redraw: r,
                        series: series.clone(),
                        x: m as f64,
                        group,
                        cell,
                        rate,
                        std_err,
                    }));
                }
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    Ok(per_redraw.concat())
}

fn series_names(rows: &[UserRow]) -> Vec<String> {
    let mut names: Vec<String> = Vec::new();
    for r in rows {
        if !names.contains(&r.series) {
            names.push(r.series.clone());
        }
    }
    names
}

/// Distributions of per-cell sum rates (one sample per cell and redraw)
/// for both schemes at every antenna count, with 5 % outage values.
pub fn run_cdf_experiment(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    spec.validate(ExperimentKind::Cdf)?;
    let rows = sweep_antennas(spec)?;
    let mut report = base_report(spec, ExperimentKind::Cdf);
    let cells = spec.scenario.num_cells;
    for series in series_names(&rows) {
        let mut outage_curve = Vec::new();
        let mut mean_curve = Vec::new();
        for &m in &spec.antennas {
            let mut sums = vec![0.0; spec.redraws * cells];
            for r in rows.iter().filter(|r| r.series == series && r.x == m as f64) {
                sums[r.redraw * cells + r.cell] += r.rate;
            }
            let name = format!("{series}_M{m}");
            let q = outage_rate(&sums, OUTAGE_QUANTILE)?;
            report.outages.push(Outage {
                name: name.clone(),
                quantile: OUTAGE_QUANTILE,
                value: q,
            });
            outage_curve.push(CurvePoint { x: m as f64, y: q, std_err: 0.0 });
            let mean = sums.iter().sum::<f64>() / sums.len() as f64;
            let sd = (sums.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (sums.len().max(2) - 1) as f64).sqrt();
            mean_curve.push(CurvePoint {
                x: m as f64,
                y: mean,
                std_err: sd / (sums.len() as f64).sqrt(),
            });
            report.distributions.push(Distribution::new(name, sums));
        }
        report.curves.push(Curve {
            name: format!("outage05_{series}"),
            points: outage_curve,
        });
        report.curves.push(Curve {
            name: format!("mean_cell_sum_{series}"),
            points: mean_curve,
        });
    }
    report.user_rows = rows;
    Ok(report)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Mean per-user rate versus M for every series and, when both modes run,
/// bound-versus-simulation statistics per scheme:
///
/// * `gap_median_<scheme>`: median over users of `(mc - bound) / mc`
/// * `bound_valid_<scheme>`: fraction of users with `bound <= mc + 3 se`
pub fn run_rate_vs_m(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    spec.validate(ExperimentKind::RateVsM)?;
    let rows = sweep_antennas(spec)?;
    let mut report = base_report(spec, ExperimentKind::RateVsM);
    for series in series_names(&rows) {
        let points = spec
            .antennas
            .iter()
            .map(|&m| {
                let sel: Vec<&UserRow> = rows.iter().filter(|r| r.series == series && r.x == m as f64).collect();
                let n = sel.len() as f64;
                CurvePoint {
                    x: m as f64,
                    y: sel.iter().map(|r| r.rate).sum::<f64>() / n,
                    std_err: sel.iter().map(|r| r.std_err.powi(2)).sum::<f64>().sqrt() / n,
                }
            })
            .collect();
        report.curves.push(Curve { name: series, points });
    }
    if spec.mode == EvalMode::Both {
        for scheme in ["proposed", "reference"] {
            let mut gap = Vec::new();
            let mut valid = Vec::new();
            for &m in &spec.antennas {
                let pick = |prefix: &str| -> Vec<&UserRow> {
                    rows.iter()
                        .filter(|r| r.series == format!("{prefix}_{scheme}") && r.x == m as f64)
                        .collect()
                };
                let (bounds, sims) = (pick("bound"), pick("mc"));
                let gaps: Vec<f64> = bounds.iter().zip(&sims).map(|(b, s)| (s.rate - b.rate) / s.rate).collect();
                let ok = bounds
                    .iter()
                    .zip(&sims)
                    .filter(|(b, s)| b.rate <= s.rate + 3.0 * s.std_err)
                    .count();
                gap.push(CurvePoint { x: m as f64, y: median(gaps), std_err: 0.0 });
                valid.push(CurvePoint {
                    x: m as f64,
                    y: ok as f64 / bounds.len() as f64,
                    std_err: 0.0,
                });
            }
            report.curves.push(Curve {
                name: format!("gap_median_{scheme}"),
                points: gap,
            });
            report.curves.push(Curve {
                name: format!("bound_valid_{scheme}"),
                points: valid,
            });
        }
    }
    report.user_rows = rows;
    Ok(report)
}

/// Scheduler objective versus training budget. Series `approx` holds the
/// composed greedy/local-search result, `oracle` the exhaustive optimum
/// when the group count is within the brute-force guard. User rows carry
/// each user's weighted contribution, so they sum to the objective.
pub fn run_weighted_vs_tau(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    spec.validate(ExperimentKind::WeightedVsTau)?;
    let m = spec.antennas[0];
    let with_oracle = spec.num_groups() <= BRUTE_FORCE_GUARD;
    let per_redraw: Vec<Vec<UserRow>> = (0..spec.redraws)
        .into_par_iter()
        .map(|r| -> Result<Vec<UserRow>> {
            let real = realize(spec, r)?;
            let mut rows = Vec::new();
            for &tau in &spec.trained {
                let mut instance = SchedulingInstance::from_scenario(
                    &real.scenario,
                    &real.groups,
                    real.weights.clone(),
                    real.delays(),
                    tau,
                    m,
                )?;
                instance.refresh = spec.refresh;
                let mut schedules = vec![("approx", submod_max_cardinality(&instance, &spec.approx)?.schedule)];
                if with_oracle {
                    schedules.push(("oracle", brute_force_schedule(&instance)?.schedule));
                }
                for (series, y) in schedules {
                    for (group, cell, rate) in user_contributions(&instance, &y)? {
                        rows.push(UserRow {
                            redraw: r,
                            series: series.to_string(),
                            x: tau as f64,
                            group,
                            cell,
                            rate,
                            std_err: 0.0,
                        });
                    }
                }
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    let rows = per_redraw.concat();

    let mut report = base_report(spec, ExperimentKind::WeightedVsTau);
    let objective_at = |series: &str, r: usize, tau: usize| -> f64 {
        rows.iter()
            .filter(|u| u.series == series && u.redraw == r && u.x == tau as f64)
            .map(|u| u.rate)
            .sum()
    };
    let names: &[&str] = if with_oracle { &["approx", "oracle"] } else { &["approx"] };
    for &series in names {
        let points = spec
            .trained
            .iter()
            .map(|&tau| {
                let vals: Vec<f64> = (0..spec.redraws).map(|r| objective_at(series, r, tau)).collect();
                let n = vals.len() as f64;
                let mean = vals.iter().sum::<f64>() / n;
                let sd = if vals.len() > 1 {
                    (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
                } else {
                    0.0
                };
                CurvePoint { x: tau as f64, y: mean, std_err: sd / n.sqrt() }
            })
            .collect();
        report.curves.push(Curve {
            name: series.to_string(),
            points,
        });
    }
    if with_oracle {
        let points = spec
            .trained
            .iter()
            .map(|&tau| {
                let ratios: Vec<f64> = (0..spec.redraws)
                    .map(|r| {
                        let opt = objective_at("oracle", r, tau);
                        if opt > 0.0 {
                            objective_at("approx", r, tau) / opt
                        } else {
                            1.0
                        }
                    })
                    .collect();
                CurvePoint {
                    x: tau as f64,
                    y: ratios.iter().sum::<f64>() / ratios.len() as f64,
                    std_err: 0.0,
                }
            })
            .collect();
        report.curves.push(Curve {
            name: "approx_ratio".to_string(),
            points,
        });
    }
    report.user_rows = rows;
    Ok(report)
}

pub fn run(kind: ExperimentKind, spec: &ExperimentSpec) -> Result<ExperimentReport> {
    match kind {
        ExperimentKind::Cdf => run_cdf_experiment(spec),
        ExperimentKind::RateVsM => run_rate_vs_m(spec),
        ExperimentKind::WeightedVsTau => run_weighted_vs_tau(spec),
    }
}
