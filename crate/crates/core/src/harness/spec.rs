use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::SymbolModel;
use crate::error::{Error, Result};
use crate::kv::{self, Entry};
use crate::netgen::io::{apply_entry, config_to_kv};
use crate::netgen::ScenarioConfig;
use crate::scheduler::{ApproxConfig, GreedyMode, RefreshModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExperimentKind {
    Cdf,
    RateVsM,
    WeightedVsTau,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Cdf => "cdf",
            ExperimentKind::RateVsM => "rate-vs-m",
            ExperimentKind::WeightedVsTau => "weighted-vs-tau",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EvalMode {
    ClosedForm,
    MonteCarlo,
    Both,
}

impl EvalMode {
    pub fn closed_form(self) -> bool {
        matches!(self, EvalMode::ClosedForm | EvalMode::Both)
    }

    pub fn monte_carlo(self) -> bool {
        matches!(self, EvalMode::MonteCarlo | EvalMode::Both)
    }

    pub fn name(self) -> &'static str {
        match self {
            EvalMode::ClosedForm => "closed_form",
            EvalMode::MonteCarlo => "monte_carlo",
            EvalMode::Both => "both",
        }
    }
}

impl std::str::FromStr for EvalMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "closed_form" => Ok(EvalMode::ClosedForm),
            "monte_carlo" => Ok(EvalMode::MonteCarlo),
            "both" => Ok(EvalMode::Both),
            _ => Err(format!("unknown mode `{s}` (closed_form, monte_carlo, both)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum WeightsMode {
    /// Independent uniform draws on [0, 1] per user and redraw.
    UniformRandom,
    /// Every weight equal to one.
    Ones,
}

/// Parameters of one experiment. The master seed is `scenario.rng_seed`;
/// the number of groups is `scenario.users_per_cell`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub scenario: ScenarioConfig,
    /// Training budget sweep (tau). Single-budget experiments use the first.
    pub trained: Vec<usize>,
    /// Antenna sweep (M).
    pub antennas: Vec<usize>,
    pub d_max: u32,
    pub num_drops: usize,
    pub redraws: usize,
    pub weights: WeightsMode,
    pub mode: EvalMode,
    /// Longest coherence time in seconds; sets the cluster count.
    pub t_max: f64,
    pub approx: ApproxConfig,
    pub refresh: RefreshModel,
    pub symbols: SymbolModel,
    /// Hz; only used to print Mbit/s summaries.
    pub bandwidth: f64,
}

impl ExperimentSpec {
    /// Defaults of each experiment family.
    pub fn preset(kind: ExperimentKind) -> Self {
        let scenario = ScenarioConfig::default();
        let t_max = 3.0 * scenario.slot_duration;
        let base = Self {
            scenario,
            trained: vec![15],
            antennas: vec![50, 120],
            d_max: 2,
            num_drops: 1000,
            redraws: 100,
            weights: WeightsMode::UniformRandom,
            mode: EvalMode::ClosedForm,
            t_max,
            approx: ApproxConfig::default(),
            refresh: RefreshModel::default(),
            symbols: SymbolModel::default(),
            bandwidth: 200e6,
        };
        match kind {
            ExperimentKind::Cdf => Self {
                scenario: ScenarioConfig {
                    users_per_cell: 30,
                    ..base.scenario.clone()
                },
                ..base
            },
            ExperimentKind::RateVsM => Self {
                scenario: ScenarioConfig {
                    users_per_cell: 10,
                    ..base.scenario.clone()
                },
                trained: vec![5],
                antennas: vec![10, 20, 50, 100, 200],
                redraws: 20,
                mode: EvalMode::Both,
                ..base
            },
            ExperimentKind::WeightedVsTau => Self {
                scenario: ScenarioConfig {
                    users_per_cell: 20,
                    ..base.scenario.clone()
                },
                trained: (0..=20).collect(),
                antennas: vec![100],
                d_max: 3,
                redraws: 1,
                ..base
            },
        }
    }

    pub fn num_groups(&self) -> usize {
        self.scenario.users_per_cell
    }

    pub fn seed(&self) -> u64 {
        self.scenario.rng_seed
    }

    pub fn validate(&self, kind: ExperimentKind) -> Result<()> {
        self.scenario.validate()?;
        self.approx.validate()?;
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.trained.is_empty() || self.antennas.is_empty() {
            return bad("trained and antennas sweeps must be non-empty".into());
        }
        if let Some(t) = self.trained.iter().find(|&&t| t > self.num_groups()) {
            return bad(format!("trained = {t} exceeds {} groups", self.num_groups()));
        }
        if self.num_groups() > self.scenario.slot_symbols {
            return bad("more groups than symbols per slot".into());
        }
        if kind != ExperimentKind::WeightedVsTau || self.mode.monte_carlo() {
            if let Some(m) = self.antennas.iter().find(|&&m| m < 2) {
                return bad(format!("antennas = {m}; need at least 2"));
            }
        }
        if self.redraws == 0 || self.num_drops == 0 {
            return bad("redraws and drops must be at least 1".into());
        }
        if !(self.t_max > 0.0) {
            return bad("t_max must be positive".into());
        }
        Ok(())
    }

    /// Applies a `key = value` config file on top of `self`.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        for entry in kv::read(path)? {
            self.apply(&entry, path)?;
        }
        Ok(())
    }

    pub fn apply(&mut self, entry: &Entry, origin: &Path) -> Result<()> {
        if apply_entry(&mut self.scenario, entry, origin)? {
            return Ok(());
        }
        let invalid = |what: &str| {
            Error::parse(
                origin,
                format!("line {}: bad value `{}` for `{}` ({what})", entry.line, entry.value, entry.key),
            )
        };
        match entry.key.as_str() {
            "num_groups" => self.scenario.users_per_cell = kv::value(entry, origin)?,
            "trained" => self.trained = list(entry, origin)?,
            "antennas" => self.antennas = list(entry, origin)?,
            "d_max" => self.d_max = kv::value(entry, origin)?,
            "drops" => self.num_drops = kv::value(entry, origin)?,
            "redraws" => self.redraws = kv::value(entry, origin)?,
            "t_max" => self.t_max = kv::value(entry, origin)?,
            "eps" => self.approx.local_search_eps = kv::value(entry, origin)?,
            "bandwidth" => self.bandwidth = kv::value(entry, origin)?,
            "mode" => self.mode = entry.value.parse().map_err(|e: String| invalid(&e))?,
            "weights" => {
                self.weights = match entry.value.as_str() {
                    "uniform_random" => WeightsMode::UniformRandom,
                    "ones" => WeightsMode::Ones,
                    _ => return Err(invalid("uniform_random or ones")),
                }
            }
            "greedy" => {
                self.approx.greedy_mode = match entry.value.as_str() {
                    "stop" => GreedyMode::StopOnNonPositive,
                    "fill" => GreedyMode::FillBudget,
                    _ => return Err(invalid("stop or fill")),
                }
            }
            "refresh" => {
                self.refresh = match entry.value.as_str() {
                    "signal_only" => RefreshModel::SignalOnly,
                    "full" => RefreshModel::Full,
                    _ => return Err(invalid("signal_only or full")),
                }
            }
            "symbols" => {
                self.symbols = match entry.value.as_str() {
                    "unit_modulus" => SymbolModel::UnitModulus,
                    "gaussian" => SymbolModel::Gaussian,
                    _ => return Err(invalid("unit_modulus or gaussian")),
                }
            }
            _ => {
                return Err(Error::parse(
                    origin,
                    format!("line {}: unknown key `{}`", entry.line, entry.key),
                ))
            }
        }
        Ok(())
    }

    /// Renders the full spec as a config file that [`Self::apply_file`]
    /// reads back to an identical spec.
    pub fn to_kv(&self) -> String {
        let mut s = config_to_kv(&self.scenario);
        let join = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
        let _ = writeln!(s, "trained = {}", join(&self.trained));
        let _ = writeln!(s, "antennas = {}", join(&self.antennas));
        let _ = writeln!(s, "d_max = {}", self.d_max);
        let _ = writeln!(s, "drops = {}", self.num_drops);
        let _ = writeln!(s, "redraws = {}", self.redraws);
        let _ = writeln!(s, "t_max = {}  # s", self.t_max);
        let _ = writeln!(s, "eps = {}", self.approx.local_search_eps);
        let _ = writeln!(
            s,
            "greedy = {}",
            match self.approx.greedy_mode {
                GreedyMode::StopOnNonPositive => "stop",
                GreedyMode::FillBudget => "fill",
            }
        );
        let _ = writeln!(
            s,
            "refresh = {}",
            match self.refresh {
                RefreshModel::SignalOnly => "signal_only",
                RefreshModel::Full => "full",
            }
        );
        let _ = writeln!(
            s,
            "symbols = {}",
            match self.symbols {
                SymbolModel::UnitModulus => "unit_modulus",
                SymbolModel::Gaussian => "gaussian",
            }
        );
        let _ = writeln!(
            s,
            "weights = {}",
            match self.weights {
                WeightsMode::UniformRandom => "uniform_random",
                WeightsMode::Ones => "ones",
            }
        );
        let _ = writeln!(s, "mode = {}", self.mode.name());
        let _ = writeln!(s, "bandwidth = {}  # Hz", self.bandwidth);
        s
    }
}

fn list(entry: &Entry, origin: &Path) -> Result<Vec<usize>> {
    entry
        .value
        .split(',')
        .map(|part| {
            let part = part.trim();
            if let Some((lo, hi)) = part.split_once("..=") {
                let lo: usize = lo.trim().parse().ok()?;
                let hi: usize = hi.trim().parse().ok()?;
                Some((lo..=hi).collect::<Vec<_>>())
            } else {
                part.parse().ok().map(|v| vec![v])
            }
        })
        .collect::<Option<Vec<_>>>()
        .map(|parts| parts.concat())
        .ok_or_else(|| {
            Error::parse(
                origin,
                format!("line {}: `{}` expects integers or `a..=b` ranges", entry.line, entry.key),
            )
        })
}
