//! Experiment configuration: JSON parsing, defaults and grid expansion.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::pipeline::{AdaptSettings, EvalSettings, Mode};
use crate::error::{Error, Result};
use crate::readout::SplitSpec;
use crate::reservoir::{DaleMode, NetworkConfig};
use crate::tasks::TaskKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ExperimentKind {
    SweepBetaTheta,
    AdaptTrace,
    TargetRateSweep,
    CompareModes,
    InputScalingSweep,
}

/// Network size and replicate count presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    /// 200 neurons, 10 seeds.
    Desk,
    /// 500 neurons, 100 seeds.
    #[default]
    Full,
}

impl Scale {
    pub fn n_neurons(self) -> usize {
        match self {
            Scale::Desk => 200,
            Scale::Full => 500,
        }
    }

    pub fn n_seeds(self) -> usize {
        match self {
            Scale::Desk => 10,
            Scale::Full => 100,
        }
    }
}

impl std::str::FromStr for Scale {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Scale::Desk),
            "full" => Ok(Scale::Full),
            _ => Err(Error::Config(format!("unknown scale {s:?} (expected desk or full)"))),
        }
    }
}

/// Tuned per-task settings for each mode family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TaskDefaults {
    pub nonadaptive_sigma_in: f64,
    pub nonadaptive_beta: f64,
    pub nonadaptive_theta: f64,
    pub homogeneous_sigma_in: f64,
    pub homogeneous_rho_t: f64,
    pub heterogeneous_sigma_in: f64,
}

impl TaskDefaults {
    pub fn of(task: TaskKind) -> Self {
        let (a, b, c, d, e, f) = match task {
            TaskKind::MemoryCapacity => (0.016, -1.0, 0.0, 0.016, 0.5, 0.010),
            TaskKind::Narma10 => (0.1, -1.0, 0.0, 0.063, 0.3, 0.1),
            TaskKind::MackeyGlass => (0.631, -1.2, 0.0, 0.631, 0.3, 1.0),
            TaskKind::Lorenz => (2.512, -1.0, -1.0, 3.981, 0.6, 3.981),
        };
        Self {
            nonadaptive_sigma_in: a,
            nonadaptive_beta: b,
            nonadaptive_theta: c,
            homogeneous_sigma_in: d,
            homogeneous_rho_t: e,
            heterogeneous_sigma_in: f,
        }
    }

    pub fn sigma_in(&self, mode: Mode) -> f64 {
        match mode {
            Mode::NonAdaptive => self.nonadaptive_sigma_in,
            Mode::AdaptiveHomogeneous | Mode::DesignedHomogeneous => self.homogeneous_sigma_in,
            Mode::AdaptiveHeterogeneous | Mode::DesignedHeterogeneous => self.heterogeneous_sigma_in,
        }
    }

    /// Initial balance; balanced modes start from a globally balanced network.
    pub fn beta(&self, mode: Mode) -> f64 {
        if mode == Mode::NonAdaptive {
            self.nonadaptive_beta
        } else {
            0.0
        }
    }

    pub fn theta(&self, mode: Mode) -> f64 {
        if mode == Mode::NonAdaptive {
            self.nonadaptive_theta
        } else {
            0.0
        }
    }
}

/// A grid axis: an explicit list, or `{start, stop, step}` expanded with the
/// endpoint included. With `"log10": true` the range runs over exponents.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis(pub Vec<f64>);

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RangeSpec {
    start: f64,
    stop: f64,
    step: f64,
    #[serde(default)]
    log10: bool,
}

impl RangeSpec {
    fn expand(&self) -> Result<Vec<f64>> {
        let (a, b, h) = (self.start, self.stop, self.step);
        if !(a.is_finite() && b.is_finite() && h.is_finite()) || h <= 0.0 {
            return Err(Error::Config(format!("invalid range {a}..{b} step {h}")));
        }
        if b < a {
            return Err(Error::Config(format!("range stop {b} is below start {a}")));
        }
        // tolerate rounding so that the endpoint is kept
        let n = ((b - a) / h + 1e-9).floor() as usize;
        if n > 100_000 {
            return Err(Error::Config("range expands to too many values".into()));
        }
        Ok((0..=n)
            .map(|k| {
                let x = a + k as f64 * h;
                // snap values like 0.30000000000000004 to the shortest decimal
                let x = (x * 1e12).round() / 1e12;
                if self.log10 {
                    10f64.powf(x)
                } else {
                    x
                }
            })
            .collect())
    }
}

impl<'de> Deserialize<'de> for Axis {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let v = Value::deserialize(d)?;
        let values = match v {
            Value::Array(_) => serde_json::from_value::<Vec<f64>>(v).map_err(D::Error::custom)?,
            Value::Number(n) => vec![n.as_f64().ok_or_else(|| D::Error::custom("bad number"))?],
            Value::Object(_) => {
                let r: RangeSpec = serde_json::from_value(v).map_err(D::Error::custom)?;
                r.expand().map_err(D::Error::custom)?
            }
            other => return Err(D::Error::custom(format!("expected a list or a range, got {other}"))),
        };
        if values.is_empty() {
            return Err(D::Error::custom("grid axis is empty"));
        }
        if values.iter().any(|x| !x.is_finite()) {
            return Err(D::Error::custom("grid values must be finite"));
        }
        Ok(Axis(values))
    }
}

impl Serialize for Axis {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

/// Swept parameters. An absent axis takes its per-task, per-mode default.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<Axis>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<Axis>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho_t: Option<Axis>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_in: Option<Axis>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub excit_fraction: Option<Axis>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dale: Option<Vec<DaleMode>>,
}

/// Coarse `(beta, theta)` search for the tuned non-adaptive reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineSearch {
    pub beta: Axis,
    pub theta: Axis,
    /// Replicates per search point, on seeds disjoint from the main run.
    pub n_seeds: usize,
}

impl BaselineSearch {
    fn default_for(task: TaskKind) -> Self {
        let d = TaskDefaults::of(task);
        let mut beta = vec![-3.0, -2.0, -1.0, -0.5, 0.0];
        let mut theta = vec![-1.0, -0.5, 0.0, 0.5];
        for (axis, v) in [(&mut beta, d.nonadaptive_beta), (&mut theta, d.nonadaptive_theta)] {
            if !axis.contains(&v) {
                axis.push(v);
                axis.sort_by(f64::total_cmp);
            }
        }
        Self { beta: Axis(beta), theta: Axis(theta), n_seeds: 3 }
    }
}

/// Fully resolved experiment description.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSpec {
    pub experiment: ExperimentKind,
    pub task: TaskKind,
    /// Balancing mode for every experiment except `CompareModes`.
    pub mode: Mode,
    /// Modes compared by `CompareModes`.
    pub modes: Vec<Mode>,
    pub scale: Scale,
    pub n_seeds: usize,
    pub seed: u64,
    pub network: NetworkConfig,
    pub grid: Grid,
    pub baseline: Option<BaselineSearch>,
    pub split: SplitSpec,
    pub adaptation: AdaptSettings,
    pub eval: EvalSettings,
    pub task_defaults: TaskDefaults,
    pub output_path: Option<PathBuf>,
    pub workers: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    experiment: ExperimentKind,
    task: TaskKind,
    mode: Option<Mode>,
    modes: Option<Vec<Mode>>,
    scale: Option<Scale>,
    n_seeds: Option<usize>,
    seed: Option<u64>,
    reservoir: Option<Map<String, Value>>,
    grid: Option<Grid>,
    baseline: Option<BaselineSearch>,
    split: Option<SplitSpec>,
    adaptation: Option<AdaptSettings>,
    eval: Option<EvalSettings>,
    output_path: Option<PathBuf>,
    workers: Option<usize>,
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub n_seeds: Option<usize>,
    pub workers: Option<usize>,
    pub scale: Option<Scale>,
    pub output_path: Option<PathBuf>,
}

pub fn parse_config(path: &Path) -> Result<ExperimentSpec> {
    parse_config_with(path, &Overrides::default())
}

pub fn parse_config_with(path: &Path, overrides: &Overrides) -> Result<ExperimentSpec> {
    let text = std::fs::read_to_string(path)?;
    parse_config_str(&text, overrides)
}

pub fn parse_config_str(text: &str, overrides: &Overrides) -> Result<ExperimentSpec> {
    let raw: RawSpec = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    resolve(raw, overrides)
}

fn resolve(raw: RawSpec, ov: &Overrides) -> Result<ExperimentSpec> {
    let scale = ov.scale.or(raw.scale).unwrap_or_default();
    let n_seeds = ov.n_seeds.or(raw.n_seeds).unwrap_or(scale.n_seeds());
    if n_seeds == 0 {
        return Err(Error::Config("n_seeds must be at least 1".into()));
    }

    let mut net = serde_json::to_value(NetworkConfig { n_neurons: scale.n_neurons(), ..Default::default() })?;
    if let Some(user) = raw.reservoir {
        let obj = net.as_object_mut().expect("config serializes to an object");
        for (k, v) in user {
            if !obj.contains_key(&k) {
                return Err(Error::Config(format!("unknown reservoir key `{k}`")));
            }
            obj.insert(k, v);
        }
    }
    let network: NetworkConfig =
        serde_json::from_value(net).map_err(|e| Error::Config(format!("reservoir: {e}")))?;

    let experiment = raw.experiment;
    let task = raw.task;
    let default_mode = match experiment {
        ExperimentKind::SweepBetaTheta | ExperimentKind::InputScalingSweep => Mode::NonAdaptive,
        _ => Mode::AdaptiveHomogeneous,
    };
    let mode = raw.mode.unwrap_or(default_mode);
    let modes = raw.modes.unwrap_or_else(|| Mode::ALL.to_vec());
    if modes.is_empty() {
        return Err(Error::Config("modes must not be empty".into()));
    }
    if experiment == ExperimentKind::TargetRateSweep && mode.is_heterogeneous() {
        return Err(Error::Config("a target-rate sweep needs a homogeneous mode".into()));
    }
    if experiment == ExperimentKind::AdaptTrace && !mode.is_adaptive() {
        return Err(Error::Config("an adaptation trace needs an adaptive mode".into()));
    }

    let mut grid = raw.grid.unwrap_or_default();
    match experiment {
        ExperimentKind::SweepBetaTheta => {
            grid.beta.get_or_insert_with(|| Axis((0..=12).map(|k| -4.0 + 0.5 * k as f64).collect()));
            grid.theta.get_or_insert_with(|| Axis(vec![0.0]));
        }
        ExperimentKind::AdaptTrace => {
            grid.beta.get_or_insert_with(|| Axis(vec![-3.0, -1.0, 0.0, 1.0, 2.0]));
        }
        ExperimentKind::TargetRateSweep => {
            grid.rho_t.get_or_insert_with(|| Axis((2..=8).map(|k| k as f64 / 10.0).collect()));
        }
        ExperimentKind::InputScalingSweep => {
            // 10^-2 .. 10^0.6 in steps of 10^0.2
            grid.sigma_in.get_or_insert_with(|| {
                Axis((0..=13).map(|k| 10f64.powf(((-10 + k) as f64 * 0.2 * 1e12).round() / 1e12)).collect())
            });
        }
        ExperimentKind::CompareModes => {}
    }
    if let Some(d) = &grid.dale {
        if d.is_empty() {
            return Err(Error::Config("grid axis dale is empty".into()));
        }
    }

    let baseline = if experiment == ExperimentKind::CompareModes && modes.contains(&Mode::NonAdaptive) {
        let b = raw.baseline.unwrap_or_else(|| BaselineSearch::default_for(task));
        if b.n_seeds == 0 {
            return Err(Error::Config("baseline n_seeds must be at least 1".into()));
        }
        Some(b)
    } else {
        raw.baseline
    };

    let mut adaptation = raw.adaptation.unwrap_or_default();
    if experiment == ExperimentKind::AdaptTrace && adaptation.eval_every.is_none() {
        adaptation.eval_every = Some(500);
    }
    if !(adaptation.delta >= 0.0) {
        return Err(Error::Config("adaptation delta must be non-negative".into()));
    }
    let split = raw.split.unwrap_or_default();
    if split.train_len == 0 || split.test_len < 2 {
        return Err(Error::Config("train_len must be positive and test_len at least 2".into()));
    }
    let eval = raw.eval.unwrap_or_default();
    if !(eval.ridge >= 0.0) || eval.diag_window < 2 || eval.corr_pairs == 0 {
        return Err(Error::Config("eval: ridge >= 0, diag_window >= 2, corr_pairs >= 1".into()));
    }
    let workers = ov.workers.or(raw.workers).unwrap_or(1);
    if workers == 0 {
        return Err(Error::Config("workers must be at least 1".into()));
    }

    let spec = ExperimentSpec {
        experiment,
        task,
        mode,
        modes,
        scale,
        n_seeds,
        seed: raw.seed.unwrap_or(0),
        network,
        grid,
        baseline,
        split,
        adaptation,
        eval,
        task_defaults: TaskDefaults::of(task),
        output_path: ov.output_path.clone().or(raw.output_path),
        workers,
    };
    // surface invalid network settings before any work starts
    for cell in spec.cells() {
        spec.network_for(&cell).validate()?;
    }
    Ok(spec)
}

/// Parameters of one grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cell {
    pub index: usize,
    pub mode: Mode,
    pub beta: f64,
    pub theta: f64,
    pub rho_t: f64,
    pub sigma_in: f64,
    pub excit_fraction: f64,
    pub dale: DaleMode,
}

impl ExperimentSpec {
    /// Cartesian product of the grid (and of the compared modes), in a fixed
    /// order: mode, excit_fraction, dale, sigma_in, beta, theta, rho_t.
    pub fn cells(&self) -> Vec<Cell> {
        let modes: Vec<Mode> = if self.experiment == ExperimentKind::CompareModes {
            self.modes.clone()
        } else {
            vec![self.mode]
        };
        let d = &self.task_defaults;
        let axis = |a: &Option<Axis>, default: f64| a.as_ref().map_or(vec![default], |a| a.0.clone());
        let mut out = Vec::new();
        for &mode in &modes {
            for &f_e in &axis(&self.grid.excit_fraction, self.network.excit_fraction) {
                for &dale in self.grid.dale.as_deref().unwrap_or(&[self.network.dale]) {
                    for &sigma_in in &axis(&self.grid.sigma_in, d.sigma_in(mode)) {
                        for &beta in &axis(&self.grid.beta, d.beta(mode)) {
                            for &theta in &axis(&self.grid.theta, d.theta(mode)) {
                                for &rho_t in &axis(&self.grid.rho_t, d.homogeneous_rho_t) {
                                    out.push(Cell {
                                        index: out.len(),
                                        mode,
                                        beta,
                                        theta,
                                        rho_t,
                                        sigma_in,
                                        excit_fraction: f_e,
                                        dale,
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// Network configuration of `cell` (seed filled in per run).
    pub fn network_for(&self, cell: &Cell) -> NetworkConfig {
        NetworkConfig {
            beta: cell.beta,
            theta: cell.theta,
            input_spread: cell.sigma_in,
            excit_fraction: cell.excit_fraction,
            dale: cell.dale,
            ..self.network.clone()
        }
    }
}
