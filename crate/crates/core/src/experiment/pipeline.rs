//! One reservoir, one task, one seed: build, balance, train, score.

use ndarray::{s, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::balance::{
    adapt, design_one_step, sample_targets, AdaptationConfig, InputSource, TargetMode, TraceRecord,
};
use crate::error::{Error, Result};
use crate::metrics::{
    classify_regime, kl_entropy, memory_capacity, r_squared, rmse, vpt, CorrelationMode, Regime,
};
use crate::readout::{predict_closed_loop, train_ridge, Readout, SplitSpec};
use crate::reservoir::{build_reservoir, EIReservoir, NetworkConfig};
use crate::seed;
use crate::tasks::{generate, TaskData, TaskKind};

/// How inhibition is set before the readout is trained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    NonAdaptive,
    AdaptiveHomogeneous,
    AdaptiveHeterogeneous,
    DesignedHomogeneous,
    DesignedHeterogeneous,
}

impl Mode {
    pub const ALL: [Mode; 5] = [
        Mode::NonAdaptive,
        Mode::AdaptiveHomogeneous,
        Mode::AdaptiveHeterogeneous,
        Mode::DesignedHomogeneous,
        Mode::DesignedHeterogeneous,
    ];

    pub fn is_adaptive(self) -> bool {
        matches!(self, Mode::AdaptiveHomogeneous | Mode::AdaptiveHeterogeneous)
    }

    pub fn is_designed(self) -> bool {
        matches!(self, Mode::DesignedHomogeneous | Mode::DesignedHeterogeneous)
    }

    pub fn is_heterogeneous(self) -> bool {
        matches!(self, Mode::AdaptiveHeterogeneous | Mode::DesignedHeterogeneous)
    }

    pub fn targets(self, rho_t: f64, seed: u64) -> Option<TargetMode> {
        match self {
            Mode::NonAdaptive => None,
            Mode::AdaptiveHomogeneous | Mode::DesignedHomogeneous => {
                Some(TargetMode::Homogeneous { rho_t })
            }
            Mode::AdaptiveHeterogeneous | Mode::DesignedHeterogeneous => {
                Some(TargetMode::beta_default(seed))
            }
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        std::fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdaptSettings {
    pub delta: f64,
    pub n_steps: usize,
    /// Score the task every this many adaptation steps (trace runs only).
    pub eval_every: Option<usize>,
    pub record_every: usize,
}

impl Default for AdaptSettings {
    fn default() -> Self {
        Self { delta: 1e-3, n_steps: 20_000, eval_every: None, record_every: 500 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSettings {
    pub ridge: f64,
    pub bias: bool,
    pub vpt_threshold: f64,
    pub vpt_window: usize,
    /// Trailing post-washout samples used for rate, entropy and correlation
    /// diagnostics.
    pub diag_window: usize,
    pub corr_pairs: usize,
}

impl Default for EvalSettings {
    fn default() -> Self {
        Self {
            ridge: crate::readout::DEFAULT_RIDGE,
            bias: true,
            vpt_threshold: crate::metrics::DEFAULT_VPT_THRESHOLD,
            vpt_window: crate::metrics::DEFAULT_VPT_WINDOW,
            diag_window: 10_000,
            corr_pairs: 1_000,
        }
    }
}

/// Everything that determines a single run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunParams {
    pub network: NetworkConfig,
    pub task: TaskKind,
    pub mode: Mode,
    pub rho_t: f64,
    pub split: SplitSpec,
    pub adaptation: AdaptSettings,
    pub eval: EvalSettings,
    /// Score the task before balancing as well.
    pub score_before: bool,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeuronDiagnostics {
    pub mean_rate: Vec<f64>,
    /// Per-neuron differential entropy; `-inf` for constant neurons.
    pub entropy: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub mean_rate: f64,
    /// Mean over neurons with finite entropy.
    pub mean_entropy: f64,
    pub mean_corr: f64,
    pub regime: Regime,
    /// Fraction of neurons whose mean rate lies outside (0.05, 0.95).
    pub frac_extreme: f64,
    pub neurons: NeuronDiagnostics,
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub metric: f64,
    pub readout: Readout<f64>,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub metric: f64,
    pub metric_before: Option<f64>,
    pub initial_beta: f64,
    pub final_beta: f64,
    pub diagnostics: Diagnostics,
    pub trace: Vec<TraceRecord>,
    pub design_issues: usize,
    pub task_regenerations: u32,
    pub reservoir: EIReservoir<f64>,
    pub readout: Readout<f64>,
}

/// Task samples needed for `split`; closed-loop tasks take their test span
/// from the held-out continuation of the input series.
pub fn series_len(split: &SplitSpec) -> usize {
    split.total()
}

/// Input process used while adapting, matched to the task input.
pub fn adaptation_input(data: &TaskData<f64>, split: &SplitSpec) -> InputSource {
    match data.task {
        TaskKind::MemoryCapacity => InputSource::Uniform { low: 0.0, high: 1.0 },
        TaskKind::Narma10 => InputSource::Uniform { low: 0.0, high: 0.5 },
        TaskKind::MackeyGlass | TaskKind::Lorenz => {
            InputSource::Series(data.inputs[..split.washout + split.train_len].to_vec())
        }
    }
}

/// Applies the balancing step of `params.mode` to `res`.
///
/// Returns the adaptation trace (empty unless adaptive) and the number of
/// design warnings.
pub fn balance_reservoir(
    res: &mut EIReservoir<f64>,
    params: &RunParams,
    data: &TaskData<f64>,
) -> Result<(Vec<TraceRecord>, usize)> {
    let Some(target_mode) = params.mode.targets(params.rho_t, params.seed) else {
        return Ok((Vec::new(), 0));
    };
    let targets = sample_targets::<f64>(target_mode, res.len())?;
    if params.mode.is_designed() {
        let report = design_one_step(res, &targets, data.mean_input())?;
        return Ok((Vec::new(), report.issues.len()));
    }
    let cfg = AdaptationConfig {
        delta: params.adaptation.delta,
        n_steps: params.adaptation.n_steps,
        eval_every: params.adaptation.eval_every,
        record_every: params.adaptation.record_every,
        input: adaptation_input(data, &params.split),
        seed: params.seed,
        ..Default::default()
    };
    let outcome = if cfg.eval_every.is_some() {
        let eval = |r: &EIReservoir<f64>| -> Result<(String, f64)> {
            let e = evaluate(r, data, &params.split, &params.eval, params.seed)?;
            Ok((data.task.metric_name().to_string(), e.metric))
        };
        adapt(res, &targets, &cfg, Some(eval))?
    } else {
        adapt(res, &targets, &cfg, None::<fn(&EIReservoir<f64>) -> Result<(String, f64)>>)?
    };
    Ok((outcome.trace, 0))
}

/// Scores a copy of `res` on `data`: reset, wash out, train the readout on
/// the training span and evaluate on the test span. `res` is not modified.
pub fn evaluate(
    res: &EIReservoir<f64>,
    data: &TaskData<f64>,
    split: &SplitSpec,
    eval: &EvalSettings,
    seed: u64,
) -> Result<Evaluation> {
    split.validate(data.len())?;
    let mut res = res.clone();
    res.reset_state();
    let train = split.train_range();
    let test = split.test_range();
    let train_start = train.start.max(data.valid_from);
    if train_start >= train.end {
        return Err(Error::Config("training span lies inside the undefined-history prefix".into()));
    }

    let closed = data.task.closed_loop();
    let drive_to = if closed { train.end } else { test.end };
    let states = res.run_open_loop(&data.inputs[..drive_to])?;
    let readout = train_ridge(
        states.slice(s![train_start..train.end, ..]),
        data.targets.slice(s![train_start..train.end, ..]),
        eval.ridge,
        eval.bias,
    )?;

    let metric = match data.task {
        TaskKind::MemoryCapacity => {
            let pred = readout.predict(states.slice(s![test.clone(), ..]))?;
            let truth = data.targets.slice(s![test.clone(), ..]);
            let mut profile = Vec::with_capacity(truth.ncols());
            for d in 0..truth.ncols() {
                let t = truth.column(d).to_vec();
                let p = pred.column(d).to_vec();
                profile.push(r_squared(&t, &p)?.value);
            }
            memory_capacity(&profile)
        }
        TaskKind::Narma10 => {
            let pred = readout.predict(states.slice(s![test.clone(), ..]))?;
            let truth = data.targets.slice(s![test.clone(), 0]).to_vec();
            rmse(&truth, &pred.column(0).to_vec())?
        }
        TaskKind::MackeyGlass | TaskKind::Lorenz => {
            let run = predict_closed_loop(&mut res, &readout, split.test_len)?;
            let truth = &data.inputs[test.clone()];
            let mut pred = run.outputs;
            // a diverged run counts as wrong from the cut onwards
            pred.resize(truth.len(), f64::INFINITY);
            vpt(truth, &pred, eval.vpt_threshold, eval.vpt_window)? as f64
        }
    };

    let post = states.slice(s![split.washout.., ..]);
    let from = post.nrows().saturating_sub(eval.diag_window);
    let diagnostics = diagnose(post.slice(s![from.., ..]), eval, seed)?;
    Ok(Evaluation { metric, readout, diagnostics })
}

/// Rate, entropy and correlation summaries of a post-washout rate history.
pub fn diagnose(states: ArrayView2<f64>, eval: &EvalSettings, seed: u64) -> Result<Diagnostics> {
    if states.nrows() < 2 {
        return Err(Error::Degenerate("diagnostics need at least two samples".into()));
    }
    let mean_rate_per: Vec<f64> = states.mean_axis(Axis(0)).map(|m| m.to_vec()).unwrap_or_default();
    let entropy: Vec<f64> = states
        .columns()
        .into_iter()
        .map(|c| kl_entropy(&c.to_vec()).map(|h| h.value))
        .collect::<Result<_>>()?;
    let finite: Vec<f64> = entropy.iter().copied().filter(|h| h.is_finite()).collect();
    let mean_entropy = if finite.is_empty() {
        f64::NEG_INFINITY
    } else {
        finite.iter().sum::<f64>() / finite.len() as f64
    };
    let mode = CorrelationMode::Sampled { n_pairs: eval.corr_pairs, seed };
    let label = classify_regime(states, mode);
    let n = mean_rate_per.len().max(1) as f64;
    let frac_extreme = mean_rate_per.iter().filter(|&&r| !(r > 0.05 && r < 0.95)).count() as f64 / n;
    Ok(Diagnostics {
        mean_rate: label.mean_rate,
        mean_entropy,
        mean_corr: label.mean_corr,
        regime: label.label,
        frac_extreme,
        neurons: NeuronDiagnostics { mean_rate: mean_rate_per, entropy },
    })
}

/// Full pipeline for one run.
pub fn run_single(params: &RunParams) -> Result<RunOutput> {
    let mut network = params.network.clone();
    network.seed = params.seed;
    let mut res = build_reservoir::<f64>(&network)?;
    let task_seed = seed::derive(params.seed, &[seed::stream::TASK]);
    let data: TaskData<f64> = generate(params.task, series_len(&params.split), task_seed)?;

    let metric_before = if params.score_before {
        Some(evaluate(&res, &data, &params.split, &params.eval, params.seed)?.metric)
    } else {
        None
    };
    let initial_beta = res.global_balance();
    let (trace, design_issues) = balance_reservoir(&mut res, params, &data)?;
    let final_beta = res.global_balance();
    let e = evaluate(&res, &data, &params.split, &params.eval, params.seed)?;
    Ok(RunOutput {
        metric: e.metric,
        metric_before,
        initial_beta,
        final_beta,
        diagnostics: e.diagnostics,
        trace,
        design_issues,
        task_regenerations: data.regenerations,
        reservoir: res,
        readout: e.readout,
    })
}

/// Mean and standard error of the finite entries.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (m, f64::NAN);
    }
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}
