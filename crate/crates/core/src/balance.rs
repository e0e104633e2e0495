//! Steering a reservoir toward target firing rates by rescaling inhibition.
//!
//! Two mechanisms act only on the inhibitory magnitudes `A_I`:
//! an online rule that nudges every inhibitory in-link of neuron `i` by
//! `delta * (r_i - rho_i)` after each dynamics step, and a one-step design
//! that multiplies row `i` of `A_I` by the factor solving the mean-field
//! steady state `r = rho`.

use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reservoir::{inverse_sigmoid, EIReservoir};
use crate::scalar::Real;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TargetMode {
    Homogeneous { rho_t: f64 },
    /// I.i.d. `Beta(a, b)` targets.
    Heterogeneous { a: f64, b: f64, seed: u64 },
}

impl TargetMode {
    pub fn beta_default(seed: u64) -> Self {
        TargetMode::Heterogeneous { a: 9.0, b: 9.0, seed }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetRates<T> {
    pub mode: TargetMode,
    pub rho: Vec<T>,
}

impl<T: Real> TargetRates<T> {
    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }
}

/// Draws per-neuron targets for `n` neurons.
pub fn sample_targets<T: Real>(mode: TargetMode, n: usize) -> Result<TargetRates<T>> {
    let rho = match mode {
        TargetMode::Homogeneous { rho_t } => {
            if !(rho_t > 0.0 && rho_t < 1.0) {
                return Err(Error::Config(format!("target rate must lie in (0,1), got {rho_t}")));
            }
            vec![T::lit(rho_t); n]
        }
        TargetMode::Heterogeneous { a, b, seed } => {
            let dist = Beta::new(a, b)
                .map_err(|e| Error::Config(format!("Beta({a}, {b}): {e}")))?;
            let mut rng = seed::rng(seed, seed::stream::TARGETS);
            (0..n)
                .map(|_| {
                    // keep targets strictly interior; Beta can round to 0 or 1
                    // for small shape parameters
                    let v: f64 = dist.sample(&mut rng);
                    T::lit(v.clamp(f64::EPSILON, 1.0 - f64::EPSILON))
                })
                .collect()
        }
    };
    Ok(TargetRates { mode, rho })
}

/// Process driving the reservoir while it adapts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum InputSource {
    Uniform { low: f64, high: f64 },
    /// Replayed cyclically.
    Series(Vec<f64>),
}

impl InputSource {
    fn stream(&self, seed: u64) -> Box<dyn Iterator<Item = f64> + '_> {
        match self {
            InputSource::Uniform { low, high } => {
                let mut rng = seed::rng(seed, seed::stream::ADAPT_INPUT);
                let (lo, hi) = (*low, *high);
                Box::new(std::iter::repeat_with(move || {
                    if hi > lo {
                        rng.gen_range(lo..hi)
                    } else {
                        lo
                    }
                }))
            }
            InputSource::Series(v) => Box::new(v.iter().copied().cycle()),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            InputSource::Uniform { low, high } => 0.5 * (low + high),
            InputSource::Series(v) if v.is_empty() => 0.0,
            InputSource::Series(v) => v.iter().sum::<f64>() / v.len() as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptationConfig {
    pub delta: f64,
    pub n_steps: usize,
    /// Evaluate the task metric every this many steps.
    pub eval_every: Option<usize>,
    /// Cadence of β / mean-rate trace records.
    pub record_every: usize,
    /// Length of the trailing window over which per-neuron mean rates are
    /// reported at the end.
    pub rate_window: usize,
    pub input: InputSource,
    pub seed: u64,
}

impl Default for AdaptationConfig {
    fn default() -> Self {
        Self {
            delta: 1e-3,
            n_steps: 20_000,
            eval_every: None,
            record_every: 500,
            rate_window: 2_000,
            input: InputSource::Uniform { low: 0.0, high: 1.0 },
            seed: 0,
        }
    }
}

/// One row of an adaptation trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub step: usize,
    pub beta: f64,
    /// Mean over neurons and over the steps since the previous record.
    pub mean_rate: f64,
    pub metric_name: Option<String>,
    pub metric_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptationOutcome<T> {
    pub trace: Vec<TraceRecord>,
    /// Per-neuron mean rate over the last `rate_window` steps.
    pub mean_rates: Vec<T>,
}

/// Applies one update of the inhibitory rule using the current rates.
///
/// Every existing inhibitory link into neuron `i` moves by
/// `delta * (r_i - rho_i)` and is clamped at zero. Links are never created.
pub fn adapt_step<T: Real>(res: &mut EIReservoir<T>, targets: &TargetRates<T>, delta: T) {
    debug_assert_eq!(targets.len(), res.len());
    let rates = res.rates.clone();
    let inh = res.inhibitory_mut();
    for i in 0..rates.len() {
        let drive = delta * (rates[i] - targets.rho[i]);
        for w in inh.row_values_mut(i) {
            *w = (*w + drive).max(T::zero());
        }
    }
}

/// Runs the dynamics with interleaved inhibitory adaptation.
///
/// `evaluate` is called with the reservoir before the first step and then
/// every `eval_every` steps; it should work on a copy so the adapting
/// network is frozen while it is scored.
pub fn adapt<T, F>(
    res: &mut EIReservoir<T>,
    targets: &TargetRates<T>,
    cfg: &AdaptationConfig,
    mut evaluate: Option<F>,
) -> Result<AdaptationOutcome<T>>
where
    T: Real,
    F: FnMut(&EIReservoir<T>) -> Result<(String, f64)>,
{
    if !(cfg.delta >= 0.0) {
        return Err(Error::Config(format!("delta must be non-negative, got {}", cfg.delta)));
    }
    if targets.len() != res.len() {
        return Err(Error::Dimension { expected: res.len(), found: targets.len() });
    }
    let n = res.len();
    let delta = T::lit(cfg.delta);
    let record_every = cfg.record_every.max(1);
    let window_start = cfg.n_steps.saturating_sub(cfg.rate_window);

    let mut trace = Vec::new();
    let mut scored = |res: &EIReservoir<T>, step: usize| -> Result<(Option<String>, Option<f64>)> {
        match evaluate.as_mut() {
            Some(f) if step == 0 || cfg.eval_every.map_or(false, |k| k > 0 && step % k == 0) => {
                let (name, v) = f(res)?;
                Ok((Some(name), Some(v)))
            }
            _ => Ok((None, None)),
        }
    };

    let (metric_name, metric_value) = scored(res, 0)?;
    trace.push(TraceRecord {
        step: 0,
        beta: res.global_balance().as_f64(),
        mean_rate: mean(res.rates()),
        metric_name,
        metric_value,
    });

    let mut inputs = cfg.input.stream(cfg.seed);
    let mut rate_acc = 0.0;
    let mut rate_count = 0usize;
    let mut window_sum = vec![T::zero(); n];
    for step in 1..=cfg.n_steps {
        let u = inputs.next().unwrap_or(0.0);
        res.step(T::lit(u))?;
        adapt_step(res, targets, delta);

        rate_acc += mean(res.rates());
        rate_count += 1;
        if step > window_start {
            for (acc, &r) in window_sum.iter_mut().zip(res.rates()) {
                *acc += r;
            }
        }

        let at_record = step % record_every == 0 || step == cfg.n_steps;
        let at_eval = cfg.eval_every.map_or(false, |k| k > 0 && step % k == 0);
        if at_record || at_eval {
            if !res.weights_finite() {
                return Err(Error::Diverged { step, trace });
            }
            let (metric_name, metric_value) = scored(res, step)?;
            trace.push(TraceRecord {
                step,
                beta: res.global_balance().as_f64(),
                mean_rate: rate_acc / rate_count as f64,
                metric_name,
                metric_value,
            });
            rate_acc = 0.0;
            rate_count = 0;
        }
    }

    let window = T::from_usize_lossy((cfg.n_steps - window_start).max(1));
    let mean_rates = if cfg.n_steps == 0 {
        res.rates().to_vec()
    } else {
        window_sum.into_iter().map(|s| s / window).collect()
    };
    Ok(AdaptationOutcome { trace, mean_rates })
}

fn mean<T: Real>(v: &[T]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.iter().map(|x| x.as_f64()).sum::<f64>() / v.len() as f64
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum DesignIssue {
    /// The factor came out negative; the row was zeroed.
    NegativeFactor,
    /// No inhibitory drive to scale while a correction was required.
    Unreachable,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DesignReport {
    /// Applied per-neuron factors; `None` where the row was left untouched.
    pub factors: Vec<Option<f64>>,
    pub issues: Vec<(usize, DesignIssue)>,
}

/// Rescales each inhibitory row by the factor that makes `r = rho` a
/// mean-field steady state under constant input `mean_input`.
///
/// For neuron `i` the factor is
/// `(V*_i (1 - leak_i) - W_in[i] <u> - Σ_j A_E[i,j] rho_j) / (-Σ_j A_I[i,j] rho_j)`
/// with `V*_i = sigmoid⁻¹(rho_i) + theta_i`.
pub fn design_one_step<T: Real>(
    res: &mut EIReservoir<T>,
    targets: &TargetRates<T>,
    mean_input: T,
) -> Result<DesignReport> {
    let n = res.len();
    if targets.len() != n {
        return Err(Error::Dimension { expected: n, found: targets.len() });
    }
    if res.inhibitory().values().iter().any(|&w| w < T::zero()) {
        return Err(Error::Config(
            "design requires non-negative inhibitory magnitudes".into(),
        ));
    }
    let c = res.steepness();
    let rho = &targets.rho;
    let mut report = DesignReport { factors: vec![None; n], issues: Vec::new() };
    for i in 0..n {
        let v_star = inverse_sigmoid(rho[i], c)? + res.thresholds[i];
        let numerator = v_star * (T::one() - res.leak[i])
            - res.input_weights[i] * mean_input
            - res.excitatory().row_dot(i, rho);
        let denominator = -res.inhibitory().row_dot(i, rho);
        if denominator == T::zero() {
            if numerator != T::zero() {
                report.issues.push((i, DesignIssue::Unreachable));
            }
            continue;
        }
        let omega = numerator / denominator;
        let row = res.inhibitory_mut().row_values_mut(i);
        if omega < T::zero() {
            row.iter_mut().for_each(|w| *w = T::zero());
            report.issues.push((i, DesignIssue::NegativeFactor));
            report.factors[i] = Some(0.0);
        } else {
            row.iter_mut().for_each(|w| *w *= omega);
            report.factors[i] = Some(omega.as_f64());
        }
    }
    if !report.issues.is_empty() {
        log::warn!("design left {} neurons off target", report.issues.len());
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reservoir::{build_reservoir, NetworkConfig, NeuronType, ReservoirParts};
    use approx::assert_abs_diff_eq;
    use ndarray::Array2;

    fn two_neuron(inh: f64) -> EIReservoir<f64> {
        let mut inhibitory = Array2::zeros((2, 2));
        inhibitory[(0, 1)] = inh;
        EIReservoir::from_parts(ReservoirParts {
            excitatory: Array2::zeros((2, 2)),
            inhibitory,
            input_weights: vec![0.0; 2],
            thresholds: vec![0.0; 2],
            leak: vec![0.0; 2],
            steepness: 10.0,
            neuron_types: vec![NeuronType::Excitatory, NeuronType::Inhibitory],
        })
        .unwrap()
    }

    #[test]
    fn homogeneous_targets() {
        let t = sample_targets::<f64>(TargetMode::Homogeneous { rho_t: 0.5 }, 4).unwrap();
        assert_eq!(t.rho, vec![0.5; 4]);
        assert!(sample_targets::<f64>(TargetMode::Homogeneous { rho_t: 1.0 }, 4).is_err());
        assert!(sample_targets::<f64>(TargetMode::Homogeneous { rho_t: 0.0 }, 4).is_err());
    }

    #[test]
    fn beta_targets_moments() {
        let t = sample_targets::<f64>(TargetMode::beta_default(3), 100_000).unwrap();
        let m = t.rho.iter().sum::<f64>() / 1e5;
        let v = t.rho.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (1e5 - 1.0);
        assert!((m - 0.5).abs() < 0.002, "mean {m}");
        // a b / ((a+b)^2 (a+b+1)) = 81 / (324 * 19) = 1/76
        assert!((v / (1.0 / 76.0) - 1.0).abs() < 0.05, "variance {v}");
        assert!(t.rho.iter().all(|&x| x > 0.0 && x < 1.0));
    }

    #[test]
    fn adapt_step_literal_update() {
        let mut res = two_neuron(0.1);
        res.set_rates(&[0.7, 0.5]).unwrap();
        let t = sample_targets(TargetMode::Homogeneous { rho_t: 0.5 }, 2).unwrap();
        adapt_step(&mut res, &t, 1e-3);
        assert_abs_diff_eq!(res.inhibitory().get(0, 1), 0.1002, epsilon = 1e-15);
    }

    #[test]
    fn adapt_step_no_drive_at_target() {
        let mut res = two_neuron(0.1);
        res.set_rates(&[0.5, 0.5]).unwrap();
        let t = sample_targets(TargetMode::Homogeneous { rho_t: 0.5 }, 2).unwrap();
        adapt_step(&mut res, &t, 1e-3);
        assert_eq!(res.inhibitory().get(0, 1), 0.1);
    }

    #[test]
    fn adapt_step_clamps_at_zero() {
        let mut res = two_neuron(1e-5);
        res.set_rates(&[0.3, 0.5]).unwrap();
        let t = TargetRates { mode: TargetMode::Homogeneous { rho_t: 0.8 }, rho: vec![0.8, 0.8] };
        adapt_step(&mut res, &t, 1e-3);
        assert_eq!(res.inhibitory().get(0, 1), 0.0);
        assert_eq!(res.inhibitory().nnz(), 1, "clamped link still exists");
    }

    #[test]
    fn zero_learning_rate_leaves_weights() {
        let cfg = NetworkConfig { n_neurons: 100, seed: 4, ..Default::default() };
        let mut res = build_reservoir::<f64>(&cfg).unwrap();
        let before = res.inhibitory().clone();
        let t = sample_targets(TargetMode::Homogeneous { rho_t: 0.5 }, 100).unwrap();
        let acfg = AdaptationConfig { delta: 0.0, n_steps: 200, ..Default::default() };
        adapt(&mut res, &t, &acfg, None::<fn(&EIReservoir<f64>) -> Result<(String, f64)>>).unwrap();
        assert_eq!(res.inhibitory(), &before);
    }

    #[test]
    fn design_numerator_zero_gives_zero_factor() {
        // neuron 0: one excitatory link from neuron 1 plus an inhibitory one
        let rho_i: f64 = 0.6;
        let rho_j = 0.5;
        let w_e = inverse_sigmoid(rho_i, 10.0).unwrap() / rho_j;
        let mut exc = Array2::zeros((2, 2));
        exc[(0, 1)] = w_e;
        let mut inh = Array2::zeros((2, 2));
        inh[(0, 1)] = 0.2;
        let mut res = EIReservoir::from_parts(ReservoirParts {
            excitatory: exc,
            inhibitory: inh,
            input_weights: vec![0.0; 2],
            thresholds: vec![0.0; 2],
            leak: vec![0.0; 2],
            steepness: 10.0,
            neuron_types: vec![NeuronType::Excitatory; 2],
        })
        .unwrap();
        let t = TargetRates { mode: TargetMode::Homogeneous { rho_t: 0.5 }, rho: vec![rho_i, rho_j] };
        let report = design_one_step(&mut res, &t, 0.0).unwrap();
        assert_abs_diff_eq!(report.factors[0].unwrap(), 0.0, epsilon = 1e-12);
        assert!(report.issues.is_empty());
    }

    #[test]
    fn design_at_half_equalizes_row_sums() {
        let cfg = NetworkConfig { n_neurons: 120, input_spread: 0.0, seed: 8, ..Default::default() };
        let mut res = build_reservoir::<f64>(&cfg).unwrap();
        let exc_before = res.excitatory().clone();
        let t = sample_targets(TargetMode::Homogeneous { rho_t: 0.5 }, 120).unwrap();
        let report = design_one_step(&mut res, &t, 0.0).unwrap();
        assert!(report.issues.is_empty());
        for i in 0..res.len() {
            let expect = res.excitatory().row_sum(i) / (res.inhibitory().row_sum(i) / report.factors[i].unwrap());
            assert!((report.factors[i].unwrap() - expect).abs() < 1e-12);
        }
        for b in res.local_balance() {
            assert!(b.abs() < 1e-12, "beta_i = {b}");
        }
        assert_eq!(res.excitatory(), &exc_before);
    }

    #[test]
    fn design_unreachable_neuron_is_recorded() {
        // neuron 0 has no inhibitory in-links and needs a correction
        let mut exc = Array2::zeros((2, 2));
        exc[(0, 1)] = 1.0;
        let mut inh = Array2::zeros((2, 2));
        inh[(1, 0)] = 0.5;
        let mut res = EIReservoir::from_parts(ReservoirParts {
            excitatory: exc,
            inhibitory: inh,
            input_weights: vec![0.0; 2],
            thresholds: vec![0.0; 2],
            leak: vec![0.0; 2],
            steepness: 10.0,
            neuron_types: vec![NeuronType::Excitatory, NeuronType::Inhibitory],
        })
        .unwrap();
        let t = sample_targets(TargetMode::Homogeneous { rho_t: 0.5 }, 2).unwrap();
        let report = design_one_step(&mut res, &t, 0.0).unwrap();
        assert_eq!(report.issues, vec![(0, DesignIssue::Unreachable)]);
        assert_eq!(report.factors[0], None);
    }

    #[test]
    fn design_negative_factor_zeroes_row() {
        // a high target with no excitatory drive needs negative inhibition
        let mut res = two_neuron(0.3);
        let t = TargetRates { mode: TargetMode::Homogeneous { rho_t: 0.9 }, rho: vec![0.9, 0.5] };
        let report = design_one_step(&mut res, &t, 0.0).unwrap();
        assert_eq!(report.issues, vec![(0, DesignIssue::NegativeFactor)]);
        assert_eq!(res.inhibitory().get(0, 1), 0.0);
        assert!(res.inhibitory().values().iter().all(|&w| w >= 0.0));
    }

    #[test]
    fn design_rejects_negative_magnitudes() {
        let cfg = NetworkConfig { n_neurons: 100, beta: 1.5, seed: 1, ..Default::default() };
        let mut res = build_reservoir::<f64>(&cfg).unwrap();
        let t = sample_targets(TargetMode::Homogeneous { rho_t: 0.5 }, 100).unwrap();
        assert!(matches!(design_one_step(&mut res, &t, 0.5), Err(Error::Config(_))));
    }
}
