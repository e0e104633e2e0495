//! Evaluation quantities for readouts and reservoir dynamics.

mod correlation;
mod entropy;
mod regime;

pub use correlation::{mean_pairwise_correlation, pearson, CorrelationMode};
pub use entropy::{digamma, kl_entropy, EntropyEstimate};
pub use regime::{classify_regime, Regime, RegimeLabel, SATURATED_RATE, SILENT_RATE, SYNCHRONY_CORR};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Squared correlation between truth and prediction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RSquared<T> {
    pub value: T,
    /// Set when either series has zero variance; `value` is then 0.
    pub degenerate: bool,
}

fn check_pair<T>(truth: &[T], pred: &[T]) -> Result<()> {
    if truth.len() != pred.len() {
        return Err(Error::Dimension { expected: truth.len(), found: pred.len() });
    }
    Ok(())
}

pub(crate) fn mean<T: Real>(x: &[T]) -> T {
    x.iter().copied().sum::<T>() / T::from_usize_lossy(x.len())
}

/// `cov(truth, pred)² / (var(truth) var(pred))`.
pub fn r_squared<T: Real>(truth: &[T], pred: &[T]) -> Result<RSquared<T>> {
    check_pair(truth, pred)?;
    if truth.len() < 2 {
        return Err(Error::Degenerate("r_squared needs at least two samples".into()));
    }
    let (mt, mp) = (mean(truth), mean(pred));
    let (mut cov, mut vt, mut vp) = (T::zero(), T::zero(), T::zero());
    for (&a, &b) in truth.iter().zip(pred) {
        let (da, db) = (a - mt, b - mp);
        cov += da * db;
        vt += da * da;
        vp += db * db;
    }
    if vt == T::zero() || vp == T::zero() {
        return Ok(RSquared { value: T::zero(), degenerate: true });
    }
    let r2 = (cov * cov) / (vt * vp);
    Ok(RSquared { value: r2.min(T::one()), degenerate: false })
}

/// Sum of the recall R² profile over delays.
pub fn memory_capacity<T: Real>(r2_by_delay: &[T]) -> T {
    r2_by_delay.iter().copied().sum()
}

pub fn rmse<T: Real>(truth: &[T], pred: &[T]) -> Result<T> {
    check_pair(truth, pred)?;
    if truth.is_empty() {
        return Err(Error::Degenerate("rmse of an empty series".into()));
    }
    let sq: T = truth.iter().zip(pred).map(|(&a, &b)| (a - b) * (a - b)).sum();
    Ok((sq / T::from_usize_lossy(truth.len())).sqrt())
}

/// Population standard deviation.
pub fn std_dev<T: Real>(x: &[T]) -> T {
    if x.is_empty() {
        return T::zero();
    }
    let m = mean(x);
    let ss: T = x.iter().map(|&v| (v - m) * (v - m)).sum();
    (ss / T::from_usize_lossy(x.len())).sqrt()
}

/// RMSE divided by the standard deviation of `truth`.
pub fn nrmse<T: Real>(truth: &[T], pred: &[T]) -> Result<T> {
    let e = rmse(truth, pred)?;
    let sd = std_dev(truth);
    if sd == T::zero() {
        return Err(Error::Degenerate("nrmse with constant truth".into()));
    }
    Ok(e / sd)
}

pub const DEFAULT_VPT_THRESHOLD: f64 = 0.4;
pub const DEFAULT_VPT_WINDOW: usize = 10;

/// Valid prediction time in steps.
///
/// At each index `t` the RMSE over the trailing window `[t - window + 1, t]`
/// (shorter at the start) is divided by the standard deviation of the whole
/// `truth` series. Returns the first `t` where this exceeds `threshold`, or
/// the series length if it never does.
pub fn vpt<T: Real>(truth: &[T], pred: &[T], threshold: T, window: usize) -> Result<usize> {
    check_pair(truth, pred)?;
    if truth.is_empty() {
        return Err(Error::Degenerate("vpt of an empty series".into()));
    }
    let window = window.max(1);
    let sd = std_dev(truth);
    if sd == T::zero() {
        return Err(Error::Degenerate("vpt with constant truth".into()));
    }
    let sq: Vec<T> = truth.iter().zip(pred).map(|(&a, &b)| (a - b) * (a - b)).collect();
    let mut acc = T::zero();
    for t in 0..sq.len() {
        acc += sq[t];
        if t >= window {
            acc -= sq[t - window];
        }
        let count = (t + 1).min(window);
        // recompute exactly at window boundaries to avoid drift in the
        // running sum
        let sum = if t % 1024 == 0 { sq[t + 1 - count..=t].iter().copied().sum() } else { acc };
        acc = sum;
        let e = (sum.max(T::zero()) / T::from_usize_lossy(count)).sqrt() / sd;
        if e > threshold {
            return Ok(t);
        }
    }
    Ok(sq.len())
}
