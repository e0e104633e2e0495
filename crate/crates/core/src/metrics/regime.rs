use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use super::correlation::{mean_pairwise_correlation, CorrelationMode};
use crate::scalar::Real;

pub const SILENT_RATE: f64 = 0.05;
pub const SATURATED_RATE: f64 = 0.95;
pub const SYNCHRONY_CORR: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    Silent,
    Saturated,
    Synchronized,
    Active,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        std::fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeLabel {
    pub label: Regime,
    pub mean_rate: f64,
    /// NaN when fewer than two neurons vary in time.
    pub mean_corr: f64,
}

impl RegimeLabel {
    pub fn from_stats(mean_rate: f64, mean_corr: f64) -> Self {
        let label = if mean_rate < SILENT_RATE {
            Regime::Silent
        } else if mean_rate > SATURATED_RATE {
            Regime::Saturated
        } else if mean_corr > SYNCHRONY_CORR {
            Regime::Synchronized
        } else {
            Regime::Active
        };
        Self { label, mean_rate, mean_corr }
    }
}

/// Labels a post-washout rate history by its time-and-neuron mean rate and
/// mean pairwise correlation.
pub fn classify_regime<T: Real>(states: ArrayView2<T>, mode: CorrelationMode) -> RegimeLabel {
    let count = states.len().max(1) as f64;
    let mean_rate = states.iter().map(|x| x.as_f64()).sum::<f64>() / count;
    let mean_corr = mean_pairwise_correlation(states, mode).unwrap_or(f64::NAN);
    RegimeLabel::from_stats(mean_rate, mean_corr)
}
