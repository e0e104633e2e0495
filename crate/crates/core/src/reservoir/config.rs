use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the global balance of a constructed network is controlled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum BalanceMode {
    /// Fixed population split; the inhibitory link strength is set from `beta`.
    #[default]
    LinkStrength,
    /// Fixed inhibitory/excitatory strength ratio; the population split
    /// `excit_fraction` sets the balance, and `beta` is ignored.
    InhibFraction,
}

/// Whether outgoing links respect the sign of their source neuron.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum DaleMode {
    #[default]
    Respect,
    /// Signed weights are permuted across link positions after construction.
    Shuffled,
}

pub const DEFAULT_EXCIT_FRACTION: f64 = 0.8;
pub const DEFAULT_MEAN_DEGREE: f64 = 50.0;

/// Everything needed to construct a reservoir deterministically.
///
/// Optional fields are derived from the others when absent; see
/// [`NetworkConfig::resolved`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    pub n_neurons: usize,
    pub excit_fraction: f64,
    pub mean_degree: f64,
    /// Mean excitatory weight. Defaults to `1 / (mean_degree * excit_fraction)`
    /// so that the mean excitatory input to a neuron at full rate is 1. Under
    /// [`BalanceMode::InhibFraction`] the default uses the default split
    /// instead, so that it stays fixed as `excit_fraction` varies.
    pub mu_e: Option<f64>,
    /// Defaults to `0.2 * mu_e`.
    pub sigma_e: Option<f64>,
    pub beta: f64,
    /// Defaults to `sigma_e`.
    pub sigma_i: Option<f64>,
    /// Inhibitory to excitatory mean strength, used by `InhibFraction` only.
    pub strength_ratio: f64,
    pub alpha: f64,
    pub theta: f64,
    pub steepness: f64,
    pub leak: f64,
    pub input_fraction: f64,
    pub input_spread: f64,
    pub balance_mode: BalanceMode,
    pub dale: DaleMode,
    pub seed: u64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            n_neurons: 500,
            excit_fraction: DEFAULT_EXCIT_FRACTION,
            mean_degree: DEFAULT_MEAN_DEGREE,
            mu_e: None,
            sigma_e: None,
            beta: 0.0,
            sigma_i: None,
            strength_ratio: 4.0,
            alpha: 1.0,
            theta: 0.0,
            steepness: 10.0,
            leak: 0.0,
            input_fraction: 0.3,
            input_spread: 0.016,
            balance_mode: BalanceMode::LinkStrength,
            dale: DaleMode::Respect,
            seed: 0,
        }
    }
}

impl NetworkConfig {
    pub fn mu_e(&self) -> f64 {
        self.mu_e.unwrap_or_else(|| match self.balance_mode {
            BalanceMode::LinkStrength => 1.0 / (self.mean_degree * self.excit_fraction),
            BalanceMode::InhibFraction => 1.0 / (self.mean_degree * DEFAULT_EXCIT_FRACTION),
        })
    }

    pub fn sigma_e(&self) -> f64 {
        self.sigma_e.unwrap_or_else(|| 0.2 * self.mu_e())
    }

    pub fn sigma_i(&self) -> f64 {
        self.sigma_i.unwrap_or_else(|| self.sigma_e())
    }

    /// Mean inhibitory magnitude used for construction (before `alpha`).
    pub fn mu_i(&self) -> Result<f64> {
        match self.balance_mode {
            BalanceMode::LinkStrength => {
                mu_inhibitory(self.excit_fraction, self.mu_e(), self.beta, self.mean_degree)
            }
            BalanceMode::InhibFraction => Ok(self.strength_ratio * self.mu_e()),
        }
    }

    /// Expected global balance of a network built from this config.
    pub fn expected_beta(&self) -> Result<f64> {
        let f_e = self.excit_fraction;
        let b = self.mean_degree * (f_e * self.mu_e() - (1.0 - f_e) * self.mu_i()?);
        Ok(self.alpha * b)
    }

    /// Copy with every derived field filled in.
    pub fn resolved(&self) -> Self {
        Self {
            mu_e: Some(self.mu_e()),
            sigma_e: Some(self.sigma_e()),
            sigma_i: Some(self.sigma_i()),
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.n_neurons == 0 {
            return fail("n_neurons must be positive".into());
        }
        if !(self.excit_fraction > 0.0 && self.excit_fraction < 1.0) {
            return fail(format!("excit_fraction must lie in (0,1), got {}", self.excit_fraction));
        }
        if !(self.mean_degree > 0.0) {
            return fail(format!("mean_degree must be positive, got {}", self.mean_degree));
        }
        if self.mean_degree > self.n_neurons as f64 {
            return fail(format!(
                "mean_degree {} exceeds n_neurons {}",
                self.mean_degree, self.n_neurons
            ));
        }
        if !(self.mu_e() > 0.0) {
            return fail(format!("mu_e must be positive, got {}", self.mu_e()));
        }
        for (name, v) in [
            ("sigma_e", self.sigma_e()),
            ("sigma_i", self.sigma_i()),
            ("input_spread", self.input_spread),
            ("strength_ratio", self.strength_ratio),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return fail(format!("{name} must be non-negative, got {v}"));
            }
        }
        if !(self.alpha > 0.0) {
            return fail(format!("alpha must be positive, got {}", self.alpha));
        }
        if !(self.steepness > 0.0) {
            return fail(format!("steepness must be positive, got {}", self.steepness));
        }
        if !(0.0..=1.0).contains(&self.leak) {
            return fail(format!("leak must lie in [0,1], got {}", self.leak));
        }
        if !(self.input_fraction > 0.0 && self.input_fraction <= 1.0) {
            return fail(format!("input_fraction must lie in (0,1], got {}", self.input_fraction));
        }
        if !self.beta.is_finite() || !self.theta.is_finite() {
            return fail("beta and theta must be finite".into());
        }
        Ok(())
    }
}

/// Mean inhibitory magnitude that places a network at global balance `beta`.
///
/// Negative results mean the nominally inhibitory population acts excitatory.
pub fn mu_inhibitory(excit_fraction: f64, mu_e: f64, beta: f64, mean_degree: f64) -> Result<f64> {
    if excit_fraction == 1.0 {
        return Err(Error::DivisionByZero("mu_inhibitory with excit_fraction = 1"));
    }
    if mean_degree == 0.0 {
        return Err(Error::DivisionByZero("mu_inhibitory with mean_degree = 0"));
    }
    Ok((excit_fraction * mu_e - beta / mean_degree) / (1.0 - excit_fraction))
}
