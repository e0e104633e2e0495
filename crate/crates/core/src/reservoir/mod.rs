//! Excitatory-inhibitory rate reservoir: construction and dynamics.
//!
//! Connectivity is split into an excitatory part `A_E` and an inhibitory
//! magnitude part `A_I`, both indexed `(i, j)` = link from `j` into `i`. The
//! potential update is
//!
//! ```text
//! V_i <- leak_i * V_i + Σ_j (A_E[i,j] - A_I[i,j]) r_j + W_in[i] u
//! r_i <- sigmoid(V_i - theta_i, c)
//! ```
//!
//! applied synchronously: every neuron reads the rate vector of the
//! previous step.

mod build;
mod config;
mod sparse;

pub use build::build_reservoir;
pub use config::{mu_inhibitory, BalanceMode, DaleMode, NetworkConfig};
pub use sparse::SparseMatrix;

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NeuronType {
    #[serde(rename = "E")]
    Excitatory,
    #[serde(rename = "I")]
    Inhibitory,
}

impl NeuronType {
    pub fn symbol(self) -> &'static str {
        match self {
            NeuronType::Excitatory => "E",
            NeuronType::Inhibitory => "I",
        }
    }
}

/// Logistic function `1 / (1 + exp(-c x))`.
///
/// The result is kept inside the open unit interval at floating-point
/// resolution, so a saturated neuron reads `1 - eps/2` rather than `1`.
#[inline]
pub fn sigmoid<T: Real>(x: T, c: T) -> T {
    let s = T::one() / (T::one() + (-c * x).exp());
    if s >= T::one() {
        T::one() - T::epsilon() / T::lit(2.0)
    } else if s <= T::zero() {
        T::min_positive_value()
    } else {
        s
    }
}

/// Inverse of [`sigmoid`]: `ln(p / (1 - p)) / c`.
pub fn inverse_sigmoid<T: Real>(p: T, c: T) -> Result<T> {
    if !(p > T::zero() && p < T::one()) {
        return Err(Error::Domain(format!("inverse_sigmoid needs p in (0,1), got {p}")));
    }
    if !(c > T::zero()) {
        return Err(Error::Domain(format!("inverse_sigmoid needs c > 0, got {c}")));
    }
    Ok((p / (T::one() - p)).ln() / c)
}

/// Explicit ingredients of a reservoir, used when the weights are not
/// produced by [`build_reservoir`].
#[derive(Debug, Clone)]
pub struct ReservoirParts<T> {
    pub excitatory: Array2<T>,
    pub inhibitory: Array2<T>,
    pub input_weights: Vec<T>,
    pub thresholds: Vec<T>,
    pub leak: Vec<T>,
    pub steepness: T,
    pub neuron_types: Vec<NeuronType>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct EIReservoir<T> {
    pub(crate) config: Option<NetworkConfig>,
    pub(crate) neuron_types: Vec<NeuronType>,
    pub(crate) excitatory: SparseMatrix<T>,
    pub(crate) inhibitory: SparseMatrix<T>,
    pub(crate) input_weights: Vec<T>,
    pub(crate) thresholds: Vec<T>,
    pub(crate) leak: Vec<T>,
    pub(crate) steepness: T,
    pub(crate) potential: Vec<T>,
    pub(crate) rates: Vec<T>,
    #[serde(skip)]
    scratch: Vec<T>,
}

// scratch is a work buffer and not part of the value
impl<T: PartialEq> PartialEq for EIReservoir<T> {
    fn eq(&self, other: &Self) -> bool {
        self.config == other.config
            && self.neuron_types == other.neuron_types
            && self.excitatory == other.excitatory
            && self.inhibitory == other.inhibitory
            && self.input_weights == other.input_weights
            && self.thresholds == other.thresholds
            && self.leak == other.leak
            && self.steepness == other.steepness
            && self.potential == other.potential
            && self.rates == other.rates
    }
}

impl<T: Real> EIReservoir<T> {
    pub(crate) fn assemble(
        config: Option<NetworkConfig>,
        neuron_types: Vec<NeuronType>,
        excitatory: SparseMatrix<T>,
        inhibitory: SparseMatrix<T>,
        input_weights: Vec<T>,
        thresholds: Vec<T>,
        leak: Vec<T>,
        steepness: T,
    ) -> Self {
        let n = neuron_types.len();
        let mut res = Self {
            config,
            neuron_types,
            excitatory,
            inhibitory,
            input_weights,
            thresholds,
            leak,
            steepness,
            potential: vec![T::zero(); n],
            rates: vec![T::zero(); n],
            scratch: vec![T::zero(); n],
        };
        res.reset_state();
        res
    }

    pub fn from_parts(parts: ReservoirParts<T>) -> Result<Self> {
        let n = parts.neuron_types.len();
        for (len, _what) in [
            (parts.excitatory.nrows(), "excitatory rows"),
            (parts.excitatory.ncols(), "excitatory cols"),
            (parts.inhibitory.nrows(), "inhibitory rows"),
            (parts.inhibitory.ncols(), "inhibitory cols"),
            (parts.input_weights.len(), "input weights"),
            (parts.thresholds.len(), "thresholds"),
            (parts.leak.len(), "leak"),
        ] {
            if len != n {
                return Err(Error::Dimension { expected: n, found: len });
            }
        }
        if !(parts.steepness > T::zero()) {
            return Err(Error::Config("steepness must be positive".into()));
        }
        if parts.excitatory.iter().any(|&w| w < T::zero()) {
            return Err(Error::Config("excitatory weights must be non-negative".into()));
        }
        Ok(Self::assemble(
            None,
            parts.neuron_types,
            SparseMatrix::from_dense(&parts.excitatory),
            SparseMatrix::from_dense(&parts.inhibitory),
            parts.input_weights,
            parts.thresholds,
            parts.leak,
            parts.steepness,
        ))
    }

    /// Restores `V = 0`, `r = sigmoid(-theta)`.
    pub fn reset_state(&mut self) {
        let c = self.steepness;
        for i in 0..self.len() {
            self.potential[i] = T::zero();
            self.rates[i] = sigmoid(-self.thresholds[i], c);
        }
    }

    pub fn len(&self) -> usize {
        self.neuron_types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neuron_types.is_empty()
    }

    pub fn config(&self) -> Option<&NetworkConfig> {
        self.config.as_ref()
    }

    pub fn neuron_types(&self) -> &[NeuronType] {
        &self.neuron_types
    }

    pub fn excitatory(&self) -> &SparseMatrix<T> {
        &self.excitatory
    }

    pub fn inhibitory(&self) -> &SparseMatrix<T> {
        &self.inhibitory
    }

    pub(crate) fn inhibitory_mut(&mut self) -> &mut SparseMatrix<T> {
        &mut self.inhibitory
    }

    pub fn input_weights(&self) -> &[T] {
        &self.input_weights
    }

    pub fn thresholds(&self) -> &[T] {
        &self.thresholds
    }

    pub fn leak(&self) -> &[T] {
        &self.leak
    }

    pub fn steepness(&self) -> T {
        self.steepness
    }

    pub fn potential(&self) -> &[T] {
        &self.potential
    }

    pub fn rates(&self) -> &[T] {
        &self.rates
    }

    /// Overwrites the rate vector, e.g. to place the network in a known state.
    pub fn set_rates(&mut self, rates: &[T]) -> Result<()> {
        if rates.len() != self.len() {
            return Err(Error::Dimension { expected: self.len(), found: rates.len() });
        }
        if rates.iter().any(|&r| !(r > T::zero() && r < T::one())) {
            return Err(Error::Domain("rates must lie in (0,1)".into()));
        }
        self.rates.copy_from_slice(rates);
        Ok(())
    }

    /// Signed connectivity `A_E - A_I` as a dense matrix.
    pub fn signed_dense(&self) -> Array2<T> {
        self.excitatory.to_dense() - self.inhibitory.to_dense()
    }

    /// Advances one step with scalar input `u`.
    pub fn step(&mut self, u: T) -> Result<()> {
        if !u.is_finite() {
            return Err(Error::Input(format!("non-finite input {u}")));
        }
        let n = self.len();
        for i in 0..n {
            let recurrent =
                self.excitatory.row_dot(i, &self.rates) - self.inhibitory.row_dot(i, &self.rates);
            self.scratch[i] = self.leak[i] * self.potential[i] + recurrent + self.input_weights[i] * u;
        }
        std::mem::swap(&mut self.potential, &mut self.scratch);
        let c = self.steepness;
        for i in 0..n {
            self.rates[i] = sigmoid(self.potential[i] - self.thresholds[i], c);
        }
        Ok(())
    }

    /// Drives the network with `inputs` and returns the `T x N` rate history.
    pub fn run_open_loop(&mut self, inputs: &[T]) -> Result<Array2<T>> {
        if let Some(bad) = inputs.iter().find(|u| !u.is_finite()) {
            return Err(Error::Input(format!("non-finite input {bad}")));
        }
        let n = self.len();
        let mut history = Array2::zeros((inputs.len(), n));
        for (t, &u) in inputs.iter().enumerate() {
            self.step(u)?;
            history.row_mut(t).assign(&ndarray::ArrayView1::from(&self.rates[..]));
        }
        Ok(history)
    }

    /// Per-neuron balance `β_i = Σ_j (A_E[i,j] - A_I[i,j])`.
    pub fn local_balance(&self) -> Array1<T> {
        (0..self.len())
            .map(|i| self.excitatory.row_sum(i) - self.inhibitory.row_sum(i))
            .collect()
    }

    /// Mean of [`local_balance`](Self::local_balance).
    pub fn global_balance(&self) -> T {
        let local = self.local_balance();
        if local.is_empty() {
            return T::zero();
        }
        local.sum() / T::from_usize_lossy(local.len())
    }

    pub fn weights_finite(&self) -> bool {
        self.excitatory.is_finite() && self.inhibitory.is_finite()
    }

    /// Permutes the signed weights over the existing link positions.
    ///
    /// Positive weights land in `A_E`, negative ones in `A_I` as magnitudes.
    /// Link positions and the multiset of signed weights are preserved.
    pub fn shuffle_dale(&self, seed: u64) -> Self {
        let n = self.len();
        let mut positions: Vec<(usize, usize)> = Vec::new();
        let mut weights: Vec<T> = Vec::new();
        for i in 0..n {
            let (ce, ve) = self.excitatory.row(i);
            let (ci, vi) = self.inhibitory.row(i);
            // merge the two sorted column lists; a position can carry both
            // an excitatory and an inhibitory entry only for hand-built parts
            let mut merged: Vec<(usize, T)> = ce.iter().copied().zip(ve.iter().copied()).collect();
            for (&j, &w) in ci.iter().zip(vi) {
                match merged.binary_search_by_key(&j, |p| p.0) {
                    Ok(k) => merged[k].1 -= w,
                    Err(k) => merged.insert(k, (j, -w)),
                }
            }
            for (j, w) in merged {
                positions.push((i, j));
                weights.push(w);
            }
        }
        let mut rng = seed::rng(seed, seed::stream::SHUFFLE);
        weights.shuffle(&mut rng);

        let mut exc_rows: Vec<Vec<(usize, T)>> = vec![Vec::new(); n];
        let mut inh_rows: Vec<Vec<(usize, T)>> = vec![Vec::new(); n];
        for (&(i, j), &w) in positions.iter().zip(&weights) {
            if w > T::zero() {
                exc_rows[i].push((j, w));
            } else {
                inh_rows[i].push((j, -w));
            }
        }
        let mut config = self.config.clone();
        if let Some(c) = config.as_mut() {
            c.dale = DaleMode::Shuffled;
        }
        let mut out = Self::assemble(
            config,
            self.neuron_types.clone(),
            SparseMatrix::from_rows(n, exc_rows),
            SparseMatrix::from_rows(n, inh_rows),
            self.input_weights.clone(),
            self.thresholds.clone(),
            self.leak.clone(),
            self.steepness,
        );
        out.potential.copy_from_slice(&self.potential);
        out.rates.copy_from_slice(&self.rates);
        out
    }

    /// Re-creates the scratch buffer and checks internal consistency after
    /// deserialization.
    pub(crate) fn restore_after_load(&mut self) -> Result<()> {
        let n = self.neuron_types.len();
        for m in [&self.excitatory, &self.inhibitory] {
            m.check_structure().map_err(Error::Format)?;
            if m.dim() != n {
                return Err(Error::Dimension { expected: n, found: m.dim() });
            }
        }
        for len in [
            self.input_weights.len(),
            self.thresholds.len(),
            self.leak.len(),
            self.potential.len(),
            self.rates.len(),
        ] {
            if len != n {
                return Err(Error::Dimension { expected: n, found: len });
            }
        }
        self.scratch = vec![T::zero(); n];
        Ok(())
    }
}
