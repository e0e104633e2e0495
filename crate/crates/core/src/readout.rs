//! Linear readout trained by ridge regression.

use ndarray::{concatenate, s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cholesky, cholesky_solve};
use crate::reservoir::EIReservoir;
use crate::scalar::Real;

pub const DEFAULT_RIDGE: f64 = 1e-7;

/// Trained output weights: one row per reservoir neuron plus an optional
/// trailing bias row, one column per output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Readout<T> {
    pub weights: Array2<T>,
    pub eta: f64,
    pub bias: bool,
}

/// Washout / train / test lengths in samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSpec {
    pub washout: usize,
    pub train_len: usize,
    pub test_len: usize,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self { washout: 500, train_len: 20_000, test_len: 5_000 }
    }
}

impl SplitSpec {
    pub fn total(&self) -> usize {
        self.washout + self.train_len + self.test_len
    }

    pub fn validate(&self, series_len: usize) -> Result<()> {
        if self.train_len == 0 || self.test_len == 0 {
            return Err(Error::Config("train_len and test_len must be positive".into()));
        }
        if self.total() > series_len {
            return Err(Error::Config(format!(
                "split needs {} samples, series has {series_len}",
                self.total()
            )));
        }
        Ok(())
    }

    pub fn train_range(&self) -> std::ops::Range<usize> {
        self.washout..self.washout + self.train_len
    }

    pub fn test_range(&self) -> std::ops::Range<usize> {
        let start = self.washout + self.train_len;
        start..start + self.test_len
    }
}

fn with_bias<T: Real>(states: ArrayView2<T>, bias: bool) -> Array2<T> {
    if bias {
        let ones = Array2::from_elem((states.nrows(), 1), T::one());
        concatenate![Axis(1), states, ones]
    } else {
        states.to_owned()
    }
}

/// Minimizes `‖S̃ W - Y‖² + eta ‖W‖²` through the normal equations, where
/// `S̃` is `states` with a constant column appended when `bias` is set. The
/// bias row is regularized like every other row.
pub fn train_ridge<T: Real>(
    states: ArrayView2<T>,
    targets: ArrayView2<T>,
    eta: f64,
    bias: bool,
) -> Result<Readout<T>> {
    if states.nrows() != targets.nrows() {
        return Err(Error::Dimension { expected: states.nrows(), found: targets.nrows() });
    }
    if targets.ncols() == 0 {
        return Err(Error::Config("readout needs at least one output".into()));
    }
    if !(eta >= 0.0) {
        return Err(Error::Config(format!("ridge parameter must be non-negative, got {eta}")));
    }
    let design = with_bias(states, bias);
    let mut gram = design.t().dot(&design);
    let eta_t = T::lit(eta);
    for i in 0..gram.nrows() {
        gram[(i, i)] += eta_t;
    }
    let rhs = design.t().dot(&targets);
    let l = cholesky(gram.view())?;
    let weights = cholesky_solve(l.view(), rhs);
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::Numerical("ridge solution is not finite".into()));
    }
    Ok(Readout { weights, eta, bias })
}

impl<T: Real> Readout<T> {
    pub fn n_features(&self) -> usize {
        self.weights.nrows() - usize::from(self.bias)
    }

    pub fn n_outputs(&self) -> usize {
        self.weights.ncols()
    }

    fn check(&self, n: usize) -> Result<()> {
        if self.n_features() != n {
            return Err(Error::Dimension { expected: self.n_features(), found: n });
        }
        Ok(())
    }

    /// `y = W_outᵀ [r; 1]` for a single state.
    pub fn predict_one(&self, rates: ArrayView1<T>) -> Result<Array1<T>> {
        self.check(rates.len())?;
        let n = rates.len();
        let mut y = self.weights.slice(s![..n, ..]).t().dot(&rates);
        if self.bias {
            y += &self.weights.row(n);
        }
        Ok(y)
    }

    /// Applies the readout to every row of a state history.
    pub fn predict(&self, states: ArrayView2<T>) -> Result<Array2<T>> {
        self.check(states.ncols())?;
        let n = states.ncols();
        let mut y = states.dot(&self.weights.slice(s![..n, ..]));
        if self.bias {
            y += &self.weights.row(n);
        }
        Ok(y)
    }

    /// Euclidean norm of each neuron's outgoing readout weights.
    pub fn neuron_weight_norms(&self) -> Vec<T> {
        self.weights
            .outer_iter()
            .take(self.n_features())
            .map(|row| row.iter().map(|&w| w * w).sum::<T>().sqrt())
            .collect()
    }

    /// Objective gradient `S̃ᵀ(S̃ W - Y) + eta W`, for optimality checks.
    pub fn objective_gradient(&self, states: ArrayView2<T>, targets: ArrayView2<T>) -> Array2<T> {
        let design = with_bias(states, self.bias);
        let residual = design.dot(&self.weights) - targets;
        design.t().dot(&residual) + &(&self.weights * T::lit(self.eta))
    }
}

/// Drives `res` with `inputs` and reads out every step.
pub fn predict_open_loop<T: Real>(
    res: &mut EIReservoir<T>,
    ro: &Readout<T>,
    inputs: &[T],
) -> Result<Array2<T>> {
    ro.check(res.len())?;
    let states = res.run_open_loop(inputs)?;
    ro.predict(states.view())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoopPrediction<T> {
    pub outputs: Vec<T>,
    /// Set when a non-finite output cut the run short.
    pub diverged: bool,
}

/// Autonomous prediction: each output is fed back as the next input.
///
/// The reservoir must already be synchronized with the true signal. The
/// first output is the readout of the current state.
pub fn predict_closed_loop<T: Real>(
    res: &mut EIReservoir<T>,
    ro: &Readout<T>,
    horizon: usize,
) -> Result<ClosedLoopPrediction<T>> {
    ro.check(res.len())?;
    if ro.n_outputs() != 1 {
        return Err(Error::Dimension { expected: 1, found: ro.n_outputs() });
    }
    let mut outputs = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let y = ro.predict_one(ArrayView1::from(res.rates()))?[0];
        if !y.is_finite() {
            return Ok(ClosedLoopPrediction { outputs, diverged: true });
        }
        outputs.push(y);
        res.step(y)?;
    }
    Ok(ClosedLoopPrediction { outputs, diverged: false })
}
