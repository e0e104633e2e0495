//! Benchmark signals: delayed recall, NARMA-10, Mackey-Glass, Lorenz.

mod chaotic;
mod memory;
mod narma;

pub use chaotic::{
    gen_lorenz, gen_mackey_glass, lorenz_derivative, lorenz_rk4_step, mackey_glass_series,
    LorenzParams, MackeyGlassParams,
};
pub use memory::{gen_memory_input, DEFAULT_MAX_DELAY};
pub use narma::{gen_narma10, narma10_next, NarmaParams};

use std::io::Write;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TaskKind {
    MemoryCapacity,
    Narma10,
    MackeyGlass,
    Lorenz,
}

impl TaskKind {
    pub const ALL: [TaskKind; 4] =
        [TaskKind::MemoryCapacity, TaskKind::Narma10, TaskKind::MackeyGlass, TaskKind::Lorenz];

    /// Closed-loop tasks are scored by autonomous prediction.
    pub fn closed_loop(self) -> bool {
        matches!(self, TaskKind::MackeyGlass | TaskKind::Lorenz)
    }

    pub fn metric_name(self) -> &'static str {
        match self {
            TaskKind::MemoryCapacity => "memory_capacity",
            TaskKind::Narma10 => "rmse",
            TaskKind::MackeyGlass | TaskKind::Lorenz => "vpt",
        }
    }

    pub fn higher_is_better(self) -> bool {
        !matches!(self, TaskKind::Narma10)
    }
}

impl std::fmt::Display for TaskKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        std::fmt::Debug::fmt(self, f)
    }
}

/// Affine map used to bring a series into `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub min: f64,
    pub max: f64,
}

impl Normalization {
    pub fn fit(values: &[f64]) -> Self {
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self { min, max }
    }

    pub fn apply(&self, x: f64) -> f64 {
        if self.max > self.min {
            (x - self.min) / (self.max - self.min)
        } else {
            0.0
        }
    }

    pub fn invert(&self, y: f64) -> f64 {
        self.min + y * (self.max - self.min)
    }
}

/// Input series plus aligned targets.
///
/// `targets` has one row per input sample. Rows before `valid_from` have no
/// defined target (NaN) and must not be used for training.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskData<T> {
    pub task: TaskKind,
    pub inputs: Vec<T>,
    pub targets: Array2<T>,
    pub valid_from: usize,
    pub dt_sample: f64,
    pub normalization: Option<Normalization>,
    pub seed: u64,
    /// Times the generator had to restart with a fresh seed.
    pub regenerations: u32,
}

impl<T: Real> TaskData<T> {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    /// Analytic input mean where the input process is known, empirical
    /// otherwise.
    pub fn mean_input(&self) -> f64 {
        match self.task {
            TaskKind::MemoryCapacity => 0.5,
            TaskKind::Narma10 => 0.25,
            TaskKind::MackeyGlass | TaskKind::Lorenz => {
                self.inputs.iter().map(|x| x.as_f64()).sum::<f64>() / self.inputs.len().max(1) as f64
            }
        }
    }

    /// Writes `time,u,y` rows (first target column), preceded by `#` header
    /// lines carrying the task and normalization record.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# task={}", self.task)?;
        writeln!(out, "# dt_sample={}", self.dt_sample)?;
        writeln!(out, "# seed={}", self.seed)?;
        if let Some(norm) = self.normalization {
            writeln!(out, "# normalization_min={:?}", norm.min)?;
            writeln!(out, "# normalization_max={:?}", norm.max)?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["time", "u", "y"])?;
        for (t, u) in self.inputs.iter().enumerate() {
            let y = self.targets[(t, 0)];
            let y = if y.is_nan() { String::new() } else { format!("{:?}", y.as_f64()) };
            w.write_record([
                format!("{:?}", t as f64 * self.dt_sample),
                format!("{:?}", u.as_f64()),
                y,
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Generates `len` samples of `task` with default parameters.
pub fn generate<T: Real>(task: TaskKind, len: usize, seed: u64) -> Result<TaskData<T>> {
    match task {
        TaskKind::MemoryCapacity => gen_memory_input(len, DEFAULT_MAX_DELAY, seed),
        TaskKind::Narma10 => gen_narma10(len, seed),
        TaskKind::MackeyGlass => gen_mackey_glass(len, &MackeyGlassParams::default(), seed),
        TaskKind::Lorenz => gen_lorenz(len, &LorenzParams::default(), seed),
    }
}

/// Builds one-step-ahead pairs from `len + 1` normalized samples.
pub(crate) fn one_step_ahead<T: Real>(
    task: TaskKind,
    raw: &[f64],
    dt_sample: f64,
    seed: u64,
) -> TaskData<T> {
    let norm = Normalization::fit(raw);
    let scaled: Vec<T> = raw.iter().map(|&x| T::lit(norm.apply(x))).collect();
    let len = raw.len() - 1;
    let inputs = scaled[..len].to_vec();
    let targets = Array2::from_shape_fn((len, 1), |(t, _)| scaled[t + 1]);
    TaskData {
        task,
        inputs,
        targets,
        valid_from: 0,
        dt_sample,
        normalization: Some(norm),
        seed,
        regenerations: 0,
    }
}
