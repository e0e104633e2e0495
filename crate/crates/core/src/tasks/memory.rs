use ndarray::Array2;
use rand::Rng;

use super::{TaskData, TaskKind};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::seed;

pub const DEFAULT_MAX_DELAY: usize = 70;

/// I.i.d. uniform `[0, 1]` input with one target column per delay
/// `d = 1..=max_delay`; column `d - 1` at time `t` holds `u(t - d)`.
pub fn gen_memory_input<T: Real>(len: usize, max_delay: usize, seed: u64) -> Result<TaskData<T>> {
    if max_delay == 0 {
        return Err(Error::Config("max_delay must be at least 1".into()));
    }
    if len <= max_delay {
        return Err(Error::Config(format!("series length {len} must exceed max delay {max_delay}")));
    }
    let mut rng = seed::rng(seed, seed::stream::TASK);
    let inputs: Vec<T> = (0..len).map(|_| T::lit(rng.gen::<f64>())).collect();
    Ok(with_delays(inputs, max_delay, seed))
}

pub(crate) fn with_delays<T: Real>(inputs: Vec<T>, max_delay: usize, seed: u64) -> TaskData<T> {
    let len = inputs.len();
    let targets = Array2::from_shape_fn((len, max_delay), |(t, k)| {
        let d = k + 1;
        if t >= d {
            inputs[t - d]
        } else {
            T::nan()
        }
    });
    TaskData {
        task: TaskKind::MemoryCapacity,
        inputs,
        targets,
        valid_from: max_delay,
        dt_sample: 1.0,
        normalization: None,
        seed,
        regenerations: 0,
    }
}
