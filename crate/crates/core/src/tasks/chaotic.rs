use rand::Rng;

use super::{one_step_ahead, TaskData, TaskKind};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MackeyGlassParams {
    pub xi: f64,
    pub gamma: f64,
    pub tau: f64,
    pub exponent: f64,
    /// Sampling interval.
    pub dt_sample: f64,
    /// RK4 steps per sample.
    pub substeps: usize,
    /// Constant history on `[-tau, 0]`.
    pub initial: f64,
    /// Leading samples discarded.
    pub transient: usize,
}

impl Default for MackeyGlassParams {
    fn default() -> Self {
        Self {
            xi: 0.2,
            gamma: 0.1,
            tau: 17.0,
            exponent: 10.0,
            dt_sample: 0.1,
            substeps: 1,
            initial: 1.2,
            transient: 10_000,
        }
    }
}

/// Raw (unnormalized) Mackey-Glass samples after the transient.
///
/// Fourth-order Runge-Kutta with a history buffer of every integration
/// step; the delayed value at a half step is the mean of the two
/// neighbouring buffer entries, and at full steps it is the stored sample
/// exactly `tau / h` steps back.
pub fn mackey_glass_series<T: Real>(n_samples: usize, params: &MackeyGlassParams) -> Result<Vec<T>> {
    if params.substeps == 0 || !(params.dt_sample > 0.0) {
        return Err(Error::Config("Mackey-Glass step must be positive".into()));
    }
    let h = params.dt_sample / params.substeps as f64;
    let lag_f = params.tau / h;
    let lag = lag_f.round() as usize;
    if (lag_f - lag as f64).abs() > 1e-9 || lag == 0 {
        return Err(Error::Config(format!("tau / step = {lag_f} must be a positive integer")));
    }

    let (xi, gamma, n) = (T::lit(params.xi), T::lit(params.gamma), T::lit(params.exponent));
    let f = |x: T, delayed: T| xi * delayed / (T::one() + delayed.powf(n)) - gamma * x;
    let h_t = T::lit(h);
    let half = T::lit(0.5);

    let total = params.transient + n_samples;
    let steps = total.saturating_sub(1) * params.substeps;
    // buffer[k] holds x at time (k - lag) h
    let mut buffer: Vec<T> = vec![T::lit(params.initial); lag + 1];
    buffer.reserve(steps);
    let mut out = Vec::with_capacity(n_samples);
    if params.transient == 0 && n_samples > 0 {
        out.push(buffer[lag]);
    }
    for k in 0..steps {
        let x = buffer[lag + k];
        let d0 = buffer[k];
        let d1 = buffer[k + 1];
        let dm = half * (d0 + d1);
        let k1 = f(x, d0);
        let k2 = f(x + half * h_t * k1, dm);
        let k3 = f(x + half * h_t * k2, dm);
        let k4 = f(x + h_t * k3, d1);
        let next = x + h_t / T::lit(6.0) * (k1 + T::lit(2.0) * (k2 + k3) + k4);
        if !next.is_finite() {
            return Err(Error::Integration { step: k });
        }
        buffer.push(next);
        if (k + 1) % params.substeps == 0 {
            let sample = (k + 1) / params.substeps;
            if sample >= params.transient {
                out.push(next);
            }
        }
    }
    Ok(out)
}

/// Normalized Mackey-Glass one-step-ahead pairs. The series is fully
/// determined by `params`; `seed` is recorded only.
pub fn gen_mackey_glass<T: Real>(len: usize, params: &MackeyGlassParams, seed: u64) -> Result<TaskData<T>> {
    if len == 0 {
        return Err(Error::Config("series length must be positive".into()));
    }
    let raw = mackey_glass_series::<f64>(len + 1, params)?;
    Ok(one_step_ahead(TaskKind::MackeyGlass, &raw, params.dt_sample, seed))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LorenzParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// Integration step.
    pub dt: f64,
    /// Integration steps per retained sample.
    pub sample_every: usize,
    pub transient: usize,
    /// Half-width of the uniform per-component perturbation of `(1, 1, 1)`.
    pub perturbation: f64,
}

impl Default for LorenzParams {
    fn default() -> Self {
        Self { a: 10.0, b: 28.0, c: 8.0 / 3.0, dt: 0.01, sample_every: 2, transient: 5_000, perturbation: 1e-3 }
    }
}

pub fn lorenz_derivative<T: Real>(p: &LorenzParams, s: [T; 3]) -> [T; 3] {
    let (a, b, c) = (T::lit(p.a), T::lit(p.b), T::lit(p.c));
    let [x, y, z] = s;
    [a * (y - x), -x * z + b * x - y, x * y - c * z]
}

pub fn lorenz_rk4_step<T: Real>(p: &LorenzParams, s: [T; 3], dt: T) -> [T; 3] {
    let add = |s: [T; 3], k: [T; 3], h: T| [s[0] + h * k[0], s[1] + h * k[1], s[2] + h * k[2]];
    let half = dt / T::lit(2.0);
    let k1 = lorenz_derivative(p, s);
    let k2 = lorenz_derivative(p, add(s, k1, half));
    let k3 = lorenz_derivative(p, add(s, k2, half));
    let k4 = lorenz_derivative(p, add(s, k3, dt));
    let six = T::lit(6.0);
    let two = T::lit(2.0);
    std::array::from_fn(|i| s[i] + dt / six * (k1[i] + two * (k2[i] + k3[i]) + k4[i]))
}

/// Normalized `x` component of the Lorenz system as one-step-ahead pairs.
pub fn gen_lorenz<T: Real>(len: usize, params: &LorenzParams, seed: u64) -> Result<TaskData<T>> {
    if len == 0 || params.sample_every == 0 {
        return Err(Error::Config("series length and sampling stride must be positive".into()));
    }
    let mut rng = seed::rng(seed, seed::stream::TASK);
    let eps = params.perturbation;
    let mut s: [f64; 3] = std::array::from_fn(|_| {
        1.0 + if eps > 0.0 { rng.gen_range(-eps..=eps) } else { 0.0 }
    });
    let n_samples = len + 1;
    let mut raw = Vec::with_capacity(n_samples);
    let total = params.transient + n_samples;
    for k in 0..total {
        if k > 0 {
            for _ in 0..params.sample_every {
                s = lorenz_rk4_step(params, s, params.dt);
            }
            if s.iter().any(|v| !v.is_finite()) {
                return Err(Error::Integration { step: k * params.sample_every });
            }
        }
        if k >= params.transient {
            raw.push(s[0]);
        }
    }
    let dt_sample = params.dt * params.sample_every as f64;
    Ok(one_step_ahead(TaskKind::Lorenz, &raw, dt_sample, seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mackey_glass_fixed_point() {
        let p = MackeyGlassParams { initial: 1.0, transient: 0, ..Default::default() };
        let xs = mackey_glass_series::<f64>(1000, &p).unwrap();
        assert!(xs.iter().all(|&x| (x - 1.0).abs() < 1e-12));
    }

    #[test]
    fn mackey_glass_rejects_fractional_lag() {
        let p = MackeyGlassParams { tau: 17.05, ..Default::default() };
        assert!(mackey_glass_series::<f64>(10, &p).is_err());
    }

    #[test]
    fn mackey_glass_delay_uses_stored_sample() {
        // before the first lag has elapsed, the delayed term reads the
        // constant history, so the first step is a plain ODE step
        let p = MackeyGlassParams { transient: 0, ..Default::default() };
        let xs = mackey_glass_series::<f64>(2, &p).unwrap();
        let d: f64 = 1.2;
        let g = |x: f64| 0.2 * d / (1.0 + d.powi(10)) - 0.1 * x;
        let h = 0.1;
        let k1 = g(1.2);
        let k2 = g(1.2 + h / 2.0 * k1);
        let k3 = g(1.2 + h / 2.0 * k2);
        let k4 = g(1.2 + h * k3);
        assert!((xs[1] - (1.2 + h / 6.0 * (k1 + 2.0 * (k2 + k3) + k4))).abs() < 1e-15);
    }

    #[test]
    fn normalized_mackey_glass_spans_unit_interval() {
        let p = MackeyGlassParams { transient: 2_000, ..Default::default() };
        let d: TaskData<f64> = gen_mackey_glass(3000, &p, 0).unwrap();
        let mut all = d.inputs.clone();
        all.push(d.targets[(d.len() - 1, 0)]);
        let min = all.iter().copied().fold(f64::INFINITY, f64::min);
        let max = all.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!((min, max), (0.0, 1.0));
        for t in 0..d.len() - 1 {
            assert_eq!(d.targets[(t, 0)], d.inputs[t + 1]);
        }
    }

    #[test]
    fn lorenz_origin_is_an_equilibrium() {
        let p = LorenzParams::default();
        let mut s = [0.0f64; 3];
        for _ in 0..1000 {
            s = lorenz_rk4_step(&p, s, 0.01);
        }
        assert_eq!(s, [0.0; 3]);
    }

    #[test]
    fn lorenz_series_is_normalized_and_seeded() {
        let p = LorenzParams { transient: 500, ..Default::default() };
        let a: TaskData<f64> = gen_lorenz(1000, &p, 1).unwrap();
        let b: TaskData<f64> = gen_lorenz(1000, &p, 1).unwrap();
        let c: TaskData<f64> = gen_lorenz(1000, &p, 2).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.inputs, c.inputs);
        assert!(a.inputs.iter().all(|&x| (0.0..=1.0).contains(&x)));
        assert!((a.dt_sample - 0.02).abs() < 1e-15);
    }
}
