use crate::error::{Error, Result};
use crate::scalar::Real;

/// Digamma function for positive arguments: upward recurrence to `x >= 10`
/// followed by the asymptotic series.
pub fn digamma(x: f64) -> f64 {
    assert!(x > 0.0, "digamma is only implemented for positive arguments");
    let mut x = x;
    let mut acc = 0.0;
    while x < 10.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let series = inv2
        * (1.0 / 12.0
            - inv2 * (1.0 / 120.0 - inv2 * (1.0 / 252.0 - inv2 * (1.0 / 240.0 - inv2 / 132.0))));
    acc + x.ln() - 0.5 * inv - series
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyEstimate {
    /// Differential entropy in nats; `-inf` when every sample is identical.
    pub value: f64,
    /// Some nearest-neighbour distances were zero and were replaced by the
    /// smallest positive distance.
    pub zero_distances: bool,
    pub degenerate: bool,
}

/// Nearest-neighbour (Kozachenko-Leonenko, k = 1) differential entropy of a
/// scalar sample:
///
/// `H = ψ(T) - ψ(1) + ln 2 + (1/T) Σ_t ln ε_t`
///
/// with `ε_t` the distance from sample `t` to its nearest other sample.
pub fn kl_entropy<T: Real>(samples: &[T]) -> Result<EntropyEstimate> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::Degenerate("entropy needs at least two samples".into()));
    }
    let mut sorted: Vec<f64> = samples.iter().map(|x| x.as_f64()).collect();
    if sorted.iter().any(|x| !x.is_finite()) {
        return Err(Error::Input("entropy of non-finite samples".into()));
    }
    sorted.sort_by(f64::total_cmp);

    let gaps: Vec<f64> = sorted.windows(2).map(|w| w[1] - w[0]).collect();
    let min_positive = gaps.iter().copied().filter(|&g| g > 0.0).fold(f64::INFINITY, f64::min);
    if !min_positive.is_finite() {
        return Ok(EntropyEstimate { value: f64::NEG_INFINITY, zero_distances: true, degenerate: true });
    }

    let mut zero_distances = false;
    let mut log_sum = 0.0;
    for t in 0..n {
        let left = if t > 0 { gaps[t - 1] } else { f64::INFINITY };
        let right = if t + 1 < n { gaps[t] } else { f64::INFINITY };
        let mut eps = left.min(right);
        if eps == 0.0 {
            zero_distances = true;
            eps = min_positive;
        }
        log_sum += eps.ln();
    }
    let value = digamma(n as f64) - digamma(1.0) + std::f64::consts::LN_2 + log_sum / n as f64;
    Ok(EntropyEstimate { value, zero_distances, degenerate: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn digamma_matches_harmonic_numbers() {
        // ψ(n) = -γ + Σ_{k<n} 1/k
        let gamma = 0.577_215_664_901_532_9;
        let mut h = 0.0;
        for n in 1..200u32 {
            assert!((digamma(f64::from(n)) - (h - gamma)).abs() < 1e-12, "n = {n}");
            h += 1.0 / f64::from(n);
        }
        assert!((digamma(0.5) - (-gamma - 2.0 * std::f64::consts::LN_2)).abs() < 1e-12);
    }

    fn uniform(n: usize, hi: f64, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.gen_range(0.0..hi)).collect()
    }

    #[test]
    fn uniform_unit_interval_has_zero_entropy() {
        let h = kl_entropy(&uniform(10_000, 1.0, 1)).unwrap();
        assert!(h.value.abs() < 0.05, "{h:?}");
    }

    #[test]
    fn scaling_shifts_by_log() {
        let x = uniform(10_000, 1.0, 2);
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let d = kl_entropy(&y).unwrap().value - kl_entropy(&x).unwrap().value;
        assert!((d - 2f64.ln()).abs() < 0.02, "{d}");
    }

    #[test]
    fn constant_samples_are_flagged() {
        let h = kl_entropy(&[0.3; 50]).unwrap();
        assert!(h.degenerate && h.value == f64::NEG_INFINITY);
        assert!(kl_entropy(&[0.3]).is_err());
    }

    #[test]
    fn ties_are_replaced_deterministically() {
        let h = kl_entropy(&[0.0, 0.0, 0.5, 1.0]).unwrap();
        assert!(h.zero_distances && !h.degenerate && h.value.is_finite());
    }
}
