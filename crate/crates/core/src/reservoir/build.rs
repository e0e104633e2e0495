use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{DaleMode, EIReservoir, NetworkConfig, NeuronType, SparseMatrix};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::seed;

/// Gaussian weight draw. For a positive mean the sample is redrawn until it
/// is positive; otherwise it is taken as drawn.
struct WeightSampler {
    dist: Option<Normal<f64>>,
    mean: f64,
}

impl WeightSampler {
    fn new(mean: f64, sd: f64) -> Result<Self> {
        let dist = if sd > 0.0 {
            Some(Normal::new(mean, sd).map_err(|e| Error::Config(e.to_string()))?)
        } else {
            None
        };
        Ok(Self { dist, mean })
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        let Some(dist) = &self.dist else {
            return self.mean;
        };
        loop {
            let w = dist.sample(rng);
            if self.mean <= 0.0 || w > 0.0 {
                return w;
            }
        }
    }
}

/// Constructs a reservoir from `config`.
///
/// The first `round(N f_E)` neurons are excitatory. Each ordered pair `(i, j)`,
/// self-loops included, is linked independently with probability `k / N`;
/// the link's weight comes from the excitatory or inhibitory distribution
/// according to the type of the source `j`. All weights are scaled by
/// `alpha`. Input weights are uniform on `[-σ_in/2, σ_in/2]` over a random
/// subset of `round(f_in N)` neurons.
pub fn build_reservoir<T: Real>(config: &NetworkConfig) -> Result<EIReservoir<T>> {
    config.validate()?;
    let n = config.n_neurons;
    let n_exc = ((n as f64) * config.excit_fraction).round() as usize;
    let neuron_types: Vec<NeuronType> = (0..n)
        .map(|j| if j < n_exc { NeuronType::Excitatory } else { NeuronType::Inhibitory })
        .collect();

    let p_link = config.mean_degree / n as f64;
    let exc_weights = WeightSampler::new(config.mu_e(), config.sigma_e())?;
    let inh_weights = WeightSampler::new(config.mu_i()?, config.sigma_i())?;
    let alpha = config.alpha;

    let mut rng = seed::rng(config.seed, seed::stream::NETWORK);
    let mut exc_rows = Vec::with_capacity(n);
    let mut inh_rows = Vec::with_capacity(n);
    for _i in 0..n {
        let mut exc = Vec::new();
        let mut inh = Vec::new();
        for (j, kind) in neuron_types.iter().enumerate() {
            if rng.gen::<f64>() >= p_link {
                continue;
            }
            match kind {
                NeuronType::Excitatory => exc.push((j, T::lit(alpha * exc_weights.draw(&mut rng)))),
                NeuronType::Inhibitory => inh.push((j, T::lit(alpha * inh_weights.draw(&mut rng)))),
            }
        }
        exc_rows.push(exc);
        inh_rows.push(inh);
    }

    let mut rng = seed::rng(config.seed, seed::stream::INPUT_WEIGHTS);
    let n_input = ((n as f64) * config.input_fraction).round().max(1.0) as usize;
    let mut input_weights = vec![T::zero(); n];
    let mut chosen = sample(&mut rng, n, n_input.min(n)).into_vec();
    chosen.sort_unstable();
    let half = config.input_spread / 2.0;
    for i in chosen {
        input_weights[i] = T::lit(if half > 0.0 { rng.gen_range(-half..=half) } else { 0.0 });
    }

    let res = EIReservoir::assemble(
        Some(NetworkConfig { dale: DaleMode::Respect, ..config.clone() }),
        neuron_types,
        SparseMatrix::from_rows(n, exc_rows),
        SparseMatrix::from_rows(n, inh_rows),
        input_weights,
        vec![T::lit(config.theta); n],
        vec![T::lit(config.leak); n],
        T::lit(config.steepness),
    );
    Ok(match config.dale {
        DaleMode::Respect => res,
        DaleMode::Shuffled => res.shuffle_dale(config.seed),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reservoir::NeuronType;

    fn small(seed: u64) -> NetworkConfig {
        NetworkConfig { n_neurons: 200, seed, ..Default::default() }
    }

    #[test]
    fn mean_degree_too_large_is_a_config_error() {
        let c = NetworkConfig { n_neurons: 20, ..Default::default() };
        assert!(matches!(build_reservoir::<f64>(&c), Err(Error::Config(_))));
    }

    #[test]
    fn population_split_and_dale_columns() {
        let res = build_reservoir::<f64>(&small(3)).unwrap();
        let n_exc = res.neuron_types().iter().filter(|t| **t == NeuronType::Excitatory).count();
        assert_eq!(n_exc, 160);
        for (_, j, _) in res.excitatory().iter() {
            assert_eq!(res.neuron_types()[j], NeuronType::Excitatory);
        }
        for (_, j, _) in res.inhibitory().iter() {
            assert_eq!(res.neuron_types()[j], NeuronType::Inhibitory);
        }
        assert!(res.excitatory().values().iter().all(|&w| w > 0.0));
        assert!(res.inhibitory().values().iter().all(|&w| w > 0.0));
    }

    #[test]
    fn input_weights_cover_requested_fraction() {
        let c = NetworkConfig { input_spread: 0.4, ..small(5) };
        let res = build_reservoir::<f64>(&c).unwrap();
        let nz: Vec<f64> = res.input_weights().iter().copied().filter(|&w| w != 0.0).collect();
        assert_eq!(nz.len(), 60);
        assert!(nz.iter().all(|w| w.abs() <= 0.2));
    }

    #[test]
    fn same_seed_same_bits() {
        let a = build_reservoir::<f64>(&small(11)).unwrap();
        let b = build_reservoir::<f64>(&small(11)).unwrap();
        let c = build_reservoir::<f64>(&small(12)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn deterministic_weights_give_degree_balances() {
        let c = NetworkConfig { sigma_e: Some(0.0), sigma_i: Some(0.0), ..small(2) };
        let res = build_reservoir::<f64>(&c).unwrap();
        let mu_e = c.mu_e();
        let mu_i = c.mu_i().unwrap();
        let local = res.local_balance();
        for i in 0..res.len() {
            let k_e = res.excitatory().row(i).0.len() as f64;
            let k_i = res.inhibitory().row(i).0.len() as f64;
            assert!((local[i] - (k_e * mu_e - k_i * mu_i)).abs() < 1e-12);
        }
    }

    #[test]
    fn over_excited_config_keeps_negative_magnitudes() {
        let c = NetworkConfig { beta: 1.5, ..small(4) };
        let res = build_reservoir::<f64>(&c).unwrap();
        let mean: f64 = res.inhibitory().values().iter().sum::<f64>() / res.inhibitory().nnz() as f64;
        assert!((mean + 0.05).abs() < 0.01, "mean magnitude {mean}");
    }

    #[test]
    fn alpha_scales_every_weight() {
        let a = build_reservoir::<f64>(&small(9)).unwrap();
        let b = build_reservoir::<f64>(&NetworkConfig { alpha: 2.0, ..small(9) }).unwrap();
        for (x, y) in a.excitatory().values().iter().zip(b.excitatory().values()) {
            assert!((2.0 * x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn shuffled_config_preserves_weight_multiset() {
        let respect = build_reservoir::<f64>(&small(21)).unwrap();
        let shuffled =
            build_reservoir::<f64>(&NetworkConfig { dale: DaleMode::Shuffled, ..small(21) }).unwrap();
        let signed = |r: &EIReservoir<f64>| {
            let mut w: Vec<f64> = r.excitatory().values().to_vec();
            w.extend(r.inhibitory().values().iter().map(|v| -v));
            w.sort_by(f64::total_cmp);
            w
        };
        assert_eq!(signed(&respect), signed(&shuffled));
        // some columns now mix signs
        let mixed = (0..shuffled.len()).any(|j| {
            let e = (0..shuffled.len()).any(|i| shuffled.excitatory().has_link(i, j));
            let i_ = (0..shuffled.len()).any(|i| shuffled.inhibitory().has_link(i, j));
            e && i_
        });
        assert!(mixed);
        assert!((respect.global_balance() - shuffled.global_balance()).abs() < 1e-12);
    }

    #[test]
    fn f32_and_f64_share_structure() {
        let a = build_reservoir::<f64>(&small(1)).unwrap();
        let b = build_reservoir::<f32>(&small(1)).unwrap();
        assert_eq!(a.excitatory().nnz(), b.excitatory().nnz());
        for (x, y) in a.excitatory().values().iter().zip(b.excitatory().values()) {
            assert_eq!(*x as f32, *y);
        }
    }
}
