use ndarray::ArrayView2;
use rand::seq::index::sample;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrelationMode {
    /// Uniformly sampled distinct pairs (all pairs if fewer exist).
    Sampled { n_pairs: usize, seed: u64 },
    AllPairs,
}

impl Default for CorrelationMode {
    fn default() -> Self {
        CorrelationMode::Sampled { n_pairs: 1000, seed: 0 }
    }
}

/// Pearson correlation; `None` if either series is constant.
pub fn pearson<T: Real>(a: &[T], b: &[T]) -> Option<f64> {
    let n = a.len().min(b.len());
    if n < 2 {
        return None;
    }
    let ma = a.iter().map(|x| x.as_f64()).sum::<f64>() / n as f64;
    let mb = b.iter().map(|x| x.as_f64()).sum::<f64>() / n as f64;
    let (mut c, mut va, mut vb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x.as_f64() - ma, y.as_f64() - mb);
        c += dx * dy;
        va += dx * dx;
        vb += dy * dy;
    }
    let flat = |s: &[T]| s[..n].iter().all(|&x| x == s[0]);
    if va == 0.0 || vb == 0.0 || flat(a) || flat(b) {
        return None;
    }
    Some(c / (va * vb).sqrt())
}

/// Mean Pearson correlation over pairs of distinct, non-constant neurons
/// (columns of `states`).
pub fn mean_pairwise_correlation<T: Real>(states: ArrayView2<T>, mode: CorrelationMode) -> Result<f64> {
    let t_len = states.nrows();
    if t_len < 2 {
        return Err(Error::Degenerate("correlation needs at least two time steps".into()));
    }
    // standardized columns of the non-constant neurons
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for col in states.columns() {
        let v: Vec<f64> = col.iter().map(|x| x.as_f64()).collect();
        let m = v.iter().sum::<f64>() / t_len as f64;
        let constant = v.iter().all(|&x| x == v[0]);
        let ss = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>();
        if !constant && ss > 0.0 {
            let s = ss.sqrt();
            columns.push(v.into_iter().map(|x| (x - m) / s).collect());
        }
    }
    let k = columns.len();
    if k < 2 {
        return Err(Error::Degenerate(format!("only {k} non-constant neurons")));
    }
    let total = k * (k - 1) / 2;
    let corr = |i: usize, j: usize| -> f64 {
        columns[i].iter().zip(&columns[j]).map(|(a, b)| a * b).sum()
    };
    let pairs: Vec<usize> = match mode {
        CorrelationMode::Sampled { n_pairs, seed: s } if n_pairs < total => {
            let mut rng = seed::rng(s, seed::stream::PAIRS);
            sample(&mut rng, total, n_pairs).into_vec()
        }
        _ => (0..total).collect(),
    };
    let sum: f64 = pairs.iter().map(|&p| {
        let (i, j) = pair_from_index(p, k);
        corr(i, j)
    }).sum();
    Ok(sum / pairs.len() as f64)
}

/// Maps `p` in `0..k(k-1)/2` to the `p`-th pair `(i, j)`, `i < j`, in
/// row-major order.
fn pair_from_index(mut p: usize, k: usize) -> (usize, usize) {
    let mut i = 0;
    loop {
        let row = k - 1 - i;
        if p < row {
            return (i, i + 1 + p);
        }
        p -= row;
        i += 1;
    }
}
