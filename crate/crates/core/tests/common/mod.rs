#![allow(dead_code)]

use std::sync::Arc;

use ndarray::Array2;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thermopost::models::{LossSpec, Observations};
use thermopost::numeric::logsumexp;
use thermopost::thermo::{GibbsModel, MarkovMeasure, Potential};
use thermopost::{Sft, Symbol};

/// Mixing shifts on two or three symbols with up to three forbidden words of length 2 or 3.
pub fn mixing_sft() -> impl Strategy<Value = Sft> {
    (2usize..=3)
        .prop_flat_map(|a| {
            let word = (2usize..=3).prop_flat_map(move |len| prop::collection::vec(0..a as Symbol, len));
            (Just(a), prop::collection::vec(word, 0..=3))
        })
        .prop_filter_map("shift must be mixing", |(a, forbidden)| Sft::new(a, &forbidden).ok())
}

/// A potential of the given range whose values are drawn from `[-scale, scale]`.
pub fn random_potential(sft: &Arc<Sft>, range: usize, scale: f64, seed: u64) -> Potential {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = sft.alphabet_size();
    let values: Vec<f64> = (0..a.pow(range as u32)).map(|_| rng.random_range(-scale..=scale)).collect();
    Potential::from_fn(sft.clone(), range, |w| {
        values[w.iter().fold(0usize, |acc, &s| acc * a + s as usize)]
    })
    .unwrap()
}

/// The model's kernel with each admissible entry scaled by `exp(eps * u)`, `u` uniform in
/// `[-1, 1]`, then renormalized.
pub fn perturbed_measure(model: &GibbsModel, eps: f64, seed: u64) -> MarkovMeasure {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut k: Array2<f64> = model.kernel().clone();
    for mut row in k.rows_mut() {
        for q in row.iter_mut() {
            if *q > 0.0 {
                *q *= (eps * rng.random_range(-1.0..=1.0)).exp();
            }
        }
        let s = row.sum();
        row.mapv_inplace(|q| q / s);
    }
    MarkovMeasure::from_kernel(model.sft().clone(), k).unwrap()
}

/// `log sum_x mu[x] exp(-beta sum_k l(theta, x_k, y_k))` over every admissible word.
pub fn brute_force_log_partition(
    measure: &MarkovMeasure,
    spec: &LossSpec,
    theta: usize,
    ys: &Observations,
    beta: f64,
) -> f64 {
    let words = measure.sft().enumerate_words(ys.len()).unwrap();
    let terms: Vec<f64> = words
        .iter()
        .map(|w| measure.log_cylinder_prob(w) - beta * spec.loss_path_sum(theta, w, ys).unwrap())
        .collect();
    logsumexp(&terms)
}

/// Fibonacci numbers with `F(1) = F(2) = 1`.
pub fn fibonacci(k: usize) -> u128 {
    let (mut a, mut b) = (0u128, 1u128);
    for _ in 0..k {
        (a, b) = (b, a + b);
    }
    a
}
