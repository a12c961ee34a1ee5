mod common;

use std::collections::HashMap;
use std::sync::Arc;

use common::random_potential;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thermopost::models::{bernoulli_family, LossSpec, Obs, ThetaGrid};
use thermopost::numeric::mean_stderr;
use thermopost::simulate::sample_trajectory;
use thermopost::thermo::{divergence_rate, kl_rate_empirical, solve_gibbs, MarkovMeasure, Potential};
use thermopost::{Sft, Symbol, Word};

const BATCHES: usize = 100;

/// Largest deviation of empirical m-word frequencies from cylinder probabilities, in units of
/// batch-means standard errors.
fn worst_z_score(measure: &MarkovMeasure, n: usize, seed: u64, m: usize) -> f64 {
    let xs = sample_trajectory(measure, n, seed).unwrap().symbols;
    let batch = n / BATCHES;
    let mut counts: HashMap<&[Symbol], Vec<f64>> = HashMap::new();
    for k in 0..BATCHES * batch - m + 1 {
        counts.entry(&xs[k..k + m]).or_insert_with(|| vec![0.0; BATCHES])[k / batch] += 1.0;
    }
    let words: Vec<Word> = measure.sft().enumerate_words(m).unwrap();
    let mut worst: f64 = 0.0;
    for w in &words {
        let p = measure.cylinder_prob(w);
        let freqs: Vec<f64> = counts
            .get(w.as_slice())
            .map(|c| c.iter().map(|x| x / batch as f64).collect())
            .unwrap_or_else(|| vec![0.0; BATCHES]);
        let (mean, se) = mean_stderr(&freqs);
        if se == 0.0 {
            assert!((mean - p).abs() < 1e-12, "word {w:?}: frequency {mean}, probability {p}");
            continue;
        }
        worst = worst.max((mean - p).abs() / se);
    }
    let charged: usize = counts.keys().filter(|w| measure.cylinder_prob(w) == 0.0).count();
    assert_eq!(charged, 0, "sampled a word of probability zero");
    worst
}

#[test]
fn word_frequencies_converge_to_cylinder_probabilities() {
    let golden = solve_gibbs(&Potential::constant(Arc::new(Sft::golden_mean()), 0.0).unwrap()).unwrap();
    let sft = Arc::new(Sft::from_strings(3, &["00", "21"]).unwrap());
    let markov = solve_gibbs(&random_potential(&sft, 2, 1.0, 9)).unwrap();
    for (name, measure) in [("golden mean", golden.measure()), ("three symbols", markov.measure())] {
        for m in 1..=4 {
            let z = worst_z_score(measure, 1_000_000, 17, m);
            assert!(z <= 5.0, "{name}, m = {m}: {z} standard errors");
        }
    }
}

#[test]
fn bernoulli_family_reproduces_product_measures() {
    let grid = ThetaGrid::scalar(&[0.15, 0.5, 0.8], None).unwrap();
    let family = bernoulli_family(grid).unwrap().solve().unwrap();
    let sft = Sft::full_shift(2).unwrap();
    for (i, &theta) in [0.15f64, 0.5, 0.8].iter().enumerate() {
        for m in 1..=10 {
            for w in sft.enumerate_words(m).unwrap() {
                let ones = w.iter().filter(|&&s| s == 1).count() as i32;
                let expected = theta.powi(ones) * (1.0 - theta).powi(m as i32 - ones);
                assert!((family.model(i).measure().cylinder_prob(&w) - expected).abs() <= 1e-10);
            }
        }
    }
}

#[test]
fn loss_bounds_dominate_random_probes() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let specs = [
        LossSpec::squared(vec![vec![-1.0, 0.5, 2.0], vec![0.0, 0.0, 1.0]], 3).unwrap(),
        LossSpec::gaussian(vec![vec![0.0, 1.0, -2.0], vec![0.3, 1.3, 0.0]], vec![vec![0.5, 1.0, 2.0]; 2]).unwrap(),
    ];
    for spec in &specs {
        for _ in 0..10_000 {
            let y = rng.random_range(-10.0..10.0);
            let bound = spec.loss_bound(Obs::Real(y)).unwrap();
            for theta in 0..2 {
                for s in 0..3 {
                    let l = spec.loss_eval(theta, s, Obs::Real(y)).unwrap();
                    assert!(l <= bound, "{} loss {l} above bound {bound}", spec.kind().name());
                    if spec.kind().name() == "squared" {
                        assert!(l >= 0.0);
                        assert_eq!(l == 0.0, spec.observation_map(theta, s).unwrap() == y);
                    }
                }
            }
        }
    }
    let discrete = LossSpec::discrete(vec![0, 2, 1], 2).unwrap();
    for _ in 0..10_000 {
        let y = rng.random_range(0..3);
        let bound = discrete.loss_bound(Obs::Symbol(y)).unwrap();
        for s in 0..3 {
            let l = discrete.loss_eval(0, s, Obs::Symbol(y)).unwrap();
            assert!(l == 0.0 || l == 1.0);
            assert!(l <= bound);
        }
    }
}

#[test]
fn finite_depth_kl_rate_approaches_the_closed_form_at_rate_one_over_n() {
    let sft = Arc::new(Sft::golden_mean());
    let model = solve_gibbs(&random_potential(&sft, 2, 1.0, 4)).unwrap();
    let eta = solve_gibbs(&random_potential(&sft, 2, 1.0, 8)).unwrap();
    let limit = divergence_rate(eta.measure(), &model).unwrap();
    let scaled: Vec<f64> = (6..=12)
        .map(|n| n as f64 * (kl_rate_empirical(eta.measure(), &model, n).unwrap() - limit))
        .collect();
    let spread = scaled.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b)) - scaled.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    assert!(spread < 1e-6, "n (rate_n - rate) not settled: {scaled:?}");
}
