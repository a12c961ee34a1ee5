//! Seeded generation of observed systems.
//!
//! All randomness comes from ChaCha8 seeded with a 64-bit seed; trajectories, emissions and
//! misspecified generators draw from disjoint streams of that generator, so reusing one seed
//! for a hidden path and its emissions does not correlate them.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;

use crate::error::{Error, Result};
use crate::models::{LossSpec, Observations};
use crate::sft::Symbol;
use crate::thermo::MarkovMeasure;

const TRAJECTORY_STREAM: u64 = 0;
const EMISSION_STREAM: u64 = 1;
const GENERATOR_STREAM: u64 = 2;

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub symbols: Vec<Symbol>,
    pub seed: u64,
    pub source: String,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmissionSequence {
    pub values: Vec<f64>,
    pub hidden: Option<Trajectory>,
    pub seed: u64,
    pub theta_star: Option<Vec<f64>>,
}

impl EmissionSequence {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Samples `n` symbols from a stationary block-Markov measure: an initial block from the
/// stationary law, then `n - block_len` kernel steps.
pub fn sample_trajectory(measure: impl AsRef<MarkovMeasure>, n: usize, seed: u64) -> Result<Trajectory> {
    let measure = measure.as_ref();
    let sft = measure.sft();
    let bl = sft.block_len();
    if n < bl {
        return Err(Error::DomainError(format!(
            "trajectory length {n} is shorter than the block length {bl}"
        )));
    }
    let weights = |row: Vec<f64>| {
        WeightedIndex::new(row).map_err(|e| Error::DomainError(format!("sampling weights: {e}")))
    };
    let initial = weights(measure.stationary().to_vec())?;
    let rows = measure
        .kernel()
        .rows()
        .into_iter()
        .map(|r| weights(r.to_vec()))
        .collect::<Result<Vec<_>>>()?;

    let mut rng = rng(seed, TRAJECTORY_STREAM);
    let mut state = initial.sample(&mut rng);
    let mut symbols = Vec::with_capacity(n);
    symbols.extend_from_slice(sft.block(state));
    for _ in bl..n {
        state = rows[state].sample(&mut rng);
        symbols.push(*sft.block(state).last().expect("blocks are non-empty"));
    }
    Ok(Trajectory {
        symbols,
        seed,
        source: "gibbs".into(),
    })
}

/// Gaussian emissions `values[k] ~ N(m_theta(x_k), s_theta(x_k)^2)`, independent given the path.
pub fn emit(hidden: &Trajectory, spec: &LossSpec, theta: usize, seed: u64) -> Result<EmissionSequence> {
    let mut dists = Vec::with_capacity(spec.alphabet_size());
    for s in 0..spec.alphabet_size() {
        let (m, sd) = spec.emission(theta, s as Symbol)?;
        dists.push(Normal::new(m, sd).map_err(|e| Error::DomainError(e.to_string()))?);
    }
    let mut rng = rng(seed, EMISSION_STREAM);
    let values = hidden
        .symbols
        .iter()
        .map(|&x| dists[x as usize].sample(&mut rng))
        .collect();
    Ok(EmissionSequence {
        values,
        hidden: Some(hidden.clone()),
        seed,
        theta_star: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Generator {
    /// Logistic map `x -> a x (1 - x)` read through the threshold `1/2`.
    LogisticBinarized,
    /// Period-`p` pattern plus Gaussian jitter.
    PeriodicNoise,
}

impl Generator {
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "logistic_binarized" => Ok(Generator::LogisticBinarized),
            "periodic_noise" => Ok(Generator::PeriodicNoise),
            other => Err(Error::UnknownGenerator(other.to_string())),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Generator::LogisticBinarized => "logistic_binarized",
            Generator::PeriodicNoise => "periodic_noise",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorParams {
    pub logistic_a: f64,
    /// Iterations discarded before recording.
    pub burn_in: usize,
    pub period: usize,
    pub jitter: f64,
    /// One period of values; defaults to `k mod period`.
    pub pattern: Option<Vec<f64>>,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        Self {
            logistic_a: 3.9,
            burn_in: 100,
            period: 2,
            jitter: 0.0,
            pattern: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Generated {
    Symbols(Trajectory),
    Values(EmissionSequence),
}

impl Generated {
    pub fn into_observations(self) -> Observations {
        match self {
            Generated::Symbols(t) => Observations::Symbols(t.symbols),
            Generated::Values(e) => Observations::Real(e.values),
        }
    }
}

/// Observation processes that lie outside every finite-range Gibbs family.
pub fn misspecified_source(name: &str, n: usize, seed: u64, params: &GeneratorParams) -> Result<Generated> {
    let generator = Generator::from_name(name)?;
    let mut rng = rng(seed, GENERATOR_STREAM);
    match generator {
        Generator::LogisticBinarized => {
            let a = params.logistic_a;
            if !(a > 0.0 && a <= 4.0) {
                return Err(Error::DomainError(format!("logistic parameter {a} outside (0, 4]")));
            }
            let mut x: f64 = rng.random_range(0.05..0.95);
            for _ in 0..params.burn_in {
                x = a * x * (1.0 - x);
            }
            let mut symbols = Vec::with_capacity(n);
            for _ in 0..n {
                symbols.push(Symbol::from(x > 0.5));
                x = a * x * (1.0 - x);
            }
            Ok(Generated::Symbols(Trajectory {
                symbols,
                seed,
                source: generator.name().into(),
            }))
        }
        Generator::PeriodicNoise => {
            let p = params.period;
            if p == 0 {
                return Err(Error::DomainError("period must be positive".into()));
            }
            let pattern: Vec<f64> = match &params.pattern {
                Some(pat) if pat.len() == p => pat.clone(),
                Some(pat) => {
                    return Err(Error::ShapeMismatch(format!(
                        "pattern has {} values for period {p}",
                        pat.len()
                    )))
                }
                None => (0..p).map(|k| k as f64).collect(),
            };
            let values = if params.jitter == 0.0 {
                (0..n).map(|k| pattern[k % p]).collect()
            } else {
                let noise = Normal::new(0.0, params.jitter).map_err(|e| Error::DomainError(e.to_string()))?;
                (0..n).map(|k| pattern[k % p] + noise.sample(&mut rng)).collect()
            };
            Ok(Generated::Values(EmissionSequence {
                values,
                hidden: None,
                seed,
                theta_star: None,
            }))
        }
    }
}

/// Anything that can produce seeded observation sequences of a requested length.
pub trait ObservationSource: Sync {
    fn observe(&self, n: usize, seed: u64) -> Result<Observations>;
}

/// Direct observation of a stationary block-Markov measure.
#[derive(Debug, Clone)]
pub struct MeasureSource {
    pub measure: MarkovMeasure,
}

impl ObservationSource for MeasureSource {
    fn observe(&self, n: usize, seed: u64) -> Result<Observations> {
        Ok(Observations::Symbols(sample_trajectory(&self.measure, n, seed)?.symbols))
    }
}

/// Gaussian emissions over a hidden path of a block-Markov measure.
#[derive(Debug, Clone)]
pub struct HiddenSource {
    pub measure: MarkovMeasure,
    pub spec: LossSpec,
    pub theta: usize,
}

impl ObservationSource for HiddenSource {
    fn observe(&self, n: usize, seed: u64) -> Result<Observations> {
        let hidden = sample_trajectory(&self.measure, n, seed)?;
        Ok(Observations::Real(emit(&hidden, &self.spec, self.theta, seed)?.values))
    }
}

#[derive(Debug, Clone)]
pub struct GeneratorSource {
    pub name: String,
    pub params: GeneratorParams,
}

impl ObservationSource for GeneratorSource {
    fn observe(&self, n: usize, seed: u64) -> Result<Observations> {
        Ok(misspecified_source(&self.name, n, seed, &self.params)?.into_observations())
    }
}
