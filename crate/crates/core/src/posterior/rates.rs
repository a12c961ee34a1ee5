use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::partition::PartitionEvaluator;
use crate::error::{Error, Result};
use crate::models::SolvedFamily;
use crate::numeric::mean_stderr;
use crate::simulate::ObservationSource;

/// Floor on the tolerance used to collect near-minimizers.
pub const THETA_MIN_EPS_FLOOR: f64 = 1e-9;

/// `2 (P(f_theta) - int f_theta d(mu_theta_star))`.
pub fn rate_closed_form_direct(family: &SolvedFamily, theta: usize, theta_star: usize) -> Result<f64> {
    Ok(2.0 * direct_partition_rate(family, theta, theta_star)?)
}

/// Almost-sure limit of `-(1/n) log Z_n^theta` for the direct-observation loss under
/// observations drawn from `mu_theta_star`: the cross-entropy `P(f_theta) - int f_theta d(mu_theta_star)`.
pub fn direct_partition_rate(family: &SolvedFamily, theta: usize, theta_star: usize) -> Result<f64> {
    let model = family.model(theta);
    let truth = family.model(theta_star).measure();
    let mean = truth.expectation(model.potential())?;
    if mean == f64::NEG_INFINITY {
        return Ok(f64::INFINITY);
    }
    Ok(model.pressure() - mean)
}

/// Replicate seeds derived from one master seed.
pub fn replicate_seeds(master: u64, count: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    (0..count).map(|_| rng.random()).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
    /// `-(1/n) log Z_n^theta` per replicate.
    pub values: Vec<f64>,
}

/// Mean and standard error of `-(1/n) log Z_n^theta` over independent observation draws.
pub fn rate_estimate(
    evaluator: &dyn PartitionEvaluator,
    theta: usize,
    source: &dyn ObservationSource,
    n: usize,
    seeds: &[u64],
    beta: f64,
) -> Result<RateEstimate> {
    let table = rate_table(evaluator, source, n, seeds, beta, None)?;
    let row = &table.rows[theta];
    Ok(RateEstimate {
        mean: row.v_hat,
        stderr: row.stderr,
        n,
        values: table.replicates.iter().map(|r| r[theta]).collect(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateRow {
    pub theta: usize,
    pub v_hat: f64,
    pub stderr: f64,
    pub v_closed: Option<f64>,
    pub n_used: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateTable {
    pub rows: Vec<RateRow>,
    /// `-(1/n) log Z_n^theta` for every replicate (outer) and grid point (inner).
    pub replicates: Vec<Vec<f64>>,
}

impl RateTable {
    pub fn v_hat(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.v_hat).collect()
    }

    pub fn min_v_hat(&self) -> f64 {
        self.rows.iter().map(|r| r.v_hat).fold(f64::INFINITY, f64::min)
    }

    pub fn max_stderr(&self) -> f64 {
        self.rows.iter().map(|r| r.stderr).fold(0.0, f64::max)
    }
}

/// Rate estimates for every grid point; each replicate's observations are drawn once and
/// scored at all grid points.
pub fn rate_table(
    evaluator: &dyn PartitionEvaluator,
    source: &dyn ObservationSource,
    n: usize,
    seeds: &[u64],
    beta: f64,
    v_closed: Option<Vec<f64>>,
) -> Result<RateTable> {
    if seeds.is_empty() {
        return Err(Error::DomainError("at least one replicate is required".into()));
    }
    if n == 0 {
        return Err(Error::DomainError("observation length must be positive".into()));
    }
    let g = evaluator.grid_len();
    if v_closed.as_ref().is_some_and(|v| v.len() != g) {
        return Err(Error::ShapeMismatch("closed-form rates do not cover the grid".into()));
    }
    let replicates = seeds
        .par_iter()
        .map(|&seed| {
            let ys = source.observe(n, seed)?;
            evaluator.check(&ys)?;
            (0..g)
                .map(|i| Ok((0.0 - evaluator.log_partition(i, &ys, beta)?) / n as f64))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let rows = (0..g)
        .map(|i| {
            let vals: Vec<f64> = replicates.iter().map(|r| r[i]).collect();
            let (mean, stderr) = mean_stderr(&vals);
            RateRow {
                theta: i,
                v_hat: mean,
                stderr,
                v_closed: v_closed.as_ref().map(|v| v[i]),
                n_used: n,
            }
        })
        .collect();
    Ok(RateTable { rows, replicates })
}

/// Grid points whose estimated rate is within `epsilon` of the minimum. The default
/// tolerance is `max(1e-9, 2 * largest stderr)`.
pub fn theta_min(rates: &RateTable, epsilon: Option<f64>) -> Vec<usize> {
    let eps = epsilon.unwrap_or_else(|| THETA_MIN_EPS_FLOOR.max(2.0 * rates.max_stderr()));
    let best = rates.min_v_hat();
    rates
        .rows
        .iter()
        .filter(|r| r.v_hat <= best + eps)
        .map(|r| r.theta)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{bernoulli_family, LossSpec, Observations, ThetaGrid};
    use crate::posterior::{direct_loss, HiddenEvaluator};
    use crate::simulate::{HiddenSource, MeasureSource};
    use crate::thermo::divergence_rate;

    fn bern(values: &[f64]) -> SolvedFamily {
        bernoulli_family(ThetaGrid::scalar(values, None).unwrap()).unwrap().solve().unwrap()
    }

    fn h(p: f64) -> f64 {
        -p * p.ln() - (1.0 - p) * (1.0 - p).ln()
    }

    #[test]
    fn closed_form_examples() {
        let fam = bern(&[0.3, 0.5]);
        assert!((rate_closed_form_direct(&fam, 1, 1).unwrap() - 1.386294).abs() < 1e-6);
        let at_star = rate_closed_form_direct(&fam, 0, 0).unwrap();
        assert!((at_star - 1.221729).abs() < 1e-6);
        assert!((at_star - 2.0 * h(0.3)).abs() < 1e-12);
        let off = rate_closed_form_direct(&fam, 1, 0).unwrap();
        assert!((off - 1.386294).abs() < 1e-6);
        let kl = divergence_rate(fam.model(0).measure(), fam.model(1)).unwrap();
        assert!((off - at_star - 2.0 * kl).abs() < 1e-10);
        assert!((off - at_star - 0.164565).abs() < 1e-6);
    }

    #[test]
    fn zero_loss_estimate_is_exact() {
        let fam = bern(&[0.3, 0.5]);
        let spec = LossSpec::zero(2, 2);
        let eval = HiddenEvaluator::new(&fam, &spec).unwrap();
        let src = MeasureSource {
            measure: fam.model(0).measure().clone(),
        };
        let est = rate_estimate(&eval, 1, &src, 1000, &replicate_seeds(1, 4), 1.0).unwrap();
        assert_eq!((est.mean, est.stderr), (0.0, 0.0));
    }

    #[test]
    fn direct_estimate_tracks_partition_rate() {
        let fam = bern(&[0.1, 0.3, 0.5, 0.7]);
        let loss = direct_loss(&fam);
        let src = MeasureSource {
            measure: fam.model(1).measure().clone(),
        };
        let n = 20_000;
        let table = rate_table(&loss, &src, n, &replicate_seeds(5, 8), 1.0, None).unwrap();
        for row in &table.rows {
            let limit = direct_partition_rate(&fam, row.theta, 1).unwrap();
            // K = 1 for product measures, so the bias allowance 2 log(K)/n vanishes
            assert!(
                (row.v_hat - limit).abs() <= 3.0 * row.stderr + 1e-12,
                "theta {}: {} vs {}",
                row.theta,
                row.v_hat,
                limit
            );
        }
        assert_eq!(theta_min(&table, None), vec![1]);
    }

    #[test]
    fn uninformative_emissions_flatten_rates() {
        let fam = bern(&[0.2, 0.5, 0.8]);
        let spread = |s: f64| {
            let spec = LossSpec::gaussian(
                vec![vec![0.0, 1.0]; 3],
                vec![vec![s; 2]; 3],
            )
            .unwrap();
            let eval = HiddenEvaluator::new(&fam, &spec).unwrap();
            let src = HiddenSource {
                measure: fam.model(1).measure().clone(),
                spec: spec.clone(),
                theta: 1,
            };
            let table = rate_table(&eval, &src, 2000, &replicate_seeds(3, 4), 1.0, None).unwrap();
            let v = table.v_hat();
            v.iter().copied().fold(f64::NEG_INFINITY, f64::max) - v.iter().copied().fold(f64::INFINITY, f64::min)
        };
        let (a, b, c) = (spread(1.0), spread(2.0), spread(4.0));
        assert!(b < a && c < b, "spreads {a} {b} {c}");
    }

    #[test]
    fn theta_min_ties() {
        let table = RateTable {
            rows: (0..3)
                .map(|i| RateRow {
                    theta: i,
                    v_hat: 0.5,
                    stderr: 0.0,
                    v_closed: None,
                    n_used: 10,
                })
                .collect(),
            replicates: vec![],
        };
        assert_eq!(theta_min(&table, None), vec![0, 1, 2]);
    }

    #[test]
    fn symmetric_emissions_are_both_minimizers() {
        // theta and theta' swap the roles of the two hidden states: identical emission laws
        let fam = bern(&[0.3, 0.7]);
        let spec = LossSpec::gaussian(vec![vec![-1.0, 1.0], vec![1.0, -1.0]], vec![vec![0.5; 2]; 2]).unwrap();
        let eval = HiddenEvaluator::new(&fam, &spec).unwrap();
        let src = HiddenSource {
            measure: fam.model(0).measure().clone(),
            spec: spec.clone(),
            theta: 0,
        };
        let table = rate_table(&eval, &src, 500, &replicate_seeds(2, 3), 1.0, None).unwrap();
        assert!((table.rows[0].v_hat - table.rows[1].v_hat).abs() < 1e-10);
        assert_eq!(theta_min(&table, None), vec![0, 1]);
        let ys = src.observe(50, 9).unwrap();
        assert!(matches!(ys, Observations::Real(_)));
    }
}
