use rayon::prelude::*;

use super::partition::{direct_loss, HiddenEvaluator, PartitionEvaluator};
use crate::error::{Error, Result};
use crate::models::{LossKind, LossSpec, Observations, SolvedFamily, ThetaGrid};
use crate::numeric::logsumexp_iter;
use crate::sft::Symbol;

/// A posterior over a parameter grid after `n` observations.
///
/// Masses are `prior(theta) exp(log_weight(theta) - log_z)`, with
/// `log_z = log sum prior exp(log_weight)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorGrid {
    grid: ThetaGrid,
    n: usize,
    log_weights: Vec<f64>,
    log_z: f64,
    masses: Vec<f64>,
}

impl PosteriorGrid {
    pub fn from_log_weights(grid: ThetaGrid, n: usize, log_weights: Vec<f64>) -> Result<Self> {
        if log_weights.len() != grid.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} log weights for {} grid points",
                log_weights.len(),
                grid.len()
            )));
        }
        if log_weights.iter().any(|w| w.is_nan() || *w == f64::INFINITY) {
            return Err(Error::DomainError("log weights must be finite or -inf".into()));
        }
        if log_weights.iter().all(|&w| w == f64::NEG_INFINITY) {
            return Err(Error::InadmissibleObservation);
        }
        // Equal weights cancel: the posterior is the prior, bit for bit.
        if log_weights.iter().all(|w| w.to_bits() == log_weights[0].to_bits()) {
            let masses = grid.prior().to_vec();
            let log_z = log_weights[0];
            return Ok(Self {
                grid,
                n,
                log_weights,
                log_z,
                masses,
            });
        }
        let joint: Vec<f64> = (0..grid.len()).map(|i| grid.log_prior(i) + log_weights[i]).collect();
        let log_z = logsumexp_iter(joint.iter().copied());
        let masses = joint.iter().map(|j| (j - log_z).exp()).collect();
        Ok(Self {
            grid,
            n,
            log_weights,
            log_z,
            masses,
        })
    }

    pub fn grid(&self) -> &ThetaGrid {
        &self.grid
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn log_z(&self) -> f64 {
        self.log_z
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn mass(&self, i: usize) -> f64 {
        self.masses[i]
    }

    pub fn mass_of(&self, set: &[usize]) -> f64 {
        set.iter().map(|&i| self.masses[i]).sum()
    }

    /// `log pi_n(set)`, computed without leaving the log domain.
    pub fn log_mass_of(&self, set: &[usize]) -> f64 {
        logsumexp_iter(set.iter().map(|&i| self.grid.log_prior(i) + self.log_weights[i])) - self.log_z
    }

    /// All grid points of maximal posterior mass.
    pub fn mode(&self) -> Vec<usize> {
        let best = self.masses.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (0..self.masses.len()).filter(|&i| self.masses[i] == best).collect()
    }
}

/// Posterior from any per-grid-point partition evaluator; grid points are evaluated in parallel.
pub fn posterior_from_evaluator(
    grid: &ThetaGrid,
    evaluator: &dyn PartitionEvaluator,
    ys: &Observations,
    beta: f64,
) -> Result<PosteriorGrid> {
    if evaluator.grid_len() != grid.len() {
        return Err(Error::ShapeMismatch(format!(
            "evaluator covers {} grid points, grid has {}",
            evaluator.grid_len(),
            grid.len()
        )));
    }
    evaluator.check(ys)?;
    let log_weights = (0..grid.len())
        .into_par_iter()
        .map(|i| evaluator.log_partition(i, ys, beta))
        .collect::<Result<Vec<_>>>()?;
    PosteriorGrid::from_log_weights(grid.clone(), ys.len(), log_weights)
}

/// Gibbs posterior with hidden-state loss `beta * l`.
pub fn gibbs_posterior(family: &SolvedFamily, spec: &LossSpec, ys: &Observations, beta: f64) -> Result<PosteriorGrid> {
    let evaluator = HiddenEvaluator::new(family, spec)?;
    posterior_from_evaluator(family.grid(), &evaluator, ys, beta)
}

/// Gibbs posterior with the direct-observation loss `P(f_theta) - f_theta(window)`.
pub fn direct_gibbs_posterior(family: &SolvedFamily, ys: &[Symbol], beta: f64) -> Result<PosteriorGrid> {
    let loss = direct_loss(family);
    posterior_from_evaluator(family.grid(), &loss, &Observations::Symbols(ys.to_vec()), beta)
}

/// Bayes posterior with likelihood `mu_theta([y_0 .. y_{n-1}])`.
pub fn bayes_posterior_direct(family: &SolvedFamily, ys: &[Symbol]) -> Result<PosteriorGrid> {
    let log_weights = family
        .models()
        .par_iter()
        .map(|m| m.measure().log_cylinder_prob(ys))
        .collect();
    PosteriorGrid::from_log_weights(family.grid().clone(), ys.len(), log_weights)
}

/// Bayes posterior for Gaussian emissions over hidden Gibbs states.
pub fn bayes_posterior_hidden(family: &SolvedFamily, spec: &LossSpec, emissions: &[f64]) -> Result<PosteriorGrid> {
    if spec.kind() != LossKind::NegLogDensity {
        return Err(Error::KindMismatch {
            kind: spec.kind().name(),
        });
    }
    gibbs_posterior(family, spec, &Observations::Real(emissions.to_vec()), 1.0)
}
