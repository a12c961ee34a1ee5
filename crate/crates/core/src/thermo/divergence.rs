//! Relative divergence rates between a block-Markov measure and a Gibbs model.

use super::gibbs::GibbsModel;
use super::measure::MarkovMeasure;
use crate::error::Result;

/// `(1/n) KL(eta : mu | alpha_n)` over the partition into cylinders of length `n`,
/// by enumerating the words `eta` charges. `+inf` when `eta` charges a `mu`-null word.
pub fn kl_rate_empirical(eta: &MarkovMeasure, model: &GibbsModel, n: usize) -> Result<f64> {
    let words = eta.sft().enumerate_words(n)?;
    let mu = model.measure();
    let mut kl = 0.0;
    for w in &words {
        let le = eta.log_cylinder_prob(w);
        if le == f64::NEG_INFINITY {
            continue;
        }
        let lm = mu.log_cylinder_prob(w);
        if lm == f64::NEG_INFINITY {
            return Ok(f64::INFINITY);
        }
        kl += le.exp() * (le - lm);
    }
    Ok(kl / n as f64)
}

/// Closed-form divergence rate `P(f) - h(eta) - int f d(eta)` for the product joining.
pub fn divergence_rate(eta: &MarkovMeasure, model: &GibbsModel) -> Result<f64> {
    let mean = eta.expectation(model.potential())?;
    if mean == f64::NEG_INFINITY {
        return Ok(f64::INFINITY);
    }
    Ok(model.pressure() - eta.entropy() - mean)
}

/// Richardson extrapolation `2 r(n) - r(n/2)`, removing the `1/n` term of the
/// finite-depth rate. `n` must be even.
pub fn kl_rate_richardson(eta: &MarkovMeasure, model: &GibbsModel, n: usize) -> Result<f64> {
    assert!(n >= 2 && n.is_multiple_of(2), "depth must be even");
    let full = kl_rate_empirical(eta, model, n)?;
    let half = kl_rate_empirical(eta, model, n / 2)?;
    Ok(2.0 * full - half)
}
