//! Thermodynamic formalism for finite-range potentials: pressure, Gibbs measures,
//! entropy, Gibbs-constant audits and divergence rates via the transfer matrix.

mod audit;
mod divergence;
mod gibbs;
mod measure;
mod perron;
mod potential;

pub use audit::{gibbs_constant_audit, AuditRow, GibbsAudit, AUDIT_WORD_CAP};
pub use divergence::{divergence_rate, kl_rate_empirical, kl_rate_richardson};
pub use gibbs::{solve_gibbs, transfer_matrix, GibbsModel};
pub use measure::MarkovMeasure;
pub use perron::{power_iteration, PerronPair, PERRON_MAX_ITER, PERRON_TOL};
pub use potential::Potential;

/// `cylinder_prob` on anything that views as a Markov measure.
pub fn cylinder_prob(measure: impl AsRef<MarkovMeasure>, word: &[crate::sft::Symbol]) -> f64 {
    measure.as_ref().cylinder_prob(word)
}

impl AsRef<MarkovMeasure> for MarkovMeasure {
    fn as_ref(&self) -> &MarkovMeasure {
        self
    }
}

pub fn entropy(measure: impl AsRef<MarkovMeasure>) -> f64 {
    measure.as_ref().entropy()
}

pub fn expectation(potential: &Potential, measure: impl AsRef<MarkovMeasure>) -> crate::error::Result<f64> {
    measure.as_ref().expectation(potential)
}
