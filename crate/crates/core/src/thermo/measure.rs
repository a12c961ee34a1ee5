use std::sync::Arc;

use ndarray::{Array1, Array2};

use super::perron::{power_iteration, PERRON_MAX_ITER, PERRON_TOL};
use super::potential::Potential;
use crate::error::{Error, Result};
use crate::numeric::{logsumexp_iter, xlogx};
use crate::sft::{Sft, Symbol};

// Input kernels may carry rounding from their producer; rows are renormalized afterwards.
const ROW_SUM_TOL: f64 = 1e-9;

/// A shift-invariant Markov measure on the block chain of a shift: an initial block law
/// that is stationary for a row-stochastic kernel supported on the shift's transitions.
#[derive(Debug, Clone)]
pub struct MarkovMeasure {
    sft: Arc<Sft>,
    stationary: Array1<f64>,
    kernel: Array2<f64>,
    log_stationary: Array1<f64>,
    log_kernel: Array2<f64>,
}

impl MarkovMeasure {
    /// Builds the measure from a kernel, computing its stationary law.
    ///
    /// Rows are renormalized to sum to one after checking they already do within `1e-9`.
    pub fn from_kernel(sft: Arc<Sft>, kernel: Array2<f64>) -> Result<Self> {
        let kernel = validate_kernel(&sft, kernel)?;
        let n = sft.num_blocks();
        // The lazy chain (I + Q) / 2 has the same stationary law and is aperiodic.
        let mut lazy = kernel.t().to_owned() * 0.5;
        for i in 0..n {
            lazy[[i, i]] += 0.5;
        }
        let pair = power_iteration(&lazy, PERRON_TOL, PERRON_MAX_ITER)?;
        Ok(Self::assemble(sft, pair.vector, kernel))
    }

    /// Builds the measure from an explicit stationary vector and kernel.
    pub fn new(sft: Arc<Sft>, stationary: Array1<f64>, kernel: Array2<f64>) -> Result<Self> {
        let kernel = validate_kernel(&sft, kernel)?;
        if stationary.len() != sft.num_blocks() || stationary.iter().any(|&p| p.is_nan() || p < 0.0) {
            return Err(Error::ShapeMismatch("stationary vector".into()));
        }
        let total = stationary.sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::DomainError(format!("stationary vector sums to {total}")));
        }
        let drift = (&stationary.dot(&kernel) - &stationary)
            .iter()
            .fold(0.0f64, |a, v| a.max(v.abs()));
        if drift > 1e-10 {
            return Err(Error::DomainError(format!(
                "vector is not stationary for the kernel (drift {drift:e})"
            )));
        }
        Ok(Self::assemble(sft, stationary / total, kernel))
    }

    /// Product measure on the full shift with the given symbol probabilities.
    pub fn bernoulli(probs: &[f64]) -> Result<Self> {
        let sft = Arc::new(Sft::full_shift(probs.len())?);
        let n = probs.len();
        let kernel = Array2::from_shape_fn((n, n), |(_, v)| probs[v]);
        Self::from_kernel(sft, kernel)
    }

    fn assemble(sft: Arc<Sft>, stationary: Array1<f64>, kernel: Array2<f64>) -> Self {
        let log_stationary = stationary.mapv(f64::ln);
        let log_kernel = kernel.mapv(f64::ln);
        Self {
            sft,
            stationary,
            kernel,
            log_stationary,
            log_kernel,
        }
    }

    pub fn sft(&self) -> &Arc<Sft> {
        &self.sft
    }

    pub fn stationary(&self) -> &Array1<f64> {
        &self.stationary
    }

    pub fn kernel(&self) -> &Array2<f64> {
        &self.kernel
    }

    pub fn log_stationary(&self) -> &Array1<f64> {
        &self.log_stationary
    }

    pub fn log_kernel(&self) -> &Array2<f64> {
        &self.log_kernel
    }

    /// Natural log of the cylinder probability `mu([word])`; `-inf` for words the measure
    /// does not charge. Words shorter than a block are summed over their completions.
    pub fn log_cylinder_prob(&self, word: &[Symbol]) -> f64 {
        if word.iter().any(|&s| s as usize >= self.sft.alphabet_size()) {
            return f64::NEG_INFINITY;
        }
        let bl = self.sft.block_len();
        if word.len() < bl {
            return logsumexp_iter(
                self.sft
                    .blocks()
                    .iter()
                    .enumerate()
                    .filter(|(_, b)| b.starts_with(word))
                    .map(|(i, _)| self.log_stationary[i]),
            );
        }
        let Some(path) = self.sft.block_path(word) else {
            return f64::NEG_INFINITY;
        };
        let mut lp = self.log_stationary[path[0]];
        for pair in path.windows(2) {
            lp += self.log_kernel[[pair[0], pair[1]]];
        }
        lp
    }

    pub fn cylinder_prob(&self, word: &[Symbol]) -> f64 {
        self.log_cylinder_prob(word).exp()
    }

    /// Kolmogorov-Sinai entropy `-sum_u pi(u) sum_v Q(u,v) log Q(u,v)` in nats.
    pub fn entropy(&self) -> f64 {
        let n = self.sft.num_blocks();
        let mut h = 0.0;
        for u in 0..n {
            let row: f64 = (0..n).map(|v| xlogx(self.kernel[[u, v]])).sum();
            h -= self.stationary[u] * row;
        }
        h
    }

    /// `int f d(mu)`. Returns `-inf` when the measure charges a word outside the potential's shift.
    pub fn expectation(&self, potential: &Potential) -> Result<f64> {
        let words = self.sft.enumerate_words(potential.range())?;
        let mut acc = 0.0;
        for w in &words {
            let p = self.cylinder_prob(w);
            if p == 0.0 {
                continue;
            }
            let f = potential.value(w);
            if f == f64::NEG_INFINITY {
                return Ok(f64::NEG_INFINITY);
            }
            acc += p * f;
        }
        Ok(acc)
    }

    /// Largest `|pi Q - pi|` entry.
    pub fn stationarity_defect(&self) -> f64 {
        (&self.stationary.dot(&self.kernel) - &self.stationary)
            .iter()
            .fold(0.0f64, |a, v| a.max(v.abs()))
    }
}

fn validate_kernel(sft: &Sft, mut kernel: Array2<f64>) -> Result<Array2<f64>> {
    let n = sft.num_blocks();
    if kernel.dim() != (n, n) {
        return Err(Error::ShapeMismatch(format!(
            "kernel is {:?}, shift has {n} blocks",
            kernel.dim()
        )));
    }
    let t = sft.transition();
    for u in 0..n {
        let mut s = 0.0;
        for v in 0..n {
            let q = kernel[[u, v]];
            if !q.is_finite() || q < 0.0 {
                return Err(Error::DomainError(format!("kernel entry ({u},{v}) = {q}")));
            }
            if q > 0.0 && !t[[u, v]] {
                return Err(Error::DomainError(format!(
                    "kernel charges forbidden transition ({u},{v})"
                )));
            }
            s += q;
        }
        if (s - 1.0).abs() > ROW_SUM_TOL {
            return Err(Error::DomainError(format!("kernel row {u} sums to {s}")));
        }
        kernel.row_mut(u).mapv_inplace(|q| q / s);
    }
    Ok(kernel)
}
