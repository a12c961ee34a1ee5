use crate::error::{Error, Result};
use crate::models::{LossKind, LossSpec, Observations, SolvedFamily};
use crate::sft::Symbol;
use crate::thermo::{GibbsModel, MarkovMeasure, Potential};

/// Per-grid-point log partition functions `log Z_n^theta(y)` under a loss scaled by `beta`.
pub trait PartitionEvaluator: Sync {
    fn grid_len(&self) -> usize;

    /// Fails early when the observations cannot be scored by this evaluator.
    fn check(&self, ys: &Observations) -> Result<()>;

    fn log_partition(&self, theta: usize, ys: &Observations, beta: f64) -> Result<f64>;
}

fn check_beta(beta: f64) -> Result<()> {
    if beta >= 0.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(Error::DomainError(format!("inverse temperature {beta} must be finite and >= 0")))
    }
}

/// `log int exp(-l_n(theta, x, y)) d(mu)(x)` by the log-domain forward recursion over blocks.
pub fn log_partition_theta(
    measure: impl AsRef<MarkovMeasure>,
    spec: &LossSpec,
    theta: usize,
    ys: &Observations,
) -> Result<f64> {
    log_partition_scaled(measure, spec, theta, ys, 1.0)
}

/// As [`log_partition_theta`] with the loss multiplied by `beta`.
pub fn log_partition_scaled(
    measure: impl AsRef<MarkovMeasure>,
    spec: &LossSpec,
    theta: usize,
    ys: &Observations,
    beta: f64,
) -> Result<f64> {
    check_beta(beta)?;
    spec.check_observations(ys)?;
    if beta == 0.0 || spec.kind() == LossKind::Zero || ys.is_empty() {
        return Ok(0.0);
    }
    let measure = measure.as_ref();
    let sft = measure.sft();
    let a = sft.alphabet_size();
    if spec.alphabet_size() != a {
        return Err(Error::ShapeMismatch(format!(
            "loss is defined on {} symbols, shift has {a}",
            spec.alphabet_size()
        )));
    }

    // Per-step losses are split into an x-independent floor and a residual so that losses
    // which do not depend on the hidden path are integrated exactly.
    let n = ys.len();
    let mut floor = 0.0;
    let mut residuals = Vec::with_capacity(n * a);
    let mut any_residual = false;
    for k in 0..n {
        let y = ys.get(k);
        let row_start = residuals.len();
        for s in 0..a {
            let l = beta * spec.loss_eval(theta, s as Symbol, y)?;
            if l.is_nan() {
                return Err(Error::NonFinite { step: k });
            }
            residuals.push(l);
        }
        let row = &mut residuals[row_start..];
        let m = row.iter().copied().fold(f64::INFINITY, f64::min);
        floor += m;
        for r in row.iter_mut() {
            *r -= m;
            any_residual |= *r != 0.0;
        }
    }
    if !any_residual {
        return Ok(0.0 - floor);
    }

    let b = sft.num_blocks();
    let lead: Vec<usize> = (0..b).map(|u| sft.leading_symbol(u) as usize).collect();
    let mut preds = vec![Vec::new(); b];
    for u in 0..b {
        for &v in sft.successors(u) {
            preds[v].push(u);
        }
    }
    let log_q = measure.log_kernel();
    let mut alpha: Vec<f64> = (0..b)
        .map(|u| measure.log_stationary()[u] - residuals[lead[u]])
        .collect();
    let mut next = vec![0.0; b];
    let mut terms = Vec::with_capacity(b);
    for k in 1..n {
        let row = &residuals[k * a..(k + 1) * a];
        for v in 0..b {
            terms.clear();
            terms.extend(preds[v].iter().map(|&u| alpha[u] + log_q[[u, v]]));
            next[v] = lse(&terms) - row[lead[v]];
        }
        std::mem::swap(&mut alpha, &mut next);
    }
    Ok(lse(&alpha) - floor)
}

fn lse(xs: &[f64]) -> f64 {
    crate::numeric::logsumexp(xs)
}

/// Hidden-state evaluator: each grid point integrates the loss against its own Gibbs model.
#[derive(Debug, Clone, Copy)]
pub struct HiddenEvaluator<'a> {
    pub models: &'a [GibbsModel],
    pub spec: &'a LossSpec,
}

impl<'a> HiddenEvaluator<'a> {
    pub fn new(family: &'a SolvedFamily, spec: &'a LossSpec) -> Result<Self> {
        if spec.grid_len() != family.grid().len() {
            return Err(Error::ShapeMismatch(format!(
                "loss covers {} grid points, family has {}",
                spec.grid_len(),
                family.grid().len()
            )));
        }
        Ok(Self {
            models: family.models(),
            spec,
        })
    }
}

impl PartitionEvaluator for HiddenEvaluator<'_> {
    fn grid_len(&self) -> usize {
        self.models.len()
    }

    fn check(&self, ys: &Observations) -> Result<()> {
        self.spec.check_observations(ys)
    }

    fn log_partition(&self, theta: usize, ys: &Observations, beta: f64) -> Result<f64> {
        log_partition_scaled(&self.models[theta], self.spec, theta, ys, beta)
    }
}

/// Direct-observation loss `l(theta, y) = P(f_theta) - f_theta(y_0 .. y_{r-1})`, read off the
/// observed symbol window with no hidden integral.
#[derive(Debug, Clone)]
pub struct DirectLoss {
    pressures: Vec<f64>,
    potentials: Vec<Potential>,
}

pub fn direct_loss(family: &SolvedFamily) -> DirectLoss {
    DirectLoss {
        pressures: family.pressures(),
        potentials: family.family().potentials().to_vec(),
    }
}

impl DirectLoss {
    pub fn range(&self) -> usize {
        self.potentials[0].range()
    }

    /// Loss on a window of at least `range` symbols; `+inf` outside the shift.
    pub fn eval(&self, theta: usize, window: &[Symbol]) -> f64 {
        self.pressures[theta] - self.potentials[theta].value(window)
    }

    /// Sum of the loss over every full window of `ys`.
    pub fn path_sum(&self, theta: usize, ys: &[Symbol]) -> f64 {
        ys.windows(self.range()).map(|w| self.eval(theta, w)).sum()
    }
}

impl PartitionEvaluator for DirectLoss {
    fn grid_len(&self) -> usize {
        self.potentials.len()
    }

    fn check(&self, ys: &Observations) -> Result<()> {
        ys.symbols()
            .map(|_| ())
            .ok_or(Error::KindMismatch { kind: "direct" })
    }

    fn log_partition(&self, theta: usize, ys: &Observations, beta: f64) -> Result<f64> {
        check_beta(beta)?;
        let ys = ys.symbols().ok_or(Error::KindMismatch { kind: "direct" })?;
        if beta == 0.0 {
            return Ok(0.0);
        }
        Ok(-beta * self.path_sum(theta, ys))
    }
}
