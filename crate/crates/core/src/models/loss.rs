//! Per-state loss functions `l(theta, x, y)` with a window of one coordinate of `x`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::sft::Symbol;

/// Smallest emission standard deviation accepted by the Gaussian family.
pub const MIN_STD: f64 = 1e-6;

/// A single observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Obs {
    Real(f64),
    Symbol(Symbol),
}

/// An observation sequence `y_0 .. y_{n-1}`.
#[derive(Debug, Clone, PartialEq)]
pub enum Observations {
    Real(Vec<f64>),
    Symbols(Vec<Symbol>),
}

impl Observations {
    pub fn len(&self) -> usize {
        match self {
            Observations::Real(v) => v.len(),
            Observations::Symbols(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, k: usize) -> Obs {
        match self {
            Observations::Real(v) => Obs::Real(v[k]),
            Observations::Symbols(v) => Obs::Symbol(v[k]),
        }
    }

    /// The first `n` observations.
    pub fn prefix(&self, n: usize) -> Observations {
        match self {
            Observations::Real(v) => Observations::Real(v[..n].to_vec()),
            Observations::Symbols(v) => Observations::Symbols(v[..n].to_vec()),
        }
    }

    pub fn symbols(&self) -> Option<&[Symbol]> {
        match self {
            Observations::Symbols(v) => Some(v),
            Observations::Real(_) => None,
        }
    }

    pub fn reals(&self) -> Option<&[f64]> {
        match self {
            Observations::Real(v) => Some(v),
            Observations::Symbols(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    Squared,
    Discrete,
    NegLogDensity,
    /// `l = 0` identically.
    Zero,
}

impl LossKind {
    pub fn name(self) -> &'static str {
        match self {
            LossKind::Squared => "squared",
            LossKind::Discrete => "discrete",
            LossKind::NegLogDensity => "neg_log_density",
            LossKind::Zero => "zero",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum ObservationMap {
    /// `phi[theta][x_0]`, compared to a real observation.
    Squared { phi: Vec<Vec<f64>> },
    /// `phi[x_0]`, an output symbol compared to a symbolic observation.
    Discrete { phi: Vec<Symbol> },
    /// Gaussian emission `N(mean[theta][x_0], std[theta][x_0]^2)`.
    Gaussian { mean: Vec<Vec<f64>>, std: Vec<Vec<f64>> },
    Zero,
}

/// A loss family evaluated on a parameter grid of `grid_len` points over an alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct LossSpec {
    map: ObservationMap,
    grid_len: usize,
    alphabet_size: usize,
}

fn check_table(table: &[Vec<f64>], grid_len: usize, alphabet_size: usize, what: &str) -> Result<()> {
    if table.len() != grid_len || table.iter().any(|row| row.len() != alphabet_size) {
        return Err(Error::ShapeMismatch(format!(
            "{what} must be {grid_len} x {alphabet_size}"
        )));
    }
    if table.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::DomainError(format!("{what} has a non-finite entry")));
    }
    Ok(())
}

impl LossSpec {
    /// Squared loss `|phi_theta(x_0) - y|^2`.
    pub fn squared(phi: Vec<Vec<f64>>, alphabet_size: usize) -> Result<Self> {
        let grid_len = phi.len();
        check_table(&phi, grid_len, alphabet_size, "observation map")?;
        Ok(Self {
            map: ObservationMap::Squared { phi },
            grid_len,
            alphabet_size,
        })
    }

    /// Discrete loss `1(phi(x_0) != y)`.
    pub fn discrete(phi: Vec<Symbol>, grid_len: usize) -> Result<Self> {
        let alphabet_size = phi.len();
        Ok(Self {
            map: ObservationMap::Discrete { phi },
            grid_len,
            alphabet_size,
        })
    }

    /// Gaussian negative log-density `(1/2) log(2 pi s^2) + (y - m)^2 / (2 s^2)`.
    pub fn gaussian(mean: Vec<Vec<f64>>, std: Vec<Vec<f64>>) -> Result<Self> {
        let grid_len = mean.len();
        let alphabet_size = mean.first().map_or(0, Vec::len);
        check_table(&mean, grid_len, alphabet_size, "emission means")?;
        check_table(&std, grid_len, alphabet_size, "emission standard deviations")?;
        if let Some(s) = std.iter().flatten().find(|&&s| s < MIN_STD) {
            return Err(Error::DomainError(format!(
                "emission standard deviation {s} below the floor {MIN_STD}"
            )));
        }
        Ok(Self {
            map: ObservationMap::Gaussian { mean, std },
            grid_len,
            alphabet_size,
        })
    }

    pub fn zero(grid_len: usize, alphabet_size: usize) -> Self {
        Self {
            map: ObservationMap::Zero,
            grid_len,
            alphabet_size,
        }
    }

    pub fn kind(&self) -> LossKind {
        match self.map {
            ObservationMap::Squared { .. } => LossKind::Squared,
            ObservationMap::Discrete { .. } => LossKind::Discrete,
            ObservationMap::Gaussian { .. } => LossKind::NegLogDensity,
            ObservationMap::Zero => LossKind::Zero,
        }
    }

    pub fn grid_len(&self) -> usize {
        self.grid_len
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    /// Whether the observation map is the same at every grid point.
    pub fn is_theta_independent(&self) -> bool {
        match &self.map {
            ObservationMap::Squared { phi } => phi.windows(2).all(|w| w[0] == w[1]),
            ObservationMap::Discrete { .. } | ObservationMap::Zero => true,
            ObservationMap::Gaussian { mean, std } => {
                mean.windows(2).all(|w| w[0] == w[1]) && std.windows(2).all(|w| w[0] == w[1])
            }
        }
    }

    /// Emission mean and standard deviation for the Gaussian kind.
    pub fn emission(&self, theta: usize, symbol: Symbol) -> Result<(f64, f64)> {
        match &self.map {
            ObservationMap::Gaussian { mean, std } => {
                Ok((mean[theta][symbol as usize], std[theta][symbol as usize]))
            }
            _ => Err(Error::KindMismatch {
                kind: self.kind().name(),
            }),
        }
    }

    /// Noise-free observation `phi_theta(x_0)` of the squared-loss kind.
    pub fn observation_map(&self, theta: usize, symbol: Symbol) -> Result<f64> {
        match &self.map {
            ObservationMap::Squared { phi } => Ok(phi[theta][symbol as usize]),
            _ => Err(Error::KindMismatch {
                kind: self.kind().name(),
            }),
        }
    }

    /// Whether observations of this type can be scored by this loss.
    pub fn accepts(&self, y: Obs) -> bool {
        matches!(
            (&self.map, y),
            (ObservationMap::Squared { .. }, Obs::Real(_))
                | (ObservationMap::Gaussian { .. }, Obs::Real(_))
                | (ObservationMap::Discrete { .. }, Obs::Symbol(_))
                | (ObservationMap::Zero, _)
        )
    }

    pub fn check_observations(&self, ys: &Observations) -> Result<()> {
        if ys.is_empty() || self.accepts(ys.get(0)) {
            Ok(())
        } else {
            Err(Error::KindMismatch {
                kind: self.kind().name(),
            })
        }
    }

    /// `l(theta, x_0, y)`.
    pub fn loss_eval(&self, theta: usize, symbol: Symbol, y: Obs) -> Result<f64> {
        let x = symbol as usize;
        match (&self.map, y) {
            (ObservationMap::Squared { phi }, Obs::Real(y)) => Ok((phi[theta][x] - y).powi(2)),
            (ObservationMap::Discrete { phi }, Obs::Symbol(y)) => {
                Ok(if phi[x] != y { 1.0 } else { 0.0 })
            }
            (ObservationMap::Gaussian { mean, std }, Obs::Real(y)) => {
                Ok(gaussian_nll(y, mean[theta][x], std[theta][x]))
            }
            (ObservationMap::Zero, _) => Ok(0.0),
            _ => Err(Error::KindMismatch {
                kind: self.kind().name(),
            }),
        }
    }

    /// `l_n(theta; x, y) = sum_k l(theta, x_k, y_k)`.
    pub fn loss_path_sum(&self, theta: usize, xs: &[Symbol], ys: &Observations) -> Result<f64> {
        if xs.len() != ys.len() {
            return Err(Error::LengthMismatch {
                left: xs.len(),
                right: ys.len(),
            });
        }
        xs.iter()
            .enumerate()
            .map(|(k, &x)| self.loss_eval(theta, x, ys.get(k)))
            .sum()
    }

    /// `l*(y) = max over grid points and symbols of |l(theta, x, y)|`.
    pub fn loss_bound(&self, y: Obs) -> Result<f64> {
        let mut bound = 0.0f64;
        for theta in 0..self.grid_len {
            for x in 0..self.alphabet_size {
                bound = bound.max(self.loss_eval(theta, x as Symbol, y)?.abs());
            }
        }
        Ok(bound)
    }
}

pub fn gaussian_nll(y: f64, mean: f64, std: f64) -> f64 {
    0.5 * (2.0 * PI * std * std).ln() + (y - mean).powi(2) / (2.0 * std * std)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn squared_at_match_is_zero() {
        let spec = LossSpec::squared(vec![vec![0.5, 1.5]], 2).unwrap();
        assert_eq!(spec.loss_eval(0, 1, Obs::Real(1.5)).unwrap(), 0.0);
    }

    #[test]
    fn discrete_mismatch() {
        let spec = LossSpec::discrete(vec![0, 1], 1).unwrap();
        assert_eq!(spec.loss_eval(0, 0, Obs::Symbol(1)).unwrap(), 1.0);
        assert_eq!(spec.loss_eval(0, 1, Obs::Symbol(1)).unwrap(), 0.0);
    }

    #[test]
    fn gaussian_at_mode() {
        let spec = LossSpec::gaussian(vec![vec![0.0, 1.0]], vec![vec![1.0, 1.0]]).unwrap();
        let v = spec.loss_eval(0, 0, Obs::Real(0.0)).unwrap();
        assert!((v - 0.918939).abs() < 1e-6);
        assert!((v - 0.5 * (2.0 * PI).ln()).abs() < 1e-15);
    }

    #[test]
    fn std_floor() {
        assert!(matches!(
            LossSpec::gaussian(vec![vec![0.0]], vec![vec![1e-7]]),
            Err(Error::DomainError(_))
        ));
    }

    #[test]
    fn kind_mismatch() {
        let spec = LossSpec::discrete(vec![0, 1], 1).unwrap();
        assert!(matches!(
            spec.loss_eval(0, 0, Obs::Real(0.0)),
            Err(Error::KindMismatch { .. })
        ));
        let sq = LossSpec::squared(vec![vec![0.0, 0.0]], 2).unwrap();
        assert!(sq.check_observations(&Observations::Symbols(vec![0])).is_err());
    }

    #[test]
    fn path_sums() {
        let sq = LossSpec::squared(vec![vec![0.0, 0.0]], 2).unwrap();
        let ys = Observations::Real(vec![1.0, 2.0]);
        assert_eq!(sq.loss_path_sum(0, &[0, 1], &ys).unwrap(), 5.0);
        let one = Observations::Real(vec![2.0]);
        assert_eq!(
            sq.loss_path_sum(0, &[1], &one).unwrap(),
            sq.loss_eval(0, 1, Obs::Real(2.0)).unwrap()
        );
        assert!(matches!(
            sq.loss_path_sum(0, &[0], &ys),
            Err(Error::LengthMismatch { .. })
        ));
        let disc = LossSpec::discrete(vec![0, 1], 1).unwrap();
        let xs = [0, 1, 1, 0];
        assert_eq!(
            disc.loss_path_sum(0, &xs, &Observations::Symbols(xs.to_vec())).unwrap(),
            0.0
        );
    }
}
