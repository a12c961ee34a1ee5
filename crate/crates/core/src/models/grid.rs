use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// A finite parameter grid with a strictly positive prior.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaGrid {
    points: Vec<Vec<f64>>,
    prior: Vec<f64>,
}

impl ThetaGrid {
    /// Builds a grid; the prior is rescaled to sum to one.
    pub fn new(points: Vec<Vec<f64>>, prior: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidGrid("grid is empty".into()));
        }
        if points.len() != prior.len() {
            return Err(Error::InvalidGrid(format!(
                "{} points but {} prior weights",
                points.len(),
                prior.len()
            )));
        }
        let dim = points[0].len();
        if dim == 0 || points.iter().any(|p| p.len() != dim) {
            return Err(Error::InvalidGrid("points must share a positive dimension".into()));
        }
        if points.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::InvalidGrid("non-finite grid coordinate".into()));
        }
        for (i, &w) in prior.iter().enumerate() {
            if !w.is_finite() || w <= 0.0 {
                return Err(Error::InvalidGrid(format!(
                    "prior weight {w} at point {i}: the prior must charge every grid point"
                )));
            }
        }
        for i in 0..points.len() {
            for j in 0..i {
                if points[i] == points[j] {
                    return Err(Error::InvalidGrid(format!("duplicate grid point {:?}", points[i])));
                }
            }
        }
        let total: f64 = prior.iter().sum();
        let prior = prior.into_iter().map(|w| w / total).collect();
        Ok(Self { points, prior })
    }

    pub fn uniform(points: Vec<Vec<f64>>) -> Result<Self> {
        let n = points.len();
        Self::new(points, vec![1.0; n])
    }

    /// One-dimensional grid.
    pub fn scalar(values: &[f64], prior: Option<Vec<f64>>) -> Result<Self> {
        let points = values.iter().map(|&v| vec![v]).collect();
        let prior = prior.unwrap_or_else(|| vec![1.0; values.len()]);
        Self::new(points, prior)
    }

    /// Evenly spaced scalar grid `start, start + step, ..` with `count` points and a uniform prior.
    pub fn linspace(start: f64, step: f64, count: usize) -> Result<Self> {
        let values: Vec<f64> = (0..count).map(|i| start + step * i as f64).collect();
        Self::scalar(&values, None)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    /// First coordinate of point `i`.
    pub fn value(&self, i: usize) -> f64 {
        self.points[i][0]
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    pub fn log_prior(&self, i: usize) -> f64 {
        self.prior[i].ln()
    }

    /// Euclidean distance between two grid points.
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.points[i]
            .iter()
            .zip(&self.points[j])
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Index of the point closest to `theta` (exact match or nearest).
    pub fn nearest(&self, theta: &[f64]) -> usize {
        let d = |p: &[f64]| p.iter().zip(theta).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        (0..self.len())
            .min_by(|&a, &b| d(&self.points[a]).total_cmp(&d(&self.points[b])))
            .expect("grid is non-empty")
    }

    /// Short hex digest of the grid points and prior, used to tag report files.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for (p, w) in self.points.iter().zip(&self.prior) {
            for x in p {
                h.update(x.to_le_bytes());
            }
            h.update(w.to_le_bytes());
        }
        let digest = h.finalize();
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prior_is_normalized() {
        let g = ThetaGrid::scalar(&[0.1, 0.2, 0.3], Some(vec![1.0, 2.0, 1.0])).unwrap();
        assert!((g.prior().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(g.prior()[1], 0.5);
    }

    #[test]
    fn zero_weight_is_rejected() {
        let err = ThetaGrid::scalar(&[0.1, 0.2], Some(vec![1.0, 0.0])).unwrap_err();
        assert!(err.to_string().contains("must charge every grid point"));
    }

    #[test]
    fn duplicates_are_rejected() {
        assert!(ThetaGrid::scalar(&[0.1, 0.1], None).is_err());
    }

    #[test]
    fn hash_depends_on_prior() {
        let a = ThetaGrid::scalar(&[0.1, 0.2], None).unwrap();
        let b = ThetaGrid::scalar(&[0.1, 0.2], Some(vec![2.0, 1.0])).unwrap();
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash(), a.clone().hash());
    }
}
