use std::sync::Arc;

use rayon::prelude::*;

use super::grid::ThetaGrid;
use crate::error::{Error, Result};
use crate::sft::Sft;
use crate::thermo::{GibbsModel, Potential};

/// Smallest admissible distance of a Bernoulli parameter from 0 and 1.
pub const BERNOULLI_EPS: f64 = 1e-3;

/// A potential for every grid point, all on one shift with one common range.
#[derive(Debug, Clone)]
pub struct PotentialFamily {
    grid: ThetaGrid,
    potentials: Vec<Potential>,
}

impl PotentialFamily {
    pub fn new(grid: ThetaGrid, potentials: Vec<Potential>) -> Result<Self> {
        if potentials.len() != grid.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} potentials for {} grid points",
                potentials.len(),
                grid.len()
            )));
        }
        let first = &potentials[0];
        for p in &potentials[1..] {
            if p.range() != first.range() || **p.sft() != **first.sft() {
                return Err(Error::ShapeMismatch(
                    "family potentials must share a shift and a range".into(),
                ));
            }
        }
        Ok(Self { grid, potentials })
    }

    pub fn grid(&self) -> &ThetaGrid {
        &self.grid
    }

    pub fn potentials(&self) -> &[Potential] {
        &self.potentials
    }

    pub fn potential(&self, i: usize) -> &Potential {
        &self.potentials[i]
    }

    pub fn sft(&self) -> &Arc<Sft> {
        self.potentials[0].sft()
    }

    pub fn range(&self) -> usize {
        self.potentials[0].range()
    }

    /// Solves every grid point's Gibbs model (in parallel; output order follows the grid).
    pub fn solve(&self) -> Result<SolvedFamily> {
        let models = self
            .potentials
            .par_iter()
            .map(GibbsModel::solve)
            .collect::<Result<Vec<_>>>()?;
        Ok(SolvedFamily {
            family: self.clone(),
            models,
        })
    }
}

/// A family together with its solved Gibbs models.
#[derive(Debug, Clone)]
pub struct SolvedFamily {
    family: PotentialFamily,
    models: Vec<GibbsModel>,
}

impl SolvedFamily {
    pub fn family(&self) -> &PotentialFamily {
        &self.family
    }

    pub fn grid(&self) -> &ThetaGrid {
        self.family.grid()
    }

    pub fn models(&self) -> &[GibbsModel] {
        &self.models
    }

    pub fn model(&self, i: usize) -> &GibbsModel {
        &self.models[i]
    }

    pub fn models_mut(&mut self) -> &mut [GibbsModel] {
        &mut self.models
    }

    pub fn pressures(&self) -> Vec<f64> {
        self.models.iter().map(GibbsModel::pressure).collect()
    }

    /// Uniform Gibbs constant: the largest audited constant over the grid.
    pub fn uniform_gibbs_k(&self) -> Option<f64> {
        self.models
            .iter()
            .map(GibbsModel::gibbs_k)
            .try_fold(1.0f64, |acc, k| k.map(|k| acc.max(k)))
    }
}

/// `f_theta(x) = x_0 log(theta) + (1 - x_0) log(1 - theta)` on the full 2-shift.
pub fn bernoulli_family(grid: ThetaGrid) -> Result<PotentialFamily> {
    let sft = Arc::new(Sft::full_shift(2)?);
    let potentials = (0..grid.len())
        .map(|i| {
            let theta = grid.value(i);
            if !(theta > BERNOULLI_EPS && theta < 1.0 - BERNOULLI_EPS) {
                return Err(Error::DomainError(format!(
                    "Bernoulli parameter {theta} outside ({BERNOULLI_EPS}, {})",
                    1.0 - BERNOULLI_EPS
                )));
            }
            let (l1, l0) = (theta.ln(), (1.0 - theta).ln());
            Potential::from_fn(sft.clone(), 1, |w| if w[0] == 1 { l1 } else { l0 })
        })
        .collect::<Result<Vec<_>>>()?;
    PotentialFamily::new(grid, potentials)
}

/// Affine path `f_t = (1 - t) f_a + t f_b`, with `t` the first coordinate of each grid point.
pub fn markov_family(grid: ThetaGrid, base_a: &Potential, base_b: &Potential) -> Result<PotentialFamily> {
    if base_a.range() != base_b.range() || **base_a.sft() != **base_b.sft() {
        return Err(Error::ShapeMismatch(
            "base potentials must share a shift and a range".into(),
        ));
    }
    let sft = base_a.sft().clone();
    let potentials = (0..grid.len())
        .map(|i| {
            let t = grid.value(i);
            Potential::from_fn(sft.clone(), base_a.range(), |w| {
                (1.0 - t) * base_a.value(w) + t * base_b.value(w)
            })
        })
        .collect::<Result<Vec<_>>>()?;
    PotentialFamily::new(grid, potentials)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegularityRow {
    pub left: usize,
    pub right: usize,
    pub spacing: f64,
    pub sup_diff: f64,
    /// `|P(f) - P(g)| <= ||f - g||_inf`.
    pub pressure_bound: f64,
    pub pressure_jump: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegularityReport {
    pub rows: Vec<RegularityRow>,
    /// Largest `sup_diff / spacing` over adjacent pairs.
    pub modulus: f64,
    pub max_sup_diff: f64,
}

/// Sup-norm differences between adjacent grid points (in grid order). Pressure jumps are
/// filled in when solved models are supplied.
pub fn regularity_report(family: &PotentialFamily, models: Option<&[GibbsModel]>) -> Result<RegularityReport> {
    let grid = family.grid();
    if grid.len() < 2 {
        return Err(Error::InvalidGrid("regularity needs at least two grid points".into()));
    }
    let mut rows = Vec::with_capacity(grid.len() - 1);
    for i in 0..grid.len() - 1 {
        let sup_diff = family.potential(i).sup_distance(family.potential(i + 1))?;
        let pressure_jump = models.map(|m| (m[i].pressure() - m[i + 1].pressure()).abs());
        rows.push(RegularityRow {
            left: i,
            right: i + 1,
            spacing: grid.distance(i, i + 1),
            sup_diff,
            pressure_bound: sup_diff,
            pressure_jump,
        });
    }
    let modulus = rows
        .iter()
        .map(|r| if r.spacing > 0.0 { r.sup_diff / r.spacing } else { 0.0 })
        .fold(0.0, f64::max);
    let max_sup_diff = rows.iter().map(|r| r.sup_diff).fold(0.0, f64::max);
    Ok(RegularityReport {
        rows,
        modulus,
        max_sup_diff,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step_grid() -> ThetaGrid {
        ThetaGrid::linspace(0.1, 0.1, 9).unwrap()
    }

    #[test]
    fn bernoulli_half_is_uniform() {
        let fam = bernoulli_family(ThetaGrid::scalar(&[0.5], None).unwrap()).unwrap();
        let p = fam.potential(0);
        assert_eq!(p.value(&[0]), 0.5f64.ln());
        assert_eq!(p.value(&[1]), 0.5f64.ln());
        let solved = fam.solve().unwrap();
        assert!(solved.model(0).stationary().iter().all(|&q| (q - 0.5).abs() < 1e-13));
    }

    #[test]
    fn bernoulli_pressure_is_zero() {
        let solved = bernoulli_family(step_grid()).unwrap().solve().unwrap();
        for m in solved.models() {
            assert!(m.pressure().abs() < 1e-10);
        }
    }

    #[test]
    fn bernoulli_domain() {
        assert!(bernoulli_family(ThetaGrid::scalar(&[0.0005], None).unwrap()).is_err());
        assert!(bernoulli_family(ThetaGrid::scalar(&[1.0], None).unwrap()).is_err());
    }

    #[test]
    fn bernoulli_regularity() {
        let fam = bernoulli_family(step_grid()).unwrap();
        let solved = fam.solve().unwrap();
        let report = regularity_report(&fam, Some(solved.models())).unwrap();
        assert!(report.modulus.is_finite());
        assert!((report.max_sup_diff - 2f64.ln()).abs() < 1e-12);
        for r in &report.rows {
            assert!(r.pressure_jump.unwrap() <= r.sup_diff + 1e-12);
        }
    }

    #[test]
    fn affine_family() {
        let sft = Arc::new(Sft::golden_mean());
        let a = Potential::constant(sft.clone(), 0.0).unwrap();
        let b = Potential::constant(sft.clone(), 2.0).unwrap();
        let fam = markov_family(ThetaGrid::scalar(&[0.0, 0.5, 1.0], None).unwrap(), &a, &b).unwrap();
        assert_eq!(fam.potential(0), &a);
        assert!(fam.potential(1).table().values().all(|&v| v == 1.0));
        let report = regularity_report(&fam, None).unwrap();
        for r in &report.rows {
            assert!((r.sup_diff - 2.0 * r.spacing).abs() < 1e-12);
        }
    }

    #[test]
    fn affine_pressure_is_convex() {
        let sft = Arc::new(Sft::golden_mean());
        let a = Potential::from_fn(sft.clone(), 2, |w| w[0] as f64 * 0.7 - w[1] as f64 * 0.2).unwrap();
        let b = Potential::from_fn(sft.clone(), 2, |w| if w == [0, 0] { 1.3 } else { -0.4 }).unwrap();
        let fam = markov_family(ThetaGrid::scalar(&[0.0, 0.5, 1.0], None).unwrap(), &a, &b).unwrap();
        let p = fam.solve().unwrap().pressures();
        assert!(p[1] <= (p[0] + p[2]) / 2.0 + 1e-10);
    }

    #[test]
    fn mismatched_bases() {
        let a = Potential::constant(Arc::new(Sft::golden_mean()), 0.0).unwrap();
        let b = Potential::constant(Arc::new(Sft::full_shift(2).unwrap()), 0.0).unwrap();
        assert!(matches!(
            markov_family(ThetaGrid::scalar(&[0.0], None).unwrap(), &a, &b),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn constant_family_has_zero_differences() {
        let sft = Arc::new(Sft::golden_mean());
        let a = Potential::constant(sft, 0.3).unwrap();
        let fam = markov_family(ThetaGrid::scalar(&[0.0, 0.5, 1.0], None).unwrap(), &a, &a).unwrap();
        let report = regularity_report(&fam, None).unwrap();
        assert!(report.rows.iter().all(|r| r.sup_diff == 0.0));
    }
}
