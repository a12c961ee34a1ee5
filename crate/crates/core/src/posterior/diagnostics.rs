use super::grid::PosteriorGrid;
use crate::error::{Error, Result};
use crate::models::ThetaGrid;

/// Log-domain slack allowed when checking inequalities that hold exactly in real arithmetic.
pub const LOG_TOL: f64 = 1e-9;

/// Grids up to this size have the sandwich checked on every subset; larger grids are checked
/// on singletons, which is sufficient because a ratio of sums lies between the extreme
/// pointwise ratios.
pub const SANDWICH_EXHAUSTIVE_MAX: usize = 16;

/// Grid points within `radius` of some target point (Euclidean distance).
pub fn neighborhood(grid: &ThetaGrid, target: &[usize], radius: f64) -> Vec<usize> {
    (0..grid.len())
        .filter(|&i| target.iter().any(|&t| grid.distance(i, t) <= radius + 1e-12))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationRow {
    pub n: usize,
    /// `pi_n(grid \ U)`.
    pub outside_mass: f64,
    /// `(1/n) log pi_n(U)`.
    pub log_mass_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationReport {
    pub neighborhood: Vec<usize>,
    pub rows: Vec<ConcentrationRow>,
}

impl ConcentrationReport {
    /// Smallest logged `n` from which the outside mass stays below `threshold`.
    pub fn settled_after(&self, threshold: f64) -> Option<usize> {
        let mut settled = None;
        for row in self.rows.iter().rev() {
            if row.outside_mass < threshold {
                settled = Some(row.n);
            } else {
                break;
            }
        }
        settled
    }

    /// Fraction of consecutive steps on which the outside mass did not increase.
    pub fn nonincreasing_fraction(&self) -> f64 {
        if self.rows.len() < 2 {
            return 1.0;
        }
        let steps = self.rows.windows(2).filter(|w| w[1].outside_mass <= w[0].outside_mass).count();
        steps as f64 / (self.rows.len() - 1) as f64
    }
}

/// Posterior mass outside the `radius`-neighborhood of `target`, per logged posterior.
pub fn concentration_report(posteriors: &[PosteriorGrid], target: &[usize], radius: f64) -> Result<ConcentrationReport> {
    let Some(first) = posteriors.first() else {
        return Err(Error::DomainError("no posteriors to report on".into()));
    };
    let u = neighborhood(first.grid(), target, radius);
    concentration_on(posteriors, u)
}

/// As [`concentration_report`] for an explicit neighborhood.
pub fn concentration_on(posteriors: &[PosteriorGrid], neighborhood: Vec<usize>) -> Result<ConcentrationReport> {
    let Some(first) = posteriors.first() else {
        return Err(Error::DomainError("no posteriors to report on".into()));
    };
    if posteriors.iter().any(|p| p.grid() != first.grid()) {
        return Err(Error::InvalidGrid("posteriors must share a grid".into()));
    }
    let mut inside = vec![false; first.grid().len()];
    for &i in &neighborhood {
        inside[i] = true;
    }
    let outside: Vec<usize> = (0..inside.len()).filter(|&i| !inside[i]).collect();
    let rows = posteriors
        .iter()
        .map(|p| ConcentrationRow {
            n: p.n(),
            outside_mass: p.mass_of(&outside),
            log_mass_rate: p.log_mass_of(&neighborhood) / p.n().max(1) as f64,
        })
        .collect();
    Ok(ConcentrationReport { neighborhood, rows })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SandwichReport {
    pub log_k: f64,
    /// Smallest value of `2 log K - |log Pi_n(F) - log pi_n(F)|` over the checked sets.
    pub worst_margin: f64,
    pub sets_checked: usize,
    pub holds: bool,
}

/// Checks `K^-2 pi_n(F) <= Pi_n(F) <= K^2 pi_n(F)` between a Gibbs posterior and a Bayes
/// posterior on the same grid, in log domain with slack [`LOG_TOL`].
pub fn sandwich_check(gibbs: &PosteriorGrid, bayes: &PosteriorGrid, k: f64) -> Result<SandwichReport> {
    if gibbs.grid() != bayes.grid() {
        return Err(Error::InvalidGrid("posteriors must share a grid".into()));
    }
    if k.is_nan() || k < 1.0 {
        return Err(Error::DomainError(format!("Gibbs constant {k} must be >= 1")));
    }
    let g = gibbs.grid().len();
    let log_k = k.ln();
    let mut worst = f64::INFINITY;
    let mut checked = 0;
    let mut check = |set: &[usize]| {
        let a = gibbs.log_mass_of(set);
        let b = bayes.log_mass_of(set);
        checked += 1;
        let margin = if a == f64::NEG_INFINITY && b == f64::NEG_INFINITY {
            f64::INFINITY
        } else {
            2.0 * log_k - (a - b).abs()
        };
        worst = worst.min(margin);
    };
    if g <= SANDWICH_EXHAUSTIVE_MAX {
        let mut set = Vec::with_capacity(g);
        for mask in 1u32..(1u32 << g) {
            set.clear();
            set.extend((0..g).filter(|&i| mask & (1 << i) != 0));
            check(&set);
        }
    } else {
        for i in 0..g {
            check(&[i]);
        }
    }
    Ok(SandwichReport {
        log_k,
        worst_margin: worst,
        sets_checked: checked,
        holds: worst >= -LOG_TOL,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateConsistency {
    pub n: usize,
    /// `-(1/n) log Z_n`.
    pub rate: f64,
    /// `min_theta -(1/n) log Z_n^theta`.
    pub lower: f64,
    /// `-(1/n) (log Z_n^theta_hat + log prior(theta_hat))` at the per-point minimizer.
    pub upper: f64,
    pub holds: bool,
}

/// Logsumexp bounds tying the grid partition function to the per-point ones.
pub fn rate_consistency(posterior: &PosteriorGrid) -> RateConsistency {
    let n = posterior.n().max(1) as f64;
    let lw = posterior.log_weights();
    let best = (0..lw.len())
        .max_by(|&a, &b| lw[a].total_cmp(&lw[b]))
        .expect("grid is non-empty");
    let rate = -posterior.log_z() / n;
    let lower = -lw[best] / n;
    let upper = -(lw[best] + posterior.grid().log_prior(best)) / n;
    let slack = LOG_TOL * (1.0 + rate.abs());
    RateConsistency {
        n: posterior.n(),
        rate,
        lower,
        upper,
        holds: rate >= lower - slack && rate <= upper + slack,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> ThetaGrid {
        ThetaGrid::scalar(&[0.1, 0.2, 0.3, 0.4], None).unwrap()
    }

    fn post(n: usize, lw: Vec<f64>) -> PosteriorGrid {
        PosteriorGrid::from_log_weights(grid(), n, lw).unwrap()
    }

    #[test]
    fn whole_grid_target_has_no_outside_mass() {
        let ps = vec![post(10, vec![-1.0, -2.0, -3.0, -4.0])];
        let r = concentration_report(&ps, &[0, 1, 2, 3], 0.0).unwrap();
        assert_eq!(r.rows[0].outside_mass, 0.0);
    }

    #[test]
    fn settled_index() {
        let ps = vec![
            post(10, vec![0.0, 0.0, 0.0, 0.0]),
            post(20, vec![-9.0, 0.0, -9.0, -9.0]),
            post(40, vec![-20.0, 0.0, -20.0, -20.0]),
        ];
        let r = concentration_report(&ps, &[1], 0.05).unwrap();
        assert_eq!(r.neighborhood, vec![1]);
        assert_eq!(r.settled_after(0.05), Some(20));
        assert_eq!(r.nonincreasing_fraction(), 1.0);
        assert!(r.rows[2].log_mass_rate <= 0.0);
    }

    #[test]
    fn sandwich_with_unit_constant() {
        let a = post(5, vec![-1.0, -2.0, -3.0, -4.0]);
        let report = sandwich_check(&a, &a, 1.0).unwrap();
        assert!(report.holds);
        assert_eq!(report.sets_checked, 15);
        let b = post(5, vec![-1.0, -2.5, -3.0, -4.0]);
        assert!(!sandwich_check(&a, &b, 1.0).unwrap().holds);
        assert!(sandwich_check(&a, &b, 1.3).unwrap().holds);
    }

    #[test]
    fn consistency_bounds() {
        let p = post(50, vec![-30.0, -31.0, -29.0, -35.0]);
        let c = rate_consistency(&p);
        assert!(c.holds);
        assert!(c.lower <= c.rate && c.rate <= c.upper);
    }
}
