use std::sync::Arc;

use ndarray::{Array1, Array2};

use super::measure::MarkovMeasure;
use super::perron::{power_iteration, PERRON_MAX_ITER, PERRON_TOL};
use super::potential::Potential;
use crate::error::{Error, Result};
use crate::sft::Sft;

/// Transfer matrix `L(u,v) = A(u,v) exp(f(w_uv))` over the blocks of `sft`, where `w_uv`
/// is the final `range` symbols of the word spelled by the transition (so the weight is
/// charged to the arriving block). Requires `range <= block_len + 1`.
pub fn transfer_matrix(sft: &Sft, potential: &Potential) -> Result<Array2<f64>> {
    if potential.range() > sft.block_len() + 1 {
        return Err(Error::ShapeMismatch(format!(
            "potential range {} exceeds block length {} + 1; re-block the shift first",
            potential.range(),
            sft.block_len()
        )));
    }
    let n = sft.num_blocks();
    let mut m = Array2::zeros((n, n));
    for u in 0..n {
        for &v in sft.successors(u) {
            let w = sft.edge_word(u, v);
            let f = potential.value(&w[w.len() - potential.range()..]);
            if !f.is_finite() {
                return Err(Error::InvalidPotential(format!(
                    "potential is not defined on the transition ({u},{v}) of this shift"
                )));
            }
            m[[u, v]] = f.exp();
        }
    }
    Ok(m)
}

/// The equilibrium (Gibbs) state of a finite-range potential, in block-Markov form.
#[derive(Debug, Clone)]
pub struct GibbsModel {
    measure: MarkovMeasure,
    potential: Potential,
    pressure: f64,
    lambda_max: f64,
    right_vec: Array1<f64>,
    left_vec: Array1<f64>,
    gibbs_k: Option<f64>,
}

impl GibbsModel {
    /// Solves for the Gibbs measure of `potential`. If the potential's range exceeds the
    /// block length of its shift plus one, the shift is first re-presented with longer blocks.
    pub fn solve(potential: &Potential) -> Result<Self> {
        let base = potential.sft();
        let sft: Arc<Sft> = if potential.range() > base.block_len() + 1 {
            Arc::new(base.with_order(potential.range())?)
        } else {
            base.clone()
        };
        let m = transfer_matrix(&sft, potential)?;
        let right = power_iteration(&m, PERRON_TOL, PERRON_MAX_ITER)?;
        let left = power_iteration(&m.t().to_owned(), PERRON_TOL, PERRON_MAX_ITER)?;
        let lambda = right.eigenvalue;
        let r = right.vector;
        let l = &left.vector / left.vector.dot(&r);

        let n = sft.num_blocks();
        let mut kernel = Array2::zeros((n, n));
        for u in 0..n {
            let mut s = 0.0;
            for &v in sft.successors(u) {
                let q = m[[u, v]] * r[v] / (lambda * r[u]);
                kernel[[u, v]] = q;
                s += q;
            }
            kernel.row_mut(u).mapv_inplace(|q| q / s);
        }
        let stationary = &l * &r;
        let stationary = &stationary / stationary.sum();
        let measure = MarkovMeasure::new(sft, stationary, kernel)?;
        Ok(Self {
            measure,
            potential: potential.clone(),
            pressure: lambda.ln(),
            lambda_max: lambda,
            right_vec: r,
            left_vec: l,
            gibbs_k: None,
        })
    }

    pub fn measure(&self) -> &MarkovMeasure {
        &self.measure
    }

    /// Working presentation of the shift (re-blocked when the potential required it).
    pub fn sft(&self) -> &Arc<Sft> {
        self.measure.sft()
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    /// Topological pressure in nats per step.
    pub fn pressure(&self) -> f64 {
        self.pressure
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    pub fn right_vec(&self) -> &Array1<f64> {
        &self.right_vec
    }

    pub fn left_vec(&self) -> &Array1<f64> {
        &self.left_vec
    }

    pub fn stationary(&self) -> &Array1<f64> {
        self.measure.stationary()
    }

    pub fn kernel(&self) -> &Array2<f64> {
        self.measure.kernel()
    }

    /// Gibbs constant from the last audit, if one was run.
    pub fn gibbs_k(&self) -> Option<f64> {
        self.gibbs_k
    }

    pub(crate) fn set_gibbs_k(&mut self, k: f64) {
        self.gibbs_k = Some(k);
    }

    pub fn entropy(&self) -> f64 {
        self.measure.entropy()
    }

    /// `int f d(mu)` of the model's own potential.
    pub fn mean_potential(&self) -> Result<f64> {
        self.measure.expectation(&self.potential)
    }
}

impl AsRef<MarkovMeasure> for GibbsModel {
    fn as_ref(&self) -> &MarkovMeasure {
        &self.measure
    }
}

/// Free-function form of [`GibbsModel::solve`].
pub fn solve_gibbs(potential: &Potential) -> Result<GibbsModel> {
    GibbsModel::solve(potential)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn golden() -> Arc<Sft> {
        Arc::new(Sft::golden_mean())
    }

    #[test]
    fn transfer_matrix_examples() {
        let full = Arc::new(Sft::full_shift(2).unwrap());
        let zero = Potential::constant(full.clone(), 0.0).unwrap();
        assert_eq!(transfer_matrix(&full, &zero).unwrap(), array![[1.0, 1.0], [1.0, 1.0]]);
        let g = golden();
        let zero = Potential::constant(g.clone(), 0.0).unwrap();
        assert_eq!(transfer_matrix(&g, &zero).unwrap(), array![[1.0, 1.0], [1.0, 0.0]]);
        let bern = Potential::from_fn(full.clone(), 1, |w| if w[0] == 1 { 0.3f64.ln() } else { 0.7f64.ln() }).unwrap();
        let m = transfer_matrix(&full, &bern).unwrap();
        for u in 0..2 {
            assert!((m[[u, 0]] - 0.7).abs() < 1e-15 && (m[[u, 1]] - 0.3).abs() < 1e-15);
        }
    }

    #[test]
    fn uniform_measure_of_full_shift() {
        let full = Arc::new(Sft::full_shift(2).unwrap());
        let model = GibbsModel::solve(&Potential::constant(full, 0.0).unwrap()).unwrap();
        assert!((model.pressure() - 2f64.ln()).abs() < 1e-13);
        assert!(model.stationary().iter().all(|&p| (p - 0.5).abs() < 1e-13));
        assert!(model.kernel().iter().all(|&q| (q - 0.5).abs() < 1e-13));
    }

    #[test]
    fn parry_measure_of_golden_mean() {
        let model = GibbsModel::solve(&Potential::constant(golden(), 0.0).unwrap()).unwrap();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((model.pressure() - phi.ln()).abs() < 1e-12);
        assert!((model.pressure() - 0.481212).abs() < 1e-6);
        let q = model.kernel();
        assert!((q[[0, 0]] - 1.0 / phi).abs() < 1e-12);
        assert!((q[[0, 1]] - 1.0 / (phi * phi)).abs() < 1e-12);
        assert!((q[[1, 0]] - 1.0).abs() < 1e-15);
        assert_eq!(q[[1, 1]], 0.0);
        assert!((model.entropy() - model.pressure()).abs() < 1e-8);
    }

    #[test]
    fn bernoulli_potential_has_zero_pressure() {
        let full = Arc::new(Sft::full_shift(2).unwrap());
        let bern = Potential::from_fn(full, 1, |w| if w[0] == 1 { 0.3f64.ln() } else { 0.7f64.ln() }).unwrap();
        let model = GibbsModel::solve(&bern).unwrap();
        assert!(model.pressure().abs() < 1e-13);
        assert!((model.stationary()[0] - 0.7).abs() < 1e-13);
        let mean = model.mean_potential().unwrap();
        assert!((mean - (0.3 * 0.3f64.ln() + 0.7 * 0.7f64.ln())).abs() < 1e-12);
        assert!((mean + 0.610864).abs() < 1e-6);
    }

    #[test]
    fn long_range_potential_reblocks() {
        let full = Arc::new(Sft::full_shift(2).unwrap());
        // rewards the pattern 101
        let f = Potential::from_fn(full, 3, |w| if w == [1, 0, 1] { 1.0 } else { 0.0 }).unwrap();
        let model = GibbsModel::solve(&f).unwrap();
        assert_eq!(model.sft().block_len(), 2);
        let vp = model.entropy() + model.mean_potential().unwrap();
        assert!((vp - model.pressure()).abs() < 1e-8);
    }

    #[test]
    fn potential_off_the_shift_is_rejected() {
        let g = golden();
        let full = Arc::new(Sft::full_shift(2).unwrap());
        let zero = Potential::constant(g, 0.0).unwrap();
        // golden-mean table has no entry for the transition 1 -> 1 of the full shift
        let z2 = Potential::from_fn(zero.sft().clone(), 2, |_| 0.0).unwrap();
        assert!(transfer_matrix(&full, &z2).is_err());
    }
}
