//! Parameter grids, potential families and loss functions.

mod family;
mod grid;
mod loss;

pub use family::{
    bernoulli_family, markov_family, regularity_report, PotentialFamily, RegularityReport, RegularityRow,
    SolvedFamily, BERNOULLI_EPS,
};
pub use grid::ThetaGrid;
pub use loss::{gaussian_nll, LossKind, LossSpec, Obs, Observations, MIN_STD};
