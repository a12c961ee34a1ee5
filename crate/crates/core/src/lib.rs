//! Gibbs measures on mixing shifts of finite type, Gibbs posterior distributions over a
//! parameter grid, and the numerical diagnostics used to check their large-sample behavior.

pub mod error;
pub mod io;
pub mod models;
pub mod numeric;
pub mod posterior;
pub mod sft;
pub mod simulate;
pub mod thermo;

pub use error::{Error, Result};
pub use sft::{Sft, Symbol, Word};
