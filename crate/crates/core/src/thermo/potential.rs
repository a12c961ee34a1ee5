use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::sft::{render_word, Sft, Symbol, Word};

/// A locally constant potential: a real value for every admissible word of length `range`,
/// read off the coordinates `x_0 .. x_{range-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    sft: Arc<Sft>,
    range: usize,
    table: HashMap<Word, f64>,
}

impl Potential {
    pub fn new(sft: Arc<Sft>, range: usize, table: HashMap<Word, f64>) -> Result<Self> {
        if range == 0 {
            return Err(Error::InvalidPotential("range must be at least 1".into()));
        }
        let words = sft.enumerate_words(range)?;
        for w in &words {
            match table.get(w) {
                None => {
                    return Err(Error::InvalidPotential(format!(
                        "no value for admissible word {}",
                        render_word(w)
                    )))
                }
                Some(v) if !v.is_finite() => {
                    return Err(Error::InvalidPotential(format!(
                        "non-finite value {v} for word {}",
                        render_word(w)
                    )))
                }
                _ => {}
            }
        }
        if table.len() != words.len() {
            let extra = table
                .keys()
                .find(|w| w.len() != range || !sft.is_admissible(w))
                .map(|w| render_word(w))
                .unwrap_or_default();
            return Err(Error::InvalidPotential(format!(
                "table entry {extra:?} is not an admissible word of length {range}"
            )));
        }
        Ok(Self { sft, range, table })
    }

    /// Builds the table by evaluating `f` on every admissible word of length `range`.
    pub fn from_fn(sft: Arc<Sft>, range: usize, f: impl Fn(&[Symbol]) -> f64) -> Result<Self> {
        let table = sft
            .enumerate_words(range)?
            .into_iter()
            .map(|w| {
                let v = f(&w);
                (w, v)
            })
            .collect();
        Self::new(sft, range, table)
    }

    pub fn constant(sft: Arc<Sft>, c: f64) -> Result<Self> {
        Self::from_fn(sft, 1, |_| c)
    }

    pub fn sft(&self) -> &Arc<Sft> {
        &self.sft
    }

    pub fn range(&self) -> usize {
        self.range
    }

    pub fn table(&self) -> &HashMap<Word, f64> {
        &self.table
    }

    /// `f` evaluated on a point starting with `word`; only the first `range` symbols are read.
    /// Returns `-inf` for words outside the shift.
    pub fn value(&self, word: &[Symbol]) -> f64 {
        debug_assert!(word.len() >= self.range);
        self.table
            .get(&word[..self.range])
            .copied()
            .unwrap_or(f64::NEG_INFINITY)
    }

    /// Birkhoff sum `sum_{k<m} f(S^k x)` for a word of length `m + range - 1`.
    pub fn birkhoff_sum(&self, word: &[Symbol]) -> f64 {
        word.windows(self.range).map(|w| self.value(w)).sum()
    }

    /// `f + c`.
    pub fn shifted(&self, c: f64) -> Self {
        Self {
            sft: self.sft.clone(),
            range: self.range,
            table: self.table.iter().map(|(w, v)| (w.clone(), v + c)).collect(),
        }
    }

    /// Sup-norm distance to another potential on the same shift. Potentials of different
    /// range are compared as functions of `max(range)` coordinates.
    pub fn sup_distance(&self, other: &Potential) -> Result<f64> {
        if *self.sft != *other.sft {
            return Err(Error::ShapeMismatch("potentials live on different shifts".into()));
        }
        let r = self.range.max(other.range);
        Ok(self
            .sft
            .enumerate_words(r)?
            .iter()
            .map(|w| (self.value(w) - other.value(w)).abs())
            .fold(0.0, f64::max))
    }

    pub fn sup_norm(&self) -> f64 {
        self.table.values().fold(0.0, |a, v| a.max(v.abs()))
    }
}
