//! Empirical check of the Gibbs property
//! `K^-1 <= mu([x_0..x_{m-1}]) / exp(-P m + S_m f(x)) <= K`.

use std::io::Write;

use super::gibbs::GibbsModel;
use crate::error::{Error, Result};
use crate::sft::Word;

/// Words enumerated by the audit at its deepest level may not exceed this count.
pub const AUDIT_WORD_CAP: u128 = 1 << 22;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuditRow {
    pub m: usize,
    pub ratio_min: f64,
    pub ratio_max: f64,
}

impl AuditRow {
    /// Smallest `K` consistent with this level alone.
    pub fn k(&self) -> f64 {
        self.ratio_max.max(1.0 / self.ratio_min)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GibbsAudit {
    pub rows: Vec<AuditRow>,
    /// Envelope over every audited level.
    pub k: f64,
}

impl GibbsAudit {
    /// Envelope `K` over levels `1..=m`.
    pub fn k_up_to(&self, m: usize) -> f64 {
        self.rows
            .iter()
            .filter(|r| r.m <= m)
            .map(AuditRow::k)
            .fold(1.0, f64::max)
    }

    /// CSV with columns `m,ratio_min,ratio_max`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "m,ratio_min,ratio_max")?;
        for r in &self.rows {
            writeln!(out, "{},{:.17e},{:.17e}", r.m, r.ratio_min, r.ratio_max)?;
        }
        Ok(())
    }
}

/// Runs the audit for `m = 1..=m_max` and stores the envelope `K` on the model.
///
/// The Birkhoff sum of a range-`r` potential over a cylinder of length `m` still depends
/// on the `r - 1` following coordinates, so each cylinder is bounded by the extreme sums
/// over its admissible extensions.
pub fn gibbs_constant_audit(model: &mut GibbsModel, m_max: usize) -> Result<GibbsAudit> {
    let r = model.potential().range();
    let sft = model.sft().clone();
    let deepest = m_max + r - 1;
    let count = sft.count_words(deepest);
    if count > AUDIT_WORD_CAP {
        return Err(Error::ResourceLimit {
            what: "audit words",
            requested: count,
            cap: AUDIT_WORD_CAP,
        });
    }
    let pressure = model.pressure();
    let potential = model.potential();
    let measure = model.measure();
    let mut rows = Vec::with_capacity(m_max);
    for m in 1..=m_max {
        let words = sft.enumerate_words(m + r - 1)?;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        // words are lexicographic, so extensions of one m-prefix are contiguous
        let mut i = 0;
        while i < words.len() {
            let prefix: Word = words[i][..m].to_vec();
            let mut smin = f64::INFINITY;
            let mut smax = f64::NEG_INFINITY;
            while i < words.len() && words[i][..m] == prefix[..] {
                let s = potential.birkhoff_sum(&words[i]);
                smin = smin.min(s);
                smax = smax.max(s);
                i += 1;
            }
            let log_mu = measure.log_cylinder_prob(&prefix);
            lo = lo.min(log_mu + pressure * m as f64 - smax);
            hi = hi.max(log_mu + pressure * m as f64 - smin);
        }
        rows.push(AuditRow {
            m,
            ratio_min: lo.exp(),
            ratio_max: hi.exp(),
        });
    }
    let k = rows.iter().map(AuditRow::k).fold(1.0, f64::max);
    model.set_gibbs_k(k);
    Ok(GibbsAudit { rows, k })
}
