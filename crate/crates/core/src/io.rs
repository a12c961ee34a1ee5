//! File formats: JSON descriptions of shifts, potential families and losses, and headered CSV
//! reports and trajectories.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{bernoulli_family, markov_family, LossSpec, PotentialFamily, ThetaGrid};
use crate::posterior::{ConcentrationReport, PosteriorGrid, RateTable};
use crate::sft::{parse_word, render_word, Sft};
use crate::simulate::{EmissionSequence, Trajectory};
use crate::thermo::Potential;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SftFile {
    pub alphabet_size: usize,
    #[serde(default)]
    pub forbidden: Vec<String>,
}

impl SftFile {
    /// Builds the shift without insisting on mixing, so callers can report the failure.
    pub fn build_unchecked(&self) -> Result<Sft> {
        let words = self
            .forbidden
            .iter()
            .map(|w| parse_word(w, self.alphabet_size))
            .collect::<Result<Vec<_>>>()?;
        Sft::new_unchecked(self.alphabet_size, &words)
    }

    pub fn build(&self) -> Result<Sft> {
        let words = self
            .forbidden
            .iter()
            .map(|w| parse_word(w, self.alphabet_size))
            .collect::<Result<Vec<_>>>()?;
        Sft::new(self.alphabet_size, &words)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridPoints {
    Scalar(Vec<f64>),
    Points(Vec<Vec<f64>>),
}

/// Potential table keyed by rendered words.
pub type WordTable = BTreeMap<String, f64>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    /// `x_0 log(theta) + (1 - x_0) log(1 - theta)` on the full 2-shift.
    Bernoulli,
    /// `(1 - t) a + t b`, `t` the first grid coordinate.
    Affine { range: usize, a: WordTable, b: WordTable },
    /// One table per grid point.
    Table { range: usize, tables: Vec<WordTable> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyFile {
    pub grid: GridPoints,
    #[serde(default)]
    pub prior: Option<Vec<f64>>,
    pub potential: PotentialSpec,
}

impl FamilyFile {
    pub fn grid(&self) -> Result<ThetaGrid> {
        let points = match &self.grid {
            GridPoints::Scalar(v) => v.iter().map(|&x| vec![x]).collect(),
            GridPoints::Points(p) => p.clone(),
        };
        let n = points.len();
        ThetaGrid::new(points, self.prior.clone().unwrap_or_else(|| vec![1.0; n]))
    }

    pub fn build(&self, sft: Arc<Sft>) -> Result<PotentialFamily> {
        let grid = self.grid()?;
        match &self.potential {
            PotentialSpec::Bernoulli => {
                if *sft != Sft::full_shift(2)? {
                    return Err(Error::InvalidPotential(
                        "the Bernoulli family lives on the full 2-shift".into(),
                    ));
                }
                bernoulli_family(grid)
            }
            PotentialSpec::Affine { range, a, b } => {
                let a = table_potential(&sft, *range, a)?;
                let b = table_potential(&sft, *range, b)?;
                markov_family(grid, &a, &b)
            }
            PotentialSpec::Table { range, tables } => {
                let potentials = tables
                    .iter()
                    .map(|t| table_potential(&sft, *range, t))
                    .collect::<Result<Vec<_>>>()?;
                PotentialFamily::new(grid, potentials)
            }
        }
    }
}

pub fn table_potential(sft: &Arc<Sft>, range: usize, table: &WordTable) -> Result<Potential> {
    let parsed = table
        .iter()
        .map(|(w, &v)| Ok((parse_word(w, sft.alphabet_size())?, v)))
        .collect::<Result<HashMap<_, _>>>()?;
    Potential::new(sft.clone(), range, parsed)
}

/// Per-grid-point tables; a single row is broadcast over the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridTable {
    Shared(Vec<f64>),
    PerPoint(Vec<Vec<f64>>),
}

impl GridTable {
    fn expand(&self, grid_len: usize, what: &str) -> Result<Vec<Vec<f64>>> {
        match self {
            GridTable::Shared(row) => Ok(vec![row.clone(); grid_len]),
            GridTable::PerPoint(rows) if rows.len() == grid_len => Ok(rows.clone()),
            GridTable::PerPoint(rows) => Err(Error::ShapeMismatch(format!(
                "{what} has {} rows for {grid_len} grid points",
                rows.len()
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LossFile {
    Squared { phi: GridTable },
    Discrete { phi: Vec<u8> },
    NegLogDensity { mean: GridTable, std: GridTable },
    Zero,
    /// `P(f_theta) - f_theta(window)` on directly observed symbols.
    Direct,
}

/// A loss ready for evaluation on a particular grid.
#[derive(Debug, Clone, PartialEq)]
pub enum LoadedLoss {
    Hidden(LossSpec),
    Direct,
}

impl LossFile {
    pub fn build(&self, grid_len: usize, alphabet_size: usize) -> Result<LoadedLoss> {
        let spec = match self {
            LossFile::Squared { phi } => LossSpec::squared(phi.expand(grid_len, "phi")?, alphabet_size)?,
            LossFile::Discrete { phi } => {
                if phi.len() != alphabet_size {
                    return Err(Error::ShapeMismatch(format!(
                        "discrete map has {} entries for {alphabet_size} symbols",
                        phi.len()
                    )));
                }
                LossSpec::discrete(phi.clone(), grid_len)?
            }
            LossFile::NegLogDensity { mean, std } => {
                let mean = mean.expand(grid_len, "mean")?;
                if mean.iter().any(|r| r.len() != alphabet_size) {
                    return Err(Error::ShapeMismatch(format!(
                        "emission means must have {alphabet_size} entries per grid point"
                    )));
                }
                LossSpec::gaussian(mean, std.expand(grid_len, "std")?)?
            }
            LossFile::Zero => LossSpec::zero(grid_len, alphabet_size),
            LossFile::Direct => return Ok(LoadedLoss::Direct),
        };
        Ok(LoadedLoss::Hidden(spec))
    }
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

/// Provenance line written at the top of every report file.
#[derive(Debug, Clone, PartialEq)]
pub struct RunHeader {
    pub seed: u64,
    pub scenario: String,
    pub beta: f64,
    pub grid_hash: String,
}

impl fmt::Display for RunHeader {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "# seed={},scenario={},beta={},grid={}",
            self.seed, self.scenario, self.beta, self.grid_hash
        )
    }
}

/// Grid point as a CSV cell; coordinates of multi-dimensional points are joined with `;`.
pub fn format_point(point: &[f64]) -> String {
    point.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

pub fn write_posteriors_csv<W: Write>(mut out: W, header: &RunHeader, posteriors: &[PosteriorGrid]) -> Result<()> {
    writeln!(out, "{header}")?;
    writeln!(out, "n,theta,log_weight,posterior_mass")?;
    for p in posteriors {
        for i in 0..p.grid().len() {
            writeln!(
                out,
                "{},{},{},{}",
                p.n(),
                format_point(p.grid().point(i)),
                p.log_weights()[i],
                p.mass(i)
            )?;
        }
    }
    Ok(())
}

pub fn write_rates_csv<W: Write>(mut out: W, header: &RunHeader, grid: &ThetaGrid, rates: &RateTable) -> Result<()> {
    writeln!(out, "{header}")?;
    writeln!(out, "theta,V_hat,stderr,V_closed")?;
    for row in &rates.rows {
        let closed = row.v_closed.map(|v| v.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{}",
            format_point(grid.point(row.theta)),
            row.v_hat,
            row.stderr,
            closed
        )?;
    }
    Ok(())
}

pub fn write_concentration_csv<W: Write>(mut out: W, header: &RunHeader, report: &ConcentrationReport) -> Result<()> {
    writeln!(out, "{header}")?;
    writeln!(out, "n,outside_mass,log_mass_rate")?;
    for row in &report.rows {
        writeln!(out, "{},{},{}", row.n, row.outside_mass, row.log_mass_rate)?;
    }
    Ok(())
}

fn trajectory_header(seed: u64, source: &str, theta_star: Option<&[f64]>) -> String {
    let theta = theta_star.map(format_point).unwrap_or_default();
    format!("# seed={seed},source={source},theta_star={theta}")
}

pub fn write_trajectory_csv<W: Write>(mut out: W, t: &Trajectory, theta_star: Option<&[f64]>) -> Result<()> {
    writeln!(out, "{}", trajectory_header(t.seed, &t.source, theta_star))?;
    writeln!(out, "k,symbol")?;
    for (k, s) in t.symbols.iter().enumerate() {
        writeln!(out, "{k},{}", render_word(&[*s]))?;
    }
    Ok(())
}

pub fn write_emissions_csv<W: Write>(mut out: W, e: &EmissionSequence, source: &str) -> Result<()> {
    writeln!(out, "{}", trajectory_header(e.seed, source, e.theta_star.as_deref()))?;
    writeln!(out, "k,value")?;
    for (k, v) in e.values.iter().enumerate() {
        writeln!(out, "{k},{v}")?;
    }
    Ok(())
}

/// A trajectory or emission file read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub enum SequenceFile {
    Symbols(Trajectory, Option<Vec<f64>>),
    Values(EmissionSequence, String),
}

pub fn read_sequence_csv<R: BufRead>(input: R, alphabet_size: usize) -> Result<SequenceFile> {
    let mut lines = input.lines();
    let mut next = || -> Result<String> {
        lines
            .next()
            .ok_or_else(|| Error::Parse("unexpected end of file".into()))?
            .map_err(Error::from)
    };
    let header = next()?;
    let fields: HashMap<&str, &str> = header
        .strip_prefix("# ")
        .ok_or_else(|| Error::Parse("missing header line".into()))?
        .split(',')
        .filter_map(|kv| kv.split_once('='))
        .collect();
    let seed = fields
        .get("seed")
        .ok_or_else(|| Error::Parse("header has no seed".into()))?
        .parse::<u64>()
        .map_err(|e| Error::Parse(format!("seed: {e}")))?;
    let source = fields.get("source").copied().unwrap_or_default().to_string();
    let theta_star = match fields.get("theta_star").copied().unwrap_or_default() {
        "" => None,
        s => Some(
            s.split(';')
                .map(|x| x.parse::<f64>().map_err(|e| Error::Parse(format!("theta_star: {e}"))))
                .collect::<Result<Vec<_>>>()?,
        ),
    };
    let columns = next()?;
    let is_symbols = match columns.as_str() {
        "k,symbol" => true,
        "k,value" => false,
        other => return Err(Error::Parse(format!("unknown columns {other:?}"))),
    };
    let mut symbols = Vec::new();
    let mut values = Vec::new();
    for (k, line) in lines.enumerate() {
        let line = line?;
        let (idx, cell) = line
            .split_once(',')
            .ok_or_else(|| Error::Parse(format!("row {k}: expected two columns")))?;
        if idx.parse::<usize>().ok() != Some(k) {
            return Err(Error::Parse(format!("row {k}: index {idx:?} out of sequence")));
        }
        if is_symbols {
            let w = parse_word(cell, alphabet_size)?;
            if w.len() != 1 {
                return Err(Error::Parse(format!("row {k}: expected one symbol")));
            }
            symbols.push(w[0]);
        } else {
            values.push(cell.parse::<f64>().map_err(|e| Error::Parse(format!("row {k}: {e}")))?);
        }
    }
    Ok(if is_symbols {
        SequenceFile::Symbols(Trajectory { symbols, seed, source }, theta_star)
    } else {
        SequenceFile::Values(
            EmissionSequence {
                values,
                hidden: None,
                seed,
                theta_star,
            },
            source,
        )
    })
}
