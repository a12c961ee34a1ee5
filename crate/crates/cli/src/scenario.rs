use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;
use thermopost::io::{
    format_point, read_json, write_concentration_csv, write_posteriors_csv, write_rates_csv, FamilyFile, LoadedLoss,
    LossFile, RunHeader, SftFile,
};
use thermopost::models::{LossKind, LossSpec, Observations, SolvedFamily};
use thermopost::numeric::mean_stderr;
use thermopost::posterior::{
    bayes_posterior_direct, concentration_on, direct_loss, direct_partition_rate, neighborhood,
    posterior_from_evaluator, rate_closed_form_direct, rate_consistency, sandwich_check, theta_min,
    ConcentrationReport, HiddenEvaluator, PartitionEvaluator, PosteriorGrid, RateRow, RateTable,
};
use thermopost::simulate::{sample_trajectory, GeneratorSource, HiddenSource, MeasureSource, ObservationSource};
use thermopost::thermo::{gibbs_constant_audit, GibbsAudit, MarkovMeasure};
use thermopost::Symbol;

use crate::config::{ConfigError, Scenario, ScenarioConfig};

/// `|-(1/n) log Z_n - inf V|` allowed at the largest logged length.
pub const LIMIT_TOL: f64 = 0.03;
/// `|(1/n) log pi_n(U)|` allowed at the largest logged length for `U` meeting the minimizers.
pub const LOG_MASS_RATE_TOL: f64 = 0.05;
/// Mass ratio of identical-law grid points versus their prior ratio.
pub const DUPLICATE_RATIO_TOL: f64 = 1e-6;

/// Replicates that must meet a per-seed threshold: at least seven eighths.
pub fn required_replicates(replicates: usize) -> usize {
    (7 * replicates).div_ceil(8)
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Compute(#[from] thermopost::Error),
    #[error("{0}")]
    Io(String),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

/// Shift, solved family and loss named by a configuration.
pub struct Loaded {
    pub family: SolvedFamily,
    pub loss: LoadedLoss,
    pub theta_star: Option<usize>,
}

pub fn load(cfg: &ScenarioConfig) -> Result<Loaded, CliError> {
    let sft_file: SftFile = read_json(&cfg.sft)?;
    let sft = Arc::new(sft_file.build()?);
    let family_file: FamilyFile = read_json(&cfg.family)?;
    let family = family_file.build(sft.clone())?.solve()?;
    let loss_file: LossFile = read_json(&cfg.loss)?;
    let loss = loss_file.build(family.grid().len(), sft.alphabet_size())?;
    let theta_star = cfg
        .theta_star
        .as_deref()
        .map(|t| locate_theta(&family, t))
        .transpose()?;
    Ok(Loaded {
        family,
        loss,
        theta_star,
    })
}

pub fn locate_theta(family: &SolvedFamily, theta: &[f64]) -> Result<usize, ConfigError> {
    let grid = family.grid();
    if theta.len() != grid.dim() {
        return Err(ConfigError::new(
            "theta_star",
            format!("has {} coordinates, grid points have {}", theta.len(), grid.dim()),
        ));
    }
    let i = grid.nearest(theta);
    let exact = grid.point(i).iter().zip(theta).all(|(a, b)| (a - b).abs() <= 1e-9);
    if !exact {
        return Err(ConfigError::new("theta_star", format!("{theta:?} is not a grid point")));
    }
    Ok(i)
}

/// Observations drawn from the model at `theta`, shaped for the configured loss.
struct ModelSource {
    measure: MarkovMeasure,
    spec: Option<LossSpec>,
    theta: usize,
}

impl ObservationSource for ModelSource {
    fn observe(&self, n: usize, seed: u64) -> thermopost::Result<Observations> {
        match &self.spec {
            Some(spec) if spec.kind() == LossKind::NegLogDensity => HiddenSource {
                measure: self.measure.clone(),
                spec: spec.clone(),
                theta: self.theta,
            }
            .observe(n, seed),
            Some(spec) if spec.kind() == LossKind::Squared => {
                let t = sample_trajectory(&self.measure, n, seed)?;
                let values = t
                    .symbols
                    .iter()
                    .map(|&x| spec.observation_map(self.theta, x))
                    .collect::<thermopost::Result<Vec<_>>>()?;
                Ok(Observations::Real(values))
            }
            _ => MeasureSource {
                measure: self.measure.clone(),
            }
            .observe(n, seed),
        }
    }
}

fn observation_source(cfg: &ScenarioConfig, loaded: &Loaded) -> Result<Box<dyn ObservationSource>, CliError> {
    if let Some(src) = &cfg.source {
        return Ok(Box::new(GeneratorSource {
            name: src.generator.clone(),
            params: src.params(),
        }));
    }
    let theta = loaded
        .theta_star
        .ok_or_else(|| ConfigError::new("theta_star", "is required to generate observations"))?;
    let spec = match &loaded.loss {
        LoadedLoss::Hidden(spec) => Some(spec.clone()),
        LoadedLoss::Direct => None,
    };
    Ok(Box::new(ModelSource {
        measure: loaded.family.model(theta).measure().clone(),
        spec,
        theta,
    }))
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub threshold: f64,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub scenario: String,
    pub seed: u64,
    pub seeds: Vec<u64>,
    pub beta: f64,
    pub grid_hash: String,
    pub n_schedule: Vec<usize>,
    pub theta_star: Option<Vec<f64>>,
    pub theta_min: Vec<Vec<f64>>,
    /// Per replicate: smallest logged `n` from which the outside mass stays below threshold.
    pub settled_n: Vec<Option<usize>>,
    pub gibbs_k: Option<f64>,
    pub info: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    pub passed: bool,
}

/// Everything a run produces, held in memory until the final write.
pub struct Outcome {
    pub summary: Summary,
    header: RunHeader,
    family: SolvedFamily,
    rates: RateTable,
    posteriors: Vec<Vec<PosteriorGrid>>,
    concentration: Vec<ConcentrationReport>,
    audits: Vec<GibbsAudit>,
}

fn rate_table_from(posteriors: &[Vec<PosteriorGrid>], v_closed: Option<Vec<f64>>) -> RateTable {
    let last: Vec<&PosteriorGrid> = posteriors.iter().map(|p| p.last().expect("schedule is non-empty")).collect();
    let n = last[0].n();
    let replicates: Vec<Vec<f64>> = last
        .iter()
        .map(|p| p.log_weights().iter().map(|lw| (0.0 - lw) / n as f64).collect())
        .collect();
    let rows = (0..last[0].grid().len())
        .map(|i| {
            let vals: Vec<f64> = replicates.iter().map(|r| r[i]).collect();
            let (v_hat, stderr) = mean_stderr(&vals);
            RateRow {
                theta: i,
                v_hat,
                stderr,
                v_closed: v_closed.as_ref().map(|v| v[i]),
                n_used: n,
            }
        })
        .collect();
    RateTable { rows, replicates }
}

fn count_check(name: &str, passes: usize, total: usize, required: usize, detail: String) -> Check {
    Check {
        name: name.into(),
        passed: passes >= required,
        value: passes as f64,
        threshold: required as f64,
        detail: format!("{passes}/{total} replicates; {detail}"),
    }
}

/// Grid points generating the same observation law as `theta`: same potential and same loss
/// parameters.
fn identifiability_class(family: &SolvedFamily, spec: Option<&LossSpec>, theta: usize) -> Vec<usize> {
    let same_loss = |j: usize| match spec {
        Some(spec) if spec.kind() == LossKind::NegLogDensity => (0..spec.alphabet_size())
            .all(|s| spec.emission(j, s as Symbol).ok() == spec.emission(theta, s as Symbol).ok()),
        Some(spec) if spec.kind() == LossKind::Squared => (0..spec.alphabet_size())
            .all(|s| spec.observation_map(j, s as Symbol).ok() == spec.observation_map(theta, s as Symbol).ok()),
        _ => true,
    };
    (0..family.grid().len())
        .filter(|&j| family.family().potential(j) == family.family().potential(theta) && same_loss(j))
        .collect()
}

pub fn execute(cfg: &ScenarioConfig) -> Result<Outcome, CliError> {
    let mut loaded = load(cfg)?;
    match (cfg.scenario, &loaded.loss) {
        (Scenario::DirectGibbs, LoadedLoss::Hidden(_)) => {
            return Err(ConfigError::new("loss", "direct_gibbs needs the direct loss").into())
        }
        (Scenario::HiddenGibbs, LoadedLoss::Hidden(spec)) if spec.kind() == LossKind::NegLogDensity => {}
        (Scenario::HiddenGibbs, _) => {
            return Err(ConfigError::new("loss", "hidden_gibbs needs a neg_log_density loss").into())
        }
        _ => {}
    }
    let seeds = cfg.replicate_seeds();
    let required = required_replicates(seeds.len());
    let source = observation_source(cfg, &loaded)?;

    let mut audits = Vec::new();
    let mut gibbs_k = None;
    if cfg.scenario == Scenario::DirectGibbs {
        audits = loaded
            .family
            .models_mut()
            .par_iter_mut()
            .map(|m| gibbs_constant_audit(m, cfg.audit_depth))
            .collect::<thermopost::Result<Vec<_>>>()?;
        gibbs_k = loaded.family.uniform_gibbs_k();
    }

    let family = &loaded.family;
    let grid = family.grid();
    let direct;
    let hidden;
    let evaluator: &dyn PartitionEvaluator = match &loaded.loss {
        LoadedLoss::Direct => {
            direct = direct_loss(family);
            &direct
        }
        LoadedLoss::Hidden(spec) => {
            hidden = HiddenEvaluator::new(family, spec)?;
            &hidden
        }
    };
    let spec = match &loaded.loss {
        LoadedLoss::Hidden(spec) => Some(spec),
        LoadedLoss::Direct => None,
    };

    let n_max = cfg.n_max();
    let observations = seeds
        .par_iter()
        .map(|&seed| source.observe(n_max, seed))
        .collect::<thermopost::Result<Vec<_>>>()?;
    let posteriors = observations
        .par_iter()
        .map(|ys| {
            cfg.n_schedule
                .iter()
                .map(|&n| posterior_from_evaluator(grid, evaluator, &ys.prefix(n), cfg.beta))
                .collect::<thermopost::Result<Vec<_>>>()
        })
        .collect::<thermopost::Result<Vec<_>>>()?;

    let model_source = cfg.source.is_none();
    let v_closed = match (&loaded.loss, loaded.theta_star) {
        (LoadedLoss::Direct, Some(star)) if model_source => Some(
            (0..grid.len())
                .map(|i| rate_closed_form_direct(family, i, star))
                .collect::<thermopost::Result<Vec<_>>>()?,
        ),
        _ => None,
    };
    let rates = rate_table_from(&posteriors, v_closed.clone());
    let mut info = BTreeMap::new();
    let mut checks = Vec::new();

    let consistency_failures = posteriors
        .iter()
        .flatten()
        .filter(|p| !rate_consistency(p).holds)
        .count();
    checks.push(Check {
        name: "rate_consistency".into(),
        passed: consistency_failures == 0,
        value: consistency_failures as f64,
        threshold: 0.0,
        detail: "logsumexp bounds on -(1/n) log Z_n at every logged n".into(),
    });

    // Concentration target: the identifiability class of the true parameter when the data come
    // from the model, otherwise the estimated minimizers of the rate.
    let minimizers = theta_min(&rates, None);
    let target = match loaded.theta_star {
        Some(star) if model_source && cfg.scenario != Scenario::PosteriorConcentration => {
            identifiability_class(family, spec, star)
        }
        _ => minimizers.clone(),
    };
    let u = neighborhood(grid, &target, cfg.radius);
    let concentration = posteriors
        .iter()
        .map(|ps| concentration_on(ps, u.clone()))
        .collect::<thermopost::Result<Vec<_>>>()?;
    let settled_n: Vec<Option<usize>> = concentration
        .iter()
        .map(|c| c.settled_after(cfg.mass_threshold))
        .collect();
    let final_outside: Vec<f64> = concentration
        .iter()
        .map(|c| c.rows.last().expect("schedule is non-empty").outside_mass)
        .collect();

    let last_rates: Vec<f64> = posteriors
        .iter()
        .map(|ps| {
            let p = ps.last().expect("schedule is non-empty");
            (0.0 - p.log_z()) / p.n() as f64
        })
        .collect();
    let min_v_hat = rates.min_v_hat();
    info.insert("min_v_hat".into(), min_v_hat);
    info.insert("log_z_rate".into(), mean_stderr(&last_rates).0);
    if let Some(vc) = &v_closed {
        let min_closed = vc.iter().copied().fold(f64::INFINITY, f64::min);
        info.insert("min_v_closed".into(), min_closed);
        let star = loaded.theta_star.expect("closed form needs theta_star");
        let min_limit = (0..grid.len())
            .map(|i| direct_partition_rate(family, i, star))
            .collect::<thermopost::Result<Vec<_>>>()?
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        info.insert("min_direct_partition_rate".into(), min_limit);
    }
    if let Some(k) = gibbs_k {
        info.insert("gibbs_k".into(), k);
    }

    let concentration_check = |checks: &mut Vec<Check>, threshold: f64| {
        let passes = final_outside.iter().filter(|&&m| m < threshold).count();
        checks.push(count_check(
            "concentration",
            passes,
            seeds.len(),
            required,
            format!(
                "posterior mass outside radius {} of {:?} below {threshold} at n = {n_max}",
                cfg.radius,
                target.iter().map(|&i| format_point(grid.point(i))).collect::<Vec<_>>()
            ),
        ));
    };
    let log_mass_check = |checks: &mut Vec<Check>, set: &[usize]| {
        let worst = posteriors
            .iter()
            .map(|ps| {
                let p = ps.last().expect("schedule is non-empty");
                (p.log_mass_of(set) / p.n() as f64).abs()
            })
            .fold(0.0, f64::max);
        checks.push(Check {
            name: "log_mass_rate".into(),
            passed: worst <= LOG_MASS_RATE_TOL,
            value: worst,
            threshold: LOG_MASS_RATE_TOL,
            detail: format!("max over replicates of |(1/n) log pi_n(U)| at n = {n_max}"),
        });
    };

    match cfg.scenario {
        Scenario::PartitionLimit => {
            let worst = last_rates.iter().map(|r| (r - min_v_hat).abs()).fold(0.0, f64::max);
            checks.push(Check {
                name: "partition_limit".into(),
                passed: worst <= LIMIT_TOL,
                value: worst,
                threshold: LIMIT_TOL,
                detail: format!("max over replicates of |-(1/n) log Z_n - min V_hat| at n = {n_max}"),
            });
        }
        Scenario::PosteriorConcentration => {
            concentration_check(&mut checks, cfg.mass_threshold);
            log_mass_check(&mut checks, &minimizers);
        }
        Scenario::DirectGibbs => {
            let star = loaded.theta_star.expect("validated");
            concentration_check(&mut checks, cfg.mass_threshold);
            log_mass_check(&mut checks, &[star]);
            let k = gibbs_k.expect("audited");
            let mut worst = f64::INFINITY;
            let mut failures = 0;
            for (ys, ps) in observations.iter().zip(&posteriors) {
                let ys = ys.symbols().expect("direct observations are symbols");
                for p in ps {
                    let bayes = bayes_posterior_direct(family, &ys[..p.n()])?;
                    let report = sandwich_check(p, &bayes, k)?;
                    worst = worst.min(report.worst_margin);
                    failures += usize::from(!report.holds);
                }
            }
            checks.push(Check {
                name: "sandwich".into(),
                passed: failures == 0,
                value: worst,
                threshold: -thermopost::posterior::LOG_TOL,
                detail: format!("smallest 2 log K - |log Pi_n(F) - log pi_n(F)| over all sets, n and replicates (K = {k})"),
            });
        }
        Scenario::HiddenGibbs => {
            concentration_check(&mut checks, cfg.mass_threshold);
            if target.len() > 1 {
                let a = target[0];
                let mut worst: f64 = 0.0;
                for &b in &target[1..] {
                    let prior_ratio = grid.prior()[b] / grid.prior()[a];
                    for p in posteriors.iter().flatten() {
                        worst = worst.max((p.mass(b) / p.mass(a) - prior_ratio).abs());
                    }
                }
                checks.push(Check {
                    name: "duplicate_ratio".into(),
                    passed: worst <= DUPLICATE_RATIO_TOL,
                    value: worst,
                    threshold: DUPLICATE_RATIO_TOL,
                    detail: "posterior mass ratio of identical-law grid points versus prior ratio".into(),
                });
            }
        }
        Scenario::Misspecified => {}
    }

    let passed = checks.iter().all(|c| c.passed);
    let header = RunHeader {
        seed: cfg.seed,
        scenario: cfg.scenario.name().into(),
        beta: cfg.beta,
        grid_hash: grid.hash(),
    };
    let summary = Summary {
        scenario: cfg.scenario.name().into(),
        seed: cfg.seed,
        seeds,
        beta: cfg.beta,
        grid_hash: grid.hash(),
        n_schedule: cfg.n_schedule.clone(),
        theta_star: cfg.theta_star.clone(),
        theta_min: minimizers.iter().map(|&i| grid.point(i).to_vec()).collect(),
        settled_n,
        gibbs_k,
        info,
        checks,
        passed,
    };
    Ok(Outcome {
        summary,
        header,
        family: loaded.family,
        rates,
        posteriors,
        concentration,
        audits,
    })
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<fs::File>, CliError> {
    let path = dir.join(name);
    let file = fs::File::create(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(BufWriter::new(file))
}

impl Outcome {
    /// Writes every report file; the only stage that touches the file system.
    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        let grid = self.family.grid();
        let mut out = create(dir, "rates.csv")?;
        write_rates_csv(&mut out, &self.header, grid, &self.rates)?;
        out.flush()?;
        for (r, (ps, conc)) in self.posteriors.iter().zip(&self.concentration).enumerate() {
            let header = RunHeader {
                seed: self.summary.seeds[r],
                ..self.header.clone()
            };
            let mut out = create(dir, &format!("posterior_r{r}.csv"))?;
            write_posteriors_csv(&mut out, &header, ps)?;
            out.flush()?;
            let mut out = create(dir, &format!("concentration_r{r}.csv"))?;
            write_concentration_csv(&mut out, &header, conc)?;
            out.flush()?;
        }
        if !self.audits.is_empty() {
            let mut out = create(dir, "audit.csv")?;
            writeln!(out, "{}", self.header)?;
            writeln!(out, "theta,m,ratio_min,ratio_max")?;
            for (i, audit) in self.audits.iter().enumerate() {
                for row in &audit.rows {
                    writeln!(
                        out,
                        "{},{},{},{}",
                        format_point(grid.point(i)),
                        row.m,
                        row.ratio_min,
                        row.ratio_max
                    )?;
                }
            }
            out.flush()?;
        }
        let mut out = create(dir, "summary.json")?;
        serde_json::to_writer_pretty(&mut out, &self.summary).map_err(|e| CliError::Io(e.to_string()))?;
        writeln!(out)?;
        out.flush()?;
        Ok(())
    }
}

/// Diagnostics for `validate`; an empty list means the configuration is runnable.
pub fn diagnose(cfg: &ScenarioConfig, out: &mut impl Write) -> Result<Vec<String>, CliError> {
    let mut diags = Vec::new();
    let sft = match read_json::<SftFile>(&cfg.sft).and_then(|f| f.build_unchecked()) {
        Ok(sft) => {
            let (mixing, power) = sft.is_mixing();
            writeln!(
                out,
                "sft: {} symbols, {} forbidden words, {} blocks of length {}, is_mixing = {mixing}{}",
                sft.alphabet_size(),
                sft.forbidden().count(),
                sft.num_blocks(),
                sft.block_len(),
                power.map(|p| format!(" (power {p})")).unwrap_or_default()
            )?;
            if !mixing {
                diags.push(format!("sft {}: is_mixing = false", cfg.sft.display()));
                None
            } else {
                Some(Arc::new(sft))
            }
        }
        Err(e) => {
            diags.push(format!("sft {}: {e}", cfg.sft.display()));
            None
        }
    };

    let family_file = match read_json::<FamilyFile>(&cfg.family) {
        Ok(f) => Some(f),
        Err(e) => {
            diags.push(format!("family {}: {e}", cfg.family.display()));
            None
        }
    };
    if let Some(f) = &family_file {
        match f.grid() {
            Ok(grid) => {
                let (lo, hi) = grid
                    .prior()
                    .iter()
                    .fold((f64::INFINITY, 0.0f64), |(lo, hi), &p| (lo.min(p), hi.max(p)));
                writeln!(
                    out,
                    "grid: {} points of dimension {}, prior in [{lo}, {hi}], hash {}",
                    grid.len(),
                    grid.dim(),
                    grid.hash()
                )?;
            }
            Err(e) => diags.push(format!(
                "family {}: {e} (the prior must be fully supported on the grid)",
                cfg.family.display()
            )),
        }
    }

    if let (Some(sft), Some(f)) = (&sft, &family_file) {
        match f.build(sft.clone()) {
            Ok(family) => {
                if family.grid().len() >= 2 {
                    let report = thermopost::models::regularity_report(&family, None)?;
                    writeln!(
                        out,
                        "regularity: max sup-norm step {}, modulus {}",
                        report.max_sup_diff, report.modulus
                    )?;
                }
                match family.solve() {
                    Ok(solved) => {
                        match read_json::<LossFile>(&cfg.loss).and_then(|l| l.build(solved.grid().len(), sft.alphabet_size())) {
                            Ok(_) => {}
                            Err(e) => diags.push(format!("loss {}: {e}", cfg.loss.display())),
                        }
                        if let Some(t) = &cfg.theta_star {
                            if let Err(e) = locate_theta(&solved, t) {
                                diags.push(e.to_string());
                            }
                        }
                    }
                    Err(e) => diags.push(format!("family {}: {e}", cfg.family.display())),
                }
            }
            Err(e) => diags.push(format!("family {}: {e}", cfg.family.display())),
        }
    }
    Ok(diags)
}
