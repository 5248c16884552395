//! Executes a sweep and writes its table, manifest and summary.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use super::config::{AgingPattern, ExperimentConfig, OutputFormat, SweepKind};
use crate::cmc::{
    aged_joint_law, joint_kernel_with_cap, load_model, model_to_toml, AoiVector, CmcModel,
    CouplingWeights, TransitionMatrix,
};
use crate::error::{CsdpError, Result};
use crate::leakage::{
    evaluate_leakage, oracle_leakage, verify_reductions, LeakageParams, LeakageRow, OraclePath,
    ReductionCase, ReportOptions,
};
use crate::mechanism::FranConfig;
use crate::query::{BuiltinQuery, CorrelationDegree, QuerySpec};
use crate::seeds::{derive_seed, sha256_hex, SeedCoord, SEED_DOMAIN};
use crate::utility::{
    aging_error, default_grids, evaluate_grid, mse_simulated, noise_variance, select_optimum,
    UtilitySpec,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

/// Self-coupling used when neither a model nor a lambda axis is given.
pub const DEFAULT_LAMBDA: f64 = 0.75;

/// Command-line overrides of config fields.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub cap: Option<usize>,
    pub format: Option<OutputFormat>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub name: String,
    pub kind: SweepKind,
    pub rows: usize,
    pub status: &'static str,
    pub violations: Vec<String>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputFile {
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelSource {
    pub source: String,
    pub sha256: String,
}

/// Everything needed to regenerate a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub name: String,
    pub kind: SweepKind,
    pub config_sha256: String,
    pub model: ModelSource,
    pub root_seed: u64,
    pub seed_rule: String,
    pub cap: usize,
    pub format: OutputFormat,
    pub query: String,
    pub grids: serde_json::Value,
    pub outputs: Vec<OutputFile>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub table: PathBuf,
    pub manifest: Manifest,
    pub summary: RunSummary,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.summary.violations.is_empty() {
            EXIT_OK
        } else {
            EXIT_VIOLATION
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UtilityRow {
    pub lambda: Option<f64>,
    pub aging: &'static str,
    pub t: String,
    pub eps_c: f64,
    pub aging_error: f64,
    pub noise_variance: f64,
    pub mse: f64,
    pub mse_sim: Option<f64>,
    pub mse_se: Option<f64>,
    pub samples: Option<usize>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrontierRecord {
    pub lambda: Option<f64>,
    pub aging: &'static str,
    pub mechanism: &'static str,
    pub l_cap: f64,
    pub age: String,
    pub eps_c: f64,
    pub leakage: f64,
    pub mse: f64,
    pub feasible: bool,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleRow {
    pub lambda: Option<f64>,
    pub t: String,
    pub eps_c: f64,
    pub loose_linear: f64,
    pub tight: f64,
    pub oracle_exact: f64,
    pub oracle_sampled: f64,
    pub oracle_hw: f64,
    pub samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReductionRow {
    pub model: String,
    pub eps_c: f64,
    pub case: ReductionCase,
    pub check: String,
    pub observed: Option<f64>,
    pub expected: Option<f64>,
    pub pass: bool,
}

/// A sweep's rows in memory.
#[derive(Debug, Clone, PartialEq)]
pub enum Table {
    Leakage(Vec<LeakageRow>),
    Utility(Vec<UtilityRow>),
    Frontier(Vec<FrontierRecord>),
    Oracle(Vec<OracleRow>),
    Reduction(Vec<ReductionRow>),
}

impl Table {
    pub fn len(&self) -> usize {
        match self {
            Table::Leakage(r) => r.len(),
            Table::Utility(r) => r.len(),
            Table::Frontier(r) => r.len(),
            Table::Oracle(r) => r.len(),
            Table::Reduction(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Serialized bytes in `format`.
    pub fn render(&self, format: OutputFormat) -> Result<Vec<u8>> {
        match self {
            Table::Leakage(r) => render_rows(r, format),
            Table::Utility(r) => render_rows(r, format),
            Table::Frontier(r) => render_rows(r, format),
            Table::Oracle(r) => render_rows(r, format),
            Table::Reduction(r) => render_rows(r, format),
        }
    }
}

fn render_rows<R: Serialize>(rows: &[R], format: OutputFormat) -> Result<Vec<u8>> {
    let io = |e: &dyn std::fmt::Display| CsdpError::Io(e.to_string());
    match format {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in rows {
                w.serialize(r).map_err(|e| io(&e))?;
            }
            w.into_inner().map_err(|e| io(&e))
        }
        OutputFormat::Json => {
            let mut v = serde_json::to_vec_pretty(rows).map_err(|e| io(&e))?;
            v.push(b'\n');
            Ok(v)
        }
    }
}

/// The table plus any invariant violations and remarks.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub table: Table,
    pub violations: Vec<String>,
    pub notes: Vec<String>,
}

struct Setup {
    base: CmcModel<f64>,
    lambdas: Vec<Option<f64>>,
    model_source: ModelSource,
}

fn setup(config: &ExperimentConfig) -> Result<Setup> {
    let lambdas = config.lambdas()?;
    let (base, model_source) = match &config.model {
        Some(path) => {
            let text = fs::read(path).map_err(|e| CsdpError::File {
                path: path.display().to_string(),
                message: e.to_string(),
            })?;
            let model = load_model::<f64>(path)?;
            let src = ModelSource {
                source: path.display().to_string(),
                sha256: sha256_hex(&text),
            };
            (model, src)
        }
        None => {
            let model = CmcModel::coupled_pair(config.flip, DEFAULT_LAMBDA)?;
            let src = ModelSource {
                source: format!("built-in coupled pair, flip {}", config.flip),
                sha256: sha256_hex(model_to_toml(&model).as_bytes()),
            };
            (model, src)
        }
    };
    let lambdas = match lambdas {
        Some(l) => l.into_iter().map(Some).collect(),
        None if config.model.is_none() => vec![Some(DEFAULT_LAMBDA)],
        None => vec![None],
    };
    Ok(Setup {
        base,
        lambdas,
        model_source,
    })
}

fn model_at(base: &CmcModel<f64>, lambda: Option<f64>) -> Result<CmcModel<f64>> {
    match lambda {
        Some(l) => base.with_self_coupling(l),
        None => Ok(base.clone()),
    }
}

fn query_for(config: &ExperimentConfig, model: &CmcModel<f64>) -> Result<QuerySpec<f64>> {
    let kind: BuiltinQuery = config
        .query
        .parse()
        .map_err(|_| CsdpError::Config(format!("field `query`: unknown query `{}`", config.query)))?;
    Ok(QuerySpec::builtin(kind, model.space()))
}

fn degree_for(config: &ExperimentConfig, model: &CmcModel<f64>) -> Result<CorrelationDegree> {
    let s = model.num_sequences();
    CorrelationDegree::new(config.k.unwrap_or(s), s)
        .map_err(|e| CsdpError::Config(format!("field `k`: {e}")))
}

fn cell_seed(root: u64, kind: SweepKind, lambda: Option<f64>, age: &AoiVector, eps: f64) -> u64 {
    let mut coords: Vec<SeedCoord> = vec![(kind as u64).into(), lambda.unwrap_or(-1.0).into()];
    coords.extend(age.ages().iter().map(|&a| SeedCoord::from(a)));
    coords.push(eps.into());
    derive_seed(root, &coords)
}

/// Computes the sweep without touching the filesystem.
pub fn compute(config: &ExperimentConfig) -> Result<SweepResult> {
    let setup = setup(config)?;
    match config.kind {
        SweepKind::LeakageVsLambda | SweepKind::LeakageVsAge | SweepKind::LeakageVsNoise => {
            leakage_sweep(config, &setup)
        }
        SweepKind::UtilitySweep => utility_sweep(config, &setup),
        SweepKind::Frontier => frontier_sweep(config, &setup),
        SweepKind::OracleValidate => oracle_sweep(config, &setup),
        SweepKind::ReduceCheck => reduction_sweep(config, &setup),
    }
}

fn age_cells(config: &ExperimentConfig, s: usize) -> Result<Vec<(AgingPattern, AoiVector)>> {
    let ages = config.ages()?.unwrap_or_else(|| vec![0]);
    let mut out = Vec::new();
    for pattern in config.aging() {
        for &t in &ages {
            out.push((pattern, AoiVector::new(pattern.ages(s, t))));
        }
    }
    Ok(out)
}

fn leakage_sweep(config: &ExperimentConfig, setup: &Setup) -> Result<SweepResult> {
    let eps = config.eps()?.unwrap_or_else(|| vec![1.0]);
    let mut rows = Vec::new();
    let mut violations = Vec::new();
    let mut notes = Vec::new();
    for &lambda in &setup.lambdas {
        let model = model_at(&setup.base, lambda)?;
        let kernel = joint_kernel_with_cap(&model, config.cap)?;
        let query = query_for(config, &model)?;
        let degree = degree_for(config, &model)?;
        let cells = age_cells(config, model.num_sequences())?;
        let per_cell = cells
            .par_iter()
            .flat_map_iter(|(_, age)| eps.iter().map(move |&e| (age, e)))
            .map(|(age, e)| {
                let params = LeakageParams {
                    age: age.clone(),
                    eps_c: e,
                    degree,
                    query: query.name().to_string(),
                };
                let options = ReportOptions {
                    lambda,
                    baselines: true,
                    oracle: None,
                    seed: Some(cell_seed(config.seed, config.kind, lambda, age, e)),
                };
                evaluate_leakage(&kernel, &params, &query, &options)
            })
            .collect::<Result<Vec<_>>>()?;
        for report in per_cell {
            let row = report.row();
            let at = cell_label(lambda, &row.t, row.eps_c);
            violations.extend(report.violations().into_iter().map(|v| format!("{at}: {v}")));
            notes.extend(report.diagnostics.iter().map(|d| format!("{at}: {d}")));
            rows.push(row);
        }
    }
    Ok(SweepResult {
        table: Table::Leakage(rows),
        violations,
        notes,
    })
}

fn cell_label(lambda: Option<f64>, t: &str, eps: f64) -> String {
    match lambda {
        Some(l) => format!("lambda={l} t={t} eps_c={eps}"),
        None => format!("t={t} eps_c={eps}"),
    }
}

fn utility_sweep(config: &ExperimentConfig, setup: &Setup) -> Result<SweepResult> {
    let eps = config.eps()?.unwrap_or_else(|| vec![1.0]);
    let mut rows = Vec::new();
    let mut violations = Vec::new();
    for &lambda in &setup.lambdas {
        let model = model_at(&setup.base, lambda)?;
        let kernel = joint_kernel_with_cap(&model, config.cap)?;
        let query = query_for(config, &model)?;
        let cells = age_cells(config, model.num_sequences())?;
        let per_age = cells
            .par_iter()
            .map(|(pattern, age)| -> Result<Vec<UtilityRow>> {
                let law = aged_joint_law(&kernel, age)?;
                let aging = aging_error(&law, &query);
                eps.iter()
                    .map(|&e| {
                        let noise = noise_variance(&query, e)?;
                        let seed = cell_seed(config.seed, config.kind, lambda, age, e);
                        let sim = if config.samples > 0 {
                            Some(mse_simulated(&kernel, age, &query, e, config.samples, seed)?)
                        } else {
                            None
                        };
                        Ok(UtilityRow {
                            lambda,
                            aging: pattern.name(),
                            t: age.to_string(),
                            eps_c: e,
                            aging_error: aging,
                            noise_variance: noise,
                            mse: aging + noise,
                            mse_sim: sim.as_ref().map(|s| s.mean),
                            mse_se: sim.as_ref().map(|s| s.std_error),
                            samples: sim.as_ref().map(|s| s.samples),
                            seed,
                        })
                    })
                    .collect()
            })
            .collect::<Result<Vec<_>>>()?;
        for row in per_age.into_iter().flatten() {
            if let (Some(m), Some(se)) = (row.mse_sim, row.mse_se) {
                if (m - row.mse).abs() > 3.0 * se {
                    violations.push(format!(
                        "{} aging={}: simulated MSE {m} is more than 3 standard errors ({se}) from exact {}",
                        cell_label(lambda, &row.t, row.eps_c),
                        row.aging,
                        row.mse
                    ));
                }
            }
            rows.push(row);
        }
    }
    Ok(SweepResult {
        table: Table::Utility(rows),
        violations,
        notes: Vec::new(),
    })
}

fn frontier_sweep(config: &ExperimentConfig, setup: &Setup) -> Result<SweepResult> {
    let caps = config.caps()?.expect("validated");
    let mut rows = Vec::new();
    let mut violations = Vec::new();
    let mut notes = Vec::new();
    for &lambda in &setup.lambdas {
        let model = model_at(&setup.base, lambda)?;
        let s = model.num_sequences();
        let query = query_for(config, &model)?;
        let degree = degree_for(config, &model)?;
        let (default_ages, default_eps) = default_grids::<f64>(s);
        let eps_grid = config.eps()?.unwrap_or(default_eps);
        for pattern in config.aging() {
            let age_grid = match config.ages()? {
                Some(ts) => ts.iter().map(|&t| AoiVector::new(pattern.ages(s, t))).collect(),
                None => default_ages
                    .iter()
                    .map(|a| AoiVector::new(pattern.ages(s, a.max_age())))
                    .collect(),
            };
            let spec = UtilitySpec {
                query: query.clone(),
                degree,
                mse_cap: caps[0],
                age_grid,
                eps_grid: eps_grid.clone(),
                leakage_kind: config.leakage_kind,
                cap: config.cap,
            };
            let mut curves = Vec::new();
            for mechanism in config.mechanisms() {
                let points = evaluate_grid(&model, &spec, mechanism)?;
                let mut curve = Vec::new();
                for &cap in &caps {
                    let sol = select_optimum(&points, cap, mechanism)?;
                    let at = format!(
                        "{} aging={} {mechanism} l_cap={cap}",
                        lambda.map_or(String::new(), |l| format!("lambda={l}")),
                        pattern.name()
                    );
                    if sol.feasible && sol.mse > cap {
                        violations.push(format!("{at}: feasible point has MSE {} above the cap", sol.mse));
                    }
                    if !sol.feasible {
                        notes.push(format!("{at}: no grid point meets the cap"));
                    }
                    curve.push((cap, sol.leakage, sol.feasible));
                    rows.push(FrontierRecord {
                        lambda,
                        aging: pattern.name(),
                        mechanism: mechanism.name(),
                        l_cap: cap,
                        age: sol.age.to_string(),
                        eps_c: sol.eps_c,
                        leakage: sol.leakage,
                        mse: sol.mse,
                        feasible: sol.feasible,
                        seed: derive_seed(config.seed, &[(config.kind as u64).into(), cap.into()]),
                    });
                }
                let mut sorted = curve.clone();
                sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
                for w in sorted.windows(2) {
                    if w[0].2 && w[1].2 && w[1].1 > w[0].1 * (1.0 + 1e-12) {
                        violations.push(format!(
                            "{mechanism} aging={}: leakage rises from {} at l_cap={} to {} at l_cap={}",
                            pattern.name(),
                            w[0].1,
                            w[0].0,
                            w[1].1,
                            w[1].0
                        ));
                    }
                }
                curves.push((mechanism, curve));
            }
            notes.extend(ordering_notes(&curves, pattern));
        }
    }
    Ok(SweepResult {
        table: Table::Frontier(rows),
        violations,
        notes,
    })
}

#[allow(clippy::type_complexity)]
fn ordering_notes(
    curves: &[(crate::utility::Mechanism, Vec<(f64, f64, bool)>)],
    pattern: AgingPattern,
) -> Vec<String> {
    let mut notes = Vec::new();
    for pair in curves.windows(2) {
        let (lo, hi) = (&pair[0], &pair[1]);
        let crossings: Vec<String> = lo
            .1
            .iter()
            .zip(&hi.1)
            .filter(|(a, b)| a.1 > b.1)
            .map(|(a, b)| format!("l_cap={} ({} vs {})", a.0, a.1, b.1))
            .collect();
        if crossings.is_empty() {
            notes.push(format!("aging={}: {} <= {} at every cap", pattern.name(), lo.0, hi.0));
        } else {
            notes.push(format!(
                "aging={}: {} above {} at {}",
                pattern.name(),
                lo.0,
                hi.0,
                crossings.join(", ")
            ));
        }
    }
    notes
}

fn oracle_sweep(config: &ExperimentConfig, setup: &Setup) -> Result<SweepResult> {
    let eps = config.eps()?.expect("validated");
    let mut rows = Vec::new();
    let mut violations = Vec::new();
    let mut notes = Vec::new();
    for &lambda in &setup.lambdas {
        let model = model_at(&setup.base, lambda)?;
        let kernel = joint_kernel_with_cap(&model, config.cap)?;
        let query = query_for(config, &model)?;
        let degree = degree_for(config, &model)?;
        let cells = age_cells(config, model.num_sequences())?;
        let results = cells
            .par_iter()
            .flat_map_iter(|(_, age)| eps.iter().map(move |&e| (age, e)))
            .map(|(age, e)| -> Result<(OracleRow, Vec<String>)> {
                let seed = cell_seed(config.seed, config.kind, lambda, age, e);
                let params = LeakageParams {
                    age: age.clone(),
                    eps_c: e,
                    degree,
                    query: query.name().to_string(),
                };
                let options = ReportOptions {
                    lambda,
                    baselines: false,
                    oracle: Some(OraclePath::Exact),
                    seed: Some(seed),
                };
                let report = evaluate_leakage(&kernel, &params, &query, &options)?;
                let fran = FranConfig::new(age.clone(), e, query.clone())?;
                let sampled = oracle_leakage(
                    &kernel,
                    &fran,
                    OraclePath::Sampling {
                        samples: config.samples,
                    },
                    seed,
                )?;
                let exact = report.oracle.expect("exact oracle requested");
                let mut v = report.violations();
                if (exact - sampled.estimate).abs() > 3.0 * sampled.half_width {
                    v.push(format!(
                        "sampled oracle {} is more than 3 half-widths ({}) from exact {exact}",
                        sampled.estimate, sampled.half_width
                    ));
                }
                let mut d = report.diagnostics.clone();
                d.extend(sampled.diagnostics);
                let row = OracleRow {
                    lambda,
                    t: age.to_string(),
                    eps_c: e,
                    loose_linear: report.loose_linear,
                    tight: report.tight,
                    oracle_exact: exact,
                    oracle_sampled: sampled.estimate,
                    oracle_hw: sampled.half_width,
                    samples: config.samples,
                    seed,
                };
                let at = cell_label(lambda, &row.t, e);
                v.extend(d.into_iter().map(|x| format!("note: {x}")));
                Ok((row, v.into_iter().map(|x| format!("{at}: {x}")).collect()))
            })
            .collect::<Result<Vec<_>>>()?;
        for (row, messages) in results {
            for m in messages {
                if m.contains(": note: ") {
                    notes.push(m.replacen(": note: ", ": ", 1));
                } else {
                    violations.push(m);
                }
            }
            rows.push(row);
        }
    }
    Ok(SweepResult {
        table: Table::Oracle(rows),
        violations,
        notes,
    })
}

/// A model whose transition columns coincide, so snapshots are i.i.d. in time.
pub fn memoryless_pair(lambda: f64) -> Result<CmcModel<f64>> {
    let p = TransitionMatrix::from_rows(&[vec![0.6, 0.6], vec![0.4, 0.4]])?;
    CmcModel::shared_transition(p, CouplingWeights::self_coupling(2, lambda)?)
}

fn reduction_sweep(config: &ExperimentConfig, setup: &Setup) -> Result<SweepResult> {
    let eps = config.eps()?.expect("validated");
    let models: Vec<(String, CmcModel<f64>)> = if config.model.is_some() {
        vec![(setup.model_source.source.clone(), setup.base.clone())]
    } else {
        vec![
            ("memoryless pair".into(), memoryless_pair(DEFAULT_LAMBDA)?),
            ("independent pair".into(), CmcModel::coupled_pair(config.flip, 1.0)?),
            ("coupled pair".into(), CmcModel::coupled_pair(config.flip, DEFAULT_LAMBDA)?),
        ]
    };
    let mut rows = Vec::new();
    let mut violations = Vec::new();
    for (label, model) in &models {
        for &e in &eps {
            for outcome in verify_reductions(model, e, config.cap)? {
                if outcome.checks.is_empty() {
                    rows.push(ReductionRow {
                        model: label.clone(),
                        eps_c: e,
                        case: outcome.case,
                        check: "hypotheses not met".into(),
                        observed: None,
                        expected: None,
                        pass: true,
                    });
                }
                for c in outcome.checks {
                    if !c.pass {
                        violations.push(format!(
                            "{label} eps_c={e}: {} observed {} expected {}",
                            c.label, c.observed, c.expected
                        ));
                    }
                    rows.push(ReductionRow {
                        model: label.clone(),
                        eps_c: e,
                        case: outcome.case,
                        check: c.label,
                        observed: Some(c.observed),
                        expected: Some(c.expected),
                        pass: c.pass,
                    });
                }
            }
        }
    }
    Ok(SweepResult {
        table: Table::Reduction(rows),
        violations,
        notes: Vec::new(),
    })
}

/// Applies command-line overrides to a parsed config.
pub fn apply_overrides(config: &ExperimentConfig, options: &RunOptions) -> ExperimentConfig {
    let mut c = config.clone();
    if let Some(s) = options.seed {
        c.seed = s;
    }
    if let Some(o) = &options.out {
        c.out = o.clone();
    }
    if let Some(cap) = options.cap {
        c.cap = cap;
    }
    if let Some(f) = options.format {
        c.format = f;
    }
    c
}

pub(crate) fn with_threads<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    match threads {
        Some(0) => Err(CsdpError::Config("field `threads`: must be positive".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CsdpError::Config(format!("field `threads`: {e}")))?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

/// Runs the sweep and writes `<name>.<ext>`, `manifest.json` and
/// `summary.json` under the output directory. Files written by a failed
/// run are removed.
pub fn run(config: &ExperimentConfig, options: &RunOptions) -> Result<RunOutcome> {
    let config = apply_overrides(config, options);
    if config.cap == 0 {
        return Err(CsdpError::Config("field `cap`: must be positive".into()));
    }
    let result = with_threads(options.threads, || compute(&config))??;
    let setup = setup(&config)?;
    let table_name = format!("{}.{}", config.name, config.format.extension());
    let table_bytes = result.table.render(config.format)?;
    let summary = RunSummary {
        name: config.name.clone(),
        kind: config.kind,
        rows: result.table.len(),
        status: if result.violations.is_empty() { "ok" } else { "violations" },
        violations: result.violations,
        notes: result.notes,
    };
    let manifest = Manifest {
        tool: "csdp",
        version: env!("CARGO_PKG_VERSION"),
        name: config.name.clone(),
        kind: config.kind,
        config_sha256: sha256_hex(config.source.as_bytes()),
        model: setup.model_source,
        root_seed: config.seed,
        seed_rule: format!(
            "first 8 bytes (little-endian) of SHA-256({:?} || root seed LE || grid coordinates LE, reals as IEEE-754 bits)",
            String::from_utf8_lossy(SEED_DOMAIN)
        ),
        cap: config.cap,
        format: config.format,
        query: config.query.clone(),
        grids: resolved_grids(&config)?,
        outputs: vec![OutputFile {
            file: table_name.clone(),
            sha256: sha256_hex(&table_bytes),
        }],
    };
    let files = [
        (table_name.clone(), table_bytes),
        ("manifest.json".to_string(), json_bytes(&manifest)?),
        ("summary.json".to_string(), json_bytes(&summary)?),
    ];
    write_all(&config.out, &files)?;
    Ok(RunOutcome {
        table: config.out.join(&table_name),
        out_dir: config.out.clone(),
        manifest,
        summary,
    })
}

fn json_bytes<S: Serialize>(value: &S) -> Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value).map_err(|e| CsdpError::Io(e.to_string()))?;
    v.push(b'\n');
    Ok(v)
}

fn resolved_grids(config: &ExperimentConfig) -> Result<serde_json::Value> {
    let aging: Vec<&str> = config.aging().iter().map(|a| a.name()).collect();
    let mechanisms: Vec<&str> = config.mechanisms().iter().map(|m| m.name()).collect();
    Ok(serde_json::json!({
        "lambda": config.lambdas()?,
        "ages": config.ages()?,
        "eps": config.eps()?,
        "caps": config.caps()?,
        "aging": aging,
        "mechanisms": mechanisms,
        "k": config.k,
        "flip": config.flip,
        "samples": config.samples,
        "leakage_kind": config.leakage_kind,
    }))
}

fn write_all(dir: &Path, files: &[(String, Vec<u8>)]) -> Result<()> {
    let created_dir = !dir.exists();
    let io = |p: &Path, e: std::io::Error| CsdpError::File {
        path: p.display().to_string(),
        message: e.to_string(),
    };
    fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let mut written = Vec::new();
    for (name, bytes) in files {
        let path = dir.join(name);
        if let Err(e) = fs::write(&path, bytes) {
            for p in &written {
                let _ = fs::remove_file(p);
            }
            if created_dir {
                let _ = fs::remove_dir(dir);
            }
            return Err(io(&path, e));
        }
        written.push(path);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(kind: &str, grid: &str) -> ExperimentConfig {
        let text = format!("kind = \"{kind}\"\n[grid]\n{grid}\n");
        ExperimentConfig::parse(&text, Path::new(".")).unwrap()
    }

    #[test]
    fn leakage_rows_follow_grid_order() {
        let cfg = small("leakage-vs-age", "lambda = [0.5, 0.75]\nages = [0, 1, 2]\neps = [1.0, 2.0]");
        let Table::Leakage(rows) = compute(&cfg).unwrap().table else { panic!() };
        assert_eq!(rows.len(), 12);
        assert_eq!(rows[0].lambda, Some(0.5));
        assert_eq!(rows[1].eps_c, 2.0);
        assert_eq!(rows[2].t, "1;1");
        assert_eq!(rows[11].lambda, Some(0.75));
    }

    #[test]
    fn reduce_check_passes_on_builtins() {
        let cfg = small("reduce-check", "eps = [1.0]");
        let res = compute(&cfg).unwrap();
        assert!(res.violations.is_empty(), "{:?}", res.violations);
        let Table::Reduction(rows) = res.table else { panic!() };
        assert!(rows.iter().any(|r| r.case == ReductionCase::NotApplicable));
    }

    #[test]
    fn frontier_is_non_increasing() {
        let cfg = small(
            "frontier",
            "ages = [0, 2, 4]\neps = [0.5, 1.0, 2.0]\ncaps = [0.3, 0.6, 0.9]\nmechanisms = [\"csdp\", \"adp\"]",
        );
        let res = compute(&cfg).unwrap();
        assert!(res.violations.is_empty(), "{:?}", res.violations);
        let Table::Frontier(rows) = res.table else { panic!() };
        assert_eq!(rows.len(), 6);
    }

    #[test]
    fn zero_threads_is_a_config_error() {
        let cfg = small("reduce-check", "eps = [1.0]");
        let opts = RunOptions {
            threads: Some(0),
            out: Some(std::env::temp_dir().join("csdp-never-written")),
            ..Default::default()
        };
        assert!(matches!(run(&cfg, &opts), Err(CsdpError::Config(_))));
    }
}
