//! Experiment grid: CRM on the lifted problem against PPM in the original
//! space, summary statistics, performance profiles and CSV/JSON export.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ellipsoid::AdmmConfig;
use crate::error::{Error, Result};
use crate::instance_gen::{
    derive_seed, gen_instance_with, initial_point, FppInstance, InstanceSpec,
};
use crate::operators::{Operator, ProjectionMethod};
use crate::product_space::{embed, DiagonalSubspace};
use crate::solvers::{
    run, Diagnostics, IterationTrace, Method, Problem, SolverConfig, StopReason, Subspace,
};

/// Column order of the results CSV.
pub const RESULT_COLUMNS: [&str; 9] = [
    "solver",
    "n",
    "p",
    "replicate",
    "seed",
    "iterations",
    "elapsed_s",
    "final_residual",
    "stop_reason",
];

/// Outcome of a single run. `Failed` covers errors raised during generation or
/// iteration (including diagnostic violations).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Converged,
    MaxIterations,
    Failed,
}

impl RunStatus {
    pub fn name(self) -> &'static str {
        match self {
            RunStatus::Converged => "converged",
            RunStatus::MaxIterations => "max-iterations",
            RunStatus::Failed => "failed",
        }
    }
}

impl From<StopReason> for RunStatus {
    fn from(r: StopReason) -> Self {
        match r {
            StopReason::Converged => RunStatus::Converged,
            StopReason::MaxIterations => RunStatus::MaxIterations,
        }
    }
}

impl FromStr for RunStatus {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "converged" => Ok(RunStatus::Converged),
            "max-iterations" => Ok(RunStatus::MaxIterations),
            "failed" => Ok(RunStatus::Failed),
            other => Err(Error::Parse(format!("unknown stop reason `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub solver: Method,
    pub n: usize,
    pub p: usize,
    pub replicate: usize,
    pub seed: u64,
    pub iterations: usize,
    pub elapsed_s: f64,
    pub final_residual: f64,
    pub stop_reason: RunStatus,
    /// Diagnostic extremes; not part of the CSV.
    #[serde(default)]
    pub min_fejer_slack: Option<f64>,
    #[serde(default)]
    pub max_membership: Option<f64>,
    /// Error message of a failed run; not part of the CSV.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

impl RunResult {
    fn from_trace(trace: &IterationTrace, n: usize, p: usize, replicate: usize, seed: u64) -> Self {
        Self {
            solver: trace.method,
            n,
            p,
            replicate,
            seed,
            iterations: trace.iterations,
            elapsed_s: trace.elapsed_s,
            final_residual: trace.final_residual(),
            stop_reason: trace.stop_reason.into(),
            min_fejer_slack: trace.diagnostics.min_fejer_slack,
            max_membership: trace.diagnostics.max_membership,
            failure: None,
        }
    }

    fn failed(
        solver: Method,
        n: usize,
        p: usize,
        replicate: usize,
        seed: u64,
        err: &Error,
        elapsed_s: f64,
    ) -> Self {
        let iterations = match err {
            Error::DiagnosticFailure { iteration, .. } => *iteration,
            _ => 0,
        };
        Self {
            solver,
            n,
            p,
            replicate,
            seed,
            iterations,
            elapsed_s,
            final_residual: f64::NAN,
            stop_reason: RunStatus::Failed,
            min_fejer_slack: None,
            max_membership: None,
            failure: Some(err.to_string()),
        }
    }

    pub fn converged(&self) -> bool {
        self.stop_reason == RunStatus::Converged
    }
}

/// Iteration caps used for the published experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Cap quoted in the experiment description.
    PaperText,
    /// Cap quoted alongside the result tables.
    PaperTable,
}

impl Preset {
    pub fn max_iterations(self) -> usize {
        match self {
            Preset::PaperText => 50_000,
            Preset::PaperTable => 25_000,
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper-text" => Ok(Preset::PaperText),
            "paper-table" => Ok(Preset::PaperTable),
            other => Err(Error::Parse(format!("unknown preset `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub n_list: Vec<usize>,
    pub p_list: Vec<usize>,
    pub replicates: usize,
    pub master_seed: u64,
    pub solver: SolverConfig,
    pub admm: AdmmConfig,
    /// Evaluate the blocks of the lifted operator on the rayon pool.
    pub parallel_blocks: bool,
}

impl GridConfig {
    /// Grid with the default solver settings and the runtime checks CRM is
    /// expected to pass (membership, orthogonality, Fejer).
    pub fn new(
        n_list: Vec<usize>,
        p_list: Vec<usize>,
        replicates: usize,
        master_seed: u64,
    ) -> Self {
        Self {
            n_list,
            p_list,
            replicates,
            master_seed,
            solver: SolverConfig {
                diagnostics: Diagnostics::ALL,
                ..SolverConfig::default()
            },
            admm: AdmmConfig::default(),
            parallel_blocks: false,
        }
    }

    /// Full benchmark grid: n, p in {10, 30, 50, 100, 200} x {10, 25, 50, 100, 200}, 10 replicates.
    pub fn full(master_seed: u64, preset: Preset) -> Self {
        let mut g = Self::new(
            vec![10, 30, 50, 100, 200],
            vec![10, 25, 50, 100, 200],
            10,
            master_seed,
        );
        g.solver.max_iterations = preset.max_iterations();
        g
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_list.is_empty() || self.p_list.is_empty() || self.replicates == 0 {
            return Err(Error::InvalidConfig(
                "grid needs at least one n, one p and one replicate".into(),
            ));
        }
        if self.n_list.contains(&0) || self.p_list.contains(&0) {
            return Err(Error::InvalidConfig(
                "grid dimensions must be positive".into(),
            ));
        }
        self.solver.validate()?;
        self.admm.validate()
    }

    fn cells(&self) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::new();
        for &n in &self.n_list {
            for &p in &self.p_list {
                for rep in 0..self.replicates {
                    out.push((n, p, rep));
                }
            }
        }
        out
    }
}

/// Runs PPM on `instance` in `R^n` starting at `x0`.
pub fn run_ppm(
    instance: &FppInstance,
    x0: &crate::Point,
    cfg: &SolverConfig,
) -> Result<IterationTrace> {
    let solution = instance.certified_fixed_point();
    run(
        Method::Ppm,
        &Problem::Family(&instance.operators),
        x0,
        cfg,
        Some(&solution),
    )
}

/// Runs CRM on the lifted problem from `embed(x0, p)`.
pub fn run_crm_lifted(
    instance: &FppInstance,
    x0: &crate::Point,
    cfg: &SolverConfig,
    parallel_blocks: bool,
) -> Result<IterationTrace> {
    let n = x0.len();
    let p = instance.operators.len();
    let lifted =
        Operator::lifted(instance.operators.clone())?.with_parallel_blocks(parallel_blocks);
    let subspace = Subspace::Diagonal(DiagonalSubspace::new(n, p)?);
    let z0 = embed(x0, p)?.into_vector();
    let solution = embed(&instance.certified_fixed_point(), p)?.into_vector();
    let problem = Problem::Pair {
        operator: &lifted,
        subspace: &subspace,
    };
    run(Method::Crm, &problem, &z0, cfg, Some(&solution))
}

fn run_cell(grid: &GridConfig, n: usize, p: usize, rep: usize) -> [RunResult; 2] {
    let seed = derive_seed(grid.master_seed, n, p, rep);
    let start = Instant::now();
    let setup = gen_instance_with(
        &InstanceSpec::new(n, p, seed),
        grid.admm,
        ProjectionMethod::Admm,
    )
    .and_then(|inst| initial_point(&inst.record).map(|x0| (inst, x0)));
    let (instance, x0) = match setup {
        Ok(v) => v,
        Err(e) => {
            let t = start.elapsed().as_secs_f64();
            return [
                RunResult::failed(Method::Crm, n, p, rep, seed, &e, t),
                RunResult::failed(Method::Ppm, n, p, rep, seed, &e, t),
            ];
        }
    };
    let record = |method: Method, outcome: Result<IterationTrace>, started: Instant| match outcome {
        Ok(trace) => RunResult::from_trace(&trace, n, p, rep, seed),
        Err(e) => RunResult::failed(method, n, p, rep, seed, &e, started.elapsed().as_secs_f64()),
    };
    let t = Instant::now();
    let crm = record(
        Method::Crm,
        run_crm_lifted(&instance, &x0, &grid.solver, grid.parallel_blocks),
        t,
    );
    let t = Instant::now();
    let ppm = record(Method::Ppm, run_ppm(&instance, &x0, &grid.solver), t);
    [crm, ppm]
}

/// Generates every instance of the grid and solves it with CRM (lifted) and
/// PPM (direct). Cells run concurrently on the rayon pool; the output is
/// sorted by `(n, p, replicate, solver)`. Failures are recorded per run.
pub fn run_experiment(grid: &GridConfig) -> Result<Vec<RunResult>> {
    grid.validate()?;
    let mut results: Vec<RunResult> = grid
        .cells()
        .into_par_iter()
        .flat_map_iter(|(n, p, rep)| run_cell(grid, n, p, rep))
        .collect();
    sort_results(&mut results);
    Ok(results)
}

pub fn sort_results(results: &mut [RunResult]) {
    results.sort_by_key(|r| (r.n, r.p, r.replicate, r.solver));
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Iterations,
    Elapsed,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Iterations => "iterations",
            Metric::Elapsed => "elapsed",
        }
    }

    pub fn of(self, r: &RunResult) -> f64 {
        match self {
            Metric::Iterations => r.iterations as f64,
            Metric::Elapsed => r.elapsed_s,
        }
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "iterations" => Ok(Metric::Iterations),
            "elapsed" | "elapsed_s" | "time" => Ok(Metric::Elapsed),
            other => Err(Error::Parse(format!("unknown metric `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GroupField {
    Solver,
    N,
    P,
}

impl GroupField {
    pub fn name(self) -> &'static str {
        match self {
            GroupField::Solver => "solver",
            GroupField::N => "n",
            GroupField::P => "p",
        }
    }
}

impl FromStr for GroupField {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "solver" => Ok(GroupField::Solver),
            "n" => Ok(GroupField::N),
            "p" => Ok(GroupField::P),
            other => Err(Error::Parse(format!("unknown group field `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub mean: f64,
    pub max: f64,
    pub min: f64,
    /// Sample standard deviation; zero for a single value.
    pub std: f64,
    pub count: usize,
}

impl SummaryStats {
    pub fn from_values(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyGroup("no values".into()));
        }
        let count = values.len();
        let mean = values.iter().sum::<f64>() / count as f64;
        let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let std = if count > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1) as f64).sqrt()
        } else {
            0.0
        };
        // summation error can push the mean a hair outside [min, max]
        let mean = mean.clamp(min, max);
        Ok(Self {
            mean,
            max,
            min,
            std,
            count,
        })
    }
}

/// One row of a summary table. Fields not grouped on are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub solver: Option<Method>,
    pub n: Option<usize>,
    pub p: Option<usize>,
    pub metric: Metric,
    pub stats: SummaryStats,
}

/// Statistics of `metric` per group. An empty `group_by` gives one row over
/// all results. Rows come out in key order.
pub fn summarize(
    results: &[RunResult],
    group_by: &[GroupField],
    metric: Metric,
) -> Result<Vec<SummaryRow>> {
    if results.is_empty() {
        return Err(Error::EmptyGroup("no results to summarize".into()));
    }
    let has = |f: GroupField| group_by.contains(&f);
    let mut groups: BTreeMap<(Option<Method>, Option<usize>, Option<usize>), Vec<f64>> =
        BTreeMap::new();
    for r in results {
        let key = (
            has(GroupField::Solver).then_some(r.solver),
            has(GroupField::N).then_some(r.n),
            has(GroupField::P).then_some(r.p),
        );
        groups.entry(key).or_default().push(metric.of(r));
    }
    groups
        .into_iter()
        .map(|((solver, n, p), values)| {
            Ok(SummaryRow {
                solver,
                n,
                p,
                metric,
                stats: SummaryStats::from_values(&values)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileCurve {
    pub solver: Method,
    /// `(tau, fraction of problems with ratio <= tau)`, sorted by `tau`.
    pub breakpoints: Vec<(f64, f64)>,
}

impl ProfileCurve {
    /// Fraction at an arbitrary `tau` (the curve is a right-continuous step function).
    pub fn fraction_at(&self, tau: f64) -> f64 {
        self.breakpoints
            .iter()
            .take_while(|(t, _)| *t <= tau)
            .last()
            .map_or(0.0, |(_, f)| *f)
    }
}

/// Dolan-More performance profiles over the problems `(n, p, replicate)`.
///
/// Runs that did not converge, and solvers missing for a problem, count as
/// `+inf`. All curves share the breakpoints `{1} ∪ {finite ratios}`.
pub fn performance_profile(results: &[RunResult], metric: Metric) -> Vec<ProfileCurve> {
    let mut solvers: Vec<Method> = results.iter().map(|r| r.solver).collect();
    solvers.sort();
    solvers.dedup();
    let mut problems: BTreeMap<(usize, usize, usize), BTreeMap<Method, f64>> = BTreeMap::new();
    for r in results {
        let v = if r.converged() {
            metric.of(r)
        } else {
            f64::INFINITY
        };
        problems
            .entry((r.n, r.p, r.replicate))
            .or_default()
            .insert(r.solver, v);
    }

    let mut ratios: BTreeMap<Method, Vec<f64>> = BTreeMap::new();
    for costs in problems.values() {
        let best = solvers
            .iter()
            .map(|s| costs.get(s).copied().unwrap_or(f64::INFINITY))
            .fold(f64::INFINITY, f64::min);
        for s in &solvers {
            let c = costs.get(s).copied().unwrap_or(f64::INFINITY);
            let ratio = if !c.is_finite() {
                f64::INFINITY
            } else if best > 0.0 {
                c / best
            } else if c == 0.0 {
                1.0
            } else {
                f64::INFINITY
            };
            ratios.entry(*s).or_default().push(ratio);
        }
    }

    let mut taus: Vec<f64> = ratios
        .values()
        .flatten()
        .copied()
        .filter(|r| r.is_finite())
        .collect();
    taus.push(1.0);
    taus.sort_by(f64::total_cmp);
    taus.dedup();

    let total = problems.len() as f64;
    solvers
        .iter()
        .map(|s| {
            let mut rs = ratios.remove(s).unwrap_or_default();
            rs.sort_by(f64::total_cmp);
            let breakpoints = taus
                .iter()
                .map(|&tau| {
                    let hits = rs.partition_point(|r| *r <= tau);
                    (tau, hits as f64 / total)
                })
                .collect();
            ProfileCurve {
                solver: *s,
                breakpoints,
            }
        })
        .collect()
}

/// Six significant digits.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.5e}")
}

fn io_err(e: csv::Error) -> Error {
    Error::Csv(e)
}

pub fn write_results_csv<W: Write>(results: &[RunResult], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(RESULT_COLUMNS)?;
    for r in results {
        wtr.write_record([
            r.solver.name().to_string(),
            r.n.to_string(),
            r.p.to_string(),
            r.replicate.to_string(),
            r.seed.to_string(),
            r.iterations.to_string(),
            fmt_real(r.elapsed_s),
            fmt_real(r.final_residual),
            r.stop_reason.name().to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_results_csv<R: Read>(r: R) -> Result<Vec<RunResult>> {
    let mut rdr = csv::Reader::from_reader(r);
    let header = rdr.headers()?.clone();
    if header.iter().ne(RESULT_COLUMNS.iter().copied()) {
        return Err(Error::Parse(format!(
            "unexpected results header `{}`",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let parse_err =
        |line: usize, field: &str, v: &str| Error::Parse(format!("line {line}: bad {field} `{v}`"));
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(io_err)?;
        let line = i + 2;
        let get = |k: usize| rec.get(k).unwrap_or("");
        let int = |k: usize| -> Result<usize> {
            get(k)
                .parse()
                .map_err(|_| parse_err(line, RESULT_COLUMNS[k], get(k)))
        };
        let real = |k: usize| -> Result<f64> {
            get(k)
                .parse()
                .map_err(|_| parse_err(line, RESULT_COLUMNS[k], get(k)))
        };
        out.push(RunResult {
            solver: get(0).parse()?,
            n: int(1)?,
            p: int(2)?,
            replicate: int(3)?,
            seed: get(4)
                .parse()
                .map_err(|_| parse_err(line, "seed", get(4)))?,
            iterations: int(5)?,
            elapsed_s: real(6)?,
            final_residual: real(7)?,
            stop_reason: get(8).parse()?,
            min_fejer_slack: None,
            max_membership: None,
            failure: None,
        });
    }
    Ok(out)
}

pub fn write_summary_csv<W: Write>(
    rows: &[SummaryRow],
    group_by: &[GroupField],
    w: W,
) -> Result<()> {
    let mut fields: Vec<GroupField> = group_by.to_vec();
    fields.sort();
    fields.dedup();
    let mut wtr = csv::Writer::from_writer(w);
    let mut header: Vec<&str> = fields.iter().map(|f| f.name()).collect();
    header.extend(["metric", "count", "mean", "max", "min", "std"]);
    wtr.write_record(&header)?;
    for row in rows {
        let mut rec: Vec<String> = fields
            .iter()
            .map(|f| match f {
                GroupField::Solver => row.solver.map(|s| s.name().to_string()).unwrap_or_default(),
                GroupField::N => row.n.map(|v| v.to_string()).unwrap_or_default(),
                GroupField::P => row.p.map(|v| v.to_string()).unwrap_or_default(),
            })
            .collect();
        let s = &row.stats;
        rec.extend([
            row.metric.name().to_string(),
            s.count.to_string(),
            fmt_real(s.mean),
            fmt_real(s.max),
            fmt_real(s.min),
            fmt_real(s.std),
        ]);
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Wide layout, one column per solver: `tau,crm,ppm`. Readable by gnuplot with
/// `set datafile separator ','`.
pub fn write_profile_csv<W: Write>(curves: &[ProfileCurve], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    let mut header = vec!["tau".to_string()];
    header.extend(curves.iter().map(|c| c.solver.name().to_string()));
    wtr.write_record(&header)?;
    let rows = curves.first().map_or(0, |c| c.breakpoints.len());
    for i in 0..rows {
        let mut rec = vec![fmt_real(curves[0].breakpoints[i].0)];
        rec.extend(curves.iter().map(|c| fmt_real(c.breakpoints[i].1)));
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    /// Guesses from the extension; anything but `.json` is CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => Format::Json,
            _ => Format::Csv,
        }
    }
}

fn write_json<T: Serialize + ?Sized>(value: &T, path: &Path) -> Result<()> {
    let mut f = File::create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    Ok(())
}

pub fn export_results(results: &[RunResult], path: &Path, format: Format) -> Result<()> {
    match format {
        Format::Csv => write_results_csv(results, File::create(path)?),
        Format::Json => write_json(results, path),
    }
}

pub fn import_results(path: &Path) -> Result<Vec<RunResult>> {
    match Format::from_path(path) {
        Format::Csv => read_results_csv(File::open(path)?),
        Format::Json => Ok(serde_json::from_reader(File::open(path)?)?),
    }
}

pub fn export_summary(
    rows: &[SummaryRow],
    group_by: &[GroupField],
    path: &Path,
    format: Format,
) -> Result<()> {
    match format {
        Format::Csv => write_summary_csv(rows, group_by, File::create(path)?),
        Format::Json => write_json(rows, path),
    }
}

pub fn export_profile(curves: &[ProfileCurve], path: &Path, format: Format) -> Result<()> {
    match format {
        Format::Csv => write_profile_csv(curves, File::create(path)?),
        Format::Json => write_json(curves, path),
    }
}

impl fmt::Display for SummaryStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "mean {:.3} max {:.3} min {:.3} std {:.3} (n={})",
            self.mean, self.max, self.min, self.std, self.count
        )
    }
}
