use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crm_core::bench::{
    self, export_profile, export_results, export_summary, import_results, performance_profile,
    run_crm_lifted, run_ppm, summarize, Format, GridConfig, GroupField, Metric, Preset,
};
use crm_core::ellipsoid::AdmmConfig;
use crm_core::instance_gen::{initial_point, FppInstance, InstanceRecord, InstanceSpec};
use crm_core::operators::{Operator, ProjectionMethod};
use crm_core::product_space::{embed, DiagonalSubspace};
use crm_core::solvers::{
    run, Diagnostics, IterationTrace, Method, Problem, SolverConfig, Subspace,
};

#[derive(Parser)]
#[command(
    name = "crm-bench",
    version,
    about = "Generate ellipsoid instances and benchmark CRM against PPM"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a seeded instance as JSON.
    Gen(GenArgs),
    /// Solve one instance with one method.
    Run(RunArgs),
    /// Run the CRM vs PPM grid and write results, summaries and profiles.
    Bench(BenchArgs),
    /// Performance profile from a results CSV.
    Profile(ProfileArgs),
    /// Summary statistics from a results CSV.
    Summarize(SummarizeArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    p: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverArg {
    Crm,
    Ppm,
    Map,
    Spm,
}

impl From<SolverArg> for Method {
    fn from(s: SolverArg) -> Self {
        match s {
            SolverArg::Crm => Method::Crm,
            SolverArg::Ppm => Method::Ppm,
            SolverArg::Map => Method::Map,
            SolverArg::Spm => Method::Spm,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ProjectorArg {
    Admm,
    Kkt,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_enum)]
    solver: SolverArg,
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 50_000)]
    max_iter: usize,
    #[arg(long, value_enum, default_value = "admm")]
    projector: ProjectorArg,
    /// Enable the runtime diagnostics (membership, orthogonality, Fejer).
    #[arg(long)]
    diagnostics: bool,
    /// Trace JSON destination; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    PaperText,
    PaperTable,
}

impl From<PresetArg> for Preset {
    fn from(p: PresetArg) -> Self {
        match p {
            PresetArg::PaperText => Preset::PaperText,
            PresetArg::PaperTable => Preset::PaperTable,
        }
    }
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, num_args = 1.., default_values_t = vec![10, 30, 50, 100, 200])]
    n: Vec<usize>,
    #[arg(long, num_args = 1.., default_values_t = vec![10, 25, 50, 100, 200])]
    p: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    replicates: usize,
    #[arg(long, default_value_t = 0)]
    master_seed: u64,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Overrides the preset's iteration cap.
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long, value_enum, default_value = "paper-text")]
    preset: PresetArg,
    /// Evaluate the lifted operator's blocks in parallel.
    #[arg(long)]
    parallel_blocks: bool,
    /// Worker threads for the grid (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long, default_value = "results")]
    out_dir: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Iterations,
    Elapsed,
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Iterations => Metric::Iterations,
            MetricArg::Elapsed => Metric::Elapsed,
        }
    }
}

#[derive(Args)]
struct ProfileArgs {
    /// Results CSV (or JSON).
    input: PathBuf,
    #[arg(long, value_enum, default_value = "iterations")]
    metric: MetricArg,
    /// Output path (.csv or .json); stdout CSV if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SummarizeArgs {
    /// Results CSV (or JSON).
    input: PathBuf,
    /// Comma-separated subset of solver,n,p.
    #[arg(long, value_delimiter = ',', default_value = "solver")]
    group_by: Vec<String>,
    #[arg(long, value_enum, default_value = "iterations")]
    metric: MetricArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Gen(a) => gen(a),
        Command::Run(a) => run_one(a),
        Command::Bench(a) => run_bench(a),
        Command::Profile(a) => profile(a),
        Command::Summarize(a) => summarize_cmd(a),
    }
}

fn write_text(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn gen(a: GenArgs) -> Result<()> {
    let record = InstanceRecord::generate(&InstanceSpec::new(a.n, a.p, a.seed))?;
    let mut json = record.to_json()?;
    json.push('\n');
    write_text(a.out.as_deref(), &json)
}

fn run_one(a: RunArgs) -> Result<()> {
    let text = fs::read_to_string(&a.instance)
        .with_context(|| format!("reading {}", a.instance.display()))?;
    let record = InstanceRecord::from_json(&text)?;
    let method = match a.projector {
        ProjectorArg::Admm => ProjectionMethod::Admm,
        ProjectorArg::Kkt => ProjectionMethod::Kkt { tol: 1e-12 },
    };
    let x0 = initial_point(&record)?;
    let instance = FppInstance::from_record(record, AdmmConfig::default(), method)?;
    let cfg = SolverConfig {
        tolerance: a.tol,
        max_iterations: a.max_iter,
        diagnostics: if a.diagnostics {
            Diagnostics::ALL
        } else {
            Diagnostics::NONE
        },
        ..SolverConfig::default()
    };
    let trace: IterationTrace = match Method::from(a.solver) {
        Method::Crm => run_crm_lifted(&instance, &x0, &cfg, false)?,
        Method::Ppm => run_ppm(&instance, &x0, &cfg)?,
        Method::Spm => {
            let y = instance.certified_fixed_point();
            run(
                Method::Spm,
                &Problem::Family(&instance.operators),
                &x0,
                &cfg,
                Some(&y),
            )?
        }
        Method::Map => {
            let (n, p) = (x0.len(), instance.operators.len());
            let lifted = Operator::lifted(instance.operators.clone())?;
            let u = Subspace::Diagonal(DiagonalSubspace::new(n, p)?);
            let y = embed(&instance.certified_fixed_point(), p)?.into_vector();
            let problem = Problem::Pair {
                operator: &lifted,
                subspace: &u,
            };
            run(
                Method::Map,
                &problem,
                &embed(&x0, p)?.into_vector(),
                &cfg,
                Some(&y),
            )?
        }
    };
    eprintln!(
        "{}: {} after {} iterations, residual {:.3e}, {:.3}s",
        trace.method,
        trace.stop_reason.name(),
        trace.iterations,
        trace.final_residual(),
        trace.elapsed_s
    );
    let mut json = serde_json::to_string_pretty(&trace)?;
    json.push('\n');
    write_text(a.out.as_deref(), &json)
}

fn run_bench(a: BenchArgs) -> Result<()> {
    let preset = Preset::from(a.preset);
    let mut grid = GridConfig::new(a.n, a.p, a.replicates, a.master_seed);
    grid.solver.tolerance = a.tol;
    grid.solver.max_iterations = a.max_iter.unwrap_or(preset.max_iterations());
    grid.parallel_blocks = a.parallel_blocks;

    let results = match a.jobs {
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build()?
            .install(|| bench::run_experiment(&grid))?,
        None => bench::run_experiment(&grid)?,
    };

    fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    let dir = &a.out_dir;
    export_results(&results, &dir.join("results.csv"), Format::Csv)?;
    export_results(&results, &dir.join("results.json"), Format::Json)?;
    let tables: [(&str, &[GroupField]); 3] = [
        ("summary_all", &[GroupField::Solver]),
        ("summary_by_n", &[GroupField::Solver, GroupField::N]),
        ("summary_by_p", &[GroupField::Solver, GroupField::P]),
    ];
    for metric in [Metric::Iterations, Metric::Elapsed] {
        for (stem, fields) in tables {
            let rows = summarize(&results, fields, metric)?;
            export_summary(
                &rows,
                fields,
                &dir.join(format!("{stem}_{}.csv", metric.name())),
                Format::Csv,
            )?;
        }
        let curves = performance_profile(&results, metric);
        export_profile(
            &curves,
            &dir.join(format!("profile_{}.csv", metric.name())),
            Format::Csv,
        )?;
    }

    for row in summarize(&results, &[GroupField::Solver], Metric::Iterations)? {
        let solver = row.solver.map_or("all", |s| s.name());
        println!("{solver} iterations: {}", row.stats);
    }
    let failed: Vec<_> = results.iter().filter(|r| !r.converged()).collect();
    for r in &failed {
        eprintln!(
            "{} n={} p={} replicate={}: {}{}",
            r.solver,
            r.n,
            r.p,
            r.replicate,
            r.stop_reason.name(),
            r.failure
                .as_deref()
                .map(|m| format!(" ({m})"))
                .unwrap_or_default()
        );
    }
    println!(
        "{} runs, {} not converged, written to {}",
        results.len(),
        failed.len(),
        dir.display()
    );
    Ok(())
}

fn load(input: &Path) -> Result<Vec<bench::RunResult>> {
    let results = import_results(input).with_context(|| format!("reading {}", input.display()))?;
    if results.is_empty() {
        bail!("{} holds no results", input.display());
    }
    Ok(results)
}

fn profile(a: ProfileArgs) -> Result<()> {
    let curves = performance_profile(&load(&a.input)?, a.metric.into());
    match a.out {
        Some(path) => export_profile(&curves, &path, Format::from_path(&path))?,
        None => bench::write_profile_csv(&curves, io::stdout())?,
    }
    Ok(())
}

fn summarize_cmd(a: SummarizeArgs) -> Result<()> {
    let fields = a
        .group_by
        .iter()
        .filter(|s| !s.is_empty())
        .map(|s| s.trim().parse::<GroupField>())
        .collect::<crm_core::Result<Vec<_>>>()?;
    let rows = summarize(&load(&a.input)?, &fields, a.metric.into())?;
    match a.out {
        Some(path) => export_summary(&rows, &fields, &path, Format::from_path(&path))?,
        None => bench::write_summary_csv(&rows, &fields, io::stdout())?,
    }
    Ok(())
}
