//! Command line front end: `generate`, `run`, `compare` and `diagnose`.

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use jacobi_diag::diagnostics::{
    hess_surrogate_scan, rate_fit_from_steps, stationarity_check, DiagnosticReport,
};
use jacobi_diag::driver::{parse_csv, safeguard_audit};
use jacobi_diag::{CostSpec, PairRule};
use jacobi_harness::experiment::{generate_instances, run_experiment, ExperimentConfig};
use jacobi_harness::generate::PlantedTransform;
use jacobi_harness::manifest;
use jacobi_harness::plot::{compare_and_plot, PlotOptions, Series};

#[derive(Parser)]
#[command(
    name = "jacobi-diag",
    version,
    about = "Jacobi-type joint diagonalization experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the instances described by a config's generator.
    Generate(ConfigArgs),
    /// Run an experiment: every rule on every instance, plus a summary.
    Run(ConfigArgs),
    /// Combine trace CSVs into one table and an SVG chart.
    Compare(CompareArgs),
    /// Analyse a finished run and print a JSON report.
    Diagnose(DiagnoseArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML experiment config.
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    delta: Option<f64>,
    /// Pair rule; may be repeated.
    #[arg(long)]
    rule: Vec<PairRule>,
    #[arg(long)]
    grad_tol: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl ConfigArgs {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(delta) = self.delta {
            cfg.solver.delta = delta;
        }
        if !self.rule.is_empty() {
            cfg.rules = self.rule.clone();
        }
        if let Some(tol) = self.grad_tol {
            cfg.solver.grad_tol = tol;
        }
        if let Some(m) = self.max_iters {
            cfg.solver.max_iters = m;
        }
        if let Some(out) = &self.out {
            cfg.out = out.clone();
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct CompareArgs {
    /// Trace CSVs, optionally as `label=path`; the file stem is the default label.
    #[arg(required = true)]
    traces: Vec<String>,
    /// Output prefix; writes `<out>.csv` and `<out>.svg`.
    #[arg(long, default_value = "compare")]
    out: PathBuf,
    /// Linear instead of logarithmic gradient axis.
    #[arg(long)]
    linear_grad: bool,
    #[arg(long, default_value = "")]
    title: String,
}

#[derive(Args)]
struct DiagnoseArgs {
    /// Cost manifest of the instance.
    #[arg(long)]
    manifest: PathBuf,
    /// Trace CSV of the run.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Final transform (`.ten`) of the run.
    #[arg(long)]
    x: Option<PathBuf>,
    /// Jacobi-G constant used by the run, for the selection audit.
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, default_value_t = 1e-8)]
    grad_tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Generate(args) => {
            let paths = generate_instances(&args.load()?)?;
            emit(
                &paths
                    .iter()
                    .map(|p| format!("{}\n", p.display()))
                    .collect::<String>(),
            )?;
        }
        Command::Run(args) => {
            let summary = run_experiment(&args.load()?)?;
            emit(&fs::read_to_string(&summary.summary_path)?)?;
        }
        Command::Compare(args) => compare(&args)?,
        Command::Diagnose(args) => {
            let report = serde_json::to_string_pretty(&diagnose(&args)?)?;
            match &args.out {
                Some(p) => fs::write(p, report + "\n")
                    .with_context(|| format!("writing {}", p.display()))?,
                None => emit(&(report + "\n"))?,
            }
        }
    }
    Ok(())
}

/// Writes to stdout; a closed pipe (e.g. `| head`) is not an error.
fn emit(text: &str) -> Result<()> {
    match io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn compare(args: &CompareArgs) -> Result<()> {
    let series = args
        .traces
        .iter()
        .map(|t| {
            let (label, path) = match t.split_once('=') {
                Some((l, p)) => (l.to_string(), PathBuf::from(p)),
                None => {
                    let p = PathBuf::from(t);
                    let stem = p
                        .file_stem()
                        .map(|s| s.to_string_lossy().into_owned())
                        .unwrap_or_default();
                    (stem, p)
                }
            };
            Series::from_csv_file(&label, &path)
        })
        .collect::<Result<Vec<_>>>()?;
    let chart = compare_and_plot(
        &series,
        &PlotOptions {
            log_grad: !args.linear_grad,
            title: args.title.clone(),
        },
    )?;
    let csv = args.out.with_extension("csv");
    let svg = args.out.with_extension("svg");
    fs::write(&csv, chart.csv).with_context(|| format!("writing {}", csv.display()))?;
    fs::write(&svg, chart.svg).with_context(|| format!("writing {}", svg.display()))?;
    emit(&format!("{}\n{}\n", csv.display(), svg.display()))
}

fn diagnose(args: &DiagnoseArgs) -> Result<DiagnosticReport> {
    let spec = manifest::read_spec(&args.manifest)?;
    let mut report = DiagnosticReport::default();
    match &args.x {
        Some(path) => {
            point_diagnostics(&spec, &manifest::read_transform(path)?, args, &mut report)?
        }
        None => report
            .skipped
            .push("stationarity and hessian scan: no final transform given".into()),
    }
    match &args.trace {
        Some(path) => {
            let rows = parse_csv(
                &fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?,
            )?;
            report.audit = Some(safeguard_audit(&rows, args.delta)?);
            let steps: Vec<f64> = rows.iter().skip(1).map(|r| r.step_norm).collect();
            match rate_fit_from_steps(&steps) {
                Ok(fit) => report.rate = Some(fit),
                Err(e) => report.skipped.push(format!("rate fit: {e}")),
            }
        }
        None => report
            .skipped
            .push("audit and rate fit: no trace given".into()),
    }
    Ok(report)
}

fn point_diagnostics(
    spec: &CostSpec,
    x: &PlantedTransform,
    args: &DiagnoseArgs,
    report: &mut DiagnosticReport,
) -> Result<()> {
    match (spec, x) {
        (CostSpec::RealSymmetric { .. }, PlantedTransform::Orthogonal(q)) => {
            report.stationarity = Some(stationarity_check(spec, q, args.grad_tol)?);
            report
                .skipped
                .push("hessian scan: only defined on the unitary group".into());
        }
        (CostSpec::RealSymmetric { .. }, PlantedTransform::Unitary(_)) => {
            bail!("a real cost needs a real transform")
        }
        (_, x) => {
            let u = match x {
                PlantedTransform::Unitary(u) => u.clone(),
                PlantedTransform::Orthogonal(q) => q.map(|v| v.into()),
            };
            report.stationarity = Some(stationarity_check(spec, &u, args.grad_tol)?);
            report.hess_scan = Some(hess_surrogate_scan(spec, &u, args.seed)?);
        }
    }
    Ok(())
}
