//! Experiment configuration and orchestration.
//!
//! An experiment runs every configured pair rule on every instance, starting
//! from the identity. Instances come either from a cost manifest on disk or
//! from a [`GeneratorDirective`]; in the latter case repetition `r` uses stream
//! `r` of the experiment seed. Runs execute in parallel and each writes its
//! own files; the summary is written once all runs are done.
//!
//! Output layout under `out`:
//!
//! ```text
//! instances/<instance>/manifest.json   generated instances (+ truth.json when planted)
//! runs/<instance>_<rule>.csv           trace of one run
//! runs/<instance>_<rule>_x.ten         final transform of one run
//! summary.csv                          instance,rule,final_f,iters,converged,time_s
//! planted.csv                          instance,rule,f_star,final_f,match_score
//! compare/<instance>.csv|.svg          per-instance rule comparison (plot = true)
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, ensure, Context, Result};
use jacobi_diag::{run, Complex64, CostSpec, GroupScalar, Mat, PairRule, RunStatus, SolverConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::generate::{match_score, GeneratorDirective, Planted, PlantedTransform};
use crate::manifest;
use crate::plot::{compare_and_plot, PlotOptions, Series};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Cost manifest; mutually exclusive with `generator`.
    #[serde(default)]
    pub instance: Option<PathBuf>,
    #[serde(default)]
    pub generator: Option<GeneratorDirective>,
    /// Seed of the instance generator.
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub repetitions: usize,
    /// Pair rules to compare; defaults to `solver.pair_rule`.
    #[serde(default)]
    pub rules: Vec<PairRule>,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub plot: bool,
    /// Log-scale gradient panel in the plots.
    #[serde(default = "yes")]
    pub log_grad: bool,
    #[serde(default)]
    pub solver: SolverConfig,
}

fn one() -> usize {
    1
}

fn yes() -> bool {
    true
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    /// Reads a TOML config; a relative `instance` path is resolved against the
    /// config file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg =
            Self::from_toml(&text).with_context(|| format!("parsing {}", path.display()))?;
        if let Some(inst) = &cfg.instance {
            if inst.is_relative() {
                cfg.instance = Some(path.parent().unwrap_or(Path::new(".")).join(inst));
            }
        }
        Ok(cfg)
    }

    pub fn rules(&self) -> Vec<PairRule> {
        if self.rules.is_empty() {
            vec![self.solver.pair_rule]
        } else {
            self.rules.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        match (&self.instance, &self.generator) {
            (Some(_), Some(_)) => {
                bail!("give either an instance manifest or a generator, not both")
            }
            (None, None) => bail!("no instance manifest or generator given"),
            (Some(p), None) => {
                ensure!(p.is_file(), "manifest {} does not exist", p.display());
                ensure!(self.repetitions == 1, "repetitions need a generator");
            }
            (None, Some(g)) => g.validate()?,
        }
        ensure!(self.repetitions >= 1, "repetitions must be at least 1");
        let mut rules = self.rules();
        rules.sort_by_key(|r| r.name());
        rules.dedup();
        ensure!(rules.len() == self.rules().len(), "duplicate pair rules");
        Ok(())
    }
}

/// One line of `summary.csv`.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub instance: String,
    pub rule: PairRule,
    pub final_f: f64,
    pub iters: usize,
    pub converged: bool,
    pub time_s: f64,
    pub status: RunStatus,
    /// Known optimum and column-match score against the planted transform.
    pub planted: Option<(f64, f64)>,
    pub trace_path: PathBuf,
    pub x_path: PathBuf,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSummary {
    pub rows: Vec<SummaryRow>,
    pub summary_path: PathBuf,
}

pub const SUMMARY_HEADER: &str = "instance,rule,final_f,iters,converged,time_s";

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = format!("{SUMMARY_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{:e},{},{},{:e}",
            r.instance,
            r.rule.name(),
            r.final_f,
            r.iters,
            r.converged,
            r.time_s
        );
    }
    out
}

fn planted_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from("instance,rule,f_star,final_f,match_score\n");
    for r in rows {
        if let Some((f_star, score)) = r.planted {
            let _ = writeln!(
                out,
                "{},{},{:e},{:e},{:e}",
                r.instance,
                r.rule.name(),
                f_star,
                r.final_f,
                score
            );
        }
    }
    out
}

struct Loaded {
    name: String,
    spec: CostSpec,
    planted: Option<Planted>,
}

/// Result of one solver run, independent of the field.
pub struct Solved {
    pub csv: String,
    pub final_x: PlantedTransform,
    pub final_f: f64,
    pub iters: usize,
    pub status: RunStatus,
}

/// Runs the driver from the identity on the group matching the cost.
pub fn solve(spec: &CostSpec, cfg: &SolverConfig) -> Result<Solved> {
    fn go<T: GroupScalar>(
        spec: &CostSpec,
        cfg: &SolverConfig,
        wrap: fn(Mat<T>) -> PlantedTransform,
    ) -> Result<Solved> {
        let n = spec.dim();
        let mut cfg = cfg.clone();
        cfg.group = T::GROUP;
        let trace = run(spec, &Mat::<T>::identity(n, n), &cfg)?;
        Ok(Solved {
            csv: trace.to_csv(),
            final_f: trace.final_f(),
            iters: trace.iterations(),
            status: trace.status,
            final_x: wrap(trace.final_x),
        })
    }
    match spec {
        CostSpec::RealSymmetric { .. } => go::<f64>(spec, cfg, PlantedTransform::Orthogonal),
        _ => go::<Complex64>(spec, cfg, PlantedTransform::Unitary),
    }
}

fn load_instances(cfg: &ExperimentConfig) -> Result<Vec<Loaded>> {
    if let Some(path) = &cfg.instance {
        let name = path.parent().and_then(|p| p.file_name()).map_or_else(
            || "instance".to_string(),
            |s| s.to_string_lossy().into_owned(),
        );
        return Ok(vec![Loaded {
            name,
            spec: manifest::read_spec(path)?,
            planted: manifest::read_truth(path)?,
        }]);
    }
    let generator = cfg.generator.as_ref().expect("validated");
    let dir = cfg.out.join("instances");
    (0..cfg.repetitions)
        .into_par_iter()
        .map(|rep| {
            let name = format!("rep{rep:03}");
            let inst = generator.generate(cfg.seed, rep as u64)?;
            manifest::write_instance(&dir.join(&name), &inst)?;
            Ok(Loaded {
                name,
                spec: inst.spec,
                planted: inst.planted,
            })
        })
        .collect()
}

/// Writes the instances of a generator config without running anything and
/// returns their manifest paths.
pub fn generate_instances(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let generator = cfg.generator.as_ref().context("config has no generator")?;
    let dir = cfg.out.join("instances");
    (0..cfg.repetitions)
        .map(|rep| {
            let inst = generator.generate(cfg.seed, rep as u64)?;
            manifest::write_instance(&dir.join(format!("rep{rep:03}")), &inst)
        })
        .collect()
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentSummary> {
    cfg.validate()?;
    let runs_dir = cfg.out.join("runs");
    fs::create_dir_all(&runs_dir).with_context(|| format!("creating {}", runs_dir.display()))?;
    let instances = load_instances(cfg)?;
    let rules = cfg.rules();
    let jobs: Vec<(&Loaded, PairRule)> = instances
        .iter()
        .flat_map(|inst| rules.iter().map(move |&r| (inst, r)))
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(inst, rule)| {
            let mut solver = cfg.solver.clone();
            solver.pair_rule = rule;
            let start = Instant::now();
            let solved = solve(&inst.spec, &solver)
                .with_context(|| format!("instance {} rule {}", inst.name, rule.name()))?;
            let elapsed = start.elapsed().as_secs_f64();
            let stem = format!("{}_{}", inst.name, rule.name());
            let trace_path = runs_dir.join(format!("{stem}.csv"));
            let x_path = runs_dir.join(format!("{stem}_x.ten"));
            fs::write(&trace_path, &solved.csv)
                .with_context(|| format!("writing {}", trace_path.display()))?;
            manifest::write_transform(&x_path, &solved.final_x)?;
            let planted = match &inst.planted {
                Some(p) => Some((p.f_star, match_score(&solved.final_x, &p.transform)?)),
                None => None,
            };
            log::info!(
                "{stem}: f = {:.12e} after {} iterations ({})",
                solved.final_f,
                solved.iters,
                solved.status.name()
            );
            Ok(SummaryRow {
                instance: inst.name.clone(),
                rule,
                final_f: solved.final_f,
                iters: solved.iters,
                converged: solved.status == RunStatus::Converged,
                time_s: if solver.record_time { elapsed } else { 0.0 },
                status: solved.status,
                planted,
                trace_path,
                x_path,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let summary_path = cfg.out.join("summary.csv");
    fs::write(&summary_path, summary_csv(&rows))?;
    if rows.iter().any(|r| r.planted.is_some()) {
        fs::write(cfg.out.join("planted.csv"), planted_csv(&rows))?;
    }
    if cfg.plot {
        let dir = cfg.out.join("compare");
        fs::create_dir_all(&dir)?;
        for inst in &instances {
            let series = rows
                .iter()
                .filter(|r| r.instance == inst.name)
                .map(|r| Series::from_csv_file(r.rule.name(), &r.trace_path))
                .collect::<Result<Vec<_>>>()?;
            let chart = compare_and_plot(
                &series,
                &PlotOptions {
                    log_grad: cfg.log_grad,
                    title: inst.name.clone(),
                },
            )?;
            fs::write(dir.join(format!("{}.csv", inst.name)), &chart.csv)?;
            fs::write(dir.join(format!("{}.svg", inst.name)), &chart.svg)?;
        }
    }
    Ok(ExperimentSummary { rows, summary_path })
}
