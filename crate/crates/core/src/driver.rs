//! The Jacobi iteration engine: cyclic (Jacobi-C) and gradient-based
//! (Jacobi-G) pair selection on `O(n)` and `U(n)`, with exact elementary
//! steps, periodic re-orthonormalization and a per-iteration trace.

use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::cost::{CostSpec, TransformedState};
use crate::gradient::{jacobi_g_pair, pair_derivatives, GradientMethod, PairStrategy, PairTable};
use crate::kernels::{drift, reorthonormalize};
use crate::rotation::apply_to_columns;
use crate::scalar::{Group, GroupScalar};
use crate::{Error, Mat, Result};

/// Drift that triggers an early re-orthonormalization.
pub const EARLY_REORTH_DRIFT: f64 = 1e-9;
/// Largest drift accepted for a starting point.
pub const START_DRIFT: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairRule {
    Cyclic,
    GradientMax,
    GradientFirstCyclic,
}

impl PairRule {
    pub fn is_gradient(self) -> bool {
        !matches!(self, PairRule::Cyclic)
    }

    pub fn name(self) -> &'static str {
        match self {
            PairRule::Cyclic => "cyclic",
            PairRule::GradientMax => "gradient-max",
            PairRule::GradientFirstCyclic => "gradient-first-cyclic",
        }
    }
}

impl std::str::FromStr for PairRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cyclic" => Ok(PairRule::Cyclic),
            "gradient-max" => Ok(PairRule::GradientMax),
            "gradient-first-cyclic" => Ok(PairRule::GradientFirstCyclic),
            _ => Err(Error::InvalidArgument(format!("unknown pair rule {s:?}"))),
        }
    }
}

/// `Summary` keeps every trace row; `Full` also keeps every iterate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecordLevel {
    #[default]
    Summary,
    Full,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub group: Group,
    pub pair_rule: PairRule,
    /// Jacobi-G constant; must lie in `(0, 2/n)` on `O(n)`, `(0, √2/n)` on `U(n)`.
    pub delta: f64,
    pub grad_tol: f64,
    /// Stop once the predicted gains over `n(n−1)/2` consecutive iterations sum
    /// to at most this. A negative value disables the test.
    pub sweep_tol: f64,
    pub max_iters: usize,
    pub reorth_period: usize,
    pub seed: u64,
    pub record_level: RecordLevel,
    pub gradient: GradientMethod,
    /// Record wall-clock times; off by default so traces are reproducible byte for byte.
    pub record_time: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            group: Group::Orthogonal,
            pair_rule: PairRule::Cyclic,
            delta: 0.1,
            grad_tol: 1e-8,
            sweep_tol: 0.0,
            max_iters: 10_000,
            reorth_period: 50,
            seed: 0,
            record_level: RecordLevel::Summary,
            gradient: GradientMethod::Analytic,
            record_time: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self, n: usize) -> Result<()> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!(
                "dimension {n} has no pairs"
            )));
        }
        if self.pair_rule.is_gradient() {
            let bound = match self.group {
                Group::Orthogonal => f64::delta_bound(n),
                Group::Unitary => crate::Complex64::delta_bound(n),
            };
            if !(self.delta > 0.0 && self.delta < bound) {
                return Err(Error::InvalidArgument(format!(
                    "delta {} outside (0, {bound}) for n = {n} on the {} group",
                    self.delta, self.group
                )));
            }
        }
        if !(self.grad_tol >= 0.0) || self.sweep_tol.is_nan() {
            return Err(Error::InvalidArgument(
                "grad_tol must be nonnegative and sweep_tol a number".into(),
            ));
        }
        if self.reorth_period == 0 {
            return Err(Error::InvalidArgument(
                "reorth_period must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    /// `grad_norm ≤ grad_tol`.
    Converged,
    /// A window of `n(n−1)/2` iterations gained at most `sweep_tol`.
    SweepStall,
    MaxIters,
}

impl RunStatus {
    pub fn name(self) -> &'static str {
        match self {
            RunStatus::Converged => "converged",
            RunStatus::SweepStall => "sweep-stall",
            RunStatus::MaxIters => "max-iters",
        }
    }
}

/// One trace row. Row `k ≥ 1` describes the step `X_{k−1} → X_k`: the pair and
/// parameters used, `f(X_k)`, `‖grad f(X_k)‖`, the selection measure of the pair
/// at `X_{k−1}` and `‖X_k − X_{k−1}‖_F`. Row 0 holds the starting point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub k: usize,
    /// 0-based pair; `None` on row 0.
    pub pair: Option<(usize, usize)>,
    pub params: [f64; 3],
    pub f: f64,
    pub grad_norm: f64,
    pub pair_grad: f64,
    pub step_norm: f64,
    pub time_s: f64,
}

pub const CSV_HEADER: &str = "k,i,j,param1,param2,param3,f,grad_norm,pair_grad,step_norm,time_s";

#[derive(Clone, Debug)]
pub struct RunTrace<T> {
    pub rows: Vec<TraceRow>,
    /// `X_0, …, X_K` when recorded at [`RecordLevel::Full`].
    pub iterates: Vec<Mat<T>>,
    pub status: RunStatus,
    pub final_x: Mat<T>,
    pub group: Group,
    pub pair_rule: PairRule,
    pub delta: f64,
}

impl<T> RunTrace<T> {
    pub fn iterations(&self) -> usize {
        self.rows.last().map_or(0, |r| r.k)
    }

    pub fn final_f(&self) -> f64 {
        self.rows.last().map_or(f64::NAN, |r| r.f)
    }

    pub fn final_grad_norm(&self) -> f64 {
        self.rows.last().map_or(f64::NAN, |r| r.grad_norm)
    }

    pub fn to_csv(&self) -> String {
        rows_to_csv(&self.rows)
    }
}

/// Serializes rows with 1-based pair indices (`0,0` on row 0). Floats use the
/// shortest representation that parses back to the same value.
pub fn rows_to_csv(rows: &[TraceRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let (i, j) = r.pair.map_or((0, 0), |(i, j)| (i + 1, j + 1));
        let _ = writeln!(
            out,
            "{},{},{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            r.k,
            i,
            j,
            r.params[0],
            r.params[1],
            r.params[2],
            r.f,
            r.grad_norm,
            r.pair_grad,
            r.step_norm,
            r.time_s
        );
    }
    out
}

pub fn parse_csv(text: &str) -> Result<Vec<TraceRow>> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim() == CSV_HEADER => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                msg: format!("expected header {CSV_HEADER:?}"),
            })
        }
    }
    lines
        .map(|(ln, line)| {
            let err = |msg: String| Error::Parse { line: ln + 1, msg };
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 11 {
                return Err(err(format!("expected 11 fields, got {}", fields.len())));
            }
            let int = |s: &str| s.parse::<usize>().map_err(|e| err(format!("{s:?}: {e}")));
            let num = |s: &str| s.parse::<f64>().map_err(|e| err(format!("{s:?}: {e}")));
            let (i, j) = (int(fields[1])?, int(fields[2])?);
            let pair = match (i, j) {
                (0, 0) => None,
                (i, j) if i >= 1 && i < j => Some((i - 1, j - 1)),
                _ => return Err(err(format!("invalid pair ({i}, {j})"))),
            };
            Ok(TraceRow {
                k: int(fields[0])?,
                pair,
                params: [num(fields[3])?, num(fields[4])?, num(fields[5])?],
                f: num(fields[6])?,
                grad_norm: num(fields[7])?,
                pair_grad: num(fields[8])?,
                step_norm: num(fields[9])?,
                time_s: num(fields[10])?,
            })
        })
        .collect()
}

/// The cyclic order `(0,1) → (0,2) → … → (0,n−1) → (1,2) → …`, repeated forever.
pub fn cyclic_pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    let sweep: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    sweep.into_iter().cycle()
}

fn step_seed(seed: u64, k: usize) -> u64 {
    seed ^ (k as u64)
        .wrapping_add(1)
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Runs the configured Jacobi algorithm from `x0`.
pub fn run<T: GroupScalar>(
    spec: &CostSpec,
    x0: &Mat<T>,
    cfg: &SolverConfig,
) -> Result<RunTrace<T>> {
    if cfg.group != T::GROUP {
        return Err(Error::IncompatibleGroup(match T::GROUP {
            Group::Orthogonal => "orthogonal",
            Group::Unitary => "unitary",
        }));
    }
    let obj = T::objective(spec)?;
    let n = obj.dim();
    cfg.validate(n)?;
    if x0.nrows() != n || x0.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x0.nrows(),
        });
    }
    let dr = drift(x0);
    if !(dr <= START_DRIFT) {
        return Err(Error::Drift {
            drift: dr,
            limit: START_DRIFT,
        });
    }
    let mut x = if dr == 0.0 {
        x0.clone()
    } else {
        reorthonormalize(x0)?
    };
    let mut state = TransformedState::new(&obj, &x)?;
    let clock = Instant::now();
    let elapsed = |c: &Instant| {
        if cfg.record_time {
            c.elapsed().as_secs_f64()
        } else {
            0.0
        }
    };

    let npairs = n * (n - 1) / 2;
    let table = PairTable::zeros(n);
    let mut cyclic = cyclic_pairs(n);
    let mut cursor = 0usize;
    let mut pd = pair_derivatives(&state, &x, cfg.gradient)?;
    let mut rows = vec![TraceRow {
        k: 0,
        pair: None,
        params: [0.0; 3],
        f: state.value()?,
        grad_norm: pd.grad_norm,
        pair_grad: 0.0,
        step_norm: 0.0,
        time_s: elapsed(&clock),
    }];
    let full = cfg.record_level == RecordLevel::Full;
    let mut iterates = if full { vec![x.clone()] } else { Vec::new() };
    let mut window_gain = 0.0;
    let mut k = 0usize;

    let status = loop {
        if pd.grad_norm <= cfg.grad_tol {
            break RunStatus::Converged;
        }
        if k >= cfg.max_iters {
            break RunStatus::MaxIters;
        }
        let (i, j) = match cfg.pair_rule {
            PairRule::Cyclic => cyclic.next().expect("cycle is infinite"),
            PairRule::GradientMax => jacobi_g_pair(&pd, cfg.delta, PairStrategy::Max)?,
            PairRule::GradientFirstCyclic => {
                let p = jacobi_g_pair(&pd, cfg.delta, PairStrategy::FirstCyclic { start: cursor })?;
                cursor = (table.index(p.0, p.1) + 1) % npairs;
                p
            }
        };
        let pair_grad = pd.measure(i, j);
        let step = T::solve_pair(&state, i, j, step_seed(cfg.seed, k))?;
        let moved = step.gain > 0.0;
        if moved {
            state.apply_block(i, j, &step.block);
            apply_to_columns(&mut x, i, j, &step.block);
            window_gain += step.gain;
        }
        k += 1;
        if k.is_multiple_of(cfg.reorth_period) || drift(&x) > EARLY_REORTH_DRIFT {
            x = reorthonormalize(&x)?;
            state.reset(&x)?;
        }
        pd = pair_derivatives(&state, &x, cfg.gradient)?;
        rows.push(TraceRow {
            k,
            pair: Some((i, j)),
            params: if moved {
                step.params
            } else {
                T::IDENTITY_PARAMS
            },
            f: state.value()?,
            grad_norm: pd.grad_norm,
            pair_grad,
            step_norm: if moved { step.step_norm() } else { 0.0 },
            time_s: elapsed(&clock),
        });
        if full {
            iterates.push(x.clone());
        }
        if k.is_multiple_of(npairs) {
            if window_gain <= cfg.sweep_tol && pd.grad_norm > cfg.grad_tol {
                break RunStatus::SweepStall;
            }
            window_gain = 0.0;
        }
    };
    log::debug!(
        "{} run finished: {} after {k} iterations",
        cfg.pair_rule.name(),
        status.name()
    );
    Ok(RunTrace {
        rows,
        iterates,
        status,
        final_x: x,
        group: T::GROUP,
        pair_rule: cfg.pair_rule,
        delta: cfg.delta,
    })
}

/// Theorem-style safeguard constants estimated from a trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SafeguardAudit {
    /// Per step `k ≥ 1`: `f_k ≥ f_{k−1} − 1e−12 (1 + |f_{k−1}|)`.
    pub monotone: Vec<bool>,
    /// Steps whose `f` decreased beyond the tolerance.
    pub monotone_violations: Vec<usize>,
    /// Largest `σ` with `|f_k − f_{k−1}| ≥ σ ‖grad_{k−1}‖ ‖X_k − X_{k−1}‖` over the
    /// tail, ignoring steps whose change in `f` is at round-off level.
    pub sigma: Option<f64>,
    /// Largest `κ` with `‖X_k − X_{k−1}‖ ≥ κ ‖grad_{k−1}‖` over the tail.
    pub kappa: Option<f64>,
    /// First step of the audited tail (last 80% of the steps).
    pub tail_start: usize,
    /// Gradient-rule steps whose pair measure fell below `δ ‖grad_{k−1}‖`.
    pub selection_violations: Vec<usize>,
}

impl SafeguardAudit {
    pub fn passes(&self) -> bool {
        self.monotone_violations.is_empty() && self.selection_violations.is_empty()
    }
}

/// Re-checks the sufficient-increase and step-size inequalities along a trace.
/// `delta` re-verifies the Jacobi-G selection inequality when given.
pub fn safeguard_audit(rows: &[TraceRow], delta: Option<f64>) -> Result<SafeguardAudit> {
    if rows.is_empty() {
        return Err(Error::InsufficientTrace("trace has no rows".into()));
    }
    let steps = rows.len() - 1;
    let tail_start = 1 + steps / 5;
    let mut audit = SafeguardAudit {
        monotone: Vec::with_capacity(steps),
        monotone_violations: Vec::new(),
        sigma: None,
        kappa: None,
        tail_start,
        selection_violations: Vec::new(),
    };
    for k in 1..rows.len() {
        let (prev, cur) = (&rows[k - 1], &rows[k]);
        let ok = cur.f >= prev.f - 1e-12 * (1.0 + prev.f.abs());
        audit.monotone.push(ok);
        if !ok {
            audit.monotone_violations.push(cur.k);
        }
        if let Some(d) = delta {
            if cur.pair_grad < d * prev.grad_norm * (1.0 - 1e-12) {
                audit.selection_violations.push(cur.k);
            }
        }
        if k >= tail_start && prev.grad_norm > 0.0 {
            let kappa = cur.step_norm / prev.grad_norm;
            audit.kappa = Some(audit.kappa.map_or(kappa, |v: f64| v.min(kappa)));
            // Changes at round-off level carry no information about σ.
            if cur.step_norm > 0.0 && (cur.f - prev.f).abs() > 1e-12 * (1.0 + prev.f.abs()) {
                let sigma = (cur.f - prev.f).abs() / (prev.grad_norm * cur.step_norm);
                audit.sigma = Some(audit.sigma.map_or(sigma, |v: f64| v.min(sigma)));
            }
        }
    }
    Ok(audit)
}
