//! Scenario execution, the run record, and its CSV and log artifacts.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use spectral_flow::apsindex::{aps_index, SuspensionProblem};
use spectral_flow::engines::{
    sf_appendix, sf_crossing, sf_integral, sf_phillips, sf_phillips_symbol, symbol_kernel_trace, AppendixOptions,
    ChiProfile, CrossingOptions, IntegralOptions, Method, PhillipsOptions, SpectralFlowResult, SymbolPhillipsOptions,
};
use spectral_flow::geometry::{conjugation_residual, kernel_dimension, signature_path};
use spectral_flow::path::OperatorPath;
use spectral_flow::tracemodel::FrequencyModel;
use spectral_flow::Error;

use crate::scenario::{Problem, Scenario};

pub const CSV_HEADER: [&str; 7] = ["scenario", "engine", "parameter_s", "value", "error_estimate", "runtime_ms", "seed"];

#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    /// Multiplies every tolerance of the scenario.
    pub tolerance_scale: f64,
    /// Fill the `runtime_ms` column; CSV output is then no longer
    /// reproducible byte for byte.
    pub timings: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            tolerance_scale: 1.0,
            timings: false,
        }
    }
}

/// One engine (or APS index) evaluation.
#[derive(Debug, Clone)]
pub struct Row {
    pub engine: String,
    pub parameter_s: Option<f64>,
    pub value: f64,
    pub error_estimate: f64,
    pub runtime_ms: f64,
    pub diagnostics: BTreeMap<String, f64>,
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub scenario: String,
    pub seed: Option<u64>,
    pub rows: Vec<Row>,
    pub aps_index: Option<f64>,
    /// `agreement[i][j] = rows[i].value − rows[j].value`.
    pub agreement: Vec<Vec<f64>>,
    /// Scenario-specific quantities for the log.
    pub notes: Vec<String>,
    pub failures: Vec<String>,
    pub wall_clock_ms: f64,
    pub version: &'static str,
}

impl RunRecord {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Why a run did not produce a record.
#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("invalid scenario: {0}")]
    Scenario(#[from] crate::scenario::ScenarioError),
    #[error("{op} failed: {source}")]
    Compute { op: String, source: Error },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl RunError {
    /// 2 for input problems, 3 for numeric failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Compute {
                source: Error::Numeric { .. },
                ..
            } => 3,
            RunError::Io(_) | RunError::Csv(_) => 1,
            _ => 2,
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Task {
    Engine(Method, Option<f64>),
    Aps,
}

impl Task {
    fn label(self) -> String {
        match self {
            Task::Engine(m, Some(s)) => format!("{m}(s={s})"),
            Task::Engine(m, None) => m.to_string(),
            Task::Aps => "aps_index".into(),
        }
    }
}

fn tasks(scenario: &Scenario, with_aps: bool) -> Vec<Task> {
    let mut out = Vec::new();
    for m in scenario.methods() {
        if m == Method::Integral {
            out.extend(scenario.engine_params.s_grid.iter().map(|&s| Task::Engine(m, Some(s))));
        } else {
            out.push(Task::Engine(m, None));
        }
    }
    if with_aps {
        out.push(Task::Aps);
    }
    out
}

struct OperatorRun<'a> {
    path: &'a OperatorPath,
    aps: Option<SuspensionProblem>,
    chi: ChiProfile,
    window: f64,
    depth: usize,
    regularize_appendix: bool,
}

impl OperatorRun<'_> {
    fn execute(&self, task: Task) -> Result<(f64, f64, BTreeMap<String, f64>), Error> {
        let from = |r: SpectralFlowResult| (r.value, r.error_estimate(), r.diagnostics);
        match task {
            Task::Engine(Method::Crossing, _) => sf_crossing(
                self.path,
                CrossingOptions {
                    window: self.window,
                    max_depth: self.depth,
                    ..Default::default()
                },
            )
            .map(from),
            Task::Engine(Method::Phillips, _) => sf_phillips(
                self.path,
                PhillipsOptions {
                    window: self.window,
                    max_depth: self.depth,
                    ..Default::default()
                },
            )
            .map(from),
            Task::Engine(Method::Integral, s) => sf_integral(self.path, s.unwrap_or(1.0), IntegralOptions::default()).map(from),
            Task::Engine(Method::Appendix, _) => {
                let opts = AppendixOptions {
                    rescale: true,
                    ..Default::default()
                };
                if self.regularize_appendix {
                    sf_appendix(&self.path.endpoint_regularized()?, &self.chi, opts).map(from)
                } else {
                    sf_appendix(self.path, &self.chi, opts).map(from)
                }
            }
            Task::Aps => {
                let prob = self.aps.as_ref().expect("aps task only with a problem");
                let r = aps_index(prob)?;
                let mut d = BTreeMap::new();
                d.insert("smallest_retained".into(), r.smallest_retained);
                d.insert("largest_discarded".into(), r.largest_discarded);
                d.insert("kernel".into(), r.kernel);
                d.insert("cokernel".into(), r.cokernel);
                Ok((r.index, 0.0, d))
            }
        }
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64() * 1e3)
}

fn run_tasks(run: &OperatorRun<'_>, tasks: &[Task]) -> Result<Vec<Row>, RunError> {
    let results: Vec<_> = tasks.par_iter().map(|&t| timed(|| run.execute(t))).collect();
    tasks
        .iter()
        .zip(results)
        .map(|(&task, (res, ms))| {
            let (value, error_estimate, diagnostics) = res.map_err(|source| RunError::Compute { op: task.label(), source })?;
            let (engine, parameter_s) = match task {
                Task::Engine(m, s) => (m.to_string(), s),
                Task::Aps => ("aps_index".to_string(), None),
            };
            Ok(Row {
                engine,
                parameter_s,
                value,
                error_estimate,
                runtime_ms: ms,
                diagnostics,
            })
        })
        .collect()
}

fn symbol_rows(scenario: &Scenario, model: &FrequencyModel, path: &spectral_flow::path::SymbolPath, notes: &mut Vec<String>) -> Result<Vec<Row>, RunError> {
    let compute = |op: &str, e: Error| RunError::Compute { op: op.into(), source: e };
    let opts = SymbolPhillipsOptions {
        steps: scenario.engine_params.symbol_steps,
        ..Default::default()
    };
    let (res, ms) = timed(|| sf_phillips_symbol(model, path, opts));
    let r = res.map_err(|e| compute("phillips", e))?;
    let mut kernel = 0.0f64;
    for k in 0..=16 {
        kernel = kernel.max(symbol_kernel_trace(model, path, k as f64 / 16.0).map_err(|e| compute("kernel trace", e))?);
    }
    notes.push(format!("frequency model '{}', max kernel trace {kernel}", model.label()));
    Ok(vec![Row {
        engine: Method::Phillips.to_string(),
        parameter_s: None,
        value: r.value,
        error_estimate: r.error_estimate(),
        runtime_ms: ms,
        diagnostics: r.diagnostics,
    }])
}

/// Executes a validated scenario. Independent engine runs are evaluated in
/// parallel; rows keep the scenario's engine order.
pub fn run(scenario: &Scenario, opts: RunOptions) -> Result<RunRecord, RunError> {
    let start = Instant::now();
    let mut notes = Vec::new();
    let problem = scenario.build()?;
    let chi = scenario.chi();
    let params = &scenario.engine_params;
    let rows = match &problem {
        Problem::Operator { path, aps } => {
            let run = OperatorRun {
                path,
                aps: aps.clone(),
                chi,
                window: params.window,
                depth: params.phillips_depth,
                regularize_appendix: false,
            };
            run_tasks(&run, &tasks(scenario, aps.is_some()))?
        }
        Problem::Symbol { model, path } => symbol_rows(scenario, model, path, &mut notes)?,
        Problem::Circle { metric, interior_nodes } => {
            let compute = |op: &str, e: Error| RunError::Compute { op: op.into(), source: e };
            let path = signature_path(metric, *interior_nodes, Default::default()).map_err(|e| compute("signature path", e))?;
            let aps = scenario.aps_grid().map(|m| SuspensionProblem::new(path.clone(), m));
            let run = OperatorRun {
                path: &path,
                aps,
                chi,
                window: params.window,
                depth: params.phillips_depth,
                regularize_appendix: true,
            };
            let rows = run_tasks(&run, &tasks(scenario, scenario.aps.is_some()))?;
            let mut dims = Vec::new();
            for &u in path.nodes() {
                dims.push(kernel_dimension(metric, u).map_err(|e| compute("kernel dimension", e))?);
            }
            let lo = dims.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = dims.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            notes.push(format!("kernel trace along the path in [{lo}, {hi}] over {} nodes", dims.len()));
            let mut residual = 0.0f64;
            for u in [0.25, 0.5, 0.75] {
                residual = residual.max(conjugation_residual(metric, u, 2.0).map_err(|e| compute("conjugation residual", e))?);
            }
            notes.push(format!("conjugation identity residual (s = 2) {residual:.3e}"));
            rows
        }
    };
    let n = rows.len();
    let agreement: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| rows[i].value - rows[j].value).collect()).collect();
    let mut failures = Vec::new();
    let tol = scenario.agreement_tolerance * opts.tolerance_scale;
    for i in 0..n {
        for j in (i + 1)..n {
            if agreement[i][j].abs() > tol {
                failures.push(format!(
                    "{} and {} differ by {:.3e} (tolerance {tol:.1e})",
                    label(&rows[i]),
                    label(&rows[j]),
                    agreement[i][j].abs()
                ));
            }
        }
    }
    if let Some(e) = &scenario.expect {
        let tol = e.tolerance * opts.tolerance_scale;
        for r in &rows {
            if (r.value - e.value).abs() > tol {
                failures.push(format!("{} = {} misses expected {} (tolerance {tol:.1e})", label(r), r.value, e.value));
            }
        }
    }
    let aps_index = rows.iter().find(|r| r.engine == "aps_index").map(|r| r.value);
    Ok(RunRecord {
        scenario: scenario.name.clone(),
        seed: scenario.seed(),
        rows,
        aps_index,
        agreement,
        notes,
        failures,
        wall_clock_ms: start.elapsed().as_secs_f64() * 1e3,
        version: env!("CARGO_PKG_VERSION"),
    })
}

fn label(r: &Row) -> String {
    match r.parameter_s {
        Some(s) => format!("{}(s={s})", r.engine),
        None => r.engine.clone(),
    }
}

/// Shortest representation that round-trips, with `-0.0` printed as `0.0`.
fn num(x: f64) -> String {
    format!("{:?}", x + 0.0)
}

pub fn write_csv(record: &RunRecord, out: impl std::io::Write, opts: RunOptions) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    let seed = record.seed.map(|s| s.to_string()).unwrap_or_default();
    for r in &record.rows {
        w.write_record([
            record.scenario.clone(),
            r.engine.clone(),
            r.parameter_s.map(num).unwrap_or_default(),
            num(r.value),
            num(r.error_estimate),
            if opts.timings { format!("{:.3}", r.runtime_ms) } else { String::new() },
            seed.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn render_log(record: &RunRecord) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "sfcalc {} run of scenario '{}'", record.version, record.scenario);
    let _ = writeln!(s, "seed: {}", record.seed.map_or("none".into(), |x| x.to_string()));
    let _ = writeln!(s, "wall clock: {:.1} ms", record.wall_clock_ms);
    let _ = writeln!(s, "\nresults:");
    for r in &record.rows {
        let _ = writeln!(
            s,
            "  {:<20} {:>22}  err {:.2e}  {:>9.1} ms",
            label(r),
            num(r.value),
            r.error_estimate,
            r.runtime_ms
        );
        for (k, v) in &r.diagnostics {
            let _ = writeln!(s, "      {k} = {}", num(*v));
        }
    }
    if let Some(i) = record.aps_index {
        let _ = writeln!(s, "\naps index: {i}");
    }
    if record.rows.len() > 1 {
        let _ = writeln!(s, "\nagreement matrix (row − column):");
        for (r, line) in record.rows.iter().zip(&record.agreement) {
            let cells: Vec<String> = line.iter().map(|d| format!("{d:>10.2e}")).collect();
            let _ = writeln!(s, "  {:<20} {}", label(r), cells.join(" "));
        }
    }
    if !record.notes.is_empty() {
        let _ = writeln!(s, "\nnotes:");
        for n in &record.notes {
            let _ = writeln!(s, "  {n}");
        }
    }
    let _ = writeln!(s);
    if record.passed() {
        let _ = writeln!(s, "status: ok");
    } else {
        let _ = writeln!(s, "status: {} assertion(s) failed", record.failures.len());
        for f in &record.failures {
            let _ = writeln!(s, "  {f}");
        }
    }
    s
}

/// Writes `<name>.csv` and `<name>.log` (or the scenario's output names)
/// into `dir` and returns their paths.
pub fn write_artifacts(scenario: &Scenario, record: &RunRecord, dir: &Path, opts: RunOptions) -> Result<(PathBuf, PathBuf), RunError> {
    std::fs::create_dir_all(dir)?;
    let csv_path = dir.join(scenario.output.csv.clone().unwrap_or_else(|| format!("{}.csv", scenario.name)));
    let log_path = dir.join(scenario.output.log.clone().unwrap_or_else(|| format!("{}.log", scenario.name)));
    let mut buf = Vec::new();
    write_csv(record, &mut buf, opts)?;
    std::fs::write(&csv_path, buf)?;
    std::fs::write(&log_path, render_log(record))?;
    Ok((csv_path, log_path))
}
