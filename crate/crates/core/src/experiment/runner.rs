//! Grid execution, aggregation and output files.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::pipeline::{mean_and_se, run_single, Mode, RunOutput, RunParams};
use super::spec::{Cell, ExperimentKind, ExperimentSpec};
use crate::balance::TraceRecord;
use crate::error::{Error, Result};
use crate::metrics::Regime;
use crate::reservoir::DaleMode;
use crate::seed;

/// Seed path prefix of the baseline search, disjoint from cell indices.
const BASELINE_STREAM: u64 = 0x6261_7365;

/// One row of `cells.csv`: a single (cell, replicate) run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellRow {
    pub cell: usize,
    pub replicate: usize,
    pub seed: u64,
    pub mode: Mode,
    pub beta: f64,
    pub theta: f64,
    pub rho_t: f64,
    pub sigma_in: f64,
    pub excit_fraction: f64,
    pub dale: DaleMode,
    pub metric_name: &'static str,
    pub metric: Option<f64>,
    pub metric_before: Option<f64>,
    pub initial_beta: Option<f64>,
    pub final_beta: Option<f64>,
    pub mean_rate: Option<f64>,
    pub mean_entropy: Option<f64>,
    pub mean_corr: Option<f64>,
    pub regime: Option<Regime>,
    pub frac_extreme: Option<f64>,
    pub design_issues: Option<usize>,
    pub task_regenerations: Option<u32>,
    pub error_code: Option<&'static str>,
    pub error: Option<String>,
}

impl CellRow {
    pub fn ok(&self) -> bool {
        self.error_code.is_none()
    }
}

/// One row of `summary.csv`: mean and standard error over replicates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub cell: usize,
    pub mode: Mode,
    pub beta: f64,
    pub theta: f64,
    pub rho_t: f64,
    pub sigma_in: f64,
    pub excit_fraction: f64,
    pub dale: DaleMode,
    pub n_ok: usize,
    pub n_failed: usize,
    pub metric_mean: f64,
    pub metric_se: f64,
    pub metric_before_mean: f64,
    pub metric_before_se: f64,
    pub final_beta_mean: f64,
    pub mean_rate_mean: f64,
    pub mean_entropy_mean: f64,
    pub mean_corr_mean: f64,
    pub frac_extreme_mean: f64,
    pub n_silent: usize,
    pub n_saturated: usize,
    pub n_synchronized: usize,
    pub n_active: usize,
}

/// One row of `baseline.csv`: a point of the non-adaptive search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaselineRow {
    pub beta: f64,
    pub theta: f64,
    pub sigma_in: f64,
    pub n_ok: usize,
    pub metric_mean: f64,
    pub metric_se: f64,
    pub selected: bool,
}

#[derive(Debug, Clone)]
pub struct TraceSet {
    pub cell: usize,
    pub replicate: usize,
    pub records: Vec<TraceRecord>,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub spec: ExperimentSpec,
    pub cells: Vec<CellRow>,
    pub summary: Vec<SummaryRow>,
    pub baseline: Vec<BaselineRow>,
    pub traces: Vec<TraceSet>,
    pub log: Vec<String>,
}

impl ExperimentResult {
    pub fn rows_for_cell(&self, cell: usize) -> impl Iterator<Item = &CellRow> {
        self.cells.iter().filter(move |r| r.cell == cell)
    }
}

impl ExperimentSpec {
    /// Seed of replicate `replicate` of grid cell `cell`.
    pub fn run_seed(&self, cell: usize, replicate: usize) -> u64 {
        seed::derive(self.seed, &[cell as u64, replicate as u64])
    }

    pub fn run_params(&self, cell: &Cell, replicate: usize) -> RunParams {
        RunParams {
            network: self.network_for(cell),
            task: self.task,
            mode: cell.mode,
            rho_t: cell.rho_t,
            split: self.split,
            adaptation: self.adaptation,
            eval: self.eval,
            score_before: self.experiment == ExperimentKind::AdaptTrace,
            seed: self.run_seed(cell.index, replicate),
        }
    }
}

fn row_from(cell: &Cell, replicate: usize, params: &RunParams, out: &Result<RunOutput>) -> CellRow {
    let mut row = CellRow {
        cell: cell.index,
        replicate,
        seed: params.seed,
        mode: cell.mode,
        beta: cell.beta,
        theta: cell.theta,
        rho_t: cell.rho_t,
        sigma_in: cell.sigma_in,
        excit_fraction: cell.excit_fraction,
        dale: cell.dale,
        metric_name: params.task.metric_name(),
        metric: None,
        metric_before: None,
        initial_beta: None,
        final_beta: None,
        mean_rate: None,
        mean_entropy: None,
        mean_corr: None,
        regime: None,
        frac_extreme: None,
        design_issues: None,
        task_regenerations: None,
        error_code: None,
        error: None,
    };
    match out {
        Ok(o) => {
            row.metric = Some(o.metric);
            row.metric_before = o.metric_before;
            row.initial_beta = Some(o.initial_beta);
            row.final_beta = Some(o.final_beta);
            row.mean_rate = Some(o.diagnostics.mean_rate);
            row.mean_entropy = Some(o.diagnostics.mean_entropy);
            row.mean_corr = Some(o.diagnostics.mean_corr);
            row.regime = Some(o.diagnostics.regime);
            row.frac_extreme = Some(o.diagnostics.frac_extreme);
            row.design_issues = Some(o.design_issues);
            row.task_regenerations = Some(o.task_regenerations);
        }
        Err(e) => {
            row.error_code = Some(e.code());
            row.error = Some(e.to_string());
        }
    }
    row
}

fn collect<F: Fn(&CellRow) -> Option<f64>>(rows: &[&CellRow], f: F) -> Vec<f64> {
    rows.iter().filter_map(|r| f(r)).collect()
}

fn summarize(cell: &Cell, rows: &[&CellRow]) -> SummaryRow {
    let ok: Vec<&CellRow> = rows.iter().copied().filter(|r| r.ok()).collect();
    let (metric_mean, metric_se) = mean_and_se(&collect(&ok, |r| r.metric));
    let (metric_before_mean, metric_before_se) = mean_and_se(&collect(&ok, |r| r.metric_before));
    let mean = |f: fn(&CellRow) -> Option<f64>| mean_and_se(&collect(&ok, f)).0;
    let count = |g: Regime| ok.iter().filter(|r| r.regime == Some(g)).count();
    SummaryRow {
        cell: cell.index,
        mode: cell.mode,
        beta: cell.beta,
        theta: cell.theta,
        rho_t: cell.rho_t,
        sigma_in: cell.sigma_in,
        excit_fraction: cell.excit_fraction,
        dale: cell.dale,
        n_ok: ok.len(),
        n_failed: rows.len() - ok.len(),
        metric_mean,
        metric_se,
        metric_before_mean,
        metric_before_se,
        final_beta_mean: mean(|r| r.final_beta),
        mean_rate_mean: mean(|r| r.mean_rate),
        mean_entropy_mean: mean(|r| r.mean_entropy),
        mean_corr_mean: mean(|r| r.mean_corr),
        frac_extreme_mean: mean(|r| r.frac_extreme),
        n_silent: count(Regime::Silent),
        n_saturated: count(Regime::Saturated),
        n_synchronized: count(Regime::Synchronized),
        n_active: count(Regime::Active),
    }
}

fn execute(pool: &rayon::ThreadPool, jobs: &[RunParams]) -> Vec<Result<RunOutput>> {
    pool.install(|| jobs.par_iter().map(run_single).collect())
}

/// Coarse `(beta, theta)` search for the best non-adaptive setting. Returns
/// the table rows and the selected point, if any search point succeeded.
fn baseline_search(
    spec: &ExperimentSpec,
    pool: &rayon::ThreadPool,
    sigma_in: f64,
    log: &mut Vec<String>,
) -> (Vec<BaselineRow>, Option<(f64, f64)>) {
    let Some(search) = &spec.baseline else {
        return (Vec::new(), None);
    };
    let mut points = Vec::new();
    for &beta in &search.beta.0 {
        for &theta in &search.theta.0 {
            points.push((beta, theta));
        }
    }
    let mut jobs = Vec::new();
    for (p, &(beta, theta)) in points.iter().enumerate() {
        let cell = Cell {
            index: 0,
            mode: Mode::NonAdaptive,
            beta,
            theta,
            rho_t: spec.task_defaults.homogeneous_rho_t,
            sigma_in,
            excit_fraction: spec.network.excit_fraction,
            dale: spec.network.dale,
        };
        for k in 0..search.n_seeds {
            let mut params = spec.run_params(&cell, k);
            params.score_before = false;
            params.seed = seed::derive(spec.seed, &[BASELINE_STREAM, p as u64, k as u64]);
            jobs.push(params);
        }
    }
    let results = execute(pool, &jobs);

    let higher = spec.task.higher_is_better();
    let mut rows = Vec::new();
    let mut best: Option<(usize, f64)> = None;
    for (p, &(beta, theta)) in points.iter().enumerate() {
        let chunk = &results[p * search.n_seeds..(p + 1) * search.n_seeds];
        let vals: Vec<f64> = chunk.iter().filter_map(|r| r.as_ref().ok().map(|o| o.metric)).collect();
        let (m, se) = mean_and_se(&vals);
        if m.is_finite() {
            let better = match best {
                None => true,
                Some((_, b)) => if higher { m > b } else { m < b },
            };
            if better {
                best = Some((p, m));
            }
        }
        rows.push(BaselineRow { beta, theta, sigma_in, n_ok: vals.len(), metric_mean: m, metric_se: se, selected: false });
    }
    let selected = best.map(|(p, m)| {
        rows[p].selected = true;
        log.push(format!(
            "baseline: selected beta={} theta={} ({} = {m})",
            points[p].0,
            points[p].1,
            spec.task.metric_name()
        ));
        points[p]
    });
    if selected.is_none() {
        log.push("baseline: every search point failed; using tabulated beta/theta".into());
    }
    (rows, selected)
}

/// Runs every cell and replicate of `spec`. Individual run failures are
/// recorded in the rows; only setup problems abort.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    let started = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let mut log = vec![format!(
        "experiment={:?} task={:?} seeds={} workers={} neurons={}",
        spec.experiment, spec.task, spec.n_seeds, spec.workers, spec.network.n_neurons
    )];

    let mut cells = spec.cells();
    let mut baseline = Vec::new();
    if spec.experiment == ExperimentKind::CompareModes && spec.baseline.is_some() {
        let sigma_in = cells
            .iter()
            .find(|c| c.mode == Mode::NonAdaptive)
            .map_or(spec.task_defaults.nonadaptive_sigma_in, |c| c.sigma_in);
        let (rows, selected) = baseline_search(spec, &pool, sigma_in, &mut log);
        baseline = rows;
        if let Some((beta, theta)) = selected {
            for c in cells.iter_mut().filter(|c| c.mode == Mode::NonAdaptive) {
                c.beta = beta;
                c.theta = theta;
            }
        }
    }
    log::info!("{} cells x {} seeds", cells.len(), spec.n_seeds);

    let mut jobs = Vec::with_capacity(cells.len() * spec.n_seeds);
    for cell in &cells {
        for k in 0..spec.n_seeds {
            jobs.push(spec.run_params(cell, k));
        }
    }
    let results = execute(&pool, &jobs);

    let mut rows = Vec::with_capacity(jobs.len());
    let mut traces = Vec::new();
    for (i, (params, out)) in jobs.iter().zip(&results).enumerate() {
        let cell = &cells[i / spec.n_seeds];
        let replicate = i % spec.n_seeds;
        let row = row_from(cell, replicate, params, out);
        if let Some(e) = &row.error {
            log.push(format!("cell {} replicate {} failed: {e}", row.cell, replicate));
        }
        match out {
            Ok(o) if !o.trace.is_empty() => {
                traces.push(TraceSet { cell: cell.index, replicate, records: o.trace.clone() })
            }
            Err(Error::Diverged { trace, .. }) => {
                traces.push(TraceSet { cell: cell.index, replicate, records: trace.clone() })
            }
            _ => {}
        }
        rows.push(row);
    }
    let summary = cells
        .iter()
        .map(|c| {
            let group: Vec<&CellRow> = rows.iter().filter(|r| r.cell == c.index).collect();
            summarize(c, &group)
        })
        .collect();
    let failed = rows.iter().filter(|r| !r.ok()).count();
    log.push(format!("runs={} failed={failed}", rows.len()));
    log.push(format!("elapsed_seconds={:.1}", started.elapsed().as_secs_f64()));

    Ok(ExperimentResult { spec: spec.clone(), cells: rows, summary, baseline, traces, log })
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `cells.csv`, `summary.csv`, `resolved_config.json`, `run.log`
/// and, when present, `trace.csv` and `baseline.csv` into `dir`.
pub fn write_outputs(result: &ExperimentResult, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_rows(&dir.join("cells.csv"), &result.cells)?;
    write_rows(&dir.join("summary.csv"), &result.summary)?;
    if !result.baseline.is_empty() {
        write_rows(&dir.join("baseline.csv"), &result.baseline)?;
    }
    if !result.traces.is_empty() {
        let mut w = csv::Writer::from_path(dir.join("trace.csv"))?;
        w.write_record(["cell", "replicate", "step", "beta", "mean_rate", "metric_name", "metric_value"])?;
        for t in &result.traces {
            for r in &t.records {
                w.write_record([
                    t.cell.to_string(),
                    t.replicate.to_string(),
                    r.step.to_string(),
                    r.beta.to_string(),
                    r.mean_rate.to_string(),
                    r.metric_name.clone().unwrap_or_default(),
                    r.metric_value.map(|v| v.to_string()).unwrap_or_default(),
                ])?;
            }
        }
        w.flush()?;
    }
    let json = serde_json::to_string_pretty(&result.spec)?;
    fs::write(dir.join("resolved_config.json"), json + "\n")?;
    let mut log = fs::File::create(dir.join("run.log"))?;
    for line in &result.log {
        writeln!(log, "{line}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::{parse_config_str, Overrides};

    fn tiny(text: &str) -> ExperimentSpec {
        parse_config_str(text, &Overrides::default()).unwrap()
    }

    const SMALL: &str = r#""reservoir": {"n_neurons": 40, "mean_degree": 8},
        "split": {"washout": 50, "train_len": 300, "test_len": 100},
        "adaptation": {"n_steps": 200, "record_every": 100},
        "eval": {"diag_window": 200, "corr_pairs": 50}"#;

    #[test]
    fn seeds_are_distinct_across_cells_and_replicates() {
        let s = tiny(r#"{"experiment": "SweepBetaTheta", "task": "MemoryCapacity", "n_seeds": 4}"#);
        let mut seen = std::collections::HashSet::new();
        for c in 0..13 {
            for k in 0..4 {
                assert!(seen.insert(s.run_seed(c, k)));
            }
        }
    }

    #[test]
    fn rows_come_back_in_cell_order_and_are_reproducible() {
        let text = format!(
            r#"{{"experiment": "SweepBetaTheta", "task": "MemoryCapacity", "n_seeds": 2,
                "grid": {{"beta": [-1, 0, 1]}}, {SMALL}}}"#
        );
        let mut s = tiny(&text);
        let a = run_experiment(&s).unwrap();
        s.workers = 3;
        let b = run_experiment(&s).unwrap();
        assert_eq!(a.cells, b.cells);
        let order: Vec<_> = a.cells.iter().map(|r| (r.cell, r.replicate)).collect();
        assert_eq!(order, vec![(0, 0), (0, 1), (1, 0), (1, 1), (2, 0), (2, 1)]);
        assert_eq!(a.summary.len(), 3);
        assert!(a.cells.iter().all(|r| r.ok()));
    }

    #[test]
    fn failing_runs_become_error_rows() {
        // a test span longer than the generated series cannot be scored
        let text = r#"{"experiment": "SweepBetaTheta", "task": "MemoryCapacity", "n_seeds": 1,
            "grid": {"beta": [0]}, "reservoir": {"n_neurons": 20, "mean_degree": 4},
            "split": {"washout": 10, "train_len": 5, "test_len": 50}}"#;
        let r = run_experiment(&tiny(text)).unwrap();
        assert_eq!(r.cells.len(), 1);
        assert!(!r.cells[0].ok());
        assert_eq!(r.summary[0].n_failed, 1);
        assert!(r.log.iter().any(|l| l.contains("failed")));
    }

    #[test]
    fn compare_modes_records_the_baseline_search() {
        let text = format!(
            r#"{{"experiment": "CompareModes", "task": "MemoryCapacity", "n_seeds": 1,
                "modes": ["NonAdaptive", "DesignedHomogeneous"],
                "baseline": {{"beta": [-1, 0], "theta": [0], "n_seeds": 1}}, {SMALL}}}"#
        );
        let r = run_experiment(&tiny(&text)).unwrap();
        assert_eq!(r.baseline.len(), 2);
        assert_eq!(r.baseline.iter().filter(|b| b.selected).count(), 1);
        let chosen = r.baseline.iter().find(|b| b.selected).unwrap();
        assert_eq!(r.cells[0].beta, chosen.beta);
    }

    #[test]
    fn trace_experiment_scores_before_and_during() {
        let text = format!(
            r#"{{"experiment": "AdaptTrace", "task": "MemoryCapacity", "n_seeds": 1,
                "grid": {{"beta": [1]}}, {SMALL}}}"#
        )
        .replace(r#""record_every": 100"#, r#""record_every": 100, "eval_every": 100"#);
        let r = run_experiment(&tiny(&text)).unwrap();
        assert!(r.cells[0].metric_before.is_some());
        let t = &r.traces[0].records;
        assert_eq!(t.iter().map(|x| x.step).collect::<Vec<_>>(), vec![0, 100, 200]);
        assert!(t.iter().all(|x| x.metric_value.is_some()));
    }

    #[test]
    fn outputs_are_written() {
        let text = format!(
            r#"{{"experiment": "AdaptTrace", "task": "Narma10", "n_seeds": 1,
                "grid": {{"beta": [0]}}, {SMALL}}}"#
        );
        let r = run_experiment(&tiny(&text)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_outputs(&r, dir.path()).unwrap();
        for f in ["cells.csv", "summary.csv", "trace.csv", "resolved_config.json", "run.log"] {
            assert!(dir.path().join(f).exists(), "{f}");
        }
        let cells = fs::read_to_string(dir.path().join("cells.csv")).unwrap();
        assert!(cells.starts_with("cell,replicate,seed,mode,beta,theta,rho_t,sigma_in"));
    }
}
