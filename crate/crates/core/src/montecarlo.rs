//! Monte Carlo study over data length and right-inverse choice: simulate,
//! corrupt, bound, verify, and aggregate the relative error of the bound.

use std::fs::File;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::{
    assemble_analysis_lft, build_analysis_regression, right_inverse, robust_h2_bound, verify_certificate, GChoice,
    DEFAULT_EPS,
};
use crate::error::{Error, Result};
use crate::sdp::{ClarabelBackend, SolveStatus, SolverOptions};
use crate::sim::{corrupt, random_experiment, NoiseBounds};
use crate::system::{example_system, true_h2, LtiSystem};

pub const BUILTIN_SYSTEM: &str = "paper-example";

fn default_system() -> String {
    BUILTIN_SYSTEM.into()
}
fn default_n_list() -> Vec<usize> {
    vec![7, 25, 50, 100, 200, 300]
}
fn default_repetitions() -> usize {
    100
}
fn default_g_choices() -> Vec<GChoice> {
    vec![GChoice::MoorePenrose, GChoice::Weighted]
}
fn default_true() -> bool {
    true
}
fn default_eps() -> f64 {
    DEFAULT_EPS
}
fn default_solver_tol() -> f64 {
    SolverOptions::default().tol
}
fn default_max_iter() -> u32 {
    SolverOptions::default().max_iter
}
fn default_verify_samples() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// `"paper-example"` or the path of a JSON system file.
    #[serde(default = "default_system")]
    pub system: String,
    #[serde(default)]
    pub noise_bounds: NoiseBounds,
    #[serde(default = "default_n_list")]
    pub n_list: Vec<usize>,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default = "default_g_choices")]
    pub g_choices: Vec<GChoice>,
    #[serde(default = "default_true")]
    pub reduce: bool,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default = "default_solver_tol")]
    pub solver_tol: f64,
    #[serde(default = "default_max_iter")]
    pub solver_max_iter: u32,
    #[serde(default)]
    pub master_seed: u64,
    /// Sampled deltas per certificate check.
    #[serde(default = "default_verify_samples")]
    pub verify_samples: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults deserialize")
    }
}

impl ExperimentConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load_system(&self) -> Result<LtiSystem> {
        if self.system == BUILTIN_SYSTEM {
            return Ok(example_system());
        }
        load_system_file(Path::new(&self.system))
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            tol: self.solver_tol,
            max_iter: self.solver_max_iter,
        }
    }

    pub fn validate(&self, sys: &LtiSystem) -> Result<()> {
        self.noise_bounds.validate()?;
        let min = sys.n() + sys.m_p() + 1;
        if let Some(&bad) = self.n_list.iter().find(|&&n| n < min) {
            return Err(Error::TooFewSamples { min, got: bad });
        }
        if self.repetitions == 0 {
            return Err(Error::InvalidArgument("repetitions must be >= 1".into()));
        }
        if self.g_choices.is_empty() {
            return Err(Error::InvalidArgument("at least one right inverse choice is needed".into()));
        }
        if !(self.eps > 0.0) || !(self.solver_tol > 0.0) {
            return Err(Error::InvalidArgument("eps and solver_tol must be positive".into()));
        }
        Ok(())
    }
}

pub fn load_system_file(path: &Path) -> Result<LtiSystem> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let sys: LtiSystem = serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    sys.validate()?;
    Ok(sys)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Optimal,
    Infeasible,
    NumericalFailure,
    /// The data could not be turned into an analysis problem (rank, sizes).
    InvalidData,
}

impl RunStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            RunStatus::Optimal => "optimal",
            RunStatus::Infeasible => "infeasible",
            RunStatus::NumericalFailure => "numerical_failure",
            RunStatus::InvalidData => "invalid_data",
        }
    }
}

impl std::str::FromStr for RunStatus {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "optimal" => RunStatus::Optimal,
            "infeasible" => RunStatus::Infeasible,
            "numerical_failure" => RunStatus::NumericalFailure,
            "invalid_data" => RunStatus::InvalidData,
            other => return Err(Error::InvalidArgument(format!("unknown status `{other}`"))),
        })
    }
}

impl From<SolveStatus> for RunStatus {
    fn from(s: SolveStatus) -> Self {
        match s {
            SolveStatus::Optimal => RunStatus::Optimal,
            SolveStatus::Infeasible => RunStatus::Infeasible,
            SolveStatus::NumericalFailure => RunStatus::NumericalFailure,
        }
    }
}

/// Outcome of the a posteriori certificate check of an optimal run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunVerification {
    pub ok: bool,
    pub worst_h2_ratio: f64,
    pub lmi_max_eig: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    #[serde(rename = "N")]
    pub n: usize,
    pub rep: usize,
    pub seed: u64,
    pub g_choice: GChoice,
    pub status: RunStatus,
    pub gamma: Option<f64>,
    pub gamma_true: f64,
    pub eps_g: Option<f64>,
    pub solve_time_s: f64,
    #[serde(skip)]
    pub verification: Option<RunVerification>,
    #[serde(skip)]
    pub note: Option<String>,
}

impl RunRecord {
    /// Equality ignoring wall-clock time.
    pub fn same_outcome(&self, other: &Self) -> bool {
        let mut a = self.clone();
        a.solve_time_s = other.solve_time_s;
        &a == other
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent per-run seed from `(master seed, N, rep, G choice)`.
pub fn run_seed(master: u64, n: usize, rep: usize, g: GChoice) -> u64 {
    let g_tag = match g {
        GChoice::MoorePenrose => 1u64,
        GChoice::Weighted => 2u64,
    };
    [n as u64, rep as u64, g_tag]
        .into_iter()
        .fold(splitmix64(master), |h, v| splitmix64(h ^ v))
}

/// Everything shared by the runs of one study.
#[derive(Debug, Clone)]
pub struct Study {
    pub config: ExperimentConfig,
    pub system: LtiSystem,
    pub gamma_true: f64,
}

impl Study {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        let system = config.load_system()?;
        config.validate(&system)?;
        let gamma_true = true_h2(&system)?;
        Ok(Self {
            config,
            system,
            gamma_true,
        })
    }

    pub fn cells(&self) -> Vec<(usize, usize, GChoice)> {
        let mut cells = Vec::new();
        for &n in &self.config.n_list {
            for &g in &self.config.g_choices {
                for rep in 0..self.config.repetitions {
                    cells.push((n, rep, g));
                }
            }
        }
        cells
    }
}

/// simulate -> corrupt -> regression -> LFT -> SDP -> verification.
pub fn run_single(study: &Study, n: usize, rep: usize, g: GChoice) -> RunRecord {
    let cfg = &study.config;
    let seed = run_seed(cfg.master_seed, n, rep, g);
    let mut record = RunRecord {
        n,
        rep,
        seed,
        g_choice: g,
        status: RunStatus::InvalidData,
        gamma: None,
        gamma_true: study.gamma_true,
        eps_g: None,
        solve_time_s: 0.0,
        verification: None,
        note: None,
    };
    match bound_one(study, n, seed, g, &mut record) {
        Ok(()) => {}
        Err(e) => record.note = Some(e.to_string()),
    }
    record
}

fn bound_one(study: &Study, n: usize, seed: u64, g: GChoice, record: &mut RunRecord) -> Result<()> {
    let cfg = &study.config;
    let traj = random_experiment(&study.system, n, cfg.noise_bounds.d_bar, seed)?;
    let data = corrupt(&traj, &cfg.noise_bounds, splitmix64(seed))?;
    let ar = build_analysis_regression(&data, &study.system.bd, &cfg.noise_bounds)?;
    let ginv = right_inverse(&ar, g)?;
    let lft = assemble_analysis_lft(&ar, &ginv.g, cfg.reduce)?;
    record.status = RunStatus::NumericalFailure;
    let (_, cert) = robust_h2_bound(&lft, cfg.eps, &ClarabelBackend, &cfg.solver_options())?;
    record.status = cert.status.into();
    record.solve_time_s = cert.solve_time_s;
    if cert.status != SolveStatus::Optimal {
        return Ok(());
    }
    let report = verify_certificate(&lft, &cert, cfg.eps, cfg.verify_samples, splitmix64(seed ^ 0x5eed))?;
    record.verification = Some(RunVerification {
        ok: report.ok,
        worst_h2_ratio: report.worst_h2_ratio,
        lmi_max_eig: report.lmi1_max_eig.max(report.lmi2_max_eig),
        samples: report.samples,
    });
    if !report.ok {
        record.status = RunStatus::NumericalFailure;
        record.note = report.failures.first().cloned();
        return Ok(());
    }
    let gamma = cert.gamma.expect("optimal certificate has gamma");
    record.gamma = Some(gamma);
    record.eps_g = Some((gamma - study.gamma_true).abs() / study.gamma_true);
    Ok(())
}

/// How the cells of a study are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Worker pool; `None` uses every core. Without the `parallel` feature
    /// this runs sequentially.
    Parallel { jobs: Option<usize> },
}

impl Default for Execution {
    fn default() -> Self {
        Execution::Parallel { jobs: None }
    }
}

pub fn run_records(study: &Study, exec: Execution) -> Vec<RunRecord> {
    let cells = study.cells();
    let mut records = match exec {
        Execution::Sequential => cells.iter().map(|&(n, rep, g)| run_single(study, n, rep, g)).collect(),
        Execution::Parallel { jobs } => run_parallel(study, &cells, jobs),
    };
    records.sort_by_key(|r| (r.n, r.g_choice, r.rep));
    records
}

#[cfg(feature = "parallel")]
fn run_parallel(study: &Study, cells: &[(usize, usize, GChoice)], jobs: Option<usize>) -> Vec<RunRecord> {
    use rayon::prelude::*;
    let work = || -> Vec<RunRecord> {
        cells.par_iter().map(|&(n, rep, g)| run_single(study, n, rep, g)).collect()
    };
    match jobs {
        Some(j) => match rayon::ThreadPoolBuilder::new().num_threads(j.max(1)).build() {
            Ok(pool) => pool.install(work),
            Err(_) => work(),
        },
        None => work(),
    }
}

#[cfg(not(feature = "parallel"))]
fn run_parallel(study: &Study, cells: &[(usize, usize, GChoice)], _jobs: Option<usize>) -> Vec<RunRecord> {
    cells.iter().map(|&(n, rep, g)| run_single(study, n, rep, g)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub g_choice: GChoice,
    pub feasibility_rate: f64,
    pub mean_eps_g: Option<f64>,
    pub median_eps_g: Option<f64>,
    pub n_feasible: usize,
    #[serde(skip)]
    pub runs: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SummaryTable {
    pub rows: Vec<SummaryRow>,
}

impl SummaryTable {
    pub fn row(&self, n: usize, g: GChoice) -> Option<&SummaryRow> {
        self.rows.iter().find(|r| r.n == n && r.g_choice == g)
    }
}

fn median(sorted: &[f64]) -> Option<f64> {
    let k = sorted.len();
    match k {
        0 => None,
        _ if k % 2 == 1 => Some(sorted[k / 2]),
        _ => Some(0.5 * (sorted[k / 2 - 1] + sorted[k / 2])),
    }
}

/// Aggregates per `(N, G choice)`, independent of record order.
pub fn summarize(records: &[RunRecord]) -> SummaryTable {
    let mut keys: Vec<(usize, GChoice)> = records.iter().map(|r| (r.n, r.g_choice)).collect();
    keys.sort();
    keys.dedup();
    let rows = keys
        .into_iter()
        .map(|(n, g)| {
            let cell: Vec<&RunRecord> = records.iter().filter(|r| r.n == n && r.g_choice == g).collect();
            let mut errs: Vec<f64> = cell
                .iter()
                .filter(|r| r.status == RunStatus::Optimal)
                .filter_map(|r| r.eps_g)
                .collect();
            errs.sort_by(f64::total_cmp);
            let n_feasible = errs.len();
            let mean = (n_feasible > 0).then(|| errs.iter().sum::<f64>() / n_feasible as f64);
            SummaryRow {
                n,
                g_choice: g,
                feasibility_rate: n_feasible as f64 / cell.len() as f64,
                mean_eps_g: mean,
                median_eps_g: median(&errs),
                n_feasible,
                runs: cell.len(),
            }
        })
        .collect();
    SummaryTable { rows }
}

#[derive(Debug, Clone)]
pub struct MonteCarloOutput {
    pub records: Vec<RunRecord>,
    pub summary: SummaryTable,
}

pub fn run_montecarlo(config: &ExperimentConfig, exec: Execution) -> Result<MonteCarloOutput> {
    let study = Study::new(config.clone())?;
    let records = run_records(&study, exec);
    let summary = summarize(&records);
    Ok(MonteCarloOutput { records, summary })
}

pub const RECORD_COLUMNS: [&str; 9] = [
    "N", "rep", "seed", "g_choice", "status", "gamma", "gamma_true", "eps_g", "solve_time_s",
];
pub const SUMMARY_COLUMNS: [&str; 6] = [
    "N", "g_choice", "feasibility_rate", "mean_eps_g", "median_eps_g", "n_feasible",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn write_rows(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    let to_err = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        kind => Error::Solver(format!("{kind:?}")),
    };
    w.write_record(header).map_err(to_err)?;
    for row in rows {
        w.write_record(&row).map_err(to_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_records_csv(records: &[RunRecord], path: &Path) -> Result<()> {
    write_rows(
        path,
        &RECORD_COLUMNS,
        records.iter().map(|r| {
            vec![
                r.n.to_string(),
                r.rep.to_string(),
                r.seed.to_string(),
                r.g_choice.as_str().to_string(),
                r.status.as_str().to_string(),
                opt(r.gamma),
                r.gamma_true.to_string(),
                opt(r.eps_g),
                r.solve_time_s.to_string(),
            ]
        }),
    )
}

pub fn write_summary_csv(table: &SummaryTable, path: &Path) -> Result<()> {
    write_rows(
        path,
        &SUMMARY_COLUMNS,
        table.rows.iter().map(|r| {
            vec![
                r.n.to_string(),
                r.g_choice.as_str().to_string(),
                r.feasibility_rate.to_string(),
                opt(r.mean_eps_g),
                opt(r.median_eps_g),
                r.n_feasible.to_string(),
            ]
        }),
    )
}

fn read_rows(path: &Path, expected: &[&str]) -> Result<Vec<(u64, csv::StringRecord)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::Reader::from_reader(file);
    let parse = |line: u64, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let header = rdr.headers().map_err(|e| parse(1, e.to_string()))?.clone();
    if header.iter().ne(expected.iter().copied()) {
        return Err(parse(1, format!("expected header {}", expected.join(","))));
    }
    rdr.records()
        .map(|rec| {
            let rec = rec.map_err(|e| parse(e.position().map_or(0, |p| p.line()), e.to_string()))?;
            Ok((rec.position().map_or(0, |p| p.line()), rec))
        })
        .collect()
}

fn field<T: std::str::FromStr>(path: &Path, line: u64, name: &str, s: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    s.parse().map_err(|e: T::Err| Error::Parse {
        path: path.to_path_buf(),
        line,
        message: format!("column {name}: {e}"),
    })
}

fn opt_field(path: &Path, line: u64, name: &str, s: &str) -> Result<Option<f64>> {
    if s.is_empty() {
        Ok(None)
    } else {
        field(path, line, name, s).map(Some)
    }
}

pub fn read_records_csv(path: &Path) -> Result<Vec<RunRecord>> {
    read_rows(path, &RECORD_COLUMNS)?
        .into_iter()
        .map(|(line, r)| {
            Ok(RunRecord {
                n: field(path, line, "N", &r[0])?,
                rep: field(path, line, "rep", &r[1])?,
                seed: field(path, line, "seed", &r[2])?,
                g_choice: field(path, line, "g_choice", &r[3])?,
                status: field(path, line, "status", &r[4])?,
                gamma: opt_field(path, line, "gamma", &r[5])?,
                gamma_true: field(path, line, "gamma_true", &r[6])?,
                eps_g: opt_field(path, line, "eps_g", &r[7])?,
                solve_time_s: field(path, line, "solve_time_s", &r[8])?,
                verification: None,
                note: None,
            })
        })
        .collect()
}

pub fn read_summary_csv(path: &Path) -> Result<SummaryTable> {
    let rows = read_rows(path, &SUMMARY_COLUMNS)?
        .into_iter()
        .map(|(line, r)| {
            Ok(SummaryRow {
                n: field(path, line, "N", &r[0])?,
                g_choice: field(path, line, "g_choice", &r[1])?,
                feasibility_rate: field(path, line, "feasibility_rate", &r[2])?,
                mean_eps_g: opt_field(path, line, "mean_eps_g", &r[3])?,
                median_eps_g: opt_field(path, line, "median_eps_g", &r[4])?,
                n_feasible: field(path, line, "n_feasible", &r[5])?,
                runs: 0,
            })
        })
        .collect::<Result<_>>()?;
    Ok(SummaryTable { rows })
}

/// Writes `records.csv` and `summary.csv` into `dir`.
pub fn emit_csv(output: &MonteCarloOutput, dir: &Path) -> Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let records = dir.join("records.csv");
    let summary = dir.join("summary.csv");
    write_records_csv(&output.records, &records)?;
    write_summary_csv(&output.summary, &summary)?;
    Ok((records, summary))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(bounds: NoiseBounds) -> ExperimentConfig {
        ExperimentConfig {
            noise_bounds: bounds,
            n_list: vec![30],
            repetitions: 2,
            verify_samples: 10,
            ..Default::default()
        }
    }

    #[test]
    fn defaults() {
        let c = ExperimentConfig::default();
        assert_eq!(c.n_list, vec![7, 25, 50, 100, 200, 300]);
        assert_eq!(c.repetitions, 100);
        assert_eq!(c.g_choices.len(), 2);
        assert!(c.reduce);
        assert_eq!(c.eps, 1e-7);
        assert_eq!(c.noise_bounds, NoiseBounds::default());
    }

    #[test]
    fn config_rejects_short_n() {
        let c = ExperimentConfig {
            n_list: vec![6],
            ..Default::default()
        };
        assert!(matches!(Study::new(c), Err(Error::TooFewSamples { min: 7, got: 6 })));
    }

    #[test]
    fn seeds_are_distinct_per_cell() {
        let mut seen = std::collections::HashSet::new();
        for n in [7, 25] {
            for rep in 0..50 {
                for g in [GChoice::MoorePenrose, GChoice::Weighted] {
                    assert!(seen.insert(run_seed(3, n, rep, g)));
                }
            }
        }
        assert_ne!(run_seed(1, 7, 0, GChoice::Weighted), run_seed(2, 7, 0, GChoice::Weighted));
    }

    #[test]
    fn zero_noise_runs_are_exact() {
        let study = Study::new(tiny(NoiseBounds::ZERO)).unwrap();
        let r = run_single(&study, 30, 0, GChoice::Weighted);
        assert_eq!(r.status, RunStatus::Optimal, "{:?}", r.note);
        assert!(r.eps_g.unwrap() <= 1e-3);
    }

    #[test]
    fn single_run_is_deterministic() {
        let study = Study::new(tiny(NoiseBounds::default())).unwrap();
        let a = run_single(&study, 30, 1, GChoice::MoorePenrose);
        let b = run_single(&study, 30, 1, GChoice::MoorePenrose);
        assert!(a.same_outcome(&b));
    }

    #[test]
    fn one_row_per_choice() {
        let mut c = tiny(NoiseBounds::default());
        c.repetitions = 1;
        let out = run_montecarlo(&c, Execution::Sequential).unwrap();
        assert_eq!(out.summary.rows.len(), 2);
        assert_eq!(out.records.len(), 2);
    }

    #[test]
    fn csv_round_trip_and_nulls() {
        let dir = tempfile::tempdir().unwrap();
        let records = vec![
            RunRecord {
                n: 7,
                rep: 0,
                seed: 42,
                g_choice: GChoice::Weighted,
                status: RunStatus::Infeasible,
                gamma: None,
                gamma_true: 0.1 + 0.2,
                eps_g: None,
                solve_time_s: 0.01,
                verification: None,
                note: None,
            },
            RunRecord {
                n: 25,
                rep: 3,
                seed: u64::MAX,
                g_choice: GChoice::MoorePenrose,
                status: RunStatus::Optimal,
                gamma: Some(1.0 / 3.0),
                gamma_true: 0.25,
                eps_g: Some(1.0 / 3.0 * 4.0 - 1.0),
                solve_time_s: 1e-3,
                verification: None,
                note: None,
            },
        ];
        let path = dir.path().join("r.csv");
        write_records_csv(&records, &path).unwrap();
        assert_eq!(read_records_csv(&path).unwrap(), records);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("N,rep,seed,g_choice,status,gamma,gamma_true,eps_g,solve_time_s\n"));
        assert!(text.contains(",infeasible,,"));

        let empty = dir.path().join("e.csv");
        write_records_csv(&[], &empty).unwrap();
        assert_eq!(std::fs::read_to_string(&empty).unwrap().lines().count(), 1);

        let table = summarize(&records);
        let spath = dir.path().join("s.csv");
        write_summary_csv(&table, &spath).unwrap();
        let back = read_summary_csv(&spath).unwrap();
        assert_eq!(back.rows.len(), 2);
        for (a, b) in back.rows.iter().zip(&table.rows) {
            assert_eq!((a.n, a.g_choice, a.n_feasible), (b.n, b.g_choice, b.n_feasible));
            assert_eq!(a.feasibility_rate, b.feasibility_rate);
            assert_eq!(a.median_eps_g, b.median_eps_g);
        }
    }

    #[test]
    fn summary_statistics() {
        let mk = |status, eps: Option<f64>| RunRecord {
            n: 10,
            rep: 0,
            seed: 0,
            g_choice: GChoice::Weighted,
            status,
            gamma: eps.map(|e| 1.0 + e),
            gamma_true: 1.0,
            eps_g: eps,
            solve_time_s: 0.0,
            verification: None,
            note: None,
        };
        let recs = vec![
            mk(RunStatus::Optimal, Some(0.3)),
            mk(RunStatus::Optimal, Some(0.1)),
            mk(RunStatus::Infeasible, None),
            mk(RunStatus::Optimal, Some(0.2)),
        ];
        let t = summarize(&recs);
        let row = &t.rows[0];
        assert_eq!(row.n_feasible, 3);
        assert_eq!(row.runs, 4);
        assert!((row.feasibility_rate - 0.75).abs() < 1e-15);
        assert!((row.median_eps_g.unwrap() - 0.2).abs() < 1e-15);
        assert!((row.mean_eps_g.unwrap() - 0.2).abs() < 1e-12);
    }
}
