use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use eiv_h2::analysis::{self, GChoice, ReductionOutcome};
use eiv_h2::montecarlo::{self, emit_csv, load_system_file, ExperimentConfig, Execution, BUILTIN_SYSTEM};
use eiv_h2::sdp::ClarabelBackend;
use eiv_h2::sim::{self, corrupt, random_experiment};
use eiv_h2::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "eiv-h2", version, about = "Robust H2 bounds from noisy trajectory data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate one noisy dataset per N of the config.
    Simulate(Common),
    /// Bound the H2 norm of every system consistent with a dataset.
    Analyze {
        /// Dataset CSV (a `.truth.json` sidecar next to it is optional).
        dataset: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// H2 norm of a system given by a JSON file (default: the built-in example).
    TruthH2 {
        system: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Run the Monte Carlo study and write records and summary CSVs.
    Montecarlo(Common),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum GArg {
    #[value(name = "moore_penrose")]
    MoorePenrose,
    #[value(name = "weighted")]
    Weighted,
}

impl From<GArg> for GChoice {
    fn from(g: GArg) -> Self {
        match g {
            GArg::MoorePenrose => GChoice::MoorePenrose,
            GArg::Weighted => GChoice::Weighted,
        }
    }
}

#[derive(Args, Debug)]
struct Common {
    /// Experiment config (JSON); built-in defaults when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Overrides the master seed of the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Restricts the right inverse to one choice.
    #[arg(long, value_enum)]
    g: Option<GArg>,
    /// Keeps the unreduced uncertainty channels.
    #[arg(long)]
    no_reduce: bool,
    /// Worker threads for the Monte Carlo study.
    #[arg(long)]
    jobs: Option<usize>,
}

impl Common {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::from_json_file(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.master_seed = s;
        }
        if let Some(g) = self.g {
            cfg.g_choices = vec![g.into()];
        }
        if self.no_reduce {
            cfg.reduce = false;
        }
        if let Some(p) = &self.config {
            // Relative system paths are taken from the config's directory.
            if cfg.system != BUILTIN_SYSTEM && Path::new(&cfg.system).is_relative() {
                if let Some(dir) = p.parent() {
                    cfg.system = dir.join(&cfg.system).to_string_lossy().into_owned();
                }
            }
        }
        Ok(cfg)
    }

    fn out_dir(&self) -> Result<&Path> {
        std::fs::create_dir_all(&self.out).map_err(|e| Error::Io {
            path: self.out.clone(),
            source: e,
        })?;
        Ok(&self.out)
    }
}

fn write_json(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn simulate(common: &Common) -> Result<()> {
    let cfg = common.config()?;
    let sys = cfg.load_system()?;
    cfg.validate(&sys)?;
    let out = common.out_dir()?;
    for &n in &cfg.n_list {
        let seed = montecarlo::run_seed(cfg.master_seed, n, 0, GChoice::Weighted);
        let traj = random_experiment(&sys, n, cfg.noise_bounds.d_bar, seed)?;
        let data = corrupt(&traj, &cfg.noise_bounds, seed ^ 0x9e37_79b9_7f4a_7c15)?.with_system(&sys);
        let path = out.join(format!("dataset_N{n}.csv"));
        sim::write_dataset(&data, &path)?;
        println!("{}", path.display());
    }
    Ok(())
}

fn analyze(dataset: &Path, common: &Common) -> Result<bool> {
    let cfg = common.config()?;
    let data = sim::read_dataset(dataset)?;
    let sys = match data.truth.as_ref().and_then(|t| t.system.clone()) {
        Some(s) if common.config.is_none() => s,
        _ => cfg.load_system()?,
    };
    let bounds = match data.truth.as_ref().and_then(|t| t.bounds) {
        Some(b) if common.config.is_none() => b,
        _ => cfg.noise_bounds,
    };
    let ar = analysis::build_analysis_regression(&data, &sys.bd, &bounds)?;
    if !ar.snr.ok {
        eprintln!(
            "warning: signal-to-noise margin {:e} is not positive; invertibility of the regressor is not certified",
            ar.snr.margin
        );
    }
    let choice = cfg.g_choices.first().copied().unwrap_or(GChoice::Weighted);
    let ginv = analysis::right_inverse(&ar, choice)?;
    if ginv.used != ginv.requested {
        eprintln!(
            "note: {} right inverse unavailable (singular weight), using {}",
            ginv.requested.as_str(),
            ginv.used.as_str()
        );
    }
    let lft = analysis::assemble_analysis_lft(&ar, &ginv.g, cfg.reduce)?;
    for entry in &lft.reduction_log {
        if let ReductionOutcome::RankFallback { sigma_min, .. } = entry.outcome {
            eprintln!("note: {} kept unreduced (sigma_min {sigma_min:e})", entry.label);
        }
    }
    let (_, cert) = analysis::robust_h2_bound(&lft, cfg.eps, &ClarabelBackend, &cfg.solver_options())?;
    let out = common.out_dir()?;
    let cert_path = out.join("certificate.json");
    write_json(&cert_path, &cert.to_json())?;
    println!("status: {}", cert.status.as_str());
    let Some(gamma) = cert.gamma else {
        println!("certificate: {}", cert_path.display());
        return Ok(true);
    };
    let report = analysis::verify_certificate(&lft, &cert, cfg.eps, cfg.verify_samples, cfg.master_seed)?;
    let report_path = out.join("verification.json");
    write_json(
        &report_path,
        &serde_json::to_string_pretty(&report).expect("report serializes"),
    )?;
    println!("gamma: {gamma}");
    println!("verified: {}", report.ok);
    println!("certificate: {}", cert_path.display());
    for f in &report.failures {
        eprintln!("verification failure: {f}");
    }
    Ok(report.ok)
}

fn truth_h2(system: Option<&Path>, common: &Common) -> Result<()> {
    let sys = match system {
        Some(p) => load_system_file(p)?,
        None => common.config()?.load_system()?,
    };
    println!("{}", eiv_h2::true_h2(&sys)?);
    Ok(())
}

fn run_montecarlo(common: &Common) -> Result<()> {
    let cfg = common.config()?;
    let exec = Execution::Parallel { jobs: common.jobs };
    let output = montecarlo::run_montecarlo(&cfg, exec)?;
    let (records, summary) = emit_csv(&output, common.out_dir()?)?;
    println!("N,g_choice,feasibility_rate,median_eps_g");
    for row in &output.summary.rows {
        let median = row.median_eps_g.map(|v| format!("{v:.4}")).unwrap_or_default();
        println!("{},{},{:.2},{}", row.n, row.g_choice.as_str(), row.feasibility_rate, median);
    }
    println!("records: {}", records.display());
    println!("summary: {}", summary.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(c) => simulate(c).map(|_| true),
        Command::Analyze { dataset, common } => analyze(dataset, common),
        Command::TruthH2 { system, common } => truth_h2(system.as_deref(), common).map(|_| true),
        Command::Montecarlo(c) => run_montecarlo(c).map(|_| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
