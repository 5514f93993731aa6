//! `nematic`: run Q-tensor gradient flows and the diagnostics on them.
//!
//! Exit codes: 0 success, 1 other failure, 2 invalid configuration or
//! arguments, 3 solver stall, 4 file system error. Failures print one JSON
//! object `{"error", "message", "exit_code"}` on stderr.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nalgebra::Matrix3;
use serde_json::json;

use nematic_core::config::RunConfig;
use nematic_core::diagnostics::{
    blowup_rate_scan, contact_report, gamma_study, grad_decay_check, h2_bound_check, mean_deviation_check,
    BlowupScanSpec, BLOWUP_COLUMNS,
};
use nematic_core::elastic::{mode_operator, ElasticParams};
use nematic_core::flow::{energy_identity_residual, run_with};
use nematic_core::initial::generate_initial;
use nematic_core::io::{read_snapshot, write_series_csv, write_snapshot};
use nematic_core::potential::{psi, psi_grad};
use nematic_core::tensor::margin_of;
use nematic_core::{Error, QTensor};

#[derive(Parser)]
#[command(name = "nematic", version, about = "Landau-de Gennes Q-tensor gradient flows on the periodic torus")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output_dir` of the configuration.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// `key=value` applied on top of the configuration file.
    #[arg(long = "override", global = true)]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one trajectory and write its time series, snapshots and summary.
    Run,
    /// Tabulate psi and |psi'| over the eigenvalue triangle.
    CheckPotential {
        /// Subdivisions per eigenvalue direction.
        #[arg(long, default_value_t = 8)]
        steps: usize,
    },
    /// Tabulate the elastic symbol spectrum at every mode of the grid.
    CheckElastic,
    /// Tabulate |psi'| (lambda_1 + 1/3) as the smallest eigenvalue approaches -1/3.
    ScanBlowup,
    /// Box-counting dimension of near-contact sets of a field.
    Boxdim {
        /// Snapshot header to analyse; without it the configured run is computed
        /// and its final field used.
        #[arg(long)]
        snapshot: Option<PathBuf>,
    },
    /// Envelope flows for each `gamma.n_list` entry against the singular flow.
    GammaStudy,
}

struct Failure {
    code: u8,
    kind: &'static str,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let (code, kind) = match &e {
            Error::Config(_) | Error::InvalidParams(_) => (2, "config"),
            Error::StepStall { .. } | Error::InnerNonConvergence { .. } => (3, "stall"),
            Error::Io(_) => (4, "io"),
            _ => (1, "solver"),
        };
        Failure { code, kind, message: e.to_string() }
    }
}

type CliResult<T> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", json!({ "error": f.kind, "message": f.message, "exit_code": f.code }));
            ExitCode::from(f.code)
        }
    }
}

fn execute(cli: &Cli) -> CliResult<()> {
    if let Some(k) = cli.common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| Failure { code: 2, kind: "config", message: e.to_string() })?;
    }
    match &cli.command {
        Command::Run => cmd_run(&cli.common),
        Command::CheckPotential { steps } => cmd_check_potential(&cli.common, *steps),
        Command::CheckElastic => cmd_check_elastic(&cli.common),
        Command::ScanBlowup => cmd_scan_blowup(&cli.common),
        Command::Boxdim { snapshot } => cmd_boxdim(&cli.common, snapshot.as_deref()),
        Command::GammaStudy => cmd_gamma(&cli.common),
    }
}

fn load(common: &Common) -> CliResult<RunConfig> {
    let Some(path) = &common.config else {
        return Err(Failure { code: 2, kind: "config", message: "this subcommand needs --config".into() });
    };
    Ok(RunConfig::load(path, &common.overrides)?)
}

fn load_optional(common: &Common) -> CliResult<Option<RunConfig>> {
    match &common.config {
        Some(_) => load(common).map(Some),
        None if common.overrides.is_empty() => Ok(None),
        None => Err(Failure { code: 2, kind: "config", message: "--override needs --config".into() }),
    }
}

fn output_dir(common: &Common, cfg: Option<&RunConfig>) -> CliResult<PathBuf> {
    let dir = common
        .output
        .clone()
        .or_else(|| cfg.map(|c| c.output_dir.clone()))
        .unwrap_or_else(|| PathBuf::from("output"));
    fs::create_dir_all(&dir).map_err(|e| io_failure(&dir, e))?;
    Ok(dir)
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure::from(Error::Io(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| io_failure(path, e))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::from(Error::from(e)))?;
    text.push('\n');
    write(path, &text)
}

fn cmd_run(common: &Common) -> CliResult<()> {
    let cfg = load(common)?;
    let dir = output_dir(common, Some(&cfg))?;
    let grid = cfg.grid()?;
    let q0 = generate_initial(&cfg.initial, grid, cfg.seed)?;
    let traj = run_with(&q0, cfg.horizon, &cfg.scheme, &cfg.params, cfg.snapshot_every)?;
    let hash = cfg.hash();
    write(&dir.join("config.toml"), &cfg.to_canonical_string())?;
    write_series_csv(&dir.join("series.csv"), &traj.rows)?;
    let snap_dir = dir.join("snapshots");
    for s in &traj.snapshots {
        write_snapshot(&snap_dir, &format!("step_{:08}", s.step), s, &hash)?;
    }
    let last_t = traj.rows.last().map_or(0.0, |r| r.t);
    let summary = json!({
        "config_hash": hash,
        "steps": traj.rows.len() - 1,
        "t_final": last_t,
        "stall": traj.stall.as_ref().map(|e| e.to_string()),
        "energy_identity": energy_identity_residual(&traj, 0.0, last_t),
        "decay": grad_decay_check(&traj, &cfg.params),
        "h2": h2_bound_check(&traj, &cfg.params, traj.rows[0].energy),
        "mean_deviation": mean_deviation_check(&traj),
    });
    write_json(&dir.join("summary.json"), &summary)?;
    if let Some(e) = traj.stall {
        return Err(e.into());
    }
    println!("{}", json!({ "output": dir, "steps": traj.rows.len() - 1, "t_final": last_t }));
    Ok(())
}

fn cmd_check_potential(common: &Common, steps: usize) -> CliResult<()> {
    let cfg = load_optional(common)?;
    let dir = output_dir(common, cfg.as_ref())?;
    let steps = steps.max(1);
    let mut triples = vec![[0.0; 3]];
    for i in 1..=steps {
        let l1 = -1.0 / 3.0 + (1.0 / 3.0) * i as f64 / (steps + 1) as f64;
        for j in 0..=steps {
            let l2 = l1 + (j as f64 / steps as f64) * (-1.5 * l1);
            triples.push([l1, l2, -l1 - l2]);
        }
    }
    let mut csv = String::from("lambda1,lambda2,lambda3,psi,grad_norm,margin\n");
    for l in triples {
        let q = QTensor::from_eigen(l, &Matrix3::identity())?;
        let value = psi(&q)?;
        let g = psi_grad(&q)?.norm();
        writeln!(csv, "{:e},{:e},{:e},{:e},{:e},{:e}", l[0], l[1], l[2], value, g, margin_of(&l)).unwrap();
    }
    let path = dir.join("check_potential.csv");
    write(&path, &csv)?;
    println!("{}", json!({ "output": path }));
    Ok(())
}

fn cmd_check_elastic(common: &Common) -> CliResult<()> {
    let cfg = load(common)?;
    let dir = output_dir(common, Some(&cfg))?;
    let grid = cfg.grid()?;
    let p: ElasticParams = cfg.params;
    let mut csv = String::from("kx,ky,kz,min_eig,max_eig,lower_bound,upper_bound\n");
    let mut ok = true;
    for idx in 0..grid.points() {
        let k = grid.wavevector(idx);
        let eig = mode_operator(k, &p).symmetric_eigenvalues();
        let (lo, hi) = (eig.min(), eig.max());
        let (lb, ub) = p.spectrum_bounds(grid.k_sq(idx));
        let tol = 1e-12 * ub.max(1e-300);
        ok &= lo >= lb - tol && hi <= ub + tol;
        writeln!(csv, "{:e},{:e},{:e},{:e},{:e},{:e},{:e}", k[0], k[1], k[2], lo, hi, lb, ub).unwrap();
    }
    let path = dir.join("check_elastic.csv");
    write(&path, &csv)?;
    println!("{}", json!({ "output": path, "within_bounds": ok }));
    Ok(())
}

fn cmd_scan_blowup(common: &Common) -> CliResult<()> {
    let cfg = load_optional(common)?;
    let dir = output_dir(common, cfg.as_ref())?;
    let spec = cfg.as_ref().map_or_else(BlowupScanSpec::default, |c| c.scan);
    let table = blowup_rate_scan(&spec)?;
    let mut csv = BLOWUP_COLUMNS.join(",");
    csv.push('\n');
    for r in &table.rows {
        writeln!(
            csv,
            "{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{}",
            r.configuration, r.shape, r.margin, r.lambda[0], r.lambda[1], r.lambda[2], r.grad_norm, r.product, r.in_window
        )
        .unwrap();
    }
    let path = dir.join("scan_blowup.csv");
    write(&path, &csv)?;
    println!("{}", json!({ "output": path, "c1": table.c1, "min_product": table.min_product, "holds": table.holds }));
    Ok(())
}

fn cmd_boxdim(common: &Common, snapshot: Option<&Path>) -> CliResult<()> {
    let cfg = load_optional(common)?;
    let dir = output_dir(common, cfg.as_ref())?;
    let (field, t) = match (snapshot, &cfg) {
        (Some(p), _) => {
            let (_, s) = read_snapshot(p)?;
            (s.field, s.t)
        }
        (None, Some(c)) => {
            let q0 = generate_initial(&c.initial, c.grid()?, c.seed)?;
            let traj = run_with(&q0, c.horizon, &c.scheme, &c.params, usize::MAX)?;
            if let Some(e) = traj.stall {
                return Err(e.into());
            }
            (traj.last.field, traj.last.t)
        }
        (None, None) => {
            return Err(Failure { code: 2, kind: "config", message: "boxdim needs --snapshot or --config".into() });
        }
    };
    let (epsilons, betas) = match &cfg {
        Some(c) => (c.boxdim.epsilons.clone(), c.boxdim.betas.clone()),
        None => (vec![1e-3], nematic_core::diagnostics::DEFAULT_BETAS.to_vec()),
    };
    let reports = contact_report(&field, &epsilons, &betas)?;
    let mut csv = String::from("epsilon,cells,r,count\n");
    for r in &reports {
        for b in &r.box_counts {
            writeln!(csv, "{:e},{},{:e},{}", r.epsilon, b.cells, b.r, b.count).unwrap();
        }
    }
    let path = dir.join("boxdim.csv");
    write(&path, &csv)?;
    write_json(&dir.join("boxdim.json"), &json!({ "t": t, "reports": reports }))?;
    let dims: Vec<Option<f64>> = reports.iter().map(|r| r.dim_estimate).collect();
    println!("{}", json!({ "output": path, "dim_estimates": dims }));
    Ok(())
}

fn cmd_gamma(common: &Common) -> CliResult<()> {
    let cfg = load(common)?;
    let dir = output_dir(common, Some(&cfg))?;
    let q0 = generate_initial(&cfg.initial, cfg.grid()?, cfg.seed)?;
    let report = gamma_study(&q0, cfg.horizon, &cfg.gamma_n_list, &cfg.scheme, &cfg.params)?;
    let path = dir.join("gamma.json");
    write_json(&path, &report)?;
    println!(
        "{}",
        json!({
            "output": path,
            "distance_monotone": report.distance_monotone,
            "excess_monotone": report.excess_monotone,
            "speed_monotone": report.speed_monotone,
        })
    );
    Ok(())
}

