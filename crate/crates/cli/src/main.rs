//! tauloc: restriction of proper-time four-position variables to observation
//! surfaces, at the command line.
//!
//! Exit codes: 0 success, 1 verification-suite failure, 2 usage/config
//! error, 3 numerical-domain error. All outputs are CSV files with JSON
//! sidecars carrying the config hash; identical invocations produce
//! byte-identical artifacts.

use clap::{Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use tauloc_core::config::Config;
use tauloc_core::error::Error;
use tauloc_core::experiments;
use tauloc_core::nwmap::nw_transform;
use tauloc_core::report::ExperimentReport;
use tauloc_core::state::MomentumState;

#[derive(Parser)]
#[command(name = "tauloc", version, about = "proper-time localization toolkit")]
struct Cli {
    /// Flat key = value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory for CSV/JSON artifacts.
    #[arg(long, default_value = "out", global = true)]
    out: PathBuf,

    /// Override a config key (repeatable): --set grid.n=64
    #[arg(long = "set", global = true)]
    set: Vec<String>,

    /// Worker threads (0 = automatic).
    #[arg(long, default_value_t = 0, global = true)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full invariant-verification suite.
    Verify,
    /// Classical bracket and restriction residuals at sampled points.
    ClassicalCheck,
    /// Newton-Wigner position density along the z axis.
    NwDensity,
    /// Out-of-cone probability scan for a bump-localized state.
    HegLeakage,
    /// Detection-time density and temporal spread.
    TimePovm,
    /// Detection-time scan over detector planes.
    KijowskiArrival,
    /// Save a state to the flat binary format and verify the round trip.
    StateIo,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            let code = e.exit_code();
            let diag = serde_json::json!({
                "error": format!("{e}"),
                "kind": error_kind(&e),
                "exit_code": code,
            });
            eprintln!("{diag}");
            ExitCode::from(code as u8)
        }
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Config(_) | Error::InvalidInput(_) | Error::Io(_) => "config",
        Error::LocalizationFailure(_) => "localization-failure",
        _ => "numerical-domain",
    }
}

fn run(cli: &Cli) -> Result<u8, Error> {
    if cli.threads > 0 {
        // ignore failure when a pool is already installed (tests)
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global();
    }
    let mut cfg = match &cli.config {
        Some(path) => Config::from_file(path)?,
        None => Config::parse("")?,
    };
    for spec in &cli.set {
        cfg.set_override(spec)?;
    }
    std::fs::create_dir_all(&cli.out)?;

    match cli.command {
        Command::Verify => {
            let report = experiments::verify_suite(&cfg)?;
            report.write_checks_csv(&cli.out.join("verify.csv"))?;
            report.write_sidecar(&cli.out.join("verify.json"))?;
            print_checks(&report);
            if report.all_pass() {
                Ok(0)
            } else {
                Ok(1)
            }
        }
        Command::ClassicalCheck => {
            let report = classical_check(&cfg)?;
            finish(&report, &cli.out, "classical_check")?;
            Ok(0)
        }
        Command::NwDensity => {
            let report = nw_density(&cfg)?;
            finish(&report, &cli.out, "nw_density")?;
            Ok(0)
        }
        Command::HegLeakage => {
            let report = experiments::hegerfeldt_leakage(&cfg)?;
            finish(&report, &cli.out, "heg_leakage")?;
            Ok(0)
        }
        Command::TimePovm => {
            let report = time_povm(&cfg)?;
            finish(&report, &cli.out, "time_povm")?;
            let spread = experiments::temporal_spread_report(&cfg)?;
            finish(&spread, &cli.out, "temporal_spread")?;
            Ok(0)
        }
        Command::KijowskiArrival => {
            let report = experiments::kijowski_arrival_scan(&cfg)?;
            finish(&report, &cli.out, "kijowski_arrival")?;
            Ok(0)
        }
        Command::StateIo => {
            let report = state_io(&cfg, &cli.out)?;
            finish(&report, &cli.out, "state_io")?;
            Ok(0)
        }
    }
}

fn finish(report: &ExperimentReport, out: &Path, stem: &str) -> Result<(), Error> {
    report.write_rows_csv(&out.join(format!("{stem}.csv")))?;
    report.write_sidecar(&out.join(format!("{stem}.json")))?;
    println!(
        "{stem}: {} rows, runtime {:.2}s, artifacts in {}",
        report.rows.len(),
        report.metadata.runtime_seconds,
        out.display()
    );
    Ok(())
}

fn print_checks(report: &ExperimentReport) {
    for c in &report.checks {
        if c.informational {
            println!("INFO {:<45} {:.3e}", c.name, c.residual);
        } else {
            println!(
                "{} {:<45} residual {:.3e} (tol {:.1e})",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                c.residual,
                c.threshold
            );
        }
    }
}

fn classical_check(cfg: &Config) -> Result<ExperimentReport, Error> {
    let start = std::time::Instant::now();
    let mut report = ExperimentReport::new("classical-check", cfg);
    let n = cfg.usize_or("classical.points", 20)?;
    let mut rng = tauloc_core::util::Sampler::new(cfg.usize_or("classical.seed", 7)? as u64);
    let u = tauloc_core::fourvec::FourVector::new(1.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        let pt = experiments::random_on_shell(&mut rng);
        let (a, b, c) = experiments::bracket_residuals(&pt, &u, 0.5)?;
        report.push_row(i as f64, a.max(b).max(c), 1e-6);
    }
    report.metadata.runtime_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

fn nw_density(cfg: &Config) -> Result<ExperimentReport, Error> {
    let start = std::time::Instant::now();
    let mut report = ExperimentReport::new("nw-density", cfg);
    let grid = experiments::build_grid(cfg)?;
    let state = experiments::build_state(cfg, grid.clone())?;
    let t = cfg.f64_or("nw.t", 0.0)?;
    let field = nw_transform(&state, t);
    report
        .metadata
        .defects
        .insert("total_probability_defect".into(), (field.total_probability() - 1.0).abs());
    // density along the z axis through x = y = 0
    let n1 = grid.axes[0].n / 2;
    let n2 = grid.axes[1].n / 2;
    for k in 0..grid.axes[2].n {
        let idx = grid.index(n1, n2, k);
        let z = grid.axes[2].dual_node(k);
        report.push_row(z, field.amp[idx].norm_sqr(), 0.0);
    }
    report.metadata.runtime_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

fn time_povm(cfg: &Config) -> Result<ExperimentReport, Error> {
    let start = std::time::Instant::now();
    let mut report = ExperimentReport::new("time-povm", cfg);
    let mass = cfg.f64_or("grid.mass", 1.0)?;
    let n_r = cfg.usize_or("povm.n_r", 2048)?;
    let l_max = cfg.usize_or("povm.l_max", 8)? as u32;
    let tau = cfg.f64_or("povm.tau", 0.0)?;
    let center = cfg.f64_or("povm.center", 2.0)?;
    let width = cfg.f64_or("povm.width", 0.4)?;
    let xi = experiments::energy_sign(cfg)?;
    let rgrid = std::sync::Arc::new(tauloc_core::radial::RadialGrid::new(
        n_r,
        1e-3 * mass,
        cfg.f64_or("povm.r_max", 14.0)?,
        mass,
    )?);
    let (mut rad, decomp) = tauloc_core::radial::RadialState::from_closure(
        rgrid,
        xi,
        l_max,
        move |p| {
            let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
            tauloc_core::Complex64::new(
                (-(r - center) * (r - center) / (2.0 * width * width)).exp(),
                0.0,
            )
        },
    );
    let s = 1.0 / rad.norm_sqr().sqrt();
    for c in &mut rad.coeffs {
        for v in c.iter_mut() {
            *v *= s;
        }
    }
    let unc = tauloc_core::povm::time_uncertainty(&rad, tau, l_max)?;
    let half = 6.0 * unc.delta;
    let n_t = cfg.usize_or("povm.n_t", 801)?;
    let t_grid: Vec<f64> = (0..n_t)
        .map(|k| unc.mean - half + 2.0 * half * k as f64 / (n_t - 1) as f64)
        .collect();
    let dist = tauloc_core::povm::time_distribution(&rad, tau, l_max, &t_grid)?;
    for (t, p) in dist.t.iter().zip(&dist.p) {
        report.push_row(*t, *p, 0.0);
    }
    report
        .metadata
        .defects
        .insert("completeness_defect".into(), dist.completeness_defect);
    report.metadata.defects.insert("mean_t".into(), unc.mean);
    report.metadata.defects.insert("delta_t".into(), unc.delta);
    report
        .metadata
        .truncations
        .insert("l_max".into(), format!("{}", dist.l_max_used));
    report
        .metadata
        .truncations
        .insert("decomposition_error".into(), format!("{:.3e}", decomp.truncation_error));
    report.metadata.runtime_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

fn state_io(cfg: &Config, out: &Path) -> Result<ExperimentReport, Error> {
    let start = std::time::Instant::now();
    let mut report = ExperimentReport::new("state-io", cfg);
    let grid = experiments::build_grid(cfg)?;
    let state = experiments::build_state(cfg, grid)?;
    let path = out.join("state.bin");
    state.save(&path)?;
    let loaded = MomentumState::load(&path)?;
    let mut max_diff = 0.0f64;
    for (a, b) in state.amp.iter().zip(&loaded.amp) {
        max_diff = max_diff.max((a - b).norm());
    }
    report.push_row(0.0, max_diff, 0.0);
    report
        .metadata
        .defects
        .insert("roundtrip_max_diff".into(), max_diff);
    if max_diff != 0.0 {
        return Err(Error::NumericalDomain("state round trip not bit-exact".into()));
    }
    report.metadata.runtime_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}
