use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use derham_galerkin::cli::experiment::{audit_stored, decompose, run_experiment, sweep, ExitStatus, SweepParam};
use derham_galerkin::cli::export::write_json;
use derham_galerkin::cli::parse_config;
use derham_galerkin::derham::Form;
use derham_galerkin::Error;

/// Spectral Faedo–Galerkin solver and audit harness on the flat 3-torus.
///
/// Exit codes: 0 success, 1 other error, 2 blow-up, 3 audit failure, 4 config error.
#[derive(Parser)]
#[command(version, about, long_about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write trajectory.csv, ledger.csv, report.json,
    /// trajectory.json, config.toml and snapshots/ into the output directory.
    Run {
        /// TOML run specification.
        config: PathBuf,
        /// Output directory (overrides [output].dir).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Refinement study: independent runs over dt, K or M.
    Sweep {
        config: PathBuf,
        /// Parameter to vary: dt, K or M.
        #[arg(long)]
        param: SweepParam,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-check a stored trajectory.json against its spec.
    Audit {
        trajectory: PathBuf,
        /// Write the recomputed report here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Split a stored form (JSON) into harmonic, longitudinal and transverse
    /// parts; 2-forms also get the pressure potential of the transverse part.
    Decompose {
        field: PathBuf,
        /// Output JSON (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_spec(path: &Path) -> Result<derham_galerkin::cli::RunSpec, Error> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

fn base_of(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn execute(cmd: Command) -> Result<ExitStatus, Error> {
    match cmd {
        Command::Run { config, out } => {
            let spec = load_spec(&config)?;
            let dir = out.unwrap_or_else(|| spec.output.dir.clone());
            let o = run_experiment(&spec, &base_of(&config), &dir)?;
            let r = &o.report;
            println!(
                "status={:?} final_time={} steps={} energy_residual={:.3e}",
                r.status, r.final_time, r.steps, r.energy.max_abs_residual
            );
            for a in &r.audit.audits {
                println!("  {:<24} {:.3e} <= {:.1e} {}", a.name, a.value, a.tolerance, if a.passed { "ok" } else { "FAIL" });
            }
            if let Some(m) = &r.manufactured {
                println!("  manufactured `{}`: terminal error {:.3e}, max {:.3e}", m.name, m.terminal_error, m.max_error);
            }
            Ok(o.status)
        }
        Command::Sweep {
            config,
            param,
            values,
            out,
        } => {
            let spec = load_spec(&config)?;
            let dir = out.unwrap_or_else(|| spec.output.dir.clone());
            let report = sweep(&spec, &base_of(&config), param, &values, Some(&dir))?;
            print!("{}", report.to_csv());
            Ok(report.status())
        }
        Command::Audit { trajectory, report } => {
            let (block, full) = audit_stored(&trajectory)?;
            for a in &block.audits {
                println!("{:<24} {:.3e} <= {:.1e} {}", a.name, a.value, a.tolerance, if a.passed { "ok" } else { "FAIL" });
            }
            if let Some(p) = report {
                write_json(&p, &full)?;
            }
            Ok(if block.passed { ExitStatus::Success } else { ExitStatus::AuditFailure })
        }
        Command::Decompose { field, out } => {
            let text = std::fs::read_to_string(&field)?;
            let form: Form =
                serde_json::from_str(&text).map_err(|e| Error::MalformedField(format!("{}: {e}", field.display())))?;
            let d = decompose(&form)?;
            match out {
                Some(p) => write_json(&p, &d)?,
                None => println!("{}", serde_json::to_string_pretty(&d).expect("serializable")),
            }
            Ok(ExitStatus::Success)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let status = match execute(cli.command) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            ExitStatus::for_error(&e)
        }
    };
    ExitCode::from(status.code() as u8)
}
