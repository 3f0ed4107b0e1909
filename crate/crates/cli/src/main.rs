//! `simtri`: analyze, triangularize and verify matrix families from JSON files.

mod commands;
mod error;
mod family;
mod report;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use simtri_core::certify::InstanceKind;
use simtri_core::matcore::ToleranceOverrides;

use commands::{Mode, Settings};
use error::CliError;
use report::RunReport;

#[derive(Parser)]
#[command(name = "simtri", version, about = "Simultaneous triangularization with verifiable certificates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct TolArgs {
    /// Singular values at or below this are treated as zero.
    #[arg(long)]
    rank_tol: Option<f64>,
    /// Eigenvalues closer than this are clustered.
    #[arg(long)]
    eig_tol: Option<f64>,
    /// Relative residual below which a matrix counts as zero.
    #[arg(long)]
    zero_tol: Option<f64>,
}

impl TolArgs {
    fn overrides(&self) -> ToleranceOverrides {
        ToleranceOverrides {
            rank_tol: self.rank_tol,
            eig_cluster_tol: self.eig_tol,
            zero_tol: self.zero_tol,
        }
    }
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Family file.
    path: PathBuf,
    #[command(flatten)]
    tol: TolArgs,
    /// Deepest commutator layer examined.
    #[arg(long)]
    max_depth: Option<usize>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn settings(&self) -> Settings {
        Settings {
            overrides: self.tol.overrides(),
            max_depth: self.max_depth,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the commutation predicates.
    Check(RunArgs),
    /// Produce a verified triangularization certificate.
    Triangularize {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum, default_value = "auto")]
        mode: Mode,
    },
    /// Generated algebra, Jacobson radical and quotient.
    Algebra(RunArgs),
    /// Re-verify stored reports.
    Verify {
        #[arg(required = true)]
        reports: Vec<PathBuf>,
        #[command(flatten)]
        tol: TolArgs,
    },
    /// Write a seeded test family.
    Generate {
        #[arg(long)]
        kind: InstanceKind,
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Break the predicate the kind is built to satisfy.
        #[arg(long)]
        violate: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>, summary: &str) -> Result<(), CliError> {
    let json = serde_json::to_string_pretty(value).expect("reports serialize");
    match out {
        Some(p) => {
            fs::write(p, json + "\n").map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?;
            println!("{summary}");
            println!("wrote {}", p.display());
        }
        None => {
            // a closed pipe (`simtri check f | head`) is not an error
            let _ = writeln!(std::io::stdout().lock(), "{json}");
        }
    }
    Ok(())
}

fn summarize(r: &RunReport) -> String {
    let c = &r.conditions;
    let mut s = format!(
        "{}: L-nilpotent length {}, commuting {}",
        r.command,
        c.l_nilpotent_length.map_or("none".into(), |k| k.to_string()),
        c.commuting
    );
    if let Some(p) = &c.pair {
        s += &format!(
            ", A[A,B] residual {:.3e}, [A,B]B residual {:.3e}",
            p.residual_norms.a_times_commutator, p.residual_norms.commutator_times_b
        );
    }
    if !r.verification.is_empty() {
        s += if r.verified() { ", verified" } else { ", VERIFICATION FAILED" };
    }
    s
}

fn finish(report: RunReport, out: Option<&Path>) -> Result<(), CliError> {
    emit(&report, out, &summarize(&report))?;
    if report.verified() {
        Ok(())
    } else {
        let failed: Vec<String> = report
            .verification
            .iter()
            .flat_map(|v| v.failures().into_iter().map(move |c| format!("{}: {}", v.context, c.name)))
            .collect();
        Err(CliError::Failure(format!("verification failed: {}", failed.join(", "))))
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Check(a) => finish(commands::cmd_check(&a.path, &a.settings())?, a.out.as_deref()),
        Command::Triangularize { run, mode } => {
            finish(commands::cmd_triangularize(&run.path, mode, &run.settings())?, run.out.as_deref())
        }
        Command::Algebra(a) => finish(commands::cmd_algebra(&a.path, &a.settings())?, a.out.as_deref()),
        Command::Verify { reports, tol } => {
            let results = commands::cmd_verify(&reports, &tol.overrides())?;
            let mut ok = true;
            for (path, r) in reports.iter().zip(&results) {
                let t = &r.tolerances;
                let o = &r.report_tolerances;
                println!("{}", path.display());
                println!(
                    "  report tolerances: rank {:e}, eig {:e}, zero {:e}",
                    o.rank_tol, o.eig_cluster_tol, o.zero_tol
                );
                println!(
                    "  verified at:       rank {:e}, eig {:e}, zero {:e}",
                    t.rank_tol, t.eig_cluster_tol, t.zero_tol
                );
                for v in &r.reports {
                    println!("  {}: {}", v.context, if v.overall { "PASS" } else { "FAIL" });
                    for c in v.failures() {
                        println!("    {} residual {:.3e} > {:.3e}", c.name, c.residual, c.threshold);
                    }
                }
                ok &= r.passed();
            }
            if ok {
                Ok(())
            } else {
                Err(CliError::Failure("verification failed".into()))
            }
        }
        Command::Generate {
            kind,
            dim,
            seed,
            violate,
            out,
        } => {
            let file = commands::cmd_generate(kind, dim, seed, violate)?;
            let summary = format!(
                "{kind} instance, dim {dim}, seed {seed}{}",
                if violate { ", violated" } else { "" }
            );
            emit(&file, out.as_deref(), &summary)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("simtri: {e}");
            e.exit_code()
        }
    }
}
