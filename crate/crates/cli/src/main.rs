// SPDX-License-Identifier: Apache-2.0

//! `bergman`: weighted Bergman kernels, Hartogs domains and uniqueness checks
//! from the command line.
//!
//! Exit status is 0 for a computation or a passing verdict, 1 for a failing
//! verdict and 2 for usage, configuration or runtime errors.

mod commands;
mod config;
mod descriptors;
mod report;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::{merge, Flags, RunConfig};
use crate::report::{emit_report, Report};

#[derive(Parser)]
#[command(name = "bergman", version, about = "Weighted Bergman kernels and Hartogs domain checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Gram matrix of the monomial basis
    Gram(Flags),
    /// Evaluate a weighted kernel on all pairs of a point set
    KernelEval(Flags),
    /// Forelli-Rudin series with restriction and ball checks
    FrcCheck(Flags),
    /// Kernel transformation law under automorphisms
    TransformCheck(Flags),
    /// Closed-form Jacobians against finite differences
    JacobianCheck(Flags),
    /// Difference of two moment tables
    MomentMismatch(Flags),
    /// Radial profile from moments
    RecoverWeight(Flags),
    /// Is the weight Gaussian? (ℂⁿ base)
    CharacterizeFbh(Flags),
    /// Is the weight a generic-norm power? (disk or ball base)
    CharacterizeCh(Flags),
    /// p(z) e^{μ‖z‖²} ≤ p(0) on samples
    BoundaryCheck(Flags),
    /// Automorphism family condition on a Hartogs domain
    FamilyCheck(Flags),
}

fn threads(cfg: &RunConfig) -> Result<(), String> {
    let n = match cfg.threads {
        Some(n) => Some(n),
        None => match std::env::var("BERGMAN_THREADS") {
            Ok(s) => Some(
                s.parse::<usize>()
                    .ok()
                    .filter(|&n| n > 0)
                    .ok_or_else(|| format!("BERGMAN_THREADS: expected a positive integer, got `{s}`"))?,
            ),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| format!("threads: {e}"))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<i32, String> {
    let (name, flags, f): (&str, Flags, fn(&RunConfig) -> Result<Report, String>) = match cli.command {
        Command::Gram(a) => ("gram", a, commands::gram),
        Command::KernelEval(a) => ("kernel-eval", a, commands::kernel_eval_cmd),
        Command::FrcCheck(a) => ("frc-check", a, commands::frc_check),
        Command::TransformCheck(a) => ("transform-check", a, commands::transform_check),
        Command::JacobianCheck(a) => ("jacobian-check", a, commands::jacobian_check),
        Command::MomentMismatch(a) => ("moment-mismatch", a, commands::mismatch),
        Command::RecoverWeight(a) => ("recover-weight", a, commands::recover),
        Command::CharacterizeFbh(a) => ("characterize-fbh", a, commands::char_fbh),
        Command::CharacterizeCh(a) => ("characterize-ch", a, commands::char_ch),
        Command::BoundaryCheck(a) => ("boundary-check", a, commands::boundary),
        Command::FamilyCheck(a) => ("family-check", a, commands::family),
    };
    let cfg = merge(name, flags)?;
    threads(&cfg)?;
    let report = f(&cfg)?;
    emit_report(&report, cfg.format, cfg.out.as_deref())?;
    Ok(report.outcome.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(msg) => {
            eprintln!("bergman: {msg}");
            ExitCode::from(2)
        }
    }
}
