use cfie::config::RunConfig;
use cfie::experiments::{run, Command, RunOptions};
use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

/// Operator-preconditioned CFIE solver for perfectly conducting scatterers.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// TOML run configuration (defaults are used for missing keys).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output.dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Write generated meshes in OFF format to this path.
    #[arg(long, global = true)]
    mesh_out: Option<PathBuf>,
    /// Write assembled matrices (binary) below this directory.
    #[arg(long, global = true)]
    dump_matrices: Option<PathBuf>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Print mesh statistics for every configured meshwidth.
    MeshInfo,
    /// Field error against the Mie series over meshwidths and κ′/κ ratios.
    Convergence,
    /// Condition numbers and iteration counts over meshwidths.
    SweepH,
    /// Condition numbers and iteration counts over wavenumbers.
    SweepKappa,
    /// Condition numbers and iteration counts over the coupling parameter.
    SweepEta,
    /// Check the Mie reference against the boundary condition.
    MieValidate,
    /// Assemble one system and write all block matrices.
    DumpMatrices,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match &cli.config {
        Some(p) => RunConfig::from_file(p),
        None => Ok(RunConfig::default()),
    };
    let cfg = match cfg {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let cmd = match cli.command {
        Cmd::MeshInfo => Command::MeshInfo,
        Cmd::Convergence => Command::Convergence,
        Cmd::SweepH => Command::SweepH,
        Cmd::SweepKappa => Command::SweepKappa,
        Cmd::SweepEta => Command::SweepEta,
        Cmd::MieValidate => Command::MieValidate,
        Cmd::DumpMatrices => Command::DumpMatrices,
    };
    let opts = RunOptions {
        out_dir: cli.out.unwrap_or_else(|| PathBuf::from(&cfg.output.dir)),
        jobs: cli.jobs.max(1),
        mesh_out: cli.mesh_out,
        dump_matrices: cli.dump_matrices,
    };
    match run(cmd, &cfg, &opts) {
        Ok(report) => {
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            for o in &report.outputs {
                println!("wrote {}", o.display());
            }
            if report.failed {
                ExitCode::FAILURE
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
