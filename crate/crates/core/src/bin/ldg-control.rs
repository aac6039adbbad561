use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ldg_control::checks::run_checks;
use ldg_control::cli::{execute, output_root, render_table, RunConfig, TableFormat};
use ldg_control::problems::{benchmark, Benchmark};
use ldg_control::Error;

/// Dirichlet boundary control with LDG: convergence studies and self-checks.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the study described by a TOML configuration file.
    Run { config: PathBuf },
    /// Run the built-in self-check suite.
    Check {
        #[arg(long, default_value_t = 20240917)]
        seed: u64,
    },
    /// Write the mesh of an example at a given element count.
    DumpMesh {
        /// 1, 2 or 3.
        example: Benchmark,
        elements: usize,
    },
}

fn run(cli: Cli) -> Result<(), Error> {
    let root = output_root();
    match cli.command {
        Command::Run { config } => {
            let config = RunConfig::from_path(&config)?;
            let out = execute(&config, &root)?;
            print!("{}", render_table(&out.study.report, TableFormat::Markdown)?);
            for f in &out.files {
                eprintln!("wrote {}", f.display());
            }
        }
        Command::Check { seed } => {
            let outcomes = run_checks(seed)?;
            let mut failed = 0;
            for c in &outcomes {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
                failed += usize::from(!c.passed);
            }
            if failed > 0 {
                return Err(Error::Config(format!("{failed} check(s) failed")));
            }
        }
        Command::DumpMesh { example, elements } => {
            let problem = benchmark(example, 1.0)?;
            let mesh = problem.mesh(problem.level_for_elements(elements)?)?;
            std::fs::create_dir_all(&root)?;
            let path = root.join(format!("mesh_{}_{}.txt", problem.name, elements));
            mesh.dump(&path)?;
            eprintln!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_nonconvergence() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
