use clap::{Parser, Subcommand};
use platelab_cli::{acceptance, commands};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "platelab",
    about = "Numerical laboratory for a damped plate equation with variable-exponent nonlinearities",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Integrate a configured run and write its trace and report.
    Simulate { config: PathBuf },
    /// Evaluate the threshold constants and bound cascade without running.
    Bounds { config: PathBuf },
    /// Re-run one config across a list of values for a single key.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        axis: String,
        /// Comma-separated list of values for the axis key.
        #[arg(long, value_delimiter = ',')]
        values: Vec<String>,
    },
    /// Evaluate the modular and the norm of a field spec against an
    /// exponent spec.
    Norms {
        #[arg(long)]
        f: String,
        #[arg(long)]
        p: String,
        #[arg(long, default_value_t = 400)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        extent: f64,
    },
    /// Run the acceptance suite; one pass/fail line per criterion.
    Accept {
        /// Run only criteria whose name contains this substring.
        #[arg(long)]
        only: Option<String>,
    },
}

fn read_config(path: &PathBuf) -> Result<String, i32> {
    std::fs::read_to_string(path).map_err(|e| {
        eprintln!("config error: cannot read {}: {e}", path.display());
        2
    })
}

/// Writes to stdout, exiting quietly when the consumer has gone away
/// (pipelines like `platelab bounds cfg | head` close the pipe early).
fn emit(text: &str) {
    use std::io::Write;
    if let Err(e) = std::io::stdout().write_all(text.as_bytes()) {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            std::process::exit(0);
        }
        eprintln!("stdout: {e}");
        std::process::exit(3);
    }
}

fn run() -> i32 {
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::Simulate { config } => {
            let text = match read_config(&config) {
                Ok(t) => t,
                Err(c) => return c,
            };
            match commands::simulate(&text) {
                Ok(out) => {
                    emit(&out.report_text);
                    emit(&format!("report written to {}\n", out.report_path.display()));
                    if let Some(t) = out.trace_path {
                        emit(&format!("trace written to {}\n", t.display()));
                    }
                    out.exit
                }
                Err(e) => {
                    e.print();
                    e.exit_code()
                }
            }
        }
        Cmd::Bounds { config } => {
            let text = match read_config(&config) {
                Ok(t) => t,
                Err(c) => return c,
            };
            match commands::bounds_only(&text) {
                Ok(out) => {
                    emit(&out.report_text);
                    emit(&format!("report written to {}\n", out.report_path.display()));
                    out.exit
                }
                Err(e) => {
                    e.print();
                    e.exit_code()
                }
            }
        }
        Cmd::Sweep { config, axis, values } => {
            let text = match read_config(&config) {
                Ok(t) => t,
                Err(c) => return c,
            };
            match commands::sweep(&text, &axis, &values) {
                Ok(rows) => {
                    emit(&commands::render_sweep_table(&axis, &rows));
                    if rows.iter().any(|r| r.error.is_some()) {
                        3
                    } else {
                        0
                    }
                }
                Err(e) => {
                    e.print();
                    e.exit_code()
                }
            }
        }
        Cmd::Norms { f, p, n, extent } => match commands::norms(&f, &p, n, extent) {
            Ok(text) => {
                emit(&text);
                0
            }
            Err(e) => {
                e.print();
                e.exit_code()
            }
        },
        Cmd::Accept { only } => {
            let results = acceptance::run_all(only.as_deref());
            let mut failed = 0;
            for r in &results {
                emit(&format!("{}\n", r.line()));
                if !r.passed {
                    failed += 1;
                }
            }
            if results.is_empty() {
                eprintln!("no criteria matched the filter");
                return 2;
            }
            if failed > 0 {
                eprintln!("{failed} criteria failed");
                4
            } else {
                0
            }
        }
    }
}

fn main() {
    std::process::exit(run());
}
