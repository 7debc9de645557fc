use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hdmas_core::frontend::{run, Command, FormulaSource, OutputFormat, RunConfig, VerifyMode};

#[derive(Parser)]
#[command(name = "hdmas-verify", version, about = "Model checking for homogeneous multi-agent systems")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check availability, guard scoping, totality and determinism.
    CheckModel {
        model: PathBuf,
        #[command(flatten)]
        format: FormatFlags,
    },
    /// Compute the extension of a formula.
    Verify(VerifyArgs),
}

#[derive(Args)]
#[group(multiple = false)]
struct FormatFlags {
    /// JSON output (default).
    #[arg(long)]
    json: bool,
    /// Human-readable output.
    #[arg(long)]
    plain: bool,
}

impl FormatFlags {
    fn format(&self) -> OutputFormat {
        if self.plain {
            OutputFormat::Plain
        } else {
            OutputFormat::Json
        }
    }
}

#[derive(Args)]
struct VerifyArgs {
    model: PathBuf,
    /// Formula text.
    #[arg(short = 'f', long, required_unless_present = "formula_file", conflicts_with = "formula_file")]
    formula: Option<String>,
    /// Read the formula from a file.
    #[arg(long, value_name = "PATH")]
    formula_file: Option<PathBuf>,
    /// Bind y1, y2 or a parameter zN, e.g. --assign z1=5.
    #[arg(long, value_name = "K=V", value_parser = parse_binding)]
    assign: Vec<(String, u64)>,
    /// Exit with status 3 unless this state is in the extension.
    #[arg(long, value_name = "NAME")]
    state: Option<String>,
    /// Use explicit enumeration instead of the symbolic engine.
    #[arg(long, conflicts_with_all = ["dump_nf", "dump_prf"])]
    oracle: bool,
    /// Print the normal form and stop.
    #[arg(long, conflicts_with = "dump_prf")]
    dump_nf: bool,
    /// Print the pre-image formula of the first strategic operator at a state.
    #[arg(long, value_name = "s=NAME", value_parser = parse_state_binding)]
    dump_prf: Option<String>,
    #[command(flatten)]
    format: FormatFlags,
}

fn parse_binding(s: &str) -> Result<(String, u64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected K=V, got '{s}'"))?;
    let v = v.trim().parse().map_err(|_| format!("'{v}' is not a natural number"))?;
    Ok((k.trim().to_string(), v))
}

fn parse_state_binding(s: &str) -> Result<String, String> {
    match s.split_once('=') {
        Some(("s", name)) if !name.is_empty() => Ok(name.to_string()),
        _ => Err(format!("expected s=NAME, got '{s}'")),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match cli.command {
        Cmd::CheckModel { model, format } => RunConfig {
            command: Command::CheckModel { model },
            format: format.format(),
        },
        Cmd::Verify(a) => {
            let formula = match (a.formula, a.formula_file) {
                (Some(t), _) => FormulaSource::Text(t),
                (None, Some(p)) => FormulaSource::File(p),
                (None, None) => unreachable!("clap requires one of them"),
            };
            let mode = if a.oracle {
                VerifyMode::Oracle
            } else if a.dump_nf {
                VerifyMode::DumpNf
            } else if let Some(s) = a.dump_prf {
                VerifyMode::DumpPrf(s)
            } else {
                VerifyMode::Symbolic
            };
            RunConfig {
                command: Command::Verify {
                    model: a.model,
                    formula,
                    assign: a.assign,
                    state: a.state,
                    mode,
                },
                format: a.format.format(),
            }
        }
    };
    let out = run(&config);
    let _ = std::io::stdout().write_all(out.stdout.as_bytes());
    let _ = std::io::stderr().write_all(out.stderr.as_bytes());
    ExitCode::from(out.exit_code as u8)
}
