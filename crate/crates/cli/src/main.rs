//! `gibbslab`: batch front-end for the weak-Gibbs and jitter-channel experiments.

mod commands;
mod output;
mod spec;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use gibbslab_core::{Error, NumMode};
use serde_json::{json, Value};

use crate::commands::Ctx;
use crate::output::{config_hash, Fmt, Meta};
use crate::spec::RunConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Subcommand {
    WgConverge,
    WgBadsets,
    BsCylinder,
    BsBadconfig,
    BsEntropy,
    BsCapacity,
    Relent,
    Oracle,
}

impl Subcommand {
    fn name(self) -> &'static str {
        match self {
            Subcommand::WgConverge => "wg-converge",
            Subcommand::WgBadsets => "wg-badsets",
            Subcommand::BsCylinder => "bs-cylinder",
            Subcommand::BsBadconfig => "bs-badconfig",
            Subcommand::BsEntropy => "bs-entropy",
            Subcommand::BsCapacity => "bs-capacity",
            Subcommand::Relent => "relent",
            Subcommand::Oracle => "oracle",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "gibbslab", version, about = "Weak-Gibbs and jitter-channel experiments")]
struct Cli {
    subcommand: Subcommand,
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    mode: Option<NumMode>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    threads: Option<usize>,
    /// Significant digits for floating-point output.
    #[arg(long)]
    precision: Option<usize>,
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    kind: &'static str,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidInput(_) | Error::NonRational(_) | Error::Irregular(_) => 1,
            Error::CapExceeded { .. } => 2,
            Error::ZeroProbability(_) | Error::AbsoluteContinuity(_) | Error::Uncertifiable(_) => 3,
        };
        Failure {
            code,
            kind: e.kind(),
            message: e.to_string(),
        }
    }
}

fn invalid(kind: &'static str, message: impl Into<String>) -> Failure {
    Failure {
        code: 1,
        kind,
        message: message.into(),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let text = std::fs::read_to_string(&cli.config)
        .map_err(|e| invalid("io", format!("cannot read {}: {e}", cli.config.display())))?;
    let cfg: RunConfig = serde_json::from_str(&text).map_err(|e| invalid("invalid_config", e.to_string()))?;
    let mode = cli.mode.or(cfg.mode).unwrap_or(NumMode::Rational);
    let seed = cli.seed.or(cfg.seed).unwrap_or(0);
    let precision = cli.precision.or(cfg.precision);
    if precision == Some(0) {
        return Err(invalid("invalid_config", "precision must be at least 1"));
    }
    let canonical = json!({
        "subcommand": cli.subcommand.name(),
        "mode": mode.to_string(),
        "seed": seed,
        "precision": precision,
        "params": cfg.params,
    });
    let ctx = Ctx {
        meta: Meta {
            tool: "gibbslab",
            version: env!("CARGO_PKG_VERSION"),
            subcommand: cli.subcommand.name().into(),
            config_hash: config_hash(&canonical),
            seed,
            mode: mode.to_string(),
            precision,
        },
        mode,
        seed,
        fmt: Fmt { precision },
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(invalid("invalid_config", "threads must be at least 1"));
        }
        pool = pool.num_threads(t);
    }
    let pool = pool.build().map_err(|e| invalid("threads", e.to_string()))?;
    let params: &Value = &canonical["params"];
    let report = pool.install(|| match cli.subcommand {
        Subcommand::WgConverge => commands::wg_converge(&ctx, params),
        Subcommand::WgBadsets => commands::wg_badsets(&ctx, params),
        Subcommand::BsCylinder => commands::bs_cylinder(&ctx, params),
        Subcommand::BsBadconfig => commands::bs_badconfig(&ctx, params),
        Subcommand::BsEntropy => commands::bs_entropy(&ctx, params),
        Subcommand::BsCapacity => commands::bs_capacity(&ctx, params),
        Subcommand::Relent => commands::relent(&ctx, params),
        Subcommand::Oracle => commands::oracle(&ctx, params),
    })?;
    match &cli.out {
        Some(path) => std::fs::write(path, report)
            .map_err(|e| invalid("io", format!("cannot write {}: {e}", path.display())))?,
        None => print!("{report}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let f = invalid("usage", e.to_string().trim_end());
            eprintln!("{}", json!({"error": f.kind, "message": f.message, "exit_code": f.code}));
            return ExitCode::from(f.code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", json!({"error": f.kind, "message": f.message, "exit_code": f.code}));
            ExitCode::from(f.code)
        }
    }
}
