//! Command-line front end: decide whether cohomology dimensions of a
//! deformed complex jump at the origin, inspect the obstruction calculus
//! behind the verdict, and cross-check against a sampling rank oracle.

mod commands;
mod config;
mod format;
mod report;

use clap::{Parser, Subcommand, ValueEnum};
use commands::{CliError, Outcome};
use config::{Config, ConfigPatch};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Text,
    Structured,
}

#[derive(Parser)]
#[command(
    name = "cohjump",
    version,
    about = "Cohomology jump analysis for truncated deformations of finite complexes"
)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,

    /// Configuration file (JSON) applied over the defaults.
    #[arg(long, global = true)]
    config: Option<String>,

    /// Output format for reports.
    #[arg(long, global = true, value_enum, default_value = "text")]
    format: OutputFormat,

    /// Print the resolved configuration and exit.
    #[arg(long, global = true)]
    show_config: bool,

    /// Relative kernel threshold for ranks and harmonic spaces.
    #[arg(long, global = true)]
    rank_tol: Option<f64>,

    /// Residual bound for Hodge identities and validation.
    #[arg(long, global = true)]
    hodge_tol: Option<f64>,

    /// Relative threshold below which obstruction classes count as zero.
    #[arg(long, global = true)]
    obstruction_tol: Option<f64>,

    /// Oracle rank tolerance (separate from rank_tol by design).
    #[arg(long, global = true)]
    oracle_rank_tol: Option<f64>,

    /// Oracle sample count.
    #[arg(long, global = true)]
    oracle_samples: Option<usize>,

    /// Oracle sampling seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a model file: complex, optional DGLA, series integrability.
    Validate { model: String },

    /// Hodge decomposition summary per degree.
    HodgeReport { model: String },

    /// Run the Kuranishi recursion from a harmonic degree-1 direction.
    McSolve {
        model: String,
        /// Harmonic basis index, or comma-separated re,im pairs.
        #[arg(long)]
        xi: String,
        #[arg(long)]
        order: Option<usize>,
    },

    /// Extend a closed class through the coexact recursion.
    Extend {
        model: String,
        #[arg(long)]
        degree: i32,
        /// Harmonic basis index, or comma-separated re,im pairs.
        #[arg(long)]
        class: String,
        #[arg(long)]
        order: Option<usize>,
    },

    /// Obstruction map images on the truncated complexes, order by order.
    Obstructions {
        model: String,
        #[arg(long)]
        degree: i32,
        #[arg(long)]
        order: Option<usize>,
    },

    /// Decide jumping at the origin; exit code 2 signals a detected jump.
    JumpVerdict {
        model: String,
        #[arg(long)]
        degree: i32,
        #[arg(long)]
        order: Option<usize>,
    },

    /// Sample the parameter and report the measured jump spectrum.
    OracleCompare {
        model: String,
        #[arg(long)]
        degree: i32,
    },

    /// Fixture builders.
    Models {
        #[command(subcommand)]
        command: ModelsCommand,
    },
}

#[derive(Subcommand)]
enum ModelsCommand {
    /// Build a model file from a named preset or a build-spec JSON file.
    Build {
        /// Preset name (toy, trivial, order-two, iwasawa-tangent,
        /// iwasawa-tangent-dgla, iwasawa-cotangent, kodaira-tangent) or
        /// path to a build spec.
        spec: String,
        /// Output model path.
        #[arg(long)]
        out: String,
    },
}

fn resolve_config(cli: &Cli) -> Result<Config, CliError> {
    let mut config = Config::default();
    if let Some(path) = &cli.config {
        config.apply(&Config::from_file(path).map_err(CliError::Usage)?);
    }
    config.apply(&Config::env_patch().map_err(CliError::Usage)?);
    config.apply(&ConfigPatch {
        rank_tol: cli.rank_tol,
        hodge_tol: cli.hodge_tol,
        obstruction_tol: cli.obstruction_tol,
        oracle_rank_tol: cli.oracle_rank_tol,
        oracle_samples: cli.oracle_samples,
        oracle_seed: cli.seed,
        ..Default::default()
    });
    config.validate().map_err(CliError::Usage)?;
    Ok(config)
}

fn dispatch(cli: &Cli, config: &Config) -> Result<Outcome, CliError> {
    let order_or_default = |o: &Option<usize>| -> Result<usize, CliError> {
        let n = o.unwrap_or(config.default_order);
        if n < 1 {
            return Err(CliError::Usage("--order must be at least 1".into()));
        }
        Ok(n)
    };
    match cli.command.as_ref().expect("command required") {
        Command::Validate { model } => commands::validate(model, config),
        Command::HodgeReport { model } => commands::hodge_report(model, config),
        Command::McSolve { model, xi, order } => {
            commands::mc_solve(model, xi, order_or_default(order)?, config)
        }
        Command::Extend {
            model,
            degree,
            class,
            order,
        } => commands::extend(model, *degree, class, order_or_default(order)?, config),
        Command::Obstructions {
            model,
            degree,
            order,
        } => commands::obstructions(model, *degree, order_or_default(order)?, config),
        Command::JumpVerdict {
            model,
            degree,
            order,
        } => commands::verdict(model, *degree, order_or_default(order)?, config),
        Command::OracleCompare { model, degree } => {
            commands::oracle_compare(model, *degree, config)
        }
        Command::Models { command } => match command {
            ModelsCommand::Build { spec, out } => commands::models_build(spec, out, config),
        },
    }
}

fn main() {
    let cli = Cli::parse();

    let config = match resolve_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(1);
        }
    };

    if cli.show_config {
        let mut s = serde_json::to_string_pretty(&config).expect("config serializes");
        s.push('\n');
        print!("{s}");
        std::process::exit(0);
    }

    if cli.command.is_none() {
        eprintln!("error: a command is required (try --help)");
        std::process::exit(1);
    }

    match dispatch(&cli, &config) {
        Ok(outcome) => {
            match cli.format {
                OutputFormat::Text => print!("{}", outcome.report.to_text()),
                OutputFormat::Structured => print!("{}", outcome.report.to_canonical_json()),
            }
            std::process::exit(outcome.exit_code);
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(1);
        }
    }
}
