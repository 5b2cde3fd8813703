use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use spitzer_cli::config::parse_method_list;
use spitzer_cli::error::ConfigError;
use spitzer_cli::{output, run, Format, RunConfig, RunError};

/// Computes P(M_n = m) for the reflected lattice walk by up to four methods
/// and cross-checks them. Exit status: 0 if every check passes, 1 if any
/// fails, 2 on configuration or evaluation errors.
#[derive(Parser, Debug)]
#[command(name = "spitzer", version)]
struct Args {
    /// Run configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Table destination; stdout when absent.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Table encoding.
    #[arg(long)]
    format: Option<Format>,
    /// `all` or a comma list of dp, spitzer, product, pollaczek.
    #[arg(long)]
    methods: Option<String>,
    /// Print the environment echo with the report.
    #[arg(long)]
    verbose: bool,
}

fn configure(args: &Args) -> Result<RunConfig, ConfigError> {
    let mut config = RunConfig::load(&args.config)?;
    if let Some(list) = &args.methods {
        let methods = parse_method_list(list).map_err(|reason| ConfigError::Flag {
            flag: "--methods",
            reason,
        })?;
        config.set_methods(methods)?;
    }
    if let Some(format) = args.format {
        config.format = format;
    }
    if let Some(path) = &args.output {
        config.output = Some(path.clone());
    }
    config.verbose |= args.verbose;
    Ok(config)
}

fn execute(args: &Args) -> Result<bool, RunError> {
    let config = configure(args)?;
    let result = run(&config)?;
    let text = output::render(&config, &result);
    match &config.output {
        Some(path) => std::fs::write(path, text).map_err(|source| RunError::Write {
            path: path.clone(),
            source,
        })?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|source| RunError::Write {
                    path: PathBuf::from("<stdout>"),
                    source,
                })?;
        }
    }
    eprint!("{}", result.report.render(config.verbose));
    Ok(result.all_pass())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
