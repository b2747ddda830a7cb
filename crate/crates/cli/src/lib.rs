//! Command-line front end: read CSV data, run a rank test or estimator and
//! write a JSON or CSV result document; or run simulation designs.
//!
//! Exit codes: 0 success, 2 usage, 3 numerical failure, 4 data error.

pub mod args;
pub mod error;
pub mod run;
pub mod table;

use std::io::Write;

use rankinfer::sim::{emit_histograms, rank_distribution, run_monte_carlo, with_threads};

pub use args::{parse_args, Command, Method, RunConfig, SimConfig};
pub use error::{CliError, CliResult};
pub use run::{run, run_on, ResultDocument, StepRecord};
pub use table::{parse_dataset, read_dataset, Dataset};

fn write_output(path: Option<&std::path::Path>, bytes: &[u8]) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|e| CliError::Data(format!("{}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes).and_then(|_| out.flush()).map_err(|e| CliError::Data(format!("stdout: {e}")))
        }
    }
}

/// Output bytes of a parsed command.
pub fn execute(cmd: &Command) -> CliResult<Vec<u8>> {
    match cmd {
        Command::Info(text) => Ok(text.clone().into_bytes()),
        Command::Test(cfg) => Ok(run(cfg)?.render(cfg.format)),
        Command::Simulate { sim, methods } => {
            let table = with_threads(sim.threads, || run_monte_carlo(&sim.design, sim.n, methods, &sim.mc))?;
            Ok(table.emit(sim.format)?)
        }
        Command::Ranks { sim, estimators } => {
            let hists = with_threads(sim.threads, || rank_distribution(&sim.design, sim.n, estimators, &sim.mc))?;
            Ok(emit_histograms(&hists, sim.format)?)
        }
    }
}

/// Full invocation; returns the process exit code.
pub fn main_with_args<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let outcome = parse_args(argv).and_then(|cmd| {
        let bytes = execute(&cmd)?;
        let path = match &cmd {
            Command::Test(cfg) => cfg.output.as_deref(),
            Command::Simulate { sim, .. } | Command::Ranks { sim, .. } => sim.output.as_deref(),
            Command::Info(_) => None,
        };
        write_output(path, &bytes)
    });
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("rankinfer: {e}");
            e.exit_code()
        }
    }
}
