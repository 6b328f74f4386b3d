//! Command-line entry points and the local HTTP service.

pub mod args;
pub mod commands;
pub mod serve;

use std::io::Write;

use thiserror::Error;

pub use args::{Cli, Command};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] bracket_exact::Error),

    #[error("{0}")]
    Usage(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 2 config error, 3 schedule violation, 4 capacity error.
    pub fn exit_code(&self) -> u8 {
        use bracket_exact::Error as E;
        match self {
            CliError::Core(E::Schedule(_)) => 3,
            CliError::Core(E::Capacity(_)) => 4,
            CliError::Core(_) | CliError::Usage(_) => 2,
            CliError::Io(_) => 1,
        }
    }
}

/// Run the parsed command, writing results to `out`.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    if let Command::Serve { port } = cli.command {
        let ctx = commands::Context::from_cli(cli)?;
        let rt = tokio::runtime::Builder::new_multi_thread()
            .enable_all()
            .build()?;
        return rt.block_on(serve::serve(ctx, port));
    }
    let text = commands::execute(cli)?;
    out.write_all(text.as_bytes())?;
    Ok(())
}
