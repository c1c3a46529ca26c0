use std::io::{self, Write};
use std::process::ExitCode;

use clap::{CommandFactory, Parser};
use hoigym_cli::{Cli, Command, BROKEN_PIPE, EXIT_FAILURE};

fn check(cli: &Cli) -> Result<(), clap::Error> {
    let episode = match &cli.command {
        Command::Generate(a) => &a.episode,
        Command::Serve(a) => &a.episode,
        Command::EvalOracle(a) => &a.episode,
        Command::EvalScripted(a) => &a.eval.episode,
        _ => return Ok(()),
    };
    if episode.lenient < episode.threshold {
        return Err(Cli::command().error(
            clap::error::ErrorKind::ArgumentConflict,
            format!("--lenient {} must not be below --threshold {}", episode.lenient, episode.threshold),
        ));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = check(&cli) {
        e.exit();
    }
    // unlocked: `serve` prints session lines from worker threads
    let mut out = io::stdout();
    let result = hoigym_cli::run(cli, &mut out);
    let _ = out.flush();
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.kind == BROKEN_PIPE => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_line());
            ExitCode::from(EXIT_FAILURE as u8)
        }
    }
}
