use clap::error::ErrorKind;
use clap::Parser;
use vesselkit_cli::{run, Cli, EXIT_INTERNAL, EXIT_IO, EXIT_PASS};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_PASS,
                _ => EXIT_IO,
            };
            std::process::exit(code);
        }
    };
    let code = std::panic::catch_unwind(|| run(&cli)).unwrap_or(EXIT_INTERNAL);
    std::process::exit(code);
}
