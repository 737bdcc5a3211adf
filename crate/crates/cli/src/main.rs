use std::io::Write;
use std::process;

use clap::error::ErrorKind;
use clap::Parser;
use dp_cli::{run, Cli, ExitCode};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::Ok,
                _ => ExitCode::Input,
            };
            let _ = e.print();
            process::exit(code as i32);
        }
    };
    match run(cli) {
        Ok(out) => {
            let _ = std::io::stdout().write_all(out.as_bytes());
        }
        Err(e) => {
            let _ = std::io::stdout().write_all(e.stdout.as_bytes());
            eprintln!("error: {}", e.message);
            process::exit(e.code as i32);
        }
    }
}
