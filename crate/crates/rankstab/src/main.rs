use clap::Parser;
use rankstab::cli;

fn main() {
    let parsed = cli::Cli::try_parse();
    let args = match parsed {
        Ok(args) => args,
        Err(e) if e.use_stderr() => {
            // usage errors exit with code 1 per the tool's contract
            eprint!("{e}");
            std::process::exit(1);
        }
        Err(e) => {
            // --help / --version
            print!("{e}");
            std::process::exit(0);
        }
    };
    if let Err(e) = cli::run(args) {
        eprintln!("error: {e}");
        std::process::exit(cli::exit_code(&e));
    }
}
