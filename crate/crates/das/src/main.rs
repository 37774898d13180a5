use clap::Parser;

fn main() {
    let cli = match das::cli::Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap handles --help/--version via "errors" that should exit 0.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = das::cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
