use clap::Parser;

fn main() {
    let cli = chameleon_cli::Cli::parse();
    if let Err(e) = chameleon_cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
