use clap::Parser;

fn main() {
    let cli = fuzzyjoin::cli::Cli::parse();
    if let Err(e) = fuzzyjoin::cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
