use clap::Parser;

fn main() {
    let cli = nlwg_cli::Cli::parse();
    if let Err(e) = nlwg_cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
