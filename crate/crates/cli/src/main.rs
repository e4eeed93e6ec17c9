use clap::Parser;

fn main() {
    let cli = pointscat::Cli::parse();
    if let Err(e) = pointscat::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
