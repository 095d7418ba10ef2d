use clap::Parser;

fn main() {
    let cli = adia_cli::Cli::parse();
    std::process::exit(adia_cli::run(cli));
}
