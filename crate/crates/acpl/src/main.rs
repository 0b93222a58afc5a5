use clap::Parser;

fn main() {
    let cli = acpl::cli::Cli::parse();
    std::process::exit(acpl::cli::run(cli));
}
