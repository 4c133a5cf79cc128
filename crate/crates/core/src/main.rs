use clap::Parser;

fn main() {
    let cli = freetrans::cli::Cli::parse();
    std::process::exit(freetrans::cli::dispatch(cli));
}
