use clap::Parser;

fn main() {
    let cli = pfschur::cli::Cli::parse();
    std::process::exit(pfschur::cli::run(cli));
}
