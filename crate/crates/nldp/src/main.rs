use clap::Parser;

fn main() {
    let cli = nldp::cli::Cli::parse();
    std::process::exit(nldp::cli::run(cli));
}
