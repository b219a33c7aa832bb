use clap::Parser;

fn main() {
    let args = shwave::cli::Args::parse();
    std::process::exit(shwave::cli::run(&args));
}
