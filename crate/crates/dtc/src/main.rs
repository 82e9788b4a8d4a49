use clap::Parser;

fn main() {
    let cfg = dtc::cli::CliConfig::parse();
    if let Err(e) = dtc::cli::run(cfg) {
        eprintln!("dtc: {e}");
        std::process::exit(1);
    }
}
