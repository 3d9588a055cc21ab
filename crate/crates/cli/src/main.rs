use clap::Parser;
use sandflow_cli::{run, Args, EXIT_CONFIG};

fn main() {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            std::process::exit(if e.use_stderr() { EXIT_CONFIG } else { 0 });
        }
    };
    std::process::exit(run(&args));
}
