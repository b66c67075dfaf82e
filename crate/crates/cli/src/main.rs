use std::panic::{catch_unwind, AssertUnwindSafe};

use clap::Parser;

fn main() {
    let cli = ifslab::Cli::parse();
    let code = catch_unwind(AssertUnwindSafe(|| ifslab::run(cli))).unwrap_or(1);
    std::process::exit(code);
}
