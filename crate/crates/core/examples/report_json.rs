//! Drives the batch layer from a JSON configuration and prints the report,
//! the same thing `qelab <command> --config file.json --json` does.
//!
//! `cargo run --release --example report_json`

use qelab::report::{run, RunConfig};

const CONFIG: &str = r#"{
    "command": "verify",
    "example": "thm1-ii",
    "params": { "m": 2.0 },
    "grid": "5",
    "seed": 7
}"#;

fn main() {
    let cfg = RunConfig::from_json(CONFIG).expect("valid config");
    match run(&cfg) {
        Ok(report) => {
            for c in &report.checks {
                eprintln!("{:<12} {}", c.name, if c.pass { "ok" } else { "FAIL" });
            }
            println!("{}", report.to_stable_json());
            std::process::exit(report.exit_code());
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(qelab::report::exit_code_for(&e));
        }
    }
}
