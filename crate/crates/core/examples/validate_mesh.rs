// Runs the invariant checks on a small genus-2 surface.

use harmcanon::mesh::generate::genus2_octagon;
use harmcanon::validate::{validate, ValidationConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let report = validate(&genus2_octagon(1)?, &ValidationConfig::default())?;
    for check in &report.checks {
        let mark = if check.passed { "ok  " } else { "FAIL" };
        println!("{mark} {:<26} {:>12.3e} (threshold {:.0e})", check.name, check.value, check.threshold);
    }
    for (name, value) in &report.diagnostics {
        println!("     {name:<26} {value:>12.6}");
    }
    if let Some(name) = report.first_failure {
        return Err(format!("check failed: {name}").into());
    }
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
