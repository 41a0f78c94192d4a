// Refinement sweep on the genus-2 surface obtained from a regular octagon.
//
// Run with a maximum level, e.g. `cargo run --release --example genus2_sweep -- 5`.

use harmcanon::canonical::canonical_metric;
use harmcanon::mesh::generate::genus2_octagon;

pub fn sweep(levels: std::ops::RangeInclusive<usize>) -> Result<Vec<(usize, f64, f64)>, harmcanon::Error> {
    levels
        .map(|r| {
            let result = canonical_metric(&genus2_octagon(r)?)?;
            Ok((r, result.c_sq, result.e_min))
        })
        .collect()
}

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let max = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(3);
    println!("{:>3} {:>7} {:>12} {:>12} {:>12}", "r", "faces", "C^2", "|C^2 - 4|", "E_min");
    for (r, c_sq, e_min) in sweep(1..=max)? {
        println!("{r:>3} {:>7} {c_sq:>12.6} {:>12.6} {e_min:>12.6}", 8 << (2 * r), (c_sq - 4.0).abs());
    }
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
