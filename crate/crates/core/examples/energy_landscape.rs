// Samples the harmonic energy at random conformal factors and compares it
// with the minimum attained by the canonical factor.

use harmcanon::canonical::{energy_of, run_canonical};
use harmcanon::mesh::generate::genus2_octagon;
use harmcanon::sparse::SolverOptions;
use harmcanon::validate::random_rho;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let run = run_canonical(&genus2_octagon(2)?, &SolverOptions::default())?;
    let (mesh, star) = (&run.mesh, &run.result.rho);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    println!("E_min = {:.9}", run.result.e_min);
    println!("{:>14} {:>14}", "max|rho-rho*|", "E - E_min");
    for i in 0..12 {
        let rho = random_rho(mesh, star, &mut rng, i);
        let dist = rho.iter().zip(star).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        println!("{dist:>14.6} {:>14.6e}", energy_of(mesh, &run.wedge, &rho, 1)? - run.result.e_min);
    }
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
