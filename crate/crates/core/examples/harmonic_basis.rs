// Orthonormal harmonic 1-forms on a genus-2 surface, with their periods
// over the tree-cotree homology cycles.

use harmcanon::harmonic::harmonic_basis;
use harmcanon::mesh::generate::genus2_octagon;

fn print_matrix(name: &str, m: &[Vec<f64>]) {
    println!("{name}");
    for row in m {
        let cells: Vec<String> = row.iter().map(|x| format!("{x:>10.6}")).collect();
        println!("  {}", cells.join(" "));
    }
}

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let mesh = genus2_octagon(2)?.normalize_area();
    let basis = harmonic_basis(&mesh)?;
    println!("forms {} (generator edges {:?})", basis.len(), basis.generator_edges);
    println!(
        "gram residual {:.2e}, closedness {:.2e}, coclosedness {:.2e}",
        basis.gram_residual, basis.closedness_residual, basis.coclosedness_residual
    );
    print_matrix("periods", &basis.period_matrix());
    print_matrix("gram", &basis.gram_matrix(&mesh)?);
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
