// Writes generated surfaces to disk, reads them back and exports the
// canonical factor as PLY.

use std::fs::File;
use std::io::BufWriter;

use harmcanon::canonical::run_canonical;
use harmcanon::mesh::generate::{flat_torus, flat_torus_clifford_points, genus2_octagon};
use harmcanon::mesh::io::{load_mesh_path, write_intrinsic_json, write_off, write_rho_ply};
use harmcanon::sparse::SolverOptions;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join(format!("harmcanon-mesh-io-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;

    // The flat torus embeds isometrically in R^4 as a Clifford torus.
    let torus = flat_torus(8)?;
    let off = dir.join("torus.off");
    write_off(BufWriter::new(File::create(&off)?), &flat_torus_clifford_points(8), torus.faces())?;

    let genus2 = genus2_octagon(2)?;
    let json = dir.join("genus2.json");
    write_intrinsic_json(BufWriter::new(File::create(&json)?), &genus2)?;

    for path in [&off, &json] {
        let mesh = load_mesh_path(path)?;
        let run = run_canonical(&mesh, &SolverOptions::default())?;
        let ply = path.with_extension("ply");
        write_rho_ply(BufWriter::new(File::create(&ply)?), &run.mesh, &run.result.rho, &run.result.rho_vertex)?;
        let t = mesh.topology();
        println!(
            "{}: V={} E={} F={} genus {} -> E_min {:.6e}, wrote {}",
            path.display(),
            t.vertex_count,
            t.edge_count,
            t.face_count,
            t.genus,
            run.result.e_min,
            ply.display()
        );
    }
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
