//! Mesh file formats: OFF (including 4OFF), OBJ, the intrinsic-mesh JSON
//! format, and a binary PLY writer for per-face scalar fields.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::TriangleMesh;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeshFormat {
    Off,
    Obj,
    /// `{"faces": [[i,j,k],...], "edge_lengths": [[i,j,len],...]}`, with an
    /// optional `face_edges` array when edges cannot be keyed by vertex pair.
    IntrinsicJson,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
        match ext.as_deref() {
            Some("off") => Ok(Self::Off),
            Some("obj") => Ok(Self::Obj),
            Some("json") => Ok(Self::IntrinsicJson),
            _ => Err(Error::Parse(format!(
                "cannot infer mesh format of {} (expected .off, .obj or .json)",
                path.display()
            ))),
        }
    }
}

/// Reads and validates a mesh in the given format.
pub fn load_mesh<R: Read>(source: R, format: MeshFormat) -> Result<TriangleMesh> {
    match format {
        MeshFormat::Off => read_off(source),
        MeshFormat::Obj => read_obj(source),
        MeshFormat::IntrinsicJson => read_intrinsic_json(source),
    }
}

/// Loads a mesh file, choosing the format from the extension.
pub fn load_mesh_path(path: &Path) -> Result<TriangleMesh> {
    let format = MeshFormat::from_path(path)?;
    load_mesh(BufReader::new(File::open(path)?), format)
}

fn parse_num<T: std::str::FromStr>(tok: Option<&str>, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| Error::Parse(format!("unexpected end of input reading {what}")))?;
    tok.parse().map_err(|_| Error::Parse(format!("invalid {what}: {tok:?}")))
}

/// Reads `OFF` (3D) or `4OFF` (4D) text with triangular faces.
pub fn read_off<R: Read>(source: R) -> Result<TriangleMesh> {
    let mut text = String::new();
    BufReader::new(source).read_to_string(&mut text)?;
    let mut tokens = text.lines().map(|l| l.split('#').next().unwrap_or("")).flat_map(str::split_whitespace);
    let dim = match tokens.next() {
        Some("OFF") => 3,
        Some("4OFF") => 4,
        other => return Err(Error::Parse(format!("expected OFF header, found {other:?}"))),
    };
    let nv: usize = parse_num(tokens.next(), "vertex count")?;
    let nf: usize = parse_num(tokens.next(), "face count")?;
    let _ne: usize = parse_num(tokens.next(), "edge count")?;
    let mut points = Vec::with_capacity(nv);
    for _ in 0..nv {
        let mut p = Vec::with_capacity(dim);
        for _ in 0..dim {
            let x: f64 = parse_num(tokens.next(), "vertex coordinate")?;
            if !x.is_finite() {
                return Err(Error::Parse(format!("non-finite vertex coordinate {x}")));
            }
            p.push(x);
        }
        points.push(p);
    }
    let mut faces = Vec::with_capacity(nf);
    for t in 0..nf {
        let n: usize = parse_num(tokens.next(), "face size")?;
        if n != 3 {
            return Err(Error::Parse(format!("face {t} has {n} vertices; only triangles are supported")));
        }
        let mut f = [0; 3];
        for v in &mut f {
            *v = parse_num(tokens.next(), "face index")?;
        }
        faces.push(f);
    }
    if dim == 3 {
        let positions = points.into_iter().map(|p| [p[0], p[1], p[2]]).collect();
        TriangleMesh::from_positions(positions, faces)
    } else {
        TriangleMesh::from_points(&points, faces)
    }
}

/// Reads Wavefront OBJ `v` and `f` records. Polygons with more than three
/// corners are fan-triangulated from their first corner.
pub fn read_obj<R: Read>(source: R) -> Result<TriangleMesh> {
    let mut positions: Vec<[f64; 3]> = Vec::new();
    let mut faces = Vec::new();
    let mut fanned = 0usize;
    for (lineno, line) in BufReader::new(source).lines().enumerate() {
        let line = line?;
        let mut tok = line.split_whitespace();
        match tok.next() {
            Some("v") => {
                let mut p = [0.0; 3];
                for x in &mut p {
                    *x = parse_num(tok.next(), "vertex coordinate")?;
                }
                positions.push(p);
            }
            Some("f") => {
                let corners = tok
                    .map(|t| {
                        let idx: i64 = parse_num(t.split('/').next(), "face index")?;
                        let resolved = match idx {
                            i if i > 0 => i - 1,
                            i if i < 0 => positions.len() as i64 + i,
                            _ => -1,
                        };
                        usize::try_from(resolved)
                            .map_err(|_| Error::Parse(format!("line {}: bad face index {idx}", lineno + 1)))
                    })
                    .collect::<Result<Vec<_>>>()?;
                if corners.len() < 3 {
                    return Err(Error::Parse(format!("line {}: face with fewer than 3 corners", lineno + 1)));
                }
                if corners.len() > 3 {
                    fanned += 1;
                }
                for w in corners[1..].windows(2) {
                    faces.push([corners[0], w[0], w[1]]);
                }
            }
            _ => {}
        }
    }
    if fanned > 0 {
        log::warn!("fan-triangulated {fanned} polygonal OBJ faces");
    }
    TriangleMesh::from_positions(positions, faces)
}

#[derive(Serialize, Deserialize)]
struct IntrinsicMesh {
    faces: Vec<[usize; 3]>,
    edge_lengths: Vec<(usize, usize, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    face_edges: Option<Vec<[usize; 3]>>,
}

pub fn read_intrinsic_json<R: Read>(source: R) -> Result<TriangleMesh> {
    let raw: IntrinsicMesh = serde_json::from_reader(BufReader::new(source))
        .map_err(|e| Error::Parse(format!("intrinsic mesh JSON: {e}")))?;
    let vertex_count = raw.faces.iter().flatten().max().map_or(0, |m| m + 1);
    match raw.face_edges {
        None => TriangleMesh::from_edge_lengths(vertex_count, raw.faces, &raw.edge_lengths),
        Some(face_edges) => {
            let mesh = TriangleMesh::from_glued(
                vertex_count,
                raw.faces,
                face_edges,
                raw.edge_lengths.iter().map(|e| e.2).collect(),
            )?;
            for (e, &(i, j, _)) in raw.edge_lengths.iter().enumerate() {
                if mesh.edges()[e] != [i.min(j), i.max(j)] {
                    return Err(Error::Parse(format!(
                        "edge {e} listed as ({i}, {j}) but glued between {:?}",
                        mesh.edges()[e]
                    )));
                }
            }
            Ok(mesh)
        }
    }
}

/// Writes the intrinsic-mesh JSON. `face_edges` is only emitted when two
/// edges share both endpoints.
pub fn write_intrinsic_json<W: Write>(mut out: W, mesh: &TriangleMesh) -> Result<()> {
    let raw = IntrinsicMesh {
        faces: mesh.faces().to_vec(),
        edge_lengths: mesh.edges().iter().enumerate().map(|(e, &[i, j])| (i, j, mesh.edge_length(e))).collect(),
        face_edges: (!mesh.is_pair_keyed()).then(|| (0..mesh.face_count()).map(|t| mesh.face_edges(t)).collect()),
    };
    serde_json::to_writer(&mut out, &raw).map_err(|e| Error::Io(e.into()))?;
    writeln!(out)?;
    Ok(())
}

/// Writes points of dimension 3 (`OFF`) or 4 (`4OFF`) with triangle faces.
pub fn write_off<W: Write, P: AsRef<[f64]>>(mut out: W, points: &[P], faces: &[[usize; 3]]) -> Result<()> {
    let dim = points.first().map_or(3, |p| p.as_ref().len());
    let header = match dim {
        3 => "OFF",
        4 => "4OFF",
        d => return Err(Error::Precondition(format!("cannot write {d}-dimensional points as OFF"))),
    };
    writeln!(out, "{header}")?;
    writeln!(out, "{} {} 0", points.len(), faces.len())?;
    for p in points {
        let p = p.as_ref();
        if p.len() != dim {
            return Err(Error::Precondition("points have inconsistent dimensions".into()));
        }
        let line: Vec<String> = p.iter().map(|x| x.to_string()).collect();
        writeln!(out, "{}", line.join(" "))?;
    }
    for f in faces {
        writeln!(out, "3 {} {} {}", f[0], f[1], f[2])?;
    }
    Ok(())
}

/// Binary little-endian PLY with a per-vertex `rho_v` and a per-face `rho`
/// (both float64). Vertex positions are included when the mesh has them.
pub fn write_rho_ply<W: Write>(out: W, mesh: &TriangleMesh, rho: &[f64], rho_vertex: &[f64]) -> Result<()> {
    crate::error::check_len(mesh.face_count(), rho.len())?;
    crate::error::check_len(mesh.vertex_count(), rho_vertex.len())?;
    let mut out = BufWriter::new(out);
    let positions = mesh.positions();
    writeln!(out, "ply")?;
    writeln!(out, "format binary_little_endian 1.0")?;
    writeln!(out, "element vertex {}", mesh.vertex_count())?;
    if positions.is_some() {
        writeln!(out, "property double x\nproperty double y\nproperty double z")?;
    }
    writeln!(out, "property double rho_v")?;
    writeln!(out, "element face {}", mesh.face_count())?;
    writeln!(out, "property list uchar int vertex_indices")?;
    writeln!(out, "property double rho")?;
    writeln!(out, "end_header")?;
    for v in 0..mesh.vertex_count() {
        if let Some(p) = positions {
            for x in p[v] {
                out.write_all(&x.to_le_bytes())?;
            }
        }
        out.write_all(&rho_vertex[v].to_le_bytes())?;
    }
    for (f, r) in mesh.faces().iter().zip(rho) {
        out.write_all(&[3u8])?;
        for &v in f {
            let v = i32::try_from(v).map_err(|_| Error::Precondition("vertex index exceeds PLY int".into()))?;
            out.write_all(&v.to_le_bytes())?;
        }
        out.write_all(&r.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate;

    const TET_OFF: &str = "OFF\n# regular tetrahedron\n4 4 6\n1 1 1\n1 -1 -1\n-1 1 -1\n-1 -1 1\n\
                           3 0 1 2\n3 0 3 1\n3 0 2 3\n3 1 3 2\n";

    #[test]
    fn reads_tetrahedron_off() {
        let mesh = read_off(TET_OFF.as_bytes()).unwrap();
        let topo = mesh.topology();
        assert_eq!((topo.vertex_count, topo.edge_count, topo.face_count, topo.genus), (4, 6, 4, 0));
        assert!((mesh.edge_length(0) - 8f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn open_off_is_a_topology_error() {
        let open = TET_OFF.replace("4 4 6", "4 3 6").replace("3 1 3 2\n", "");
        assert!(matches!(read_off(open.as_bytes()), Err(Error::Topology(_))));
    }

    #[test]
    fn malformed_off_is_a_parse_error() {
        assert!(matches!(read_off("OFF\n4 4".as_bytes()), Err(Error::Parse(_))));
        assert!(matches!(read_off("PLY\n".as_bytes()), Err(Error::Parse(_))));
        let quad = TET_OFF.replace("3 0 1 2", "4 0 1 2 3");
        assert!(matches!(read_off(quad.as_bytes()), Err(Error::Parse(_))));
    }

    #[test]
    fn obj_quads_are_fanned() {
        // Unit cube made of quads, texture/normal indices included.
        let obj = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nv 0 0 1\nv 1 0 1\nv 1 1 1\nv 0 1 1\n\
                   vn 0 0 1\n\
                   f 1//1 4//1 3//1 2//1\nf 5/1/1 6/1/1 7/1/1 8/1/1\nf 1 2 6 5\nf 2 3 7 6\nf 3 4 8 7\nf 4 1 5 8\n";
        let mesh = read_obj(obj.as_bytes()).unwrap();
        let topo = mesh.topology();
        assert_eq!((topo.vertex_count, topo.face_count, topo.genus), (8, 12, 0));
        assert!((mesh.total_area() - 6.0).abs() < 1e-14);
    }

    #[test]
    fn intrinsic_json_round_trip() {
        for mesh in
            [generate::flat_torus(2).unwrap(), generate::genus2_octagon(1).unwrap(), generate::flat_torus(5).unwrap()]
        {
            let mut buf = Vec::new();
            write_intrinsic_json(&mut buf, &mesh).unwrap();
            let text = String::from_utf8(buf.clone()).unwrap();
            assert_eq!(text.contains("face_edges"), !mesh.is_pair_keyed());
            let back = read_intrinsic_json(buf.as_slice()).unwrap();
            assert_eq!(back.topology(), mesh.topology());
            let sorted = |m: &TriangleMesh| {
                let mut l = m.edge_lengths();
                l.sort_by(f64::total_cmp);
                l
            };
            assert_eq!(sorted(&back), sorted(&mesh));
        }
    }

    #[test]
    fn four_dimensional_off_round_trip() {
        let n = 5;
        let mesh = generate::flat_torus(n).unwrap();
        let mut buf = Vec::new();
        write_off(&mut buf, &generate::flat_torus_clifford_points(n), mesh.faces()).unwrap();
        assert!(buf.starts_with(b"4OFF\n25 50 0\n"));
        let back = read_off(buf.as_slice()).unwrap().normalize_area();
        assert_eq!(back.topology(), mesh.topology());
        for (a, b) in back.face_areas().iter().zip(mesh.face_areas()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn ply_layout() {
        let mesh = generate::flat_torus(3).unwrap();
        let rho = vec![1.0; mesh.face_count()];
        let rho_v = vec![1.0; mesh.vertex_count()];
        let mut buf = Vec::new();
        write_rho_ply(&mut buf, &mesh, &rho, &rho_v).unwrap();
        let header_end = buf.windows(11).position(|w| w == b"end_header\n").unwrap() + 11;
        let body = buf.len() - header_end;
        assert_eq!(body, 9 * 8 + 18 * (1 + 12 + 8));
        assert!(write_rho_ply(&mut Vec::new(), &mesh, &rho[1..], &rho_v).is_err());
    }
}
