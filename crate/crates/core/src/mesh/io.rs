use std::io::Write;
use std::path::Path;

use super::{MeshError, TriangleMesh, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Off,
    Obj,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Result<Self, MeshError> {
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
        match ext.as_str() {
            "off" => Ok(Self::Off),
            "obj" => Ok(Self::Obj),
            other => Err(MeshError::UnsupportedFormat(other.to_string())),
        }
    }
}

/// Reads and validates a mesh. The format is taken from `format` or, when
/// `None`, from the file extension.
pub fn load_mesh(path: impl AsRef<Path>, format: Option<MeshFormat>) -> Result<TriangleMesh, MeshError> {
    let path = path.as_ref();
    let format = match format {
        Some(f) => f,
        None => MeshFormat::from_path(path)?,
    };
    let text = std::fs::read_to_string(path).map_err(|source| MeshError::Io { path: path.to_path_buf(), source })?;
    parse_mesh(&text, format)
}

pub fn parse_mesh(text: &str, format: MeshFormat) -> Result<TriangleMesh, MeshError> {
    match format {
        MeshFormat::Off => parse_off(text),
        MeshFormat::Obj => parse_obj(text),
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> MeshError {
    MeshError::Parse { line, message: message.into() }
}

fn parse_f64(line: usize, tok: &str) -> Result<f64, MeshError> {
    tok.parse::<f64>().map_err(|_| parse_err(line, format!("expected a number, found {tok:?}")))
}

fn parse_usize(line: usize, tok: &str) -> Result<usize, MeshError> {
    tok.parse::<usize>().map_err(|_| parse_err(line, format!("expected a non-negative integer, found {tok:?}")))
}

/// ASCII OFF: `OFF` header, `nv nf ne` counts, vertex lines, `3 i j k` faces.
/// Extra values after a vertex's coordinates are ignored.
pub fn parse_off(text: &str) -> Result<TriangleMesh, MeshError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (header_line, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let mut header_tokens = header.split_whitespace();
    if header_tokens.next() != Some("OFF") {
        return Err(parse_err(header_line, "missing OFF header"));
    }
    // Counts may follow the header on the same line.
    let rest: Vec<&str> = header_tokens.collect();
    let (count_line, counts): (usize, Vec<&str>) = if rest.is_empty() {
        let (l, c) = lines.next().ok_or_else(|| parse_err(header_line, "missing counts line"))?;
        (l, c.split_whitespace().collect())
    } else {
        (header_line, rest)
    };
    if counts.len() < 2 {
        return Err(parse_err(count_line, "counts line needs vertex and face counts"));
    }
    let nv = parse_usize(count_line, counts[0])?;
    let nf = parse_usize(count_line, counts[1])?;

    let mut positions: Vec<Vec3> = Vec::with_capacity(nv.min(1 << 20));
    for _ in 0..nv {
        let (l, content) = lines.next().ok_or_else(|| parse_err(count_line, format!("expected {nv} vertices")))?;
        let toks: Vec<&str> = content.split_whitespace().collect();
        if toks.len() < 3 {
            return Err(parse_err(l, "vertex line needs three coordinates"));
        }
        positions.push([parse_f64(l, toks[0])?, parse_f64(l, toks[1])?, parse_f64(l, toks[2])?]);
    }
    let mut triangles = Vec::with_capacity(nf.min(1 << 20));
    for _ in 0..nf {
        let (l, content) = lines.next().ok_or_else(|| parse_err(count_line, format!("expected {nf} faces")))?;
        let toks: Vec<&str> = content.split_whitespace().collect();
        let arity = parse_usize(l, toks[0])?;
        if arity != 3 {
            return Err(parse_err(l, format!("only triangles are supported, found a {arity}-gon")));
        }
        if toks.len() < 4 {
            return Err(parse_err(l, "face line needs three vertex indices"));
        }
        triangles.push([parse_usize(l, toks[1])?, parse_usize(l, toks[2])?, parse_usize(l, toks[3])?]);
    }
    TriangleMesh::new(positions, triangles)
}

/// Wavefront OBJ restricted to `v` and triangular `f` records. Texture and
/// normal indices (`f 1/2/3 ...`) are stripped; negative indices are
/// resolved relative to the current vertex count.
pub fn parse_obj(text: &str) -> Result<TriangleMesh, MeshError> {
    let mut positions: Vec<Vec3> = Vec::new();
    let mut triangles = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let l = i + 1;
        let content = line.split('#').next().unwrap_or("");
        let mut toks = content.split_whitespace();
        match toks.next() {
            Some("v") => {
                let coords: Vec<&str> = toks.collect();
                if coords.len() < 3 {
                    return Err(parse_err(l, "vertex record needs three coordinates"));
                }
                positions.push([parse_f64(l, coords[0])?, parse_f64(l, coords[1])?, parse_f64(l, coords[2])?]);
            }
            Some("f") => {
                let refs: Vec<&str> = toks.collect();
                if refs.len() != 3 {
                    return Err(parse_err(l, format!("only triangles are supported, found {} vertices", refs.len())));
                }
                let mut tri = [0usize; 3];
                for (slot, r) in tri.iter_mut().zip(&refs) {
                    let idx = r.split('/').next().unwrap_or("");
                    let raw: i64 = idx.parse().map_err(|_| parse_err(l, format!("bad face index {r:?}")))?;
                    *slot = resolve_obj_index(raw, positions.len()).ok_or_else(|| {
                        parse_err(l, format!("face index {raw} out of range for {} vertices", positions.len()))
                    })?;
                }
                triangles.push(tri);
            }
            _ => {}
        }
    }
    TriangleMesh::new(positions, triangles)
}

fn resolve_obj_index(raw: i64, count: usize) -> Option<usize> {
    match raw {
        0 => None,
        r if r > 0 => Some(r as usize - 1),
        r => {
            let back = r.unsigned_abs() as usize;
            count.checked_sub(back)
        }
    }
}

pub fn write_off<W: Write>(mesh: &TriangleMesh, out: W) -> std::io::Result<()> {
    write_off_with_scalars(mesh, &[], out)
}

/// OFF with extra per-vertex columns appended to each vertex line. Field
/// names are listed in a comment after the header.
pub fn write_off_with_scalars<W: Write>(
    mesh: &TriangleMesh,
    fields: &[(&str, &[f64])],
    mut out: W,
) -> std::io::Result<()> {
    for (name, values) in fields {
        if values.len() != mesh.vertex_count() {
            return Err(std::io::Error::new(
                std::io::ErrorKind::InvalidInput,
                format!("field {name} has {} values for {} vertices", values.len(), mesh.vertex_count()),
            ));
        }
    }
    writeln!(out, "OFF")?;
    if !fields.is_empty() {
        let names: Vec<&str> = fields.iter().map(|(n, _)| *n).collect();
        writeln!(out, "# vertex fields: x y z {}", names.join(" "))?;
    }
    writeln!(out, "{} {} 0", mesh.vertex_count(), mesh.triangle_count())?;
    for (v, p) in mesh.positions().iter().enumerate() {
        write!(out, "{:?} {:?} {:?}", p[0], p[1], p[2])?;
        for (_, values) in fields {
            write!(out, " {:?}", values[v])?;
        }
        writeln!(out)?;
    }
    for t in mesh.triangles() {
        writeln!(out, "3 {} {} {}", t[0], t[1], t[2])?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const TRIANGLE_OFF: &str = "OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n";

    #[test]
    fn minimal_off() {
        let m = parse_off(TRIANGLE_OFF).unwrap();
        assert_eq!(m.vertex_count(), 3);
        assert_eq!(m.triangle_count(), 1);
    }

    #[test]
    fn off_counts_on_header_line_and_comments() {
        let m = parse_off("OFF 3 1 0 # counts\n# a comment\n0 0 0\n1 0 0\n0 1 0 0.5\n3 0 1 2\n").unwrap();
        assert_eq!(m.position(2), [0.0, 1.0, 0.0]);
    }

    #[test]
    fn off_rejects_quads() {
        let err = parse_off("OFF\n4 1 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n").unwrap_err();
        assert!(matches!(err, MeshError::Parse { line: 7, .. }), "{err}");
    }

    #[test]
    fn off_truncated() {
        assert!(matches!(parse_off("OFF\n3 1 0\n0 0 0\n"), Err(MeshError::Parse { .. })));
        assert!(matches!(parse_off(""), Err(MeshError::Parse { .. })));
        assert!(matches!(parse_off("PLY\n"), Err(MeshError::Parse { .. })));
    }

    #[test]
    fn off_index_out_of_range() {
        let mut text = String::from("OFF\n10 1 0\n");
        for i in 0..10 {
            text.push_str(&format!("{i} 0 0\n"));
        }
        text.push_str("3 0 1 99\n");
        let err = parse_off(&text).unwrap_err();
        assert!(err.to_string().contains("index out of range"));
    }

    #[test]
    fn obj_with_texture_and_negative_indices() {
        let m = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nf 1/1/1 2//2 -1\n").unwrap();
        assert_eq!(m.triangles(), &[[0, 1, 2]]);
    }

    #[test]
    fn obj_zero_index_rejected() {
        assert!(matches!(parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 0 1 2\n"), Err(MeshError::Parse { .. })));
    }

    #[test]
    fn off_roundtrip_with_scalars() {
        let m = parse_off(TRIANGLE_OFF).unwrap();
        let mut buf = Vec::new();
        write_off_with_scalars(&m, &[("hks", &[0.1, 0.2, 0.3])], &mut buf).unwrap();
        let back = parse_off(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(back.positions(), m.positions());
        assert_eq!(back.triangles(), m.triangles());
    }

    #[test]
    fn format_from_extension() {
        assert_eq!(MeshFormat::from_path(Path::new("a/b.OFF")).unwrap(), MeshFormat::Off);
        assert_eq!(MeshFormat::from_path(Path::new("b.obj")).unwrap(), MeshFormat::Obj);
        assert!(MeshFormat::from_path(Path::new("b.ply")).is_err());
    }

    #[test]
    fn missing_file_names_path() {
        let err = load_mesh("/nonexistent/dir/mesh.off", None).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/dir/mesh.off"));
    }
}
