use super::{MeshError, TriMesh};
use crate::geometry::Vec3;
use std::io::BufRead;
use std::path::Path;

/// Parses the `v` and `f` records of a Wavefront OBJ stream.
///
/// Polygons are fan-triangulated around their first vertex. Face indices
/// are 1-based; negative indices count back from the latest vertex. Other
/// record types (`vn`, `vt`, `o`, `g`, `s`, `usemtl`, ...) are skipped.
pub fn parse_obj<R: BufRead>(reader: R) -> Result<TriMesh, MeshError> {
    let mut vertices: Vec<Vec3> = Vec::new();
    let mut faces: Vec<(usize, [i64; 3])> = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| MeshError::Parse {
            line: lineno,
            reason: e.to_string(),
        })?;
        let line = line.split('#').next().unwrap_or("").trim();
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let coords: Vec<f64> = tokens
                    .take(3)
                    .map(|t| t.parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|e| MeshError::Parse {
                        line: lineno,
                        reason: format!("bad vertex: {e}"),
                    })?;
                if coords.len() != 3 {
                    return Err(MeshError::Parse {
                        line: lineno,
                        reason: format!("vertex needs 3 coordinates, got {}", coords.len()),
                    });
                }
                vertices.push(Vec3::new(coords[0], coords[1], coords[2]));
            }
            Some("f") => {
                let mut idx = Vec::new();
                for tok in tokens {
                    let first = tok.split('/').next().unwrap_or("");
                    let raw: i64 = first.parse().map_err(|_| MeshError::Parse {
                        line: lineno,
                        reason: format!("bad face index {tok:?}"),
                    })?;
                    let abs = match raw {
                        0 => {
                            return Err(MeshError::Parse {
                                line: lineno,
                                reason: "face index 0 is not valid".into(),
                            })
                        }
                        r if r > 0 => r - 1,
                        r => vertices.len() as i64 + r,
                    };
                    idx.push(abs);
                }
                if idx.len() < 3 {
                    return Err(MeshError::Parse {
                        line: lineno,
                        reason: format!("face needs at least 3 vertices, got {}", idx.len()),
                    });
                }
                for k in 1..idx.len() - 1 {
                    faces.push((lineno, [idx[0], idx[k], idx[k + 1]]));
                }
            }
            _ => {}
        }
    }
    let n = vertices.len();
    let mut triangles = Vec::with_capacity(faces.len());
    for (line, f) in faces {
        if let Some(&bad) = f.iter().find(|&&i| i < 0 || i as usize >= n) {
            let shown = if bad < 0 { bad } else { bad + 1 };
            return Err(MeshError::IndexOutOfRange {
                line,
                index: shown,
                count: n,
            });
        }
        triangles.push(f.map(|i| i as usize));
    }
    TriMesh::new(vertices, triangles)
}

pub fn read_obj_file(path: &Path) -> Result<TriMesh, MeshError> {
    let file = std::fs::File::open(path).map_err(|source| MeshError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_obj(std::io::BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_triangle() {
        let m = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3".as_bytes()).unwrap();
        assert_eq!(m.vertices().len(), 3);
        assert_eq!(m.triangles(), &[[0, 1, 2]]);
    }

    #[test]
    fn quad_is_fanned() {
        let src = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n";
        let m = parse_obj(src.as_bytes()).unwrap();
        assert_eq!(m.triangles(), &[[0, 1, 2], [0, 2, 3]]);
    }

    #[test]
    fn out_of_range_index() {
        let err = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 9".as_bytes()).unwrap_err();
        assert!(
            matches!(
                err,
                MeshError::IndexOutOfRange {
                    line: 4,
                    index: 9,
                    count: 3
                }
            ),
            "{err}"
        );
    }

    #[test]
    fn negative_indices_and_ignored_records() {
        let src = "# a comment\n\nv 0 0 0\nvn 0 0 1\nvt 0 0\nv 1 0 0\nv 0 1 0\no thing\nf -3/1/1 -2/1/1 -1/1/1\n";
        let m = parse_obj(src.as_bytes()).unwrap();
        assert_eq!(m.triangles(), &[[0, 1, 2]]);
    }

    #[test]
    fn malformed_vertex() {
        let err = parse_obj("v 0 zero 0\n".as_bytes()).unwrap_err();
        assert!(matches!(err, MeshError::Parse { line: 1, .. }));
        let err = parse_obj("v 0 0\n".as_bytes()).unwrap_err();
        assert!(matches!(err, MeshError::Parse { line: 1, .. }));
    }

    #[test]
    fn short_face() {
        let err = parse_obj("v 0 0 0\nv 1 0 0\nf 1 2\n".as_bytes()).unwrap_err();
        assert!(matches!(err, MeshError::Parse { line: 3, .. }));
    }
}
