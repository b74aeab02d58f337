//! Import/export of Triangle's `.node` / `.ele` text format.
//!
//! `.node`: header `N 2 0 M` (M in {0,1}), then N lines `index x y [marker]`.
//! `.ele`:  header `K 3 0`, then K lines `index v1 v2 v3`.
//! Whitespace-separated; `#` starts a comment. Both 0- and 1-based index
//! files are accepted, detected from the first vertex index.

use super::Mesh2D;
use crate::{Error, Result};

struct Lines<'a> {
    // (1-based line number, tokenized content) for non-empty lines
    rows: Vec<(usize, Vec<&'a str>)>,
    cursor: usize,
    last_line: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        let mut rows = Vec::new();
        let mut last_line = 0;
        for (i, raw) in text.lines().enumerate() {
            last_line = i + 1;
            let content = raw.split('#').next().unwrap_or("");
            let tokens: Vec<&str> = content.split_whitespace().collect();
            if !tokens.is_empty() {
                rows.push((i + 1, tokens));
            }
        }
        Lines {
            rows,
            cursor: 0,
            last_line,
        }
    }

    fn next(&mut self, what: &str) -> Result<(usize, &[&'a str])> {
        match self.rows.get(self.cursor) {
            Some((line, tokens)) => {
                self.cursor += 1;
                Ok((*line, tokens))
            }
            None => Err(Error::Parse {
                line: self.last_line + 1,
                msg: format!("expected {what}, found end of input"),
            }),
        }
    }

    fn expect_end(&self, what: &str) -> Result<()> {
        if let Some((line, _)) = self.rows.get(self.cursor) {
            return Err(Error::Parse {
                line: *line,
                msg: format!("unexpected content after {what}"),
            });
        }
        Ok(())
    }
}

fn parse_num<T: std::str::FromStr>(line: usize, token: &str, what: &str) -> Result<T> {
    token.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("cannot parse {what} from {token:?}"),
    })
}

/// Parse a `.node`/`.ele` pair into a validated mesh. Boundary markers are
/// used when the `.node` header declares them, otherwise flags are
/// recomputed from vertex positions. Clockwise triangles are reoriented.
pub fn import_triangle_mesh(node_text: &str, ele_text: &str) -> Result<Mesh2D> {
    let (vertices, markers, base) = parse_node(node_text)?;
    let triangles = parse_ele(ele_text, vertices.len(), base)?;
    Mesh2D::from_parts(vertices, triangles, markers, true)
}

fn parse_node(text: &str) -> Result<(Vec<[f64; 2]>, Option<Vec<bool>>, usize)> {
    let mut lines = Lines::new(text);
    let (hline, header) = lines.next(".node header")?;
    if header.len() < 4 {
        return Err(Error::Parse {
            line: hline,
            msg: format!(".node header needs 4 fields, found {}", header.len()),
        });
    }
    let n: usize = parse_num(hline, header[0], "vertex count")?;
    let dim: usize = parse_num(hline, header[1], "dimension")?;
    let nattr: usize = parse_num(hline, header[2], "attribute count")?;
    let nmark: usize = parse_num(hline, header[3], "marker flag")?;
    if dim != 2 {
        return Err(Error::Parse {
            line: hline,
            msg: format!("only dimension 2 is supported, found {dim}"),
        });
    }
    if nattr != 0 {
        return Err(Error::Parse {
            line: hline,
            msg: format!("vertex attributes are not supported, found {nattr}"),
        });
    }
    if nmark > 1 {
        return Err(Error::Parse {
            line: hline,
            msg: format!("marker flag must be 0 or 1, found {nmark}"),
        });
    }
    if n == 0 {
        return Err(Error::Parse {
            line: hline,
            msg: "vertex count must be positive".into(),
        });
    }

    let mut vertices = Vec::with_capacity(n);
    let mut markers = if nmark == 1 {
        Some(Vec::with_capacity(n))
    } else {
        None
    };
    let mut base = 0usize;
    for i in 0..n {
        let (line, tokens) = lines.next("vertex line")?;
        let want = 3 + nmark;
        if tokens.len() != want {
            return Err(Error::Parse {
                line,
                msg: format!("vertex line needs {want} fields, found {}", tokens.len()),
            });
        }
        let idx: usize = parse_num(line, tokens[0], "vertex index")?;
        if i == 0 {
            base = match idx {
                0 | 1 => idx,
                other => {
                    return Err(Error::Parse {
                        line,
                        msg: format!("first vertex index must be 0 or 1, found {other}"),
                    })
                }
            };
        }
        if idx != base + i {
            return Err(Error::Parse {
                line,
                msg: format!("expected vertex index {}, found {idx}", base + i),
            });
        }
        let x: f64 = parse_num(line, tokens[1], "x coordinate")?;
        let y: f64 = parse_num(line, tokens[2], "y coordinate")?;
        vertices.push([x, y]);
        if let Some(m) = markers.as_mut() {
            let flag: i64 = parse_num(line, tokens[3], "boundary marker")?;
            m.push(flag != 0);
        }
    }
    lines.expect_end("the vertex list")?;
    Ok((vertices, markers, base))
}

fn parse_ele(text: &str, n_vertices: usize, base: usize) -> Result<Vec<[usize; 3]>> {
    let mut lines = Lines::new(text);
    let (hline, header) = lines.next(".ele header")?;
    if header.len() < 3 {
        return Err(Error::Parse {
            line: hline,
            msg: format!(".ele header needs 3 fields, found {}", header.len()),
        });
    }
    let k: usize = parse_num(hline, header[0], "triangle count")?;
    let per: usize = parse_num(hline, header[1], "nodes per triangle")?;
    let nattr: usize = parse_num(hline, header[2], "attribute count")?;
    if per != 3 {
        return Err(Error::Parse {
            line: hline,
            msg: format!("only 3-node triangles are supported, found {per}"),
        });
    }
    if nattr != 0 {
        return Err(Error::Parse {
            line: hline,
            msg: format!("triangle attributes are not supported, found {nattr}"),
        });
    }
    let mut triangles = Vec::with_capacity(k);
    for i in 0..k {
        let (line, tokens) = lines.next("triangle line")?;
        if tokens.len() != 4 {
            return Err(Error::Parse {
                line,
                msg: format!("triangle line needs 4 fields, found {}", tokens.len()),
            });
        }
        let idx: usize = parse_num(line, tokens[0], "triangle index")?;
        if idx != base + i {
            return Err(Error::Parse {
                line,
                msg: format!("expected triangle index {}, found {idx}", base + i),
            });
        }
        let mut tri = [0usize; 3];
        for (slot, token) in tri.iter_mut().zip(&tokens[1..]) {
            let v: usize = parse_num(line, token, "vertex reference")?;
            if v < base || v - base >= n_vertices {
                return Err(Error::Parse {
                    line,
                    msg: format!("triangle references missing vertex {v}"),
                });
            }
            *slot = v - base;
        }
        triangles.push(tri);
    }
    lines.expect_end("the triangle list")?;
    Ok(triangles)
}

/// Write the mesh back out as a `.node`/`.ele` pair (1-based, with boundary
/// markers). Coordinates use shortest round-trip formatting, so importing
/// the output reproduces the arrays exactly.
pub fn export_triangle_mesh(mesh: &Mesh2D) -> (String, String) {
    use std::fmt::Write;
    let mut node = String::new();
    writeln!(node, "{} 2 0 1", mesh.n_vertices()).unwrap();
    for (i, v) in mesh.vertices().iter().enumerate() {
        let marker = if mesh.is_boundary(i) { 1 } else { 0 };
        writeln!(node, "{} {} {} {}", i + 1, v[0], v[1], marker).unwrap();
    }
    let mut ele = String::new();
    writeln!(ele, "{} 3 0", mesh.n_triangles()).unwrap();
    for (k, t) in mesh.triangles().iter().enumerate() {
        writeln!(ele, "{} {} {} {}", k + 1, t[0] + 1, t[1] + 1, t[2] + 1).unwrap();
    }
    (node, ele)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_structured_mesh;
    use crate::Error;

    const TRI_NODE: &str = "3 2 0 0\n0 0.0 0.0\n1 1.0 0.0\n2 0.0 1.0\n";
    const TRI_ELE: &str = "1 3 0\n0 0 1 2\n";

    #[test]
    fn single_triangle_import() {
        let m = import_triangle_mesh(TRI_NODE, TRI_ELE).unwrap();
        assert_eq!(m.n_vertices(), 3);
        assert_eq!(m.n_triangles(), 1);
        assert!((m.tri_area(0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn clockwise_triangle_reoriented() {
        let ele = "1 3 0\n0 0 2 1\n"; // clockwise
        let m = import_triangle_mesh(TRI_NODE, ele).unwrap();
        assert!(m.tri_area(0) > 0.0);
    }

    #[test]
    fn one_based_files_accepted() {
        let node = "3 2 0 0\n1 0.0 0.0\n2 1.0 0.0\n3 0.0 1.0\n";
        let ele = "1 3 0\n1 1 2 3\n";
        let m = import_triangle_mesh(node, ele).unwrap();
        assert_eq!(m.n_triangles(), 1);
        assert_eq!(m.triangles()[0], [0, 1, 2]);
    }

    #[test]
    fn short_vertex_list_names_next_line() {
        let node = "4 2 0 0\n0 0.0 0.0\n1 1.0 0.0\n2 0.0 1.0\n";
        let err = import_triangle_mesh(node, TRI_ELE).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 5),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn missing_vertex_reference_rejected() {
        let ele = "1 3 0\n0 0 1 7\n";
        let err = import_triangle_mesh(TRI_NODE, ele).unwrap_err();
        match err {
            Error::Parse { line, msg } => {
                assert_eq!(line, 2);
                assert!(msg.contains("missing vertex"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn degenerate_triangle_rejected() {
        let node = "3 2 0 0\n0 0.0 0.0\n1 0.5 0.5\n2 1.0 1.0\n";
        let err = import_triangle_mesh(node, TRI_ELE).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn comments_and_markers_are_handled() {
        let node = "# a comment\n3 2 0 1\n0 0.0 0.0 1\n1 1.0 0.0 1 # inline\n2 0.0 1.0 1\n";
        let m = import_triangle_mesh(node, TRI_ELE).unwrap();
        assert!(m.boundary_flags().iter().all(|&b| b));
    }

    #[test]
    fn export_import_round_trip() {
        let m = build_structured_mesh(5).unwrap();
        let (node, ele) = export_triangle_mesh(&m);
        let m2 = import_triangle_mesh(&node, &ele).unwrap();
        assert_eq!(m.vertices(), m2.vertices());
        assert_eq!(m.triangles(), m2.triangles());
        assert_eq!(m.boundary_flags(), m2.boundary_flags());
    }
}
