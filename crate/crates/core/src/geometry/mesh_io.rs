//! Plain-text mesh format.
//!
//! ```text
//! ve-mesh 1
//! v <x> <y>
//! t <i> <j> <k>
//! dirichlet box <xmin> <ymin> <xmax> <ymax>
//! dirichlet pair <i> <j>
//! dirichlet all
//! ```
//!
//! Indices are 0-based. Blank lines and lines starting with `#` are ignored.

use std::fmt::Write as _;
use std::path::Path;

use super::mesh::{build_mesh, EdgeSelector, EdgeTag, Mesh, Point2};
use crate::error::{Error, Result};

pub const MESH_HEADER: &str = "ve-mesh 1";

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

fn num<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| parse_err(line, format!("missing {what}")))?;
    tok.parse().map_err(|_| parse_err(line, format!("malformed {what} '{tok}'")))
}

pub fn parse_mesh(text: &str) -> Result<Mesh> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    match lines.by_ref().find(|(_, l)| !l.is_empty() && !l.starts_with('#')) {
        Some((_, l)) if l == MESH_HEADER => {}
        Some((n, l)) => return Err(parse_err(n, format!("expected header '{MESH_HEADER}', found '{l}'"))),
        None => return Err(parse_err(1, "empty mesh file")),
    }
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    let mut selectors = Vec::new();
    for (n, line) in lines {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut toks = line.split_whitespace();
        match toks.next() {
            Some("v") => {
                let x = num(toks.next(), n, "x coordinate")?;
                let y = num(toks.next(), n, "y coordinate")?;
                vertices.push(Point2::new(x, y));
            }
            Some("t") => {
                let i = num(toks.next(), n, "vertex index")?;
                let j = num(toks.next(), n, "vertex index")?;
                let k = num(toks.next(), n, "vertex index")?;
                triangles.push([i, j, k]);
            }
            Some("dirichlet") => match toks.next() {
                Some("box") => selectors.push(EdgeSelector::Box {
                    xmin: num(toks.next(), n, "xmin")?,
                    ymin: num(toks.next(), n, "ymin")?,
                    xmax: num(toks.next(), n, "xmax")?,
                    ymax: num(toks.next(), n, "ymax")?,
                }),
                Some("pair") => {
                    selectors.push(EdgeSelector::Pair(num(toks.next(), n, "vertex index")?, num(toks.next(), n, "vertex index")?))
                }
                Some("all") => selectors.push(EdgeSelector::All),
                other => return Err(parse_err(n, format!("unknown edge selector {other:?}"))),
            },
            Some(other) => return Err(parse_err(n, format!("unknown record '{other}'"))),
            None => {}
        }
        if let Some(extra) = toks.next() {
            return Err(parse_err(n, format!("trailing token '{extra}'")));
        }
    }
    build_mesh(vertices, triangles, &selectors)
}

pub fn read_mesh(path: &Path) -> Result<Mesh> {
    parse_mesh(&std::fs::read_to_string(path)?)
}

/// Writes the mesh with Dirichlet edges listed as explicit vertex pairs, so that
/// `parse_mesh(&write_mesh(m))` rebuilds the same mesh.
pub fn write_mesh(mesh: &Mesh) -> String {
    let mut out = String::new();
    writeln!(out, "{MESH_HEADER}").unwrap();
    for p in mesh.vertices() {
        writeln!(out, "v {:?} {:?}", p.x, p.y).unwrap();
    }
    for t in mesh.triangles() {
        writeln!(out, "t {} {} {}", t[0], t[1], t[2]).unwrap();
    }
    for e in mesh.edges().iter().filter(|e| e.tag == EdgeTag::DirichletBoundary) {
        writeln!(out, "dirichlet pair {} {}", e.v[0], e.v[1]).unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQUARE: &str = "ve-mesh 1\n# unit square\nv 0 0\nv 1 0\nv 1 1\nv 0 1\nt 0 1 2\nt 0 2 3\ndirichlet box 0 0 1 0\n";

    #[test]
    fn parses_square() {
        let m = parse_mesh(SQUARE).unwrap();
        assert_eq!(m.num_edges(), 5);
        assert_eq!(m.edges().iter().filter(|e| e.tag == EdgeTag::DirichletBoundary).count(), 1);
    }

    #[test]
    fn decimal_parsing_is_exact() {
        let m = parse_mesh("ve-mesh 1\nv 0.1 0.2\nv 1.3 0.2\nv 0.1 0.7\nt 0 1 2\ndirichlet all\n").unwrap();
        assert_eq!(m.vertices()[0].x, 0.1);
        assert_eq!(m.vertices()[1].x, 1.3);
        assert_eq!(m.vertices()[2].y, 0.7);
    }

    #[test]
    fn write_then_parse_is_identity() {
        let m = parse_mesh(SQUARE).unwrap();
        let again = parse_mesh(&write_mesh(&m)).unwrap();
        assert_eq!(again.vertices(), m.vertices());
        assert_eq!(again.triangles(), m.triangles());
        let tags = |m: &Mesh| m.edges().iter().map(|e| e.tag).collect::<Vec<_>>();
        assert_eq!(tags(&again), tags(&m));
    }

    #[test]
    fn rejects_bad_header_and_records() {
        assert!(matches!(parse_mesh("ve-mesh 2\n"), Err(Error::Parse { line: 1, .. })));
        let err = parse_mesh("ve-mesh 1\nv 0 zero\n").unwrap_err();
        assert!(err.to_string().contains("malformed y coordinate"), "{err}");
        assert!(parse_mesh("ve-mesh 1\nq 1\n").is_err());
        assert!(matches!(
            parse_mesh("ve-mesh 1\nv 0 0\nv 1 0\nv 0 1\nt 0 1 2\n"),
            Err(Error::EmptyDirichlet)
        ));
    }
}
