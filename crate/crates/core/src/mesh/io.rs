//! Plain-text mesh format:
//!
//! ```text
//! V T E
//! x y          (V lines)
//! i j k        (T lines, 0-based, counterclockwise)
//! a b tag      (E lines, tag ∈ {I, R, D}; E may be 0)
//! ```
//!
//! Tokens are whitespace-separated and `#` starts a comment.

use std::io::{BufRead, Write};

use super::{DomainSpec, EdgeKind, Mesh, Point};
use crate::{Error, Result};

struct Lines<R> {
    inner: std::io::Lines<R>,
    line: usize,
}

impl<R: BufRead> Lines<R> {
    /// Next non-empty line with comments stripped.
    fn next_tokens(&mut self) -> Result<Option<Vec<String>>> {
        for l in self.inner.by_ref() {
            self.line += 1;
            let l = l?;
            let content = l.split('#').next().unwrap_or("");
            let toks: Vec<String> = content.split_whitespace().map(str::to_owned).collect();
            if !toks.is_empty() {
                return Ok(Some(toks));
            }
        }
        Ok(None)
    }

    fn expect(&mut self, n: usize, what: &str) -> Result<Vec<String>> {
        let toks = self.next_tokens()?.ok_or_else(|| self.err(format!("unexpected end of file, expected {what}")))?;
        if toks.len() != n {
            return Err(self.err(format!("expected {n} fields for {what}, found {}", toks.len())));
        }
        Ok(toks)
    }

    fn err(&self, msg: String) -> Error {
        Error::Parse { line: self.line, msg }
    }

    fn parse<T: std::str::FromStr>(&self, tok: &str) -> Result<T> {
        tok.parse().map_err(|_| self.err(format!("cannot parse '{tok}'")))
    }
}

/// Reads a mesh. When the edge section is empty, boundary tags are inferred
/// from `domain`, which is then required.
pub fn read_mesh<R: BufRead>(reader: R, domain: Option<&DomainSpec>) -> Result<Mesh> {
    let mut lines = Lines { inner: reader.lines(), line: 0 };
    let header = lines.expect(3, "header `V T E`")?;
    let (nv, nt, ne): (usize, usize, usize) = (lines.parse(&header[0])?, lines.parse(&header[1])?, lines.parse(&header[2])?);

    let mut vertices: Vec<Point> = Vec::with_capacity(nv);
    for _ in 0..nv {
        let t = lines.expect(2, "vertex `x y`")?;
        vertices.push([lines.parse(&t[0])?, lines.parse(&t[1])?]);
    }
    let mut triangles = Vec::with_capacity(nt);
    for _ in 0..nt {
        let t = lines.expect(3, "triangle `i j k`")?;
        let tri = [lines.parse(&t[0])?, lines.parse(&t[1])?, lines.parse(&t[2])?];
        if tri.iter().any(|&v: &usize| v >= nv) {
            return Err(lines.err(format!("triangle {tri:?} references a vertex beyond {nv}")));
        }
        triangles.push(tri);
    }
    let mut tags = Vec::with_capacity(ne);
    for _ in 0..ne {
        let t = lines.expect(3, "edge `a b tag`")?;
        let kind = match t[2].as_str() {
            "I" => EdgeKind::Interior,
            "R" => EdgeKind::Robin,
            "D" => EdgeKind::Dirichlet,
            other => return Err(lines.err(format!("unknown edge tag '{other}'"))),
        };
        tags.push(([lines.parse(&t[0])?, lines.parse(&t[1])?], kind));
    }
    if lines.next_tokens()?.is_some() {
        return Err(lines.err("trailing content after the declared sections".into()));
    }

    if ne > 0 {
        Mesh::with_tags(vertices, triangles, &tags)
    } else {
        let domain = domain.ok_or_else(|| Error::Config("mesh file has no edge tags and no domain was given".into()))?;
        Mesh::new(vertices, triangles, domain)
    }
}

pub fn write_mesh<W: Write>(mesh: &Mesh, mut w: W) -> std::io::Result<()> {
    writeln!(w, "{} {} {}", mesh.vertices().len(), mesh.n_elements(), mesh.n_edges())?;
    for v in mesh.vertices() {
        writeln!(w, "{:?} {:?}", v[0], v[1])?;
    }
    for t in mesh.triangles() {
        writeln!(w, "{} {} {}", t[0], t[1], t[2])?;
    }
    for e in mesh.edges() {
        writeln!(w, "{} {} {}", e.vertices[0], e.vertices[1], e.kind.tag())?;
    }
    Ok(())
}
