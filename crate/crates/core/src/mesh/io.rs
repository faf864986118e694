//! Line-oriented text format:
//!
//! ```text
//! nodes <count>
//! x y            (count lines)
//! triangles <count>
//! i j k          (count lines, 0-based, counterclockwise)
//! boundary <count>
//! i j TAG        (count lines, TAG is `outer` or `interface`)
//! ```

use std::fmt::Write as _;

use nalgebra::Point2;

use super::{BoundaryEdge, BoundaryTag, Mesh};
use crate::error::{Error, Result};

/// Serializes a mesh. Coordinates use the shortest representation that
/// round-trips exactly.
pub fn write_mesh(mesh: &Mesh) -> String {
    let mut out = String::new();
    writeln!(out, "nodes {}", mesh.node_count()).unwrap();
    for p in mesh.nodes() {
        writeln!(out, "{:?} {:?}", p.x, p.y).unwrap();
    }
    writeln!(out, "triangles {}", mesh.triangles().len()).unwrap();
    for [i, j, k] in mesh.triangles() {
        writeln!(out, "{i} {j} {k}").unwrap();
    }
    writeln!(out, "boundary {}", mesh.boundary_edges().len()).unwrap();
    for e in mesh.boundary_edges() {
        writeln!(out, "{} {} {}", e.nodes[0], e.nodes[1], e.tag.as_str()).unwrap();
    }
    out
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn next_line(&mut self) -> Result<(usize, &'a str)> {
        for (i, line) in self.inner.by_ref() {
            self.last = i + 1;
            let line = line.trim();
            if !line.is_empty() {
                return Ok((i + 1, line));
            }
        }
        Err(Error::Parse { line: self.last + 1, message: "unexpected end of input".into() })
    }

    fn header(&mut self, name: &str) -> Result<usize> {
        let (line, text) = self.next_line()?;
        let mut parts = text.split_whitespace();
        match (parts.next(), parts.next(), parts.next()) {
            (Some(word), Some(count), None) if word == name => {
                count.parse().map_err(|_| Error::Parse { line, message: format!("bad {name} count {count:?}") })
            }
            _ => {
                Err(Error::Parse { line, message: format!("expected section header \"{name} <count>\", got {text:?}") })
            }
        }
    }
}

fn fields<const N: usize>(line: usize, text: &str) -> Result<[&str; N]> {
    let parts: Vec<&str> = text.split_whitespace().collect();
    parts
        .try_into()
        .map_err(|p: Vec<&str>| Error::Parse { line, message: format!("expected {N} fields, found {}", p.len()) })
}

fn number<T: std::str::FromStr>(line: usize, s: &str) -> Result<T> {
    s.parse().map_err(|_| Error::Parse { line, message: format!("invalid number {s:?}") })
}

fn index(line: usize, s: &str, count: usize) -> Result<usize> {
    let v: usize = number(line, s)?;
    if v >= count {
        return Err(Error::Parse { line, message: format!("node index out of range: {v} (mesh has {count} nodes)") });
    }
    Ok(v)
}

/// Parses the text format, validating the result like [`Mesh::new`].
pub fn read_mesh(text: &str) -> Result<Mesh> {
    let mut lines = Lines { inner: text.lines().enumerate(), last: 0 };

    let n_nodes = lines.header("nodes")?;
    let mut nodes = Vec::with_capacity(n_nodes);
    for _ in 0..n_nodes {
        let (line, text) = lines.next_line()?;
        let [x, y] = fields(line, text)?;
        nodes.push(Point2::new(number(line, x)?, number(line, y)?));
    }

    let n_tris = lines.header("triangles")?;
    let mut triangles = Vec::with_capacity(n_tris);
    for _ in 0..n_tris {
        let (line, text) = lines.next_line()?;
        let f: [&str; 3] = fields(line, text)?;
        let tri = [index(line, f[0], n_nodes)?, index(line, f[1], n_nodes)?, index(line, f[2], n_nodes)?];
        let [a, b, c] = tri.map(|v| nodes[v]);
        if !(super::signed_area2(&a, &b, &c) > 0.0) {
            return Err(Error::Parse { line, message: format!("triangle {tri:?} has non-positive area") });
        }
        triangles.push(tri);
    }

    let n_edges = lines.header("boundary")?;
    let mut edges = Vec::with_capacity(n_edges);
    for _ in 0..n_edges {
        let (line, text) = lines.next_line()?;
        let [i, j, tag] = fields(line, text)?;
        let tag = match tag {
            "outer" => BoundaryTag::OuterDirichlet,
            "interface" => BoundaryTag::Interface,
            other => return Err(Error::Parse { line, message: format!("unknown boundary tag {other:?}") }),
        };
        edges.push(BoundaryEdge { nodes: [index(line, i, n_nodes)?, index(line, j, n_nodes)?], tag });
    }

    if let Ok((line, text)) = lines.next_line() {
        return Err(Error::Parse { line, message: format!("trailing content {text:?}") });
    }

    Mesh::new(nodes, triangles, edges)
}
