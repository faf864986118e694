//! Conforming triangulations with tagged boundary edges.
//!
//! A [`Mesh`] owns node coordinates, counterclockwise triangles and the list of
//! boundary edges, each tagged either as part of the outer Dirichlet boundary
//! or as part of the (discrete) coupling interface. Construction validates the
//! triangulation so downstream code can index freely.

mod generate;
mod io;

pub use generate::{generate_benchmark_pair, generate_conforming_monolith, interface_curve, MonolithMesh, Side};
pub use io::{read_mesh, write_mesh};

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{Point2, Vector2};

use crate::error::{Error, Result};

/// Which part of the boundary an edge belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundaryTag {
    OuterDirichlet,
    Interface,
}

impl BoundaryTag {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundaryTag::OuterDirichlet => "outer",
            BoundaryTag::Interface => "interface",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub nodes: [usize; 2],
    pub tag: BoundaryTag,
}

/// An interface edge together with its outward unit normal and length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedEdge {
    pub nodes: [usize; 2],
    /// Triangle on the interior side of the edge.
    pub triangle: usize,
    pub normal: Vector2<f64>,
    pub length: f64,
}

/// A validated triangulation.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    nodes: Vec<Point2<f64>>,
    triangles: Vec<[usize; 3]>,
    boundary_edges: Vec<BoundaryEdge>,
    h: f64,
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Twice the signed area of a triangle.
pub(crate) fn signed_area2(a: &Point2<f64>, b: &Point2<f64>, c: &Point2<f64>) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y)
}

impl Mesh {
    /// Builds a mesh, checking index ranges, orientation and that the tagged
    /// boundary edges tile the topological boundary exactly.
    pub fn new(nodes: Vec<Point2<f64>>, triangles: Vec<[usize; 3]>, boundary_edges: Vec<BoundaryEdge>) -> Result<Self> {
        let count = nodes.len();
        let mut h: f64 = 0.0;
        let mut edge_use: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for (index, tri) in triangles.iter().enumerate() {
            for &v in tri {
                if v >= count {
                    return Err(Error::NodeOutOfRange { index: v, count });
                }
            }
            let [a, b, c] = tri.map(|v| nodes[v]);
            let area2 = signed_area2(&a, &b, &c);
            if !(area2 > 0.0) {
                return Err(Error::DegenerateTriangle { index, area: 0.5 * area2 });
            }
            for k in 0..3 {
                let (p, q) = (tri[k], tri[(k + 1) % 3]);
                h = h.max((nodes[q] - nodes[p]).norm());
                *edge_use.entry(edge_key(p, q)).or_default() += 1;
            }
        }
        if let Some((&(p, q), &n)) = edge_use.iter().find(|(_, &n)| n > 2) {
            return Err(Error::InvalidMesh(format!("edge ({p}, {q}) shared by {n} triangles")));
        }

        let topological: BTreeSet<(usize, usize)> = edge_use.iter().filter(|(_, &n)| n == 1).map(|(&e, _)| e).collect();
        let mut tagged = BTreeSet::new();
        for edge in &boundary_edges {
            let [p, q] = edge.nodes;
            for v in [p, q] {
                if v >= count {
                    return Err(Error::NodeOutOfRange { index: v, count });
                }
            }
            let key = edge_key(p, q);
            if !topological.contains(&key) {
                return Err(Error::InvalidMesh(format!("tagged edge ({p}, {q}) is not a boundary edge")));
            }
            if !tagged.insert(key) {
                return Err(Error::InvalidMesh(format!("boundary edge ({p}, {q}) tagged twice")));
            }
        }
        if let Some(&(p, q)) = topological.difference(&tagged).next() {
            return Err(Error::InvalidMesh(format!("boundary edge ({p}, {q}) carries no tag")));
        }

        Ok(Mesh { nodes, triangles, boundary_edges, h })
    }

    pub fn nodes(&self) -> &[Point2<f64>] {
        &self.nodes
    }

    pub fn node(&self, index: usize) -> Point2<f64> {
        self.nodes[index]
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary_edges
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Number of scalar unknowns (two per node).
    pub fn dof_count(&self) -> usize {
        2 * self.nodes.len()
    }

    /// Longest edge over all triangles.
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn triangle_coords(&self, t: usize) -> [Point2<f64>; 3] {
        self.triangles[t].map(|v| self.nodes[v])
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_coords(t);
        0.5 * signed_area2(&a, &b, &c)
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    /// For every node, the triangles that contain it (in increasing order).
    pub fn node_triangles(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for (t, tri) in self.triangles.iter().enumerate() {
            for &v in tri {
                adj[v].push(t);
            }
        }
        adj
    }

    /// Nodes that lie on at least one edge with the given tag, sorted.
    pub fn tagged_nodes(&self, tag: BoundaryTag) -> BTreeSet<usize> {
        self.boundary_edges.iter().filter(|e| e.tag == tag).flat_map(|e| e.nodes).collect()
    }

    /// Interface nodes ordered along the interface polyline, starting from the
    /// endpoint with the lower node index.
    pub fn interface_nodes(&self) -> Result<Vec<usize>> {
        let mut adj: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        let mut edge_count = 0;
        for e in self.boundary_edges.iter().filter(|e| e.tag == BoundaryTag::Interface) {
            let [p, q] = e.nodes;
            adj.entry(p).or_default().push(q);
            adj.entry(q).or_default().push(p);
            edge_count += 1;
        }
        if edge_count == 0 {
            return Err(Error::Interface("mesh has no interface edges".into()));
        }
        if let Some((&v, n)) = adj.iter().find(|(_, n)| n.len() > 2) {
            return Err(Error::Interface(format!("node {v} has {} interface neighbours (branching)", n.len())));
        }
        let ends: Vec<usize> = adj.iter().filter(|(_, n)| n.len() == 1).map(|(&v, _)| v).collect();
        if ends.len() != 2 {
            return Err(Error::Interface(format!("expected an open polyline with 2 endpoints, found {}", ends.len())));
        }
        let mut order = Vec::with_capacity(adj.len());
        let mut prev = usize::MAX;
        let mut cur = ends[0];
        loop {
            order.push(cur);
            let next = adj[&cur].iter().copied().find(|&n| n != prev);
            match next {
                Some(n) if order.len() <= adj.len() => {
                    prev = cur;
                    cur = n;
                }
                _ => break,
            }
        }
        if order.len() != adj.len() || order.last() != Some(&ends[1]) {
            return Err(Error::Interface("interface edges are not a single connected polyline".into()));
        }
        Ok(order)
    }

    /// Interface edges with outward unit normals, in polyline order.
    pub fn interface_edges(&self) -> Result<Vec<OrientedEdge>> {
        let order = self.interface_nodes()?;
        let adj = self.node_triangles();
        order
            .windows(2)
            .map(|w| {
                let (a, b) = (w[0], w[1]);
                let triangle = adj[a]
                    .iter()
                    .copied()
                    .find(|t| self.triangles[*t].contains(&b))
                    .ok_or_else(|| Error::Interface(format!("edge ({a}, {b}) has no adjacent triangle")))?;
                let third = self.triangles[triangle]
                    .iter()
                    .copied()
                    .find(|&v| v != a && v != b)
                    .expect("triangle has three distinct vertices");
                let tangent = self.nodes[b] - self.nodes[a];
                let length = tangent.norm();
                let mut normal = Vector2::new(tangent.y, -tangent.x) / length;
                if normal.dot(&(self.nodes[third] - self.nodes[a])) > 0.0 {
                    normal = -normal;
                }
                Ok(OrientedEdge { nodes: [a, b], triangle, normal, length })
            })
            .collect()
    }
}

/// The two independently meshed subdomains of a coupling problem.
#[derive(Debug, Clone)]
pub struct MeshPair {
    pub slave: Mesh,
    pub master: Mesh,
    pub h: f64,
}

impl MeshPair {
    pub fn new(slave: Mesh, master: Mesh) -> Result<Self> {
        for (name, mesh) in [("slave", &slave), ("master", &master)] {
            if mesh.tagged_nodes(BoundaryTag::Interface).is_empty() {
                return Err(Error::Interface(format!("{name} mesh has no interface edges")));
            }
        }
        let h = slave.h().max(master.h());
        Ok(MeshPair { slave, master, h })
    }
}
