//! Sheared structured grids on either side of the curve x = -cos(2πy)/5.

use std::f64::consts::PI;

use nalgebra::Point2;

use super::{BoundaryEdge, BoundaryTag, Mesh, MeshPair};
use crate::error::{Error, Result};

/// The continuous interface x = -cos(2πy)/5 on y ∈ [0, 1].
pub fn interface_curve(y: f64) -> f64 {
    -0.2 * (2.0 * PI * y).cos()
}

/// Which subdomain a triangle of a monolithic mesh belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Slave,
    Master,
}

/// A conforming mesh of the whole rectangle with a per-triangle side label.
#[derive(Debug, Clone)]
pub struct MonolithMesh {
    pub mesh: Mesh,
    pub sides: Vec<Side>,
}

/// Column layout of one sheared grid: `x(i, j)` for i in 0..=nx, j in 0..=ny.
struct Grid<F> {
    nx: usize,
    ny: usize,
    x: F,
}

impl<F: Fn(usize, f64) -> f64> Grid<F> {
    fn index(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    fn nodes(&self) -> Vec<Point2<f64>> {
        let mut nodes = Vec::with_capacity((self.nx + 1) * (self.ny + 1));
        for j in 0..=self.ny {
            let y = j as f64 / self.ny as f64;
            for i in 0..=self.nx {
                nodes.push(Point2::new((self.x)(i, y), y));
            }
        }
        nodes
    }

    /// Two triangles per cell, split along the shorter diagonal.
    fn triangles(&self, nodes: &[Point2<f64>]) -> Vec<[usize; 3]> {
        let mut tris = Vec::with_capacity(2 * self.nx * self.ny);
        for j in 0..self.ny {
            for i in 0..self.nx {
                let a = self.index(i, j);
                let b = self.index(i + 1, j);
                let c = self.index(i + 1, j + 1);
                let d = self.index(i, j + 1);
                let ac = (nodes[c] - nodes[a]).norm();
                let bd = (nodes[d] - nodes[b]).norm();
                if bd < ac * (1.0 - 1e-9) {
                    tris.push([a, b, d]);
                    tris.push([b, c, d]);
                } else {
                    tris.push([a, b, c]);
                    tris.push([a, c, d]);
                }
            }
        }
        tris
    }

    fn edges(&self, left: BoundaryTag, right: BoundaryTag) -> Vec<BoundaryEdge> {
        let outer = BoundaryTag::OuterDirichlet;
        let mut edges = Vec::with_capacity(2 * (self.nx + self.ny));
        for i in 0..self.nx {
            edges.push(BoundaryEdge { nodes: [self.index(i, 0), self.index(i + 1, 0)], tag: outer });
            edges.push(BoundaryEdge { nodes: [self.index(i, self.ny), self.index(i + 1, self.ny)], tag: outer });
        }
        for j in 0..self.ny {
            edges.push(BoundaryEdge { nodes: [self.index(0, j), self.index(0, j + 1)], tag: left });
            edges.push(BoundaryEdge { nodes: [self.index(self.nx, j), self.index(self.nx, j + 1)], tag: right });
        }
        edges
    }
}

fn columns(n: usize, ny_factor: f64) -> Result<usize> {
    if !(ny_factor.is_finite() && ny_factor > 0.0) {
        return Err(Error::InvalidArgument(format!("ny_factor must be positive, got {ny_factor}")));
    }
    Ok(((ny_factor * n as f64).ceil() as usize).max(1))
}

fn check_count(name: &str, n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("{name} must be at least 2, got {n}")));
    }
    Ok(())
}

fn slave_x(nx: usize) -> impl Fn(usize, f64) -> f64 {
    move |i, y| {
        let c = interface_curve(y);
        if i == nx {
            c
        } else {
            -1.0 + (1.0 + c) * (i as f64 / nx as f64)
        }
    }
}

fn master_x(nx: usize) -> impl Fn(usize, f64) -> f64 {
    move |i, y| {
        let c = interface_curve(y);
        if i == nx {
            1.0
        } else {
            c + (1.0 - c) * (i as f64 / nx as f64)
        }
    }
}

/// Meshes the slave region left of the curve and the master region right of
/// it. Each interface polyline has `n_slave` (resp. `n_master`) segments with
/// nodes exactly on the curve; `ny_factor` scales the number of element
/// columns across each subdomain relative to its interface count.
pub fn generate_benchmark_pair(n_slave: usize, n_master: usize, ny_factor: f64) -> Result<MeshPair> {
    check_count("n_slave", n_slave)?;
    check_count("n_master", n_master)?;

    let nx = columns(n_slave, ny_factor)?;
    let grid = Grid { nx, ny: n_slave, x: slave_x(nx) };
    let nodes = grid.nodes();
    let tris = grid.triangles(&nodes);
    let edges = grid.edges(BoundaryTag::OuterDirichlet, BoundaryTag::Interface);
    let slave = Mesh::new(nodes, tris, edges)?;

    let nx = columns(n_master, ny_factor)?;
    let grid = Grid { nx, ny: n_master, x: master_x(nx) };
    let nodes = grid.nodes();
    let tris = grid.triangles(&nodes);
    let edges = grid.edges(BoundaryTag::Interface, BoundaryTag::OuterDirichlet);
    let master = Mesh::new(nodes, tris, edges)?;

    MeshPair::new(slave, master)
}

/// A single conforming mesh of [-1, 1] x [0, 1] with `n_interface` element
/// columns on each side of the curve and an `n_interface`-segment polyline
/// on the curve as internal edges.
pub fn generate_conforming_monolith(n_interface: usize) -> Result<MonolithMesh> {
    check_count("n_interface", n_interface)?;
    let half = n_interface;
    let left = slave_x(half);
    let right = master_x(half);
    let grid = Grid {
        nx: 2 * half,
        ny: n_interface,
        x: move |i: usize, y: f64| {
            if i <= half {
                left(i, y)
            } else {
                right(i - half, y)
            }
        },
    };
    let nodes = grid.nodes();
    let tris = grid.triangles(&nodes);
    let edges = grid.edges(BoundaryTag::OuterDirichlet, BoundaryTag::OuterDirichlet);
    let sides = (0..n_interface)
        .flat_map(|_| (0..2 * half).flat_map(|i| [i, i]))
        .map(|i| if i < half { Side::Slave } else { Side::Master })
        .collect();
    Ok(MonolithMesh { mesh: Mesh::new(nodes, tris, edges)?, sides })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn min_angle_deg(mesh: &Mesh) -> f64 {
        let mut min = f64::INFINITY;
        for t in 0..mesh.triangles().len() {
            let p = mesh.triangle_coords(t);
            for k in 0..3 {
                let u = p[(k + 1) % 3] - p[k];
                let v = p[(k + 2) % 3] - p[k];
                let cos = u.dot(&v) / (u.norm() * v.norm());
                min = min.min(cos.clamp(-1.0, 1.0).acos().to_degrees());
            }
        }
        min
    }

    #[test]
    fn interface_segment_counts_and_endpoints() {
        let pair = generate_benchmark_pair(8, 8, 1.0).unwrap();
        let s = pair.slave.interface_nodes().unwrap();
        let m = pair.master.interface_nodes().unwrap();
        assert_eq!(s.len(), 9);
        assert_eq!(m.len(), 9);
        let first = pair.slave.node(s[0]);
        let last = pair.slave.node(*s.last().unwrap());
        assert!((first - Point2::new(-0.2, 0.0)).norm() < 1e-15);
        assert!((last - Point2::new(-0.2, 1.0)).norm() < 1e-15);
        let quarter = pair.slave.node(s[2]);
        assert!((quarter.y - 0.25).abs() < 1e-15);
        assert!(quarter.x.abs() < 1e-15);
    }

    #[test]
    fn interface_nodes_lie_on_curve() {
        for (ns, nm) in [(8, 8), (25, 100), (100, 25), (16, 32)] {
            let pair = generate_benchmark_pair(ns, nm, 1.0).unwrap();
            for mesh in [&pair.slave, &pair.master] {
                for v in mesh.tagged_nodes(BoundaryTag::Interface) {
                    let p = mesh.node(v);
                    assert!((p.x - interface_curve(p.y)).abs() <= 1e-12);
                }
            }
            assert_eq!(pair.h, pair.slave.h().max(pair.master.h()));
        }
    }

    #[test]
    fn ratio_one_to_four_counts() {
        let pair = generate_benchmark_pair(25, 100, 1.0).unwrap();
        assert_eq!(pair.slave.interface_nodes().unwrap().len() - 1, 25);
        assert_eq!(pair.master.interface_nodes().unwrap().len() - 1, 100);
    }

    #[test]
    fn subdomains_cover_rectangle() {
        let pair = generate_benchmark_pair(16, 16, 1.0).unwrap();
        // Both polylines interpolate the same curve at the same nodes, so the
        // areas add to exactly 2.
        assert!((pair.slave.area() + pair.master.area() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn refinement_halves_h_and_angles_stay_bounded() {
        // The curved interface makes n·h creep up towards its limit, so the
        // halving is asymptotic: the ratio stays within 0.5 + 0.3/n.
        let mut prev: Option<(usize, f64)> = None;
        for n in [2, 4, 8, 16, 32, 64, 128] {
            let pair = generate_benchmark_pair(n, n, 1.0).unwrap();
            if let Some((m, h)) = prev {
                let ratio = pair.slave.h() / h;
                assert!(ratio <= 0.5 + 0.3 / m as f64, "n={n}: ratio {ratio}");
            }
            prev = Some((n, pair.slave.h()));
            for mesh in [&pair.slave, &pair.master] {
                assert!(min_angle_deg(mesh) >= 10.0, "n={n}: {}", min_angle_deg(mesh));
            }
        }
        for (ns, nm) in [(3, 7), (25, 50), (50, 25), (100, 400)] {
            let pair = generate_benchmark_pair(ns, nm, 1.0).unwrap();
            assert!(min_angle_deg(&pair.slave) >= 10.0);
            assert!(min_angle_deg(&pair.master) >= 10.0);
        }
    }

    #[test]
    fn rejects_small_counts() {
        assert!(generate_benchmark_pair(1, 8, 1.0).is_err());
        assert!(generate_benchmark_pair(8, 1, 1.0).is_err());
        assert!(generate_benchmark_pair(8, 8, 0.0).is_err());
        assert!(generate_conforming_monolith(1).is_err());
    }

    #[test]
    fn monolith_side_labels() {
        for n in [4, 8, 13] {
            let mono = generate_conforming_monolith(n).unwrap();
            let mesh = &mono.mesh;
            assert_eq!(mono.sides.len(), mesh.triangles().len());
            let mut counts = [0, 0];
            for (t, side) in mono.sides.iter().enumerate() {
                let p = mesh.triangle_coords(t);
                let centroid = (p[0].coords + p[1].coords + p[2].coords) / 3.0;
                // Reconstruct the local polyline x at the centroid height.
                let j = (centroid.y * n as f64).floor();
                let (y0, y1) = (j / n as f64, (j + 1.0) / n as f64);
                let s = (centroid.y - y0) / (y1 - y0);
                let xi = (1.0 - s) * interface_curve(y0) + s * interface_curve(y1);
                match side {
                    Side::Slave => {
                        assert!(centroid.x < xi);
                        counts[0] += 1;
                    }
                    Side::Master => {
                        assert!(centroid.x > xi);
                        counts[1] += 1;
                    }
                }
            }
            assert!(counts[0] > 0 && counts[1] > 0);
            assert!((mesh.area() - 2.0).abs() < 1e-12);
        }
    }
}
