//! Node correspondences between the two discrete interfaces and the Taylor
//! expansions that carry slave-side data across the gap between them.

use nalgebra::{Matrix2, Vector2};

use crate::elasticity::{strain, stress, Field, LameParams};
use crate::error::{Error, Result};
use crate::mesh::{Mesh, OrientedEdge};
use crate::recovery::RecoveredJacobian;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapDirection {
    SlaveToMaster,
    MasterToSlave,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodePair {
    pub source: usize,
    pub target: usize,
    /// target − source coordinates.
    pub offset: Vector2<f64>,
}

/// Nearest interface node on the opposite mesh, for every source interface
/// node in polyline order.
#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceMap {
    pub direction: MapDirection,
    pub pairs: Vec<NodePair>,
    pub max_distance: f64,
}

/// Brute-force nearest neighbour over the target interface nodes; ties go to
/// the lowest target node index.
pub fn nearest_neighbor_map(source: &Mesh, target: &Mesh, direction: MapDirection) -> Result<InterfaceMap> {
    let sources = source.interface_nodes()?;
    let mut targets = target.interface_nodes()?;
    targets.sort_unstable();
    let mut max_distance: f64 = 0.0;
    let pairs = sources
        .iter()
        .map(|&s| {
            let p = source.node(s);
            let mut best = (f64::INFINITY, usize::MAX);
            for &t in &targets {
                let d = (target.node(t) - p).norm_squared();
                if d < best.0 {
                    best = (d, t);
                }
            }
            let offset = target.node(best.1) - p;
            max_distance = max_distance.max(offset.norm());
            NodePair { source: s, target: best.1, offset }
        })
        .collect();
    Ok(InterfaceMap { direction, pairs, max_distance })
}

fn expect_direction(map: &InterfaceMap, want: MapDirection) -> Result<()> {
    if map.direction != want {
        return Err(Error::InvalidArgument(format!("expected a {want:?} map, got {:?}", map.direction)));
    }
    Ok(())
}

/// u(x_s) + J(x_s)(x̂_m − x_s) for every slave interface node, in map order.
pub fn taylor_extend_displacement(
    u_slave: &Field,
    jacobian: &RecoveredJacobian,
    map: &InterfaceMap,
) -> Result<Vec<Vector2<f64>>> {
    expect_direction(map, MapDirection::SlaveToMaster)?;
    map.pairs
        .iter()
        .map(|pair| {
            let j = jacobian.get(pair.source)?;
            Ok(u_slave.values[pair.source] + j.value * pair.offset)
        })
        .collect()
}

/// First-order expansion of the recovered jacobian from x̂_s to each master
/// interface node x_m:
/// J(x̂_s) + [∂x J(x̂_s) d, ∂y J(x̂_s) d] with d = x_m − x̂_s as columns.
pub fn taylor_extend_jacobian(jacobian: &RecoveredJacobian, map: &InterfaceMap) -> Result<Vec<Matrix2<f64>>> {
    expect_direction(map, MapDirection::MasterToSlave)?;
    map.pairs
        .iter()
        .map(|pair| {
            let j = jacobian.get(pair.target)?;
            let d = -pair.offset;
            Ok(j.value + Matrix2::from_columns(&[j.d_dx * d, j.d_dy * d]))
        })
        .collect()
}

/// Extended stress at master interface nodes plus master interface edges
/// with outward normals.
#[derive(Debug, Clone, PartialEq)]
pub struct MasterTraction {
    /// Master interface nodes, polyline order.
    pub nodes: Vec<usize>,
    pub stress: Vec<Matrix2<f64>>,
    pub edges: Vec<OrientedEdge>,
}

impl MasterTraction {
    fn stress_at(&self, node: usize) -> Option<&Matrix2<f64>> {
        self.nodes.iter().position(|&v| v == node).map(|k| &self.stress[k])
    }
}

/// σ̄ = λ_s tr(ε̄) I + 2μ_s ε̄ with ε̄ = sym(J_m) at each master interface node.
/// `extended` must be ordered like `master.interface_nodes()`.
pub fn extended_stress(extended: &[Matrix2<f64>], lame_slave: LameParams, master: &Mesh) -> Result<MasterTraction> {
    let nodes = master.interface_nodes()?;
    if nodes.len() != extended.len() {
        return Err(Error::InvalidArgument(format!(
            "{} extended jacobians for {} master interface nodes",
            extended.len(),
            nodes.len()
        )));
    }
    Ok(MasterTraction {
        nodes,
        stress: extended.iter().map(|j| stress(&strain(j), lame_slave)).collect(),
        edges: master.interface_edges()?,
    })
}

/// ∫ (σ̄ n)·φ over the master interface, with σ̄ linear along each edge and
/// two-point Gauss quadrature. Returns a full-length DOF vector.
pub fn neumann_boundary_term(traction: &MasterTraction, master: &Mesh) -> Vec<f64> {
    let mut out = vec![0.0; master.dof_count()];
    let g = 0.5 / 3f64.sqrt();
    let points = [0.5 - g, 0.5 + g];
    let lookup: std::collections::HashMap<usize, &Matrix2<f64>> =
        traction.nodes.iter().copied().zip(&traction.stress).collect();
    for edge in &traction.edges {
        let [a, b] = edge.nodes;
        let (sa, sb) = (lookup[&a], lookup[&b]);
        for &s in &points {
            let sigma = sa * (1.0 - s) + sb * s;
            let t = sigma * edge.normal * (0.5 * edge.length);
            for (node, phi) in [(a, 1.0 - s), (b, s)] {
                out[2 * node] += t.x * phi;
                out[2 * node + 1] += t.y * phi;
            }
        }
    }
    out
}

/// Largest |σ_m n − σ̄ n| over master interface edges and their endpoints,
/// with σ_m the P1 stress of the master triangle on each edge.
pub fn traction_mismatch(traction: &MasterTraction, master: &Mesh, u_master: &Field, lame_master: LameParams) -> f64 {
    let mut worst: f64 = 0.0;
    for edge in &traction.edges {
        let sigma_m = stress(&strain(&u_master.triangle_jacobian(master, edge.triangle)), lame_master);
        for node in edge.nodes {
            if let Some(sbar) = traction.stress_at(node) {
                worst = worst.max(((sigma_m - sbar) * edge.normal).norm());
            }
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_benchmark_pair, BoundaryEdge, BoundaryTag};
    use crate::recovery::NodalJacobian;
    use nalgebra::Point2;
    use std::collections::BTreeMap;

    fn strip(points: &[Point2<f64>], depth: f64) -> Mesh {
        // Interface along the given points (bottom row) with a row on top.
        let n = points.len();
        let mut nodes = points.to_vec();
        nodes.extend(points.iter().map(|p| Point2::new(p.x, p.y + depth)));
        let mut tris = Vec::new();
        for i in 0..n - 1 {
            tris.push([i, i + 1, n + i + 1]);
            tris.push([i, n + i + 1, n + i]);
        }
        let mut edges: Vec<BoundaryEdge> =
            (0..n - 1).map(|i| BoundaryEdge { nodes: [i, i + 1], tag: BoundaryTag::Interface }).collect();
        edges.extend((0..n - 1).map(|i| BoundaryEdge { nodes: [n + i, n + i + 1], tag: BoundaryTag::OuterDirichlet }));
        edges.push(BoundaryEdge { nodes: [0, n], tag: BoundaryTag::OuterDirichlet });
        edges.push(BoundaryEdge { nodes: [n - 1, 2 * n - 1], tag: BoundaryTag::OuterDirichlet });
        Mesh::new(nodes, tris, edges).unwrap()
    }

    #[test]
    fn identical_interfaces_pair_identically() {
        let pts: Vec<_> = (0..5).map(|i| Point2::new(i as f64, 0.0)).collect();
        let a = strip(&pts, 1.0);
        let map = nearest_neighbor_map(&a, &a, MapDirection::SlaveToMaster).unwrap();
        assert_eq!(map.max_distance, 0.0);
        assert!(map.pairs.iter().all(|p| p.source == p.target));
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let src = strip(&[Point2::new(0.0, 0.0), Point2::new(5.0, 0.0)], 1.0);
        let tgt = strip(&[Point2::new(-1.0, 0.0), Point2::new(1.0, 0.0)], 1.0);
        let map = nearest_neighbor_map(&src, &tgt, MapDirection::SlaveToMaster).unwrap();
        // (0,0) is 1 away from both (-1,0) and (1,0).
        assert_eq!(map.pairs[0].target, 0);
        assert_eq!(map.pairs[1].target, 1);
    }

    fn jac_field(nodes: &[usize], value: Matrix2<f64>, d_dx: Matrix2<f64>, d_dy: Matrix2<f64>) -> RecoveredJacobian {
        RecoveredJacobian {
            nodes: nodes.iter().map(|&v| (v, NodalJacobian { value, d_dx, d_dy })).collect::<BTreeMap<_, _>>(),
        }
    }

    #[test]
    fn displacement_extension_is_exact_on_linears() {
        let pair = generate_benchmark_pair(8, 13, 1.0).unwrap();
        let map = nearest_neighbor_map(&pair.slave, &pair.master, MapDirection::SlaveToMaster).unwrap();
        let grad = Matrix2::new(1.0, 1.0, 1.0, -1.0);
        let f = |p: Point2<f64>| Vector2::new(p.x + p.y, p.x - p.y);
        let u = Field::interpolate(&pair.slave, &f);
        let nodes = pair.slave.interface_nodes().unwrap();
        let j = jac_field(&nodes, grad, Matrix2::zeros(), Matrix2::zeros());
        let ext = taylor_extend_displacement(&u, &j, &map).unwrap();
        for (pair_, e) in map.pairs.iter().zip(&ext) {
            assert!((e - f(pair.master.node(pair_.target))).norm() < 1e-14);
        }
        // Constant field and zero gradient: unchanged.
        let c = Field { values: vec![Vector2::new(2.0, -1.0); pair.slave.node_count()] };
        let zero = jac_field(&nodes, Matrix2::zeros(), Matrix2::zeros(), Matrix2::zeros());
        for e in taylor_extend_displacement(&c, &zero, &map).unwrap() {
            assert_eq!(e, Vector2::new(2.0, -1.0));
        }
    }

    #[test]
    fn zero_offsets_are_identity() {
        let pair = generate_benchmark_pair(8, 8, 1.0).unwrap();
        let map = nearest_neighbor_map(&pair.slave, &pair.slave, MapDirection::SlaveToMaster).unwrap();
        let u = Field::interpolate(&pair.slave, &|p: Point2<f64>| Vector2::new(p.x.sin(), p.y.cos()));
        let nodes = pair.slave.interface_nodes().unwrap();
        let j = jac_field(&nodes, Matrix2::new(3.0, 1.0, 4.0, 1.0), Matrix2::identity(), Matrix2::identity());
        let ext = taylor_extend_displacement(&u, &j, &map).unwrap();
        for (p, e) in map.pairs.iter().zip(&ext) {
            assert_eq!(*e, u.values[p.source]);
        }
        let reverse = InterfaceMap { direction: MapDirection::MasterToSlave, ..map.clone() };
        let extj = taylor_extend_jacobian(&j, &reverse).unwrap();
        for e in extj {
            assert_eq!(e, Matrix2::new(3.0, 1.0, 4.0, 1.0));
        }
    }

    #[test]
    fn jacobian_extension_is_exact_on_affine_jacobians() {
        // u = (x² + xy, y² − 3x), J = [[2x + y, x], [−3, 2y]].
        let jac_at = |p: Point2<f64>| Matrix2::new(2.0 * p.x + p.y, p.x, -3.0, 2.0 * p.y);
        let d_dx = Matrix2::new(2.0, 1.0, 0.0, 0.0);
        let d_dy = Matrix2::new(1.0, 0.0, 0.0, 2.0);
        let pair = generate_benchmark_pair(9, 14, 1.0).unwrap();
        let map = nearest_neighbor_map(&pair.master, &pair.slave, MapDirection::MasterToSlave).unwrap();
        let rec = RecoveredJacobian {
            nodes: pair
                .slave
                .interface_nodes()
                .unwrap()
                .into_iter()
                .map(|v| (v, NodalJacobian { value: jac_at(pair.slave.node(v)), d_dx, d_dy }))
                .collect(),
        };
        let ext = taylor_extend_jacobian(&rec, &map).unwrap();
        for (p, e) in map.pairs.iter().zip(&ext) {
            assert!((e - jac_at(pair.master.node(p.source))).norm() < 1e-13);
        }
        // Wrong direction is rejected.
        let s2m = nearest_neighbor_map(&pair.slave, &pair.master, MapDirection::SlaveToMaster).unwrap();
        assert!(taylor_extend_jacobian(&rec, &s2m).is_err());
    }

    #[test]
    fn extended_stress_examples() {
        let pair = generate_benchmark_pair(8, 8, 1.0).unwrap();
        let n = pair.master.interface_nodes().unwrap().len();
        let unit = LameParams::new(1.0, 1.0).unwrap();
        let t = extended_stress(&vec![Matrix2::identity(); n], unit, &pair.master).unwrap();
        assert!(t.stress.iter().all(|s| *s == Matrix2::identity() * 4.0));
        let t = extended_stress(&vec![Matrix2::new(0.0, 1.0, -1.0, 0.0); n], unit, &pair.master).unwrap();
        assert!(t.stress.iter().all(|s| *s == Matrix2::zeros()));
        let patch = vec![Matrix2::new(1.0, 1.0, 1.0, 1.0); n];
        let t = extended_stress(&patch, unit, &pair.master).unwrap();
        assert!(t.stress.iter().all(|s| *s == Matrix2::new(4.0, 2.0, 2.0, 4.0)));
        let t = extended_stress(&patch, LameParams::new(2.0, 1.0).unwrap(), &pair.master).unwrap();
        assert!(t.stress.iter().all(|s| *s == Matrix2::new(6.0, 2.0, 2.0, 6.0)));
        for e in &t.edges {
            assert!((e.normal.norm() - 1.0).abs() < 1e-14);
            // The master lies right of the curve, so normals point to −x.
            assert!(e.normal.x < 0.0);
        }
    }

    #[test]
    fn neumann_term_on_straight_edge() {
        let pts = [Point2::new(0.0, 0.0), Point2::new(2.0, 0.0)];
        let mesh = strip(&pts, 1.0);
        let nodes = mesh.interface_nodes().unwrap();
        let sigma = Matrix2::new(1.0, 2.0, 2.0, 3.0);
        let t = MasterTraction {
            nodes: nodes.clone(),
            stress: vec![sigma; nodes.len()],
            edges: mesh.interface_edges().unwrap(),
        };
        let n = t.edges[0].normal;
        assert!((n - Vector2::new(0.0, -1.0)).norm() < 1e-15);
        let rhs = neumann_boundary_term(&t, &mesh);
        let expect = sigma * n * 1.0; // L/2 with L = 2
        for v in nodes {
            assert!((rhs[2 * v] - expect.x).abs() < 1e-14);
            assert!((rhs[2 * v + 1] - expect.y).abs() < 1e-14);
        }
        let zero = MasterTraction { stress: vec![Matrix2::zeros(); 2], ..t };
        assert!(neumann_boundary_term(&zero, &mesh).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn neumann_total_force_is_normal_sum() {
        let pair = generate_benchmark_pair(8, 16, 1.0).unwrap();
        let m = &pair.master;
        let nodes = m.interface_nodes().unwrap();
        let t = MasterTraction {
            nodes: nodes.clone(),
            stress: vec![Matrix2::identity(); nodes.len()],
            edges: m.interface_edges().unwrap(),
        };
        let rhs = neumann_boundary_term(&t, m);
        let total = (0..m.node_count()).fold(Vector2::zeros(), |acc, v| acc + Vector2::new(rhs[2 * v], rhs[2 * v + 1]));
        // Brute force: Σ n_e L_e, each edge normal is the chord rotated a
        // quarter turn counterclockwise (walking up, that points to −x).
        let mut chord_sum = Vector2::zeros();
        for w in nodes.windows(2) {
            let d = m.node(w[1]) - m.node(w[0]);
            chord_sum += Vector2::new(-d.y, d.x);
        }
        assert!(chord_sum.x < 0.0);
        assert!((total - chord_sum).norm() < 1e-13, "{total:?} vs {chord_sum:?}");
    }
}
