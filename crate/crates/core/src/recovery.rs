//! Polynomial-preserving gradient recovery from local quadratic least-squares
//! fits over element patches.
//!
//! The patch of a node is grown ring by ring (all triangles touching the
//! current patch nodes) until it holds more than six nodes, the center
//! included. A quadratic in coordinates centered at the node is fitted to the
//! nodal values by the normal equations, and its gradient at the center is
//! the recovered gradient. The fit's second-order coefficients are kept too,
//! so the recovered jacobian can be expanded to nearby points.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector, Matrix2, SMatrix, SVector};

use crate::elasticity::Field;
use crate::error::{Error, Result};
use crate::mesh::Mesh;

/// Patches stop growing once they hold more nodes than this.
pub const PATCH_NODE_THRESHOLD: usize = 6;

/// Smallest acceptable eigenvalue ratio of the scaled normal matrix.
const MIN_EIGEN_RATIO: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct ElementPatch {
    pub center: usize,
    pub triangles: Vec<usize>,
    /// Patch nodes, center first, then ascending.
    pub nodes: Vec<usize>,
    /// Expansion level i of the returned patch (0 = star of the center).
    pub level: usize,
    /// Node count of level i-1, or 1 (the center alone) for level 0.
    pub previous_node_count: usize,
}

fn patch_nodes(mesh: &Mesh, center: usize, triangles: &BTreeSet<usize>) -> Vec<usize> {
    let set: BTreeSet<usize> = triangles.iter().flat_map(|&t| mesh.triangles()[t]).filter(|&v| v != center).collect();
    std::iter::once(center).chain(set).collect()
}

/// Builds the minimal patch around `z0`.
pub fn build_patch(mesh: &Mesh, z0: usize) -> Result<ElementPatch> {
    build_patch_in(mesh, &mesh.node_triangles(), z0, 0)
}

/// Like [`build_patch`] with precomputed node-to-triangle adjacency, growing
/// `extra_levels` further rings past the minimal patch.
pub fn build_patch_in(mesh: &Mesh, adjacency: &[Vec<usize>], z0: usize, extra_levels: usize) -> Result<ElementPatch> {
    if z0 >= mesh.node_count() {
        return Err(Error::NodeOutOfRange { index: z0, count: mesh.node_count() });
    }
    let mut frontier = vec![z0];
    let mut previous_node_count = 1;
    let mut level = 0;
    let mut extra = 0;
    loop {
        let triangles: BTreeSet<usize> = frontier.iter().flat_map(|&v| adjacency[v].iter().copied()).collect();
        let nodes = patch_nodes(mesh, z0, &triangles);
        if nodes.len() <= previous_node_count && level > 0 {
            return Err(Error::PatchExhausted { node: z0, found: nodes.len() });
        }
        if nodes.len() > PATCH_NODE_THRESHOLD {
            if extra == extra_levels {
                return Ok(ElementPatch {
                    center: z0,
                    triangles: triangles.into_iter().collect(),
                    nodes,
                    level,
                    previous_node_count,
                });
            }
            extra += 1;
        }
        previous_node_count = nodes.len();
        frontier = nodes;
        level += 1;
    }
}

/// Exponents (a, b) of x̂^a ŷ^b for the six quadratic basis functions.
const BASIS: [(i32, i32); 6] = [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)];

/// Linear map from patch nodal values to the six quadratic coefficients in
/// centered, unscaled coordinates.
#[derive(Debug, Clone)]
pub struct FitOperator {
    weights: DMatrix<f64>,
}

impl FitOperator {
    pub fn new(mesh: &Mesh, patch: &ElementPatch) -> Result<Self> {
        let center = mesh.node(patch.center);
        let offsets: Vec<_> = patch.nodes.iter().map(|&v| mesh.node(v) - center).collect();
        let scale = offsets.iter().fold(0.0f64, |m, d| m.max(d.norm()));
        if patch.nodes.len() < 6 || scale == 0.0 {
            return Err(Error::RankDeficient { node: patch.center, condition: f64::INFINITY });
        }
        let m = offsets.len();
        let design = DMatrix::from_fn(m, 6, |i, j| {
            let (a, b) = BASIS[j];
            (offsets[i].x / scale).powi(a) * (offsets[i].y / scale).powi(b)
        });
        let normal: SMatrix<f64, 6, 6> = (design.transpose() * &design).fixed_view::<6, 6>(0, 0).into();
        let eig = normal.symmetric_eigen().eigenvalues;
        let (lo, hi) = eig.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &e| (lo.min(e), hi.max(e)));
        if !(lo > MIN_EIGEN_RATIO * hi) {
            return Err(Error::RankDeficient { node: patch.center, condition: hi / lo.max(0.0) });
        }
        let chol = normal.cholesky().ok_or(Error::RankDeficient { node: patch.center, condition: hi / lo })?;
        let mut weights = DMatrix::zeros(6, m);
        for i in 0..m {
            let row: SVector<f64, 6> = design.row(i).transpose().fixed_rows::<6>(0).into();
            let col = chol.solve(&row);
            for j in 0..6 {
                let (a, b) = BASIS[j];
                weights[(j, i)] = col[j] / scale.powi(a + b);
            }
        }
        Ok(FitOperator { weights })
    }

    /// Coefficients [c0..c5] for values given in patch node order.
    pub fn apply(&self, values: &[f64]) -> [f64; 6] {
        let c = &self.weights * DVector::from_column_slice(values);
        [c[0], c[1], c[2], c[3], c[4], c[5]]
    }
}

/// Least-squares quadratic fit over a patch; `values[i]` belongs to
/// `patch.nodes[i]`.
pub fn fit_quadratic(mesh: &Mesh, patch: &ElementPatch, values: &[f64]) -> Result<[f64; 6]> {
    if values.len() != patch.nodes.len() {
        return Err(Error::InvalidArgument(format!("{} values for a {}-node patch", values.len(), patch.nodes.len())));
    }
    Ok(FitOperator::new(mesh, patch)?.apply(values))
}

/// Recovered jacobian at one node plus its spatial derivatives taken from the
/// second-order terms of the local fits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodalJacobian {
    /// Row r is the recovered gradient of component r.
    pub value: Matrix2<f64>,
    /// ∂x of `value`.
    pub d_dx: Matrix2<f64>,
    /// ∂y of `value`.
    pub d_dy: Matrix2<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RecoveredJacobian {
    pub nodes: BTreeMap<usize, NodalJacobian>,
}

impl RecoveredJacobian {
    pub fn get(&self, node: usize) -> Result<&NodalJacobian> {
        self.nodes.get(&node).ok_or(Error::MissingJacobian(node))
    }
}

/// Target nodes, their patches and the triangles those patches read.
#[derive(Debug, Clone)]
pub struct RecoveryRegion {
    pub targets: Vec<usize>,
    pub patches: Vec<ElementPatch>,
    /// Triangles touching a target plus every patch triangle.
    pub triangles: BTreeSet<usize>,
    operators: Vec<FitOperator>,
}

impl RecoveryRegion {
    /// Region around the interface nodes of the mesh.
    pub fn for_interface(mesh: &Mesh) -> Result<Self> {
        Self::for_nodes(mesh, &mesh.interface_nodes()?)
    }

    pub fn for_nodes(mesh: &Mesh, targets: &[usize]) -> Result<Self> {
        let adjacency = mesh.node_triangles();
        let mut patches = Vec::with_capacity(targets.len());
        let mut operators = Vec::with_capacity(targets.len());
        let mut triangles = BTreeSet::new();
        for &z in targets {
            let mut patch = build_patch_in(mesh, &adjacency, z, 0)?;
            let op = match FitOperator::new(mesh, &patch) {
                Ok(op) => op,
                Err(Error::RankDeficient { .. }) => {
                    patch = build_patch_in(mesh, &adjacency, z, 1)?;
                    FitOperator::new(mesh, &patch)?
                }
                Err(e) => return Err(e),
            };
            triangles.extend(adjacency[z].iter().copied());
            triangles.extend(patch.triangles.iter().copied());
            patches.push(patch);
            operators.push(op);
        }
        Ok(RecoveryRegion { targets: targets.to_vec(), patches, triangles, operators })
    }
}

/// Recovers the jacobian of `field` at every target node of the region.
pub fn recover_jacobian(mesh: &Mesh, field: &Field, region: &RecoveryRegion) -> Result<RecoveredJacobian> {
    if field.values.len() != mesh.node_count() {
        return Err(Error::InvalidArgument(format!(
            "field has {} values for {} nodes",
            field.values.len(),
            mesh.node_count()
        )));
    }
    let mut nodes = BTreeMap::new();
    let mut buf = Vec::new();
    for ((&z, patch), op) in region.targets.iter().zip(&region.patches).zip(&region.operators) {
        let mut value = Matrix2::zeros();
        let mut d_dx = Matrix2::zeros();
        let mut d_dy = Matrix2::zeros();
        for r in 0..2 {
            buf.clear();
            buf.extend(patch.nodes.iter().map(|&v| field.values[v][r]));
            let c = op.apply(&buf);
            value[(r, 0)] = c[1];
            value[(r, 1)] = c[2];
            d_dx[(r, 0)] = 2.0 * c[3];
            d_dx[(r, 1)] = c[4];
            d_dy[(r, 0)] = c[4];
            d_dy[(r, 1)] = 2.0 * c[5];
        }
        nodes.insert(z, NodalJacobian { value, d_dx, d_dy });
    }
    Ok(RecoveredJacobian { nodes })
}
