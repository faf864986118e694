//! P1 linearized elasticity: constitutive law, assembly and error norms.

use std::fmt::Write as _;

use nalgebra::{Matrix2, Point2, SMatrix, Vector2};

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::quadrature::{ORDER_2, ORDER_4};
use crate::sparse::{SparseMatrix, SparseSystem};

/// Lamé parameters of an isotropic material.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LameParams {
    pub lambda: f64,
    pub mu: f64,
}

impl LameParams {
    pub fn new(lambda: f64, mu: f64) -> Result<Self> {
        if !(lambda >= 0.0 && mu > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "Lamé parameters need lambda >= 0 and mu > 0, got ({lambda}, {mu})"
            )));
        }
        Ok(LameParams { lambda, mu })
    }
}

impl Default for LameParams {
    fn default() -> Self {
        LameParams { lambda: 1.0, mu: 1.0 }
    }
}

/// ε = ½(J + Jᵀ)
pub fn strain(jacobian: &Matrix2<f64>) -> Matrix2<f64> {
    0.5 * (jacobian + jacobian.transpose())
}

/// σ = λ tr(ε) I + 2μ ε
pub fn stress(strain: &Matrix2<f64>, lame: LameParams) -> Matrix2<f64> {
    Matrix2::identity() * (lame.lambda * strain.trace()) + strain * (2.0 * lame.mu)
}

/// A vector-valued function of position.
pub trait VectorField: Sync {
    fn value(&self, p: Point2<f64>) -> Vector2<f64>;
}

impl<F> VectorField for F
where
    F: Fn(Point2<f64>) -> Vector2<f64> + Sync,
{
    fn value(&self, p: Point2<f64>) -> Vector2<f64> {
        self(p)
    }
}

/// A field with a known displacement gradient, used as the error reference.
pub trait ExactSolution: VectorField {
    /// Row r is the gradient of component r.
    fn jacobian(&self, p: Point2<f64>) -> Matrix2<f64>;
}

/// A spatially constant vector field.
#[derive(Debug, Clone, Copy)]
pub struct Constant(pub Vector2<f64>);

impl VectorField for Constant {
    fn value(&self, _: Point2<f64>) -> Vector2<f64> {
        self.0
    }
}

impl ExactSolution for Constant {
    fn jacobian(&self, _: Point2<f64>) -> Matrix2<f64> {
        Matrix2::zeros()
    }
}

type ValueFn = Box<dyn Fn(Point2<f64>) -> Vector2<f64> + Send + Sync>;
type JacobianFn = Box<dyn Fn(Point2<f64>) -> Matrix2<f64> + Send + Sync>;

/// A closed-form field with its jacobian.
pub struct AnalyticField {
    value: ValueFn,
    jacobian: JacobianFn,
}

impl AnalyticField {
    pub fn new(
        value: impl Fn(Point2<f64>) -> Vector2<f64> + Send + Sync + 'static,
        jacobian: impl Fn(Point2<f64>) -> Matrix2<f64> + Send + Sync + 'static,
    ) -> Self {
        AnalyticField { value: Box::new(value), jacobian: Box::new(jacobian) }
    }

    /// u(p) = offset + gradient · p
    pub fn affine(offset: Vector2<f64>, gradient: Matrix2<f64>) -> Self {
        Self::new(move |p| offset + gradient * p.coords, move |_| gradient)
    }
}

impl std::fmt::Debug for AnalyticField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("AnalyticField")
    }
}

impl VectorField for AnalyticField {
    fn value(&self, p: Point2<f64>) -> Vector2<f64> {
        (self.value)(p)
    }
}

impl ExactSolution for AnalyticField {
    fn jacobian(&self, p: Point2<f64>) -> Matrix2<f64> {
        (self.jacobian)(p)
    }
}

/// Nodal displacement coefficients of a P1 field on some mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub values: Vec<Vector2<f64>>,
}

impl Field {
    pub fn zeros(mesh: &Mesh) -> Self {
        Field { values: vec![Vector2::zeros(); mesh.node_count()] }
    }

    pub fn interpolate(mesh: &Mesh, f: &dyn VectorField) -> Self {
        Field { values: mesh.nodes().iter().map(|&p| f.value(p)).collect() }
    }

    /// From an interleaved DOF vector (x0, y0, x1, y1, ...).
    pub fn from_dofs(dofs: &[f64]) -> Self {
        Field { values: dofs.chunks_exact(2).map(|c| Vector2::new(c[0], c[1])).collect() }
    }

    pub fn to_dofs(&self) -> Vec<f64> {
        self.values.iter().flat_map(|v| [v.x, v.y]).collect()
    }

    /// Constant jacobian of the field on triangle `t`.
    pub fn triangle_jacobian(&self, mesh: &Mesh, t: usize) -> Matrix2<f64> {
        let grads = shape_gradients(&mesh.triangle_coords(t));
        let tri = mesh.triangles()[t];
        (0..3).fold(Matrix2::zeros(), |acc, a| acc + self.values[tri[a]] * grads[a].transpose())
    }

    /// CSV dump "node_index,x,y,ux,uy".
    pub fn to_csv(&self, mesh: &Mesh) -> String {
        let mut out = String::from("node_index,x,y,ux,uy\n");
        for (i, (p, u)) in mesh.nodes().iter().zip(&self.values).enumerate() {
            writeln!(out, "{i},{:?},{:?},{:?},{:?}", p.x, p.y, u.x, u.y).unwrap();
        }
        out
    }
}

/// Gradients of the three barycentric shape functions.
pub fn shape_gradients(v: &[Point2<f64>; 3]) -> [Vector2<f64>; 3] {
    let area2 = crate::mesh::signed_area2(&v[0], &v[1], &v[2]);
    let inv = 1.0 / area2;
    [
        Vector2::new(v[1].y - v[2].y, v[2].x - v[1].x) * inv,
        Vector2::new(v[2].y - v[0].y, v[0].x - v[2].x) * inv,
        Vector2::new(v[0].y - v[1].y, v[1].x - v[0].x) * inv,
    ]
}

/// 6x6 element stiffness in interleaved DOF order (u0x, u0y, u1x, ...).
pub fn element_stiffness(v: &[Point2<f64>; 3], lame: LameParams) -> SMatrix<f64, 6, 6> {
    let area = 0.5 * crate::mesh::signed_area2(&v[0], &v[1], &v[2]);
    let g = shape_gradients(v);
    // Voigt strain (εxx, εyy, γxy) = B u.
    let mut b = SMatrix::<f64, 3, 6>::zeros();
    for a in 0..3 {
        b[(0, 2 * a)] = g[a].x;
        b[(1, 2 * a + 1)] = g[a].y;
        b[(2, 2 * a)] = g[a].y;
        b[(2, 2 * a + 1)] = g[a].x;
    }
    let (l, m) = (lame.lambda, lame.mu);
    let d = nalgebra::Matrix3::new(l + 2.0 * m, l, 0.0, l, l + 2.0 * m, 0.0, 0.0, 0.0, m);
    b.transpose() * d * b * area
}

/// Element load ∫ f·φ with the three-point rule.
pub fn element_load(v: &[Point2<f64>; 3], f: &dyn VectorField) -> [f64; 6] {
    let area = 0.5 * crate::mesh::signed_area2(&v[0], &v[1], &v[2]);
    let mut out = [0.0; 6];
    for (p, l, w) in ORDER_2.map(v) {
        let fp = f.value(p);
        for a in 0..3 {
            out[2 * a] += area * w * l[a] * fp.x;
            out[2 * a + 1] += area * w * l[a] * fp.y;
        }
    }
    out
}

/// Assembles stiffness matrix and load vector over the whole mesh.
pub fn assemble(mesh: &Mesh, lame: LameParams, load: &dyn VectorField) -> Result<SparseSystem> {
    assemble_with(mesh, |_| lame, |_| load)
}

/// Assembly with per-triangle material and load.
pub fn assemble_with<'a>(
    mesh: &Mesh,
    lame: impl Fn(usize) -> LameParams,
    load: impl Fn(usize) -> &'a dyn VectorField,
) -> Result<SparseSystem> {
    let n = mesh.dof_count();
    let mut triplets = Vec::with_capacity(36 * mesh.triangles().len());
    let mut rhs = vec![0.0; n];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let v = mesh.triangle_coords(t);
        let area = mesh.triangle_area(t);
        if !(area > 0.0) {
            return Err(Error::DegenerateTriangle { index: t, area });
        }
        let ke = element_stiffness(&v, lame(t));
        let fe = element_load(&v, load(t));
        let dofs = [2 * tri[0], 2 * tri[0] + 1, 2 * tri[1], 2 * tri[1] + 1, 2 * tri[2], 2 * tri[2] + 1];
        for i in 0..6 {
            rhs[dofs[i]] += fe[i];
            for j in 0..6 {
                triplets.push((dofs[i], dofs[j], ke[(i, j)]));
            }
        }
    }
    Ok(SparseSystem { matrix: SparseMatrix::from_triplets(n, triplets), rhs })
}

/// Squared L² error and squared H¹ seminorm error of one subdomain field.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SquaredErrors {
    pub l2: f64,
    pub h1_semi: f64,
}

pub fn subdomain_errors(mesh: &Mesh, field: &Field, exact: &dyn ExactSolution) -> SquaredErrors {
    let mut acc = SquaredErrors::default();
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let v = mesh.triangle_coords(t);
        let area = mesh.triangle_area(t);
        let jac = field.triangle_jacobian(mesh, t);
        for (p, l, w) in ORDER_4.map(&v) {
            let uh = field.values[tri[0]] * l[0] + field.values[tri[1]] * l[1] + field.values[tri[2]] * l[2];
            acc.l2 += area * w * (exact.value(p) - uh).norm_squared();
            acc.h1_semi += area * w * (exact.jacobian(p) - jac).norm_squared();
        }
    }
    acc
}

/// Broken L² and full H¹ errors over both subdomains.
pub fn broken_norms(parts: &[(&Mesh, &Field)], exact: &dyn ExactSolution) -> (f64, f64) {
    let (l2, semi) = parts.iter().fold((0.0, 0.0), |(l2, semi), (mesh, field)| {
        let e = subdomain_errors(mesh, field, exact);
        (l2 + e.l2, semi + e.h1_semi)
    });
    (l2.sqrt(), (l2 + semi).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strain_examples() {
        assert_eq!(strain(&Matrix2::identity()), Matrix2::identity());
        assert_eq!(strain(&Matrix2::new(0.0, 1.0, 0.0, 0.0)), Matrix2::new(0.0, 0.5, 0.5, 0.0));
        assert_eq!(strain(&Matrix2::new(1.0, 2.0, 3.0, 4.0)), Matrix2::new(1.0, 2.5, 2.5, 4.0));
    }

    #[test]
    fn stress_examples() {
        let unit = LameParams::new(1.0, 1.0).unwrap();
        assert_eq!(stress(&Matrix2::identity(), unit), Matrix2::identity() * 4.0);
        assert_eq!(stress(&Matrix2::zeros(), unit), Matrix2::zeros());
        assert_eq!(
            stress(&Matrix2::new(1.0, 0.0, 0.0, -1.0), LameParams::new(2.0, 1.0).unwrap()),
            Matrix2::new(2.0, 0.0, 0.0, -2.0)
        );
    }

    #[test]
    fn lame_validation() {
        assert!(LameParams::new(1.0, 0.0).is_err());
        assert!(LameParams::new(-1.0, 1.0).is_err());
        assert!(LameParams::new(0.0, 1.0).is_ok());
    }

    #[test]
    fn affine_load_is_integrated_exactly() {
        let v = [Point2::new(0.3, -0.1), Point2::new(1.2, 0.4), Point2::new(0.1, 0.9)];
        let f = |p: Point2<f64>| Vector2::new(1.0 + 2.0 * p.x - p.y, -0.5 + p.y);
        let fe = element_load(&v, &f);
        // ∫ f φ_a = |T|/12 (2 f(v_a) + Σ_{b≠a} f(v_b)) for affine f.
        let area = 0.5 * crate::mesh::signed_area2(&v[0], &v[1], &v[2]);
        for a in 0..3 {
            let exact = (f(v[a]) * 2.0 + f(v[(a + 1) % 3]) + f(v[(a + 2) % 3])) * (area / 12.0);
            assert!((fe[2 * a] - exact.x).abs() < 1e-13);
            assert!((fe[2 * a + 1] - exact.y).abs() < 1e-13);
        }
    }

    #[test]
    fn constant_error_integrates_area() {
        // Two unit-area-half triangles, zero field against constant (1, 1).
        let mesh = Mesh::new(
            vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)],
            vec![[0, 1, 2]],
            vec![
                crate::mesh::BoundaryEdge { nodes: [0, 1], tag: crate::mesh::BoundaryTag::OuterDirichlet },
                crate::mesh::BoundaryEdge { nodes: [1, 2], tag: crate::mesh::BoundaryTag::Interface },
                crate::mesh::BoundaryEdge { nodes: [2, 0], tag: crate::mesh::BoundaryTag::OuterDirichlet },
            ],
        )
        .unwrap();
        let zero = Field::zeros(&mesh);
        let exact = Constant(Vector2::new(1.0, 1.0));
        let (l2, h1) = broken_norms(&[(&mesh, &zero), (&mesh, &zero)], &exact);
        assert!((l2 - 2f64.sqrt()).abs() < 1e-14);
        assert!((h1 - 2f64.sqrt()).abs() < 1e-14);
    }
}
