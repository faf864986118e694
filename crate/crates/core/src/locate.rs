//! Point location in a triangulation and evaluation of a P1 field found there.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};

use nalgebra::{Matrix2, Point2, Vector2};

use crate::elasticity::{ExactSolution, Field, VectorField};
use crate::error::{Error, Result};
use crate::mesh::{signed_area2, Mesh};

const INSIDE_TOL: f64 = 1e-12;

/// Where a point was found.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Location {
    pub triangle: usize,
    pub barycentric: [f64; 3],
    /// False when the point lies outside the mesh and the closest triangle
    /// was used instead.
    pub inside: bool,
}

/// Triangle adjacency plus a bucket grid of starting triangles for walks.
#[derive(Debug, Clone)]
pub struct PointLocator {
    /// neighbors[t][k]: triangle across the edge opposite vertex k.
    neighbors: Vec<[Option<usize>; 3]>,
    origin: Point2<f64>,
    cell: Vector2<f64>,
    nb: [usize; 2],
    start: Vec<usize>,
}

fn barycentric(v: &[Point2<f64>; 3], p: &Point2<f64>) -> [f64; 3] {
    let area = signed_area2(&v[0], &v[1], &v[2]);
    [signed_area2(p, &v[1], &v[2]) / area, signed_area2(&v[0], p, &v[2]) / area, signed_area2(&v[0], &v[1], p) / area]
}

fn distance_to_segment(p: &Point2<f64>, a: &Point2<f64>, b: &Point2<f64>) -> f64 {
    let d = b - a;
    let t = ((p - a).dot(&d) / d.norm_squared()).clamp(0.0, 1.0);
    (p - (a + d * t)).norm()
}

impl PointLocator {
    pub fn new(mesh: &Mesh) -> Self {
        let tris = mesh.triangles();
        let mut by_edge: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
        let mut neighbors = vec![[None; 3]; tris.len()];
        for (t, tri) in tris.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (tri[(k + 1) % 3], tri[(k + 2) % 3]);
                let key = (a.min(b), a.max(b));
                if let Some((u, j)) = by_edge.remove(&key) {
                    neighbors[t][k] = Some(u);
                    neighbors[u][j] = Some(t);
                } else {
                    by_edge.insert(key, (t, k));
                }
            }
        }
        let (mut lo, mut hi) =
            (Point2::new(f64::INFINITY, f64::INFINITY), Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
        for p in mesh.nodes() {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        let side = ((tris.len() as f64 / 2.0).sqrt().ceil() as usize).max(1);
        let nb = [side, side];
        let cell = Vector2::new((hi.x - lo.x) / side as f64, (hi.y - lo.y) / side as f64);
        let mut locator = PointLocator { neighbors, origin: lo, cell, nb, start: vec![usize::MAX; side * side] };
        for t in 0..tris.len() {
            let v = mesh.triangle_coords(t);
            let c = Point2::from((v[0].coords + v[1].coords + v[2].coords) / 3.0);
            let b = locator.bucket(&c);
            if locator.start[b] == usize::MAX {
                locator.start[b] = t;
            }
        }
        for s in &mut locator.start {
            if *s == usize::MAX {
                *s = 0;
            }
        }
        locator
    }

    fn bucket(&self, p: &Point2<f64>) -> usize {
        let idx = |x: f64, o: f64, c: f64, n: usize| {
            if c > 0.0 {
                (((x - o) / c).floor().max(0.0) as usize).min(n - 1)
            } else {
                0
            }
        };
        let i = idx(p.x, self.origin.x, self.cell.x, self.nb[0]);
        let j = idx(p.y, self.origin.y, self.cell.y, self.nb[1]);
        j * self.nb[0] + i
    }

    /// Walks from the bucket's start triangle towards `p`; falls back to a
    /// scan of all triangles and then to the closest triangle.
    pub fn locate(&self, mesh: &Mesh, p: &Point2<f64>) -> Location {
        let mut t = self.start[self.bucket(p)];
        for _ in 0..self.neighbors.len().max(8) {
            let lambda = barycentric(&mesh.triangle_coords(t), p);
            let (k, min) =
                lambda.iter().enumerate().fold((0, f64::INFINITY), |acc, (k, &l)| if l < acc.1 { (k, l) } else { acc });
            if min >= -INSIDE_TOL {
                return Location { triangle: t, barycentric: lambda, inside: true };
            }
            match self.neighbors[t][k] {
                Some(next) => t = next,
                None => break,
            }
        }
        self.scan(mesh, p)
    }

    fn scan(&self, mesh: &Mesh, p: &Point2<f64>) -> Location {
        let mut best = (f64::INFINITY, 0);
        for t in 0..mesh.triangles().len() {
            let v = mesh.triangle_coords(t);
            let lambda = barycentric(&v, p);
            if lambda.iter().all(|&l| l >= -INSIDE_TOL) {
                return Location { triangle: t, barycentric: lambda, inside: true };
            }
            let d = (0..3).map(|k| distance_to_segment(p, &v[k], &v[(k + 1) % 3])).fold(f64::INFINITY, f64::min);
            if d < best.0 {
                best = (d, t);
            }
        }
        let t = best.1;
        Location { triangle: t, barycentric: barycentric(&mesh.triangle_coords(t), p), inside: false }
    }
}

/// A P1 field on its own mesh, evaluable at arbitrary points. Points outside
/// the mesh are evaluated by extrapolation from the closest triangle and
/// counted.
#[derive(Debug)]
pub struct ReferenceSolution {
    mesh: Mesh,
    field: Field,
    locator: PointLocator,
    jacobians: Vec<Matrix2<f64>>,
    outside: AtomicUsize,
}

impl ReferenceSolution {
    pub fn new(mesh: Mesh, field: Field) -> Result<Self> {
        if field.values.len() != mesh.node_count() {
            return Err(Error::InvalidArgument(format!(
                "field has {} values for {} nodes",
                field.values.len(),
                mesh.node_count()
            )));
        }
        let locator = PointLocator::new(&mesh);
        let jacobians = (0..mesh.triangles().len()).map(|t| field.triangle_jacobian(&mesh, t)).collect();
        Ok(ReferenceSolution { mesh, field, locator, jacobians, outside: AtomicUsize::new(0) })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    /// Number of evaluations that fell outside the mesh so far.
    pub fn outside_count(&self) -> usize {
        self.outside.load(Ordering::Relaxed)
    }

    pub fn locate(&self, p: &Point2<f64>) -> Location {
        let loc = self.locator.locate(&self.mesh, p);
        if !loc.inside {
            self.outside.fetch_add(1, Ordering::Relaxed);
        }
        loc
    }
}

impl VectorField for ReferenceSolution {
    fn value(&self, p: Point2<f64>) -> Vector2<f64> {
        let loc = self.locate(&p);
        let tri = self.mesh.triangles()[loc.triangle];
        (0..3).fold(Vector2::zeros(), |acc, k| acc + self.field.values[tri[k]] * loc.barycentric[k])
    }
}

impl ExactSolution for ReferenceSolution {
    fn jacobian(&self, p: Point2<f64>) -> Matrix2<f64> {
        self.jacobians[self.locate(&p).triangle]
    }
}
