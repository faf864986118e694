//! Symmetric quadrature rules on triangles, as barycentric points and weights
//! normalized to sum to one.

use nalgebra::Point2;

pub struct TriangleRule {
    pub points: &'static [[f64; 3]],
    pub weights: &'static [f64],
}

const T1: f64 = 1.0 / 6.0;
const T2: f64 = 2.0 / 3.0;

/// Three interior points, exact for quadratics.
pub const ORDER_2: TriangleRule =
    TriangleRule { points: &[[T2, T1, T1], [T1, T2, T1], [T1, T1, T2]], weights: &[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0] };

const A1: f64 = 0.445_948_490_915_964_9;
const B1: f64 = 1.0 - 2.0 * A1;
const W1: f64 = 0.223_381_589_678_011_5;
const A2: f64 = 0.091_576_213_509_770_74;
const B2: f64 = 1.0 - 2.0 * A2;
const W2: f64 = 0.109_951_743_655_321_9;

/// Six-point Dunavant rule, exact for quartics.
pub const ORDER_4: TriangleRule = TriangleRule {
    points: &[[B1, A1, A1], [A1, B1, A1], [A1, A1, B1], [B2, A2, A2], [A2, B2, A2], [A2, A2, B2]],
    weights: &[W1, W1, W1, W2, W2, W2],
};

impl TriangleRule {
    /// Physical points, barycentric weights and quadrature weights (without
    /// the area factor).
    pub fn map<'a>(&'a self, v: &'a [Point2<f64>; 3]) -> impl Iterator<Item = (Point2<f64>, [f64; 3], f64)> + 'a {
        self.points.iter().zip(self.weights).map(move |(l, &w)| {
            let p = v[0].coords * l[0] + v[1].coords * l[1] + v[2].coords * l[2];
            (Point2::from(p), *l, w)
        })
    }
}
