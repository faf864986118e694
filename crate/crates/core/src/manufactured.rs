//! Closed-form fields for the benchmark problems.

use std::f64::consts::PI;

use nalgebra::{Matrix2, Point2, Vector2};

use crate::elasticity::{AnalyticField, LameParams};

/// u = (x + y, x + y), the linear patch-test field.
pub fn patch_test_field() -> AnalyticField {
    AnalyticField::affine(Vector2::zeros(), Matrix2::new(1.0, 1.0, 1.0, 1.0))
}

/// u = (s, s) with s = sin(πx) sin(2πy).
pub fn sine_field() -> AnalyticField {
    AnalyticField::new(
        |p| {
            let s = (PI * p.x).sin() * (2.0 * PI * p.y).sin();
            Vector2::new(s, s)
        },
        |p| {
            let sx = PI * (PI * p.x).cos() * (2.0 * PI * p.y).sin();
            let sy = 2.0 * PI * (PI * p.x).sin() * (2.0 * PI * p.y).cos();
            Matrix2::new(sx, sy, sx, sy)
        },
    )
}

/// f = -div σ(u) for [`sine_field`] with constant Lamé parameters.
///
/// With both components equal to s, -div σ = -(λ+μ) ∇(s_x + s_y) - μ Δs (1, 1),
/// where s_xx = -π² s, s_yy = -4π² s and s_xy = 2π² cos(πx) cos(2πy).
pub fn sine_forcing(lame: LameParams) -> impl Fn(Point2<f64>) -> Vector2<f64> + Send + Sync + Copy {
    move |p: Point2<f64>| {
        let s = (PI * p.x).sin() * (2.0 * PI * p.y).sin();
        let c = (PI * p.x).cos() * (2.0 * PI * p.y).cos();
        let pi2 = PI * PI;
        let (sxx, syy, sxy) = (-pi2 * s, -4.0 * pi2 * s, 2.0 * pi2 * c);
        let lm = lame.lambda + lame.mu;
        let laplace = sxx + syy;
        Vector2::new(-lm * (sxx + sxy) - lame.mu * laplace, -lm * (sxy + syy) - lame.mu * laplace)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elasticity::{strain, stress, ExactSolution, VectorField};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sigma(field: &AnalyticField, lame: LameParams, p: Point2<f64>) -> Matrix2<f64> {
        stress(&strain(&field.jacobian(p)), lame)
    }

    /// -div σ by central differences of the analytic stress.
    fn fd_forcing(field: &AnalyticField, lame: LameParams, p: Point2<f64>) -> Vector2<f64> {
        let h = 1e-5;
        let dx = Vector2::new(h, 0.0);
        let dy = Vector2::new(0.0, h);
        let sx = (sigma(field, lame, p + dx) - sigma(field, lame, p - dx)) / (2.0 * h);
        let sy = (sigma(field, lame, p + dy) - sigma(field, lame, p - dy)) / (2.0 * h);
        -Vector2::new(sx[(0, 0)] + sy[(0, 1)], sx[(1, 0)] + sy[(1, 1)])
    }

    #[test]
    fn forcing_matches_finite_differences() {
        let u = sine_field();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for lame in [LameParams::new(1.0, 1.0).unwrap(), LameParams::new(2.0, 1.0).unwrap()] {
            let f = sine_forcing(lame);
            for _ in 0..5 {
                let p = Point2::new(rng.random_range(-1.0..1.0), rng.random_range(0.0..1.0));
                let err = (f(p) - fd_forcing(&u, lame, p)).norm();
                assert!(err < 1e-6, "{p:?}: {err:e}");
            }
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for u in [sine_field(), patch_test_field()] {
            for _ in 0..5 {
                let p = Point2::new(rng.random_range(-1.0..1.0), rng.random_range(0.0..1.0));
                let h = 1e-6;
                let dx = (u.value(p + Vector2::new(h, 0.0)) - u.value(p - Vector2::new(h, 0.0))) / (2.0 * h);
                let dy = (u.value(p + Vector2::new(0.0, h)) - u.value(p - Vector2::new(0.0, h))) / (2.0 * h);
                let fd = Matrix2::from_columns(&[dx, dy]);
                assert!((fd - u.jacobian(p)).norm() < 1e-6);
            }
        }
    }
}
