//! Fixtures shared by the benchmarks.

use std::sync::Arc;

use dncouple_core::elasticity::Constant;
use dncouple_core::manufactured::patch_test_field;
use dncouple_core::mesh::generate_benchmark_pair;
use dncouple_core::{CouplingProblem, LameParams};
use nalgebra::Vector2;

/// Linear patch test on an (ns, nm) benchmark pair with unit Lamé parameters.
pub fn patch_problem(ns: usize, nm: usize) -> CouplingProblem {
    let meshes = generate_benchmark_pair(ns, nm, 1.0).expect("benchmark pair");
    let unit = LameParams::default();
    CouplingProblem::uniform(meshes, unit, unit, Arc::new(Constant(Vector2::zeros())), Arc::new(patch_test_field()))
}
