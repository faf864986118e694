//! Relaxed Dirichlet-Neumann iteration across noncoincident interfaces.
//!
//! The slave side takes displacement data on its interface, the master side
//! takes the traction built from the Taylor-extended slave stress, and the
//! slave data is updated from the master solution through the first-order
//! expansion of the slave field towards the matched master node.

use std::collections::BTreeSet;
use std::sync::Arc;

use nalgebra::{Matrix2, Vector2};

use crate::elasticity::{assemble, strain, stress, Field, LameParams, VectorField};
use crate::error::{Error, Result};
use crate::interface::{
    extended_stress, nearest_neighbor_map, neumann_boundary_term, taylor_extend_jacobian, traction_mismatch,
    InterfaceMap, MapDirection,
};
use crate::mesh::{BoundaryTag, Mesh, MeshPair};
use crate::recovery::{recover_jacobian, RecoveredJacobian, RecoveryRegion};
use crate::sparse::{CholeskySolver, DirichletElimination};

pub const DEFAULT_MAX_ITER: usize = 500;

pub type SharedField = Arc<dyn VectorField + Send + Sync>;

/// Meshes, materials, loads and outer Dirichlet data of one coupled problem.
#[derive(Clone)]
pub struct CouplingProblem {
    pub meshes: MeshPair,
    pub lame_slave: LameParams,
    pub lame_master: LameParams,
    pub load_slave: SharedField,
    pub load_master: SharedField,
    pub dirichlet_slave: SharedField,
    pub dirichlet_master: SharedField,
}

impl std::fmt::Debug for CouplingProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CouplingProblem")
            .field("lame_slave", &self.lame_slave)
            .field("lame_master", &self.lame_master)
            .finish_non_exhaustive()
    }
}

impl CouplingProblem {
    /// Same load and the same outer data on both sides.
    pub fn uniform(
        meshes: MeshPair,
        lame_slave: LameParams,
        lame_master: LameParams,
        load: SharedField,
        dirichlet: SharedField,
    ) -> Self {
        CouplingProblem {
            meshes,
            lame_slave,
            lame_master,
            load_slave: load.clone(),
            load_master: load,
            dirichlet_slave: dirichlet.clone(),
            dirichlet_master: dirichlet,
        }
    }
}

/// Current slave interface data and iteration bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingState {
    /// One value per slave interface node, in polyline order.
    pub g: Vec<Vector2<f64>>,
    pub omega: f64,
    pub delta: f64,
    pub k: usize,
    pub residual_history: Vec<f64>,
}

impl CouplingState {
    pub fn new(g: Vec<Vector2<f64>>, omega: f64, delta: f64) -> Result<Self> {
        if !(omega > 0.0 && omega <= 1.0) {
            return Err(Error::InvalidArgument(format!("omega must lie in (0, 1], got {omega}")));
        }
        if !(delta > 0.0) {
            return Err(Error::InvalidArgument(format!("delta must be positive, got {delta}")));
        }
        Ok(CouplingState { g, omega, delta, k: 0, residual_history: Vec::new() })
    }

    pub fn residual(&self) -> Option<f64> {
        self.residual_history.last().copied()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoupledSolution {
    pub u_slave: Field,
    pub u_master: Field,
    pub iterations: usize,
    pub converged: bool,
    pub residual: f64,
    pub residual_history: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterfaceResidual {
    /// L² norm over the slave interface of E u_s − u_m(x̂_m).
    pub dirichlet: f64,
    /// L² norm over the master interface of σ_m n − σ̄ n at edge midpoints.
    pub neumann: f64,
    /// Largest |σ_m n − σ̄ n| at master interface nodes.
    pub max_traction_mismatch: f64,
}

/// Fields produced by one outer iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput {
    pub u_slave: Field,
    pub u_master: Field,
    pub residual: f64,
}

struct Subdomain {
    elimination: DirichletElimination,
    solver: CholeskySolver,
    rhs: Vec<f64>,
    /// Outer Dirichlet values, full length; only constrained entries matter.
    prescribed: Vec<f64>,
}

impl Subdomain {
    fn new(
        mesh: &Mesh,
        lame: LameParams,
        load: &dyn VectorField,
        outer: &dyn VectorField,
        extra: &[usize],
    ) -> Result<Self> {
        let system = assemble(mesh, lame, load)?;
        let mut nodes = mesh.tagged_nodes(BoundaryTag::OuterDirichlet);
        let mut prescribed = vec![0.0; mesh.dof_count()];
        for &v in &nodes {
            let g = outer.value(mesh.node(v));
            prescribed[2 * v] = g.x;
            prescribed[2 * v + 1] = g.y;
        }
        nodes.extend(extra.iter().copied());
        let dofs: Vec<usize> = nodes.iter().flat_map(|&v| [2 * v, 2 * v + 1]).collect();
        let elimination = DirichletElimination::new(&system.matrix, &dofs)?;
        let solver = CholeskySolver::new(elimination.matrix().clone())?;
        Ok(Subdomain { elimination, solver, rhs: system.rhs, prescribed })
    }

    fn solve(&self, extra_rhs: Option<&[f64]>, prescribed: &[f64]) -> Result<Field> {
        let rhs = match extra_rhs {
            Some(extra) => self.rhs.iter().zip(extra).map(|(a, b)| a + b).collect(),
            None => self.rhs.clone(),
        };
        let rhs = self.elimination.adjust_rhs(&rhs, prescribed);
        Ok(Field::from_dofs(&self.solver.solve(&rhs)?))
    }
}

/// Prefactored subdomain systems, interface maps and recovery stencils.
pub struct DnSolver {
    problem: CouplingProblem,
    slave: Subdomain,
    master: Subdomain,
    slave_to_master: InterfaceMap,
    master_to_slave: InterfaceMap,
    region: RecoveryRegion,
    /// Slave interface nodes in polyline order.
    interface: Vec<usize>,
    /// Whether each interface position also lies on the outer boundary.
    fixed: Vec<bool>,
}

impl std::fmt::Debug for DnSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DnSolver")
            .field("problem", &self.problem)
            .field("interface_nodes", &self.interface.len())
            .finish_non_exhaustive()
    }
}

impl DnSolver {
    pub fn new(problem: CouplingProblem) -> Result<Self> {
        let (sm, mm) = (&problem.meshes.slave, &problem.meshes.master);
        let interface = sm.interface_nodes()?;
        let outer = sm.tagged_nodes(BoundaryTag::OuterDirichlet);
        let fixed: Vec<bool> = interface.iter().map(|v| outer.contains(v)).collect();
        let free: Vec<usize> = interface.iter().zip(&fixed).filter(|(_, &f)| !f).map(|(&v, _)| v).collect();
        let slave = Subdomain::new(sm, problem.lame_slave, &*problem.load_slave, &*problem.dirichlet_slave, &free)?;
        let master = Subdomain::new(mm, problem.lame_master, &*problem.load_master, &*problem.dirichlet_master, &[])?;
        let slave_to_master = nearest_neighbor_map(sm, mm, MapDirection::SlaveToMaster)?;
        let master_to_slave = nearest_neighbor_map(mm, sm, MapDirection::MasterToSlave)?;
        let mut targets: BTreeSet<usize> = interface.iter().copied().collect();
        targets.extend(master_to_slave.pairs.iter().map(|p| p.target));
        let targets: Vec<usize> = targets.into_iter().collect();
        let region = RecoveryRegion::for_nodes(sm, &targets)?;
        Ok(DnSolver { problem, slave, master, slave_to_master, master_to_slave, region, interface, fixed })
    }

    pub fn problem(&self) -> &CouplingProblem {
        &self.problem
    }

    pub fn slave_to_master(&self) -> &InterfaceMap {
        &self.slave_to_master
    }

    pub fn master_to_slave(&self) -> &InterfaceMap {
        &self.master_to_slave
    }

    pub fn recovery_region(&self) -> &RecoveryRegion {
        &self.region
    }

    /// Slave interface nodes in the order used by `CouplingState::g`.
    pub fn interface_nodes(&self) -> &[usize] {
        &self.interface
    }

    /// Zero interface data, except at interface nodes on the outer boundary
    /// where the outer data is kept throughout.
    pub fn initial_guess(&self) -> Vec<Vector2<f64>> {
        self.initial_guess_from(&vec![Vector2::zeros(); self.interface.len()])
    }

    fn initial_guess_from(&self, g0: &[Vector2<f64>]) -> Vec<Vector2<f64>> {
        let sm = &self.problem.meshes.slave;
        self.interface
            .iter()
            .zip(&self.fixed)
            .zip(g0)
            .map(|((&v, &f), &g)| if f { self.problem.dirichlet_slave.value(sm.node(v)) } else { g })
            .collect()
    }

    fn solve_slave(&self, g: &[Vector2<f64>]) -> Result<Field> {
        let mut prescribed = self.slave.prescribed.clone();
        for ((&v, &f), g) in self.interface.iter().zip(&self.fixed).zip(g) {
            if !f {
                prescribed[2 * v] = g.x;
                prescribed[2 * v + 1] = g.y;
            }
        }
        self.slave.solve(None, &prescribed)
    }

    fn solve_master(&self, jacobian: &RecoveredJacobian) -> Result<Field> {
        let mm = &self.problem.meshes.master;
        let extended = taylor_extend_jacobian(jacobian, &self.master_to_slave)?;
        let traction = extended_stress(&extended, self.problem.lame_slave, mm)?;
        let neumann = neumann_boundary_term(&traction, mm);
        self.master.solve(Some(&neumann), &self.master.prescribed)
    }

    /// Slave-interface values u_m(x̂_m) − J(x_s)(x̂_m − x_s), with outer data
    /// kept at fixed positions.
    fn transfer(
        &self,
        u_master: &Field,
        jacobian: &RecoveredJacobian,
        current: &[Vector2<f64>],
    ) -> Result<Vec<Vector2<f64>>> {
        self.slave_to_master
            .pairs
            .iter()
            .zip(&self.fixed)
            .zip(current)
            .map(|((pair, &f), &g)| {
                if f {
                    return Ok(g);
                }
                let j = jacobian.get(pair.source)?;
                Ok(u_master.values[pair.target] - j.value * pair.offset)
            })
            .collect()
    }

    /// Interface-mass-weighted L² norm of per-node values on the slave
    /// interface polyline.
    pub fn interface_norm(&self, values: &[Vector2<f64>]) -> f64 {
        polyline_norm(&self.problem.meshes.slave, &self.interface, values)
    }

    fn wrap(phase: &'static str, iteration: usize) -> impl FnOnce(Error) -> Error {
        move |e| Error::Subproblem { phase, iteration, source: Box::new(e) }
    }

    /// One outer iteration: slave solve, recovery, master solve, relaxed update.
    pub fn step(&self, state: &mut CouplingState) -> Result<StepOutput> {
        let k = state.k + 1;
        if state.g.len() != self.interface.len() {
            return Err(Error::InvalidArgument(format!(
                "state holds {} values for {} interface nodes",
                state.g.len(),
                self.interface.len()
            )));
        }
        let u_slave = self.solve_slave(&state.g).map_err(Self::wrap("slave solve", k))?;
        let jacobian =
            recover_jacobian(&self.problem.meshes.slave, &u_slave, &self.region).map_err(Self::wrap("recovery", k))?;
        let u_master = self.solve_master(&jacobian).map_err(Self::wrap("master solve", k))?;
        let target = self.transfer(&u_master, &jacobian, &state.g).map_err(Self::wrap("update", k))?;
        let omega = state.omega;
        let next: Vec<Vector2<f64>> = target.iter().zip(&state.g).map(|(t, g)| t * omega + g * (1.0 - omega)).collect();
        let diff: Vec<Vector2<f64>> = next.iter().zip(&state.g).map(|(a, b)| a - b).collect();
        let residual = self.interface_norm(&diff);
        state.g = next;
        state.k = k;
        state.residual_history.push(residual);
        Ok(StepOutput { u_slave, u_master, residual })
    }

    /// Iterates until the update falls to `delta` or `max_iter` steps have
    /// run. Non-convergence, including a non-finite residual, is reported in
    /// the result rather than as an error.
    pub fn solve(
        &self,
        omega: f64,
        delta: f64,
        max_iter: usize,
        g0: Option<&[Vector2<f64>]>,
        verbose: bool,
    ) -> Result<CoupledSolution> {
        if max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
        }
        let g = match g0 {
            Some(g0) if g0.len() != self.interface.len() => {
                return Err(Error::InvalidArgument(format!(
                    "initial guess holds {} values for {} interface nodes",
                    g0.len(),
                    self.interface.len()
                )))
            }
            Some(g0) => self.initial_guess_from(g0),
            None => self.initial_guess(),
        };
        let mut state = CouplingState::new(g, omega, delta)?;
        loop {
            let out = self.step(&mut state)?;
            if verbose {
                eprintln!("{},{:e}", state.k, out.residual);
            }
            let converged = out.residual <= delta;
            if converged || state.k >= max_iter || !out.residual.is_finite() {
                return Ok(CoupledSolution {
                    u_slave: out.u_slave,
                    u_master: out.u_master,
                    iterations: state.k,
                    converged,
                    residual: out.residual,
                    residual_history: state.residual_history,
                });
            }
        }
    }

    /// Residuals of the coupled interface conditions for a pair of fields.
    pub fn interface_residual(&self, u_slave: &Field, u_master: &Field) -> Result<InterfaceResidual> {
        let (sm, mm) = (&self.problem.meshes.slave, &self.problem.meshes.master);
        let jacobian = recover_jacobian(sm, u_slave, &self.region)?;
        let jump = self
            .slave_to_master
            .pairs
            .iter()
            .map(|pair| {
                let j = jacobian.get(pair.source)?;
                Ok(u_slave.values[pair.source] + j.value * pair.offset - u_master.values[pair.target])
            })
            .collect::<Result<Vec<_>>>()?;
        let extended = taylor_extend_jacobian(&jacobian, &self.master_to_slave)?;
        let traction = extended_stress(&extended, self.problem.lame_slave, mm)?;
        let position: std::collections::HashMap<usize, usize> =
            traction.nodes.iter().enumerate().map(|(k, &v)| (v, k)).collect();
        let mut neumann = 0.0;
        for edge in &traction.edges {
            let sigma_m = stress(&strain(&u_master.triangle_jacobian(mm, edge.triangle)), self.problem.lame_master);
            let [a, b] = edge.nodes.map(|v| traction.stress[position[&v]]);
            let sbar: Matrix2<f64> = (a + b) * 0.5;
            neumann += edge.length * ((sigma_m - sbar) * edge.normal).norm_squared();
        }
        Ok(InterfaceResidual {
            dirichlet: self.interface_norm(&jump),
            neumann: neumann.sqrt(),
            max_traction_mismatch: traction_mismatch(&traction, mm, u_master, self.problem.lame_master),
        })
    }
}

/// Discrete L² norm of a P1 trace on a polyline: each edge of length L with
/// end values a, b contributes L/3 (|a|² + a·b + |b|²).
pub fn polyline_norm(mesh: &Mesh, nodes: &[usize], values: &[Vector2<f64>]) -> f64 {
    let sum: f64 = nodes
        .windows(2)
        .zip(values.windows(2))
        .map(|(n, v)| {
            let length = (mesh.node(n[1]) - mesh.node(n[0])).norm();
            length / 3.0 * (v[0].norm_squared() + v[0].dot(&v[1]) + v[1].norm_squared())
        })
        .sum();
    sum.sqrt()
}
