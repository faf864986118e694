//! Convergence sweeps for the three benchmark cases, rate fits and output.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::Vector2;
use rayon::prelude::*;

use crate::dn::{CouplingProblem, DnSolver, SharedField, DEFAULT_MAX_ITER};
use crate::elasticity::{assemble_with, broken_norms, Constant, ExactSolution, Field, LameParams, VectorField};
use crate::error::{Error, Result};
use crate::locate::ReferenceSolution;
use crate::manufactured::{patch_test_field, sine_field, sine_forcing};
use crate::mesh::{generate_benchmark_pair, generate_conforming_monolith, BoundaryTag, Side};
use crate::sparse::{apply_dirichlet, CholeskySolver};

/// Coarser-interface element counts of the refinement sweeps.
pub const DEFAULT_BASES: [usize; 5] = [8, 16, 25, 50, 100];
/// Interface element count of the monolithic reference; its mesh size is
/// just below 5.5e-3.
pub const DEFAULT_REFERENCE_N: usize = 294;
pub const DEFAULT_OMEGA: f64 = 0.7;
pub const DEFAULT_DELTA: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Case {
    PatchTest,
    DomainDecomposition,
    DiscontinuousLame,
}

impl Case {
    pub fn as_str(self) -> &'static str {
        match self {
            Case::PatchTest => "patch",
            Case::DomainDecomposition => "dd",
            Case::DiscontinuousLame => "lame",
        }
    }
}

impl FromStr for Case {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "patch" => Ok(Case::PatchTest),
            "dd" => Ok(Case::DomainDecomposition),
            "lame" => Ok(Case::DiscontinuousLame),
            _ => Err(Error::InvalidArgument(format!("unknown case {s:?}, expected patch, dd or lame"))),
        }
    }
}

/// (slave, master) counts for a slave:master ratio, with each base count
/// assigned to the coarser interface.
pub fn ratio_sweep(ratio: (usize, usize), bases: &[usize]) -> Result<Vec<(usize, usize)>> {
    let (a, b) = ratio;
    if a == 0 || b == 0 {
        return Err(Error::InvalidArgument(format!("ratio {a}:{b} must be positive")));
    }
    let m = a.min(b);
    bases
        .iter()
        .map(|&n| {
            if (n * a) % m != 0 || (n * b) % m != 0 {
                return Err(Error::InvalidArgument(format!("base count {n} does not scale to ratio {a}:{b}")));
            }
            Ok((n * a / m, n * b / m))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub case: Case,
    /// (slave, master) interface element counts.
    pub sweep: Vec<(usize, usize)>,
    pub omega: f64,
    pub delta: f64,
    pub max_iter: usize,
    pub lame_slave: LameParams,
    pub lame_master: LameParams,
    pub ny_factor: f64,
    pub reference_n: usize,
    pub threads: usize,
    pub verbose: bool,
}

impl ExperimentConfig {
    /// Defaults for a case: ω = 0.7, δ = 1e-6, unit Lamé parameters except
    /// for the differing-material case, which uses (2, 1) on the slave side.
    pub fn new(case: Case, sweep: Vec<(usize, usize)>) -> Self {
        let unit = LameParams::default();
        let lame_slave = match case {
            Case::DiscontinuousLame => LameParams { lambda: 2.0, mu: 1.0 },
            _ => unit,
        };
        ExperimentConfig {
            case,
            sweep,
            omega: DEFAULT_OMEGA,
            delta: DEFAULT_DELTA,
            max_iter: DEFAULT_MAX_ITER,
            lame_slave,
            lame_master: unit,
            ny_factor: 1.0,
            reference_n: DEFAULT_REFERENCE_N,
            threads: 1,
            verbose: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sweep.is_empty() {
            return Err(Error::InvalidArgument("empty sweep".into()));
        }
        if !(self.omega > 0.0 && self.omega <= 1.0) {
            return Err(Error::InvalidArgument(format!("omega must lie in (0, 1], got {}", self.omega)));
        }
        if !(self.delta > 0.0) {
            return Err(Error::InvalidArgument(format!("delta must be positive, got {}", self.delta)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
        }
        if self.threads == 0 {
            return Err(Error::InvalidArgument("threads must be at least 1".into()));
        }
        Ok(())
    }

    fn require_equal_lame(&self) -> Result<()> {
        if self.lame_slave != self.lame_master {
            return Err(Error::InvalidArgument(format!(
                "the {} case needs equal Lamé parameters, got {:?} and {:?}",
                self.case.as_str(),
                self.lame_slave,
                self.lame_master
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub n_slave: usize,
    pub n_master: usize,
    pub h: f64,
    pub l2_error: f64,
    pub h1_error: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rates {
    pub l2: f64,
    pub h1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub case: Case,
    pub rows: Vec<ConvergenceRow>,
    /// Fitted on converged rows; absent when fewer than three converged.
    pub rates: Option<Rates>,
    /// Quadrature points that fell outside the reference mesh.
    pub outside_points: usize,
}

impl ExperimentReport {
    pub fn all_converged(&self) -> bool {
        self.rows.iter().all(|r| r.converged)
    }
}

/// Least-squares slope of log(error) against log(h).
pub fn fit_slope(h: &[f64], error: &[f64]) -> Result<f64> {
    let mut distinct: Vec<f64> = h.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if h.len() != error.len() || distinct.len() < 3 {
        return Err(Error::RateFit(distinct.len().min(error.len())));
    }
    let x: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let y: Vec<f64> = error.iter().map(|v| v.ln()).collect();
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    Ok(sxy / sxx)
}

pub fn fit_rate(rows: &[ConvergenceRow]) -> Result<Rates> {
    let h: Vec<f64> = rows.iter().map(|r| r.h).collect();
    let l2: Vec<f64> = rows.iter().map(|r| r.l2_error).collect();
    let h1: Vec<f64> = rows.iter().map(|r| r.h1_error).collect();
    Ok(Rates { l2: fit_slope(&h, &l2)?, h1: fit_slope(&h, &h1)? })
}

fn converged_rates(rows: &[ConvergenceRow]) -> Option<Rates> {
    let ok: Vec<ConvergenceRow> = rows.iter().filter(|r| r.converged).copied().collect();
    fit_rate(&ok).ok()
}

fn shared(f: impl VectorField + Send + 'static) -> SharedField {
    Arc::new(f)
}

fn run_row(
    cfg: &ExperimentConfig,
    (ns, nm): (usize, usize),
    build: &(dyn Fn(crate::mesh::MeshPair) -> CouplingProblem + Sync),
    exact: &dyn ExactSolution,
) -> Result<ConvergenceRow> {
    let meshes = generate_benchmark_pair(ns, nm, cfg.ny_factor)?;
    let h = meshes.h;
    let solver = DnSolver::new(build(meshes))?;
    let failed = |iterations| ConvergenceRow {
        n_slave: ns,
        n_master: nm,
        h,
        l2_error: f64::NAN,
        h1_error: f64::NAN,
        iterations,
        converged: false,
    };
    let sol = match solver.solve(cfg.omega, cfg.delta, cfg.max_iter, None, cfg.verbose) {
        Ok(sol) => sol,
        Err(Error::Subproblem { iteration, .. }) => return Ok(failed(iteration)),
        Err(e) => return Err(e),
    };
    let m = &solver.problem().meshes;
    let (l2_error, h1_error) = broken_norms(&[(&m.slave, &sol.u_slave), (&m.master, &sol.u_master)], exact);
    Ok(ConvergenceRow {
        n_slave: ns,
        n_master: nm,
        h,
        l2_error,
        h1_error,
        iterations: sol.iterations,
        converged: sol.converged,
    })
}

fn run_sweep(
    cfg: &ExperimentConfig,
    build: &(dyn Fn(crate::mesh::MeshPair) -> CouplingProblem + Sync),
    exact: &dyn ExactSolution,
) -> Result<Vec<ConvergenceRow>> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    pool.install(|| cfg.sweep.par_iter().map(|&pair| run_row(cfg, pair, build, exact)).collect())
}

/// Linear data (x + y, x + y) on the outer boundary, zero load.
pub fn run_patch_test(cfg: &ExperimentConfig) -> Result<Vec<ConvergenceRow>> {
    cfg.require_equal_lame()?;
    let (ls, lm) = (cfg.lame_slave, cfg.lame_master);
    let build = move |meshes| {
        CouplingProblem::uniform(meshes, ls, lm, shared(Constant(Vector2::zeros())), shared(patch_test_field()))
    };
    run_sweep(cfg, &build, &patch_test_field())
}

/// Manufactured sine solution with its exact trace as outer data.
pub fn run_dd_convergence(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.require_equal_lame()?;
    let (ls, lm) = (cfg.lame_slave, cfg.lame_master);
    let build = move |meshes| CouplingProblem::uniform(meshes, ls, lm, shared(sine_forcing(ls)), shared(sine_field()));
    let rows = run_sweep(cfg, &build, &sine_field())?;
    Ok(ExperimentReport { case: Case::DomainDecomposition, rates: converged_rates(&rows), rows, outside_points: 0 })
}

pub const LAME_LOAD_SLAVE: Vector2<f64> = Vector2::new(10.0, 10.0);
pub const LAME_LOAD_MASTER: Vector2<f64> = Vector2::new(-10.0, -10.0);

/// Monolithic conforming solve of the differing-material problem, piecewise
/// material and load by side, zero outer data.
pub fn build_lame_reference(cfg: &ExperimentConfig) -> Result<ReferenceSolution> {
    let mono = generate_conforming_monolith(cfg.reference_n)?;
    let (fs, fm) = (Constant(LAME_LOAD_SLAVE), Constant(LAME_LOAD_MASTER));
    let system = assemble_with(
        &mono.mesh,
        |t| match mono.sides[t] {
            Side::Slave => cfg.lame_slave,
            Side::Master => cfg.lame_master,
        },
        |t| -> &dyn VectorField {
            match mono.sides[t] {
                Side::Slave => &fs,
                Side::Master => &fm,
            }
        },
    )?;
    let outer: Vec<usize> = mono.mesh.tagged_nodes(BoundaryTag::OuterDirichlet).into_iter().collect();
    let system = apply_dirichlet(&system, &outer, &vec![Vector2::zeros(); outer.len()])?;
    let solution = CholeskySolver::new(system.matrix)?.solve(&system.rhs)?;
    ReferenceSolution::new(mono.mesh, Field::from_dofs(&solution))
}

pub fn run_discontinuous_lame(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let reference = build_lame_reference(cfg)?;
    run_discontinuous_lame_against(cfg, &reference)
}

/// Sweep measured against a prebuilt reference, which must be finer than
/// every mesh pair of the sweep.
pub fn run_discontinuous_lame_against(
    cfg: &ExperimentConfig,
    reference: &ReferenceSolution,
) -> Result<ExperimentReport> {
    cfg.validate()?;
    for &(ns, nm) in &cfg.sweep {
        let h = generate_benchmark_pair(ns, nm, cfg.ny_factor)?.h;
        if reference.mesh().h() >= h {
            return Err(Error::InvalidArgument(format!(
                "reference mesh size {:e} is not finer than the ({ns}, {nm}) pair at {h:e}",
                reference.mesh().h()
            )));
        }
    }
    let (ls, lm) = (cfg.lame_slave, cfg.lame_master);
    let build = move |meshes| CouplingProblem {
        meshes,
        lame_slave: ls,
        lame_master: lm,
        load_slave: shared(Constant(LAME_LOAD_SLAVE)),
        load_master: shared(Constant(LAME_LOAD_MASTER)),
        dirichlet_slave: shared(Constant(Vector2::zeros())),
        dirichlet_master: shared(Constant(Vector2::zeros())),
    };
    let before = reference.outside_count();
    let rows = run_sweep(cfg, &build, reference)?;
    Ok(ExperimentReport {
        case: Case::DiscontinuousLame,
        rates: converged_rates(&rows),
        rows,
        outside_points: reference.outside_count() - before,
    })
}

pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    match cfg.case {
        Case::PatchTest => {
            let rows = run_patch_test(cfg)?;
            Ok(ExperimentReport { case: Case::PatchTest, rates: None, rows, outside_points: 0 })
        }
        Case::DomainDecomposition => run_dd_convergence(cfg),
        Case::DiscontinuousLame => run_discontinuous_lame(cfg),
    }
}

pub const CSV_HEADER: &str = "n_slave,n_master,h,l2_error,h1_error,iterations,converged";

pub fn to_csv(rows: &[ConvergenceRow]) -> String {
    let mut out = format!("{CSV_HEADER}\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{:e},{:e},{:e},{},{}",
            r.n_slave, r.n_master, r.h, r.l2_error, r.h1_error, r.iterations, r.converged
        )
        .unwrap();
    }
    out
}

/// Aligned text table; rate lines follow when rates are given.
pub fn format_table(rows: &[ConvergenceRow], rates: Option<Rates>) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "{:>8} {:>8} {:>12} {:>14} {:>14} {:>5} {:>9}",
        "#slave", "#master", "h", "L2 error", "H1 error", "K", "converged"
    )
    .unwrap();
    for r in rows {
        writeln!(
            out,
            "{:>8} {:>8} {:>12.6} {:>14.6e} {:>14.6e} {:>5} {:>9}",
            r.n_slave,
            r.n_master,
            r.h,
            r.l2_error,
            r.h1_error,
            r.iterations,
            if r.converged { "yes" } else { "no" }
        )
        .unwrap();
    }
    if let Some(rates) = rates {
        writeln!(out, "{:>44} {:>14.2}", "L2 rate", rates.l2).unwrap();
        writeln!(out, "{:>44} {:>14.2}", "H1 rate", rates.h1).unwrap();
    }
    out
}

/// Writes `<stem>.csv` and `<stem>.txt` into `dir`, creating it if needed.
pub fn emit(rows: &[ConvergenceRow], rates: Option<Rates>, dir: &Path, stem: &str) -> Result<(PathBuf, PathBuf)> {
    if rows.is_empty() {
        return Err(Error::EmptyRows);
    }
    std::fs::create_dir_all(dir)?;
    let csv = dir.join(format!("{stem}.csv"));
    let table = dir.join(format!("{stem}.txt"));
    std::fs::write(&csv, to_csv(rows))?;
    std::fs::write(&table, format_table(rows, rates))?;
    Ok((csv, table))
}
