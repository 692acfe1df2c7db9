//! Maximum-strategy marking with a minimum-fraction fallback, and the
//! adaptive solve / estimate / mark / refine driver.

use crate::estimate::{assemble_estimate, energy_norm_error, EstimateBreakdown, EstimatorConstants};
use crate::mesh::Mesh;
use crate::nlsolve::{solve_problem, SolveReport, SolverConfig};
use crate::problems::{cutline_sample, BenchmarkCase};
use crate::report::{osc_metric, smear_metric};
use crate::space::DofMap;
use crate::stabilize::Method;
use std::fmt;

#[derive(Clone, Copy, Debug)]
pub struct MarkingConfig {
    /// Cells with eta_K >= ref_tol * eta_max are marked.
    pub ref_tol: f64,
    /// Minimum fraction of cells that must be marked; the threshold is
    /// relaxed by the factor 0.8 until the fraction is reached.
    pub min_ref: f64,
    pub relax: f64,
    pub dof_budget: usize,
    pub initial_uniform_steps: usize,
}

impl Default for MarkingConfig {
    fn default() -> Self {
        MarkingConfig {
            ref_tol: 0.5,
            min_ref: 0.05,
            relax: 0.8,
            dof_budget: 250_000,
            initial_uniform_steps: 2,
        }
    }
}

/// Threshold marking: start at `ref_tol * eta_max` and relax until at least
/// `min_ref` of the cells are marked. All-zero indicators mark nothing.
pub fn mark_cells(eta_per_cell: &[f64], config: &MarkingConfig) -> Vec<bool> {
    let n = eta_per_cell.len();
    let eta_max = eta_per_cell.iter().cloned().fold(0.0, f64::max);
    let mut marked = vec![false; n];
    if eta_max <= 0.0 {
        return marked;
    }
    let mut threshold = config.ref_tol;
    loop {
        let mut count = 0;
        for (m, &eta) in marked.iter_mut().zip(eta_per_cell) {
            *m = eta >= threshold * eta_max;
            count += *m as usize;
        }
        if count as f64 >= config.min_ref * n as f64 || threshold < 1e-30 {
            return marked;
        }
        threshold *= config.relax;
    }
}

/// One adaptive level of the trace.
#[derive(Clone, Debug)]
pub struct TraceRow {
    pub level: usize,
    pub dofs: usize,
    pub eta: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub eta3: f64,
    pub err_l2: Option<f64>,
    pub err_h1: Option<f64>,
    pub err_energy: Option<f64>,
    pub effectivity: Option<f64>,
    pub smear: Option<f64>,
    pub osc: f64,
    pub solve: SolveReport,
    pub marked_cells: usize,
    /// solve + estimate time for this level, seconds
    pub seconds: f64,
}

pub struct AdaptiveTrace {
    pub rows: Vec<TraceRow>,
    pub all_converged: bool,
}

#[derive(Debug)]
pub enum AdaptError {
    Mesh(crate::mesh::MeshError),
    Solve(crate::nlsolve::SolveError),
    Estimate(crate::estimate::EstimateError),
}

impl fmt::Display for AdaptError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AdaptError::Mesh(e) => write!(f, "mesh: {e}"),
            AdaptError::Solve(e) => write!(f, "solve: {e}"),
            AdaptError::Estimate(e) => write!(f, "estimate: {e}"),
        }
    }
}

impl std::error::Error for AdaptError {}

impl From<crate::mesh::MeshError> for AdaptError {
    fn from(e: crate::mesh::MeshError) -> Self {
        AdaptError::Mesh(e)
    }
}
impl From<crate::nlsolve::SolveError> for AdaptError {
    fn from(e: crate::nlsolve::SolveError) -> Self {
        AdaptError::Solve(e)
    }
}
impl From<crate::estimate::EstimateError> for AdaptError {
    fn from(e: crate::estimate::EstimateError) -> Self {
        AdaptError::Estimate(e)
    }
}

/// A solved adaptive level handed to observers (solution export and the
/// like).
pub struct LevelState<'a> {
    pub level: usize,
    pub mesh: &'a Mesh,
    pub u: &'a [f64],
    pub row: &'a TraceRow,
}

/// Runs the adaptive loop on the case's root grid: the configured number of
/// uniformly refined levels is solved first, then cells are marked by the
/// estimator until the dof budget is reached or nothing is marked. Solver
/// failures are recorded in the trace and the loop continues.
pub fn run_adaptive(
    case: &BenchmarkCase,
    root: &Mesh,
    method: Method,
    solver: &SolverConfig,
    marking: &MarkingConfig,
    constants: &EstimatorConstants,
    mut observer: Option<&mut dyn FnMut(&LevelState)>,
) -> Result<AdaptiveTrace, AdaptError> {
    let mut rows: Vec<TraceRow> = Vec::new();
    let mut all_converged = true;

    // level 1 is the first uniform refinement of the root
    let (mut mesh, mut map) = root.refine_uniform()?;
    let mut u_prev: Option<Vec<f64>> = None;
    let mut level = 0;

    loop {
        let t0 = std::time::Instant::now();
        let dofs = DofMap::from_mesh(&mesh);
        let u0 = u_prev.as_ref().map(|u| map.transfer(u));
        let outcome = solve_problem(&mesh, &dofs, &case.problem, method, solver, u0.as_deref())?;
        if !outcome.report.converged {
            all_converged = false;
        }
        let estimate =
            assemble_estimate(&mesh, &dofs, &case.problem, &outcome.u, &outcome.limiter, constants)?;
        let seconds = t0.elapsed().as_secs_f64();

        let norms = energy_norm_error(&mesh, &case.problem, &outcome.u);
        let smear = case.smear_cutline.as_ref().map(|line| {
            let samples = cutline_sample(&mesh, &outcome.u, line, 100_000);
            smear_metric(&samples, 0.1, 0.9)
        });
        let eta_k: Vec<f64> = (0..mesh.n_cells())
            .map(|c| estimate.cell_indicator_sq(&mesh, c).sqrt())
            .collect();

        let budget_hit = mesh.n_vertices() >= marking.dof_budget;
        let uniform_phase = level < marking.initial_uniform_steps;
        let marked = if budget_hit {
            vec![false; mesh.n_cells()]
        } else if uniform_phase {
            vec![true; mesh.n_cells()]
        } else {
            mark_cells(&eta_k, marking)
        };
        let n_marked = marked.iter().filter(|&&m| m).count();

        let row = TraceRow {
            level,
            dofs: mesh.n_vertices(),
            eta: estimate.eta,
            eta1: estimate.eta1(),
            eta2: estimate.eta2(),
            eta3: estimate.eta3(),
            err_l2: norms.as_ref().map(|n| n.l2),
            err_h1: norms.as_ref().map(|n| n.h1_semi),
            err_energy: norms.as_ref().map(|n| n.energy),
            effectivity: norms.as_ref().and_then(|n| {
                (n.energy > 0.0).then(|| estimate.eta / n.energy)
            }),
            smear,
            osc: osc_metric(&outcome.u),
            solve: outcome.report,
            marked_cells: n_marked,
            seconds,
        };
        if let Some(obs) = observer.as_deref_mut() {
            obs(&LevelState { level, mesh: &mesh, u: &outcome.u, row: &row });
        }
        rows.push(row);

        if budget_hit || n_marked == 0 {
            break;
        }
        let (next, next_map) = mesh.refine_red_green(&marked)?;
        mesh = next;
        map = next_map;
        u_prev = Some(outcome.u);
        level += 1;
    }

    Ok(AdaptiveTrace { rows, all_converged })
}

/// Convenience wrapper for tests and the acceptance suite: estimate a given
/// discrete solution and return the per-cell indicators.
pub fn cell_indicators(mesh: &Mesh, est: &EstimateBreakdown) -> Vec<f64> {
    (0..mesh.n_cells()).map(|c| est.cell_indicator_sq(mesh, c).sqrt()).collect()
}
