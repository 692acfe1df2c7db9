//! Damped fixed-point solution of the stabilized algebraic systems.
//!
//! Linear problems use the constant-matrix splitting: (A + D) is factorized
//! once and reused, with the limited stabilization moved to the right-hand
//! side. Nonlinear problems reassemble A(u) and B(u) every iteration and
//! solve the full system directly (fixed-point matrix strategy).

mod lu;

pub use lu::{fill_order, SolveError, SparseLu};

use crate::mesh::Mesh;
use crate::space::{
    assemble_galerkin_on, dirichlet_values, DofMap, ProblemDefinition, SparseMatrix,
    SparsityPattern,
};
use crate::stabilize::{artificial_diffusion, LimiterOutput, Method, Stabilizer};
use std::time::Instant;

#[derive(Clone, Copy, Debug)]
pub struct SolverConfig {
    /// Convergence when the free-node residual drops below
    /// `residual_factor * sqrt(#dofs)`.
    pub residual_factor: f64,
    pub max_iterations: usize,
    pub omega_init: f64,
    pub omega_shrink: f64,
    pub omega_grow: f64,
    /// Consecutive accepted steps before the damping factor grows.
    pub grow_after: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            residual_factor: 1e-8,
            max_iterations: 10_000,
            omega_init: 1.0,
            omega_shrink: 0.5,
            omega_grow: 1.2,
            grow_after: 5,
        }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct SolveReport {
    pub iterations: usize,
    pub rejections: usize,
    pub final_residual: f64,
    pub converged: bool,
    pub wall_time: f64,
}

/// Damping state threaded through the iteration.
#[derive(Clone, Copy, Debug)]
pub struct DampingState {
    pub omega: f64,
    pub consecutive_accepts: usize,
}

/// One damping decision. On acceptance the damped iterate
/// `u_prev + omega (u_tilde - u_prev)` is returned and omega may grow after
/// enough consecutive accepts; on rejection the iterate is unchanged and
/// omega shrinks, so the caller retries with a smaller step.
pub fn damping_step(
    u_prev: &[f64],
    u_tilde: &[f64],
    residual_prev: f64,
    residual_new: f64,
    mut state: DampingState,
    config: &SolverConfig,
) -> (Vec<f64>, DampingState, bool) {
    if residual_new <= residual_prev {
        let u_next = damped_update(u_prev, u_tilde, state.omega);
        state.consecutive_accepts += 1;
        if state.consecutive_accepts >= config.grow_after {
            state.omega = (state.omega * config.omega_grow).min(1.0);
            state.consecutive_accepts = 0;
        }
        (u_next, state, true)
    } else {
        state.consecutive_accepts = 0;
        state.omega *= config.omega_shrink;
        (u_prev.to_vec(), state, false)
    }
}

fn damped_update(u_prev: &[f64], u_tilde: &[f64], omega: f64) -> Vec<f64> {
    u_prev
        .iter()
        .zip(u_tilde)
        .map(|(p, t)| p + omega * (t - p))
        .collect()
}

fn free_residual_norm(
    a: &SparseMatrix,
    b: &SparseMatrix,
    u: &[f64],
    rhs: &[f64],
    dofs: &DofMap,
) -> f64 {
    let au = a.matvec(u);
    let bu = b.matvec(u);
    let mut acc = 0.0;
    for i in 0..u.len() {
        if !dofs.is_dirichlet(i) {
            let r = au[i] + bu[i] - rhs[i];
            acc += r * r;
        }
    }
    acc.sqrt()
}

/// Everything the caller needs after a solve: the iterate, the report, and
/// the final system pieces for the estimator.
pub struct SolveOutcome {
    pub u: Vec<f64>,
    pub report: SolveReport,
    pub a: SparseMatrix,
    pub limiter: LimiterOutput,
}

/// Solves the stabilized system for a linear problem by the constant-matrix
/// splitting; (A + D) with Dirichlet rows is factorized once and reused.
pub fn solve_linear_problem(
    mesh: &Mesh,
    dofs: &DofMap,
    problem: &ProblemDefinition,
    method: Method,
    config: &SolverConfig,
    u0: Option<&[f64]>,
) -> Result<SolveOutcome, SolveError> {
    assert!(!problem.is_nonlinear);
    let start = Instant::now();
    let pattern = SparsityPattern::from_mesh(mesh);
    let (a, f) = assemble_galerkin_on(pattern.clone(), mesh, problem, None);
    let d = if method == Method::None {
        SparseMatrix::zeros(pattern)
    } else {
        artificial_diffusion(&a)
    };
    let stabilizer = Stabilizer::new(method, mesh, dofs, &a);
    let g = dirichlet_values(mesh, dofs, problem);

    let mut system = a.add_matrix(&d);
    for i in 0..dofs.n() {
        if dofs.is_dirichlet(i) {
            system.set_identity_row(i);
        }
    }
    let factorization = SparseLu::factor(&system)?;

    let n = dofs.n();
    let tol = config.residual_factor * (n as f64).sqrt();
    let mut u = match u0 {
        Some(v) => v.to_vec(),
        None => vec![0.0; n],
    };
    for i in 0..n {
        if dofs.is_dirichlet(i) {
            u[i] = g[i];
        }
    }

    let mut limiter = stabilizer.limit(mesh, dofs, &a, &d, &u);
    let mut residual = free_residual_norm(&a, &limiter.b, &u, &f, dofs);
    let mut state = DampingState { omega: config.omega_init, consecutive_accepts: 0 };
    let mut report = SolveReport::default();

    'outer: for _ in 0..config.max_iterations {
        // rhs = F + (D - B(u)) u: the limited antidiffusive part moves to the
        // right-hand side so the fixed point solves (A + B(u)) u = F
        let du = d.matvec(&u);
        let bu = limiter.b.matvec(&u);
        let mut rhs: Vec<f64> = (0..n).map(|i| f[i] + du[i] - bu[i]).collect();
        for i in 0..n {
            if dofs.is_dirichlet(i) {
                rhs[i] = g[i];
            }
        }
        let u_tilde = factorization.solve(&rhs);

        let mut best: Option<(Vec<f64>, LimiterOutput, f64)> = None;
        loop {
            let trial = damped_update(&u, &u_tilde, state.omega);
            let trial_limiter = stabilizer.limit(mesh, dofs, &a, &d, &trial);
            let trial_residual = free_residual_norm(&a, &trial_limiter.b, &trial, &f, dofs);
            if best.as_ref().is_none_or(|(_, _, r)| trial_residual < *r) {
                best = Some((trial, trial_limiter, trial_residual));
            }
            let (_, new_state, accepted) =
                damping_step(&u, &u_tilde, residual, trial_residual, state, config);
            state = new_state;
            if accepted {
                // an accepted trial is the best one seen in this sweep
                let (bu, bl, br) = best.take().unwrap();
                u = bu;
                limiter = bl;
                residual = br;
                report.iterations += 1;
                break;
            }
            report.rejections += 1;
            if report.rejections >= config.max_iterations {
                break 'outer;
            }
            if state.omega < 1e-8 {
                // the limiter switches discontinuously, so a step that
                // lowers the residual may not exist near a kink; take a
                // moderate step regardless to move the limiter state, then
                // restart the damping from there
                let _ = best.take();
                let escape = 0.05;
                let trial = damped_update(&u, &u_tilde, escape);
                let trial_limiter = stabilizer.limit(mesh, dofs, &a, &d, &trial);
                let trial_residual =
                    free_residual_norm(&a, &trial_limiter.b, &trial, &f, dofs);
                u = trial;
                limiter = trial_limiter;
                residual = trial_residual;
                state = DampingState { omega: 0.25, consecutive_accepts: 0 };
                report.iterations += 1;
                break;
            }
        }
        if residual <= tol {
            report.converged = true;
            break;
        }
    }
    report.final_residual = residual;
    report.converged = residual <= tol;
    report.wall_time = start.elapsed().as_secs_f64();
    Ok(SolveOutcome { u, report, a, limiter })
}

/// Solves a problem with solution-dependent convection by the fixed-point
/// matrix strategy: A(u) and B(u) are reassembled and refactorized each
/// iteration.
pub fn solve_nonlinear_problem(
    mesh: &Mesh,
    dofs: &DofMap,
    problem: &ProblemDefinition,
    method: Method,
    config: &SolverConfig,
    u0: Option<&[f64]>,
) -> Result<SolveOutcome, SolveError> {
    assert!(problem.is_nonlinear);
    let start = Instant::now();
    let pattern = SparsityPattern::from_mesh(mesh);
    let g = dirichlet_values(mesh, dofs, problem);
    let n = dofs.n();
    let tol = config.residual_factor * (n as f64).sqrt();

    let mut u = match u0 {
        Some(v) => v.to_vec(),
        None => vec![0.0; n],
    };
    for i in 0..n {
        if dofs.is_dirichlet(i) {
            u[i] = g[i];
        }
    }

    // assemble at an iterate: system pieces and the rhs (u-independent)
    let assemble_at = |u: &[f64], stab: &Stabilizer| {
        let (a, f) = assemble_galerkin_on(pattern.clone(), mesh, problem, Some(u));
        let d = if method == Method::None {
            SparseMatrix::zeros(pattern.clone())
        } else {
            artificial_diffusion(&a)
        };
        let limiter = stab.limit(mesh, dofs, &a, &d, u);
        (a, f, limiter)
    };

    let (a0, _) = assemble_galerkin_on(pattern.clone(), mesh, problem, Some(&u));
    let stabilizer = Stabilizer::new(method, mesh, dofs, &a0);
    let order = lu::fill_order(&pattern);
    let (mut a, f, mut limiter) = assemble_at(&u, &stabilizer);
    let mut residual = free_residual_norm(&a, &limiter.b, &u, &f, dofs);
    let mut state = DampingState { omega: config.omega_init, consecutive_accepts: 0 };
    let mut report = SolveReport::default();

    'outer: for _ in 0..config.max_iterations {
        let mut system = a.add_matrix(&limiter.b);
        let mut rhs = f.clone();
        for i in 0..n {
            if dofs.is_dirichlet(i) {
                system.set_identity_row(i);
                rhs[i] = g[i];
            }
        }
        let factorization = SparseLu::factor_with_order(&system, order.clone())?;
        let u_tilde = factorization.solve(&rhs);

        let mut best: Option<(Vec<f64>, SparseMatrix, LimiterOutput, f64)> = None;
        loop {
            let trial = damped_update(&u, &u_tilde, state.omega);
            let (trial_a, _, trial_limiter) = assemble_at(&trial, &stabilizer);
            let trial_residual = free_residual_norm(&trial_a, &trial_limiter.b, &trial, &f, dofs);
            if best.as_ref().is_none_or(|(_, _, _, r)| trial_residual < *r) {
                best = Some((trial, trial_a, trial_limiter, trial_residual));
            }
            let (_, new_state, accepted) =
                damping_step(&u, &u_tilde, residual, trial_residual, state, config);
            state = new_state;
            if accepted {
                let (bu, ba, bl, br) = best.take().unwrap();
                u = bu;
                a = ba;
                limiter = bl;
                residual = br;
                report.iterations += 1;
                break;
            }
            report.rejections += 1;
            if report.rejections >= config.max_iterations {
                break 'outer;
            }
            if state.omega < 1e-8 {
                // same kink escape as the linear path
                let _ = best.take();
                let escape = 0.05;
                let trial = damped_update(&u, &u_tilde, escape);
                let (trial_a, _, trial_limiter) = assemble_at(&trial, &stabilizer);
                let trial_residual =
                    free_residual_norm(&trial_a, &trial_limiter.b, &trial, &f, dofs);
                u = trial;
                a = trial_a;
                limiter = trial_limiter;
                residual = trial_residual;
                state = DampingState { omega: 0.25, consecutive_accepts: 0 };
                report.iterations += 1;
                break;
            }
        }
        if residual <= tol {
            report.converged = true;
            break;
        }
    }
    report.final_residual = residual;
    report.converged = residual <= tol;
    report.wall_time = start.elapsed().as_secs_f64();
    Ok(SolveOutcome { u, report, a, limiter })
}

/// Dispatches on the problem kind.
pub fn solve_problem(
    mesh: &Mesh,
    dofs: &DofMap,
    problem: &ProblemDefinition,
    method: Method,
    config: &SolverConfig,
    u0: Option<&[f64]>,
) -> Result<SolveOutcome, SolveError> {
    if problem.is_nonlinear {
        solve_nonlinear_problem(mesh, dofs, problem, method, config, u0)
    } else {
        solve_linear_problem(mesh, dofs, problem, method, config, u0)
    }
}
