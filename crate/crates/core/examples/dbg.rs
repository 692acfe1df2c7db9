use afcfem::adapt::*;
use afcfem::estimate::EstimatorConstants;
use afcfem::nlsolve::SolverConfig;
use afcfem::problems::*;
use afcfem::stabilize::Method;

fn main() {
    let solver = SolverConfig { residual_factor: 1e-12, ..Default::default() };
    let case = case_nonlinear(1e-3);
    let root = make_root_grid(GridId::Grid2).unwrap();
    let marking = MarkingConfig { dof_budget: 30_000, ..Default::default() };
    let mut worst_lo = 0.0_f64; let mut worst_hi = 0.0_f64;
    let mut obs = |st: &LevelState| {
        let umin = st.u.iter().cloned().fold(f64::MAX, f64::min);
        let umax = st.u.iter().cloned().fold(f64::MIN, f64::max);
        worst_lo = worst_lo.max(0.5 - umin); worst_hi = worst_hi.max(umax - 0.75);
    };
    let t = std::time::Instant::now();
    let trace = run_adaptive(&case, &root, Method::Bjk, &solver,
        &marking, &EstimatorConstants::default(), Some(&mut obs)).unwrap();
    println!("levels {} final dofs {} conv={} worst [{:+.2e},{:+.2e}] t={:.1}s",
        trace.rows.len(), trace.rows.last().unwrap().dofs, trace.all_converged,
        worst_lo, worst_hi, t.elapsed().as_secs_f64());
}
