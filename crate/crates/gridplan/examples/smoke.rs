use gridplan::datasets;
use gridplan::planner::assemble_lp;
use gridplan::qp::{QpSolver, SolverSettings};
use std::time::Instant;

fn main() {
    env_logger::init();
    let v = datasets::five_node();
    let assembled = assemble_lp(&v);
    for rho in [0.01, 0.03, 0.1, 0.3] {
        let settings = SolverSettings {
            eps_abs: 1e-7, eps_rel: 1e-7, max_iterations: 400_000, check_every: 5,
            rho, adaptive_rho: false, ..SolverSettings::default()
        };
        let t0 = Instant::now();
        let mut solver = QpSolver::new(assembled.qp.clone(), settings).unwrap();
        let sol = solver.solve();
        println!("rho={rho}: {:?} {:?} iters {} obj {:.2} res ({:.1e},{:.1e})",
            t0.elapsed(), sol.status, sol.iterations, sol.objective, sol.primal_residual, sol.dual_residual);
    }
}
