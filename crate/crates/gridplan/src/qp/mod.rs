//! Sparse convex QP/LP solver.
//!
//! Problems have the standard form
//!
//! ```text
//!     minimize   ½ xᵀPx + qᵀx
//!     subject to l ≤ Ax ≤ u
//! ```
//!
//! with P positive semidefinite (upper triangle stored) and ±∞ allowed in the
//! bounds. The engine is an operator-splitting method on the quasi-definite
//! KKT system: one sparse LDLᵀ factorization with a minimum-degree ordering
//! is reused across all iterations, which makes re-solves with updated linear
//! costs (the consensus subproblem pattern) cheap. Optimal solutions are
//! polished by re-solving the active-set KKT system, infeasibility is
//! certified from the divergence of the iterates, and duals follow the
//! convention y ≥ 0 for active upper bounds, y ≤ 0 for active lower bounds.
//!
//! # Debug dump format
//!
//! [`write_triplets`] emits a plain-text snapshot of a problem for
//! cross-checking with external tools, read back by [`read_triplets`]:
//!
//! ```text
//! qp <n> <m>
//! P <nnz>          # upper triangle, one "<row> <col> <value>" per line
//! q                # n values, one per line
//! A <nnz>          # one "<row> <col> <value>" per line
//! l                # m values, "-inf" allowed
//! u                # m values, "inf" allowed
//! ```
//!
//! Indices are 0-based; values use shortest round-trip formatting, so a dump
//! re-read yields bitwise-identical data.

mod ldl;
pub mod solver;
pub mod sparse;

pub use solver::QpSolver;
pub use sparse::{inf_norm, CscMatrix};

use std::io::{BufRead, Write};

#[derive(Debug, thiserror::Error)]
pub enum QpError {
    #[error("invalid objective curvature")]
    InvalidCurvature,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid bounds: {0}")]
    InvalidBounds(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("dump parse error: {0}")]
    Parse(String),
}

/// A sparse QP in standard form. Immutable input to the solver.
#[derive(Debug, Clone, PartialEq)]
pub struct QpProblem {
    pub n: usize,
    pub m: usize,
    /// Upper triangle of P, n×n.
    pub p_upper: CscMatrix,
    pub q: Vec<f64>,
    pub a: CscMatrix,
    pub l: Vec<f64>,
    pub u: Vec<f64>,
}

impl QpProblem {
    pub fn new(
        p_upper: CscMatrix,
        q: Vec<f64>,
        a: CscMatrix,
        l: Vec<f64>,
        u: Vec<f64>,
    ) -> Result<Self, QpError> {
        let n = q.len();
        let m = l.len();
        let prob = Self {
            n,
            m,
            p_upper,
            q,
            a,
            l,
            u,
        };
        prob.validate()?;
        Ok(prob)
    }

    /// Checks dimensions, curvature screening and bound consistency.
    pub fn validate(&self) -> Result<(), QpError> {
        let (n, m) = (self.n, self.m);
        if self.q.len() != n {
            return Err(QpError::DimensionMismatch(format!(
                "q has length {}, expected {n}",
                self.q.len()
            )));
        }
        if self.p_upper.rows != n || self.p_upper.cols != n {
            return Err(QpError::DimensionMismatch(format!(
                "P is {}x{}, expected {n}x{n}",
                self.p_upper.rows, self.p_upper.cols
            )));
        }
        if self.a.rows != m || self.a.cols != n {
            return Err(QpError::DimensionMismatch(format!(
                "A is {}x{}, expected {m}x{n}",
                self.a.rows, self.a.cols
            )));
        }
        if self.u.len() != m || self.l.len() != m {
            return Err(QpError::DimensionMismatch(format!(
                "bounds have lengths {}/{}, expected {m}",
                self.l.len(),
                self.u.len()
            )));
        }
        for (i, j, v) in self.p_upper.triplets() {
            if i > j {
                return Err(QpError::DimensionMismatch(
                    "P must be given as its upper triangle".into(),
                ));
            }
            if i == j && v < 0.0 {
                return Err(QpError::InvalidCurvature);
            }
            if !v.is_finite() {
                return Err(QpError::Numerical(format!("P[{i},{j}] is not finite")));
            }
        }
        if self.q.iter().any(|v| !v.is_finite()) {
            return Err(QpError::Numerical("q contains a non-finite value".into()));
        }
        if self.a.values.iter().any(|v| !v.is_finite()) {
            return Err(QpError::Numerical("A contains a non-finite value".into()));
        }
        for i in 0..m {
            if self.l[i].is_nan() || self.u[i].is_nan() {
                return Err(QpError::InvalidBounds(format!("bound {i} is NaN")));
            }
            if self.l[i] > self.u[i] {
                return Err(QpError::InvalidBounds(format!(
                    "l[{i}] = {} exceeds u[{i}] = {}",
                    self.l[i], self.u[i]
                )));
            }
            if self.l[i] == f64::INFINITY || self.u[i] == f64::NEG_INFINITY {
                return Err(QpError::InvalidBounds(format!("bound {i} pins to infinity")));
            }
        }
        Ok(())
    }

    /// An LP: P = 0.
    pub fn lp(q: Vec<f64>, a: CscMatrix, l: Vec<f64>, u: Vec<f64>) -> Result<Self, QpError> {
        let n = q.len();
        Self::new(CscMatrix::zeros(n, n), q, a, l, u)
    }

    /// ½xᵀPx + qᵀx.
    pub fn objective_value(&self, x: &[f64]) -> f64 {
        let mut quad = 0.0;
        for (i, j, v) in self.p_upper.triplets() {
            quad += if i == j { v * x[i] * x[i] } else { 2.0 * v * x[i] * x[j] };
        }
        0.5 * quad + self.q.iter().zip(x).map(|(q, x)| q * x).sum::<f64>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QpStatus {
    Optimal,
    PrimalInfeasible,
    DualInfeasible,
    MaxIterations,
}

/// Result of a solve. For infeasible statuses the certificate vector is
/// returned in `y` (primal infeasibility) or `x` (dual infeasibility).
#[derive(Debug, Clone)]
pub struct QpSolution {
    pub status: QpStatus,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
}

/// Solver configuration. Tolerances apply to the unscaled residuals.
#[derive(Debug, Clone)]
pub struct SolverSettings {
    pub eps_abs: f64,
    pub eps_rel: f64,
    pub max_iterations: usize,
    /// Initial step penalty.
    pub rho: f64,
    /// Residual-balancing adaptation of rho.
    pub adaptive_rho: bool,
    /// Proximal regularization on the primal block.
    pub sigma: f64,
    /// Over-relaxation in (0, 2).
    pub alpha: f64,
    /// Active-set refinement of converged solutions.
    pub polish: bool,
    pub polish_delta: f64,
    pub polish_refine_iters: usize,
    /// Ruiz equilibration sweeps (0 disables scaling).
    pub scaling_iterations: usize,
    /// Infeasibility certificate tolerances.
    pub eps_primal_infeasible: f64,
    pub eps_dual_infeasible: f64,
    /// Termination test interval, in iterations.
    pub check_every: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            eps_abs: 1e-6,
            eps_rel: 1e-6,
            max_iterations: 100_000,
            rho: 0.1,
            adaptive_rho: true,
            sigma: 1e-6,
            alpha: 1.6,
            polish: true,
            polish_delta: 1e-7,
            polish_refine_iters: 6,
            scaling_iterations: 10,
            eps_primal_infeasible: 1e-5,
            eps_dual_infeasible: 1e-5,
            check_every: 1,
        }
    }
}

/// Solves one problem from a cold start.
pub fn solve_qp(problem: &QpProblem, settings: &SolverSettings) -> Result<QpSolution, QpError> {
    let mut solver = QpSolver::new(problem.clone(), settings.clone())?;
    Ok(solver.solve())
}

/// Unscaled KKT residuals at (x, y):
/// primal = ‖clamp(Ax, l, u) − Ax‖∞, dual = ‖Px + q + Aᵀy‖∞.
///
/// Dimensions must match the problem; this is a caller obligation.
pub fn compute_residuals(problem: &QpProblem, x: &[f64], y: &[f64]) -> (f64, f64) {
    assert_eq!(x.len(), problem.n, "x length mismatch");
    assert_eq!(y.len(), problem.m, "y length mismatch");
    let mut ax = vec![0.0; problem.m];
    problem.a.mul_into(x, &mut ax);
    let mut primal = 0.0f64;
    for i in 0..problem.m {
        let clamped = ax[i].max(problem.l[i]).min(problem.u[i]);
        primal = primal.max((clamped - ax[i]).abs());
    }
    let mut dual_vec = vec![0.0; problem.n];
    problem.p_upper.symm_mul_into(x, &mut dual_vec);
    let mut aty = vec![0.0; problem.n];
    problem.a.t_mul_into(y, &mut aty);
    let mut dual = 0.0f64;
    for j in 0..problem.n {
        dual = dual.max((dual_vec[j] + problem.q[j] + aty[j]).abs());
    }
    (primal, dual)
}

fn fmt_bound(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".to_string()
    } else if v == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{v}")
    }
}

/// Writes the documented plain-text triplet dump of a problem.
pub fn write_triplets(problem: &QpProblem, out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "qp {} {}", problem.n, problem.m)?;
    writeln!(out, "P {}", problem.p_upper.nnz())?;
    for (i, j, v) in problem.p_upper.triplets() {
        writeln!(out, "{i} {j} {v}")?;
    }
    writeln!(out, "q")?;
    for v in &problem.q {
        writeln!(out, "{v}")?;
    }
    writeln!(out, "A {}", problem.a.nnz())?;
    for (i, j, v) in problem.a.triplets() {
        writeln!(out, "{i} {j} {v}")?;
    }
    writeln!(out, "l")?;
    for v in &problem.l {
        writeln!(out, "{}", fmt_bound(*v))?;
    }
    writeln!(out, "u")?;
    for v in &problem.u {
        writeln!(out, "{}", fmt_bound(*v))?;
    }
    Ok(())
}

/// Reads a problem back from the triplet dump format.
pub fn read_triplets(input: &mut impl BufRead) -> Result<QpProblem, QpError> {
    let mut lines = input.lines();
    let mut next_line = || -> Result<String, QpError> {
        loop {
            match lines.next() {
                Some(Ok(line)) => {
                    let trimmed = line.trim().to_string();
                    if !trimmed.is_empty() && !trimmed.starts_with('#') {
                        return Ok(trimmed);
                    }
                }
                Some(Err(e)) => return Err(QpError::Parse(e.to_string())),
                None => return Err(QpError::Parse("unexpected end of dump".into())),
            }
        }
    };
    let parse_bound = |s: &str| -> Result<f64, QpError> {
        match s {
            "inf" => Ok(f64::INFINITY),
            "-inf" => Ok(f64::NEG_INFINITY),
            other => other
                .parse::<f64>()
                .map_err(|e| QpError::Parse(format!("bad number '{other}': {e}"))),
        }
    };

    let header = next_line()?;
    let mut parts = header.split_whitespace();
    if parts.next() != Some("qp") {
        return Err(QpError::Parse("expected 'qp <n> <m>' header".into()));
    }
    let n: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| QpError::Parse("bad n".into()))?;
    let m: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| QpError::Parse("bad m".into()))?;

    let read_matrix = |tag: &str, rows: usize, cols: usize,
                           next_line: &mut dyn FnMut() -> Result<String, QpError>|
     -> Result<CscMatrix, QpError> {
        let header = next_line()?;
        let mut parts = header.split_whitespace();
        if parts.next() != Some(tag) {
            return Err(QpError::Parse(format!("expected '{tag} <nnz>' header")));
        }
        let nnz: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| QpError::Parse(format!("bad nnz for {tag}")))?;
        let mut trips = Vec::with_capacity(nnz);
        for _ in 0..nnz {
            let line = next_line()?;
            let mut f = line.split_whitespace();
            let i: usize = f
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| QpError::Parse(format!("bad row in {tag}: '{line}'")))?;
            let j: usize = f
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| QpError::Parse(format!("bad col in {tag}: '{line}'")))?;
            let v: f64 = f
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| QpError::Parse(format!("bad value in {tag}: '{line}'")))?;
            if i >= rows || j >= cols {
                return Err(QpError::Parse(format!("entry ({i},{j}) outside {rows}x{cols} in {tag}")));
            }
            trips.push((i, j, v));
        }
        Ok(CscMatrix::from_triplets(rows, cols, &trips))
    };

    let p_upper = read_matrix("P", n, n, &mut next_line)?;
    if next_line()? != "q" {
        return Err(QpError::Parse("expected 'q' section".into()));
    }
    let mut q = Vec::with_capacity(n);
    for _ in 0..n {
        q.push(parse_bound(&next_line()?)?);
    }
    let a = read_matrix("A", m, n, &mut next_line)?;
    if next_line()? != "l" {
        return Err(QpError::Parse("expected 'l' section".into()));
    }
    let mut l = Vec::with_capacity(m);
    for _ in 0..m {
        l.push(parse_bound(&next_line()?)?);
    }
    if next_line()? != "u" {
        return Err(QpError::Parse("expected 'u' section".into()));
    }
    let mut u = Vec::with_capacity(m);
    for _ in 0..m {
        u.push(parse_bound(&next_line()?)?);
    }
    QpProblem::new(p_upper, q, a, l, u)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bound_qp() -> QpProblem {
        // min x² s.t. x ≥ 1
        QpProblem::new(
            CscMatrix::from_triplets(1, 1, &[(0, 0, 2.0)]),
            vec![0.0],
            CscMatrix::from_triplets(1, 1, &[(0, 0, 1.0)]),
            vec![1.0],
            vec![f64::INFINITY],
        )
        .unwrap()
    }

    #[test]
    fn analytic_bound_qp() {
        let sol = solve_qp(&bound_qp(), &SolverSettings::default()).unwrap();
        assert_eq!(sol.status, QpStatus::Optimal);
        assert!((sol.x[0] - 1.0).abs() < 1e-6, "x = {}", sol.x[0]);
        assert!((sol.objective - 1.0).abs() < 1e-6);
        assert!((sol.y[0] + 2.0).abs() < 1e-5, "dual = {}", sol.y[0]);
    }

    #[test]
    fn lp_vertex() {
        // min -x-y s.t. x+y ≤ 1, x ≥ 0, y ≥ 0
        let a = CscMatrix::from_triplets(
            3,
            2,
            &[(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (2, 1, 1.0)],
        );
        let p = QpProblem::lp(
            vec![-1.0, -1.0],
            a,
            vec![f64::NEG_INFINITY, 0.0, 0.0],
            vec![1.0, f64::INFINITY, f64::INFINITY],
        )
        .unwrap();
        let sol = solve_qp(&p, &SolverSettings::default()).unwrap();
        assert_eq!(sol.status, QpStatus::Optimal);
        assert!((sol.objective + 1.0).abs() < 1e-6, "objective {}", sol.objective);
        assert!((sol.x[0] + sol.x[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn empty_feasible_set_is_primal_infeasible() {
        // x ≥ 1 and x ≤ 0
        let a = CscMatrix::from_triplets(2, 1, &[(0, 0, 1.0), (1, 0, 1.0)]);
        let p = QpProblem::lp(
            vec![0.0],
            a,
            vec![1.0, f64::NEG_INFINITY],
            vec![f64::INFINITY, 0.0],
        )
        .unwrap();
        let sol = solve_qp(&p, &SolverSettings::default()).unwrap();
        assert_eq!(sol.status, QpStatus::PrimalInfeasible);
    }

    #[test]
    fn unbounded_lp_is_dual_infeasible() {
        // min -x s.t. x >= 0
        let a = CscMatrix::from_triplets(1, 1, &[(0, 0, 1.0)]);
        let p = QpProblem::lp(vec![-1.0], a, vec![0.0], vec![f64::INFINITY]).unwrap();
        let sol = solve_qp(&p, &SolverSettings::default()).unwrap();
        assert_eq!(sol.status, QpStatus::DualInfeasible);
    }

    #[test]
    fn negative_curvature_rejected() {
        let p = QpProblem::new(
            CscMatrix::from_triplets(1, 1, &[(0, 0, -1.0)]),
            vec![0.0],
            CscMatrix::from_triplets(1, 1, &[(0, 0, 1.0)]),
            vec![0.0],
            vec![1.0],
        );
        assert!(matches!(p, Err(QpError::InvalidCurvature)));
    }

    #[test]
    fn indefinite_offdiagonal_rejected_at_solve() {
        // P = [[0, 1], [1, 0]] has eigenvalues ±1.
        let p = QpProblem::new(
            CscMatrix::from_triplets(2, 2, &[(0, 1, 1.0)]),
            vec![0.0, 0.0],
            CscMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (1, 1, 1.0)]),
            vec![0.0, 0.0],
            vec![1.0, 1.0],
        )
        .unwrap();
        let res = solve_qp(&p, &SolverSettings::default());
        assert!(matches!(res, Err(QpError::InvalidCurvature)), "{res:?}");
    }

    #[test]
    fn residuals_at_origin() {
        let a = CscMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (1, 1, 1.0)]);
        let p = QpProblem::lp(vec![0.0, 0.0], a, vec![-1.0, -2.0], vec![1.0, 2.0]).unwrap();
        let (rp, rd) = compute_residuals(&p, &[0.0, 0.0], &[0.0, 0.0]);
        assert_eq!((rp, rd), (0.0, 0.0));
    }

    #[test]
    fn reported_residuals_match_replay_exactly() {
        let sol = solve_qp(&bound_qp(), &SolverSettings::default()).unwrap();
        let (rp, rd) = compute_residuals(&bound_qp(), &sol.x, &sol.y);
        assert_eq!(rp, sol.primal_residual);
        assert_eq!(rd, sol.dual_residual);
    }

    #[test]
    fn dual_residual_reacts_to_perturbation() {
        // min ½xᵀPx with P = diag(2, 4) s.t. -1 ≤ x ≤ 1; optimum x = 0.
        let p = QpProblem::new(
            CscMatrix::from_triplets(2, 2, &[(0, 0, 2.0), (1, 1, 4.0)]),
            vec![0.0, 0.0],
            CscMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (1, 1, 1.0)]),
            vec![-1.0, -1.0],
            vec![1.0, 1.0],
        )
        .unwrap();
        let sol = solve_qp(&p, &SolverSettings::default()).unwrap();
        let (_, rd0) = compute_residuals(&p, &sol.x, &sol.y);
        let delta = 1e-3;
        let mut x = sol.x.clone();
        x[1] += delta;
        let (_, rd1) = compute_residuals(&p, &x, &sol.y);
        // Dual residual grows by |P·δ| in the perturbed row.
        assert!((rd1 - rd0 - 4.0 * delta).abs() < 1e-6, "rd0={rd0} rd1={rd1}");
    }

    #[test]
    fn dump_roundtrip_is_exact() {
        let a = CscMatrix::from_triplets(2, 2, &[(0, 0, 0.1 + 0.2), (1, 1, -1.5e-7)]);
        let p = QpProblem::new(
            CscMatrix::from_triplets(2, 2, &[(0, 0, 2.0), (0, 1, 0.333333333333333314)]),
            vec![1.0 / 3.0, -2.0],
            a,
            vec![f64::NEG_INFINITY, 0.0],
            vec![1.0, f64::INFINITY],
        )
        .unwrap();
        let mut buf = Vec::new();
        write_triplets(&p, &mut buf).unwrap();
        let back = read_triplets(&mut std::io::BufReader::new(buf.as_slice())).unwrap();
        assert_eq!(p, back);
    }

    #[test]
    fn warm_start_reconverges_quickly() {
        let p = bound_qp();
        let sol = solve_qp(&p, &SolverSettings::default()).unwrap();
        let mut solver = QpSolver::new(p, SolverSettings::default()).unwrap();
        solver.warm_start(&sol.x, &sol.y);
        let sol2 = solver.solve();
        assert_eq!(sol2.status, QpStatus::Optimal);
        assert!(sol2.iterations <= 5, "took {} iterations", sol2.iterations);
    }

    #[test]
    fn deterministic_bitwise() {
        let a = CscMatrix::from_triplets(
            3,
            2,
            &[(0, 0, 1.3), (0, 1, 0.7), (1, 0, 1.0), (2, 1, 1.0)],
        );
        let p = QpProblem::new(
            CscMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (1, 1, 0.5), (0, 1, 0.2)]),
            vec![-0.3, 1.7],
            a,
            vec![f64::NEG_INFINITY, -1.0, -2.0],
            vec![2.0, 3.0, 4.0],
        )
        .unwrap();
        let s1 = solve_qp(&p, &SolverSettings::default()).unwrap();
        let s2 = solve_qp(&p, &SolverSettings::default()).unwrap();
        assert_eq!(s1.iterations, s2.iterations);
        assert_eq!(s1.x, s2.x);
        assert_eq!(s1.y, s2.y);
        assert_eq!(s1.objective, s2.objective);
    }

    #[test]
    fn scaling_invariance_of_argmin() {
        let a = CscMatrix::from_triplets(
            3,
            2,
            &[(0, 0, 1.0), (0, 1, 2.0), (1, 0, 1.0), (2, 1, 1.0)],
        );
        let base = QpProblem::new(
            CscMatrix::from_triplets(2, 2, &[(0, 0, 2.0), (1, 1, 2.0)]),
            vec![-2.0, -6.0],
            a.clone(),
            vec![f64::NEG_INFINITY, 0.0, 0.0],
            vec![2.0, f64::INFINITY, f64::INFINITY],
        )
        .unwrap();
        let c = 1000.0;
        let mut scaled_p = base.p_upper.clone();
        for v in &mut scaled_p.values {
            *v *= c;
        }
        let scaled = QpProblem::new(
            scaled_p,
            base.q.iter().map(|v| v * c).collect(),
            a,
            base.l.clone(),
            base.u.clone(),
        )
        .unwrap();
        let settings = SolverSettings::default();
        let s1 = solve_qp(&base, &settings).unwrap();
        let s2 = solve_qp(&scaled, &settings).unwrap();
        let eps = 10.0 * settings.eps_abs;
        for (a, b) in s1.x.iter().zip(&s2.x) {
            assert!((a - b).abs() <= eps, "argmin moved: {a} vs {b}");
        }
        assert!((s2.objective - c * s1.objective).abs() <= c * 1e-5 * s1.objective.abs().max(1.0));
    }

    #[test]
    fn lp_complementary_slackness() {
        let a = CscMatrix::from_triplets(
            4,
            2,
            &[(0, 0, 2.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 3.0), (2, 0, 1.0), (3, 1, 1.0)],
        );
        let p = QpProblem::lp(
            vec![-3.0, -5.0],
            a,
            vec![f64::NEG_INFINITY, f64::NEG_INFINITY, 0.0, 0.0],
            vec![10.0, 15.0, f64::INFINITY, f64::INFINITY],
        )
        .unwrap();
        let sol = solve_qp(&p, &SolverSettings::default()).unwrap();
        assert_eq!(sol.status, QpStatus::Optimal);
        let mut ax = vec![0.0; p.m];
        p.a.mul_into(&sol.x, &mut ax);
        for i in 0..p.m {
            let slack = if sol.y[i] > 0.0 {
                p.u[i] - ax[i]
            } else if sol.y[i] < 0.0 {
                ax[i] - p.l[i]
            } else {
                0.0
            };
            assert!(
                (sol.y[i] * slack).abs() <= 1e-5,
                "complementary slackness violated at row {i}: y={} slack={slack}",
                sol.y[i]
            );
        }
    }
}
