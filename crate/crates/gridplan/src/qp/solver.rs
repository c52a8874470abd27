//! Operator-splitting engine: Ruiz equilibration, a single LDLᵀ factorization
//! of the quasi-definite KKT matrix reused across iterations, over-relaxed
//! splitting steps, divergence-based infeasibility certificates and an
//! active-set polish of converged solutions.

use super::ldl::{FactorError, LdlFactor, RegSettings};
use super::sparse::{inf_norm, CscMatrix};
use super::{compute_residuals, QpError, QpProblem, QpSolution, QpStatus, SolverSettings};

const MIN_SCALING: f64 = 1e-4;
const MAX_SCALING: f64 = 1e4;
const RHO_MIN: f64 = 1e-6;
const RHO_MAX: f64 = 1e6;
const RHO_EQ_FACTOR: f64 = 1e3;
const RHO_LOOSE_FACTOR: f64 = 1e-6;
const ADAPTIVE_INTERVAL: usize = 100;
const STALL_INTERVAL: usize = 2000;
const ADAPTIVE_TRIGGER: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RowClass {
    Equality,
    Inequality,
    Loose,
}

fn classify(l: f64, u: f64) -> RowClass {
    let l_finite = l > f64::NEG_INFINITY;
    let u_finite = u < f64::INFINITY;
    if !l_finite && !u_finite {
        RowClass::Loose
    } else if l_finite && u_finite && (u - l) <= 1e-12 * l.abs().max(u.abs()).max(1.0) {
        RowClass::Equality
    } else {
        RowClass::Inequality
    }
}

/// Reusable solver: factors once, then supports warm starts and linear-cost
/// updates without refactorization. A single instance is not shareable
/// mid-solve; run distinct instances for concurrent solves.
pub struct QpSolver {
    prob: QpProblem,
    set: SolverSettings,
    n: usize,
    m: usize,
    // Equilibration: x = d ∘ x̄, y = (e ∘ ȳ)/c.
    d: Vec<f64>,
    e: Vec<f64>,
    c: f64,
    // Scaled data.
    pw: CscMatrix,
    aw: CscMatrix,
    qw: Vec<f64>,
    lw: Vec<f64>,
    uw: Vec<f64>,
    classes: Vec<RowClass>,
    rho: f64,
    rho_vec: Vec<f64>,
    rho_inv: Vec<f64>,
    factor: LdlFactor,
    signs: Vec<i8>,
    // Scaled iterates.
    x: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
    warm: bool,
}

impl QpSolver {
    pub fn new(prob: QpProblem, set: SolverSettings) -> Result<Self, QpError> {
        prob.validate()?;
        let n = prob.n;
        let m = prob.m;

        let mut pw = prob.p_upper.clone();
        let mut aw = prob.a.clone();
        let mut qw = prob.q.clone();
        let (d, e, c) = ruiz_equilibrate(&mut pw, &mut aw, &mut qw, set.scaling_iterations);
        let lw: Vec<f64> = prob.l.iter().zip(&e).map(|(v, s)| v * s).collect();
        let uw: Vec<f64> = prob.u.iter().zip(&e).map(|(v, s)| v * s).collect();

        let classes: Vec<RowClass> = prob
            .l
            .iter()
            .zip(&prob.u)
            .map(|(&l, &u)| classify(l, u))
            .collect();
        let rho = set.rho;
        let (rho_vec, rho_inv) = rho_vectors(rho, &classes);

        let mut signs = vec![1i8; n];
        signs.extend(std::iter::repeat(-1i8).take(m));
        let kkt = build_kkt(&pw, &aw, set.sigma, &rho_inv);
        let factor = factor_kkt(&kkt, &signs)?;

        Ok(Self {
            prob,
            set,
            n,
            m,
            d,
            e,
            c,
            pw,
            aw,
            qw,
            lw,
            uw,
            classes,
            rho,
            rho_vec,
            rho_inv,
            factor,
            signs,
            x: vec![0.0; n],
            y: vec![0.0; m],
            z: vec![0.0; m],
            warm: false,
        })
    }

    pub fn problem(&self) -> &QpProblem {
        &self.prob
    }

    pub fn settings(&self) -> &SolverSettings {
        &self.set
    }

    /// Replaces the linear cost; the factorization is reused as-is.
    pub fn update_linear_cost(&mut self, q: &[f64]) {
        assert_eq!(q.len(), self.n, "q length mismatch");
        self.prob.q.copy_from_slice(q);
        for j in 0..self.n {
            self.qw[j] = self.c * self.d[j] * q[j];
        }
    }

    /// Replaces the bounds. Refactors only if a row switches between the
    /// equality/inequality/loose penalty classes.
    pub fn update_bounds(&mut self, l: &[f64], u: &[f64]) -> Result<(), QpError> {
        assert_eq!(l.len(), self.m, "l length mismatch");
        assert_eq!(u.len(), self.m, "u length mismatch");
        for i in 0..self.m {
            if l[i] > u[i] || l[i].is_nan() || u[i].is_nan() {
                return Err(QpError::InvalidBounds(format!("row {i}: l={} u={}", l[i], u[i])));
            }
        }
        self.prob.l.copy_from_slice(l);
        self.prob.u.copy_from_slice(u);
        let mut changed = false;
        for i in 0..self.m {
            self.lw[i] = l[i] * self.e[i];
            self.uw[i] = u[i] * self.e[i];
            let class = classify(l[i], u[i]);
            if class != self.classes[i] {
                self.classes[i] = class;
                changed = true;
            }
        }
        if changed {
            self.refactor()?;
        }
        Ok(())
    }

    /// Sets the starting iterate from an unscaled primal/dual pair.
    pub fn warm_start(&mut self, x: &[f64], y: &[f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.m);
        for j in 0..self.n {
            self.x[j] = x[j] / self.d[j];
        }
        for i in 0..self.m {
            self.y[i] = self.c * y[i] / self.e[i];
        }
        let mut ax = vec![0.0; self.m];
        self.aw.mul_into(&self.x, &mut ax);
        for i in 0..self.m {
            self.z[i] = ax[i].max(self.lw[i]).min(self.uw[i]);
        }
        self.warm = true;
    }

    fn refactor(&mut self) -> Result<(), QpError> {
        let (rho_vec, rho_inv) = rho_vectors(self.rho, &self.classes);
        let kkt = build_kkt(&self.pw, &self.aw, self.set.sigma, &rho_inv);
        let factor = factor_kkt(&kkt, &self.signs)?;
        self.rho_vec = rho_vec;
        self.rho_inv = rho_inv;
        self.factor = factor;
        Ok(())
    }

    pub fn solve(&mut self) -> QpSolution {
        let n = self.n;
        let m = self.m;
        if !self.warm {
            self.x.fill(0.0);
            self.y.fill(0.0);
            for i in 0..m {
                self.z[i] = 0.0f64.max(self.lw[i]).min(self.uw[i]);
            }
        }
        self.warm = false;

        let dim = n + m;
        let mut rhs = vec![0.0; dim];
        let mut sol = vec![0.0; dim];
        let mut work = vec![0.0; dim];
        let mut ztilde = vec![0.0; m];
        let mut x_prev = vec![0.0; n];
        let mut y_prev = vec![0.0; m];
        // Unscaled quantities for the termination and certificate tests.
        let mut xu = vec![0.0; n];
        let mut yu = vec![0.0; m];
        let mut zu = vec![0.0; m];
        let mut ax = vec![0.0; m];
        let mut px = vec![0.0; n];
        let mut aty = vec![0.0; n];
        let mut delta = vec![0.0; dim.max(1)];

        let mut iterations = 0;
        let mut last_attempt = (f64::INFINITY, f64::INFINITY);
        for k in 1..=self.set.max_iterations {
            iterations = k;
            x_prev.copy_from_slice(&self.x);
            y_prev.copy_from_slice(&self.y);

            for j in 0..n {
                rhs[j] = self.set.sigma * self.x[j] - self.qw[j];
            }
            for i in 0..m {
                rhs[n + i] = self.z[i] - self.rho_inv[i] * self.y[i];
            }
            self.factor.solve(&rhs, &mut sol, &mut work);

            for i in 0..m {
                ztilde[i] = self.z[i] + self.rho_inv[i] * (sol[n + i] - self.y[i]);
            }
            let alpha = self.set.alpha;
            for j in 0..n {
                self.x[j] = alpha * sol[j] + (1.0 - alpha) * self.x[j];
            }
            for i in 0..m {
                let relaxed = alpha * ztilde[i] + (1.0 - alpha) * self.z[i];
                let candidate = relaxed + self.rho_inv[i] * self.y[i];
                let clamped = candidate.max(self.lw[i]).min(self.uw[i]);
                self.y[i] += self.rho_vec[i] * (relaxed - clamped);
                self.z[i] = clamped;
            }

            if k % self.set.check_every != 0 && k != self.set.max_iterations {
                continue;
            }

            for j in 0..n {
                xu[j] = self.d[j] * self.x[j];
            }
            for i in 0..m {
                yu[i] = self.e[i] * self.y[i] / self.c;
                zu[i] = self.z[i] / self.e[i];
            }
            self.prob.a.mul_into(&xu, &mut ax);
            self.prob.p_upper.symm_mul_into(&xu, &mut px);
            self.prob.a.t_mul_into(&yu, &mut aty);

            let mut rp = 0.0f64;
            for i in 0..m {
                rp = rp.max((ax[i] - zu[i]).abs());
            }
            let eps_p = self.set.eps_abs + self.set.eps_rel * inf_norm(&ax).max(inf_norm(&zu));
            let mut rd = 0.0f64;
            for j in 0..n {
                rd = rd.max((px[j] + self.prob.q[j] + aty[j]).abs());
            }
            let eps_d = self.set.eps_abs
                + self.set.eps_rel
                    * inf_norm(&px)
                        .max(inf_norm(&self.prob.q))
                        .max(inf_norm(&aty));

            if k % 1000 == 0 {
                log::debug!("iter {k}: rp={rp:.3e} (eps {eps_p:.3e}), rd={rd:.3e} (eps {eps_d:.3e}), rho={}", self.rho);
            }
            if rp <= eps_p && rd <= eps_d {
                if self.set.polish {
                    if let Some(refined) = self.active_set_refine(rp.max(rd), false) {
                        return self.finish(QpStatus::Optimal, refined.x, refined.y, k);
                    }
                }
                return self.finish(QpStatus::Optimal, xu.clone(), yu.clone(), k);
            }

            // The splitting iteration resolves the primal structure quickly
            // but its dual components can creep on stiff columns. Hand
            // settled iterates to the anchored active-set refinement: if the
            // refined pair already meets tolerance it is the answer,
            // otherwise restarting the iteration from it skips past the slow
            // dual mode. Attempts are spaced by actual progress on either
            // residual.
            if self.set.polish && k % STALL_INTERVAL == 0 {
                let progress = rp.max(rd);
                if rp <= (100.0 * eps_p).max(self.set.eps_abs)
                    && (rp < 0.3 * last_attempt.0 || rd < 0.3 * last_attempt.1)
                {
                    last_attempt = (rp, rd);
                    if let Some(refined) = self.active_set_refine(progress, true) {
                        if refined.primal_residual <= eps_p && refined.dual_residual <= eps_d {
                            return self.finish(QpStatus::Optimal, refined.x, refined.y, k);
                        }
                        if refined.res < 0.3 * progress && refined.primal_residual <= 10.0 * rp {
                            // Warm restart from the refined pair.
                            self.x.copy_from_slice(&refined.x_scaled);
                            self.y.copy_from_slice(&refined.y_scaled);
                            let mut ax_s = vec![0.0; m];
                            self.aw.mul_into(&self.x, &mut ax_s);
                            for i in 0..m {
                                self.z[i] = ax_s[i].max(self.lw[i]).min(self.uw[i]);
                            }
                        }
                    }
                }
            }

            // Primal infeasibility: the dual update direction certifies an
            // empty feasible set.
            for i in 0..m {
                delta[i] = self.e[i] * (self.y[i] - y_prev[i]) / self.c;
            }
            if self.primal_infeasible(&delta[..m]) {
                let cert = delta[..m].to_vec();
                return self.finish(QpStatus::PrimalInfeasible, vec![0.0; n], cert, k);
            }
            // Dual infeasibility: the primal direction is a ray of unbounded
            // descent.
            for j in 0..n {
                delta[j] = self.d[j] * (self.x[j] - x_prev[j]);
            }
            if self.dual_infeasible(&delta[..n]) {
                let cert = delta[..n].to_vec();
                return self.finish(QpStatus::DualInfeasible, cert, vec![0.0; m], k);
            }

            if self.set.adaptive_rho && k % ADAPTIVE_INTERVAL == 0 {
                // Residual balancing in the scaled space the iteration runs
                // in; unscaled ratios mislead on badly conditioned data.
                let mut ax_s = vec![0.0; m];
                self.aw.mul_into(&self.x, &mut ax_s);
                let mut px_s = vec![0.0; n];
                self.pw.symm_mul_into(&self.x, &mut px_s);
                let mut aty_s = vec![0.0; n];
                self.aw.t_mul_into(&self.y, &mut aty_s);
                let mut rp_s = 0.0f64;
                for i in 0..m {
                    rp_s = rp_s.max((ax_s[i] - self.z[i]).abs());
                }
                let mut rd_s = 0.0f64;
                for j in 0..n {
                    rd_s = rd_s.max((px_s[j] + self.qw[j] + aty_s[j]).abs());
                }
                let rp_rel = rp_s / inf_norm(&ax_s).max(inf_norm(&self.z)).max(1e-10);
                let rd_rel = rd_s
                    / inf_norm(&px_s)
                        .max(inf_norm(&self.qw))
                        .max(inf_norm(&aty_s))
                        .max(1e-10);
                let proposed = (self.rho * (rp_rel / rd_rel.max(1e-16)).sqrt())
                    .clamp(RHO_MIN, RHO_MAX);
                if proposed > self.rho * ADAPTIVE_TRIGGER || proposed < self.rho / ADAPTIVE_TRIGGER
                {
                    let previous = self.rho;
                    self.rho = proposed;
                    if self.refactor().is_err() {
                        // Keep iterating with the previous factorization.
                        self.rho = previous;
                    }
                }
            }
        }

        for j in 0..n {
            xu[j] = self.d[j] * self.x[j];
        }
        for i in 0..m {
            yu[i] = self.e[i] * self.y[i] / self.c;
        }
        self.finish(QpStatus::MaxIterations, xu, yu, iterations)
    }

    fn finish(&self, status: QpStatus, x: Vec<f64>, y: Vec<f64>, iterations: usize) -> QpSolution {
        let (primal_residual, dual_residual) = compute_residuals(&self.prob, &x, &y);
        let objective = match status {
            QpStatus::PrimalInfeasible => f64::INFINITY,
            QpStatus::DualInfeasible => f64::NEG_INFINITY,
            _ => self.prob.objective_value(&x),
        };
        QpSolution {
            status,
            x,
            y,
            objective,
            iterations,
            primal_residual,
            dual_residual,
        }
    }

    fn primal_infeasible(&self, dy: &[f64]) -> bool {
        let eps = self.set.eps_primal_infeasible;
        let norm = inf_norm(dy);
        if norm <= 1e-14 {
            return false;
        }
        let tol = eps * norm;
        let mut support = 0.0;
        for i in 0..self.m {
            if dy[i] > tol {
                if self.prob.u[i] == f64::INFINITY {
                    return false;
                }
                support += self.prob.u[i] * dy[i];
            } else if dy[i] < -tol {
                if self.prob.l[i] == f64::NEG_INFINITY {
                    return false;
                }
                support += self.prob.l[i] * dy[i];
            }
        }
        if support > -tol {
            return false;
        }
        let mut aty = vec![0.0; self.n];
        self.prob.a.t_mul_into(dy, &mut aty);
        inf_norm(&aty) <= tol
    }

    fn dual_infeasible(&self, dx: &[f64]) -> bool {
        let eps = self.set.eps_dual_infeasible;
        let norm = inf_norm(dx);
        if norm <= 1e-14 {
            return false;
        }
        let tol = eps * norm;
        let qdx: f64 = self.prob.q.iter().zip(dx).map(|(q, d)| q * d).sum();
        if qdx > -tol {
            return false;
        }
        let mut pdx = vec![0.0; self.n];
        self.prob.p_upper.symm_mul_into(dx, &mut pdx);
        if inf_norm(&pdx) > tol {
            return false;
        }
        let mut adx = vec![0.0; self.m];
        self.prob.a.mul_into(dx, &mut adx);
        for i in 0..self.m {
            let l_finite = self.prob.l[i] > f64::NEG_INFINITY;
            let u_finite = self.prob.u[i] < f64::INFINITY;
            let v = adx[i];
            let ok = match (l_finite, u_finite) {
                (true, true) => v.abs() <= tol,
                (true, false) => v >= -tol,
                (false, true) => v <= tol,
                (false, false) => true,
            };
            if !ok {
                return false;
            }
        }
        true
    }

    /// Primal-dual active-set refinement seeded by the current iterate: the
    /// KKT system restricted to a guessed active set is solved via one LDL
    /// factorization; rows the candidate violates are added and rows whose
    /// dual carries the wrong sign are released, until the classification
    /// settles. Returns the best candidate if it beats `res0`, the residual
    /// level of the iterate.
    ///
    /// In `anchored` mode the proximal regularization centers on the current
    /// iterate instead of the origin, so directions the active set leaves
    /// free stay put — the right behavior for restarting the splitting
    /// iteration mid-solve. The exact mode refines against the unregularized
    /// system and is used on converged iterates.
    fn active_set_refine(&self, res0: f64, anchored: bool) -> Option<RefineOutcome> {
        let n = self.n;
        // Initial guess from the projection itself: the z-update clamps, so
        // an active row holds its bound value exactly; everything else is
        // strictly interior. No tolerance heuristics needed.
        let mut side = vec![0u8; self.m];
        for i in 0..self.m {
            if self.classes[i] == RowClass::Equality {
                side[i] = 1;
            } else if self.z[i] == self.lw[i] {
                side[i] = 1;
            } else if self.z[i] == self.uw[i] {
                side[i] = 2;
            }
        }
        // Everything below runs in the equilibrated space: the scaled data
        // is O(1), so the regularized KKT factorization stays accurate.
        let at = self.aw.transpose();
        let p_trips: Vec<(usize, usize, f64)> = self.pw.triplets().collect();
        let mut ax = vec![0.0; self.m];
        let mut best: Option<RefineOutcome> = None;

        for round in 0..30 {
            let active: Vec<(usize, f64)> = side
                .iter()
                .enumerate()
                .filter(|(_, s)| **s != 0)
                .map(|(i, s)| (i, if *s == 1 { self.lw[i] } else { self.uw[i] }))
                .collect();
            if active.iter().any(|(_, b)| !b.is_finite()) {
                return None;
            }
            let m_act = active.len();
            let mut active_rank = vec![usize::MAX; self.m];
            for (r, (row, _)) in active.iter().enumerate() {
                active_rank[*row] = r;
            }

            let mut trips = p_trips.clone();
            for (r, (row, _)) in active.iter().enumerate() {
                let (vars, vals) = at.col(*row);
                for (&j, &v) in vars.iter().zip(vals) {
                    trips.push((j, n + r, v));
                }
            }
            let kkt_plain = CscMatrix::from_triplets(n + m_act, n + m_act, &trips);
            let delta = self.set.polish_delta;
            for j in 0..n {
                trips.push((j, j, delta));
            }
            for r in 0..m_act {
                trips.push((n + r, n + r, -delta));
            }
            let kkt_reg = CscMatrix::from_triplets(n + m_act, n + m_act, &trips);
            let mut signs = vec![1i8; n];
            signs.extend(std::iter::repeat(-1i8).take(m_act));
            let factor = match LdlFactor::factor(&kkt_reg, Some(&signs), RegSettings::default()) {
                Ok(f) => f,
                Err(e) => {
                    log::debug!("refine: factorization failed: {e}");
                    break;
                }
            };

            let mut rhs = vec![0.0; n + m_act];
            for j in 0..n {
                rhs[j] = -self.qw[j] + if anchored { delta * self.x[j] } else { 0.0 };
            }
            for (r, (_, b)) in active.iter().enumerate() {
                rhs[n + r] = *b;
            }
            let mut sol = vec![0.0; n + m_act];
            let target = if anchored { &kkt_reg } else { &kkt_plain };
            factor.solve_refined(target, &rhs, &mut sol, self.set.polish_refine_iters);

            // Unscale the candidate for the true residual test.
            let mut x_pol = vec![0.0; n];
            for j in 0..n {
                x_pol[j] = self.d[j] * sol[j];
            }
            let mut y_pol = vec![0.0; self.m];
            for (r, (row, _)) in active.iter().enumerate() {
                y_pol[*row] = self.e[*row] * sol[n + r] / self.c;
            }
            let (rp1, rd1) = compute_residuals(&self.prob, &x_pol, &y_pol);
            let res1 = rp1.max(rd1);
            log::debug!("refine round {round}: {m_act} active rows, residual {res1:.2e} (from {res0:.2e})");
            if best.as_ref().map(|b| res1 < b.res).unwrap_or(true) {
                let mut y_scaled = vec![0.0; self.m];
                for (r, (row, _)) in active.iter().enumerate() {
                    y_scaled[*row] = sol[n + r];
                }
                best = Some(RefineOutcome {
                    x: x_pol.clone(),
                    y: y_pol.clone(),
                    x_scaled: sol[..n].to_vec(),
                    y_scaled,
                    primal_residual: rp1,
                    dual_residual: rd1,
                    res: res1,
                });
            }
            if res1 <= 1e-10 * res0.max(1.0) {
                break;
            }
            if round >= 2 && res1 > 1e3 * res0 {
                // Classification is thrashing far from the solution.
                break;
            }

            // Reclassify in scaled space: add violated rows, release
            // wrong-signed duals.
            self.aw.mul_into(&sol[..n], &mut ax);
            let y_scale = 1.0f64;
            let mut changed = 0;
            for i in 0..self.m {
                if self.classes[i] == RowClass::Equality {
                    continue;
                }
                let mut scale = 1.0f64;
                if self.lw[i].is_finite() {
                    scale = scale.max(self.lw[i].abs());
                }
                if self.uw[i].is_finite() {
                    scale = scale.max(self.uw[i].abs());
                }
                let tol = 1e-9 * scale;
                let y_here = if active_rank[i] != usize::MAX {
                    sol[n + active_rank[i]]
                } else {
                    0.0
                };
                match side[i] {
                    0 => {
                        if ax[i] < self.lw[i] - tol {
                            side[i] = 1;
                            changed += 1;
                        } else if ax[i] > self.uw[i] + tol {
                            side[i] = 2;
                            changed += 1;
                        }
                    }
                    1 => {
                        if y_here > 1e-9 * y_scale {
                            side[i] = 0;
                            changed += 1;
                        }
                    }
                    _ => {
                        if y_here < -1e-9 * y_scale {
                            side[i] = 0;
                            changed += 1;
                        }
                    }
                }
            }
            if changed == 0 {
                break;
            }
        }

        match best {
            Some(outcome) if outcome.res <= res0 => Some(outcome),
            _ => None,
        }
    }
}

/// Result of one active-set refinement attempt, in both original and
/// equilibrated coordinates.
struct RefineOutcome {
    x: Vec<f64>,
    y: Vec<f64>,
    x_scaled: Vec<f64>,
    y_scaled: Vec<f64>,
    primal_residual: f64,
    dual_residual: f64,
    res: f64,
}

fn rho_vectors(rho: f64, classes: &[RowClass]) -> (Vec<f64>, Vec<f64>) {
    let rho_vec: Vec<f64> = classes
        .iter()
        .map(|class| match class {
            RowClass::Equality => (rho * RHO_EQ_FACTOR).clamp(RHO_MIN, RHO_MAX),
            RowClass::Inequality => rho.clamp(RHO_MIN, RHO_MAX),
            RowClass::Loose => (rho * RHO_LOOSE_FACTOR).clamp(RHO_MIN, RHO_MAX),
        })
        .collect();
    let rho_inv = rho_vec.iter().map(|r| 1.0 / r).collect();
    (rho_vec, rho_inv)
}

fn build_kkt(pw: &CscMatrix, aw: &CscMatrix, sigma: f64, rho_inv: &[f64]) -> CscMatrix {
    let n = pw.cols;
    let m = aw.rows;
    let at = aw.transpose();
    let mut trips: Vec<(usize, usize, f64)> =
        Vec::with_capacity(pw.nnz() + at.nnz() + n + m);
    trips.extend(pw.triplets());
    for j in 0..n {
        trips.push((j, j, sigma));
    }
    for i in 0..m {
        let (vars, vals) = at.col(i);
        for (&j, &v) in vars.iter().zip(vals) {
            trips.push((j, n + i, v));
        }
        trips.push((n + i, n + i, -rho_inv[i]));
    }
    CscMatrix::from_triplets(n + m, n + m, &trips)
}

fn factor_kkt(kkt: &CscMatrix, signs: &[i8]) -> Result<LdlFactor, QpError> {
    LdlFactor::factor(kkt, Some(signs), RegSettings::default()).map_err(|e| match e {
        FactorError::WrongInertia(_) => QpError::InvalidCurvature,
        FactorError::Singular(k) => QpError::Numerical(format!("singular KKT pivot at {k}")),
    })
}

/// Modified Ruiz equilibration with cost scaling. Returns (d, e, c) such that
/// the scaled data is P̄ = c·DPD, q̄ = c·Dq, Ā = EAD.
fn ruiz_equilibrate(
    pw: &mut CscMatrix,
    aw: &mut CscMatrix,
    qw: &mut [f64],
    iterations: usize,
) -> (Vec<f64>, Vec<f64>, f64) {
    let n = pw.cols;
    let m = aw.rows;
    let mut d = vec![1.0; n];
    let mut e = vec![1.0; m];
    let mut c = 1.0;
    if iterations == 0 {
        return (d, e, c);
    }
    let mut pn = vec![0.0; n];
    let mut an_col = vec![0.0; n];
    let mut an_row = vec![0.0; m];
    let guard = |norm: f64| -> f64 {
        if norm <= 1e-12 {
            1.0
        } else {
            (1.0 / norm.sqrt()).clamp(MIN_SCALING, MAX_SCALING)
        }
    };
    for _ in 0..iterations {
        pw.symm_col_inf_norms(&mut pn);
        aw.col_inf_norms(&mut an_col);
        aw.row_inf_norms(&mut an_row);
        let dd: Vec<f64> = (0..n).map(|j| guard(pn[j].max(an_col[j]))).collect();
        let de: Vec<f64> = (0..m).map(|i| guard(an_row[i])).collect();
        pw.scale(&dd, &dd);
        aw.scale(&de, &dd);
        for j in 0..n {
            qw[j] *= dd[j];
            d[j] *= dd[j];
        }
        for i in 0..m {
            e[i] *= de[i];
        }
        // Cost scaling keeps the objective O(1).
        pw.symm_col_inf_norms(&mut pn);
        let mean_p = if n > 0 { pn.iter().sum::<f64>() / n as f64 } else { 0.0 };
        let qn = inf_norm(qw);
        let denom = mean_p.max(qn);
        let gamma = if denom <= 1e-12 {
            1.0
        } else {
            (1.0 / denom).clamp(MIN_SCALING, MAX_SCALING)
        };
        for v in &mut pw.values {
            *v *= gamma;
        }
        for q in qw.iter_mut() {
            *q *= gamma;
        }
        c *= gamma;
    }
    (d, e, c)
}
