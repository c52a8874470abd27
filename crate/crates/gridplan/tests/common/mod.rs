//! Shared test oracles: independent solution routes used to cross-check the
//! operator-splitting solver and the planners. Everything here is
//! deliberately naive — dense algebra, enumeration, first-order long runs —
//! and shares no code with the implementation paths it checks.

#![allow(dead_code)]

use gridplan::qp::{CscMatrix, QpProblem};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Dense Gaussian elimination with partial pivoting. Returns None when the
/// system is numerically singular.
pub fn dense_solve(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut aug: Vec<Vec<f64>> = a.iter().cloned().collect();
    let mut rhs = b.to_vec();
    for col in 0..n {
        let mut pivot_row = col;
        let mut pivot_val = aug[col][col].abs();
        for row in col + 1..n {
            if aug[row][col].abs() > pivot_val {
                pivot_val = aug[row][col].abs();
                pivot_row = row;
            }
        }
        if pivot_val < 1e-10 {
            return None;
        }
        aug.swap(col, pivot_row);
        rhs.swap(col, pivot_row);
        for row in col + 1..n {
            let factor = aug[row][col] / aug[col][col];
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                aug[row][k] -= factor * aug[col][k];
            }
            rhs[row] -= factor * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        let mut sum = rhs[col];
        for k in col + 1..n {
            sum -= aug[col][k] * x[k];
        }
        x[col] = sum / aug[col][col];
    }
    Some(x)
}

fn to_dense(m: &CscMatrix) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; m.cols]; m.rows];
    for (i, j, v) in m.triplets() {
        out[i][j] += v;
    }
    out
}

fn p_full_dense(prob: &QpProblem) -> Vec<Vec<f64>> {
    let mut p = vec![vec![0.0; prob.n]; prob.n];
    for (i, j, v) in prob.p_upper.triplets() {
        p[i][j] += v;
        if i != j {
            p[j][i] += v;
        }
    }
    p
}

/// Brute-force oracle by enumeration of active constraint subsets.
///
/// Every row is tried inactive, active-at-lower or active-at-upper. For each
/// combination the equality-constrained QP is solved through its dense KKT
/// system (for an LP this degenerates to vertex enumeration: exactly n active
/// rows). Any combination whose solution is feasible gives an upper bound on
/// the optimum; the optimum itself appears at the true active set, so the
/// minimum over feasible candidates is the optimal objective.
///
/// Only usable for small m (3^m combinations) and bounded problems.
pub fn enumeration_oracle(prob: &QpProblem) -> Option<f64> {
    let n = prob.n;
    let m = prob.m;
    assert!(m <= 12, "enumeration oracle limited to tiny m");
    let a = to_dense(&prob.a);
    let p = p_full_dense(prob);
    let is_lp = prob.p_upper.nnz() == 0;
    let feas_tol = 1e-7;

    let mut best: Option<f64> = None;
    let combos = 3usize.pow(m as u32);
    'combo: for code in 0..combos {
        let mut state = Vec::with_capacity(m);
        let mut c = code;
        for _ in 0..m {
            state.push(c % 3);
            c /= 3;
        }
        let active: Vec<(usize, f64)> = state
            .iter()
            .enumerate()
            .filter(|(_, s)| **s != 0)
            .map(|(i, s)| (i, if *s == 1 { prob.l[i] } else { prob.u[i] }))
            .collect();
        if active.iter().any(|(_, b)| !b.is_finite()) {
            continue;
        }
        let n_act = active.len();
        if is_lp && n_act != n {
            // LP optima live on vertices.
            continue;
        }
        if n_act > n {
            continue;
        }

        let x = if is_lp {
            let rows: Vec<Vec<f64>> = active.iter().map(|(i, _)| a[*i].clone()).collect();
            let rhs: Vec<f64> = active.iter().map(|(_, b)| *b).collect();
            match dense_solve(&rows, &rhs) {
                Some(x) => x,
                None => continue 'combo,
            }
        } else {
            // KKT system [[P, Aactᵀ], [Aact, 0]].
            let dim = n + n_act;
            let mut kkt = vec![vec![0.0; dim]; dim];
            for i in 0..n {
                for j in 0..n {
                    kkt[i][j] = p[i][j];
                }
            }
            for (r, (row, _)) in active.iter().enumerate() {
                for j in 0..n {
                    kkt[j][n + r] = a[*row][j];
                    kkt[n + r][j] = a[*row][j];
                }
            }
            let mut rhs = vec![0.0; dim];
            for j in 0..n {
                rhs[j] = -prob.q[j];
            }
            for (r, (_, b)) in active.iter().enumerate() {
                rhs[n + r] = *b;
            }
            match dense_solve(&kkt, &rhs) {
                Some(sol) => sol[..n].to_vec(),
                None => continue 'combo,
            }
        };

        // Full feasibility check.
        for i in 0..m {
            let ax: f64 = a[i].iter().zip(&x).map(|(c, x)| c * x).sum();
            if ax < prob.l[i] - feas_tol || ax > prob.u[i] + feas_tol {
                continue 'combo;
            }
        }
        let obj = prob.objective_value(&x);
        best = Some(match best {
            Some(b) if b <= obj => b,
            _ => obj,
        });
    }
    best
}

fn power_iteration(apply: impl Fn(&[f64], &mut [f64]), dim: usize) -> f64 {
    if dim == 0 {
        return 0.0;
    }
    let mut v: Vec<f64> = (0..dim).map(|i| 1.0 + (i % 3) as f64 * 0.1).collect();
    let mut w = vec![0.0; dim];
    let mut lambda = 0.0;
    for _ in 0..200 {
        apply(&v, &mut w);
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-30 {
            return 0.0;
        }
        lambda = norm;
        for i in 0..dim {
            v[i] = w[i] / norm;
        }
    }
    lambda
}

/// Long-run first-order oracle for strictly convex QPs: an augmented
/// Lagrangian outer loop with an accelerated projected-gradient inner solve.
/// Slow and simple on purpose.
pub fn first_order_oracle(prob: &QpProblem) -> f64 {
    let n = prob.n;
    let m = prob.m;
    let a = to_dense(&prob.a);
    let p = p_full_dense(prob);
    let matvec_p = |x: &[f64], y: &mut [f64]| {
        for i in 0..n {
            y[i] = p[i].iter().zip(x).map(|(c, v)| c * v).sum();
        }
    };
    let matvec_a = |x: &[f64], y: &mut [f64]| {
        for i in 0..m {
            y[i] = a[i].iter().zip(x).map(|(c, v)| c * v).sum();
        }
    };
    let matvec_at = |y: &[f64], out: &mut [f64]| {
        for j in 0..n {
            out[j] = (0..m).map(|i| a[i][j] * y[i]).sum();
        }
    };

    let lam_p = power_iteration(matvec_p, n);
    let lam_ata = power_iteration(
        |x, out| {
            let mut tmp = vec![0.0; m];
            matvec_a(x, &mut tmp);
            matvec_at(&tmp, out);
        },
        n,
    );
    let penalty = 10.0_f64.max(lam_p / 10.0);
    let lips = lam_p + penalty * lam_ata + 1e-9;
    let step = 1.0 / lips;

    let mut x = vec![0.0; n];
    let mut mult = vec![0.0; m];
    let mut ax = vec![0.0; m];
    let mut grad = vec![0.0; n];
    let mut px = vec![0.0; n];
    let mut atv = vec![0.0; n];
    let mut viol = vec![0.0; m];

    for _outer in 0..300 {
        // FISTA inner loop on the smooth augmented Lagrangian.
        let mut t = 1.0f64;
        let mut x_prev = x.clone();
        let mut y_acc = x.clone();
        for _inner in 0..20_000 {
            matvec_a(&y_acc, &mut ax);
            for i in 0..m {
                let s = ax[i] + mult[i] / penalty;
                viol[i] = s - s.max(prob.l[i]).min(prob.u[i]);
            }
            matvec_p(&y_acc, &mut px);
            matvec_at(&viol, &mut atv);
            for j in 0..n {
                grad[j] = px[j] + prob.q[j] + penalty * atv[j];
            }
            let mut x_new = vec![0.0; n];
            let mut shift = 0.0f64;
            for j in 0..n {
                x_new[j] = y_acc[j] - step * grad[j];
                shift = shift.max((x_new[j] - x_prev[j]).abs());
            }
            let t_new = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            for j in 0..n {
                y_acc[j] = x_new[j] + ((t - 1.0) / t_new) * (x_new[j] - x_prev[j]);
            }
            x_prev = x_new;
            t = t_new;
            if shift < 1e-13 {
                break;
            }
        }
        x = x_prev;

        matvec_a(&x, &mut ax);
        let mut max_viol = 0.0f64;
        for i in 0..m {
            let s = ax[i] + mult[i] / penalty;
            let projected = s.max(prob.l[i]).min(prob.u[i]);
            let new_mult = penalty * (s - projected);
            max_viol = max_viol.max((ax[i] - ax[i].max(prob.l[i]).min(prob.u[i])).abs());
            mult[i] = new_mult;
        }
        if max_viol < 1e-10 {
            break;
        }
    }
    prob.objective_value(&x)
}

/// Deterministic generator for strictly feasible, bounded random LPs.
/// Box rows keep the polytope bounded so vertex enumeration applies.
pub fn random_tiny_lp(seed: u64) -> QpProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..=4usize);
    let extra = rng.gen_range(1..=4usize);
    let m = n + extra;
    let x0: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();

    let mut trips = Vec::new();
    let mut l = Vec::new();
    let mut u = Vec::new();
    for j in 0..n {
        trips.push((j, j, 1.0));
        l.push(x0[j] - rng.gen_range(0.5..3.0));
        u.push(x0[j] + rng.gen_range(0.5..3.0));
    }
    for i in n..m {
        let mut row_val: f64 = 0.0;
        for j in 0..n {
            let c: f64 = rng.gen_range(-2.0..2.0f64);
            if c.abs() > 0.3 {
                trips.push((i, j, c));
                row_val += c * x0[j];
            }
        }
        match rng.gen_range(0..3) {
            0 => {
                l.push(f64::NEG_INFINITY);
                u.push(row_val + rng.gen_range(0.3..2.0));
            }
            1 => {
                l.push(row_val - rng.gen_range(0.3..2.0));
                u.push(f64::INFINITY);
            }
            _ => {
                l.push(row_val - rng.gen_range(0.3..2.0));
                u.push(row_val + rng.gen_range(0.3..2.0));
            }
        }
    }
    let q: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
    let a = CscMatrix::from_triplets(m, n, &trips);
    QpProblem::lp(q, a, l, u).expect("generated LP must validate")
}

/// Deterministic generator for strictly convex, strictly feasible tiny QPs.
pub fn random_tiny_qp(seed: u64) -> QpProblem {
    random_qp_sized(seed, 2, 6, 1, 8)
}

/// Deterministic generator for mid-size strictly convex QPs (n ≤ 50,
/// m ≤ 100).
pub fn random_mid_qp(seed: u64) -> QpProblem {
    random_qp_sized(seed, 10, 50, 10, 100)
}

fn random_qp_sized(seed: u64, n_min: usize, n_max: usize, m_min: usize, m_max: usize) -> QpProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(n_min..=n_max);
    let m = rng.gen_range(m_min.max(1)..=m_max.max(m_min.max(1)));

    // P = LᵀL + c·I, generated dense then stored as upper triangle.
    let mut lmat = vec![vec![0.0; n]; n];
    for row in lmat.iter_mut() {
        for v in row.iter_mut() {
            if rng.gen_bool(0.4) {
                *v = rng.gen_range(-1.0..1.0);
            }
        }
    }
    let ridge = rng.gen_range(0.1..1.0);
    let mut p_trips = Vec::new();
    for i in 0..n {
        for j in i..n {
            let mut v: f64 = (0..n).map(|k| lmat[k][i] * lmat[k][j]).sum();
            if i == j {
                v += ridge;
            }
            if v != 0.0 {
                p_trips.push((i, j, v));
            }
        }
    }

    let x0: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.5..1.5)).collect();
    let mut trips = Vec::new();
    let mut l = Vec::new();
    let mut u = Vec::new();
    for i in 0..m {
        let mut row_val = 0.0;
        let mut nonzeros = 0;
        for j in 0..n {
            if rng.gen_bool(0.35) {
                let c: f64 = rng.gen_range(-2.0..2.0);
                trips.push((i, j, c));
                row_val += c * x0[j];
                nonzeros += 1;
            }
        }
        if nonzeros == 0 {
            let j = rng.gen_range(0..n);
            trips.push((i, j, 1.0));
            row_val = x0[j];
        }
        match rng.gen_range(0..4) {
            0 => {
                l.push(f64::NEG_INFINITY);
                u.push(row_val + rng.gen_range(0.2..2.0));
            }
            1 => {
                l.push(row_val - rng.gen_range(0.2..2.0));
                u.push(f64::INFINITY);
            }
            _ => {
                l.push(row_val - rng.gen_range(0.2..2.0));
                u.push(row_val + rng.gen_range(0.2..2.0));
            }
        }
    }
    let q: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
    QpProblem::new(
        CscMatrix::from_triplets(n, n, &p_trips),
        q,
        CscMatrix::from_triplets(m, n, &trips),
        l,
        u,
    )
    .expect("generated QP must validate")
}
