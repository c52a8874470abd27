//! Sparse LDLᵀ factorization for the quasi-definite KKT systems the solver
//! builds, with a quotient-graph minimum-degree ordering. Up-looking
//! factorization over the elimination tree; no pivoting — quasi-definiteness
//! makes the factorization exist for any symmetric permutation, and dynamic
//! regularization guards the near-singular cases.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::sparse::CscMatrix;

#[derive(Debug, thiserror::Error)]
pub enum FactorError {
    #[error("zero pivot at position {0}")]
    Singular(usize),
    #[error("pivot sign violates quasi-definite structure at position {0}")]
    WrongInertia(usize),
}

/// Fill-reducing ordering of the symmetric matrix whose upper triangle is
/// given. Returns `perm` with `perm[new] = old`. Deterministic: ties break on
/// the smallest node index.
pub fn min_degree_order(upper: &CscMatrix) -> Vec<usize> {
    let n = upper.cols;
    let mut adj_var: Vec<Vec<u32>> = vec![Vec::new(); n];
    for j in 0..n {
        let (rows, _) = upper.col(j);
        for &i in rows {
            if i != j {
                adj_var[i].push(j as u32);
                adj_var[j].push(i as u32);
            }
        }
    }
    for list in &mut adj_var {
        list.sort_unstable();
        list.dedup();
    }

    let mut adj_elem: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut elem_vars: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut alive = vec![true; n];
    let mut elem_alive = vec![false; n];
    let mut degree: Vec<usize> = adj_var.iter().map(|l| l.len()).collect();
    let mut mark = vec![u32::MAX; n];
    let mut stamp = 0u32;
    let mut order = Vec::with_capacity(n);

    let mut heap: BinaryHeap<Reverse<(usize, u32)>> =
        (0..n).map(|v| Reverse((degree[v], v as u32))).collect();

    while let Some(Reverse((d, v32))) = heap.pop() {
        let v = v32 as usize;
        if !alive[v] || d != degree[v] {
            continue;
        }
        stamp += 1;
        mark[v] = stamp;
        let mut boundary: Vec<u32> = Vec::new();
        for &u in &adj_var[v] {
            let uu = u as usize;
            if alive[uu] && mark[uu] != stamp {
                mark[uu] = stamp;
                boundary.push(u);
            }
        }
        for &e in &adj_elem[v] {
            let ee = e as usize;
            if !elem_alive[ee] {
                continue;
            }
            for &u in &elem_vars[ee] {
                let uu = u as usize;
                if alive[uu] && mark[uu] != stamp {
                    mark[uu] = stamp;
                    boundary.push(u);
                }
            }
            elem_alive[ee] = false; // absorbed into the new element
        }
        alive[v] = false;
        order.push(v);
        if boundary.is_empty() {
            continue;
        }
        elem_alive[v] = true;
        elem_vars[v] = boundary.clone();

        for &u in &boundary {
            let uu = u as usize;
            // Edges now covered by the new element are dropped; dead
            // variables and absorbed elements are cleaned while we are here.
            adj_var[uu].retain(|&w| {
                let ww = w as usize;
                alive[ww] && mark[ww] != stamp
            });
            adj_elem[uu].retain(|&e| elem_alive[e as usize]);
            adj_elem[uu].push(v as u32);
            let mut deg = adj_var[uu].len();
            for &e in &adj_elem[uu] {
                deg += elem_vars[e as usize].len().saturating_sub(1);
            }
            degree[uu] = deg;
            heap.push(Reverse((deg, u)));
        }
    }
    order
}

/// Symmetric permutation of an upper-triangular CSC matrix: returns the upper
/// triangle of PᵀMP where `pinv[old] = new`. Row order within columns is
/// unspecified, which the factorization below tolerates.
pub fn symperm_upper(m: &CscMatrix, pinv: &[usize]) -> CscMatrix {
    let n = m.cols;
    let mut count = vec![0usize; n + 1];
    for j in 0..n {
        let (rows, _) = m.col(j);
        let j2 = pinv[j];
        for &i in rows {
            debug_assert!(i <= j, "input must be upper triangular");
            let i2 = pinv[i];
            count[i2.max(j2) + 1] += 1;
        }
    }
    for c in 0..n {
        count[c + 1] += count[c];
    }
    let col_ptr = count.clone();
    let mut next = count;
    let mut row_idx = vec![0usize; m.nnz()];
    let mut values = vec![0.0; m.nnz()];
    for j in 0..n {
        let (rows, vals) = m.col(j);
        let j2 = pinv[j];
        for (&i, &v) in rows.iter().zip(vals) {
            let i2 = pinv[i];
            let (r, c) = (i2.min(j2), i2.max(j2));
            let pos = next[c];
            row_idx[pos] = r;
            values[pos] = v;
            next[c] += 1;
        }
    }
    CscMatrix {
        rows: n,
        cols: n,
        col_ptr,
        row_idx,
        values,
    }
}

/// Dynamic-regularization settings for the numeric factorization.
#[derive(Debug, Clone, Copy)]
pub struct RegSettings {
    /// Pivots with magnitude below this are considered degenerate.
    pub eps: f64,
    /// Degenerate pivots are replaced by ±delta with the expected sign.
    pub delta: f64,
}

impl Default for RegSettings {
    fn default() -> Self {
        Self { eps: 1e-11, delta: 1e-9 }
    }
}

#[derive(Debug, Clone)]
pub struct LdlFactor {
    n: usize,
    l_colptr: Vec<usize>,
    l_rowidx: Vec<usize>,
    l_values: Vec<f64>,
    d: Vec<f64>,
    /// perm[new] = old
    perm: Vec<usize>,
}

impl LdlFactor {
    /// Factors the symmetric matrix given by its upper triangle.
    /// `expected_signs`, when present, gives the quasi-definite sign pattern
    /// in the ORIGINAL index space (+1 primal block, -1 dual block); a pivot
    /// flipping decisively against its sign aborts with `WrongInertia`.
    pub fn factor(
        upper: &CscMatrix,
        expected_signs: Option<&[i8]>,
        reg: RegSettings,
    ) -> Result<Self, FactorError> {
        assert_eq!(upper.rows, upper.cols);
        let n = upper.cols;
        let perm = min_degree_order(upper);
        let mut pinv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            pinv[old] = new;
        }
        let b = symperm_upper(upper, &pinv);

        // Elimination tree and column counts.
        let mut parent = vec![-1isize; n];
        let mut flag = vec![usize::MAX; n];
        let mut lnz = vec![0usize; n];
        for k in 0..n {
            flag[k] = k;
            let (rows, _) = b.col(k);
            for &entry in rows {
                let mut i = entry;
                while flag[i] != k {
                    if parent[i] == -1 {
                        parent[i] = k as isize;
                    }
                    lnz[i] += 1;
                    flag[i] = k;
                    i = parent[i] as usize;
                }
            }
        }
        let mut l_colptr = vec![0usize; n + 1];
        for k in 0..n {
            l_colptr[k + 1] = l_colptr[k] + lnz[k];
        }

        // Numeric factorization (up-looking).
        let nnz_l = l_colptr[n];
        let mut l_rowidx = vec![0usize; nnz_l];
        let mut l_values = vec![0.0f64; nnz_l];
        let mut d = vec![0.0f64; n];
        let mut y = vec![0.0f64; n];
        let mut pattern = vec![0usize; n];
        let mut l_fill = vec![0usize; n];
        let mut flag = vec![usize::MAX; n];

        for k in 0..n {
            let mut top = n;
            flag[k] = k;
            y[k] = 0.0;
            let (rows, vals) = b.col(k);
            for (&entry, &val) in rows.iter().zip(vals) {
                y[entry] += val;
                let mut len = 0usize;
                let mut i = entry;
                while flag[i] != k {
                    pattern[len] = i;
                    len += 1;
                    flag[i] = k;
                    i = parent[i] as usize;
                }
                while len > 0 {
                    len -= 1;
                    top -= 1;
                    pattern[top] = pattern[len];
                }
            }
            d[k] = y[k];
            y[k] = 0.0;
            for t in top..n {
                let i = pattern[t];
                let yi = y[i];
                y[i] = 0.0;
                let p2 = l_colptr[i] + l_fill[i];
                for p in l_colptr[i]..p2 {
                    y[l_rowidx[p]] -= l_values[p] * yi;
                }
                let l_ki = yi / d[i];
                d[k] -= l_ki * yi;
                l_rowidx[p2] = k;
                l_values[p2] = l_ki;
                l_fill[i] += 1;
            }

            if let Some(signs) = expected_signs {
                let s = signs[perm[k]] as f64;
                if s * d[k] < -1e-7 {
                    return Err(FactorError::WrongInertia(perm[k]));
                }
                if d[k].abs() < reg.eps {
                    d[k] = s * reg.delta;
                }
            } else if d[k].abs() < reg.eps {
                if d[k] == 0.0 {
                    return Err(FactorError::Singular(perm[k]));
                }
                d[k] = d[k].signum() * reg.eps;
            }
        }

        Ok(Self {
            n,
            l_colptr,
            l_rowidx,
            l_values,
            d,
            perm,
        })
    }

    /// Solves M x = b. `work` must have length n.
    pub fn solve(&self, b: &[f64], x: &mut [f64], work: &mut [f64]) {
        debug_assert_eq!(b.len(), self.n);
        for k in 0..self.n {
            work[k] = b[self.perm[k]];
        }
        // L w = b
        for j in 0..self.n {
            let wj = work[j];
            if wj != 0.0 {
                for p in self.l_colptr[j]..self.l_colptr[j + 1] {
                    work[self.l_rowidx[p]] -= self.l_values[p] * wj;
                }
            }
        }
        // D w = w
        for j in 0..self.n {
            work[j] /= self.d[j];
        }
        // Lᵀ x = w
        for j in (0..self.n).rev() {
            let mut wj = work[j];
            for p in self.l_colptr[j]..self.l_colptr[j + 1] {
                wj -= self.l_values[p] * work[self.l_rowidx[p]];
            }
            work[j] = wj;
        }
        for k in 0..self.n {
            x[self.perm[k]] = work[k];
        }
    }

    /// Solves with up to `iters` rounds of iterative refinement against the
    /// given (unpermuted, upper-triangular) target matrix — typically the
    /// unregularized version of the factored one. Refinement is monotone in
    /// the residual norm: when the target system is inconsistent (a
    /// rank-deficient active set), the iteration stops at the best iterate
    /// instead of diverging.
    pub fn solve_refined(&self, upper: &CscMatrix, b: &[f64], x: &mut [f64], iters: usize) {
        let n = self.n;
        let mut work = vec![0.0; n];
        let mut resid = vec![0.0; n];
        let mut corr = vec![0.0; n];
        let mut best = vec![0.0; n];
        self.solve(b, x, &mut work);
        best.copy_from_slice(x);
        let mut best_norm = f64::INFINITY;
        for _ in 0..iters {
            upper.symm_mul_into(x, &mut resid);
            let mut worst = 0.0f64;
            for i in 0..n {
                resid[i] = b[i] - resid[i];
                worst = worst.max(resid[i].abs());
            }
            if worst < best_norm {
                best_norm = worst;
                best.copy_from_slice(x);
            } else {
                break;
            }
            if worst < 1e-14 {
                break;
            }
            self.solve(&resid, &mut corr, &mut work);
            for i in 0..n {
                x[i] += corr[i];
            }
        }
        x.copy_from_slice(&best);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_to_upper(m: &[&[f64]]) -> CscMatrix {
        let n = m.len();
        let mut trips = Vec::new();
        for i in 0..n {
            for j in i..n {
                if m[i][j] != 0.0 {
                    trips.push((i, j, m[i][j]));
                }
            }
        }
        CscMatrix::from_triplets(n, n, &trips)
    }

    #[test]
    fn factor_and_solve_spd() {
        let m = dense_to_upper(&[
            &[4.0, 1.0, 0.0],
            &[1.0, 3.0, 1.0],
            &[0.0, 1.0, 2.0],
        ]);
        let f = LdlFactor::factor(&m, None, RegSettings::default()).unwrap();
        let b = vec![1.0, 2.0, 3.0];
        let mut x = vec![0.0; 3];
        let mut work = vec![0.0; 3];
        f.solve(&b, &mut x, &mut work);
        let mut check = vec![0.0; 3];
        m.symm_mul_into(&x, &mut check);
        for (c, bb) in check.iter().zip(&b) {
            assert!((c - bb).abs() < 1e-12, "residual too large: {check:?}");
        }
    }

    #[test]
    fn factor_quasi_definite_with_signs() {
        // [[1, 0, 1], [0, 2, 1], [1, 1, -1]] : 2 primal, 1 dual.
        let m = dense_to_upper(&[
            &[1.0, 0.0, 1.0],
            &[0.0, 2.0, 1.0],
            &[1.0, 1.0, -1.0],
        ]);
        let signs = [1i8, 1, -1];
        let f = LdlFactor::factor(&m, Some(&signs), RegSettings::default()).unwrap();
        let b = vec![1.0, -1.0, 0.5];
        let mut x = vec![0.0; 3];
        let mut work = vec![0.0; 3];
        f.solve(&b, &mut x, &mut work);
        let mut check = vec![0.0; 3];
        m.symm_mul_into(&x, &mut check);
        for (c, bb) in check.iter().zip(&b) {
            assert!((c - bb).abs() < 1e-12);
        }
    }

    #[test]
    fn wrong_inertia_detected() {
        // Indefinite in the "primal" block: [[0, 1], [1, 0]] with +,+ signs.
        let m = dense_to_upper(&[&[1e-14, 1.0], &[1.0, 1e-14]]);
        let signs = [1i8, 1];
        let res = LdlFactor::factor(&m, Some(&signs), RegSettings::default());
        assert!(matches!(res, Err(FactorError::WrongInertia(_))));
    }

    #[test]
    fn larger_random_spd_system() {
        // Diagonally dominant symmetric matrix, deterministic pattern.
        let n = 60;
        let mut trips = Vec::new();
        for i in 0..n {
            trips.push((i, i, 10.0 + (i % 7) as f64));
            if i + 1 < n {
                trips.push((i, i + 1, -1.0 - ((i * 13) % 3) as f64 * 0.25));
            }
            if i + 9 < n {
                trips.push((i, i + 9, 0.5));
            }
        }
        let m = CscMatrix::from_triplets(n, n, &trips);
        let f = LdlFactor::factor(&m, None, RegSettings::default()).unwrap();
        let b: Vec<f64> = (0..n).map(|i| ((i * 31 % 11) as f64) - 5.0).collect();
        let mut x = vec![0.0; n];
        let mut work = vec![0.0; n];
        f.solve(&b, &mut x, &mut work);
        let mut check = vec![0.0; n];
        m.symm_mul_into(&x, &mut check);
        for i in 0..n {
            assert!((check[i] - b[i]).abs() < 1e-10);
        }
    }
}
