//! Compressed-sparse-column matrices, sized for the problems this crate
//! assembles. Only the operations the solver needs are implemented.

/// Sparse matrix in compressed-column form. Row indices within a column are
/// not required to be sorted unless stated by the producing routine.
#[derive(Debug, Clone, PartialEq)]
pub struct CscMatrix {
    pub rows: usize,
    pub cols: usize,
    pub col_ptr: Vec<usize>,
    pub row_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CscMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            col_ptr: vec![0; cols + 1],
            row_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds from (row, col, value) triplets, summing duplicates. Entries
    /// end up sorted by column then row.
    pub fn from_triplets(rows: usize, cols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut entries: Vec<(usize, usize, f64)> = triplets
            .iter()
            .filter(|(i, j, _)| {
                debug_assert!(*i < rows && *j < cols, "triplet ({i},{j}) out of bounds");
                *i < rows && *j < cols
            })
            .copied()
            .collect();
        entries.sort_unstable_by(|a, b| (a.1, a.0).cmp(&(b.1, b.0)));

        let mut col_ptr = vec![0usize; cols + 1];
        let mut row_idx = Vec::with_capacity(entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in entries {
            if last == Some((j, i)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_ptr[j + 1] += 1;
                row_idx.push(i);
                values.push(v);
                last = Some((j, i));
            }
        }
        for j in 0..cols {
            col_ptr[j + 1] += col_ptr[j];
        }
        Self {
            rows,
            cols,
            col_ptr,
            row_idx,
            values,
        }
    }

    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    pub fn col(&self, j: usize) -> (&[usize], &[f64]) {
        let range = self.col_ptr[j]..self.col_ptr[j + 1];
        (&self.row_idx[range.clone()], &self.values[range])
    }

    /// Test helper; linear scan of one column.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (rows, vals) = self.col(j);
        rows.iter()
            .zip(vals)
            .filter(|(&r, _)| r == i)
            .map(|(_, &v)| v)
            .sum()
    }

    /// y = A x
    pub fn mul_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(y.len(), self.rows);
        y.fill(0.0);
        for j in 0..self.cols {
            let xj = x[j];
            if xj == 0.0 {
                continue;
            }
            let (rows, vals) = self.col(j);
            for (&i, &v) in rows.iter().zip(vals) {
                y[i] += v * xj;
            }
        }
    }

    /// y = Aᵀ x
    pub fn t_mul_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.rows);
        debug_assert_eq!(y.len(), self.cols);
        for j in 0..self.cols {
            let (rows, vals) = self.col(j);
            let mut acc = 0.0;
            for (&i, &v) in rows.iter().zip(vals) {
                acc += v * x[i];
            }
            y[j] = acc;
        }
    }

    /// y = M x where only the upper triangle of the symmetric M is stored.
    pub fn symm_mul_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(self.rows, self.cols);
        y.fill(0.0);
        for j in 0..self.cols {
            let (rows, vals) = self.col(j);
            for (&i, &v) in rows.iter().zip(vals) {
                y[i] += v * x[j];
                if i != j {
                    y[j] += v * x[i];
                }
            }
        }
    }

    pub fn transpose(&self) -> CscMatrix {
        let mut col_ptr = vec![0usize; self.rows + 1];
        for &i in &self.row_idx {
            col_ptr[i + 1] += 1;
        }
        for i in 0..self.rows {
            col_ptr[i + 1] += col_ptr[i];
        }
        let mut next = col_ptr.clone();
        let mut row_idx = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for j in 0..self.cols {
            let (rows, vals) = self.col(j);
            for (&i, &v) in rows.iter().zip(vals) {
                let pos = next[i];
                row_idx[pos] = j;
                values[pos] = v;
                next[i] += 1;
            }
        }
        CscMatrix {
            rows: self.cols,
            cols: self.rows,
            col_ptr,
            row_idx,
            values,
        }
    }

    /// Infinity norm of each column.
    pub fn col_inf_norms(&self, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.cols);
        for j in 0..self.cols {
            let (_, vals) = self.col(j);
            out[j] = vals.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        }
    }

    /// Infinity norm of each row.
    pub fn row_inf_norms(&self, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.rows);
        out.fill(0.0);
        for (&i, &v) in self.row_idx.iter().zip(&self.values) {
            out[i] = out[i].max(v.abs());
        }
    }

    /// Column norms of the symmetric matrix whose upper triangle this is.
    pub fn symm_col_inf_norms(&self, out: &mut [f64]) {
        debug_assert_eq!(self.rows, self.cols);
        out.fill(0.0);
        for j in 0..self.cols {
            let (rows, vals) = self.col(j);
            for (&i, &v) in rows.iter().zip(vals) {
                out[j] = out[j].max(v.abs());
                out[i] = out[i].max(v.abs());
            }
        }
    }

    /// A ← diag(r) · A · diag(c)
    pub fn scale(&mut self, row_scale: &[f64], col_scale: &[f64]) {
        debug_assert_eq!(row_scale.len(), self.rows);
        debug_assert_eq!(col_scale.len(), self.cols);
        for j in 0..self.cols {
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                self.values[p] *= row_scale[self.row_idx[p]] * col_scale[j];
            }
        }
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.cols).flat_map(move |j| {
            let (rows, vals) = self.col(j);
            rows.iter().zip(vals).map(move |(&i, &v)| (i, j, v))
        })
    }
}

/// ‖v‖∞
pub fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_roundtrip_and_duplicates() {
        let m = CscMatrix::from_triplets(3, 2, &[(0, 0, 1.0), (2, 1, 3.0), (0, 0, 2.0), (1, 1, -1.0)]);
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.get(0, 0), 3.0);
        assert_eq!(m.get(1, 1), -1.0);
        assert_eq!(m.get(2, 1), 3.0);
        assert_eq!(m.get(2, 0), 0.0);
    }

    #[test]
    fn matvec_and_transpose() {
        // [[1, 2], [0, 3], [4, 0]]
        let m = CscMatrix::from_triplets(3, 2, &[(0, 0, 1.0), (0, 1, 2.0), (1, 1, 3.0), (2, 0, 4.0)]);
        let mut y = vec![0.0; 3];
        m.mul_into(&[1.0, -1.0], &mut y);
        assert_eq!(y, vec![-1.0, -3.0, 4.0]);

        let mut yt = vec![0.0; 2];
        m.t_mul_into(&[1.0, 1.0, 1.0], &mut yt);
        assert_eq!(yt, vec![5.0, 5.0]);

        let t = m.transpose();
        assert_eq!(t.get(0, 0), 1.0);
        assert_eq!(t.get(1, 0), 2.0);
        assert_eq!(t.get(0, 2), 4.0);
    }

    #[test]
    fn symmetric_matvec_from_upper() {
        // Full matrix [[2, 1], [1, 4]] stored as upper.
        let m = CscMatrix::from_triplets(2, 2, &[(0, 0, 2.0), (0, 1, 1.0), (1, 1, 4.0)]);
        let mut y = vec![0.0; 2];
        m.symm_mul_into(&[1.0, 2.0], &mut y);
        assert_eq!(y, vec![4.0, 9.0]);
    }
}
