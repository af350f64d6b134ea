use std::sync::Arc;

/// Row-compressed sparsity pattern. Column indices are strictly increasing
/// within each row.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pattern {
    pub(crate) row_ptr: Vec<usize>,
    pub(crate) col_idx: Vec<usize>,
}

impl Pattern {
    /// Build from per-row column lists (sorted and deduplicated here).
    pub fn from_rows(rows: Vec<Vec<usize>>) -> Self {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for mut r in rows {
            r.sort_unstable();
            r.dedup();
            col_idx.extend(r);
            row_ptr.push(col_idx.len());
        }
        Self { row_ptr, col_idx }
    }

    pub fn n(&self) -> usize {
        self.row_ptr.len() - 1
    }

    /// Position of entry `(i, j)` in the value array.
    pub fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let row = &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]];
        row.binary_search(&j).ok().map(|k| self.row_ptr[i] + k)
    }
}

/// Square sparse matrix in compressed row layout.
#[derive(Clone, Debug)]
pub struct SparseOperator {
    pattern: Arc<Pattern>,
    values: Vec<f64>,
}

impl SparseOperator {
    pub fn zeros(pattern: Arc<Pattern>) -> Self {
        let nnz = pattern.col_idx.len();
        Self { pattern, values: vec![0.0; nnz] }
    }

    /// Sum duplicate `(i, j, v)` entries into a fresh matrix.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut rows = vec![Vec::new(); n];
        for &(i, j, _) in triplets {
            rows[i].push(j);
        }
        let pattern = Arc::new(Pattern::from_rows(rows));
        let mut m = Self::zeros(pattern);
        for &(i, j, v) in triplets {
            let s = m.pattern.slot(i, j).expect("entry in pattern");
            m.values[s] += v;
        }
        m
    }

    pub fn n(&self) -> usize {
        self.pattern.n()
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn pattern(&self) -> &Arc<Pattern> {
        &self.pattern
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.pattern.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.pattern.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.pattern.slot(i, j).map_or(0.0, |s| self.values[s])
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n()];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        let rp = &self.pattern.row_ptr;
        let ci = &self.pattern.col_idx;
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for s in rp[i]..rp[i + 1] {
                acc += self.values[s] * x[ci[s]];
            }
            *yi = acc;
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n()).map(|i| self.get(i, i)).collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        let rp = &self.pattern.row_ptr;
        (0..self.n()).map(|i| self.values[rp[i]..rp[i + 1]].iter().sum()).collect()
    }

    /// `xᵀ A x`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        dot(x, &self.mul_vec(x))
    }

    /// `xᵀ A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        dot(x, &self.mul_vec(y))
    }

    /// Largest `|a_ij - a_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let rp = &self.pattern.row_ptr;
        let ci = &self.pattern.col_idx;
        let mut worst: f64 = 0.0;
        for i in 0..self.n() {
            for s in rp[i]..rp[i + 1] {
                worst = worst.max((self.values[s] - self.get(ci[s], i)).abs());
            }
        }
        worst
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.asymmetry() <= tol
    }

    /// `self + s * other`; both must share one pattern.
    pub fn add_scaled(&self, other: &SparseOperator, s: f64) -> SparseOperator {
        assert!(
            Arc::ptr_eq(&self.pattern, &other.pattern) || self.pattern == other.pattern,
            "operators must share a sparsity pattern"
        );
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + s * b).collect();
        Self { pattern: self.pattern.clone(), values }
    }

    /// `A · diag(d)`.
    pub fn scale_columns(&self, d: &[f64]) -> SparseOperator {
        let ci = &self.pattern.col_idx;
        let values = self.values.iter().zip(ci).map(|(v, &j)| v * d[j]).collect();
        Self { pattern: self.pattern.clone(), values }
    }

    /// `diag(d) · A`.
    pub fn scale_rows(&self, d: &[f64]) -> SparseOperator {
        let rp = &self.pattern.row_ptr;
        let mut values = self.values.clone();
        for i in 0..self.n() {
            for v in &mut values[rp[i]..rp[i + 1]] {
                *v *= d[i];
            }
        }
        Self { pattern: self.pattern.clone(), values }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.n();
        let rp = &self.pattern.row_ptr;
        let ci = &self.pattern.col_idx;
        let mut out = vec![vec![0.0; n]; n];
        for (i, row) in out.iter_mut().enumerate() {
            for s in rp[i]..rp[i + 1] {
                row[ci[s]] += self.values[s];
            }
        }
        out
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_merge_and_sort() {
        let m = SparseOperator::from_triplets(3, &[(0, 2, 1.0), (0, 0, 2.0), (0, 2, 0.5), (2, 1, -1.0)]);
        assert_eq!(m.row_ptr(), &[0, 2, 2, 3]);
        assert_eq!(m.col_idx(), &[0, 2, 1]);
        assert_eq!(m.get(0, 2), 1.5);
        assert_eq!(m.mul_vec(&[1.0, 1.0, 1.0]), vec![3.5, 0.0, -1.0]);
        assert!(!m.is_symmetric(1e-12));
    }

    #[test]
    fn column_and_row_scaling() {
        let m = SparseOperator::from_triplets(2, &[(0, 0, 1.0), (0, 1, 2.0), (1, 0, 3.0), (1, 1, 4.0)]);
        assert_eq!(m.scale_columns(&[10.0, 1.0]).to_dense(), vec![vec![10.0, 2.0], vec![30.0, 4.0]]);
        assert_eq!(m.scale_rows(&[10.0, 1.0]).to_dense(), vec![vec![10.0, 20.0], vec![3.0, 4.0]]);
    }
}
