//! Compressed-sparse-row matrices with a fixed, mesh-derived sparsity pattern.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::mesh::Mesh;

/// Row pointers and sorted column indices shared by all matrices on a mesh.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsrPattern {
    pub(crate) n: usize,
    pub(crate) row_ptr: Vec<usize>,
    pub(crate) col_idx: Vec<usize>,
}

impl CsrPattern {
    /// Node adjacency through shared elements, diagonal included.
    pub fn from_mesh(mesh: &Mesh) -> Self {
        let n = mesh.node_count();
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
        for el in mesh.elements() {
            for &a in el {
                rows[a].extend_from_slice(el);
            }
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for (i, r) in rows.iter_mut().enumerate() {
            r.push(i);
            r.sort_unstable();
            r.dedup();
            col_idx.extend_from_slice(r);
            row_ptr.push(col_idx.len());
        }
        CsrPattern {
            n,
            row_ptr,
            col_idx,
        }
    }

    fn position(&self, i: usize, j: usize) -> Option<usize> {
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.col_idx[lo..hi].binary_search(&j).ok().map(|k| lo + k)
    }
}

/// Square CSR matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pattern: Arc<CsrPattern>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn zeros(pattern: Arc<CsrPattern>) -> Self {
        let nnz = pattern.col_idx.len();
        CsrMatrix {
            pattern,
            values: vec![0.0; nnz],
        }
    }

    pub fn identity(n: usize) -> Self {
        let pattern = CsrPattern {
            n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
        };
        CsrMatrix {
            pattern: Arc::new(pattern),
            values: vec![1.0; n],
        }
    }

    /// Build from a dense matrix, keeping exact nonzeros.
    pub fn from_dense(a: &DMatrix<f64>) -> Self {
        assert_eq!(a.nrows(), a.ncols(), "square matrix required");
        let n = a.nrows();
        let mut row_ptr = vec![0];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if a[(i, j)] != 0.0 || i == j {
                    col_idx.push(j);
                    values.push(a[(i, j)]);
                }
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix {
            pattern: Arc::new(CsrPattern {
                n,
                row_ptr,
                col_idx,
            }),
            values,
        }
    }

    pub fn nrows(&self) -> usize {
        self.pattern.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn pattern(&self) -> &Arc<CsrPattern> {
        &self.pattern
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Iterate `(col, value)` over row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (lo, hi) = (self.pattern.row_ptr[i], self.pattern.row_ptr[i + 1]);
        self.pattern.col_idx[lo..hi]
            .iter()
            .copied()
            .zip(self.values[lo..hi].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.pattern.position(i, j).map_or(0.0, |k| self.values[k])
    }

    /// Add `v` at `(i, j)`. Panics when the entry is outside the pattern.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self
            .pattern
            .position(i, j)
            .unwrap_or_else(|| panic!("entry ({i}, {j}) outside sparsity pattern"));
        self.values[k] += v;
    }

    pub fn mul_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut y = DVector::zeros(self.nrows());
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &DVector<f64>, y: &mut DVector<f64>) {
        let p = &self.pattern;
        for i in 0..p.n {
            let mut s = 0.0;
            for k in p.row_ptr[i]..p.row_ptr[i + 1] {
                s += self.values[k] * x[p.col_idx[k]];
            }
            y[i] = s;
        }
    }

    /// `xᵀ A x`.
    pub fn quadratic_form(&self, x: &DVector<f64>) -> f64 {
        x.dot(&self.mul_vec(x))
    }

    pub fn diagonal(&self) -> DVector<f64> {
        DVector::from_iterator(self.nrows(), (0..self.nrows()).map(|i| self.get(i, i)))
    }

    pub fn row_sums(&self) -> DVector<f64> {
        DVector::from_iterator(self.nrows(), (0..self.nrows()).map(|i| self.row(i).map(|(_, v)| v).sum()))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max |A_ij - A_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.nrows() {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn scale(&mut self, s: f64) {
        self.values.iter_mut().for_each(|v| *v *= s);
    }

    /// `self += s · other`; patterns must match.
    pub fn add_scaled(&mut self, s: f64, other: &CsrMatrix) {
        assert!(
            Arc::ptr_eq(&self.pattern, &other.pattern) || *self.pattern == *other.pattern,
            "sparsity patterns differ"
        );
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += s * b;
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.nrows();
        let mut d = DMatrix::zeros(n, n);
        for i in 0..n {
            for (j, v) in self.row(i) {
                d[(i, j)] += v;
            }
        }
        d
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Symmetric elimination of the constrained dofs.
    ///
    /// Rows and columns of `dofs` are replaced by identity, `rhs` at those dofs
    /// is set to `values`, and the known column contributions are moved to the
    /// free rows of `rhs`.
    pub fn constrain(&self, rhs: &mut DVector<f64>, dofs: &[usize], values: &[f64]) -> CsrMatrix {
        assert_eq!(dofs.len(), values.len());
        let n = self.nrows();
        let mut fixed: Vec<Option<f64>> = vec![None; n];
        for (&d, &v) in dofs.iter().zip(values) {
            fixed[d] = Some(v);
        }
        let mut out = self.clone();
        let p = &self.pattern;
        for i in 0..n {
            for k in p.row_ptr[i]..p.row_ptr[i + 1] {
                let j = p.col_idx[k];
                match (fixed[i], fixed[j]) {
                    (Some(_), _) => out.values[k] = if i == j { 1.0 } else { 0.0 },
                    (None, Some(vj)) => {
                        rhs[i] -= self.values[k] * vj;
                        out.values[k] = 0.0;
                    }
                    (None, None) => {}
                }
            }
        }
        for (&d, &v) in dofs.iter().zip(values) {
            rhs[d] = v;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn dense_round_trip_and_product() {
        let a = dmatrix![4.0, 1.0, 0.0; 1.0, 3.0, -1.0; 0.0, -1.0, 2.0];
        let s = CsrMatrix::from_dense(&a);
        assert_eq!(s.to_dense(), a);
        let x = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        assert_eq!(s.mul_vec(&x), &a * &x);
        assert_eq!(s.asymmetry(), 0.0);
    }

    #[test]
    fn constrain_keeps_symmetry_and_solution() {
        let a = dmatrix![4.0, 1.0, 0.0; 1.0, 3.0, -1.0; 0.0, -1.0, 2.0];
        let x = DVector::from_vec(vec![0.5, -1.0, 2.0]);
        let mut b = &a * &x;
        let s = CsrMatrix::from_dense(&a).constrain(&mut b, &[2], &[2.0]);
        assert_eq!(s.asymmetry(), 0.0);
        let sol = s.to_dense().lu().solve(&b).unwrap();
        assert!((sol - x).amax() < 1e-14);
    }
}
