//! Centering, singular value decomposition and truncated projectors.
//!
//! The decomposition goes through the smaller Gram matrix (`AᵀA` or `AAᵀ`),
//! diagonalized with cyclic Jacobi rotations.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{check_finite, check_len, Error, Result};

/// Thin singular value decomposition restricted to the numerical rank.
#[derive(Debug, Clone, PartialEq)]
pub struct Svd {
    /// Left singular vectors, `q × rank`.
    pub u: DMatrix<f64>,
    /// Right singular vectors, `N × rank`.
    pub v: DMatrix<f64>,
    /// All `min(q, N)` singular values, nonincreasing.
    pub singular_values: DVector<f64>,
    pub rank: usize,
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi sweeps.
/// Eigenvalues come back in decreasing order with matching eigenvector columns.
pub fn symmetric_eigen_jacobi(a: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "matrix must be square");
    // row-major copy
    let mut m: Vec<f64> = (0..n * n).map(|k| a[(k / n, k % n)]).collect();
    // eigenvectors stored by column, column-major
    let mut v = DMatrix::<f64>::identity(n, n);
    let scale: f64 = m.iter().map(|x| x * x).sum::<f64>();
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += m[p * n + q] * m[p * n + q];
            }
        }
        if off <= 1e-34 * scale || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (kp, kq) = (m[k * n + p], m[k * n + q]);
                    m[k * n + p] = c * kp - s * kq;
                    m[k * n + q] = s * kp + c * kq;
                }
                for k in 0..n {
                    let (pk, qk) = (m[p * n + k], m[q * n + k]);
                    m[p * n + k] = c * pk - s * qk;
                    m[q * n + k] = s * pk + c * qk;
                }
                m[p * n + q] = 0.0;
                m[q * n + p] = 0.0;
                let (mut cp, mut cq) = v.columns_range_pair_mut(p, q);
                for k in 0..n {
                    let (kp, kq) = (cp[k], cq[k]);
                    cp[k] = c * kp - s * kq;
                    cq[k] = s * kp + c * kq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[j * n + j].total_cmp(&m[i * n + i]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| m[i * n + i]));
    let vectors = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    (values, vectors)
}

/// Modified Gram–Schmidt applied twice to the columns, in place.
fn reorthonormalize(u: &mut DMatrix<f64>) {
    for _ in 0..2 {
        for j in 0..u.ncols() {
            for i in 0..j {
                let d = u.column(i).dot(&u.column(j));
                let ci = u.column(i).clone_owned();
                u.column_mut(j).axpy(-d, &ci, 1.0);
            }
            let nrm = u.column(j).norm();
            u.column_mut(j).unscale_mut(nrm);
        }
    }
}

/// Flip each singular pair so the largest-magnitude entry of `u_j` is positive.
fn fix_signs(u: &mut DMatrix<f64>, v: &mut DMatrix<f64>) {
    for j in 0..u.ncols() {
        let col = u.column(j);
        let imax = col.iamax();
        if col[imax] < 0.0 {
            u.column_mut(j).neg_mut();
            v.column_mut(j).neg_mut();
        }
    }
}

pub fn compute_svd(a: &DMatrix<f64>) -> Result<Svd> {
    check_finite(a.as_slice(), "data matrix")?;
    let (q, n) = a.shape();
    let k = q.min(n);
    let tall = n <= q;
    let gram = if tall { a.tr_mul(a) } else { a * a.transpose() };
    let (lambda, vecs) = symmetric_eigen_jacobi(&gram);
    let lmax = lambda.iter().copied().fold(0.0, f64::max);
    let cutoff = lmax * 1e-13 * (k.max(1) as f64);
    let rank = lambda.iter().take_while(|&&l| l > cutoff && l > 0.0).count();
    // values past the numerical rank are round-off and reported as zero
    let singular_values = DVector::from_fn(lambda.len(), |j, _| if j < rank { lambda[j].sqrt() } else { 0.0 });
    let (mut u, mut v) = if tall {
        let v = vecs.columns(0, rank).clone_owned();
        let mut u = a * &v;
        for j in 0..rank {
            u.column_mut(j).unscale_mut(singular_values[j]);
        }
        (u, v)
    } else {
        let u = vecs.columns(0, rank).clone_owned();
        let mut v = a.tr_mul(&u);
        for j in 0..rank {
            v.column_mut(j).unscale_mut(singular_values[j]);
        }
        (u, v)
    };
    reorthonormalize(&mut u);
    reorthonormalize(&mut v);
    fix_signs(&mut u, &mut v);
    Ok(Svd {
        u,
        v,
        singular_values: singular_values.rows(0, k).clone_owned(),
        rank,
    })
}

/// Column mean and the centered copy of a data matrix.
pub fn center(data: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>) {
    let n = data.ncols().max(1) as f64;
    let mean = data.column_sum() / n;
    let mut centered = data.clone();
    for mut col in centered.column_iter_mut() {
        col -= &mean;
    }
    (centered, mean)
}

/// `(1/N) ‖A − U Uᵀ A‖²_F` for a basis with orthonormal columns.
pub fn reconstruction_error(basis: &DMatrix<f64>, centered: &DMatrix<f64>) -> f64 {
    let coeffs = basis.tr_mul(centered);
    let residual = centered - basis * coeffs;
    residual.norm_squared() / centered.ncols().max(1) as f64
}

/// Affine projector onto a truncated singular basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Projector {
    basis: DMatrix<f64>,
    mean: DVector<f64>,
    singular_values: DVector<f64>,
}

impl Projector {
    /// First `r` left singular vectors of `svd` around `mean`.
    pub fn truncate(svd: &Svd, mean: DVector<f64>, r: usize) -> Result<Self> {
        if r == 0 || r > svd.rank {
            return Err(Error::invalid(format!(
                "truncation rank {r} is outside 1..={}",
                svd.rank
            )));
        }
        check_len(mean.len(), svd.u.nrows(), "projector mean")?;
        Ok(Self {
            basis: svd.u.columns(0, r).clone_owned(),
            mean,
            singular_values: svd.singular_values.clone(),
        })
    }

    /// Center the raw data (one sample per column), decompose, truncate.
    pub fn from_data(data: &DMatrix<f64>, r: usize) -> Result<Self> {
        let (centered, mean) = center(data);
        Self::truncate(&compute_svd(&centered)?, mean, r)
    }

    pub fn from_parts(basis: DMatrix<f64>, mean: DVector<f64>, singular_values: DVector<f64>) -> Result<Self> {
        check_len(mean.len(), basis.nrows(), "projector mean")?;
        check_finite(basis.as_slice(), "projector basis")?;
        check_finite(mean.as_slice(), "projector mean")?;
        Ok(Self {
            basis,
            mean,
            singular_values,
        })
    }

    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn singular_values(&self) -> &DVector<f64> {
        &self.singular_values
    }

    /// `Uᵀ(x − mean)`
    pub fn encode(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_len(x.len(), self.dim(), "encode input")?;
        Ok(self.basis.tr_mul(&(x - &self.mean)))
    }

    /// `U c + mean`
    pub fn decode(&self, c: &DVector<f64>) -> Result<DVector<f64>> {
        check_len(c.len(), self.rank(), "decode input")?;
        Ok(&self.basis * c + &self.mean)
    }

    /// `λ_j / λ_1` over the nonzero singular values, empty when the spectrum is zero.
    pub fn normalized_spectrum(&self) -> Vec<f64> {
        let s1 = self.singular_values.iter().copied().fold(0.0, f64::max);
        if s1 == 0.0 {
            return Vec::new();
        }
        self.singular_values
            .iter()
            .take_while(|&&s| s > 0.0)
            .map(|s| s / s1)
            .collect()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "proj {} {}", self.dim(), self.rank());
        for x in self.mean.iter().chain(self.basis.iter()).chain(self.singular_values.iter()) {
            let _ = writeln!(s, "{x:e}");
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| Error::parse(1, "empty projector file"))?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        let (q, r) = match parts.as_slice() {
            ["proj", q, r] => (
                q.parse::<usize>().map_err(|_| Error::parse(1, "invalid dimension"))?,
                r.parse::<usize>().map_err(|_| Error::parse(1, "invalid rank"))?,
            ),
            _ => return Err(Error::parse(1, "expected `proj <q> <r>` header")),
        };
        let mut values = Vec::new();
        for (i, line) in lines {
            let x: f64 = line
                .trim()
                .parse()
                .map_err(|_| Error::parse(i + 1, format!("invalid number `{}`", line.trim())))?;
            values.push(x);
        }
        if values.len() < q * (r + 1) {
            return Err(Error::DimensionMismatch {
                expected: q * (r + 1),
                found: values.len(),
                context: "projector values",
            });
        }
        let mean = DVector::from_column_slice(&values[..q]);
        let basis = DMatrix::from_column_slice(q, r, &values[q..q * (r + 1)]);
        let sv = DVector::from_column_slice(&values[q * (r + 1)..]);
        Self::from_parts(basis, mean, sv)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

/// Indices (1-based) whose normalized singular values are nearest to `0.1` and `0.01`.
pub fn spectrum_markers(normalized: &[f64]) -> [Option<usize>; 2] {
    [0.1, 0.01].map(|target| {
        normalized
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - target).abs().total_cmp(&(b.1 - target).abs()))
            .map(|(i, _)| i + 1)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn diagonal_matrix_spectrum() {
        let a = dmatrix![3.0, 0.0, 0.0; 0.0, 2.0, 0.0; 0.0, 0.0, 1.0; 0.0, 0.0, 0.0];
        let svd = compute_svd(&a).unwrap();
        for (s, e) in svd.singular_values.iter().zip([3.0, 2.0, 1.0]) {
            assert!((s - e).abs() < 1e-14);
        }
        assert_eq!(svd.rank, 3);
    }

    #[test]
    fn spectrum_stops_at_numerical_rank() {
        // rank 2 after centering
        let a = dmatrix![1.0, 2.0, 3.0, 5.0; 0.0, 1.0, 0.0, 1.0; 1.0, 3.0, 3.0, 6.0];
        let p = Projector::from_data(&a, 1).unwrap();
        assert_eq!(p.singular_values().len(), 3);
        assert_eq!(p.singular_values()[2], 0.0);
        let spectrum = p.normalized_spectrum();
        assert_eq!(spectrum.len(), 2);
        assert_eq!(spectrum[0], 1.0);
        assert_eq!(spectrum_markers(&spectrum)[1], Some(2));
    }

    #[test]
    fn zero_matrix_succeeds() {
        let svd = compute_svd(&DMatrix::zeros(5, 3)).unwrap();
        assert_eq!(svd.rank, 0);
        assert!(svd.singular_values.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn text_round_trip() {
        let a = dmatrix![1.0, 2.0, 0.5; -1.0, 0.25, 3.0; 0.0, 1.0, 1.0; 2.0, -2.0, 0.0];
        let p = Projector::from_data(&a, 2).unwrap();
        assert_eq!(Projector::from_text(&p.to_text()).unwrap(), p);
        assert!(Projector::from_text("proj 4 2\n1\n").is_err());
    }

    #[test]
    fn markers() {
        assert_eq!(spectrum_markers(&[1.0, 0.3, 0.09, 0.02, 0.011]), [Some(3), Some(5)]);
        assert_eq!(spectrum_markers(&[]), [None, None]);
    }
}
