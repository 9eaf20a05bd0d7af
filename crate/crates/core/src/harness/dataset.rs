//! Binary dataset files.
//!
//! Layout, little-endian: magic `NOD1`, `u32` q_m, q_u, N, the two column
//! means as `f64`, the parameter and state matrices column-major, and a
//! SHA-256 digest of everything before it.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use sha2::{Digest, Sha256};

use crate::error::{check_len, Error, Result};

const MAGIC: &[u8; 4] = b"NOD1";
const DIGEST_LEN: usize = 32;

/// Paired parameter/state samples, one per column.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    m: DMatrix<f64>,
    u: DMatrix<f64>,
}

impl Dataset {
    pub fn new(m: DMatrix<f64>, u: DMatrix<f64>) -> Result<Self> {
        check_len(u.ncols(), m.ncols(), "dataset sample count")?;
        Ok(Self { m, u })
    }

    pub fn from_columns(ms: &[DVector<f64>], us: &[DVector<f64>]) -> Result<Self> {
        check_len(us.len(), ms.len(), "dataset sample count")?;
        if ms.is_empty() {
            return Err(Error::invalid("dataset has no samples"));
        }
        Self::new(DMatrix::from_columns(ms), DMatrix::from_columns(us))
    }

    pub fn len(&self) -> usize {
        self.m.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn q_m(&self) -> usize {
        self.m.nrows()
    }

    pub fn q_u(&self) -> usize {
        self.u.nrows()
    }

    pub fn m(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn u(&self) -> &DMatrix<f64> {
        &self.u
    }

    pub fn m_mean(&self) -> DVector<f64> {
        self.m.column_mean()
    }

    pub fn u_mean(&self) -> DVector<f64> {
        self.u.column_mean()
    }

    pub fn m_columns(&self) -> Vec<DVector<f64>> {
        self.m.column_iter().map(|c| c.clone_owned()).collect()
    }

    pub fn u_columns(&self) -> Vec<DVector<f64>> {
        self.u.column_iter().map(|c| c.clone_owned()).collect()
    }

    /// The first `n` samples.
    pub fn head(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.len() {
            return Err(Error::invalid(format!("cannot take {n} of {} samples", self.len())));
        }
        Self::new(self.m.columns(0, n).clone_owned(), self.u.columns(0, n).clone_owned())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let floats = self.q_m() + self.q_u() + self.m.len() + self.u.len();
        let mut out = Vec::with_capacity(16 + 8 * floats + DIGEST_LEN);
        out.extend_from_slice(MAGIC);
        for n in [self.q_m(), self.q_u(), self.len()] {
            out.extend_from_slice(&(n as u32).to_le_bytes());
        }
        let m_mean = self.m_mean();
        let u_mean = self.u_mean();
        for block in [m_mean.as_slice(), u_mean.as_slice(), self.m.as_slice(), self.u.as_slice()] {
            for x in block {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        let digest = Sha256::digest(&out);
        out.extend_from_slice(&digest);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 16 + DIGEST_LEN || &bytes[..4] != MAGIC {
            return Err(Error::invalid("not a dataset file"));
        }
        let (body, digest) = bytes.split_at(bytes.len() - DIGEST_LEN);
        if Sha256::digest(body).as_slice() != digest {
            return Err(Error::Checksum("dataset file".into()));
        }
        let word = |k: usize| u32::from_le_bytes(body[4 + 4 * k..8 + 4 * k].try_into().unwrap()) as usize;
        let (q_m, q_u, n) = (word(0), word(1), word(2));
        let floats = q_m + q_u + n * (q_m + q_u);
        check_len(body.len(), 16 + 8 * floats, "dataset file length")?;
        let mut values = body[16..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()));
        let mut take = |k: usize| -> Vec<f64> { values.by_ref().take(k).collect() };
        let _m_mean = take(q_m);
        let _u_mean = take(q_u);
        let m = DMatrix::from_vec(q_m, n, take(q_m * n));
        let u = DMatrix::from_vec(q_u, n, take(q_u * n));
        Self::new(m, u)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}
