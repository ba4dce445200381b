//! Small dense symmetric linear algebra: symmetric matrices, Cholesky
//! factorization, and the shrunk inverse used by the discriminant learners.
//!
//! Matrices here stay small (a few thousand rows at most), so everything is
//! plain dense f64 with no blocking.

use crate::error::{Error, Result};

/// Dense symmetric matrix, f64 storage (streaming statistics accumulate in
/// 64-bit even though embeddings are 32-bit).
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>, // row-major dim×dim
}

impl SymMatrix {
    /// Symmetry tolerance: |A[i][j] - A[j][i]| <= 1e-6·max(1, |A[i][j]|).
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::Contract(format!(
                "matrix payload length {} != {dim}^2",
                data.len()
            )));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::Data("non-finite value in matrix".into()));
        }
        for i in 0..dim {
            for j in (i + 1)..dim {
                let a = data[i * dim + j];
                let b = data[j * dim + i];
                if (a - b).abs() > 1e-6 * a.abs().max(1.0) {
                    return Err(Error::Contract(format!(
                        "matrix not symmetric at ({i},{j}): {a} vs {b}"
                    )));
                }
            }
        }
        Ok(SymMatrix { dim, data })
    }

    pub fn zeros(dim: usize) -> Self {
        SymMatrix { dim, data: vec![0.0; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    /// Set both (i, j) and (j, i).
    #[inline]
    pub fn set_sym(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
        self.data[j * self.dim + i] = v;
    }

    /// Rank-1 accumulation: self += scale · v vᵀ.
    pub fn add_outer(&mut self, v: &[f64], scale: f64) {
        debug_assert_eq!(v.len(), self.dim);
        for i in 0..self.dim {
            let vi = scale * v[i];
            let row = &mut self.data[i * self.dim..(i + 1) * self.dim];
            for (slot, &vj) in row.iter_mut().zip(v) {
                *slot += vi * vj;
            }
        }
    }

    pub fn scale(&mut self, s: f64) {
        for v in &mut self.data {
            *v *= s;
        }
    }

    pub fn mat_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.dim);
        (0..self.dim)
            .map(|i| {
                self.data[i * self.dim..(i + 1) * self.dim]
                    .iter()
                    .zip(x)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    /// Lower-triangular Cholesky factor L with A = L Lᵀ.
    pub fn cholesky(&self) -> Result<Cholesky> {
        let n = self.dim;
        let mut l = vec![0.0f64; n * n];
        for j in 0..n {
            let mut diag = self.get(j, j);
            for k in 0..j {
                diag -= l[j * n + k] * l[j * n + k];
            }
            if diag <= 0.0 || !diag.is_finite() {
                return Err(Error::Numeric {
                    msg: format!("non-positive pivot {diag}"),
                    pivot: j,
                });
            }
            let ljj = diag.sqrt();
            l[j * n + j] = ljj;
            for i in (j + 1)..n {
                let mut v = self.get(i, j);
                for k in 0..j {
                    v -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = v / ljj;
            }
        }
        Ok(Cholesky { dim: n, l })
    }
}

/// Cholesky factorization of an SPD matrix.
#[derive(Debug)]
pub struct Cholesky {
    dim: usize,
    l: Vec<f64>, // lower triangular, row-major
}

impl Cholesky {
    /// log det A = 2 Σ log L[i][i].
    pub fn log_det(&self) -> f64 {
        (0..self.dim)
            .map(|i| self.l[i * self.dim + i].ln())
            .sum::<f64>()
            * 2.0
    }

    /// Solve A x = b in place.
    pub fn solve(&self, b: &mut [f64]) {
        let n = self.dim;
        debug_assert_eq!(b.len(), n);
        // forward: L y = b
        for i in 0..n {
            let mut v = b[i];
            for k in 0..i {
                v -= self.l[i * n + k] * b[k];
            }
            b[i] = v / self.l[i * n + i];
        }
        // backward: Lᵀ x = y
        for i in (0..n).rev() {
            let mut v = b[i];
            for k in (i + 1)..n {
                v -= self.l[k * n + i] * b[k];
            }
            b[i] = v / self.l[i * n + i];
        }
    }

    /// Full inverse A⁻¹, symmetrized exactly.
    pub fn inverse(&self) -> SymMatrix {
        let n = self.dim;
        let mut inv = vec![0.0f64; n * n];
        let mut col = vec![0.0f64; n];
        for j in 0..n {
            col.iter_mut().for_each(|v| *v = 0.0);
            col[j] = 1.0;
            self.solve(&mut col);
            for i in 0..n {
                inv[i * n + j] = col[i];
            }
        }
        // enforce exact symmetry against round-off
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (inv[i * n + j] + inv[j * n + i]);
                inv[i * n + j] = v;
                inv[j * n + i] = v;
            }
        }
        SymMatrix { dim: n, data: inv }
    }
}

/// Shrunk matrix (1−ε)Σ + εI.
pub fn shrunk(sigma: &SymMatrix, epsilon: f64) -> Result<SymMatrix> {
    if epsilon <= 0.0 {
        return Err(Error::Contract(format!("epsilon must be positive, got {epsilon}")));
    }
    let n = sigma.dim;
    let mut m = sigma.clone();
    m.scale(1.0 - epsilon);
    for i in 0..n {
        m.data[i * n + i] += epsilon;
    }
    Ok(m)
}

/// Λ = [(1−ε)Σ + εI]⁻¹ via Cholesky of the shrunk matrix.
pub fn shrunk_inverse(sigma: &SymMatrix, epsilon: f64) -> Result<SymMatrix> {
    Ok(shrunk(sigma, epsilon)?.cholesky()?.inverse())
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn l2_dist_sq(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
