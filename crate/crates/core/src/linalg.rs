//! Dense symmetric linear algebra for the `p × p` normal equations.
//!
//! The noisy Gram matrix is symmetric but frequently indefinite, so the
//! solver uses a cyclic Jacobi eigendecomposition: it is valid for any
//! symmetric matrix and yields the singular values (`|λ|`) needed for the
//! conditioning diagnostics as a by-product.
use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use crate::math::sqrt;
use crate::{Error, Result};

/// Square row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_row_major(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, got: data.len() });
        }
        Ok(Self { n, data })
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|v| *v *= s);
    }

    /// `self += x xᵀ`.
    pub fn add_outer(&mut self, x: &[f64]) {
        let n = self.n;
        for i in 0..n {
            let xi = x[i];
            let row = &mut self.data[i * n..(i + 1) * n];
            for (r, &xj) in row.iter_mut().zip(x) {
                *r += xi * xj;
            }
        }
    }

    pub fn add_assign(&mut self, other: &[f64]) {
        self.data.iter_mut().zip(other).for_each(|(a, b)| *a += b);
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.data[i * self.n..(i + 1) * self.n].iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self[(i, j)].to_bits() == self[(j, i)].to_bits()))
    }

    fn off_diagonal_sq(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    s += self[(i, j)] * self[(i, j)];
                }
            }
        }
        s
    }

    fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }
}

impl Index<(usize, usize)> for SquareMatrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for SquareMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

/// `A = V diag(λ) Vᵀ`; column `k` of `vectors` pairs with `values[k]`.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: SquareMatrix,
}

const MAX_SWEEPS: usize = 100;

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Only the upper
/// triangle is read.
pub fn symmetric_eigen(a: &SquareMatrix) -> Result<SymmetricEigen> {
    let n = a.dim();
    let mut m = a.clone();
    for i in 0..n {
        for j in 0..i {
            m[(i, j)] = m[(j, i)];
        }
    }
    if m.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("gram matrix"));
    }
    let mut v = SquareMatrix::identity(n);
    let total = m.frobenius_sq();
    for _ in 0..MAX_SWEEPS {
        if m.off_diagonal_sq() <= f64::EPSILON * f64::EPSILON * total {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + sqrt(theta * theta + 1.0));
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let values = (0..n).map(|i| m[(i, i)]).collect();
    Ok(SymmetricEigen { values, vectors: v })
}

/// Solution of a symmetric system with its extreme singular values.
#[derive(Debug, Clone)]
pub struct SymmetricSolve {
    pub x: Vec<f64>,
    pub min_singular: f64,
    pub max_singular: f64,
}

/// Solves `A x = b` for symmetric (possibly indefinite) `A`.
///
/// Fails with [`Error::IllConditioned`] when `A` is singular to working
/// precision, i.e. `min |λ| ≤ n · ε_mach · max |λ|`.
pub fn solve_symmetric(a: &SquareMatrix, b: &[f64]) -> Result<SymmetricSolve> {
    let n = a.dim();
    if b.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: b.len() });
    }
    let eig = symmetric_eigen(a)?;
    let max_singular = eig.values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let min_singular = eig.values.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
    if n == 0 {
        return Ok(SymmetricSolve { x: Vec::new(), min_singular: 0.0, max_singular: 0.0 });
    }
    if !(min_singular > n as f64 * f64::EPSILON * max_singular) {
        return Err(Error::IllConditioned { min_singular, max_singular });
    }
    let vt = &eig.vectors;
    // x = V Λ⁻¹ Vᵀ b
    let coeffs: Vec<f64> = (0..n)
        .map(|k| (0..n).map(|i| vt[(i, k)] * b[i]).sum::<f64>() / eig.values[k])
        .collect();
    let x = (0..n).map(|i| (0..n).map(|k| vt[(i, k)] * coeffs[k]).sum()).collect();
    Ok(SymmetricSolve { x, min_singular, max_singular })
}
