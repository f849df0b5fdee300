//! Minimal 2×2 real matrix arithmetic (products, spectral radius, operator
//! norm): all the linear algebra the scalar-mode analysis needs.

use crate::real::{r64, Real};

/// Row-major 2×2 matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat2<R> {
    pub e: [[R; 2]; 2],
}

impl<R: Real> Mat2<R> {
    pub fn new(a: R, b: R, c: R, d: R) -> Self {
        Self {
            e: [[a, b], [c, d]],
        }
    }

    pub fn identity() -> Self {
        Self::new(R::one(), R::zero(), R::zero(), R::one())
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        let mut out = [[R::zero(); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = self.e[i][0] * rhs.e[0][j] + self.e[i][1] * rhs.e[1][j];
            }
        }
        Self { e: out }
    }

    pub fn apply(&self, v: [R; 2]) -> [R; 2] {
        [
            self.e[0][0] * v[0] + self.e[0][1] * v[1],
            self.e[1][0] * v[0] + self.e[1][1] * v[1],
        ]
    }

    pub fn trace(&self) -> R {
        self.e[0][0] + self.e[1][1]
    }

    pub fn det(&self) -> R {
        self.e[0][0] * self.e[1][1] - self.e[0][1] * self.e[1][0]
    }

    /// `self^n` by repeated multiplication.
    pub fn pow(&self, n: u32) -> Self {
        let mut acc = Self::identity();
        for _ in 0..n {
            acc = acc.mul(self);
        }
        acc
    }

    /// Largest eigenvalue modulus. Complex pairs have modulus `√det`.
    pub fn spectral_radius(&self) -> R {
        let half_tr = self.trace() / r64(2.0);
        let det = self.det();
        let disc = half_tr * half_tr - det;
        if disc >= R::zero() {
            let root = disc.sqrt();
            (half_tr + root).abs().max((half_tr - root).abs())
        } else {
            det.abs().sqrt()
        }
    }

    /// Largest singular value.
    pub fn operator_norm(&self) -> R {
        // singular values² are eigenvalues of AᵀA: s² − p·s + det² with
        // p = sum of squared entries
        let mut p = R::zero();
        for i in 0..2 {
            for j in 0..2 {
                p += self.e[i][j] * self.e[i][j];
            }
        }
        let det = self.det();
        let disc = (p * p / r64(4.0) - det * det).max(R::zero());
        (p / r64(2.0) + disc.sqrt()).sqrt()
    }
}
