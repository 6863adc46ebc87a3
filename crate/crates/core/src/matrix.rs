//! Minimal dense matrices over a [`Scalar`], sized for Schwinger blocks
//! (at most a few dozen rows), plus the block-labelled operator wrapper.

use std::ops::{Index, IndexMut};

use crate::error::{QError, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> Matrix<S> {
    pub fn zeros(rows: usize, cols: usize, precision: u32) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![S::zero(precision); rows * cols],
        }
    }

    pub fn identity(n: usize, precision: u32) -> Self {
        let mut m = Self::zeros(n, n, precision);
        for i in 0..n {
            m[(i, i)] = S::one(precision);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, precision: u32, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut m = Self::zeros(rows, cols, precision);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn transpose(&self) -> Self {
        let mut m = Matrix {
            rows: self.cols,
            cols: self.rows,
            data: self.data.clone(),
        };
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[(j, i)] = self[(i, j)].clone();
            }
        }
        m
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "dimension mismatch in matmul");
        assert!(self.cols > 0);
        let mut out = Matrix {
            rows: self.rows,
            cols: rhs.cols,
            data: Vec::with_capacity(self.rows * rhs.cols),
        };
        for i in 0..self.rows {
            for j in 0..rhs.cols {
                let mut acc = self[(i, 0)].clone() * rhs[(0, j)].clone();
                for k in 1..self.cols {
                    acc = acc + self[(i, k)].clone() * rhs[(k, j)].clone();
                }
                out.data.push(acc);
            }
        }
        out
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let data = self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| a.clone() + b.clone())
            .collect();
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let data = self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| a.clone() - b.clone())
            .collect();
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn scale(&self, c: &S) -> Self {
        let data = self.data.iter().map(|a| a.clone() * c.clone()).collect();
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    /// Largest |entry|.
    pub fn max_abs(&self, precision: u32) -> S {
        let mut best = S::zero(precision);
        for v in &self.data {
            let a = v.abs();
            if a > best {
                best = a;
            }
        }
        best
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// A B - B A
    pub fn commutator(&self, rhs: &Self) -> Self {
        self.matmul(rhs).sub(&rhs.matmul(self))
    }
}

impl<S> Index<(usize, usize)> for Matrix<S> {
    type Output = S;
    fn index(&self, (i, j): (usize, usize)) -> &S {
        &self.data[i * self.cols + j]
    }
}

impl<S> IndexMut<(usize, usize)> for Matrix<S> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut S {
        &mut self.data[i * self.cols + j]
    }
}

/// Dense matrix tagged with the Schwinger blocks it maps between.
/// Entries are (block_out + 1) x (block_in + 1); products compose only
/// when the inner block labels agree.
#[derive(Clone, Debug)]
pub struct BlockOperator<S> {
    pub block_in: usize,
    pub block_out: usize,
    pub mat: Matrix<S>,
}

impl<S: Scalar> BlockOperator<S> {
    pub fn new(block_in: usize, block_out: usize, mat: Matrix<S>) -> Self {
        assert_eq!(mat.cols(), block_in + 1);
        assert_eq!(mat.rows(), block_out + 1);
        BlockOperator {
            block_in,
            block_out,
            mat,
        }
    }

    pub fn compose(&self, inner: &BlockOperator<S>) -> Result<BlockOperator<S>> {
        if inner.block_out != self.block_in {
            return Err(QError::Domain(format!(
                "block mismatch: inner maps to block {}, outer expects block {}",
                inner.block_out, self.block_in
            )));
        }
        Ok(BlockOperator {
            block_in: inner.block_in,
            block_out: self.block_out,
            mat: self.mat.matmul(&inner.mat),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    #[test]
    fn matmul_and_commutator() {
        let a = Matrix::<Rational>::from_fn(2, 2, 0, |i, j| {
            Rational::from_int((2 * i + j) as i64, 0)
        });
        let id = Matrix::<Rational>::identity(2, 0);
        assert_eq!(a.matmul(&id), a);
        assert!(a.commutator(&id).max_abs(0).is_zero());
    }

    #[test]
    fn block_labels_must_chain() {
        let a = BlockOperator::new(3, 2, Matrix::<Rational>::zeros(3, 4, 0));
        let b = BlockOperator::new(2, 3, Matrix::<Rational>::zeros(4, 3, 0));
        assert!(a.compose(&b).is_ok());
        assert!(b.compose(&b).is_err());
    }
}
