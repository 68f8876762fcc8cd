//! Small dense complex matrices and a Hermitian Cholesky factorization.
//!
//! Sizes here are tiny (antenna counts, or 2T pilot taps), so a plain
//! row-major `Vec` is all that is needed.

use std::ops::{Index, IndexMut};

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix<F> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<F>>,
}

impl<F: Real> CMatrix<F> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex<F>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    /// Wraps row-major data.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<Complex<F>>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Parameter(format!(
                "{} entries cannot form a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[Complex<F>] {
        &self.data
    }

    pub fn mul_vec(&self, v: &[Complex<F>]) -> Vec<Complex<F>> {
        assert_eq!(v.len(), self.cols, "dimension mismatch in matrix-vector product");
        self.data
            .chunks_exact(self.cols)
            .map(|row| row.iter().zip(v).fold(Complex::zero(), |acc, (a, b)| acc + a * b))
            .collect()
    }

    /// `A A^H`.
    pub fn gram(&self) -> Self {
        let n = self.rows;
        let mut g = Self::zeros(n, n);
        for i in 0..n {
            let ri = &self.data[i * self.cols..(i + 1) * self.cols];
            for j in 0..=i {
                let rj = &self.data[j * self.cols..(j + 1) * self.cols];
                let s = ri
                    .iter()
                    .zip(rj)
                    .fold(Complex::zero(), |acc, (a, b)| acc + a * b.conj());
                g[(i, j)] = s;
                g[(j, i)] = s.conj();
            }
        }
        g
    }

    pub fn frobenius_sq(&self) -> F {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn scale(&self, s: F) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, other: &Self, s: F) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b * s).collect(),
        }
    }
}

impl<F> Index<(usize, usize)> for CMatrix<F> {
    type Output = Complex<F>;
    fn index(&self, (r, c): (usize, usize)) -> &Complex<F> {
        &self.data[r * self.cols + c]
    }
}

impl<F> IndexMut<(usize, usize)> for CMatrix<F> {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex<F> {
        &mut self.data[r * self.cols + c]
    }
}

/// Lower-triangular factor of a Hermitian positive-definite matrix.
#[derive(Clone, Debug)]
pub struct Cholesky<F> {
    n: usize,
    l: Vec<Complex<F>>,
}

impl<F: Real> Cholesky<F> {
    /// Only the lower triangle of `a` is read.
    pub fn new(a: &CMatrix<F>) -> Result<Self> {
        let n = a.rows();
        if a.cols() != n {
            return Err(Error::Parameter("Cholesky needs a square matrix".into()));
        }
        let mut l = vec![Complex::<F>::zero(); n * n];
        for j in 0..n {
            let mut d = a[(j, j)].re;
            for k in 0..j {
                d = d - l[j * n + k].norm_sqr();
            }
            if !(d > F::zero()) {
                return Err(Error::Numerical(format!(
                    "matrix is not positive definite (pivot {j} = {d})"
                )));
            }
            let d = d.sqrt();
            l[j * n + j] = Complex::new(d, F::zero());
            for i in j + 1..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s = s - l[i * n + k] * l[j * n + k].conj();
                }
                l[i * n + j] = s / d;
            }
        }
        Ok(Self { n, l })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `L z = b`.
    pub fn forward(&self, b: &[Complex<F>]) -> Vec<Complex<F>> {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut z = b.to_vec();
        for i in 0..n {
            let mut s = z[i];
            for k in 0..i {
                s = s - self.l[i * n + k] * z[k];
            }
            z[i] = s / self.l[i * n + i].re;
        }
        z
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[Complex<F>]) -> Vec<Complex<F>> {
        let n = self.n;
        let mut x = self.forward(b);
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s = s - self.l[k * n + i].conj() * x[k];
            }
            x[i] = s / self.l[i * n + i].re;
        }
        x
    }

    /// `ln det A`.
    pub fn log_det(&self) -> F {
        let two = F::one() + F::one();
        (0..self.n).map(|i| self.l[i * self.n + i].re.ln()).sum::<F>() * two
    }

    /// `y^H A^{-1} y`.
    pub fn inv_quad_form(&self, y: &[Complex<F>]) -> F {
        self.forward(y).iter().map(|z| z.norm_sqr()).sum()
    }
}

/// `ln det(A)` of a Hermitian positive-definite matrix.
pub fn hermitian_log_det<F: Real>(a: &CMatrix<F>) -> Result<F> {
    Ok(Cholesky::new(a)?.log_det())
}
