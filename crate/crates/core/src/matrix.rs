//! Dense square complex matrices.
//!
//! Everything in the crate (density matrices, POVM effects, observables) is a
//! small square matrix, at most 36x36 for the bipartite runs and 8x8 for the
//! tripartite ones, so storage is a flat row-major `Vec<Complex64>`.
//!
//! The Hermitian eigensolver is delegated to `faer`; the principal square
//! root used by the Lüders update is built on top of it.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use faer::{Mat, Side};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest tolerated `max |a - a†|` entry for a matrix treated as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Eigenvalues down to `-PSD_CLAMP` are rounded up to zero; anything lower is
/// reported as a PSD violation.
pub const PSD_CLAMP: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    /// Builds a matrix from row-major entries.
    pub fn new(dim: usize, data: Vec<Complex64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::DimensionMismatch("matrix dimension must be at least 1".into()));
        }
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch(format!(
                "{} entries supplied for a {dim}x{dim} matrix",
                data.len()
            )));
        }
        Ok(Self { dim, data })
    }

    pub fn from_real(dim: usize, data: &[f64]) -> Result<Self> {
        Self::new(dim, data.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        assert!(dim >= 1, "matrix dimension must be at least 1");
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    pub fn zeros(dim: usize) -> Self {
        Self::from_fn(dim, |_, _| ZERO)
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, |i, j| if i == j { ONE } else { ZERO })
    }

    pub fn diag(values: &[f64]) -> Self {
        Self::from_fn(values.len(), |i, j| {
            if i == j {
                Complex64::new(values[i], 0.0)
            } else {
                ZERO
            }
        })
    }

    /// σ₁
    pub fn pauli_x() -> Self {
        Self { dim: 2, data: vec![ZERO, ONE, ONE, ZERO] }
    }

    /// σ₂
    pub fn pauli_y() -> Self {
        Self { dim: 2, data: vec![ZERO, -I, I, ZERO] }
    }

    /// σ₃
    pub fn pauli_z() -> Self {
        Self { dim: 2, data: vec![ONE, ZERO, ZERO, -ONE] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|z| z * factor).collect() }
    }

    pub fn scale_complex(&self, factor: Complex64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|z| z * factor).collect() }
    }

    pub fn kron(&self, other: &Self) -> Self {
        kron(self, other)
    }

    /// `K · self · K†`
    pub fn sandwich(&self, k: &Self) -> Self {
        &(k * self) * &k.adjoint()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim, "max_abs_diff on matrices of different size");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `max |a_ij - conj(a_ji)|`
    pub fn hermiticity_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for j in i..self.dim {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_error() <= tol
    }

    /// Block-diagonal matrix `diag(self, other)`.
    pub fn direct_sum(&self, other: &Self) -> Self {
        let n = self.dim + other.dim;
        Self::from_fn(n, |i, j| match (i < self.dim, j < self.dim) {
            (true, true) => self[(i, j)],
            (false, false) => other[(i - self.dim, j - self.dim)],
            _ => ZERO,
        })
    }

    /// Exactly Hermitian part `(a + a†)/2`, the only part the solver reads.
    fn to_faer_hermitian(&self) -> Mat<Complex64> {
        Mat::from_fn(self.dim, self.dim, |i, j| (self[(i, j)] + self[(j, i)].conj()) * 0.5)
    }

    /// Eigendecomposition of a Hermitian matrix.
    ///
    /// Eigenvalues come back ascending; equal eigenvalues keep the order the
    /// solver produced them in. Columns of `vectors` are the matching
    /// orthonormal eigenvectors.
    pub fn eigen_hermitian(&self) -> Result<HermitianEigen> {
        let err = self.hermiticity_error();
        if err > HERMITIAN_TOL {
            return Err(Error::NotHermitian(err));
        }
        let eig = self
            .to_faer_hermitian()
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::EigenSolver(format!("{e:?}")))?;
        let (s, u) = (eig.S(), eig.U());
        let raw: Vec<f64> = (0..self.dim).map(|i| s[i].re).collect();
        if raw.iter().any(|v| !v.is_finite()) {
            return Err(Error::EigenSolver("non-finite eigenvalue".into()));
        }

        let mut order: Vec<usize> = (0..self.dim).collect();
        order.sort_by(|&a, &b| raw[a].total_cmp(&raw[b]));

        let values = order.iter().map(|&i| raw[i]).collect();
        let vectors = Self::from_fn(self.dim, |r, c| u[(r, order[c])]);
        Ok(HermitianEigen { values, vectors })
    }

    /// Principal (Hermitian PSD) square root.
    pub fn psd_sqrt(&self) -> Result<Self> {
        let eig = self.eigen_hermitian()?;
        let min = eig.values.first().copied().unwrap_or(0.0);
        if min < -PSD_CLAMP {
            return Err(Error::NotPsd(min));
        }
        // Eigenvalues at the solver's round-off level are taken as exact
        // zeros; otherwise a 1e-16 residue would turn into a 1e-8 root.
        let scale = eig.values.iter().fold(0.0f64, |m, l| m.max(l.abs()));
        let noise = 8.0 * self.dim as f64 * f64::EPSILON * scale;
        let roots: Vec<f64> =
            eig.values.iter().map(|&l| if l <= noise { 0.0 } else { l.sqrt() }).collect();
        let root = eig.reconstruct_with(&roots);
        // Strip the rounding-level anti-Hermitian part.
        Ok((&root + &root.adjoint()).scale(0.5))
    }

    /// Smallest eigenvalue of a Hermitian matrix.
    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.eigen_hermitian()?.values[0])
    }
}

/// Output of [`ComplexMatrix::eigen_hermitian`].
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    /// `V · diag(spectrum) · V†`
    pub fn reconstruct_with(&self, spectrum: &[f64]) -> ComplexMatrix {
        let v = &self.vectors;
        let n = v.dim();
        assert_eq!(spectrum.len(), n);
        ComplexMatrix::from_fn(n, |i, j| {
            (0..n).map(|k| v[(i, k)] * spectrum[k] * v[(j, k)].conj()).sum()
        })
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.reconstruct_with(&self.values)
    }
}

/// Kronecker (tensor) product; block `(i, j)` of the result is `a[i, j] · b`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (n, m) = (a.dim, b.dim);
    ComplexMatrix::from_fn(n * m, |r, c| a[(r / m, c / m)] * b[(r % m, c % m)])
}

pub fn trace(a: &ComplexMatrix) -> Complex64 {
    a.trace()
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.dim + j]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "adding matrices of different size");
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "subtracting matrices of different size");
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "multiplying matrices of different size");
        let n = self.dim;
        let mut out = vec![ZERO; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == ZERO {
                    continue;
                }
                let row = &rhs.data[k * n..(k + 1) * n];
                for (o, b) in out[i * n..(i + 1) * n].iter_mut().zip(row) {
                    *o += a * b;
                }
            }
        }
        ComplexMatrix { dim: n, data: out }
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.dim, self.dim)?;
        for i in 0..self.dim {
            write!(f, "  ")?;
            for j in 0..self.dim {
                let z = self[(i, j)];
                write!(f, "{:+.6}{:+.6}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}
