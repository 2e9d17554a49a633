//! Pauli/Dirac matrix algebra over `Complex64`.
//!
//! The built-in constructors satisfy the standard anticommutation table
//! `{sigma_j, sigma_l} = 2 delta_jl`, `{alpha_j, alpha_l} = 2 delta_jl`,
//! `{alpha_j, beta} = 0`, `beta^2 = 1` exactly (entries are 0, +-1, +-i).

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn identity(k: usize) -> CMatrix {
    CMatrix::identity(k, k)
}

/// Pauli matrix sigma_j, j in 1..=3 (j = 0 gives the 2x2 identity).
pub fn pauli(j: usize) -> CMatrix {
    match j {
        0 => identity(2),
        1 => CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
        2 => CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]),
        3 => CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
        _ => panic!("pauli index {j} out of range"),
    }
}

/// Dirac matrix alpha_j (4x4, off-diagonal sigma_j blocks).
pub fn dirac_alpha(j: usize) -> CMatrix {
    let s = pauli(j);
    let mut m = CMatrix::zeros(4, 4);
    for r in 0..2 {
        for c in 0..2 {
            m[(r, c + 2)] = s[(r, c)];
            m[(r + 2, c)] = s[(r, c)];
        }
    }
    m
}

/// Dirac matrix beta = diag(1, 1, -1, -1).
pub fn dirac_beta() -> CMatrix {
    let mut m = CMatrix::zeros(4, 4);
    m[(0, 0)] = ONE;
    m[(1, 1)] = ONE;
    m[(2, 2)] = -ONE;
    m[(3, 3)] = -ONE;
    m
}

pub fn anticommutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b + b * a
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// Max entry of |M - M*|.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let adj = m.adjoint();
    (m - adj)
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Real eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    // Symmetrize first so roundoff in the assembly cannot leak imaginary parts.
    let h = (m + m.adjoint()).scale(0.5);
    let mut ev: Vec<f64> = h.symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev
}

pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    hermitian_eigenvalues(m)[0]
}

/// Spectral norm of a Hermitian matrix: max |eigenvalue|.
pub fn hermitian_spectral_norm(m: &CMatrix) -> f64 {
    hermitian_eigenvalues(m)
        .iter()
        .map(|e| e.abs())
        .fold(0.0, f64::max)
}

/// A k x k Hermitian matrix, k in {2, 4}, validated on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    inner: CMatrix,
}

impl HermitianMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        let k = m.nrows();
        if k != m.ncols() || (k != 2 && k != 4) {
            return Err(Error::BadDimension(k, &[2, 4]));
        }
        let defect = hermiticity_defect(&m);
        if defect > 0.0 {
            return Err(Error::NotHermitian { asymmetry: defect });
        }
        Ok(HermitianMatrix { inner: m })
    }

    pub fn dim(&self) -> usize {
        self.inner.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.inner
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.inner)
    }
}

/// Coefficients of a 2x2 Hermitian matrix in the basis (1, sigma_1, sigma_2,
/// sigma_3): `H = v0 1 + sum_j v_j sigma_j` with `v0 = Tr(H)/2`,
/// `v_j = Tr(sigma_j H)/2`.
pub fn pauli_decompose(h: &CMatrix) -> Result<[f64; 4]> {
    if h.nrows() != 2 || h.ncols() != 2 {
        return Err(Error::BadDimension(h.nrows(), &[2]));
    }
    let defect = hermiticity_defect(h);
    if defect > 1e-12 {
        return Err(Error::NotHermitian { asymmetry: defect });
    }
    let mut v = [0.0; 4];
    for j in 0..4 {
        let tr = (pauli(j) * h).trace();
        v[j] = 0.5 * tr.re;
    }
    Ok(v)
}

/// Rebuild `v0 1 + sum v_j sigma_j`.
pub fn pauli_compose(v: &[f64; 4]) -> CMatrix {
    let mut m = identity(2).scale(v[0]);
    for j in 1..4 {
        m += pauli(j).scale(v[j]);
    }
    m
}
