//! Constant-coefficient Dirac operators `D = sum_j A^j D_j + V` and their
//! matrix potentials.
//!
//! The kinetic matrices are the standard Pauli/Dirac choices: `sigma_2` in
//! d = 1, `(sigma_1, sigma_2)` in d = 2, `(alpha_1, alpha_2, alpha_3)` in
//! d = 3. A potential is *scalar* when it anticommutes with every kinetic
//! matrix; that is the class the confinement certificates apply to.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::domain::{Domain, Point};
use crate::error::{Error, Result};
use crate::matrices::{self, CMatrix};

/// A real scalar field on a domain, with a gradient.
///
/// Catalog fields carry analytic gradients; ad-hoc fields can fall back to
/// [`numeric_grad`], which uses central differences with a step scaled by
/// the distance to the boundary.
pub trait ScalarField: Send + Sync {
    fn eval(&self, p: &Point) -> f64;
    fn grad(&self, p: &Point) -> [f64; 3];
}

/// Central-difference gradient with relative step `1e-6 * delta(p)`.
pub fn numeric_grad(f: &dyn Fn(&Point) -> f64, domain: &Domain, p: &Point) -> [f64; 3] {
    let h = 1e-6 * domain.delta(p).max(1e-12);
    let mut g = [0.0; 3];
    for j in 0..p.dim() {
        g[j] = (f(&p.shifted(j, h)) - f(&p.shifted(j, -h))) / (2.0 * h);
    }
    g
}

/// `lambda / delta(x)^alpha` on a domain, with analytic gradient.
#[derive(Debug, Clone)]
pub struct DistancePower {
    pub domain: Domain,
    pub lambda: f64,
    pub alpha: f64,
}

impl ScalarField for DistancePower {
    fn eval(&self, p: &Point) -> f64 {
        self.lambda * self.domain.delta(p).powf(-self.alpha)
    }

    fn grad(&self, p: &Point) -> [f64; 3] {
        let d = self.domain.delta(p);
        let gd = self.domain.grad_delta(p);
        let c = -self.alpha * self.lambda * d.powf(-self.alpha - 1.0);
        [c * gd[0], c * gd[1], c * gd[2]]
    }
}

/// Constant field.
#[derive(Debug, Clone, Copy)]
pub struct ConstantField(pub f64);

impl ScalarField for ConstantField {
    fn eval(&self, _p: &Point) -> f64 {
        self.0
    }

    fn grad(&self, _p: &Point) -> [f64; 3] {
        [0.0; 3]
    }
}

/// `-lambda ln delta(x)`: diverges logarithmically at the boundary.
#[derive(Debug, Clone)]
pub struct DistanceLog {
    pub domain: Domain,
    pub lambda: f64,
}

impl ScalarField for DistanceLog {
    fn eval(&self, p: &Point) -> f64 {
        -self.lambda * self.domain.delta(p).ln()
    }

    fn grad(&self, p: &Point) -> [f64; 3] {
        let d = self.domain.delta(p);
        let gd = self.domain.grad_delta(p);
        let c = -self.lambda / d;
        [c * gd[0], c * gd[1], c * gd[2]]
    }
}

/// A Hermitian matrix-valued potential on a domain.
pub trait MatrixPotential: Send + Sync {
    /// Spinor dimension k.
    fn spinor_dim(&self) -> usize;
    fn eval(&self, p: &Point) -> CMatrix;
    /// Partial derivatives (d_1 V, ..., d_d V).
    fn grad(&self, p: &Point) -> Vec<CMatrix>;
}

/// Lorentz scalar potential: `sigma_1 v` (d=1), `sigma_3 v` (d=2),
/// `beta v` (d=3).
pub struct LorentzScalar {
    pub dim: usize,
    pub field: Arc<dyn ScalarField>,
}

impl LorentzScalar {
    pub fn carrier(dim: usize) -> CMatrix {
        match dim {
            1 => matrices::pauli(1),
            2 => matrices::pauli(3),
            3 => matrices::dirac_beta(),
            _ => panic!("unsupported dimension {dim}"),
        }
    }
}

impl MatrixPotential for LorentzScalar {
    fn spinor_dim(&self) -> usize {
        if self.dim == 3 {
            4
        } else {
            2
        }
    }

    fn eval(&self, p: &Point) -> CMatrix {
        Self::carrier(self.dim).scale(self.field.eval(p))
    }

    fn grad(&self, p: &Point) -> Vec<CMatrix> {
        let g = self.field.grad(p);
        let carrier = Self::carrier(self.dim);
        (0..self.dim).map(|j| carrier.clone().scale(g[j])).collect()
    }
}

/// Electric potential `v(x) * identity`; never scalar.
pub struct Electric {
    pub dim: usize,
    pub field: Arc<dyn ScalarField>,
}

impl MatrixPotential for Electric {
    fn spinor_dim(&self) -> usize {
        if self.dim == 3 {
            4
        } else {
            2
        }
    }

    fn eval(&self, p: &Point) -> CMatrix {
        matrices::identity(self.spinor_dim()).scale(self.field.eval(p))
    }

    fn grad(&self, p: &Point) -> Vec<CMatrix> {
        let g = self.field.grad(p);
        (0..self.dim)
            .map(|j| matrices::identity(self.spinor_dim()).scale(g[j]))
            .collect()
    }
}

pub struct ZeroPotential {
    pub spinor_dim: usize,
    pub dim: usize,
}

impl MatrixPotential for ZeroPotential {
    fn spinor_dim(&self) -> usize {
        self.spinor_dim
    }

    fn eval(&self, _p: &Point) -> CMatrix {
        CMatrix::zeros(self.spinor_dim, self.spinor_dim)
    }

    fn grad(&self, _p: &Point) -> Vec<CMatrix> {
        (0..self.dim)
            .map(|_| CMatrix::zeros(self.spinor_dim, self.spinor_dim))
            .collect()
    }
}

/// `factor * inner`: used by the perturbation-splitting certificates.
pub struct Scaled {
    pub factor: f64,
    pub inner: Arc<dyn MatrixPotential>,
}

impl MatrixPotential for Scaled {
    fn spinor_dim(&self) -> usize {
        self.inner.spinor_dim()
    }

    fn eval(&self, p: &Point) -> CMatrix {
        self.inner.eval(p).scale(self.factor)
    }

    fn grad(&self, p: &Point) -> Vec<CMatrix> {
        self.inner.grad(p).into_iter().map(|m| m.scale(self.factor)).collect()
    }
}

/// The constant kinetic matrices of a Dirac operator plus its potential.
pub struct DiracCoefficients {
    dim: usize,
    kinetic: Vec<CMatrix>,
    potential: Arc<dyn MatrixPotential>,
}

impl DiracCoefficients {
    /// Standard Dirac constructor in dimension d with a given potential.
    pub fn standard(dim: usize, potential: Arc<dyn MatrixPotential>) -> Result<Self> {
        let kinetic = match dim {
            1 => vec![matrices::pauli(2)],
            2 => vec![matrices::pauli(1), matrices::pauli(2)],
            3 => vec![matrices::dirac_alpha(1), matrices::dirac_alpha(2), matrices::dirac_alpha(3)],
            _ => return Err(Error::BadDimension(dim, &[1, 2, 3])),
        };
        let k = kinetic[0].nrows();
        if potential.spinor_dim() != k {
            return Err(Error::BadDimension(potential.spinor_dim(), &[2, 4]));
        }
        Ok(DiracCoefficients { dim, kinetic, potential })
    }

    pub fn free(dim: usize) -> Result<Self> {
        let k = if dim == 3 { 4 } else { 2 };
        Self::standard(dim, Arc::new(ZeroPotential { spinor_dim: k, dim }))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn spinor_dim(&self) -> usize {
        self.kinetic[0].nrows()
    }

    pub fn kinetic(&self) -> &[CMatrix] {
        &self.kinetic
    }

    pub fn potential(&self) -> &Arc<dyn MatrixPotential> {
        &self.potential
    }

    /// Velocity matrix `M_jl = Tr(A^j A^l)`, constant for the built-in
    /// constructors: `k * identity_d`. With `M(x) <= M * delta^m` this forces
    /// m = 0, which fixes the weight h = ln delta used by the certificates.
    pub fn velocity_matrix(&self, _p: &Point) -> DMatrix<f64> {
        let d = self.dim;
        let mut m = DMatrix::zeros(d, d);
        for j in 0..d {
            for l in 0..d {
                m[(j, l)] = (&self.kinetic[j] * &self.kinetic[l]).trace().re;
            }
        }
        m
    }

    /// Symbol contraction `sigma(x, xi) = sum_j A^j xi_j`.
    pub fn symbol(&self, xi: &[f64]) -> CMatrix {
        let k = self.spinor_dim();
        let mut s = CMatrix::zeros(k, k);
        for (j, a) in self.kinetic.iter().enumerate() {
            s += a.clone().scale(xi[j]);
        }
        s
    }
}

/// Outcome of the scalar-potential test: max over samples and j of the
/// spectral norm of `{A^j, V(x)}`.
#[derive(Debug, Clone, Copy)]
pub struct ScalarCheck {
    pub is_scalar: bool,
    pub max_anticommutator_norm: f64,
}

pub const SCALAR_TOL: f64 = 1e-12;

/// Tests `{A^j(x), V(x)} = 0` on the given samples.
pub fn is_scalar_potential(c: &DiracCoefficients, samples: &[Point]) -> Result<ScalarCheck> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let mut max_norm = 0.0f64;
    for p in samples {
        let v = c.potential().eval(p);
        for a in c.kinetic() {
            let anti = matrices::anticommutator(a, &v);
            max_norm = max_norm.max(matrices::hermitian_spectral_norm(&anti));
        }
    }
    Ok(ScalarCheck { is_scalar: max_norm <= SCALAR_TOL, max_anticommutator_norm: max_norm })
}
