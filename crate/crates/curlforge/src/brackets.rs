//! Poisson bivectors, Lie-Poisson structures on the Heisenberg algebra,
//! symmetric double brackets, metriplectic composition, and gyroscopic
//! extensions.
//!
//! A Poisson bracket is represented by a skew matrix field `Lambda` through
//! `{F, H} = dF . Lambda . dH`; its Hamiltonian flow is `zdot = Lambda dH`.
//! The double bracket reuses the same bivector via the kernel
//! `G = Lambda Lambda^T` (computed on demand, never stored, so the defining
//! identity holds by construction), and a metriplectic system combines both:
//! `zdot = Lambda dH + a G dS`.
//!
//! The coordinate layout on the dual of the `(2n+1)`-dimensional Heisenberg
//! algebra is `(q_1..q_n, p_1..p_n, mu)`; at `mu = 1` the Lie-Poisson flow
//! is canonical mechanics, which is what lets dissipation enter ordinary
//! phase space through the double bracket.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::fd::{self, FdError};
use crate::state::{PhaseState, ScalarField};

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum BracketError {
    #[error("dimension mismatch: structure has dim {expected}, state has dim {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("gyroscopic operations require a 2-dimensional base, got {0}")]
    WrongBaseDimension(usize),
    #[error(transparent)]
    Fd(#[from] FdError),
}

type EntriesFn = dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync;

/// A bivector (skew matrix) field `Lambda` on a `dim`-dimensional space.
#[derive(Clone)]
pub struct BivectorField {
    dim: usize,
    entries: Arc<EntriesFn>,
}

impl BivectorField {
    pub fn new(dim: usize, entries: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static) -> Self {
        BivectorField {
            dim,
            entries: Arc::new(entries),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The matrix `Lambda(z)`.
    pub fn entries(&self, z: &[f64]) -> DMatrix<f64> {
        (self.entries)(z)
    }

    /// Largest deviation from skew-symmetry, `max |Lambda + Lambda^T|`.
    pub fn skew_defect(&self, z: &[f64]) -> f64 {
        let lam = self.entries(z);
        let sum = &lam + lam.transpose();
        sum.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    fn check_dim(&self, z: &[f64]) -> Result<(), BracketError> {
        if z.len() != self.dim {
            Err(BracketError::DimensionMismatch {
                expected: self.dim,
                got: z.len(),
            })
        } else {
            Ok(())
        }
    }
}

impl std::fmt::Debug for BivectorField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BivectorField").field("dim", &self.dim).finish()
    }
}

/// The canonical constant bivector `[[0, I], [-I, 0]]` on `(q, p)`, `2n x 2n`.
pub fn canonical_bivector(n: usize) -> BivectorField {
    assert!(n >= 1, "base dimension must be positive");
    BivectorField::new(2 * n, move |_| {
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            m[(i, n + i)] = 1.0;
            m[(n + i, i)] = -1.0;
        }
        m
    })
}

/// The Heisenberg algebra on an `n`-dimensional base: basis
/// `{e^i, e_j, f}` with the only nonzero brackets `[e^i, e_j] = delta^i_j f`.
///
/// Dual coordinates are ordered `(q_1..q_n, p_1..p_n, mu)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HeisenbergStructure {
    pub n: usize,
}

impl HeisenbergStructure {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "base dimension must be positive");
        HeisenbergStructure { n }
    }

    /// Flat dimension of the dual space, `2n + 1`.
    pub fn dim(&self) -> usize {
        2 * self.n + 1
    }
}

/// Lie-Poisson bivector of the Heisenberg structure: the `(q_i, p_j)` block
/// is `mu delta_ij`, the last row and column vanish.
pub fn heisenberg_bivector(h: &HeisenbergStructure) -> BivectorField {
    let n = h.n;
    BivectorField::new(2 * n + 1, move |z| {
        let mu = z[2 * n];
        let mut m = DMatrix::zeros(2 * n + 1, 2 * n + 1);
        for i in 0..n {
            m[(i, n + i)] = mu;
            m[(n + i, i)] = -mu;
        }
        m
    })
}

/// Bracket value `{F, H}(z) = dF . Lambda(z) . dH`, using analytic
/// gradients when present and central differences otherwise.
pub fn bivector_bracket(
    lam: &BivectorField,
    f: &ScalarField,
    h: &ScalarField,
    z: &[f64],
    t: f64,
) -> Result<f64, BracketError> {
    lam.check_dim(z)?;
    let grad_f = DVector::from_vec(f.gradient(z, t)?);
    let grad_h = DVector::from_vec(h.gradient(z, t)?);
    Ok(grad_f.dot(&(lam.entries(z) * grad_h)))
}

/// Hamiltonian flow of a bivector: `zdot = Lambda(z) dH`.
pub fn hamiltonian_rhs(
    lam: &BivectorField,
    h: &ScalarField,
    z: &[f64],
    t: f64,
) -> Result<Vec<f64>, BracketError> {
    lam.check_dim(z)?;
    let grad_h = DVector::from_vec(h.gradient(z, t)?);
    Ok((lam.entries(z) * grad_h).iter().copied().collect())
}

/// A metriplectic system: reversible flow of `hamiltonian` through `lambda`
/// plus dissipation of `entropy` through the double-bracket kernel
/// `G = Lambda Lambda^T`, weighted by the coefficient `a`.
#[derive(Clone)]
pub struct MetriplecticStructure {
    pub lambda: BivectorField,
    pub hamiltonian: ScalarField,
    pub entropy: ScalarField,
    pub a: f64,
}

impl std::fmt::Debug for MetriplecticStructure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MetriplecticStructure")
            .field("lambda", &self.lambda)
            .field("hamiltonian", &self.hamiltonian)
            .field("entropy", &self.entropy)
            .field("a", &self.a)
            .finish()
    }
}

impl MetriplecticStructure {
    pub fn new(lambda: BivectorField, hamiltonian: ScalarField, entropy: ScalarField, a: f64) -> Self {
        MetriplecticStructure {
            lambda,
            hamiltonian,
            entropy,
            a,
        }
    }

    /// The symmetric positive semidefinite kernel `G(z) = Lambda Lambda^T`.
    pub fn g(&self, z: &[f64]) -> DMatrix<f64> {
        let lam = self.lambda.entries(z);
        &lam * lam.transpose()
    }

    pub fn dim(&self) -> usize {
        self.lambda.dim()
    }
}

/// Double (symmetric) bracket `(F, S) = dF . G(z) . dS`.
pub fn double_bracket(
    m: &MetriplecticStructure,
    f: &ScalarField,
    s: &ScalarField,
    z: &[f64],
    t: f64,
) -> Result<f64, BracketError> {
    m.lambda.check_dim(z)?;
    let grad_f = DVector::from_vec(f.gradient(z, t)?);
    let grad_s = DVector::from_vec(s.gradient(z, t)?);
    Ok(grad_f.dot(&(m.g(z) * grad_s)))
}

/// Metriplectic flow `zdot = Lambda dH + a G dS`.
pub fn metriplectic_rhs(m: &MetriplecticStructure, z: &[f64], t: f64) -> Result<Vec<f64>, BracketError> {
    m.lambda.check_dim(z)?;
    let grad_h = DVector::from_vec(m.hamiltonian.gradient(z, t)?);
    let grad_s = DVector::from_vec(m.entropy.gradient(z, t)?);
    let lam = m.lambda.entries(z);
    let reversible = &lam * grad_h;
    let dissipative = (&lam * lam.transpose()) * grad_s;
    Ok(reversible
        .iter()
        .zip(dissipative.iter())
        .map(|(r, d)| r + m.a * d)
        .collect())
}

/// Energy rate of a metriplectic flow, `dH/dt = a (H, S)`.
pub fn metriplectic_energy_rate(m: &MetriplecticStructure, z: &[f64], t: f64) -> Result<f64, BracketError> {
    Ok(m.a * double_bracket(m, &m.hamiltonian, &m.entropy, z, t)?)
}

/// Coefficients of the gyroscopic/dissipative extension on a 2D base.
///
/// Both matrices live in the velocity representation of the added Newtonian
/// force `F = (G + C) qdot`: the gyroscopic part `G` is skew (zero power),
/// the dissipative part `C = c I` is symmetric with power `c |qdot|^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GyroMetriplecticCoefficients {
    /// Skew gyroscopic coefficient: force `(-s qdot_y, +s qdot_x)`.
    pub s: f64,
    /// Symmetric dissipation coefficient: force `c qdot`.
    pub c: f64,
}

impl GyroMetriplecticCoefficients {
    pub fn new(s: f64, c: f64) -> Self {
        GyroMetriplecticCoefficients { s, c }
    }

    /// Velocity-space gyroscopic force matrix `[[0, -s], [s, 0]]` (skew).
    pub fn gyro_force_matrix(&self) -> [[f64; 2]; 2] {
        [[0.0, -self.s], [self.s, 0.0]]
    }

    /// Velocity-space dissipative force matrix `c I` (symmetric).
    pub fn dissipation_force_matrix(&self) -> [[f64; 2]; 2] {
        [[self.c, 0.0], [0.0, self.c]]
    }
}

/// Magnetic extension of the canonical bivector on a 2D base:
/// `[[0, I], [-I, -S]]` with `S = [[0, s], [-s, 0]]`, so `{p_x, p_y} = -s`.
///
/// Constant entries, hence an exact Poisson structure (zero Jacobi defect).
pub fn gyro_bivector(s: f64) -> BivectorField {
    BivectorField::new(4, move |_| {
        let mut m = DMatrix::zeros(4, 4);
        m[(0, 2)] = 1.0;
        m[(1, 3)] = 1.0;
        m[(2, 0)] = -1.0;
        m[(3, 1)] = -1.0;
        m[(2, 3)] = -s;
        m[(3, 2)] = s;
        m
    })
}

/// Gyroscopically extended Hamilton equations on a 2D base:
///
/// ```text
/// qdot_i = dH/dp_i
/// pdot_x = -dH/dx - s qdot_y
/// pdot_y = -dH/dy - s qdot_x
/// ```
///
/// The added Newtonian force is `(-s ydot, +s xdot)`: skew in velocities,
/// identically powerless. The sign flip between the two momentum legs
/// comes from the anisotropic kinetic metric of this Hamiltonian class,
/// under which `(xddot, yddot) = (pdot_x, -pdot_y)`.
pub fn gyro_bracket_rhs(
    h: &ScalarField,
    s: f64,
    state: &PhaseState,
    t: f64,
) -> Result<Vec<f64>, BracketError> {
    gyro_metriplectic_rhs(h, &GyroMetriplecticCoefficients::new(s, 0.0), state, t)
}

/// Gyroscopic plus dissipative extension of the canonical flow on a 2D base:
/// the Newtonian force `(G + C) qdot` of [`GyroMetriplecticCoefficients`]
/// pushed to momentum space through the anisotropic metric.
///
/// ```text
/// qdot_i = dH/dp_i
/// pdot_x = -dH/dx + ( -s qdot_y + c qdot_x )
/// pdot_y = -dH/dy - ( +s qdot_x + c qdot_y )
/// ```
pub fn gyro_metriplectic_rhs(
    h: &ScalarField,
    coeff: &GyroMetriplecticCoefficients,
    state: &PhaseState,
    t: f64,
) -> Result<Vec<f64>, BracketError> {
    if state.base_dim() != 2 || state.z().is_some() {
        return Err(BracketError::WrongBaseDimension(state.base_dim()));
    }
    let flat = state.to_flat();
    let grad = h.gradient(&flat, t)?;
    let v = [grad[2], grad[3]];
    let force = [
        -coeff.s * v[1] + coeff.c * v[0],
        coeff.s * v[0] + coeff.c * v[1],
    ];
    Ok(vec![v[0], v[1], -grad[0] + force[0], -grad[1] - force[1]])
}

/// Largest cyclic-sum Jacobi defect over index triples,
/// `max_{i,j,k} |sum_l Lambda_{li} d_l Lambda_{jk} + cyclic|`,
/// with entry derivatives by central differences.
///
/// Vanishing defect is the coordinate form of the Jacobi identity.
pub fn jacobi_defect(lam: &BivectorField, z: &[f64]) -> Result<f64, BracketError> {
    lam.check_dim(z)?;
    let n = lam.dim();
    let h = fd::default_step(z);
    let here = lam.entries(z);

    // d[l] holds the entrywise derivative of Lambda along coordinate l.
    let mut d = Vec::with_capacity(n);
    let mut work = z.to_vec();
    for l in 0..n {
        work[l] = z[l] + h;
        let plus = lam.entries(&work);
        work[l] = z[l] - h;
        let minus = lam.entries(&work);
        work[l] = z[l];
        if plus.iter().any(|v| !v.is_finite()) || minus.iter().any(|v| !v.is_finite()) {
            return Err(FdError::NonFinite { coord: l, offset: h }.into());
        }
        d.push((plus - minus) / (2.0 * h));
    }

    let mut defect = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            for k in (j + 1)..n {
                let mut sum = 0.0;
                for l in 0..n {
                    sum += here[(l, i)] * d[l][(j, k)]
                        + here[(l, j)] * d[l][(k, i)]
                        + here[(l, k)] * d[l][(i, j)];
                }
                defect = defect.max(sum.abs());
            }
        }
    }
    Ok(defect)
}
