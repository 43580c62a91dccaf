//! Contact Hamiltonian dynamics in Darboux coordinates and the Herglotz
//! variational formulation.
//!
//! States live on `(q, p, z)` with the contact form `dz - p dq` realized
//! implicitly: for a Hamiltonian `H(q, p, z, t)` the flow is
//!
//! ```text
//! qdot_i = dH/dp_i
//! pdot_i = -dH/dq_i - p_i dH/dz
//! zdot   = p_i dH/dp_i - H
//! ```
//!
//! Energy is not preserved; instead `dH/dt = -H dH/dz`, and the quantity
//! `I = H exp(int dH/dz dtheta)` is constant along solutions. On the
//! Lagrangian side, `z` obeys `zdot = L(t, q, qdot, z)` and extremals solve
//! the generalized Euler-Lagrange equations
//! `dL/dq - d/dt(dL/dqdot) + (dL/dz)(dL/dqdot) = 0`; the fiber derivative
//! `(q, qdot, z) -> (q, dL/dqdot, z)` carries one picture to the other.
//!
//! The Lagrangian helpers assume the anisotropic quadratic class: velocity
//! Hessians are constant in `qdot`, so unit-step second differences recover
//! them exactly and the fiber map inverts by a single linear solve.

use nalgebra::{DMatrix, DVector};

use crate::fd::FdError;
use crate::integrate::Trajectory;
use crate::state::{PhaseState, ScalarField};

#[derive(Debug, thiserror::Error)]
pub enum ContactError {
    #[error("contact state must carry the action coordinate z")]
    MissingZ,
    #[error("state has base dimension {got}, system expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("residuals need at least {need} samples, trajectory has {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("grid differentiation requires a uniform trajectory grid")]
    NonUniformGrid,
    #[error("irregular Lagrangian: velocity Hessian has |det| = {det:e}")]
    IrregularLagrangian { det: f64 },
    #[error(transparent)]
    Fd(#[from] FdError),
}

/// A contact Hamiltonian system on an `n`-dimensional base: `H` evaluates on
/// the flat layout `(q_1..q_n, p_1..p_n, z)` plus time.
#[derive(Debug, Clone)]
pub struct ContactSystem {
    n: usize,
    h: ScalarField,
}

impl ContactSystem {
    pub fn new(n: usize, h: ScalarField) -> Self {
        ContactSystem { n, h }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn hamiltonian(&self) -> &ScalarField {
        &self.h
    }

    fn check_state(&self, state: &PhaseState) -> Result<(), ContactError> {
        if state.z().is_none() {
            return Err(ContactError::MissingZ);
        }
        if state.base_dim() != self.n {
            return Err(ContactError::DimensionMismatch {
                expected: self.n,
                got: state.base_dim(),
            });
        }
        Ok(())
    }
}

/// The contact Hamiltonian vector field at a state, as a flat velocity
/// `(qdot, pdot, zdot)` of length `2n + 1`.
pub fn contact_vector_field(
    sys: &ContactSystem,
    state: &PhaseState,
    t: f64,
) -> Result<Vec<f64>, ContactError> {
    sys.check_state(state)?;
    let n = sys.n;
    let flat = state.to_flat();
    let grad = sys.h.gradient(&flat, t)?;
    let h_value = sys.h.eval(&flat, t);
    let dh_dz = grad[2 * n];

    let mut rhs = Vec::with_capacity(2 * n + 1);
    for i in 0..n {
        rhs.push(grad[n + i]);
    }
    for i in 0..n {
        rhs.push(-grad[i] - flat[n + i] * dh_dz);
    }
    let zdot: f64 = (0..n).map(|i| flat[n + i] * grad[n + i]).sum::<f64>() - h_value;
    rhs.push(zdot);
    Ok(rhs)
}

/// Instantaneous energy rate along the contact flow, `dH/dt = -H dH/dz`.
pub fn contact_energy_rate(sys: &ContactSystem, state: &PhaseState, t: f64) -> Result<f64, ContactError> {
    sys.check_state(state)?;
    let flat = state.to_flat();
    let grad = sys.h.gradient(&flat, t)?;
    Ok(-sys.h.eval(&flat, t) * grad[2 * sys.n])
}

/// The conserved Herglotz quantity `I(t_k) = H(t_k) exp(int_0^{t_k} dH/dz)`
/// sampled along a trajectory, the integral by the trapezoid rule on the
/// trajectory grid.
pub fn herglotz_invariant_series(sys: &ContactSystem, traj: &Trajectory) -> Result<Vec<f64>, ContactError> {
    if traj.len() < 2 {
        return Err(ContactError::TooFewSamples { need: 2, got: traj.len() });
    }
    let n = sys.n;
    let mut dh_dz = Vec::with_capacity(traj.len());
    let mut h_values = Vec::with_capacity(traj.len());
    for (state, &t) in traj.states().iter().zip(traj.times()) {
        sys.check_state(state)?;
        let flat = state.to_flat();
        h_values.push(sys.h.eval(&flat, t));
        dh_dz.push(sys.h.gradient(&flat, t)?[2 * n]);
    }

    let mut series = Vec::with_capacity(traj.len());
    let mut integral = 0.0;
    series.push(h_values[0]);
    for k in 1..traj.len() {
        let dt = traj.times()[k] - traj.times()[k - 1];
        integral += 0.5 * dt * (dh_dz[k] + dh_dz[k - 1]);
        series.push(h_values[k] * integral.exp());
    }
    Ok(series)
}

/// A Lagrangian for the Herglotz principle: `L` evaluates on the flat layout
/// `(q_1..q_n, qdot_1..qdot_n, z)` plus time.
#[derive(Debug, Clone)]
pub struct HerglotzLagrangian {
    n: usize,
    l: ScalarField,
}

impl HerglotzLagrangian {
    pub fn new(n: usize, l: ScalarField) -> Self {
        HerglotzLagrangian { n, l }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lagrangian(&self) -> &ScalarField {
        &self.l
    }

    fn flat(&self, q: &[f64], qdot: &[f64], z: f64) -> Vec<f64> {
        let mut flat = Vec::with_capacity(2 * self.n + 1);
        flat.extend_from_slice(q);
        flat.extend_from_slice(qdot);
        flat.push(z);
        flat
    }

    /// Conjugate momentum `dL/dqdot` at `(q, qdot, z, t)`.
    pub fn momentum(&self, q: &[f64], qdot: &[f64], z: f64, t: f64) -> Result<Vec<f64>, ContactError> {
        let flat = self.flat(q, qdot, z);
        let grad = self.l.gradient(&flat, t)?;
        Ok(grad[self.n..2 * self.n].to_vec())
    }

    /// Velocity Hessian `d2L/dqdot2` at `(q, z, t)` by unit-step second
    /// differences, exact for the quadratic-in-velocity class.
    pub fn velocity_hessian(&self, q: &[f64], z: f64, t: f64) -> DMatrix<f64> {
        let n = self.n;
        let eval = |qdot: &[f64]| self.l.eval(&self.flat(q, qdot, z), t);
        let zero = vec![0.0; n];
        let l0 = eval(&zero);
        DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                let mut plus = zero.clone();
                plus[i] = 1.0;
                let mut minus = zero.clone();
                minus[i] = -1.0;
                eval(&plus) - 2.0 * l0 + eval(&minus)
            } else {
                let mut pp = zero.clone();
                pp[i] = 1.0;
                pp[j] = 1.0;
                let mut pm = zero.clone();
                pm[i] = 1.0;
                pm[j] = -1.0;
                let mut mp = zero.clone();
                mp[i] = -1.0;
                mp[j] = 1.0;
                let mut mm = zero.clone();
                mm[i] = -1.0;
                mm[j] = -1.0;
                0.25 * (eval(&pp) - eval(&pm) - eval(&mp) + eval(&mm))
            }
        })
    }

    /// Invert the fiber map: recover `qdot` from `p = dL/dqdot`, solving
    /// the affine relation `p = D qdot + b` of the quadratic class.
    pub fn velocity_from_momentum(
        &self,
        q: &[f64],
        p: &[f64],
        z: f64,
        t: f64,
    ) -> Result<Vec<f64>, ContactError> {
        let d = self.velocity_hessian(q, z, t);
        let det = d.determinant();
        if det.abs() <= 1e-10 {
            return Err(ContactError::IrregularLagrangian { det });
        }
        let b = self.momentum(q, &vec![0.0; self.n], z, t)?;
        let rhs = DVector::from_iterator(self.n, p.iter().zip(b.iter()).map(|(pi, bi)| pi - bi));
        let qdot = d
            .lu()
            .solve(&rhs)
            .ok_or(ContactError::IrregularLagrangian { det })?;
        Ok(qdot.iter().copied().collect())
    }
}

/// The Legendre transform of a regular Herglotz Lagrangian:
/// `H(q, p, z, t) = p . qdot(p) - L(q, qdot(p), z, t)`.
///
/// Errors with `IrregularLagrangian` when the velocity Hessian is singular
/// (checked at the origin of each evaluation fiber).
pub fn legendre_map(lag: &HerglotzLagrangian) -> Result<ContactSystem, ContactError> {
    let probe = lag.velocity_from_momentum(&vec![0.0; lag.n], &vec![0.0; lag.n], 0.0, 0.0);
    if let Err(e @ ContactError::IrregularLagrangian { .. }) = probe {
        return Err(e);
    }
    let n = lag.n;
    let inner = lag.clone();
    let h = ScalarField::new(format!("legendre[{}]", lag.l.label()), move |flat, t| {
        let q = &flat[..n];
        let p = &flat[n..2 * n];
        let z = flat[2 * n];
        let qdot = inner
            .velocity_from_momentum(q, p, z, t)
            .expect("regularity checked at construction");
        let l_value = inner.l.eval(&inner.flat(q, &qdot, z), t);
        p.iter().zip(qdot.iter()).map(|(a, b)| a * b).sum::<f64>() - l_value
    });
    Ok(ContactSystem::new(n, h))
}

/// The inverse direction: from a contact Hamiltonian of the quadratic class,
/// build the Lagrangian `L(q, qdot, z, t) = p(qdot) . qdot - H(q, p(qdot), z, t)`
/// with `p` solved from `qdot = dH/dp`.
pub fn inverse_legendre_map(sys: &ContactSystem) -> Result<HerglotzLagrangian, ContactError> {
    let n = sys.n;
    let h = sys.h.clone();

    let momentum_hessian = {
        let h = h.clone();
        move |q: &[f64], z: f64, t: f64| {
            let eval = |p: &[f64]| {
                let mut flat = Vec::with_capacity(2 * n + 1);
                flat.extend_from_slice(q);
                flat.extend_from_slice(p);
                flat.push(z);
                h.eval(&flat, t)
            };
            let zero = vec![0.0; n];
            let h0 = eval(&zero);
            DMatrix::from_fn(n, n, |i, j| {
                if i == j {
                    let mut plus = zero.clone();
                    plus[i] = 1.0;
                    let mut minus = zero.clone();
                    minus[i] = -1.0;
                    eval(&plus) - 2.0 * h0 + eval(&minus)
                } else {
                    let mut pp = zero.clone();
                    pp[i] = 1.0;
                    pp[j] = 1.0;
                    let mut pm = zero.clone();
                    pm[i] = 1.0;
                    pm[j] = -1.0;
                    let mut mp = zero.clone();
                    mp[i] = -1.0;
                    mp[j] = 1.0;
                    let mut mm = zero.clone();
                    mm[i] = -1.0;
                    mm[j] = -1.0;
                    0.25 * (eval(&pp) - eval(&pm) - eval(&mp) + eval(&mm))
                }
            })
        }
    };

    {
        let d = momentum_hessian(&vec![0.0; n], 0.0, 0.0);
        let det = d.determinant();
        if det.abs() <= 1e-10 {
            return Err(ContactError::IrregularLagrangian { det });
        }
    }

    let label = format!("inverse_legendre[{}]", sys.h.label());
    let h_inner = h.clone();
    let l = ScalarField::new(label, move |flat, t| {
        let q = &flat[..n];
        let qdot = &flat[n..2 * n];
        let z = flat[2 * n];
        // dH/dp = M p + m0; solve for p.
        let m = momentum_hessian(q, z, t);
        let mut origin = Vec::with_capacity(2 * n + 1);
        origin.extend_from_slice(q);
        origin.extend(std::iter::repeat_n(0.0, n));
        origin.push(z);
        let grad0 = h_inner
            .gradient(&origin, t)
            .expect("finite Hamiltonian on the evaluation fiber");
        let rhs = DVector::from_iterator(n, qdot.iter().enumerate().map(|(i, v)| v - grad0[n + i]));
        let p = m.lu().solve(&rhs).expect("regularity checked at construction");
        let mut full = Vec::with_capacity(2 * n + 1);
        full.extend_from_slice(q);
        full.extend(p.iter());
        full.push(z);
        p.dot(&DVector::from_column_slice(qdot)) - h_inner.eval(&full, t)
    });
    Ok(HerglotzLagrangian::new(n, l))
}

/// A configuration path with velocities and the Herglotz action, sampled on
/// a uniform grid. Residual operators consume this form.
#[derive(Debug, Clone)]
pub struct ConfigPath {
    pub times: Vec<f64>,
    pub q: Vec<Vec<f64>>,
    pub qdot: Vec<Vec<f64>>,
    pub z: Vec<f64>,
}

impl ConfigPath {
    /// Extract `(q, qdot, z)` samples from a contact trajectory, velocities
    /// through the Lagrangian's inverse fiber map.
    pub fn from_contact_trajectory(
        lag: &HerglotzLagrangian,
        traj: &Trajectory,
    ) -> Result<Self, ContactError> {
        let mut q = Vec::with_capacity(traj.len());
        let mut qdot = Vec::with_capacity(traj.len());
        let mut z = Vec::with_capacity(traj.len());
        for (state, &t) in traj.states().iter().zip(traj.times()) {
            let zk = state.z().ok_or(ContactError::MissingZ)?;
            q.push(state.q().to_vec());
            qdot.push(lag.velocity_from_momentum(state.q(), state.p(), zk, t)?);
            z.push(zk);
        }
        Ok(ConfigPath {
            times: traj.times().to_vec(),
            q,
            qdot,
            z,
        })
    }

    fn uniform_step(&self) -> Option<f64> {
        let dt = self.times[1] - self.times[0];
        self.times
            .windows(2)
            .all(|w| ((w[1] - w[0]) - dt).abs() <= 1e-12)
            .then_some(dt)
    }
}

/// Max-norm residual of the generalized Euler-Lagrange equations at each
/// interior sample of a contact trajectory (endpoints excluded), the time
/// derivative by central differences on the grid.
pub fn herglotz_el_residual(
    lag: &HerglotzLagrangian,
    traj: &Trajectory,
) -> Result<Vec<f64>, ContactError> {
    let path = ConfigPath::from_contact_trajectory(lag, traj)?;
    herglotz_el_residual_on_path(lag, &path)
}

/// Residual of the generalized Euler-Lagrange equations on an arbitrary
/// `(q, qdot, z)` path; negative controls feed non-solutions through here.
pub fn herglotz_el_residual_on_path(
    lag: &HerglotzLagrangian,
    path: &ConfigPath,
) -> Result<Vec<f64>, ContactError> {
    let len = path.times.len();
    if len < 3 {
        return Err(ContactError::TooFewSamples { need: 3, got: len });
    }
    let dt = path.uniform_step().ok_or(ContactError::NonUniformGrid)?;
    let n = lag.n;

    // Momentum series dL/dqdot, then the interior residual
    // dL/dq - d/dt(dL/dqdot) + (dL/dz)(dL/dqdot).
    let mut momenta = Vec::with_capacity(len);
    let mut grads = Vec::with_capacity(len);
    for k in 0..len {
        let flat = lag.flat(&path.q[k], &path.qdot[k], path.z[k]);
        let grad = lag.l.gradient(&flat, path.times[k])?;
        momenta.push(grad[n..2 * n].to_vec());
        grads.push(grad);
    }

    let mut residuals = Vec::with_capacity(len - 2);
    for k in 1..len - 1 {
        let dl_dz = grads[k][2 * n];
        let mut worst = 0.0_f64;
        for i in 0..n {
            let dmdt = (momenta[k + 1][i] - momenta[k - 1][i]) / (2.0 * dt);
            let r = grads[k][i] - dmdt + dl_dz * momenta[k][i];
            worst = worst.max(r.abs());
        }
        residuals.push(worst);
    }
    Ok(residuals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::collections::BTreeMap;

    /// The dissipative radial contact Hamiltonian with U' = 1:
    /// H = (p_x^2 - p_y^2)/2 + (x^2 - y^2)/2 + gamma z.
    fn radial_contact(gamma: f64) -> ContactSystem {
        ContactSystem::new(
            2,
            ScalarField::new("H", move |f, _| {
                0.5 * (f[2] * f[2] - f[3] * f[3]) + 0.5 * (f[0] * f[0] - f[1] * f[1]) + gamma * f[4]
            }),
        )
    }

    #[test]
    fn z_independent_hamiltonian_gives_canonical_flow() {
        let sys = radial_contact(0.0);
        let state = PhaseState::with_z(vec![0.7, -0.3], vec![0.2, 0.5], 0.9).unwrap();
        let rhs = contact_vector_field(&sys, &state, 0.0).unwrap();
        assert_relative_eq!(rhs[0], 0.2, epsilon = 1e-9); // dH/dp_x = p_x
        assert_relative_eq!(rhs[1], -0.5, epsilon = 1e-9); // dH/dp_y = -p_y
        assert_relative_eq!(rhs[2], -0.7, epsilon = 1e-9); // -x U'
        assert_relative_eq!(rhs[3], -0.3, epsilon = 1e-9); // +y U'
        let flat = state.to_flat();
        let h = sys.hamiltonian().eval(&flat, 0.0);
        let expected_zdot = 0.2 * 0.2 + 0.5 * -0.5 - h;
        assert_relative_eq!(rhs[4], expected_zdot, epsilon = 1e-9);
    }

    #[test]
    fn pure_contact_term_flow() {
        // H = z: (qdot, pdot, zdot) = (0, -p, -z).
        let sys = ContactSystem::new(1, ScalarField::new("z", |f, _| f[2]));
        let state = PhaseState::with_z(vec![0.4], vec![-1.5], 2.0).unwrap();
        let rhs = contact_vector_field(&sys, &state, 0.0).unwrap();
        assert_relative_eq!(rhs[0], 0.0, epsilon = 1e-9);
        assert_relative_eq!(rhs[1], 1.5, epsilon = 1e-9);
        assert_relative_eq!(rhs[2], -2.0, epsilon = 1e-9);
    }

    #[test]
    fn radial_system_momentum_leg_signs() {
        // gamma = 0.3 at (1, 1, 1, 1, 0): pdot_y = y U' - gamma p_y = 0.7.
        let sys = radial_contact(0.3);
        let state = PhaseState::with_z(vec![1.0, 1.0], vec![1.0, 1.0], 0.0).unwrap();
        let rhs = contact_vector_field(&sys, &state, 0.0).unwrap();
        assert_relative_eq!(rhs[3], 0.7, epsilon = 1e-8);
        assert_relative_eq!(rhs[2], -1.3, epsilon = 1e-8); // -x U' - gamma p_x
    }

    #[test]
    fn energy_rate_values() {
        let conservative = radial_contact(0.0);
        let state = PhaseState::with_z(vec![0.5, 0.1], vec![0.2, -0.4], 1.0).unwrap();
        assert_relative_eq!(
            contact_energy_rate(&conservative, &state, 0.0).unwrap(),
            0.0,
            epsilon = 1e-9
        );

        // H = gamma z with gamma = 0.3, z = 2: rate = -(0.6)(0.3).
        let sys = ContactSystem::new(1, ScalarField::new("gz", |f, _| 0.3 * f[2]));
        let state = PhaseState::with_z(vec![0.0], vec![0.0], 2.0).unwrap();
        assert_relative_eq!(
            contact_energy_rate(&sys, &state, 0.0).unwrap(),
            -0.18,
            max_relative = 1e-8
        );
    }

    #[test]
    fn missing_z_is_rejected() {
        let sys = radial_contact(0.1);
        let state = PhaseState::new(vec![1.0, 0.0], vec![0.0, 0.0]).unwrap();
        assert!(matches!(
            contact_vector_field(&sys, &state, 0.0),
            Err(ContactError::MissingZ)
        ));
    }

    /// L = (xdot^2 - ydot^2)/2 - (x^2 - y^2)/2 - gamma z.
    fn radial_lagrangian(gamma: f64) -> HerglotzLagrangian {
        HerglotzLagrangian::new(
            2,
            ScalarField::new("L", move |f, _| {
                0.5 * (f[2] * f[2] - f[3] * f[3]) - 0.5 * (f[0] * f[0] - f[1] * f[1]) - gamma * f[4]
            }),
        )
    }

    #[test]
    fn legendre_textbook_case() {
        // L = qdot^2/2 - q^2/2 -> H = p^2/2 + q^2/2.
        let lag = HerglotzLagrangian::new(
            1,
            ScalarField::new("L", |f, _| 0.5 * f[1] * f[1] - 0.5 * f[0] * f[0]),
        );
        let sys = legendre_map(&lag).unwrap();
        let h = sys.hamiltonian().eval(&[0.7, -0.4, 0.0], 0.0);
        assert_relative_eq!(h, 0.5 * 0.16 + 0.5 * 0.49, max_relative = 1e-9);
    }

    #[test]
    fn legendre_anisotropic_case() {
        // L = (xdot^2 - ydot^2)/2 - U - gamma z maps to
        // H = (p_x^2 - p_y^2)/2 + U + gamma z with p_x = xdot, p_y = -ydot.
        let gamma = 0.3;
        let sys = legendre_map(&radial_lagrangian(gamma)).unwrap();
        let flat = [0.8, -0.2, 0.5, 0.9, 1.4];
        let expected = 0.5 * (0.25 - 0.81) + 0.5 * (0.64 - 0.04) + gamma * 1.4;
        assert_relative_eq!(
            sys.hamiltonian().eval(&flat, 0.0),
            expected,
            max_relative = 1e-9,
            epsilon = 1e-12
        );

        // Fiber map signs: p = (xdot, -ydot).
        let lag = radial_lagrangian(gamma);
        let p = lag.momentum(&[0.0, 0.0], &[0.4, 0.7], 0.0, 0.0).unwrap();
        assert_relative_eq!(p[0], 0.4, epsilon = 1e-9);
        assert_relative_eq!(p[1], -0.7, epsilon = 1e-9);
    }

    #[test]
    fn legendre_roundtrip_reproduces_hamiltonian() {
        let sys = radial_contact(0.25);
        let lag = inverse_legendre_map(&sys).unwrap();
        let back = legendre_map(&lag).unwrap();
        for point in crate::probe::probe_points(5) {
            let a = sys.hamiltonian().eval(&point, 0.0);
            let b = back.hamiltonian().eval(&point, 0.0);
            assert!((a - b).abs() <= 1e-12, "roundtrip gap {}", a - b);
        }
    }

    #[test]
    fn irregular_lagrangian_is_rejected() {
        let lag = HerglotzLagrangian::new(1, ScalarField::new("lin", |f, _| f[1] - f[0]));
        assert!(matches!(
            legendre_map(&lag),
            Err(ContactError::IrregularLagrangian { .. })
        ));
    }

    #[test]
    fn classical_harmonic_solution_has_small_residual() {
        // L = qdot^2/2 - q^2/2 (no z-dependence), path q = cos t.
        let lag = HerglotzLagrangian::new(
            1,
            ScalarField::new("L", |f, _| 0.5 * f[1] * f[1] - 0.5 * f[0] * f[0]),
        );
        let dt = 1e-3;
        let steps = 2000;
        let times: Vec<f64> = (0..=steps).map(|k| k as f64 * dt).collect();
        let q: Vec<Vec<f64>> = times.iter().map(|t| vec![t.cos()]).collect();
        let qdot: Vec<Vec<f64>> = times.iter().map(|t| vec![-t.sin()]).collect();
        let z = vec![0.0; times.len()];
        let path = ConfigPath { times, q, qdot, z };
        let residuals = herglotz_el_residual_on_path(&lag, &path).unwrap();
        let max = residuals.iter().cloned().fold(0.0_f64, f64::max);
        assert!(max <= 1e-4, "harmonic residual {max}");
    }

    #[test]
    fn straight_line_path_has_large_residual() {
        let lag = radial_lagrangian(0.3);
        let dt = 1e-3;
        let steps = 1000;
        let times: Vec<f64> = (0..=steps).map(|k| k as f64 * dt).collect();
        let q: Vec<Vec<f64>> = times.iter().map(|t| vec![1.0 + t, 0.5 - 0.4 * t]).collect();
        let qdot: Vec<Vec<f64>> = times.iter().map(|_| vec![1.0, -0.4]).collect();
        // z integrated loosely along the path; the residual is dominated by
        // the configuration equations either way.
        let mut z = vec![0.0];
        for k in 1..times.len() {
            let flat = [q[k - 1][0], q[k - 1][1], 1.0, -0.4, z[k - 1]];
            let l = lag.lagrangian().eval(&flat, times[k - 1]);
            z.push(z[k - 1] + dt * l);
        }
        let path = ConfigPath { times, q, qdot, z };
        let residuals = herglotz_el_residual_on_path(&lag, &path).unwrap();
        let max = residuals.iter().cloned().fold(0.0_f64, f64::max);
        assert!(max > 1e-1, "non-solution residual {max}");
    }

    #[test]
    fn residual_needs_three_samples() {
        let lag = radial_lagrangian(0.1);
        let path = ConfigPath {
            times: vec![0.0, 1.0],
            q: vec![vec![0.0, 0.0]; 2],
            qdot: vec![vec![0.0, 0.0]; 2],
            z: vec![0.0; 2],
        };
        assert!(matches!(
            herglotz_el_residual_on_path(&lag, &path),
            Err(ContactError::TooFewSamples { .. })
        ));
    }

    #[test]
    fn invariant_series_constant_for_conservative_flow() {
        use crate::integrate::integrate;
        let sys = radial_contact(0.0);
        let rhs = |state: &PhaseState, t: f64| {
            contact_vector_field(&sys, state, t).map_err(|e| e.into())
        };
        let x0 = PhaseState::with_z(vec![0.6, 0.2], vec![0.1, -0.3], 0.0).unwrap();
        let traj = integrate(rhs, &x0, 0.0, 10.0, 1e-3, "radial_contact", BTreeMap::new()).unwrap();
        let series = herglotz_invariant_series(&sys, &traj).unwrap();
        let first = series[0];
        let drift = series
            .iter()
            .map(|v| (v - first).abs())
            .fold(0.0_f64, f64::max);
        assert!(drift <= 1e-7 * first.abs().max(1e-8), "drift {drift}");
    }
}
