//! Doubled-variable nonconservative mechanics.
//!
//! Coordinates are formally doubled to `(q_1, q_2)`, coupled through a
//! kernel `K` that is antisymmetric under relabelling the two copies, and
//! the physical limit (PL) `q_- -> 0`, `q_+ -> q` is taken after all
//! variations. Only the PL values of the `q_-`/`p_-` derivatives of `K`
//! survive into the reduced equations
//!
//! ```text
//! qdot = dH/dp - [dK/dp_-]_PL
//! pdot = -dH/dq + [dK/dq_-]_PL
//! ```
//!
//! so a [`GalleySystem`] stores exactly those maps. A constructor from a
//! full kernel performs the PL differentiation once and validates the
//! relabelling antisymmetry on the probe set.

use std::sync::Arc;

use crate::fd::{self, FdError};
use crate::integrate::Trajectory;
use crate::probe;
use crate::state::{PhaseState, ScalarField};

#[derive(Debug, thiserror::Error)]
pub enum GalleyError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("residuals need at least {need} samples, trajectory has {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("grid differentiation requires a uniform trajectory grid")]
    NonUniformGrid,
    #[error(
        "kernel is not antisymmetric under relabelling: K(1,2) + K(2,1) = {defect:e} at probe {probe}"
    )]
    NotAntisymmetric { probe: usize, defect: f64 },
    #[error(transparent)]
    Fd(#[from] FdError),
}

/// Covector-valued map of the flat `(q, p)` state and time.
pub type CovectorFn = Arc<dyn Fn(&[f64], f64) -> Vec<f64> + Send + Sync>;

/// Full doubled kernel `K(q_1, q_2, p_1, p_2, t)`.
pub type FullKernelFn = Arc<dyn Fn(&[f64], &[f64], &[f64], &[f64], f64) -> f64 + Send + Sync>;

/// Split coordinates into difference/mean parts:
/// `q_- = q_1 - q_2`, `q_+ = (q_1 + q_2) / 2`.
pub fn plus_minus_transform(q1: &[f64], q2: &[f64]) -> Result<(Vec<f64>, Vec<f64>), GalleyError> {
    if q1.len() != q2.len() {
        return Err(GalleyError::DimensionMismatch {
            expected: q1.len(),
            got: q2.len(),
        });
    }
    let minus = q1.iter().zip(q2).map(|(a, b)| a - b).collect();
    let plus = q1.iter().zip(q2).map(|(a, b)| 0.5 * (a + b)).collect();
    Ok((minus, plus))
}

/// Invert [`plus_minus_transform`]: `q_1 = q_+ + q_-/2`, `q_2 = q_+ - q_-/2`.
pub fn plus_minus_inverse(minus: &[f64], plus: &[f64]) -> Result<(Vec<f64>, Vec<f64>), GalleyError> {
    if minus.len() != plus.len() {
        return Err(GalleyError::DimensionMismatch {
            expected: minus.len(),
            got: plus.len(),
        });
    }
    let q1 = plus.iter().zip(minus).map(|(p, m)| p + 0.5 * m).collect();
    let q2 = plus.iter().zip(minus).map(|(p, m)| p - 0.5 * m).collect();
    Ok((q1, q2))
}

/// A nonconservative system in reduced (physical-limit) form.
#[derive(Clone)]
pub struct GalleySystem {
    n: usize,
    h: ScalarField,
    dk_dqminus: CovectorFn,
    dk_dpminus: CovectorFn,
    dk_dqdotminus: Option<CovectorFn>,
}

impl GalleySystem {
    /// Build from the physical-limit derivative maps directly. Both maps
    /// take the flat `(q, p)` state and return a length-`n` covector.
    pub fn new(
        n: usize,
        h: ScalarField,
        dk_dqminus: impl Fn(&[f64], f64) -> Vec<f64> + Send + Sync + 'static,
        dk_dpminus: impl Fn(&[f64], f64) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        GalleySystem {
            n,
            h,
            dk_dqminus: Arc::new(dk_dqminus),
            dk_dpminus: Arc::new(dk_dpminus),
            dk_dqdotminus: None,
        }
    }

    /// Attach an optional `[dK/dqdot_-]_PL` map for kernels with velocity
    /// dependence (enters the Euler-Lagrange residual and the energy rate).
    pub fn with_velocity_kernel(
        mut self,
        dk_dqdotminus: impl Fn(&[f64], f64) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        self.dk_dqdotminus = Some(Arc::new(dk_dqdotminus));
        self
    }

    /// Build from a full doubled kernel: differentiates `K` at the physical
    /// limit by central differences and validates relabelling antisymmetry
    /// `K(q_1, q_2, p_1, p_2) = -K(q_2, q_1, p_2, p_1)` on the probe set.
    pub fn from_full_kernel(n: usize, h: ScalarField, k: FullKernelFn) -> Result<Self, GalleyError> {
        for (idx, point) in probe::probe_points(4 * n).iter().enumerate() {
            let (q1, rest) = point.split_at(n);
            let (q2, rest) = rest.split_at(n);
            let (p1, p2) = rest.split_at(n);
            let forward = k(q1, q2, p1, p2, 0.0);
            let relabelled = k(q2, q1, p2, p1, 0.0);
            let defect = forward + relabelled;
            if defect.abs() > 1e-12 * forward.abs().max(1.0) {
                return Err(GalleyError::NotAntisymmetric { probe: idx, defect });
            }
        }
        let (dq, dp) = pl_derivative_maps(n, k);
        Ok(GalleySystem {
            n,
            h,
            dk_dqminus: dq,
            dk_dpminus: dp,
            dk_dqdotminus: None,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn hamiltonian(&self) -> &ScalarField {
        &self.h
    }

    pub fn dk_dqminus(&self, flat: &[f64], t: f64) -> Vec<f64> {
        (self.dk_dqminus)(flat, t)
    }

    pub fn dk_dpminus(&self, flat: &[f64], t: f64) -> Vec<f64> {
        (self.dk_dpminus)(flat, t)
    }

    fn check_state(&self, state: &PhaseState) -> Result<(), GalleyError> {
        if state.base_dim() != self.n || state.z().is_some() {
            return Err(GalleyError::DimensionMismatch {
                expected: self.n,
                got: state.base_dim(),
            });
        }
        Ok(())
    }
}

impl std::fmt::Debug for GalleySystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GalleySystem")
            .field("n", &self.n)
            .field("h", &self.h)
            .field("velocity_kernel", &self.dk_dqdotminus.is_some())
            .finish()
    }
}

/// Physical-limit derivative maps of a full kernel, by central differences.
/// No antisymmetry validation; see [`GalleySystem::from_full_kernel`] for
/// the checked route.
pub fn pl_derivative_maps(n: usize, k: FullKernelFn) -> (CovectorFn, CovectorFn) {
    let kq = k.clone();
    let dq: CovectorFn = Arc::new(move |flat: &[f64], t: f64| {
        let (q, p) = flat.split_at(n);
        let h = fd::default_step(flat);
        (0..n)
            .map(|i| {
                let mut q1 = q.to_vec();
                let mut q2 = q.to_vec();
                q1[i] += 0.5 * h;
                q2[i] -= 0.5 * h;
                let plus = kq(&q1, &q2, p, p, t);
                q1[i] = q[i] - 0.5 * h;
                q2[i] = q[i] + 0.5 * h;
                let minus = kq(&q1, &q2, p, p, t);
                (plus - minus) / (2.0 * h)
            })
            .collect()
    });
    let dp: CovectorFn = Arc::new(move |flat: &[f64], t: f64| {
        let (q, p) = flat.split_at(n);
        let h = fd::default_step(flat);
        (0..n)
            .map(|i| {
                let mut p1 = p.to_vec();
                let mut p2 = p.to_vec();
                p1[i] += 0.5 * h;
                p2[i] -= 0.5 * h;
                let plus = k(q, q, &p1, &p2, t);
                p1[i] = p[i] - 0.5 * h;
                p2[i] = p[i] + 0.5 * h;
                let minus = k(q, q, &p1, &p2, t);
                (plus - minus) / (2.0 * h)
            })
            .collect()
    });
    (dq, dp)
}

/// The reduced nonconservative flow at the physical limit.
pub fn galley_rhs(sys: &GalleySystem, state: &PhaseState, t: f64) -> Result<Vec<f64>, GalleyError> {
    sys.check_state(state)?;
    let n = sys.n;
    let flat = state.to_flat();
    let grad = sys.h.gradient(&flat, t)?;
    let kq = sys.dk_dqminus(&flat, t);
    let kp = sys.dk_dpminus(&flat, t);
    let mut rhs = Vec::with_capacity(2 * n);
    for i in 0..n {
        rhs.push(grad[n + i] - kp[i]);
    }
    for i in 0..n {
        rhs.push(-grad[i] + kq[i]);
    }
    Ok(rhs)
}

/// Max-norm residual of the dissipative Euler-Lagrange equations
/// `d/dt(dL/dqdot + [dK/dqdot_-]) = dL/dq + [dK/dq_-]` at each interior
/// sample. `l` evaluates on the flat layout `(q, qdot)`; velocities come
/// from the system's own reduced flow.
pub fn galley_el_residual(
    l: &ScalarField,
    sys: &GalleySystem,
    traj: &Trajectory,
) -> Result<Vec<f64>, GalleyError> {
    let len = traj.len();
    if len < 3 {
        return Err(GalleyError::TooFewSamples { need: 3, got: len });
    }
    let dt = traj.uniform_step().ok_or(GalleyError::NonUniformGrid)?;
    let n = sys.n;

    let mut momenta = Vec::with_capacity(len);
    let mut dl_dq = Vec::with_capacity(len);
    let mut kq = Vec::with_capacity(len);
    for (state, &t) in traj.states().iter().zip(traj.times()) {
        sys.check_state(state)?;
        let flat = state.to_flat();
        let velocity = galley_rhs(sys, state, t)?;
        let mut lagr_point = Vec::with_capacity(2 * n);
        lagr_point.extend_from_slice(state.q());
        lagr_point.extend_from_slice(&velocity[..n]);
        let grad = l.gradient(&lagr_point, t)?;
        let mut m = grad[n..2 * n].to_vec();
        if let Some(kqd) = &sys.dk_dqdotminus {
            for (mi, ki) in m.iter_mut().zip(kqd(&flat, t)) {
                *mi += ki;
            }
        }
        momenta.push(m);
        dl_dq.push(grad[..n].to_vec());
        kq.push(sys.dk_dqminus(&flat, t));
    }

    let mut residuals = Vec::with_capacity(len - 2);
    for k in 1..len - 1 {
        let mut worst = 0.0_f64;
        for i in 0..n {
            let dmdt = (momenta[k + 1][i] - momenta[k - 1][i]) / (2.0 * dt);
            let r = dmdt - dl_dq[k][i] - kq[k][i];
            worst = worst.max(r.abs());
        }
        residuals.push(worst);
    }
    Ok(residuals)
}

/// Energy rate of the reduced flow,
/// `dH/dt = -qdot . ( d/dt [dK/dqdot_-]_PL - [dK/dq_-]_PL )`,
/// with the `d/dt` term chained through the supplied state velocity
/// (zero for velocity-independent kernels).
pub fn galley_energy_rate(
    sys: &GalleySystem,
    state: &PhaseState,
    velocity: &[f64],
    t: f64,
) -> Result<f64, GalleyError> {
    sys.check_state(state)?;
    let n = sys.n;
    let flat = state.to_flat();
    let kq = sys.dk_dqminus(&flat, t);
    let qdot = &velocity[..n];

    let mut rate: f64 = qdot.iter().zip(kq.iter()).map(|(v, k)| v * k).sum();
    if let Some(kqd) = &sys.dk_dqdotminus {
        // d/dt of the covector through the state (FD Jacobian chained with
        // the velocity) plus its explicit time derivative.
        let jac = fd::fd_jacobian(|y, s| kqd(y, s), &flat, t, fd::default_step(&flat))?;
        let ht = fd::default_step(&[t]);
        let plus = kqd(&flat, t + ht);
        let minus = kqd(&flat, t - ht);
        for i in 0..n {
            let mut ddt = (plus[i] - minus[i]) / (2.0 * ht);
            for j in 0..2 * n {
                ddt += jac[(i, j)] * velocity[j];
            }
            rate -= qdot[i] * ddt;
        }
    }
    Ok(rate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrate::integrate;
    use approx::assert_relative_eq;
    use std::collections::BTreeMap;

    /// The decoupled damped oscillator: H = p^2/2 + x^2/2, K = kappa p_+ x_-.
    fn bateman(kappa: f64) -> GalleySystem {
        GalleySystem::new(
            1,
            ScalarField::new("H", |f, _| 0.5 * (f[1] * f[1] + f[0] * f[0])),
            move |f, _| vec![kappa * f[1]],
            |_, _| vec![0.0],
        )
    }

    #[test]
    fn plus_minus_examples() {
        let (minus, plus) = plus_minus_transform(&[2.0, 0.0], &[0.0, 2.0]).unwrap();
        assert_eq!(minus, vec![2.0, -2.0]);
        assert_eq!(plus, vec![1.0, 1.0]);

        let q = [0.3, -0.7];
        let (m, p) = plus_minus_transform(&q, &q).unwrap();
        assert_eq!(m, vec![0.0, 0.0]);
        assert_eq!(p, q.to_vec());
    }

    #[test]
    fn plus_minus_roundtrip() {
        let q1 = [1.25, -0.5, 3.0];
        let q2 = [0.75, 2.5, -1.0];
        let (m, p) = plus_minus_transform(&q1, &q2).unwrap();
        let (r1, r2) = plus_minus_inverse(&m, &p).unwrap();
        for i in 0..3 {
            assert!((r1[i] - q1[i]).abs() <= 1e-15);
            assert!((r2[i] - q2[i]).abs() <= 1e-15);
        }
    }

    #[test]
    fn zero_kernel_gives_canonical_flow() {
        let sys = GalleySystem::new(
            2,
            ScalarField::new("H", |f, _| {
                0.5 * (f[2] * f[2] - f[3] * f[3]) + 0.5 * (f[0] * f[0] - f[1] * f[1])
            }),
            |_, _| vec![0.0, 0.0],
            |_, _| vec![0.0, 0.0],
        );
        let state = PhaseState::new(vec![1.0, 0.5], vec![0.3, -0.2]).unwrap();
        let rhs = galley_rhs(&sys, &state, 0.0).unwrap();
        assert_relative_eq!(rhs[0], 0.3, epsilon = 1e-9);
        assert_relative_eq!(rhs[1], 0.2, epsilon = 1e-9);
        assert_relative_eq!(rhs[2], -1.0, epsilon = 1e-9);
        assert_relative_eq!(rhs[3], 0.5, epsilon = 1e-9);
    }

    #[test]
    fn bateman_momentum_equation() {
        // kappa = 0.4 at (x, p) = (1, 2): pdot = -x + kappa p = -0.2.
        let sys = bateman(0.4);
        let state = PhaseState::new(vec![1.0], vec![2.0]).unwrap();
        let rhs = galley_rhs(&sys, &state, 0.0).unwrap();
        assert_relative_eq!(rhs[0], 2.0, epsilon = 1e-9);
        assert_relative_eq!(rhs[1], -0.2, max_relative = 1e-9);
    }

    #[test]
    fn forced_km_momentum_equation() {
        // K = -kappa p_+ . q_- + f . q_-:
        // pdot_x = -b x - a y - kappa p_x + f_x.
        let (a, b, kappa) = (1.0, 1.0, 0.3);
        let f_ext = [0.7, -0.2];
        let sys = GalleySystem::new(
            2,
            ScalarField::new("H", move |f, _| {
                0.5 * (f[2] * f[2] - f[3] * f[3])
                    + 0.5 * b * (f[0] * f[0] - f[1] * f[1])
                    + a * f[0] * f[1]
            }),
            move |f, _| vec![-kappa * f[2] + f_ext[0], -kappa * f[3] + f_ext[1]],
            |_, _| vec![0.0, 0.0],
        );
        let state = PhaseState::new(vec![1.0, 0.5], vec![0.2, -0.4]).unwrap();
        let rhs = galley_rhs(&sys, &state, 0.0).unwrap();
        let expected_px = -b * 1.0 - a * 0.5 - kappa * 0.2 + f_ext[0];
        assert_relative_eq!(rhs[2], expected_px, max_relative = 1e-8);
    }

    #[test]
    fn full_kernel_constructor_matches_hand_maps() {
        let kappa = 0.4;
        let full: FullKernelFn = Arc::new(move |q1, q2, p1, p2, _| {
            kappa * 0.5 * (p1[0] + p2[0]) * (q1[0] - q2[0])
        });
        let sys = GalleySystem::from_full_kernel(
            1,
            ScalarField::new("H", |f, _| 0.5 * (f[1] * f[1] + f[0] * f[0])),
            full,
        )
        .unwrap();
        let hand = bateman(kappa);
        for point in crate::probe::probe_points(2) {
            let a = sys.dk_dqminus(&point, 0.0);
            let b = hand.dk_dqminus(&point, 0.0);
            assert_relative_eq!(a[0], b[0], max_relative = 1e-8, epsilon = 1e-10);
            assert!(sys.dk_dpminus(&point, 0.0)[0].abs() <= 1e-10);
        }
    }

    #[test]
    fn symmetric_kernel_is_rejected() {
        // p_+ . q_+ alone is symmetric under relabelling, not antisymmetric.
        let full: FullKernelFn =
            Arc::new(|q1, q2, p1, p2, _| 0.25 * (p1[0] + p2[0]) * (q1[0] + q2[0]));
        let err = GalleySystem::from_full_kernel(
            1,
            ScalarField::new("H", |f, _| 0.5 * (f[1] * f[1] + f[0] * f[0])),
            full,
        )
        .unwrap_err();
        assert!(matches!(err, GalleyError::NotAntisymmetric { .. }));
    }

    #[test]
    fn plus_plus_term_does_not_change_the_equations() {
        // Adding p_+ . q_+ to the kernel leaves both PL maps untouched.
        let kappa = 0.4;
        let base: FullKernelFn = Arc::new(move |q1, q2, p1, p2, _| {
            kappa * 0.5 * (p1[0] + p2[0]) * (q1[0] - q2[0])
        });
        let augmented: FullKernelFn = Arc::new(move |q1, q2, p1, p2, _| {
            kappa * 0.5 * (p1[0] + p2[0]) * (q1[0] - q2[0])
                + 0.25 * (p1[0] + p2[0]) * (q1[0] + q2[0])
        });
        let h = ScalarField::new("H", |f, _| 0.5 * (f[1] * f[1] + f[0] * f[0]));
        let (dq_a, dp_a) = pl_derivative_maps(1, base);
        let (dq_b, dp_b) = pl_derivative_maps(1, augmented);
        let sys_a = GalleySystem::new(1, h.clone(), move |f, t| dq_a(f, t), move |f, t| dp_a(f, t));
        let sys_b = GalleySystem::new(1, h, move |f, t| dq_b(f, t), move |f, t| dp_b(f, t));
        for point in crate::probe::probe_points(2) {
            let state = PhaseState::from_flat(&point, false).unwrap();
            let ra = galley_rhs(&sys_a, &state, 0.0).unwrap();
            let rb = galley_rhs(&sys_b, &state, 0.0).unwrap();
            for (x, y) in ra.iter().zip(rb.iter()) {
                assert_relative_eq!(x, y, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn energy_rate_matches_flow_derivative() {
        // For the Bateman kernel the rate is qdot . [dK/dq_-] = kappa p^2,
        // which must equal the chain-rule derivative of H along the flow.
        let sys = bateman(0.4);
        let state = PhaseState::new(vec![1.0], vec![2.0]).unwrap();
        let velocity = galley_rhs(&sys, &state, 0.0).unwrap();
        let rate = galley_energy_rate(&sys, &state, &velocity, 0.0).unwrap();
        assert_relative_eq!(rate, 0.4 * 4.0, max_relative = 1e-8);

        let flat = state.to_flat();
        let grad = sys.hamiltonian().gradient(&flat, 0.0).unwrap();
        let chain: f64 = grad.iter().zip(velocity.iter()).map(|(g, v)| g * v).sum();
        assert_relative_eq!(rate, chain, max_relative = 1e-8);
    }

    #[test]
    fn forcing_only_kernel_rate_is_power_of_the_force() {
        let f_ext = [0.7, -0.2];
        let sys = GalleySystem::new(
            2,
            ScalarField::new("H", |f, _| {
                0.5 * (f[2] * f[2] - f[3] * f[3]) + 0.5 * (f[0] * f[0] - f[1] * f[1])
            }),
            move |_, _| vec![f_ext[0], f_ext[1]],
            |_, _| vec![0.0, 0.0],
        );
        let state = PhaseState::new(vec![0.4, -0.1], vec![0.6, 0.8]).unwrap();
        let velocity = galley_rhs(&sys, &state, 0.0).unwrap();
        let rate = galley_energy_rate(&sys, &state, &velocity, 0.0).unwrap();
        // qdot = (p_x, -p_y): rate = qdot . f.
        let expected = 0.6 * f_ext[0] + (-0.8) * f_ext[1];
        assert_relative_eq!(rate, expected, max_relative = 1e-8);
    }

    #[test]
    fn conservative_harmonic_residual_and_rate() {
        // K = 0: the operator reduces to the classical Euler-Lagrange
        // residual, small on the exact flow, and the energy rate vanishes.
        let sys = GalleySystem::new(
            1,
            ScalarField::new("H", |f, _| 0.5 * (f[1] * f[1] + f[0] * f[0])),
            |_, _| vec![0.0],
            |_, _| vec![0.0],
        );
        let l = ScalarField::new("L", |f, _| 0.5 * f[1] * f[1] - 0.5 * f[0] * f[0]);
        let x0 = PhaseState::new(vec![1.0], vec![0.0]).unwrap();
        let rhs = |s: &PhaseState, t: f64| galley_rhs(&sys, s, t).map_err(Into::into);
        let traj = integrate(rhs, &x0, 0.0, 5.0, 1e-3, "harmonic", BTreeMap::new()).unwrap();
        let residuals = galley_el_residual(&l, &sys, &traj).unwrap();
        let max = residuals.iter().cloned().fold(0.0_f64, f64::max);
        assert!(max <= 1e-4, "conservative residual {max}");

        let state = PhaseState::new(vec![0.7], vec![-0.4]).unwrap();
        let velocity = galley_rhs(&sys, &state, 0.0).unwrap();
        let rate = galley_energy_rate(&sys, &state, &velocity, 0.0).unwrap();
        assert_eq!(rate, 0.0);
    }

    #[test]
    fn bateman_el_residual_small_on_flow_large_off_flow() {
        let kappa = 0.4;
        let sys = bateman(kappa).with_velocity_kernel(|_, _| vec![0.0]);
        let l = ScalarField::new("L", |f, _| 0.5 * f[1] * f[1] - 0.5 * f[0] * f[0]);
        let x0 = PhaseState::new(vec![1.0], vec![0.0]).unwrap();
        let rhs = |s: &PhaseState, t: f64| galley_rhs(&sys, s, t).map_err(Into::into);
        let traj = integrate(rhs, &x0, 0.0, 5.0, 1e-3, "bateman", BTreeMap::new()).unwrap();
        let residuals = galley_el_residual(&l, &sys, &traj).unwrap();
        let max = residuals.iter().cloned().fold(0.0_f64, f64::max);
        assert!(max <= 1e-4, "on-flow residual {max}");

        // A straight-line non-solution threaded through the same operator.
        let times: Vec<f64> = (0..=1000).map(|k| k as f64 * 1e-3).collect();
        let states: Vec<PhaseState> = times
            .iter()
            .map(|t| PhaseState::new(vec![1.0 + t], vec![1.0]).unwrap())
            .collect();
        let line = Trajectory::from_parts(times, states, "line", BTreeMap::new());
        let residuals = galley_el_residual(&l, &sys, &line).unwrap();
        let max = residuals.iter().cloned().fold(0.0_f64, f64::max);
        assert!(max > 1e-1, "off-flow residual {max}");
    }
}
