//! Fixed-step classical Runge-Kutta integration.
//!
//! Every verification in this crate is drift-based with a known budget, so a
//! plain fourth-order fixed-step scheme on a uniform grid is the right tool:
//! residual operators differentiate along the grid and need constant spacing.
//! When the span is not an integer multiple of `dt` the final step is
//! shortened to land on `t1` exactly; such trajectories report themselves as
//! non-uniform and are rejected by grid-differentiating consumers.

use std::collections::BTreeMap;

use crate::state::PhaseState;

/// Boxed error type for right-hand sides passed to the integrator.
pub type RhsError = Box<dyn std::error::Error + Send + Sync + 'static>;

#[derive(Debug, thiserror::Error)]
pub enum IntegrateError {
    #[error("blow-up at t = {t} (last finite state index {last_index})")]
    BlowUp { t: f64, last_index: usize },
    #[error("invalid time span: t0 = {t0}, t1 = {t1}")]
    InvalidSpan { t0: f64, t1: f64 },
    #[error("invalid step {dt} for span {span}")]
    InvalidStep { dt: f64, span: f64 },
    #[error("right-hand side failed at t = {t}: {source}")]
    Rhs { t: f64, source: RhsError },
}

/// A sampled solution: strictly increasing times with one state per sample.
#[derive(Debug, Clone)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<PhaseState>,
    system_name: String,
    params: BTreeMap<String, f64>,
}

impl Trajectory {
    /// Assemble a trajectory from raw parts. Panics unless there are at
    /// least two samples, counts match, and all states are finite.
    pub fn from_parts(
        times: Vec<f64>,
        states: Vec<PhaseState>,
        system_name: impl Into<String>,
        params: BTreeMap<String, f64>,
    ) -> Self {
        assert!(times.len() == states.len(), "times/states length mismatch");
        assert!(times.len() >= 2, "a trajectory needs at least two samples");
        assert!(times.windows(2).all(|w| w[1] > w[0]), "times must increase");
        assert!(states.iter().all(PhaseState::is_finite), "non-finite state");
        Trajectory {
            times,
            states,
            system_name: system_name.into(),
            params,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[PhaseState] {
        &self.states
    }

    pub fn system_name(&self) -> &str {
        &self.system_name
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    pub fn first(&self) -> &PhaseState {
        &self.states[0]
    }

    pub fn last(&self) -> &PhaseState {
        self.states.last().expect("non-empty by construction")
    }

    /// The grid step when the grid is uniform within `1e-12`, else `None`.
    pub fn uniform_step(&self) -> Option<f64> {
        let dt = self.times[1] - self.times[0];
        let uniform = self
            .times
            .windows(2)
            .all(|w| ((w[1] - w[0]) - dt).abs() <= 1e-12);
        uniform.then_some(dt)
    }
}

fn add_scaled(x: &[f64], k: &[f64], factor: f64) -> Vec<f64> {
    x.iter().zip(k.iter()).map(|(a, b)| a + factor * b).collect()
}

/// One classical four-stage Runge-Kutta step.
pub fn rk4_step<F>(rhs: F, x: &PhaseState, t: f64, dt: f64) -> Result<PhaseState, IntegrateError>
where
    F: Fn(&PhaseState, f64) -> Result<Vec<f64>, RhsError>,
{
    if dt <= 0.0 {
        return Err(IntegrateError::InvalidStep { dt, span: f64::NAN });
    }
    let has_z = x.z().is_some();
    let flat = x.to_flat();
    let eval = |y: &[f64], s: f64| -> Result<Vec<f64>, IntegrateError> {
        let state = PhaseState::from_flat(y, has_z)
            .map_err(|_| IntegrateError::BlowUp { t: s, last_index: 0 })?;
        rhs(&state, s).map_err(|source| IntegrateError::Rhs { t: s, source })
    };

    let k1 = eval(&flat, t)?;
    let k2 = eval(&add_scaled(&flat, &k1, dt / 2.0), t + dt / 2.0)?;
    let k3 = eval(&add_scaled(&flat, &k2, dt / 2.0), t + dt / 2.0)?;
    let k4 = eval(&add_scaled(&flat, &k3, dt), t + dt)?;

    let next: Vec<f64> = flat
        .iter()
        .enumerate()
        .map(|(i, v)| v + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect();
    PhaseState::from_flat(&next, has_z).map_err(|_| IntegrateError::BlowUp { t, last_index: 0 })
}

/// Integrate `rhs` from `t0` to `t1` with fixed step `dt`.
///
/// The grid is `t0 + k dt`; when `dt` does not divide the span, a final
/// shortened step lands on `t1` exactly, giving `ceil(span/dt) + 1` samples.
/// Blow-up reports the time and index of the last finite sample.
pub fn integrate<F>(
    rhs: F,
    x0: &PhaseState,
    t0: f64,
    t1: f64,
    dt: f64,
    system_name: impl Into<String>,
    params: BTreeMap<String, f64>,
) -> Result<Trajectory, IntegrateError>
where
    F: Fn(&PhaseState, f64) -> Result<Vec<f64>, RhsError>,
{
    let span = t1 - t0;
    if !span.is_finite() || span <= 0.0 || !t0.is_finite() {
        return Err(IntegrateError::InvalidSpan { t0, t1 });
    }
    if !dt.is_finite() || dt <= 0.0 || dt > span * (1.0 + 1e-12) {
        return Err(IntegrateError::InvalidStep { dt, span });
    }

    // Count full steps, absorbing representation noise when dt divides span.
    let ratio = span / dt;
    let rounded = ratio.round();
    let (full_steps, short_last) = if (ratio - rounded).abs() <= 1e-9 * rounded.max(1.0) {
        (rounded as usize, false)
    } else {
        (ratio.floor() as usize, true)
    };

    let mut times = Vec::with_capacity(full_steps + 2);
    let mut states = Vec::with_capacity(full_steps + 2);
    times.push(t0);
    states.push(x0.clone());

    let mut current = x0.clone();
    for k in 0..full_steps {
        let t = t0 + k as f64 * dt;
        current = match rk4_step(&rhs, &current, t, dt) {
            Ok(next) if next.is_finite() => next,
            Ok(_) | Err(IntegrateError::BlowUp { .. }) => {
                return Err(IntegrateError::BlowUp { t, last_index: k });
            }
            Err(e) => return Err(e),
        };
        times.push(t0 + (k + 1) as f64 * dt);
        states.push(current.clone());
    }

    if short_last {
        let t = t0 + full_steps as f64 * dt;
        let rest = t1 - t;
        current = match rk4_step(&rhs, &current, t, rest) {
            Ok(next) if next.is_finite() => next,
            Ok(_) | Err(IntegrateError::BlowUp { .. }) => {
                return Err(IntegrateError::BlowUp { t, last_index: full_steps });
            }
            Err(e) => return Err(e),
        };
        times.push(t1);
        states.push(current);
    }

    Ok(Trajectory::from_parts(times, states, system_name, params))
}
