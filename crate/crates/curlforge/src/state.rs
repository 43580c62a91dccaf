//! Phase-space state types and evaluatable field abstractions.
//!
//! A [`PhaseState`] is a position/momentum pair, optionally extended by the
//! action variable `z` used by contact systems. All field types evaluate on
//! the *flat* coordinate layout `[q_1..q_n, p_1..p_n, z?]`, so the same
//! [`ScalarField`] machinery serves Hamiltonians, entropy functions,
//! Lagrangians and observables alike. Fields are time-dependent by
//! signature; autonomous fields simply ignore `t`.

use std::fmt;
use std::sync::Arc;

use crate::fd;
use crate::probe;

/// Errors raised by state construction and field validation.
#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum StateError {
    #[error("dimension mismatch: dim(q) = {dim_q} but dim(p) = {dim_p}")]
    DimensionMismatch { dim_q: usize, dim_p: usize },
    #[error("non-finite component in state")]
    NonFinite,
    #[error(
        "analytic gradient of '{label}' deviates from central differences at probe {probe} \
         coordinate {coord}: analytic {analytic:e}, fd {fd:e}"
    )]
    GradientMismatch {
        label: String,
        probe: usize,
        coord: usize,
        analytic: f64,
        fd: f64,
    },
    #[error(transparent)]
    Fd(#[from] fd::FdError),
}

/// Position/momentum state, optionally carrying the Herglotz action `z`.
///
/// `z` is present exactly when the owning system is a contact system.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseState {
    q: Vec<f64>,
    p: Vec<f64>,
    z: Option<f64>,
}

impl PhaseState {
    /// A plain `(q, p)` state. Errors if dimensions disagree or any
    /// component is non-finite.
    pub fn new(q: Vec<f64>, p: Vec<f64>) -> Result<Self, StateError> {
        Self::build(q, p, None)
    }

    /// A contact state `(q, p, z)`.
    pub fn with_z(q: Vec<f64>, p: Vec<f64>, z: f64) -> Result<Self, StateError> {
        Self::build(q, p, Some(z))
    }

    fn build(q: Vec<f64>, p: Vec<f64>, z: Option<f64>) -> Result<Self, StateError> {
        if q.len() != p.len() {
            return Err(StateError::DimensionMismatch {
                dim_q: q.len(),
                dim_p: p.len(),
            });
        }
        let finite = q.iter().chain(p.iter()).all(|v| v.is_finite())
            && z.is_none_or(f64::is_finite);
        if !finite {
            return Err(StateError::NonFinite);
        }
        Ok(PhaseState { q, p, z })
    }

    /// Reassemble a state from the flat layout `[q.., p.., z?]`.
    pub fn from_flat(flat: &[f64], has_z: bool) -> Result<Self, StateError> {
        let body = if has_z { flat.len() - 1 } else { flat.len() };
        let n = body / 2;
        let q = flat[..n].to_vec();
        let p = flat[n..2 * n].to_vec();
        let z = if has_z { Some(flat[2 * n]) } else { None };
        Self::build(q, p, z)
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn z(&self) -> Option<f64> {
        self.z
    }

    /// Base (configuration-space) dimension `n`.
    pub fn base_dim(&self) -> usize {
        self.q.len()
    }

    /// Flat dimension: `2n`, or `2n + 1` when `z` is present.
    pub fn dim(&self) -> usize {
        2 * self.q.len() + usize::from(self.z.is_some())
    }

    /// Coordinates in the flat layout `[q.., p.., z?]`.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut flat = Vec::with_capacity(self.dim());
        flat.extend_from_slice(&self.q);
        flat.extend_from_slice(&self.p);
        if let Some(z) = self.z {
            flat.push(z);
        }
        flat
    }

    pub fn is_finite(&self) -> bool {
        self.q.iter().chain(self.p.iter()).all(|v| v.is_finite())
            && self.z.is_none_or(f64::is_finite)
    }
}

impl fmt::Display for PhaseState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "q={:?} p={:?}", self.q, self.p)?;
        if let Some(z) = self.z {
            write!(f, " z={z}")?;
        }
        Ok(())
    }
}

type EvalFn = dyn Fn(&[f64], f64) -> f64 + Send + Sync;
type GradFn = dyn Fn(&[f64], f64) -> Vec<f64> + Send + Sync;

/// An evaluatable scalar function of the flat state and time, with an
/// optional analytic gradient over all state coordinates.
///
/// When an analytic gradient is attached it must agree with the
/// central-difference oracle to relative tolerance `1e-5` on the fixed
/// 32-point probe set; [`ScalarField::check_gradient`] verifies this.
#[derive(Clone)]
pub struct ScalarField {
    label: String,
    eval: Arc<EvalFn>,
    grad: Option<Arc<GradFn>>,
}

impl ScalarField {
    pub fn new(
        label: impl Into<String>,
        eval: impl Fn(&[f64], f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        ScalarField {
            label: label.into(),
            eval: Arc::new(eval),
            grad: None,
        }
    }

    pub fn with_grad(
        label: impl Into<String>,
        eval: impl Fn(&[f64], f64) -> f64 + Send + Sync + 'static,
        grad: impl Fn(&[f64], f64) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        ScalarField {
            label: label.into(),
            eval: Arc::new(eval),
            grad: Some(Arc::new(grad)),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, x: &[f64], t: f64) -> f64 {
        (self.eval)(x, t)
    }

    pub fn has_grad(&self) -> bool {
        self.grad.is_some()
    }

    /// Gradient over all flat coordinates: analytic when available,
    /// central differences otherwise.
    pub fn gradient(&self, x: &[f64], t: f64) -> Result<Vec<f64>, fd::FdError> {
        match &self.grad {
            Some(g) => Ok(g(x, t)),
            None => fd::fd_gradient(|y, s| self.eval(y, s), x, t, fd::default_step(x)),
        }
    }

    /// Verify the analytic gradient against central differences on the
    /// fixed probe set (relative tolerance `1e-5`, floor 1).
    ///
    /// A field without an analytic gradient passes trivially.
    pub fn check_gradient(&self, dim: usize) -> Result<(), StateError> {
        let Some(grad) = &self.grad else {
            return Ok(());
        };
        for (k, point) in probe::probe_points(dim).iter().enumerate() {
            let analytic = grad(point, 0.0);
            let numeric = fd::fd_gradient(|y, s| self.eval(y, s), point, 0.0, fd::default_step(point))?;
            for i in 0..dim {
                let scale = analytic[i].abs().max(1.0);
                if (analytic[i] - numeric[i]).abs() > 1e-5 * scale {
                    return Err(StateError::GradientMismatch {
                        label: self.label.clone(),
                        probe: k,
                        coord: i,
                        analytic: analytic[i],
                        fd: numeric[i],
                    });
                }
            }
        }
        Ok(())
    }
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("label", &self.label)
            .field("analytic_grad", &self.grad.is_some())
            .finish()
    }
}

type Force2DFn = dyn Fn(f64, f64, f64) -> (f64, f64) + Send + Sync;

/// A planar force field `(x, y, t) -> (F_x, F_y)`.
#[derive(Clone)]
pub struct ForceField2D {
    components: Arc<Force2DFn>,
}

impl fmt::Debug for ForceField2D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("ForceField2D")
    }
}

impl ForceField2D {
    pub fn new(components: impl Fn(f64, f64, f64) -> (f64, f64) + Send + Sync + 'static) -> Self {
        ForceField2D {
            components: Arc::new(components),
        }
    }

    pub fn eval(&self, x: f64, y: f64, t: f64) -> (f64, f64) {
        (self.components)(x, y, t)
    }
}
