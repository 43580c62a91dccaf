//! Central-difference derivative oracles.
//!
//! These serve as ground truth for every partial derivative in the crate:
//! analytic gradients are validated against them, bracket contractions fall
//! back to them, and the Jacobi-defect and divergence diagnostics are built
//! on them. Central differences carry an `O(h^2)` truncation error; the
//! default step `h = 1e-6 * max(1, |x|_inf)` balances truncation against
//! roundoff in double precision.

use nalgebra::DMatrix;

use crate::state::ForceField2D;

/// Errors raised when a stencil evaluation leaves the function's domain.
#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum FdError {
    #[error(
        "evaluation domain error: non-finite value perturbing coordinate {coord} by {offset:+e}"
    )]
    NonFinite { coord: usize, offset: f64 },
    #[error("step size must be positive, got {0}")]
    NonPositiveStep(f64),
}

/// Default central-difference step for a state: `1e-6 * max(1, |x|_inf)`.
pub fn default_step(x: &[f64]) -> f64 {
    let inf = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    1e-6 * inf.max(1.0)
}

/// Central-difference gradient of `f` at `x`, error `O(h^2)`.
pub fn fd_gradient(
    f: impl Fn(&[f64], f64) -> f64,
    x: &[f64],
    t: f64,
    h: f64,
) -> Result<Vec<f64>, FdError> {
    if h <= 0.0 {
        return Err(FdError::NonPositiveStep(h));
    }
    let mut grad = Vec::with_capacity(x.len());
    let mut work = x.to_vec();
    for i in 0..x.len() {
        work[i] = x[i] + h;
        let plus = f(&work, t);
        if !plus.is_finite() {
            return Err(FdError::NonFinite { coord: i, offset: h });
        }
        work[i] = x[i] - h;
        let minus = f(&work, t);
        if !minus.is_finite() {
            return Err(FdError::NonFinite { coord: i, offset: -h });
        }
        work[i] = x[i];
        grad.push((plus - minus) / (2.0 * h));
    }
    Ok(grad)
}

/// Central-difference Jacobian of a vector field; column `j` is the
/// derivative of `v` along coordinate `j`.
pub fn fd_jacobian(
    v: impl Fn(&[f64], f64) -> Vec<f64>,
    x: &[f64],
    t: f64,
    h: f64,
) -> Result<DMatrix<f64>, FdError> {
    if h <= 0.0 {
        return Err(FdError::NonPositiveStep(h));
    }
    let n = x.len();
    let mut work = x.to_vec();
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut rows = 0;
    for j in 0..n {
        work[j] = x[j] + h;
        let plus = v(&work, t);
        if plus.iter().any(|c| !c.is_finite()) {
            return Err(FdError::NonFinite { coord: j, offset: h });
        }
        work[j] = x[j] - h;
        let minus = v(&work, t);
        if minus.iter().any(|c| !c.is_finite()) {
            return Err(FdError::NonFinite { coord: j, offset: -h });
        }
        work[j] = x[j];
        rows = plus.len();
        columns.push(
            plus.iter()
                .zip(minus.iter())
                .map(|(a, b)| (a - b) / (2.0 * h))
                .collect(),
        );
    }
    Ok(DMatrix::from_fn(rows, n, |i, j| columns[j][i]))
}

/// Scalar curl `dF_y/dx - dF_x/dy` of a planar force field by central
/// differences (the k-component of the 3D curl).
pub fn curl2d(field: &ForceField2D, x: f64, y: f64, t: f64) -> Result<f64, FdError> {
    let h = default_step(&[x, y]);
    let probe = |coord: usize, offset: f64| -> Result<(f64, f64), FdError> {
        let (px, py) = if coord == 0 { (x + offset, y) } else { (x, y + offset) };
        let value = field.eval(px, py, t);
        if value.0.is_finite() && value.1.is_finite() {
            Ok(value)
        } else {
            Err(FdError::NonFinite { coord, offset })
        }
    };
    let (_, fy_xp) = probe(0, h)?;
    let (_, fy_xm) = probe(0, -h)?;
    let (fx_yp, _) = probe(1, h)?;
    let (fx_ym, _) = probe(1, -h)?;
    Ok((fy_xp - fy_xm) / (2.0 * h) - (fx_yp - fx_ym) / (2.0 * h))
}
