#![allow(dead_code)] // each test binary uses a subset of these oracles

//! Shared oracles for the integration suites. Everything here is an
//! independent route to a value the library also computes: matrix
//! exponentials by scaling-and-squaring, the quartic spectrum in closed
//! form, and direct second-order "newton twin" integrations.

use nalgebra::{Complex, DMatrix, DVector};

/// Matrix exponential by scaling-and-squaring with a Taylor kernel.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let norm = a.iter().fold(0.0_f64, |m, v| m.max(v.abs())) * n as f64;
    let squarings = norm.log2().ceil().max(0.0) as u32 + 2;
    let scaled = a / 2.0_f64.powi(squarings as i32);

    let mut result = DMatrix::identity(n, n);
    let mut term = DMatrix::identity(n, n);
    for k in 1..=20 {
        term = &term * &scaled / k as f64;
        result += &term;
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// Closed-form spectrum of the positional-coupling family
/// `x'' + a y + b x = 0, y'' - a x + b y = 0`: the characteristic quartic
/// `(lambda^2 + b)^2 + a^2 = 0` gives `lambda^2 = -b +- i a`.
pub fn kapitsa_spectrum(a: f64, b: f64) -> Vec<Complex<f64>> {
    let plus = Complex::new(-b, a).sqrt();
    let minus = Complex::new(-b, -a).sqrt();
    vec![plus, -plus, minus, -minus]
}

/// Integrate `qddot = accel(q, qdot, t)` directly with classical RK4 on the
/// doubled state `(q, qdot)`, returning configuration samples.
pub fn newton_twin<F>(accel: F, q0: &[f64], v0: &[f64], t1: f64, dt: f64) -> Vec<Vec<f64>>
where
    F: Fn(&[f64], &[f64], f64) -> Vec<f64>,
{
    let n = q0.len();
    let mut y = DVector::zeros(2 * n);
    for i in 0..n {
        y[i] = q0[i];
        y[n + i] = v0[i];
    }
    let deriv = |y: &DVector<f64>, t: f64| {
        let q: Vec<f64> = (0..n).map(|i| y[i]).collect();
        let v: Vec<f64> = (0..n).map(|i| y[n + i]).collect();
        let a = accel(&q, &v, t);
        let mut dy = DVector::zeros(2 * n);
        for i in 0..n {
            dy[i] = v[i];
            dy[n + i] = a[i];
        }
        dy
    };

    let steps = (t1 / dt).round() as usize;
    let mut out = Vec::with_capacity(steps + 1);
    out.push(q0.to_vec());
    let mut t = 0.0;
    for _ in 0..steps {
        let k1 = deriv(&y, t);
        let k2 = deriv(&(&y + &k1 * (dt / 2.0)), t + dt / 2.0);
        let k3 = deriv(&(&y + &k2 * (dt / 2.0)), t + dt / 2.0);
        let k4 = deriv(&(&y + &k3 * dt), t + dt);
        y += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
        t += dt;
        out.push((0..n).map(|i| y[i]).collect());
    }
    out
}

/// Max over samples of the componentwise configuration gap between two
/// equal-length trajectories of `(x, y, ...)` samples.
pub fn max_config_gap(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    assert_eq!(a.len(), b.len(), "sample counts differ");
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| x.iter().zip(y).map(|(u, v)| (u - v).abs()))
        .fold(0.0_f64, f64::max)
}
