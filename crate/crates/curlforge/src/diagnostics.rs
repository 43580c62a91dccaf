//! Invariant monitors, force classification, volume and conformal checks,
//! and linear stability analysis.
//!
//! Drift reports follow one rule: an invariant passes when its maximum
//! relative drift stays within tolerance, falling back to absolute drift
//! when the initial value is below `1e-8`. Entries that *expect* variation
//! (the azimuthal angular momentum) invert the flag and say so in their
//! name. Stability classification reads only the real parts of the
//! eigenvalues against a `1e-9` threshold; eigenvalues come from a dense
//! general-purpose solver, with the quartic closed form kept to test code
//! as an independent oracle.

use std::collections::BTreeMap;

use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};

use crate::catalog::{FormulationBackend, SystemDefinition};
use crate::contact;
use crate::fd::{self, FdError};
use crate::galley;
use crate::integrate::Trajectory;
use crate::probe;
use crate::state::PhaseState;

/// Real-part threshold separating stable, marginal and unstable spectra.
pub const STABILITY_EPS: f64 = 1e-9;

/// Power threshold for the force classification sign scan.
pub const POWER_EPS: f64 = 1e-10;

#[derive(Debug, thiserror::Error)]
pub enum DiagnosticsError {
    #[error("system '{system}' exposes no '{name}' observable")]
    NoObservable { system: String, name: String },
    #[error("system '{system}' is not supported here: {reason}")]
    Unsupported { system: String, reason: String },
    #[error("empty input series")]
    EmptyInput,
    #[error("right-hand side evaluation failed: {0}")]
    Rhs(String),
    #[error(transparent)]
    Fd(#[from] FdError),
}

/// One monitored invariant along a trajectory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InvariantEntry {
    pub name: String,
    pub initial: f64,
    pub max_abs_drift: f64,
    pub max_rel_drift: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Per-system invariant suite with an overall verdict.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InvariantReport {
    pub system: String,
    pub params: BTreeMap<String, f64>,
    pub invariants: Vec<InvariantEntry>,
    pub verdict: String,
}

impl InvariantReport {
    pub fn all_pass(&self) -> bool {
        self.invariants.iter().all(|e| e.pass)
    }
}

fn drift_stats(series: &[f64]) -> (f64, f64, f64) {
    let initial = series[0];
    let max_abs = series
        .iter()
        .map(|v| (v - initial).abs())
        .fold(0.0_f64, f64::max);
    let max_rel = if initial.abs() >= 1e-8 {
        max_abs / initial.abs()
    } else {
        max_abs
    };
    (initial, max_abs, max_rel)
}

fn conservation_entry(name: &str, series: &[f64], tolerance: f64) -> InvariantEntry {
    let (initial, max_abs, max_rel) = drift_stats(series);
    InvariantEntry {
        name: name.to_string(),
        initial,
        max_abs_drift: max_abs,
        max_rel_drift: max_rel,
        tolerance,
        pass: max_rel <= tolerance,
    }
}

/// Evaluate a named observable along a trajectory.
pub fn observable_series(
    sys: &SystemDefinition,
    name: &str,
    traj: &Trajectory,
) -> Result<Vec<f64>, DiagnosticsError> {
    let field = sys
        .observable(name)
        .ok_or_else(|| DiagnosticsError::NoObservable {
            system: sys.name().to_string(),
            name: name.to_string(),
        })?;
    Ok(traj
        .states()
        .iter()
        .zip(traj.times())
        .map(|(state, &t)| field.eval(&state.to_flat(), t))
        .collect())
}

/// Energy along a trajectory.
pub fn energy_series(sys: &SystemDefinition, traj: &Trajectory) -> Result<Vec<f64>, DiagnosticsError> {
    observable_series(sys, "energy", traj)
}

/// Angular momentum `x ydot - y xdot` along a trajectory, velocities through
/// the entry's momentum map. 2D systems only.
pub fn angular_momentum_series(
    sys: &SystemDefinition,
    traj: &Trajectory,
) -> Result<Vec<f64>, DiagnosticsError> {
    if sys.base_dim() != 2 {
        return Err(DiagnosticsError::Unsupported {
            system: sys.name().to_string(),
            reason: "angular momentum needs a 2D configuration space".into(),
        });
    }
    let map = sys.velocity_map();
    Ok(traj
        .states()
        .iter()
        .map(|state| {
            let v = map.velocity(state.q(), state.p());
            state.q()[0] * v[1] - state.q()[1] * v[0]
        })
        .collect())
}

fn flat_rhs(sys: &SystemDefinition) -> impl Fn(&[f64], f64) -> Vec<f64> + '_ {
    let has_z = sys.has_z();
    move |flat, t| {
        PhaseState::from_flat(flat, has_z)
            .ok()
            .and_then(|state| sys.rhs(&state, t).ok())
            .unwrap_or_else(|| vec![f64::NAN; flat.len()])
    }
}

/// Phase-space divergence of the flow at a state: the trace of the
/// finite-difference Jacobian of the right-hand side.
pub fn divergence(sys: &SystemDefinition, state: &PhaseState, t: f64) -> Result<f64, DiagnosticsError> {
    let flat = state.to_flat();
    let jac = fd::fd_jacobian(flat_rhs(sys), &flat, t, fd::default_step(&flat))?;
    Ok(jac.trace())
}

fn symplectic_pairing(n: usize, u: &[f64], w: &[f64]) -> f64 {
    (0..n).map(|i| u[i] * w[n + i] - u[n + i] * w[i]).sum()
}

/// Evolve a state plus two tangent vectors under the variational flow and
/// return the symplectic-area ratio `Omega(v1(T), v2(T)) / Omega(v1(0), v2(0))`.
///
/// For the conformal family with constant damping `gamma` the exact value is
/// `exp(-gamma T)`. Only that family is accepted.
pub fn conformal_factor_check(
    sys: &SystemDefinition,
    x0: &PhaseState,
    v1: &[f64],
    v2: &[f64],
    t_final: f64,
    dt: f64,
) -> Result<f64, DiagnosticsError> {
    if sys.name() != "conformal_curl" {
        return Err(DiagnosticsError::Unsupported {
            system: sys.name().to_string(),
            reason: "tangent-pair conformal scaling applies to conformal_curl".into(),
        });
    }
    let dim = sys.dim();
    let n = sys.base_dim();
    let rhs = flat_rhs(sys);

    // Augmented flow: state plus two tangent copies driven by the Jacobian.
    let augmented = |y: &[f64], t: f64| -> Result<Vec<f64>, DiagnosticsError> {
        let state = &y[..dim];
        let base = rhs(state, t);
        if base.iter().any(|v| !v.is_finite()) {
            return Err(DiagnosticsError::Rhs("non-finite flow".into()));
        }
        let jac = fd::fd_jacobian(&rhs, state, t, fd::default_step(state))?;
        let mut out = base;
        for copy in 0..2 {
            let tangent = &y[dim * (copy + 1)..dim * (copy + 2)];
            for i in 0..dim {
                let mut acc = 0.0;
                for j in 0..dim {
                    acc += jac[(i, j)] * tangent[j];
                }
                out.push(acc);
            }
        }
        Ok(out)
    };

    let mut y: Vec<f64> = x0.to_flat();
    y.extend_from_slice(v1);
    y.extend_from_slice(v2);
    let initial = symplectic_pairing(n, v1, v2);
    if initial.abs() < 1e-14 {
        return Err(DiagnosticsError::EmptyInput);
    }

    let steps = (t_final / dt).round() as usize;
    let mut t = 0.0;
    for _ in 0..steps {
        let k1 = augmented(&y, t)?;
        let y2: Vec<f64> = y.iter().zip(&k1).map(|(a, b)| a + 0.5 * dt * b).collect();
        let k2 = augmented(&y2, t + 0.5 * dt)?;
        let y3: Vec<f64> = y.iter().zip(&k2).map(|(a, b)| a + 0.5 * dt * b).collect();
        let k3 = augmented(&y3, t + 0.5 * dt)?;
        let y4: Vec<f64> = y.iter().zip(&k3).map(|(a, b)| a + dt * b).collect();
        let k4 = augmented(&y4, t + dt)?;
        for i in 0..y.len() {
            y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        t += dt;
    }

    let final_pairing = symplectic_pairing(n, &y[dim..2 * dim], &y[2 * dim..]);
    Ok(final_pairing / initial)
}

/// Thomson-Tait style force classification from the sign pattern of the
/// power `F . qdot` along a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PowerClass {
    Gyroscopic,
    Dissipative,
    Accelerating,
    Indefinite,
}

impl std::fmt::Display for PowerClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            PowerClass::Gyroscopic => "gyroscopic",
            PowerClass::Dissipative => "dissipative",
            PowerClass::Accelerating => "accelerating",
            PowerClass::Indefinite => "indefinite",
        };
        f.write_str(s)
    }
}

/// Classify force samples against velocity samples.
pub fn power_classification(
    forces: &[Vec<f64>],
    velocities: &[Vec<f64>],
) -> Result<PowerClass, DiagnosticsError> {
    power_classification_with_threshold(forces, velocities, POWER_EPS)
}

pub fn power_classification_with_threshold(
    forces: &[Vec<f64>],
    velocities: &[Vec<f64>],
    eps: f64,
) -> Result<PowerClass, DiagnosticsError> {
    if forces.is_empty() || forces.len() != velocities.len() {
        return Err(DiagnosticsError::EmptyInput);
    }
    let mut positive = false;
    let mut negative = false;
    for (f, v) in forces.iter().zip(velocities) {
        let power: f64 = f.iter().zip(v).map(|(a, b)| a * b).sum();
        if power > eps {
            positive = true;
        } else if power < -eps {
            negative = true;
        }
    }
    Ok(match (positive, negative) {
        (false, false) => PowerClass::Gyroscopic,
        (false, true) => PowerClass::Dissipative,
        (true, false) => PowerClass::Accelerating,
        (true, true) => PowerClass::Indefinite,
    })
}

/// Spectral classification by real parts only, threshold [`STABILITY_EPS`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StabilityClass {
    StableCenter,
    Unstable,
    AsymptoticallyStable,
    Marginal,
}

impl std::fmt::Display for StabilityClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            StabilityClass::StableCenter => "stable-center",
            StabilityClass::Unstable => "unstable",
            StabilityClass::AsymptoticallyStable => "asymptotically-stable",
            StabilityClass::Marginal => "marginal",
        };
        f.write_str(s)
    }
}

/// Linearization of a linear-family system with its spectrum.
#[derive(Debug, Clone)]
pub struct StabilityResult {
    pub matrix: DMatrix<f64>,
    pub eigenvalues: Vec<Complex<f64>>,
    pub max_real_part: f64,
    pub classification: StabilityClass,
}

impl StabilityResult {
    /// Largest normalized characteristic-polynomial residual
    /// `|det(A - lambda I)|` over the reported eigenvalues.
    pub fn char_poly_residual(&self) -> f64 {
        let n = self.matrix.nrows();
        let scale: f64 = self
            .eigenvalues
            .iter()
            .map(|l| l.norm().max(1.0))
            .product::<f64>();
        self.eigenvalues
            .iter()
            .map(|lambda| {
                let shifted = self.matrix.map(Complex::from) - DMatrix::identity(n, n) * *lambda;
                shifted.determinant().norm() / scale
            })
            .fold(0.0_f64, f64::max)
    }
}

pub fn classify_spectrum(eigenvalues: &[Complex<f64>], eps: f64) -> (f64, StabilityClass) {
    let max_re = eigenvalues.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max);
    let min_re = eigenvalues.iter().map(|l| l.re).fold(f64::INFINITY, f64::min);
    let class = if max_re > eps {
        StabilityClass::Unstable
    } else if max_re < -eps {
        StabilityClass::AsymptoticallyStable
    } else if min_re >= -eps {
        StabilityClass::StableCenter
    } else {
        StabilityClass::Marginal
    };
    (max_re, class)
}

/// First-order matrix of the linear catalog families on `(x, y, p_x, p_y)`.
///
/// Supported: `kapitsa`, `gyro_dissipative_km`, and `galley_forced_km` with
/// zero forcing. Everything else errors as nonlinear.
pub fn linear_family_matrix(sys: &SystemDefinition) -> Result<DMatrix<f64>, DiagnosticsError> {
    let p = sys.params();
    let rows: [[f64; 4]; 4] = match sys.name() {
        "kapitsa" => {
            let (a, b) = (p["a"], p["b"]);
            [
                [0.0, 0.0, 1.0, 0.0],
                [0.0, 0.0, 0.0, -1.0],
                [-b, -a, 0.0, 0.0],
                [-a, b, 0.0, 0.0],
            ]
        }
        "gyro_dissipative_km" => {
            let (a, b, s, c) = (p["a"], p["b"], p["s"], p["c"]);
            [
                [0.0, 0.0, 1.0, 0.0],
                [0.0, 0.0, 0.0, -1.0],
                [-b, -a, c, s],
                [-a, b, -s, c],
            ]
        }
        "galley_forced_km" => {
            if p["f_x"] != 0.0 || p["f_y"] != 0.0 {
                return Err(DiagnosticsError::Unsupported {
                    system: sys.name().to_string(),
                    reason: "linear stability needs zero forcing".into(),
                });
            }
            let (a, b, k) = (p["a"], p["b"], p["kappa"]);
            [
                [0.0, 0.0, 1.0, 0.0],
                [0.0, 0.0, 0.0, -1.0],
                [-b, -a, -k, 0.0],
                [-a, b, 0.0, -k],
            ]
        }
        other => {
            return Err(DiagnosticsError::Unsupported {
                system: other.to_string(),
                reason: "not in the linear stability family".into(),
            })
        }
    };
    Ok(DMatrix::from_fn(4, 4, |i, j| rows[i][j]))
}

/// Assemble the constant linearization and classify its spectrum.
pub fn linear_stability(sys: &SystemDefinition) -> Result<StabilityResult, DiagnosticsError> {
    linear_stability_with_threshold(sys, STABILITY_EPS)
}

pub fn linear_stability_with_threshold(
    sys: &SystemDefinition,
    eps: f64,
) -> Result<StabilityResult, DiagnosticsError> {
    let matrix = linear_family_matrix(sys)?;
    let eigenvalues: Vec<Complex<f64>> = matrix.complex_eigenvalues().iter().copied().collect();
    let (max_real_part, classification) = classify_spectrum(&eigenvalues, eps);
    Ok(StabilityResult {
        matrix,
        eigenvalues,
        max_real_part,
        classification,
    })
}

fn fd_slope(series: &[f64], dt: f64) -> Vec<f64> {
    (1..series.len() - 1)
        .map(|k| (series[k + 1] - series[k - 1]) / (2.0 * dt))
        .collect()
}

fn rate_match_entry(
    name: &str,
    series: &[f64],
    rates: &[f64],
    dt: f64,
    tolerance: f64,
) -> InvariantEntry {
    let slopes = fd_slope(series, dt);
    let interior = &rates[1..rates.len() - 1];
    let scale = interior
        .iter()
        .map(|r| r.abs())
        .fold(0.0_f64, f64::max)
        .max(1e-12);
    let max_abs = slopes
        .iter()
        .zip(interior)
        .map(|(s, r)| (s - r).abs())
        .fold(0.0_f64, f64::max);
    let max_rel = max_abs / scale;
    InvariantEntry {
        name: name.to_string(),
        initial: rates[0],
        max_abs_drift: max_abs,
        max_rel_drift: max_rel,
        tolerance,
        pass: max_rel <= tolerance,
    }
}

fn divergence_entry(sys: &SystemDefinition, tolerance: f64) -> Result<InvariantEntry, DiagnosticsError> {
    let mut worst = 0.0_f64;
    for flat in probe::probe_points(sys.dim()) {
        let state = PhaseState::from_flat(&flat, sys.has_z())
            .map_err(|e| DiagnosticsError::Rhs(e.to_string()))?;
        worst = worst.max(divergence(sys, &state, 0.0)?.abs());
    }
    Ok(InvariantEntry {
        name: "phase_volume_divergence".to_string(),
        initial: 0.0,
        max_abs_drift: worst,
        max_rel_drift: worst,
        tolerance,
        pass: worst <= tolerance,
    })
}

fn gyro_power_entry(sys: &SystemDefinition, traj: &Trajectory) -> InvariantEntry {
    let s = sys.params()["s"];
    let map = sys.velocity_map();
    let (forces, velocities): (Vec<_>, Vec<_>) = traj
        .states()
        .iter()
        .map(|state| {
            let v = map.velocity(state.q(), state.p());
            (vec![-s * v[1], s * v[0]], v)
        })
        .unzip();
    let worst = forces
        .iter()
        .zip(&velocities)
        .map(|(f, v)| f.iter().zip(v).map(|(a, b)| a * b).sum::<f64>().abs())
        .fold(0.0_f64, f64::max);
    let class = power_classification(&forces, &velocities).unwrap_or(PowerClass::Indefinite);
    InvariantEntry {
        name: "gyroscopic_power_zero".to_string(),
        initial: 0.0,
        max_abs_drift: worst,
        max_rel_drift: worst,
        tolerance: POWER_EPS,
        pass: class == PowerClass::Gyroscopic,
    }
}

/// The invariant suite applicable to a catalog system, evaluated along a
/// trajectory of that system.
pub fn invariant_report(
    sys: &SystemDefinition,
    traj: &Trajectory,
) -> Result<InvariantReport, DiagnosticsError> {
    let mut invariants = Vec::new();
    let dt = traj.uniform_step();

    match sys.name() {
        "radial_curl" => {
            invariants.push(conservation_entry("energy", &energy_series(sys, traj)?, 1e-7));
            invariants.push(conservation_entry(
                "angular_momentum",
                &angular_momentum_series(sys, traj)?,
                1e-7,
            ));
            invariants.push(divergence_entry(sys, 1e-10)?);
        }
        "azimuthal_curl" => {
            invariants.push(conservation_entry("energy", &energy_series(sys, traj)?, 1e-7));
            let series = angular_momentum_series(sys, traj)?;
            let (initial, max_abs, _) = drift_stats(&series);
            invariants.push(InvariantEntry {
                name: "angular_momentum (not conserved, expected)".to_string(),
                initial,
                max_abs_drift: max_abs,
                max_rel_drift: max_abs,
                tolerance: 1e-2,
                pass: max_abs > 1e-2,
            });
            invariants.push(divergence_entry(sys, 1e-10)?);
        }
        "kapitsa" => {
            invariants.push(conservation_entry("energy", &energy_series(sys, traj)?, 1e-7));
            invariants.push(divergence_entry(sys, 1e-10)?);
        }
        "rotating_saddle" => {
            invariants.push(divergence_entry(sys, 1e-10)?);
        }
        "bateman_metriplectic" | "conformal_curl" => {
            let FormulationBackend::Metriplectic { structure } = sys.backend() else {
                unreachable!("metriplectic entries carry a metriplectic backend");
            };
            let dt = dt.ok_or(DiagnosticsError::EmptyInput)?;
            let series = energy_series(sys, traj)?;
            let rates: Vec<f64> = traj
                .states()
                .iter()
                .zip(traj.times())
                .map(|(state, &t)| {
                    let mut lifted = state.to_flat();
                    lifted.push(1.0);
                    crate::brackets::metriplectic_energy_rate(structure, &lifted, t)
                        .map_err(|e| DiagnosticsError::Rhs(e.to_string()))
                })
                .collect::<Result<_, _>>()?;
            invariants.push(rate_match_entry(
                "metriplectic_energy_rate",
                &series,
                &rates,
                dt,
                1e-6,
            ));
            if sys.name() == "bateman_metriplectic" {
                let max_increase = series
                    .windows(2)
                    .map(|w| w[1] - w[0])
                    .fold(0.0_f64, f64::max);
                invariants.push(InvariantEntry {
                    name: "energy_nonincreasing".to_string(),
                    initial: series[0],
                    max_abs_drift: max_increase.max(0.0),
                    max_rel_drift: max_increase.max(0.0),
                    tolerance: 1e-12,
                    pass: max_increase <= 1e-12,
                });
            } else {
                let gamma = sys.params()["gamma"];
                let ratio = conformal_factor_check(
                    sys,
                    traj.first(),
                    &[1.0, 0.0, 0.0, 0.0],
                    &[0.0, 0.0, 1.0, 0.0],
                    1.0,
                    1e-3,
                )?;
                let expected = (-gamma).exp();
                let deviation = (ratio / expected - 1.0).abs();
                invariants.push(InvariantEntry {
                    name: "conformal_area_ratio".to_string(),
                    initial: expected,
                    max_abs_drift: (ratio - expected).abs(),
                    max_rel_drift: deviation,
                    tolerance: 1e-4,
                    pass: deviation <= 1e-4,
                });
            }
        }
        "gyro_curl" | "gyro_dissipative_km" => {
            invariants.push(gyro_power_entry(sys, traj));
        }
        "contact_radial" | "contact_km" => {
            let FormulationBackend::Contact { system } = sys.backend() else {
                unreachable!("contact entries carry a contact backend");
            };
            let dt = dt.ok_or(DiagnosticsError::EmptyInput)?;
            let series = contact::herglotz_invariant_series(system, traj)
                .map_err(|e| DiagnosticsError::Rhs(e.to_string()))?;
            invariants.push(conservation_entry("herglotz_invariant", &series, 1e-6));

            let h_series = energy_series(sys, traj)?;
            let rates: Vec<f64> = traj
                .states()
                .iter()
                .zip(traj.times())
                .map(|(state, &t)| {
                    contact::contact_energy_rate(system, state, t)
                        .map_err(|e| DiagnosticsError::Rhs(e.to_string()))
                })
                .collect::<Result<_, _>>()?;
            invariants.push(rate_match_entry(
                "contact_energy_rate",
                &h_series,
                &rates,
                dt,
                1e-4,
            ));
        }
        "galley_bateman" | "galley_forced_km" => {
            let FormulationBackend::Galley { system } = sys.backend() else {
                unreachable!("galley entries carry a galley backend");
            };
            let dt = dt.ok_or(DiagnosticsError::EmptyInput)?;
            let series = energy_series(sys, traj)?;
            let rates: Vec<f64> = traj
                .states()
                .iter()
                .zip(traj.times())
                .map(|(state, &t)| {
                    let velocity = galley::galley_rhs(system, state, t)
                        .map_err(|e| DiagnosticsError::Rhs(e.to_string()))?;
                    galley::galley_energy_rate(system, state, &velocity, t)
                        .map_err(|e| DiagnosticsError::Rhs(e.to_string()))
                })
                .collect::<Result<_, _>>()?;
            invariants.push(rate_match_entry(
                "galley_energy_rate",
                &series,
                &rates,
                dt,
                1e-4,
            ));
        }
        other => {
            return Err(DiagnosticsError::Unsupported {
                system: other.to_string(),
                reason: "no invariant suite registered".into(),
            })
        }
    }

    let verdict = if invariants.iter().all(|e| e.pass) {
        "pass".to_string()
    } else {
        "fail".to_string()
    };
    Ok(InvariantReport {
        system: sys.name().to_string(),
        params: sys.params().clone(),
        invariants,
        verdict,
    })
}
