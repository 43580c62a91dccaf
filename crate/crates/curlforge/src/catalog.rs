//! The named systems: parameterized definitions with documented defaults,
//! each tagged by the formulation that generates its right-hand side.
//!
//! Every entry's flow is assembled from the owning formulation module
//! (brackets, contact, galley) rather than hand-coded, so the catalog is a
//! thin layer of Hamiltonians, entropies and kernels over the geometric
//! machinery. Second-order "newton twin" forms exist only in test code as
//! independent cross-checks.
//!
//! Momentum/velocity conventions: the anisotropic kinetic term
//! `(p_x^2 - p_y^2)/2` makes `xdot = p_x` and `ydot = -p_y`. Entries whose
//! dissipation sits on the position legs (`bateman_metriplectic`) shift
//! that map by `-gamma q`. Equivalence comparisons therefore always match
//! *configuration* trajectories, mapping initial velocities through each
//! entry's own relation.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::brackets::{
    self, canonical_bivector, heisenberg_bivector, BracketError, GyroMetriplecticCoefficients,
    HeisenbergStructure, MetriplecticStructure,
};
use crate::contact::{self, ContactError, ContactSystem};
use crate::galley::{self, GalleyError, GalleySystem};
use crate::integrate::{self, IntegrateError, Trajectory};
use crate::state::{ForceField2D, PhaseState, ScalarField, StateError};

#[derive(Debug, thiserror::Error)]
pub enum CatalogError {
    #[error("unknown system '{0}'")]
    UnknownSystem(String),
    #[error("system '{system}' is missing parameter '{name}'")]
    MissingParam { system: String, name: String },
    #[error("system '{system}' does not take parameter '{name}'")]
    UnexpectedParam { system: String, name: String },
    #[error("system '{system}' requires a potential choice")]
    PotentialRequired { system: String },
    #[error("system '{system}' does not take a potential")]
    UnexpectedPotential { system: String },
    #[error("state has dim {got}, system '{system}' expects {expected}")]
    StateDimension {
        system: String,
        expected: usize,
        got: usize,
    },
    #[error(transparent)]
    Bracket(#[from] BracketError),
    #[error(transparent)]
    Contact(#[from] ContactError),
    #[error(transparent)]
    Galley(#[from] GalleyError),
    #[error(transparent)]
    Field(#[from] StateError),
}

/// Potential profile `U(xi)` for the entries built on a saddle or product
/// invariant `xi`.
#[derive(Clone)]
pub enum Potential {
    /// `U(xi) = xi` (degenerate: the induced force is curl-free).
    Linear,
    /// `U(xi) = xi^2 / 2`, the default.
    Quadratic,
    /// Arbitrary profile with its derivative.
    Custom {
        u: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        du: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
}

impl Potential {
    pub fn eval(&self, xi: f64) -> f64 {
        match self {
            Potential::Linear => xi,
            Potential::Quadratic => 0.5 * xi * xi,
            Potential::Custom { u, .. } => u(xi),
        }
    }

    pub fn deriv(&self, xi: f64) -> f64 {
        match self {
            Potential::Linear => 1.0,
            Potential::Quadratic => xi,
            Potential::Custom { du, .. } => du(xi),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Potential::Linear => "linear",
            Potential::Quadratic => "quadratic",
            Potential::Custom { .. } => "custom",
        }
    }
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Potential::{}", self.name())
    }
}

/// Formulation generating an entry's right-hand side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formulation {
    Hamiltonian,
    Metriplectic,
    Gyro,
    GyroMetriplectic,
    Contact,
    Galley,
    Newton,
}

impl fmt::Display for Formulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self {
            Formulation::Hamiltonian => "hamiltonian",
            Formulation::Metriplectic => "metriplectic",
            Formulation::Gyro => "gyro",
            Formulation::GyroMetriplectic => "gyro_metriplectic",
            Formulation::Contact => "contact",
            Formulation::Galley => "galley",
            Formulation::Newton => "newton",
        };
        f.write_str(tag)
    }
}

/// How configuration velocities relate to momenta for an entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VelocityMap {
    /// `xdot = p_x`, `ydot = -p_y` (anisotropic kinetic term).
    Anisotropic,
    /// Anisotropic shifted by position dissipation:
    /// `xdot = p_x - gamma x`, `ydot = -p_y - gamma y`.
    Shifted { gamma: f64 },
    /// `qdot = p` componentwise (plain Newtonian entries, 1D entries).
    Identity,
}

impl VelocityMap {
    /// Configuration velocity of a state.
    pub fn velocity(&self, q: &[f64], p: &[f64]) -> Vec<f64> {
        match self {
            VelocityMap::Anisotropic => vec![p[0], -p[1]],
            VelocityMap::Shifted { gamma } => {
                vec![p[0] - gamma * q[0], -p[1] - gamma * q[1]]
            }
            VelocityMap::Identity => p.to_vec(),
        }
    }

    /// Momenta realizing a configuration velocity.
    pub fn momentum(&self, q: &[f64], v: &[f64]) -> Vec<f64> {
        match self {
            VelocityMap::Anisotropic => vec![v[0], -v[1]],
            VelocityMap::Shifted { gamma } => {
                vec![v[0] + gamma * q[0], -(v[1] + gamma * q[1])]
            }
            VelocityMap::Identity => v.to_vec(),
        }
    }
}

/// The geometric object behind an entry's flow.
#[derive(Debug, Clone)]
pub enum FormulationBackend {
    /// `zdot = Lambda dH` with the canonical bivector.
    Hamiltonian { hamiltonian: ScalarField },
    /// Heisenberg metriplectic flow at `mu = 1`, projected to `(q, p)`.
    Metriplectic { structure: MetriplecticStructure },
    /// Gyroscopic/dissipative extension of the canonical flow.
    Gyro {
        hamiltonian: ScalarField,
        coefficients: GyroMetriplecticCoefficients,
    },
    /// Contact Hamiltonian flow on `(q, p, z)`.
    Contact { system: ContactSystem },
    /// Reduced doubled-variable flow.
    Galley { system: GalleySystem },
    /// `qddot = F(q, t)` with momenta equal to velocities.
    Newton { force: ForceField2D },
}

/// A named, parameterized dynamical system with observables and maps.
#[derive(Debug, Clone)]
pub struct SystemDefinition {
    name: String,
    formulation: Formulation,
    dim: usize,
    params: BTreeMap<String, f64>,
    backend: FormulationBackend,
    observables: BTreeMap<String, ScalarField>,
    velocity_map: VelocityMap,
    has_z: bool,
    potential: Option<Potential>,
}

impl SystemDefinition {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn formulation(&self) -> Formulation {
        self.formulation
    }

    /// Flat state dimension (4 for 2D phase space, 5 with z, 2 for the 1D
    /// doubled-oscillator reduction).
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn has_z(&self) -> bool {
        self.has_z
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    pub fn backend(&self) -> &FormulationBackend {
        &self.backend
    }

    pub fn observables(&self) -> &BTreeMap<String, ScalarField> {
        &self.observables
    }

    pub fn observable(&self, name: &str) -> Option<&ScalarField> {
        self.observables.get(name)
    }

    pub fn velocity_map(&self) -> VelocityMap {
        self.velocity_map
    }

    /// Base (configuration) dimension.
    pub fn base_dim(&self) -> usize {
        if self.has_z {
            (self.dim - 1) / 2
        } else {
            self.dim / 2
        }
    }

    /// Column labels for the flat state, used by serialization.
    pub fn state_labels(&self) -> Vec<&'static str> {
        match (self.base_dim(), self.has_z) {
            (1, false) => vec!["x", "p_x"],
            (2, false) => vec!["x", "y", "p_x", "p_y"],
            (2, true) => vec!["x", "y", "p_x", "p_y", "z"],
            _ => unreachable!("catalog entries are 1D or 2D"),
        }
    }

    /// The flow at a state.
    pub fn rhs(&self, state: &PhaseState, t: f64) -> Result<Vec<f64>, CatalogError> {
        if state.dim() != self.dim {
            return Err(CatalogError::StateDimension {
                system: self.name.clone(),
                expected: self.dim,
                got: state.dim(),
            });
        }
        match &self.backend {
            FormulationBackend::Hamiltonian { hamiltonian } => {
                let lam = canonical_bivector(self.base_dim());
                Ok(brackets::hamiltonian_rhs(&lam, hamiltonian, &state.to_flat(), t)?)
            }
            FormulationBackend::Metriplectic { structure } => {
                let mut lifted = state.to_flat();
                lifted.push(1.0);
                let full = brackets::metriplectic_rhs(structure, &lifted, t)?;
                Ok(full[..self.dim].to_vec())
            }
            FormulationBackend::Gyro {
                hamiltonian,
                coefficients,
            } => Ok(brackets::gyro_metriplectic_rhs(hamiltonian, coefficients, state, t)?),
            FormulationBackend::Contact { system } => {
                Ok(contact::contact_vector_field(system, state, t)?)
            }
            FormulationBackend::Galley { system } => Ok(galley::galley_rhs(system, state, t)?),
            FormulationBackend::Newton { force } => {
                let (fx, fy) = force.eval(state.q()[0], state.q()[1], t);
                Ok(vec![state.p()[0], state.p()[1], fx, fy])
            }
        }
    }

    /// Integrate this system from `x0` over `[t0, t1]` with step `dt`.
    pub fn integrate(
        &self,
        x0: &PhaseState,
        t0: f64,
        t1: f64,
        dt: f64,
    ) -> Result<Trajectory, IntegrateError> {
        integrate::integrate(
            |state, t| self.rhs(state, t).map_err(Into::into),
            x0,
            t0,
            t1,
            dt,
            self.name.clone(),
            self.params.clone(),
        )
    }

    /// Build an initial state from configuration data `(q, v)`, mapping the
    /// velocity through this entry's momentum relation. `z0` applies only to
    /// contact entries and defaults to zero.
    pub fn state_from_config(
        &self,
        q: &[f64],
        v: &[f64],
        z0: Option<f64>,
    ) -> Result<PhaseState, StateError> {
        let p = self.velocity_map.momentum(q, v);
        if self.has_z {
            PhaseState::with_z(q.to_vec(), p, z0.unwrap_or(0.0))
        } else {
            PhaseState::new(q.to_vec(), p)
        }
    }

    /// The position-only Newtonian force field of this entry, when it has
    /// one (the pure curl-force and saddle entries).
    pub fn newton_force(&self) -> Option<ForceField2D> {
        let params = self.params.clone();
        match self.name.as_str() {
            "radial_curl" | "azimuthal_curl" => {
                let potential = self.potential.clone()?;
                let azimuthal = self.name == "azimuthal_curl";
                Some(ForceField2D::new(move |x, y, _| {
                    if azimuthal {
                        let du = potential.deriv(x * y);
                        (-y * du, x * du)
                    } else {
                        let du = potential.deriv(0.5 * (x * x - y * y));
                        (-x * du, -y * du)
                    }
                }))
            }
            "kapitsa" => {
                let a = params["a"];
                let b = params["b"];
                Some(ForceField2D::new(move |x, y, _| {
                    (-b * x - a * y, a * x - b * y)
                }))
            }
            "rotating_saddle" => {
                let omega = params["omega"];
                Some(ForceField2D::new(move |x, y, t| {
                    let (s, c) = (2.0 * omega * t).sin_cos();
                    (y * s - x * c, y * c + x * s)
                }))
            }
            _ => None,
        }
    }
}

/// Parameter name with its documented default.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ParamSpec {
    pub name: &'static str,
    pub default: f64,
}

/// One row of the catalog: the build schema for a named system.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub formulation: Formulation,
    pub dim: usize,
    pub params: Vec<ParamSpec>,
    pub takes_potential: bool,
    /// The defining equations, written out.
    pub description: &'static str,
}

impl CatalogEntry {
    pub fn default_params(&self) -> BTreeMap<String, f64> {
        self.params
            .iter()
            .map(|p| (p.name.to_string(), p.default))
            .collect()
    }

    /// Build with defaults, overridden by `overrides`. Unknown override
    /// names error; a missing potential defaults to quadratic where one is
    /// taken.
    pub fn build_with_defaults(
        &self,
        overrides: &BTreeMap<String, f64>,
        potential: Option<Potential>,
    ) -> Result<SystemDefinition, CatalogError> {
        let mut params = self.default_params();
        for (name, value) in overrides {
            if !params.contains_key(name) {
                return Err(CatalogError::UnexpectedParam {
                    system: self.name.to_string(),
                    name: name.clone(),
                });
            }
            params.insert(name.clone(), *value);
        }
        let potential = if self.takes_potential {
            Some(potential.unwrap_or(Potential::Quadratic))
        } else {
            potential
        };
        build_system(self.name, &params, potential)
    }
}

fn entries() -> Vec<CatalogEntry> {
    // Alphabetical; listing order is part of the CLI contract.
    vec![
        CatalogEntry {
            name: "azimuthal_curl",
            formulation: Formulation::Hamiltonian,
            dim: 4,
            params: vec![],
            takes_potential: true,
            description: "azimuthal curl force x'' = -y U'(x y), y'' = x U'(x y); \
                          energy is the only conserved quantity",
        },
        CatalogEntry {
            name: "bateman_metriplectic",
            formulation: Formulation::Metriplectic,
            dim: 4,
            params: vec![ParamSpec { name: "gamma", default: 0.2 }],
            takes_potential: true,
            description: "damped radial pair x'' + gamma x' + x U' = 0, \
                          y'' + gamma y' + y U' = 0 via double-bracket dissipation \
                          with position entropy -(gamma/2) |q|^2",
        },
        CatalogEntry {
            name: "conformal_curl",
            formulation: Formulation::Metriplectic,
            dim: 4,
            params: vec![ParamSpec { name: "gamma", default: 0.2 }],
            takes_potential: true,
            description: "the same damped pair through momentum entropy \
                          -(gamma/2) |p|^2; contracts symplectic area at rate gamma",
        },
        CatalogEntry {
            name: "contact_km",
            formulation: Formulation::Contact,
            dim: 5,
            params: vec![
                ParamSpec { name: "a", default: 1.0 },
                ParamSpec { name: "b", default: 1.0 },
                ParamSpec { name: "gamma", default: 0.2 },
            ],
            takes_potential: false,
            description: "contact flow of H = (p_x^2 - p_y^2)/2 + b (x^2 - y^2)/2 \
                          + a x y + gamma z: x'' + gamma x' + b x + a y = 0, \
                          y'' + gamma y' + b y - a x = 0",
        },
        CatalogEntry {
            name: "contact_radial",
            formulation: Formulation::Contact,
            dim: 5,
            params: vec![ParamSpec { name: "gamma", default: 0.2 }],
            takes_potential: true,
            description: "contact flow of H = (p_x^2 - p_y^2)/2 + U + gamma z, \
                          reducing to the damped radial pair in configuration space",
        },
        CatalogEntry {
            name: "galley_bateman",
            formulation: Formulation::Galley,
            dim: 2,
            params: vec![ParamSpec { name: "kappa", default: 0.2 }],
            takes_potential: false,
            description: "doubled-oscillator reduction x' = p, p' = -x + kappa p \
                          (newton form x'' - kappa x' + x = 0) from the kernel \
                          K = kappa p_+ x_-",
        },
        CatalogEntry {
            name: "galley_forced_km",
            formulation: Formulation::Galley,
            dim: 4,
            params: vec![
                ParamSpec { name: "a", default: 1.0 },
                ParamSpec { name: "b", default: 1.0 },
                ParamSpec { name: "kappa", default: 0.2 },
                ParamSpec { name: "f_x", default: 0.0 },
                ParamSpec { name: "f_y", default: 0.0 },
            ],
            takes_potential: false,
            description: "forced damped linear curl system p_x' = -b x - a y \
                          - kappa p_x + f_x, p_y' = b y - a x - kappa p_y + f_y \
                          from K = -kappa p_+ . q_- + f . q_-",
        },
        CatalogEntry {
            name: "gyro_curl",
            formulation: Formulation::Gyro,
            dim: 4,
            params: vec![ParamSpec { name: "s", default: 0.5 }],
            takes_potential: true,
            description: "radial curl force with gyroscopic coupling: \
                          x'' + s y' + x U' = 0, y'' - s x' + y U' = 0",
        },
        CatalogEntry {
            name: "gyro_dissipative_km",
            formulation: Formulation::GyroMetriplectic,
            dim: 4,
            params: vec![
                ParamSpec { name: "a", default: 1.0 },
                ParamSpec { name: "b", default: 1.0 },
                ParamSpec { name: "s", default: 0.5 },
                ParamSpec { name: "c", default: 0.1 },
            ],
            takes_potential: false,
            description: "positional coupling with gyroscopic and dissipative \
                          forces: x'' + s y' - c x' + b x + a y = 0, \
                          y'' - s x' - c y' + b y - a x = 0",
        },
        CatalogEntry {
            name: "kapitsa",
            formulation: Formulation::Hamiltonian,
            dim: 4,
            params: vec![
                ParamSpec { name: "a", default: 1.0 },
                ParamSpec { name: "b", default: 1.0 },
            ],
            takes_potential: false,
            description: "linear nonconservative positional coupling \
                          x'' + a y + b x = 0, y'' - a x + b y = 0 from \
                          H = (p_x^2 - p_y^2)/2 + b (x^2 - y^2)/2 + a x y",
        },
        CatalogEntry {
            name: "radial_curl",
            formulation: Formulation::Hamiltonian,
            dim: 4,
            params: vec![],
            takes_potential: true,
            description: "radial curl force x'' = -x U'(s), y'' = -y U'(s), \
                          s = (x^2 - y^2)/2; conserves energy and angular momentum",
        },
        CatalogEntry {
            name: "rotating_saddle",
            formulation: Formulation::Newton,
            dim: 4,
            params: vec![ParamSpec { name: "omega", default: 1.0 }],
            takes_potential: false,
            description: "flapping saddle U(x,y,t) = (x^2 - y^2)/2 cos(2 w t) \
                          - x y sin(2 w t), force = -grad U, momenta are velocities",
        },
    ]
}

/// All catalog entries, alphabetical by name.
pub fn list_catalog() -> Vec<CatalogEntry> {
    entries()
}

/// Look up one entry.
pub fn catalog_entry(name: &str) -> Result<CatalogEntry, CatalogError> {
    entries()
        .into_iter()
        .find(|e| e.name == name)
        .ok_or_else(|| CatalogError::UnknownSystem(name.to_string()))
}

fn require(
    params: &BTreeMap<String, f64>,
    system: &str,
    schema: &[ParamSpec],
) -> Result<(), CatalogError> {
    for spec in schema {
        if !params.contains_key(spec.name) {
            return Err(CatalogError::MissingParam {
                system: system.to_string(),
                name: spec.name.to_string(),
            });
        }
    }
    for name in params.keys() {
        if !schema.iter().any(|s| s.name == name) {
            return Err(CatalogError::UnexpectedParam {
                system: system.to_string(),
                name: name.clone(),
            });
        }
    }
    Ok(())
}

/// Build a catalog system. `params` must match the entry's schema exactly;
/// a potential must be supplied exactly for the entries that take one.
pub fn build_system(
    name: &str,
    params: &BTreeMap<String, f64>,
    potential: Option<Potential>,
) -> Result<SystemDefinition, CatalogError> {
    let entry = catalog_entry(name)?;
    require(params, name, &entry.params)?;
    if entry.takes_potential && potential.is_none() {
        return Err(CatalogError::PotentialRequired { system: name.to_string() });
    }
    if !entry.takes_potential && potential.is_some() {
        return Err(CatalogError::UnexpectedPotential { system: name.to_string() });
    }

    let mut def = assemble(&entry, params, potential)?;
    def.params = params.clone();
    for field in def.observables.values() {
        field.check_gradient(def.dim)?;
    }
    match &def.backend {
        FormulationBackend::Hamiltonian { hamiltonian }
        | FormulationBackend::Gyro { hamiltonian, .. } => {
            hamiltonian.check_gradient(def.dim)?;
        }
        FormulationBackend::Metriplectic { structure } => {
            structure.hamiltonian.check_gradient(structure.dim())?;
            structure.entropy.check_gradient(structure.dim())?;
        }
        FormulationBackend::Contact { system } => {
            system.hamiltonian().check_gradient(def.dim)?;
        }
        FormulationBackend::Galley { system } => {
            system.hamiltonian().check_gradient(def.dim)?;
        }
        FormulationBackend::Newton { .. } => {}
    }
    Ok(def)
}

/// Anisotropic radial Hamiltonian over `dim` flat coordinates (extra
/// coordinates beyond the four phase-space ones are ignored; the gradient
/// is padded with zeros).
fn radial_hamiltonian(potential: &Potential, dim: usize) -> ScalarField {
    let u = potential.clone();
    let du = potential.clone();
    ScalarField::with_grad(
        "energy",
        move |f, _| 0.5 * (f[2] * f[2] - f[3] * f[3]) + u.eval(0.5 * (f[0] * f[0] - f[1] * f[1])),
        move |f, _| {
            let d = du.deriv(0.5 * (f[0] * f[0] - f[1] * f[1]));
            let mut g = vec![f[0] * d, -f[1] * d, f[2], -f[3]];
            g.resize(dim, 0.0);
            g
        },
    )
}

fn azimuthal_hamiltonian(potential: &Potential) -> ScalarField {
    let u = potential.clone();
    let du = potential.clone();
    ScalarField::with_grad(
        "energy",
        move |f, _| 0.5 * (f[2] * f[2] - f[3] * f[3]) + u.eval(f[0] * f[1]),
        move |f, _| {
            let d = du.deriv(f[0] * f[1]);
            vec![f[1] * d, f[0] * d, f[2], -f[3]]
        },
    )
}

/// Kapitsa-Merkin Hamiltonian `(p_x^2 - p_y^2)/2 + b (x^2 - y^2)/2 + a x y`.
fn km_hamiltonian(a: f64, b: f64, dim: usize) -> ScalarField {
    ScalarField::with_grad(
        "energy",
        move |f, _| {
            0.5 * (f[2] * f[2] - f[3] * f[3]) + 0.5 * b * (f[0] * f[0] - f[1] * f[1])
                + a * f[0] * f[1]
        },
        move |f, _| {
            let mut g = vec![b * f[0] + a * f[1], -b * f[1] + a * f[0], f[2], -f[3]];
            g.resize(dim, 0.0);
            g
        },
    )
}

fn with_contact_term(h: &ScalarField, gamma: f64, dim: usize) -> ScalarField {
    let inner = h.clone();
    let inner_grad = h.clone();
    ScalarField::with_grad(
        "contact_energy",
        move |f, t| inner.eval(f, t) + gamma * f[dim - 1],
        move |f, t| {
            let mut g = inner_grad
                .gradient(f, t)
                .expect("inner Hamiltonian has an analytic gradient");
            g[dim - 1] += gamma;
            g
        },
    )
}

fn angular_momentum_observable(map: VelocityMap) -> ScalarField {
    ScalarField::new("angular_momentum", move |f, _| {
        let v = map.velocity(&f[..2], &f[2..4]);
        f[0] * v[1] - f[1] * v[0]
    })
}

fn assemble(
    entry: &CatalogEntry,
    params: &BTreeMap<String, f64>,
    potential: Option<Potential>,
) -> Result<SystemDefinition, CatalogError> {
    let name = entry.name;
    let potential_tag = potential.clone();
    let mut observables = BTreeMap::new();
    let (backend, velocity_map) = match name {
        "radial_curl" | "azimuthal_curl" => {
            let potential = potential.expect("validated");
            let h = if name == "radial_curl" {
                radial_hamiltonian(&potential, 4)
            } else {
                azimuthal_hamiltonian(&potential)
            };
            observables.insert("energy".into(), h.clone());
            (
                FormulationBackend::Hamiltonian { hamiltonian: h },
                VelocityMap::Anisotropic,
            )
        }
        "kapitsa" => {
            let h = km_hamiltonian(params["a"], params["b"], 4);
            observables.insert("energy".into(), h.clone());
            (
                FormulationBackend::Hamiltonian { hamiltonian: h },
                VelocityMap::Anisotropic,
            )
        }
        "bateman_metriplectic" | "conformal_curl" => {
            let gamma = params["gamma"];
            let potential = potential.expect("validated");
            let h5 = radial_hamiltonian(&potential, 5);
            let entropy = if name == "bateman_metriplectic" {
                ScalarField::with_grad(
                    "position_entropy",
                    move |f, _| -0.5 * gamma * (f[0] * f[0] + f[1] * f[1]),
                    move |f, _| vec![-gamma * f[0], -gamma * f[1], 0.0, 0.0, 0.0],
                )
            } else {
                ScalarField::with_grad(
                    "momentum_entropy",
                    move |f, _| -0.5 * gamma * (f[2] * f[2] + f[3] * f[3]),
                    move |f, _| vec![0.0, 0.0, -gamma * f[2], -gamma * f[3], 0.0],
                )
            };
            let structure = MetriplecticStructure::new(
                heisenberg_bivector(&HeisenbergStructure::new(2)),
                h5,
                entropy,
                1.0,
            );
            observables.insert("energy".into(), radial_hamiltonian(&potential, 4));
            let map = if name == "bateman_metriplectic" {
                VelocityMap::Shifted { gamma }
            } else {
                VelocityMap::Anisotropic
            };
            (FormulationBackend::Metriplectic { structure }, map)
        }
        "gyro_curl" => {
            let potential = potential.expect("validated");
            let h = radial_hamiltonian(&potential, 4);
            observables.insert("energy".into(), h.clone());
            (
                FormulationBackend::Gyro {
                    hamiltonian: h,
                    coefficients: GyroMetriplecticCoefficients::new(params["s"], 0.0),
                },
                VelocityMap::Anisotropic,
            )
        }
        "gyro_dissipative_km" => {
            let (a, b, c) = (params["a"], params["b"], params["c"]);
            let h = km_hamiltonian(a, b, 4);
            observables.insert("energy".into(), h.clone());
            // The variational form quoted for the s = 0, a = b = 1 member of
            // this family, as an observable only.
            observables.insert(
                "top_lagrangian".into(),
                ScalarField::new("top_lagrangian", move |f, _| {
                    -f[2] * f[3] - f[0] * f[1] + 0.5 * (f[0] * f[0] - f[1] * f[1])
                        + 0.5 * c * (f[2] * f[1] + f[0] * f[3])
                }),
            );
            (
                FormulationBackend::Gyro {
                    hamiltonian: h,
                    coefficients: GyroMetriplecticCoefficients::new(params["s"], c),
                },
                VelocityMap::Anisotropic,
            )
        }
        "contact_radial" => {
            let gamma = params["gamma"];
            let potential = potential.expect("validated");
            let h = with_contact_term(&radial_hamiltonian(&potential, 5), gamma, 5);
            observables.insert("energy".into(), h.clone());
            (
                FormulationBackend::Contact {
                    system: ContactSystem::new(2, h),
                },
                VelocityMap::Anisotropic,
            )
        }
        "contact_km" => {
            let gamma = params["gamma"];
            let h = with_contact_term(&km_hamiltonian(params["a"], params["b"], 5), gamma, 5);
            observables.insert("energy".into(), h.clone());
            (
                FormulationBackend::Contact {
                    system: ContactSystem::new(2, h),
                },
                VelocityMap::Anisotropic,
            )
        }
        "galley_bateman" => {
            let kappa = params["kappa"];
            let h = ScalarField::with_grad(
                "energy",
                |f, _| 0.5 * (f[1] * f[1] + f[0] * f[0]),
                |f, _| vec![f[0], f[1]],
            );
            observables.insert("energy".into(), h.clone());
            let system = GalleySystem::new(
                1,
                h,
                move |f, _| vec![kappa * f[1]],
                |_, _| vec![0.0],
            );
            (FormulationBackend::Galley { system }, VelocityMap::Identity)
        }
        "galley_forced_km" => {
            let (a, b, kappa) = (params["a"], params["b"], params["kappa"]);
            let f_ext = [params["f_x"], params["f_y"]];
            let h = km_hamiltonian(a, b, 4);
            observables.insert("energy".into(), h.clone());
            let system = GalleySystem::new(
                2,
                h,
                move |f, _| vec![-kappa * f[2] + f_ext[0], -kappa * f[3] + f_ext[1]],
                |_, _| vec![0.0, 0.0],
            );
            (FormulationBackend::Galley { system }, VelocityMap::Anisotropic)
        }
        "rotating_saddle" => {
            let omega = params["omega"];
            let force = ForceField2D::new(move |x, y, t| {
                let (s, c) = (2.0 * omega * t).sin_cos();
                (y * s - x * c, y * c + x * s)
            });
            observables.insert(
                "energy".into(),
                ScalarField::new("energy", move |f, t| {
                    let (s, c) = (2.0 * omega * t).sin_cos();
                    0.5 * (f[2] * f[2] + f[3] * f[3]) + 0.5 * (f[0] * f[0] - f[1] * f[1]) * c
                        - f[0] * f[1] * s
                }),
            );
            (FormulationBackend::Newton { force }, VelocityMap::Identity)
        }
        _ => return Err(CatalogError::UnknownSystem(name.to_string())),
    };

    if entry.dim >= 4 {
        observables.insert(
            "angular_momentum".into(),
            angular_momentum_observable(velocity_map),
        );
    }

    Ok(SystemDefinition {
        name: name.to_string(),
        formulation: entry.formulation,
        dim: entry.dim,
        params: params.clone(),
        backend,
        observables,
        velocity_map,
        has_z: entry.dim == 5,
        potential: potential_tag,
    })
}
