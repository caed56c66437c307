//! Hyperbolic systems `∂_t A(u) + ∂_α F_α(u) = 0` together with their entropy
//! structure and hand-coded first and second derivatives.
//!
//! Every bundled system implements [`HyperbolicSystem`]. The free functions
//! [`evaluate`], [`jacobian`], [`hessian_form`] and [`invert_a`] are the
//! checked entry points: they validate domain membership before calling into
//! the unchecked trait methods.

pub(crate) mod constraint;
mod euler;
mod incompressible;
mod swmhd;

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use constraint::{
    discrete_divergence, random_smooth_field, ConstraintSpec, DivergenceGroup, GroupOrigin,
    GroupTransform, StateField,
};
pub use euler::CompressibleEuler;
pub use incompressible::{
    IncompressibleEuler, IncompressibleMhd, NonhomogeneousEuler, NonhomogeneousMhd,
};
pub use swmhd::ShallowWaterMhd;

/// A point of state space.
pub type State = DVector<f64>;

/// Which coordinates of the state must stay positive.
///
/// `X = {u : u_i > 0 for i in positive}` and `X̄` relaxes the strict
/// inequalities. Everything else ranges over `ℝ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateDomain {
    pub dim: usize,
    pub positive: Vec<usize>,
}

impl StateDomain {
    pub fn unconstrained(dim: usize) -> Self {
        Self { dim, positive: Vec::new() }
    }

    pub fn with_positive(dim: usize, positive: Vec<usize>) -> Self {
        Self { dim, positive }
    }

    /// Membership in the closure `X̄`.
    pub fn in_closure(&self, u: &State) -> bool {
        u.len() == self.dim
            && u.iter().all(|x| x.is_finite())
            && self.positive.iter().all(|&i| u[i] >= 0.0)
    }

    /// Membership in the open set `X`.
    pub fn in_open(&self, u: &State) -> bool {
        u.len() == self.dim
            && u.iter().all(|x| x.is_finite())
            && self.positive.iter().all(|&i| u[i] > 0.0)
    }

    /// Distance to `∂X` (infinite when `X = ℝⁿ`).
    pub fn boundary_distance(&self, u: &State) -> f64 {
        self.positive.iter().map(|&i| u[i]).fold(f64::INFINITY, f64::min)
    }
}

/// An axis-aligned box in state space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl StateBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        assert_eq!(lower.len(), upper.len(), "box bounds must have equal length");
        Self { lower, upper }
    }

    /// Box with a common interval for the density-like first coordinate and
    /// a symmetric interval for the remaining `dim - 1` coordinates.
    pub fn density_first(dim: usize, density: (f64, f64), half_width: f64) -> Self {
        let mut lower = vec![-half_width; dim];
        let mut upper = vec![half_width; dim];
        lower[0] = density.0;
        upper[0] = density.1;
        Self { lower, upper }
    }

    pub fn symmetric(dim: usize, half_width: f64) -> Self {
        Self { lower: vec![-half_width; dim], upper: vec![half_width; dim] }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn is_valid(&self) -> bool {
        self.lower.iter().zip(&self.upper).all(|(l, u)| l.is_finite() && u.is_finite() && l <= u)
    }

    pub fn contains(&self, u: &State) -> bool {
        u.len() == self.dim()
            && u.iter().enumerate().all(|(i, x)| *x >= self.lower[i] && *x <= self.upper[i])
    }

    pub fn clamp(&self, u: &mut State) {
        for i in 0..self.dim() {
            u[i] = u[i].clamp(self.lower[i], self.upper[i]);
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> State {
        State::from_iterator(
            self.dim(),
            (0..self.dim()).map(|i| self.lower[i] + (self.upper[i] - self.lower[i]) * rng.random::<f64>()),
        )
    }

    /// Smallest distance of the box to `∂X` for the given domain.
    pub fn boundary_distance(&self, domain: &StateDomain) -> f64 {
        domain.positive.iter().map(|&i| self.lower[i]).fold(f64::INFINITY, f64::min)
    }

    pub fn widths(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(l, u)| u - l).collect()
    }
}

/// A hyperbolic system with an entropy `η`, entropy fluxes `q_α` and the
/// multiplier `G` satisfying `∇η = G·∇A`.
///
/// Methods are unchecked: callers guarantee `u ∈ X̄` for `A`, `F_α`, `η` and
/// `u ∈ X` for everything else. Jacobians are returned with rows indexed by
/// output component and columns by state component; gradients of scalars are
/// returned as vectors.
pub trait HyperbolicSystem: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;
    fn state_dim(&self) -> usize;
    fn space_dim(&self) -> usize;
    fn domain(&self) -> &StateDomain;

    fn a(&self, u: &State) -> State;
    fn flux(&self, alpha: usize, u: &State) -> State;
    fn eta(&self, u: &State) -> f64;
    fn entropy_flux(&self, alpha: usize, u: &State) -> f64;
    fn multiplier(&self, u: &State) -> State;

    fn grad_a(&self, u: &State) -> DMatrix<f64>;
    fn grad_flux(&self, alpha: usize, u: &State) -> DMatrix<f64>;
    fn grad_eta(&self, u: &State) -> State;
    fn grad_entropy_flux(&self, alpha: usize, u: &State) -> State;
    fn grad_multiplier(&self, u: &State) -> DMatrix<f64>;
    fn hess_eta(&self, u: &State) -> DMatrix<f64>;
    /// `∇²A_k` for each output component `k`.
    fn hess_a(&self, u: &State) -> Vec<DMatrix<f64>>;

    /// Anisotropic ray exponents used for recession functions.
    fn scaling_exponents(&self) -> Vec<f64>;

    /// Compact box on which the hypotheses are certified by default.
    fn documented_box(&self) -> StateBox;

    /// Constraint structure for systems where the entropy flux identity only
    /// holds up to a constraint term `L̄_α`.
    fn constraint(&self) -> Option<&ConstraintSpec> {
        None
    }

    /// The flux `L̄_α` with `G·∇F_α = ∇q_α + L̄_α`.
    fn constraint_flux(&self, _alpha: usize, _u: &State) -> Option<State> {
        None
    }

    /// Inverse of `A` without clamping; `None` outside the image of `X̄`.
    fn a_inverse(&self, v: &State) -> Option<State>;

    /// Index of the density-like component that may hit vacuum.
    fn density_index(&self) -> Option<usize> {
        None
    }

    /// Upper bound for the characteristic speeds in any direction. `None`
    /// for systems without a finite-volume solver.
    fn wave_speed(&self, _u: &State) -> Option<f64> {
        None
    }
}

pub type SharedSystem = Arc<dyn HyperbolicSystem>;

/// Quantities addressable through [`evaluate`] and [`jacobian`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Quantity {
    A,
    Flux(usize),
    Eta,
    EntropyFlux(usize),
    Multiplier,
}

impl Quantity {
    fn needs_open_set(self) -> bool {
        matches!(self, Quantity::EntropyFlux(_) | Quantity::Multiplier)
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Quantity::A => write!(f, "A"),
            Quantity::Flux(a) => write!(f, "F{}", a + 1),
            Quantity::Eta => write!(f, "eta"),
            Quantity::EntropyFlux(a) => write!(f, "q{}", a + 1),
            Quantity::Multiplier => write!(f, "G"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Scalar(f64),
    Vector(State),
}

impl Value {
    pub fn as_scalar(&self) -> Option<f64> {
        match self {
            Value::Scalar(x) => Some(*x),
            Value::Vector(_) => None,
        }
    }

    pub fn as_vector(&self) -> Option<&State> {
        match self {
            Value::Scalar(_) => None,
            Value::Vector(v) => Some(v),
        }
    }
}

/// Default distance to `∂X` required for derivative evaluations.
pub const INTERIOR_MARGIN: f64 = 1e-8;

fn check_alpha(system: &dyn HyperbolicSystem, alpha: usize) -> Result<()> {
    if alpha >= system.space_dim() {
        return Err(Error::Config(format!(
            "direction {alpha} out of range for {}-dimensional system {}",
            system.space_dim(),
            system.name()
        )));
    }
    Ok(())
}

pub(crate) fn require_closure(system: &dyn HyperbolicSystem, u: &State) -> Result<()> {
    if !system.domain().in_closure(u) {
        return Err(Error::Domain(format!("{} not in closure of X for {}", fmt_state(u), system.name())));
    }
    Ok(())
}

pub(crate) fn require_interior(system: &dyn HyperbolicSystem, u: &State, margin: f64) -> Result<()> {
    let domain = system.domain();
    if !domain.in_open(u) || domain.boundary_distance(u) <= margin {
        return Err(Error::Domain(format!(
            "{} within {margin:e} of the boundary of X for {}",
            fmt_state(u),
            system.name()
        )));
    }
    Ok(())
}

pub(crate) fn fmt_state(u: &State) -> String {
    let parts: Vec<String> = u.iter().map(|x| format!("{x}")).collect();
    format!("({})", parts.join(", "))
}

/// Evaluate one of the system quantities at `u`.
pub fn evaluate(system: &dyn HyperbolicSystem, quantity: Quantity, u: &State) -> Result<Value> {
    if u.len() != system.state_dim() {
        return Err(Error::Domain(format!(
            "state has {} components, {} expects {}",
            u.len(),
            system.name(),
            system.state_dim()
        )));
    }
    if quantity.needs_open_set() {
        require_interior(system, u, 0.0)?;
    } else {
        require_closure(system, u)?;
    }
    Ok(match quantity {
        Quantity::A => Value::Vector(system.a(u)),
        Quantity::Flux(alpha) => {
            check_alpha(system, alpha)?;
            Value::Vector(system.flux(alpha, u))
        }
        Quantity::Eta => Value::Scalar(system.eta(u)),
        Quantity::EntropyFlux(alpha) => {
            check_alpha(system, alpha)?;
            Value::Scalar(system.entropy_flux(alpha, u))
        }
        Quantity::Multiplier => Value::Vector(system.multiplier(u)),
    })
}

/// Analytic Jacobian of a quantity at an interior state. Gradients of scalar
/// quantities come back as a `1 × n` matrix.
pub fn jacobian(
    system: &dyn HyperbolicSystem,
    quantity: Quantity,
    u: &State,
    margin: f64,
) -> Result<DMatrix<f64>> {
    require_interior(system, u, margin)?;
    Ok(match quantity {
        Quantity::A => system.grad_a(u),
        Quantity::Flux(alpha) => {
            check_alpha(system, alpha)?;
            system.grad_flux(alpha, u)
        }
        Quantity::Eta => row(&system.grad_eta(u)),
        Quantity::EntropyFlux(alpha) => {
            check_alpha(system, alpha)?;
            row(&system.grad_entropy_flux(alpha, u))
        }
        Quantity::Multiplier => system.grad_multiplier(u),
    })
}

fn row(v: &State) -> DMatrix<f64> {
    DMatrix::from_row_slice(1, v.len(), v.as_slice())
}

/// The symmetric matrix `∇²η(u) − G(u)·∇²A(u)`, symmetrized numerically.
pub fn hessian_form(system: &dyn HyperbolicSystem, u: &State) -> Result<DMatrix<f64>> {
    require_interior(system, u, INTERIOR_MARGIN)?;
    Ok(hessian_form_unchecked(system, u))
}

pub(crate) fn hessian_form_unchecked(system: &dyn HyperbolicSystem, u: &State) -> DMatrix<f64> {
    let g = system.multiplier(u);
    let mut m = system.hess_eta(u);
    for (k, hk) in system.hess_a(u).iter().enumerate() {
        m -= hk * g[k];
    }
    (&m + m.transpose()) * 0.5
}

/// Vacuum treatment for [`invert_a`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VacuumPolicy {
    pub rho_min: f64,
    pub strict: bool,
}

impl Default for VacuumPolicy {
    fn default() -> Self {
        Self { rho_min: 1e-10, strict: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Inversion {
    pub state: State,
    pub clamped: bool,
}

/// Recover `u` from conserved values `v = A(u)`.
///
/// Densities below `policy.rho_min` are clamped (and flagged) in lenient
/// mode and rejected in strict mode.
pub fn invert_a(system: &dyn HyperbolicSystem, v: &State, policy: VacuumPolicy) -> Result<Inversion> {
    if v.len() != system.state_dim() || v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain(format!("conserved vector {} is not admissible", fmt_state(v))));
    }
    let mut clamped = false;
    let mut v = v.clone();
    if let Some(i) = system.density_index() {
        if v[i] < policy.rho_min {
            if policy.strict {
                return Err(Error::Vacuum(format!(
                    "density {} below rho_min = {:e}",
                    v[i], policy.rho_min
                )));
            }
            v[i] = policy.rho_min;
            clamped = true;
        }
    }
    let state = system
        .a_inverse(&v)
        .ok_or_else(|| Error::Domain(format!("{} is not in the image of A", fmt_state(&v))))?;
    Ok(Inversion { state, clamped })
}

/// Physical parameters for the registry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SystemParams {
    /// Adiabatic exponent of the γ-law `p(ρ) = κ ρ^γ`.
    pub gamma: f64,
    pub kappa: f64,
    pub gravity: f64,
    /// Torus dimension for the compressible Euler system.
    pub dim: usize,
}

impl Default for SystemParams {
    fn default() -> Self {
        Self { gamma: 2.0, kappa: 1.0, gravity: 9.81, dim: 1 }
    }
}

/// Identifiers accepted by [`build_system`].
pub const SYSTEM_IDS: [&str; 6] =
    ["euler", "swmhd", "inc-euler", "inc-mhd", "nonhom-inc-euler", "nonhom-inc-mhd"];

pub fn build_system(id: &str, params: &SystemParams) -> Result<SharedSystem> {
    Ok(match id {
        "euler" => Arc::new(CompressibleEuler::new(params.dim, params.gamma, params.kappa)?),
        "swmhd" => Arc::new(ShallowWaterMhd::new(params.gravity)?),
        "inc-euler" => Arc::new(IncompressibleEuler::new()),
        "inc-mhd" => Arc::new(IncompressibleMhd::new()),
        "nonhom-inc-euler" => Arc::new(NonhomogeneousEuler::new()),
        "nonhom-inc-mhd" => Arc::new(NonhomogeneousMhd::new()),
        other => {
            return Err(Error::Config(format!(
                "unknown system id '{other}'; registered ids: {}",
                SYSTEM_IDS.join(", ")
            )))
        }
    })
}

/// Kronecker delta as a float.
#[inline]
pub(crate) fn delta(i: usize, j: usize) -> f64 {
    if i == j {
        1.0
    } else {
        0.0
    }
}
