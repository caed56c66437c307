//! Relative entropy `η(u|U)`, relative fluxes `F_α(u|U)` and their averages
//! against discrete Young measures.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;
use crate::measures::CellMeasure;
use crate::systems::{require_closure, require_interior, HyperbolicSystem, State, INTERIOR_MARGIN};

/// `η(u|U) = η(u) − η(U) − G(U)·(A(u) − A(U))`.
///
/// Note the asymmetry: `u` may sit on the boundary of the state domain
/// while `U` has to be interior.
pub fn relative_entropy(system: &dyn HyperbolicSystem, u: &State, big_u: &State) -> Result<f64> {
    require_closure(system, u)?;
    require_interior(system, big_u, INTERIOR_MARGIN)?;
    Ok(relative_entropy_unchecked(system, u, big_u))
}

pub(crate) fn relative_entropy_unchecked(system: &dyn HyperbolicSystem, u: &State, big_u: &State) -> f64 {
    let g = system.multiplier(big_u);
    system.eta(u) - system.eta(big_u) - g.dot(&(system.a(u) - system.a(big_u)))
}

/// `F_α(u|U) = F_α(u) − F_α(U) − ∇F_α(U) ∇A(U)⁻¹ (A(u) − A(U))`.
pub fn relative_flux(
    system: &dyn HyperbolicSystem,
    alpha: usize,
    u: &State,
    big_u: &State,
) -> Result<State> {
    require_closure(system, u)?;
    require_interior(system, big_u, INTERIOR_MARGIN)?;
    if alpha >= system.space_dim() {
        return Err(Error::Config(format!("direction {alpha} out of range")));
    }
    let lin = Linearization::new(system, big_u)?;
    Ok(lin.relative_flux(system, alpha, u))
}

/// Everything about `U` that the relative quantities need, computed once.
#[derive(Debug, Clone)]
pub(crate) struct Linearization {
    pub eta: f64,
    pub a: State,
    pub g: State,
    pub flux: Vec<State>,
    /// `∇F_α(U) ∇A(U)⁻¹`, applied to vectors through stored LU factors.
    pub transport: Vec<nalgebra::DMatrix<f64>>,
}

impl Linearization {
    pub fn new(system: &dyn HyperbolicSystem, big_u: &State) -> Result<Self> {
        let grad_a = system.grad_a(big_u);
        let condition = linalg::condition_number(&grad_a);
        if !(condition <= linalg::MAX_CONDITION) {
            return Err(Error::Singular { condition });
        }
        // ∇F_α ∇A⁻¹ = (∇A⁻ᵀ ∇F_αᵀ)ᵀ, solved column-wise by LU.
        let lu = grad_a.transpose().lu();
        let transport = (0..system.space_dim())
            .map(|alpha| {
                let rhs = system.grad_flux(alpha, big_u).transpose();
                lu.solve(&rhs).map(|m| m.transpose()).ok_or(Error::Singular { condition })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            eta: system.eta(big_u),
            a: system.a(big_u),
            g: system.multiplier(big_u),
            flux: (0..system.space_dim()).map(|alpha| system.flux(alpha, big_u)).collect(),
            transport,
        })
    }

    pub fn relative_entropy(&self, system: &dyn HyperbolicSystem, u: &State) -> f64 {
        system.eta(u) - self.eta - self.g.dot(&(system.a(u) - &self.a))
    }

    pub fn relative_flux(&self, system: &dyn HyperbolicSystem, alpha: usize, u: &State) -> State {
        system.flux(alpha, u) - &self.flux[alpha] - &self.transport[alpha] * (system.a(u) - &self.a)
    }

    /// `𝓗` from the measure moments `⟨ν,η⟩` and `⟨ν,A⟩`.
    pub fn averaged_entropy(&self, mean_eta: f64, mean_a: &State) -> f64 {
        mean_eta - self.eta - self.g.dot(&(mean_a - &self.a))
    }

    pub fn averaged_flux(&self, alpha: usize, mean_f: &State, mean_a: &State) -> State {
        mean_f - &self.flux[alpha] - &self.transport[alpha] * (mean_a - &self.a)
    }
}

fn check_atoms(system: &dyn HyperbolicSystem, nu: &CellMeasure) -> Result<()> {
    nu.validate()?;
    for (atom, _) in nu.atoms() {
        require_closure(system, atom)?;
    }
    Ok(())
}

/// `𝓗(ν,U) = ⟨ν,η⟩ − η(U) − G(U)·(⟨ν,A⟩ − A(U))`.
pub fn averaged_h(system: &dyn HyperbolicSystem, nu: &CellMeasure, big_u: &State) -> Result<f64> {
    check_atoms(system, nu)?;
    require_interior(system, big_u, INTERIOR_MARGIN)?;
    let lin = Linearization::new(system, big_u)?;
    Ok(lin.averaged_entropy(nu.mean(|u| system.eta(u)), &nu.mean_vector(|u| system.a(u))))
}

/// `Z_α(ν,U)` together with the ratio `|Z_α|/𝓗` used to audit the bound
/// `|Z_α| ≤ C 𝓗`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AveragedFlux {
    pub z: State,
    pub h: f64,
    /// `None` when `𝓗` vanishes.
    pub ratio: Option<f64>,
}

pub fn averaged_z(
    system: &dyn HyperbolicSystem,
    alpha: usize,
    nu: &CellMeasure,
    big_u: &State,
) -> Result<AveragedFlux> {
    check_atoms(system, nu)?;
    require_interior(system, big_u, INTERIOR_MARGIN)?;
    if alpha >= system.space_dim() {
        return Err(Error::Config(format!("direction {alpha} out of range")));
    }
    let lin = Linearization::new(system, big_u)?;
    let mean_a = nu.mean_vector(|u| system.a(u));
    let z = lin.averaged_flux(alpha, &nu.mean_vector(|u| system.flux(alpha, u)), &mean_a);
    let h = lin.averaged_entropy(nu.mean(|u| system.eta(u)), &mean_a);
    let ratio = (h > 1e-12).then(|| z.norm() / h);
    Ok(AveragedFlux { z, h, ratio })
}
