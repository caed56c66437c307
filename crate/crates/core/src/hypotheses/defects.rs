//! Systems with deliberately broken entropy structure, used as negative
//! controls for the checks.

use nalgebra::DMatrix;

use crate::systems::{ConstraintSpec, HyperbolicSystem, SharedSystem, State, StateBox, StateDomain};

macro_rules! delegate {
    () => {
        fn name(&self) -> &str {
            self.inner.name()
        }
        fn state_dim(&self) -> usize {
            self.inner.state_dim()
        }
        fn space_dim(&self) -> usize {
            self.inner.space_dim()
        }
        fn domain(&self) -> &StateDomain {
            self.inner.domain()
        }
        fn a(&self, u: &State) -> State {
            self.inner.a(u)
        }
        fn flux(&self, alpha: usize, u: &State) -> State {
            self.inner.flux(alpha, u)
        }
        fn grad_a(&self, u: &State) -> DMatrix<f64> {
            self.inner.grad_a(u)
        }
        fn grad_flux(&self, alpha: usize, u: &State) -> DMatrix<f64> {
            self.inner.grad_flux(alpha, u)
        }
        fn hess_a(&self, u: &State) -> Vec<DMatrix<f64>> {
            self.inner.hess_a(u)
        }
        fn scaling_exponents(&self) -> Vec<f64> {
            self.inner.scaling_exponents()
        }
        fn documented_box(&self) -> StateBox {
            self.inner.documented_box()
        }
        fn constraint(&self) -> Option<&ConstraintSpec> {
            self.inner.constraint()
        }
        fn a_inverse(&self, v: &State) -> Option<State> {
            self.inner.a_inverse(v)
        }
        fn density_index(&self) -> Option<usize> {
            self.inner.density_index()
        }
        fn wave_speed(&self, u: &State) -> Option<f64> {
            self.inner.wave_speed(u)
        }
    };
}

/// Adds `shift·u₁` to every entropy flux (and `shift·e₁` to its gradient).
#[derive(Debug, Clone)]
pub struct PerturbedEntropyFlux {
    pub inner: SharedSystem,
    pub shift: f64,
}

impl HyperbolicSystem for PerturbedEntropyFlux {
    delegate!();
    fn eta(&self, u: &State) -> f64 {
        self.inner.eta(u)
    }
    fn entropy_flux(&self, alpha: usize, u: &State) -> f64 {
        self.inner.entropy_flux(alpha, u) + self.shift * u[0]
    }
    fn multiplier(&self, u: &State) -> State {
        self.inner.multiplier(u)
    }
    fn grad_eta(&self, u: &State) -> State {
        self.inner.grad_eta(u)
    }
    fn grad_entropy_flux(&self, alpha: usize, u: &State) -> State {
        let mut g = self.inner.grad_entropy_flux(alpha, u);
        g[0] += self.shift;
        g
    }
    fn grad_multiplier(&self, u: &State) -> DMatrix<f64> {
        self.inner.grad_multiplier(u)
    }
    fn hess_eta(&self, u: &State) -> DMatrix<f64> {
        self.inner.hess_eta(u)
    }
    fn constraint_flux(&self, alpha: usize, u: &State) -> Option<State> {
        self.inner.constraint_flux(alpha, u)
    }
}

/// Replaces `(η, q, G)` by `(−η, −q, −G)`: the identities survive, the
/// convexity does not.
#[derive(Debug, Clone)]
pub struct NegatedEntropy {
    pub inner: SharedSystem,
}

impl HyperbolicSystem for NegatedEntropy {
    delegate!();
    fn eta(&self, u: &State) -> f64 {
        -self.inner.eta(u)
    }
    fn entropy_flux(&self, alpha: usize, u: &State) -> f64 {
        -self.inner.entropy_flux(alpha, u)
    }
    fn multiplier(&self, u: &State) -> State {
        -self.inner.multiplier(u)
    }
    fn grad_eta(&self, u: &State) -> State {
        -self.inner.grad_eta(u)
    }
    fn grad_entropy_flux(&self, alpha: usize, u: &State) -> State {
        -self.inner.grad_entropy_flux(alpha, u)
    }
    fn grad_multiplier(&self, u: &State) -> DMatrix<f64> {
        -self.inner.grad_multiplier(u)
    }
    fn hess_eta(&self, u: &State) -> DMatrix<f64> {
        -self.inner.hess_eta(u)
    }
    fn constraint_flux(&self, alpha: usize, u: &State) -> Option<State> {
        self.inner.constraint_flux(alpha, u).map(|l| -l)
    }
}
