use nalgebra::DMatrix;

use super::{delta, HyperbolicSystem, State, StateBox, StateDomain};
use crate::error::{Error, Result};

/// Isentropic compressible Euler with a γ-law pressure `p(ρ) = κ ρ^γ`,
/// written in the variables `u = (ρ, √ρ v)`.
///
/// The entropy is `½|u₂|² + P(u₁) + c` where `P(ρ) = ρ ∫₁^ρ p(r)/r² dr` and
/// `c` is the constant making `min (P + c) = 0`.
#[derive(Debug, Clone)]
pub struct CompressibleEuler {
    dim: usize,
    gamma: f64,
    kappa: f64,
    offset: f64,
    domain: StateDomain,
}

impl CompressibleEuler {
    pub fn new(dim: usize, gamma: f64, kappa: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::Config(format!("euler supports 1 to 3 space dimensions, got {dim}")));
        }
        if !(gamma >= 1.0 && gamma.is_finite()) || !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::Config(format!(
                "euler needs gamma >= 1 and kappa > 0 (gamma = {gamma}, kappa = {kappa})"
            )));
        }
        let mut sys = Self {
            dim,
            gamma,
            kappa,
            offset: 0.0,
            domain: StateDomain::with_positive(dim + 1, vec![0]),
        };
        sys.offset = sys.natural_offset();
        Ok(sys)
    }

    /// Replace the additive constant of the pressure potential.
    pub fn with_potential_offset(mut self, offset: f64) -> Self {
        self.offset = offset;
        self
    }

    pub fn potential_offset(&self) -> f64 {
        self.offset
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    fn natural_offset(&self) -> f64 {
        if self.gamma == 1.0 {
            self.kappa * (-1.0f64).exp()
        } else {
            let rho_star = self.gamma.powf(-1.0 / (self.gamma - 1.0));
            -self.pressure_potential(rho_star)
        }
    }

    pub fn pressure(&self, rho: f64) -> f64 {
        self.kappa * rho.powf(self.gamma)
    }

    pub fn pressure_derivative(&self, rho: f64) -> f64 {
        self.kappa * self.gamma * rho.powf(self.gamma - 1.0)
    }

    /// `P(ρ)` without the nonnegativity offset.
    pub fn pressure_potential(&self, rho: f64) -> f64 {
        if rho == 0.0 {
            return 0.0;
        }
        if self.gamma == 1.0 {
            self.kappa * rho * rho.ln()
        } else {
            self.kappa * (rho.powf(self.gamma) - rho) / (self.gamma - 1.0)
        }
    }

    fn potential_d1(&self, rho: f64) -> f64 {
        if self.gamma == 1.0 {
            self.kappa * (rho.ln() + 1.0)
        } else {
            self.kappa * (self.gamma * rho.powf(self.gamma - 1.0) - 1.0) / (self.gamma - 1.0)
        }
    }

    fn potential_d2(&self, rho: f64) -> f64 {
        self.kappa * self.gamma * rho.powf(self.gamma - 2.0)
    }

    fn momentum_sq(&self, u: &State) -> f64 {
        u.rows(1, self.dim).norm_squared()
    }
}

impl HyperbolicSystem for CompressibleEuler {
    fn name(&self) -> &str {
        "euler"
    }

    fn state_dim(&self) -> usize {
        self.dim + 1
    }

    fn space_dim(&self) -> usize {
        self.dim
    }

    fn domain(&self) -> &StateDomain {
        &self.domain
    }

    fn a(&self, u: &State) -> State {
        let s = u[0].sqrt();
        let mut out = u.clone();
        for i in 1..=self.dim {
            out[i] = s * u[i];
        }
        out
    }

    fn flux(&self, alpha: usize, u: &State) -> State {
        let ua = u[1 + alpha];
        let p = self.pressure(u[0]);
        let mut out = State::zeros(self.dim + 1);
        out[0] = u[0].sqrt() * ua;
        for i in 0..self.dim {
            out[1 + i] = u[1 + i] * ua + p * delta(i, alpha);
        }
        out
    }

    fn eta(&self, u: &State) -> f64 {
        0.5 * self.momentum_sq(u) + self.pressure_potential(u[0]) + self.offset
    }

    fn entropy_flux(&self, alpha: usize, u: &State) -> f64 {
        let rho = u[0];
        let w = 0.5 * self.momentum_sq(u) + self.pressure_potential(rho) + self.pressure(rho);
        w * u[1 + alpha] / rho.sqrt()
    }

    fn multiplier(&self, u: &State) -> State {
        let rho = u[0];
        let s = rho.sqrt();
        let mut g = State::zeros(self.dim + 1);
        g[0] = self.potential_d1(rho) - self.momentum_sq(u) / (2.0 * rho);
        for i in 1..=self.dim {
            g[i] = u[i] / s;
        }
        g
    }

    fn grad_a(&self, u: &State) -> DMatrix<f64> {
        let n = self.dim + 1;
        let s = u[0].sqrt();
        let mut m = DMatrix::zeros(n, n);
        m[(0, 0)] = 1.0;
        for i in 1..n {
            m[(i, 0)] = u[i] / (2.0 * s);
            m[(i, i)] = s;
        }
        m
    }

    fn grad_flux(&self, alpha: usize, u: &State) -> DMatrix<f64> {
        let n = self.dim + 1;
        let s = u[0].sqrt();
        let ua = u[1 + alpha];
        let dp = self.pressure_derivative(u[0]);
        let mut m = DMatrix::zeros(n, n);
        m[(0, 0)] = ua / (2.0 * s);
        m[(0, 1 + alpha)] = s;
        for i in 0..self.dim {
            m[(1 + i, 0)] = dp * delta(i, alpha);
            for j in 0..self.dim {
                m[(1 + i, 1 + j)] = delta(i, j) * ua + u[1 + i] * delta(j, alpha);
            }
        }
        m
    }

    fn grad_eta(&self, u: &State) -> State {
        let mut g = u.clone();
        g[0] = self.potential_d1(u[0]);
        g
    }

    fn grad_entropy_flux(&self, alpha: usize, u: &State) -> State {
        let rho = u[0];
        let s = rho.sqrt();
        let ua = u[1 + alpha];
        let w = 0.5 * self.momentum_sq(u) + self.pressure_potential(rho) + self.pressure(rho);
        let mut g = State::zeros(self.dim + 1);
        g[0] = (self.potential_d1(rho) + self.pressure_derivative(rho)) * ua / s - 0.5 * w * ua / (rho * s);
        for j in 0..self.dim {
            g[1 + j] = (u[1 + j] * ua + w * delta(j, alpha)) / s;
        }
        g
    }

    fn grad_multiplier(&self, u: &State) -> DMatrix<f64> {
        let n = self.dim + 1;
        let rho = u[0];
        let s = rho.sqrt();
        let mut m = DMatrix::zeros(n, n);
        m[(0, 0)] = self.potential_d2(rho) + self.momentum_sq(u) / (2.0 * rho * rho);
        for j in 1..n {
            m[(0, j)] = -u[j] / rho;
            m[(j, 0)] = -0.5 * u[j] / (rho * s);
            m[(j, j)] = 1.0 / s;
        }
        m
    }

    fn hess_eta(&self, u: &State) -> DMatrix<f64> {
        let mut m = DMatrix::identity(self.dim + 1, self.dim + 1);
        m[(0, 0)] = self.potential_d2(u[0]);
        m
    }

    fn hess_a(&self, u: &State) -> Vec<DMatrix<f64>> {
        let n = self.dim + 1;
        let rho = u[0];
        let s = rho.sqrt();
        let mut out = vec![DMatrix::zeros(n, n)];
        for i in 1..n {
            let mut h = DMatrix::zeros(n, n);
            h[(0, 0)] = -0.25 * u[i] / (rho * s);
            h[(0, i)] = 0.5 / s;
            h[(i, 0)] = 0.5 / s;
            out.push(h);
        }
        out
    }

    fn scaling_exponents(&self) -> Vec<f64> {
        let mut e = vec![1.0; self.dim + 1];
        e[0] = 2.0;
        e
    }

    fn documented_box(&self) -> StateBox {
        StateBox::density_first(self.dim + 1, (0.5, 2.0), 2.0)
    }

    fn a_inverse(&self, v: &State) -> Option<State> {
        if v.len() != self.dim + 1 || !(v[0] > 0.0) {
            return None;
        }
        let s = v[0].sqrt();
        let mut u = v.clone();
        for i in 1..=self.dim {
            u[i] = v[i] / s;
        }
        Some(u)
    }

    fn density_index(&self) -> Option<usize> {
        Some(0)
    }

    fn wave_speed(&self, u: &State) -> Option<f64> {
        let rho = u[0];
        let speed = if rho > 0.0 { self.momentum_sq(u).sqrt() / rho.sqrt() } else { 0.0 };
        Some(speed + self.pressure_derivative(rho).sqrt())
    }
}
