use nalgebra::DMatrix;

use super::{
    delta, ConstraintSpec, DivergenceGroup, GroupOrigin, GroupTransform, HyperbolicSystem, State,
    StateBox, StateDomain,
};
use crate::error::{Error, Result};

/// Shallow water magnetohydrodynamics on the 2-torus in the variables
/// `u = (h, √h v, √h b)`, without the `v Div(hb)` source.
///
/// Dropping the source breaks the exact entropy-flux identity; what remains
/// is `G·∇F_α = ∇q_α + L̄_α` with `L̄_α·∂_α u = −(v·b) Div(hb)`, which
/// vanishes under the transported constraint `Div(hb) = 0`.
#[derive(Debug, Clone)]
pub struct ShallowWaterMhd {
    gravity: f64,
    domain: StateDomain,
    constraint: ConstraintSpec,
}

const D: usize = 2;

impl ShallowWaterMhd {
    pub fn new(gravity: f64) -> Result<Self> {
        if !(gravity > 0.0 && gravity.is_finite()) {
            return Err(Error::Config(format!("swmhd needs g > 0, got {gravity}")));
        }
        Ok(Self {
            gravity,
            domain: StateDomain::with_positive(5, vec![0]),
            constraint: ConstraintSpec::new(vec![DivergenceGroup {
                name: "h b".into(),
                components: vec![3, 4],
                transform: GroupTransform::TimesSqrtDensity(0),
                origin: GroupOrigin::Transported,
            }]),
        })
    }

    pub fn gravity(&self) -> f64 {
        self.gravity
    }

    fn kinetic(u: &State) -> f64 {
        u.rows(1, 4).norm_squared()
    }

    fn cross(u: &State) -> f64 {
        u[1] * u[3] + u[2] * u[4]
    }
}

impl HyperbolicSystem for ShallowWaterMhd {
    fn name(&self) -> &str {
        "swmhd"
    }

    fn state_dim(&self) -> usize {
        5
    }

    fn space_dim(&self) -> usize {
        D
    }

    fn domain(&self) -> &StateDomain {
        &self.domain
    }

    fn a(&self, u: &State) -> State {
        let s = u[0].sqrt();
        State::from_column_slice(&[u[0], s * u[1], s * u[2], s * u[3], s * u[4]])
    }

    fn flux(&self, alpha: usize, u: &State) -> State {
        let g = self.gravity;
        let (va, ba) = (u[1 + alpha], u[3 + alpha]);
        let mut f = State::zeros(5);
        f[0] = u[0].sqrt() * va;
        for i in 0..D {
            f[1 + i] = u[1 + i] * va - u[3 + i] * ba + 0.5 * g * u[0] * u[0] * delta(i, alpha);
            f[3 + i] = u[3 + i] * va - u[1 + i] * ba;
        }
        f
    }

    fn eta(&self, u: &State) -> f64 {
        0.5 * Self::kinetic(u) + 0.5 * self.gravity * u[0] * u[0]
    }

    fn entropy_flux(&self, alpha: usize, u: &State) -> f64 {
        let h = u[0];
        let w = 0.5 * Self::kinetic(u) + self.gravity * h * h;
        (w * u[1 + alpha] - Self::cross(u) * u[3 + alpha]) / h.sqrt()
    }

    fn multiplier(&self, u: &State) -> State {
        let h = u[0];
        let s = h.sqrt();
        let mut g = u / s;
        g[0] = self.gravity * h - Self::kinetic(u) / (2.0 * h);
        g
    }

    fn grad_a(&self, u: &State) -> DMatrix<f64> {
        let s = u[0].sqrt();
        let mut m = DMatrix::zeros(5, 5);
        m[(0, 0)] = 1.0;
        for i in 1..5 {
            m[(i, 0)] = u[i] / (2.0 * s);
            m[(i, i)] = s;
        }
        m
    }

    fn grad_flux(&self, alpha: usize, u: &State) -> DMatrix<f64> {
        let g = self.gravity;
        let s = u[0].sqrt();
        let (va, ba) = (u[1 + alpha], u[3 + alpha]);
        let mut m = DMatrix::zeros(5, 5);
        m[(0, 0)] = va / (2.0 * s);
        m[(0, 1 + alpha)] = s;
        for i in 0..D {
            m[(1 + i, 0)] = g * u[0] * delta(i, alpha);
            for j in 0..D {
                m[(1 + i, 1 + j)] = delta(i, j) * va + u[1 + i] * delta(j, alpha);
                m[(1 + i, 3 + j)] = -delta(i, j) * ba - u[3 + i] * delta(j, alpha);
                m[(3 + i, 1 + j)] = u[3 + i] * delta(j, alpha) - delta(i, j) * ba;
                m[(3 + i, 3 + j)] = delta(i, j) * va - u[1 + i] * delta(j, alpha);
            }
        }
        m
    }

    fn grad_eta(&self, u: &State) -> State {
        let mut g = u.clone();
        g[0] = self.gravity * u[0];
        g
    }

    fn grad_entropy_flux(&self, alpha: usize, u: &State) -> State {
        let h = u[0];
        let s = h.sqrt();
        let w = 0.5 * Self::kinetic(u) + self.gravity * h * h;
        let b = Self::cross(u);
        let (va, ba) = (u[1 + alpha], u[3 + alpha]);
        let mut g = State::zeros(5);
        g[0] = 2.0 * self.gravity * h * va / s - 0.5 * (w * va - b * ba) / (h * s);
        for j in 0..D {
            g[1 + j] = (u[1 + j] * va + w * delta(j, alpha) - u[3 + j] * ba) / s;
            g[3 + j] = (u[3 + j] * va - u[1 + j] * ba - b * delta(j, alpha)) / s;
        }
        g
    }

    fn grad_multiplier(&self, u: &State) -> DMatrix<f64> {
        let h = u[0];
        let s = h.sqrt();
        let mut m = DMatrix::zeros(5, 5);
        m[(0, 0)] = self.gravity + Self::kinetic(u) / (2.0 * h * h);
        for j in 1..5 {
            m[(0, j)] = -u[j] / h;
            m[(j, 0)] = -0.5 * u[j] / (h * s);
            m[(j, j)] = 1.0 / s;
        }
        m
    }

    fn hess_eta(&self, _u: &State) -> DMatrix<f64> {
        let mut m = DMatrix::identity(5, 5);
        m[(0, 0)] = self.gravity;
        m
    }

    fn hess_a(&self, u: &State) -> Vec<DMatrix<f64>> {
        let h = u[0];
        let s = h.sqrt();
        let mut out = vec![DMatrix::zeros(5, 5)];
        for i in 1..5 {
            let mut m = DMatrix::zeros(5, 5);
            m[(0, 0)] = -0.25 * u[i] / (h * s);
            m[(0, i)] = 0.5 / s;
            m[(i, 0)] = 0.5 / s;
            out.push(m);
        }
        out
    }

    fn scaling_exponents(&self) -> Vec<f64> {
        vec![1.0; 5]
    }

    fn documented_box(&self) -> StateBox {
        StateBox::density_first(5, (0.5, 2.0), 2.0)
    }

    fn constraint(&self) -> Option<&ConstraintSpec> {
        Some(&self.constraint)
    }

    fn constraint_flux(&self, alpha: usize, u: &State) -> Option<State> {
        let h = u[0];
        let s = h.sqrt();
        let b = Self::cross(u);
        let mut l = State::zeros(5);
        l[0] = -b * u[3 + alpha] / (2.0 * h * s);
        l[3 + alpha] = -b / s;
        Some(l)
    }

    fn a_inverse(&self, v: &State) -> Option<State> {
        if v.len() != 5 || !(v[0] > 0.0) {
            return None;
        }
        let s = v[0].sqrt();
        let mut u = v / s;
        u[0] = v[0];
        Some(u)
    }

    fn density_index(&self) -> Option<usize> {
        Some(0)
    }

    fn wave_speed(&self, u: &State) -> Option<f64> {
        let h = u[0];
        if h <= 0.0 {
            return Some(0.0);
        }
        let v = (u[1] * u[1] + u[2] * u[2]).sqrt() / h.sqrt();
        let b2 = (u[3] * u[3] + u[4] * u[4]) / h;
        Some(v + (self.gravity * h + b2).sqrt())
    }
}
