//! The four constrained examples on the 2-torus. None of them has a solver;
//! their fields come from [`super::random_smooth_field`] followed by the
//! constraint projection.

use nalgebra::DMatrix;

use super::{
    delta, ConstraintSpec, DivergenceGroup, GroupOrigin, GroupTransform, HyperbolicSystem, State,
    StateBox, StateDomain,
};

const D: usize = 2;

fn group(name: &str, first: usize, transform: GroupTransform, origin: GroupOrigin) -> DivergenceGroup {
    DivergenceGroup { name: name.into(), components: vec![first, first + 1], transform, origin }
}

/// Incompressible Euler, `u = v`, `A = Id`, `F_α = v v_α`.
#[derive(Debug, Clone)]
pub struct IncompressibleEuler {
    domain: StateDomain,
    constraint: ConstraintSpec,
}

impl IncompressibleEuler {
    pub fn new() -> Self {
        Self {
            domain: StateDomain::unconstrained(D),
            constraint: ConstraintSpec::new(vec![group(
                "v",
                0,
                GroupTransform::Identity,
                GroupOrigin::Multiplier,
            )]),
        }
    }
}

impl Default for IncompressibleEuler {
    fn default() -> Self {
        Self::new()
    }
}

impl HyperbolicSystem for IncompressibleEuler {
    fn name(&self) -> &str {
        "inc-euler"
    }
    fn state_dim(&self) -> usize {
        D
    }
    fn space_dim(&self) -> usize {
        D
    }
    fn domain(&self) -> &StateDomain {
        &self.domain
    }
    fn a(&self, u: &State) -> State {
        u.clone()
    }
    fn flux(&self, alpha: usize, u: &State) -> State {
        u * u[alpha]
    }
    fn eta(&self, u: &State) -> f64 {
        0.5 * u.norm_squared()
    }
    fn entropy_flux(&self, alpha: usize, u: &State) -> f64 {
        0.5 * u.norm_squared() * u[alpha]
    }
    fn multiplier(&self, u: &State) -> State {
        u.clone()
    }
    fn grad_a(&self, _u: &State) -> DMatrix<f64> {
        DMatrix::identity(D, D)
    }
    fn grad_flux(&self, alpha: usize, u: &State) -> DMatrix<f64> {
        DMatrix::from_fn(D, D, |i, j| delta(i, j) * u[alpha] + u[i] * delta(j, alpha))
    }
    fn grad_eta(&self, u: &State) -> State {
        u.clone()
    }
    fn grad_entropy_flux(&self, alpha: usize, u: &State) -> State {
        let k = 0.5 * u.norm_squared();
        State::from_fn(D, |j, _| u[j] * u[alpha] + k * delta(j, alpha))
    }
    fn grad_multiplier(&self, _u: &State) -> DMatrix<f64> {
        DMatrix::identity(D, D)
    }
    fn hess_eta(&self, _u: &State) -> DMatrix<f64> {
        DMatrix::identity(D, D)
    }
    fn hess_a(&self, _u: &State) -> Vec<DMatrix<f64>> {
        vec![DMatrix::zeros(D, D); D]
    }
    fn scaling_exponents(&self) -> Vec<f64> {
        vec![1.0; D]
    }
    fn documented_box(&self) -> StateBox {
        StateBox::symmetric(D, 2.0)
    }
    fn constraint(&self) -> Option<&ConstraintSpec> {
        Some(&self.constraint)
    }
    fn constraint_flux(&self, alpha: usize, u: &State) -> Option<State> {
        let mut l = State::zeros(D);
        l[alpha] = 0.5 * u.norm_squared();
        Some(l)
    }
    fn a_inverse(&self, v: &State) -> Option<State> {
        (v.len() == D).then(|| v.clone())
    }
}

/// Incompressible MHD, `u = (v, b)`, `A = Id`.
#[derive(Debug, Clone)]
pub struct IncompressibleMhd {
    domain: StateDomain,
    constraint: ConstraintSpec,
}

impl IncompressibleMhd {
    pub fn new() -> Self {
        Self {
            domain: StateDomain::unconstrained(2 * D),
            constraint: ConstraintSpec::new(vec![
                group("v", 0, GroupTransform::Identity, GroupOrigin::Multiplier),
                group("b", D, GroupTransform::Identity, GroupOrigin::Transported),
            ]),
        }
    }
}

impl Default for IncompressibleMhd {
    fn default() -> Self {
        Self::new()
    }
}

fn vb(u: &State, vo: usize, bo: usize) -> f64 {
    (0..D).map(|i| u[vo + i] * u[bo + i]).sum()
}

/// Blocks of `∇F_α` shared by both MHD variants: the momentum rows' `b`
/// columns and the induction rows, with `v` at offset `vo` and `b` at `bo`.
fn fill_magnetic_blocks(m: &mut DMatrix<f64>, alpha: usize, u: &State, vo: usize, bo: usize) {
    let (va, ba) = (u[vo + alpha], u[bo + alpha]);
    for i in 0..D {
        for j in 0..D {
            m[(vo + i, bo + j)] = -delta(i, j) * ba - u[bo + i] * delta(j, alpha);
            m[(bo + i, vo + j)] = u[bo + i] * delta(j, alpha) - delta(i, j) * ba;
            m[(bo + i, bo + j)] = delta(i, j) * va - u[vo + i] * delta(j, alpha);
        }
    }
}

impl HyperbolicSystem for IncompressibleMhd {
    fn name(&self) -> &str {
        "inc-mhd"
    }
    fn state_dim(&self) -> usize {
        2 * D
    }
    fn space_dim(&self) -> usize {
        D
    }
    fn domain(&self) -> &StateDomain {
        &self.domain
    }
    fn a(&self, u: &State) -> State {
        u.clone()
    }
    fn flux(&self, alpha: usize, u: &State) -> State {
        let (va, ba) = (u[alpha], u[D + alpha]);
        let mut f = State::zeros(2 * D);
        for i in 0..D {
            f[i] = u[i] * va - u[D + i] * ba;
            f[D + i] = u[D + i] * va - u[i] * ba;
        }
        f
    }
    fn eta(&self, u: &State) -> f64 {
        0.5 * u.norm_squared()
    }
    fn entropy_flux(&self, alpha: usize, u: &State) -> f64 {
        0.5 * u.norm_squared() * u[alpha] - vb(u, 0, D) * u[D + alpha]
    }
    fn multiplier(&self, u: &State) -> State {
        u.clone()
    }
    fn grad_a(&self, _u: &State) -> DMatrix<f64> {
        DMatrix::identity(2 * D, 2 * D)
    }
    fn grad_flux(&self, alpha: usize, u: &State) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(2 * D, 2 * D);
        for i in 0..D {
            for j in 0..D {
                m[(i, j)] = delta(i, j) * u[alpha] + u[i] * delta(j, alpha);
            }
        }
        fill_magnetic_blocks(&mut m, alpha, u, 0, D);
        m
    }
    fn grad_eta(&self, u: &State) -> State {
        u.clone()
    }
    fn grad_entropy_flux(&self, alpha: usize, u: &State) -> State {
        let k = 0.5 * u.norm_squared();
        let c = vb(u, 0, D);
        let (va, ba) = (u[alpha], u[D + alpha]);
        let mut g = State::zeros(2 * D);
        for j in 0..D {
            g[j] = u[j] * va + k * delta(j, alpha) - u[D + j] * ba;
            g[D + j] = u[D + j] * va - u[j] * ba - c * delta(j, alpha);
        }
        g
    }
    fn grad_multiplier(&self, _u: &State) -> DMatrix<f64> {
        DMatrix::identity(2 * D, 2 * D)
    }
    fn hess_eta(&self, _u: &State) -> DMatrix<f64> {
        DMatrix::identity(2 * D, 2 * D)
    }
    fn hess_a(&self, _u: &State) -> Vec<DMatrix<f64>> {
        vec![DMatrix::zeros(2 * D, 2 * D); 2 * D]
    }
    fn scaling_exponents(&self) -> Vec<f64> {
        vec![1.0; 2 * D]
    }
    fn documented_box(&self) -> StateBox {
        StateBox::symmetric(2 * D, 2.0)
    }
    fn constraint(&self) -> Option<&ConstraintSpec> {
        Some(&self.constraint)
    }
    fn constraint_flux(&self, alpha: usize, u: &State) -> Option<State> {
        let mut l = State::zeros(2 * D);
        l[alpha] = 0.5 * u.norm_squared();
        l[D + alpha] = -vb(u, 0, D);
        Some(l)
    }
    fn a_inverse(&self, v: &State) -> Option<State> {
        (v.len() == 2 * D).then(|| v.clone())
    }
}

/// Nonhomogeneous incompressible Euler in `u = (ρ, √ρ v)` with entropy
/// `½(|u₂|² + ρ²)`.
#[derive(Debug, Clone)]
pub struct NonhomogeneousEuler {
    domain: StateDomain,
    constraint: ConstraintSpec,
}

impl NonhomogeneousEuler {
    pub fn new() -> Self {
        Self {
            domain: StateDomain::with_positive(D + 1, vec![0]),
            constraint: ConstraintSpec::new(vec![group(
                "v",
                1,
                GroupTransform::DivideBySqrtDensity(0),
                GroupOrigin::Multiplier,
            )]),
        }
    }
}

impl Default for NonhomogeneousEuler {
    fn default() -> Self {
        Self::new()
    }
}

impl HyperbolicSystem for NonhomogeneousEuler {
    fn name(&self) -> &str {
        "nonhom-inc-euler"
    }
    fn state_dim(&self) -> usize {
        D + 1
    }
    fn space_dim(&self) -> usize {
        D
    }
    fn domain(&self) -> &StateDomain {
        &self.domain
    }
    fn a(&self, u: &State) -> State {
        let s = u[0].sqrt();
        let mut out = u * s;
        out[0] = u[0];
        out
    }
    fn flux(&self, alpha: usize, u: &State) -> State {
        let ua = u[1 + alpha];
        let mut f = u * ua;
        f[0] = u[0].sqrt() * ua;
        f
    }
    fn eta(&self, u: &State) -> f64 {
        0.5 * u.norm_squared()
    }
    fn entropy_flux(&self, alpha: usize, u: &State) -> f64 {
        0.5 * u.norm_squared() * u[1 + alpha] / u[0].sqrt()
    }
    fn multiplier(&self, u: &State) -> State {
        let rho = u[0];
        let m2 = u.rows(1, D).norm_squared();
        let mut g = u / rho.sqrt();
        g[0] = rho - m2 / (2.0 * rho);
        g
    }
    fn grad_a(&self, u: &State) -> DMatrix<f64> {
        let s = u[0].sqrt();
        let mut m = DMatrix::zeros(D + 1, D + 1);
        m[(0, 0)] = 1.0;
        for i in 1..=D {
            m[(i, 0)] = u[i] / (2.0 * s);
            m[(i, i)] = s;
        }
        m
    }
    fn grad_flux(&self, alpha: usize, u: &State) -> DMatrix<f64> {
        let s = u[0].sqrt();
        let ua = u[1 + alpha];
        let mut m = DMatrix::zeros(D + 1, D + 1);
        m[(0, 0)] = ua / (2.0 * s);
        m[(0, 1 + alpha)] = s;
        for i in 0..D {
            for j in 0..D {
                m[(1 + i, 1 + j)] = delta(i, j) * ua + u[1 + i] * delta(j, alpha);
            }
        }
        m
    }
    fn grad_eta(&self, u: &State) -> State {
        u.clone()
    }
    fn grad_entropy_flux(&self, alpha: usize, u: &State) -> State {
        let rho = u[0];
        let s = rho.sqrt();
        let ua = u[1 + alpha];
        let w = 0.5 * u.norm_squared();
        let mut g = State::zeros(D + 1);
        g[0] = rho * ua / s - 0.5 * w * ua / (rho * s);
        for j in 0..D {
            g[1 + j] = (u[1 + j] * ua + w * delta(j, alpha)) / s;
        }
        g
    }
    fn grad_multiplier(&self, u: &State) -> DMatrix<f64> {
        let rho = u[0];
        let s = rho.sqrt();
        let m2 = u.rows(1, D).norm_squared();
        let mut m = DMatrix::zeros(D + 1, D + 1);
        m[(0, 0)] = 1.0 + m2 / (2.0 * rho * rho);
        for j in 1..=D {
            m[(0, j)] = -u[j] / rho;
            m[(j, 0)] = -0.5 * u[j] / (rho * s);
            m[(j, j)] = 1.0 / s;
        }
        m
    }
    fn hess_eta(&self, _u: &State) -> DMatrix<f64> {
        DMatrix::identity(D + 1, D + 1)
    }
    fn hess_a(&self, u: &State) -> Vec<DMatrix<f64>> {
        let rho = u[0];
        let s = rho.sqrt();
        let mut out = vec![DMatrix::zeros(D + 1, D + 1)];
        for i in 1..=D {
            let mut h = DMatrix::zeros(D + 1, D + 1);
            h[(0, 0)] = -0.25 * u[i] / (rho * s);
            h[(0, i)] = 0.5 / s;
            h[(i, 0)] = 0.5 / s;
            out.push(h);
        }
        out
    }
    fn scaling_exponents(&self) -> Vec<f64> {
        vec![1.0; D + 1]
    }
    fn documented_box(&self) -> StateBox {
        StateBox::density_first(D + 1, (0.5, 2.0), 2.0)
    }
    fn constraint(&self) -> Option<&ConstraintSpec> {
        Some(&self.constraint)
    }
    fn constraint_flux(&self, alpha: usize, u: &State) -> Option<State> {
        let rho = u[0];
        let mut l = State::zeros(D + 1);
        l[0] = -0.25 * rho.sqrt() * u[1 + alpha];
        l[1 + alpha] = 0.5 * rho * rho.sqrt();
        Some(l)
    }
    fn a_inverse(&self, v: &State) -> Option<State> {
        if v.len() != D + 1 || !(v[0] > 0.0) {
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
}

/// Nonhomogeneous incompressible MHD in `u = (ρ, v, b)`, `A = (ρ, ρv, b)`.
#[derive(Debug, Clone)]
pub struct NonhomogeneousMhd {
    domain: StateDomain,
    constraint: ConstraintSpec,
}

impl NonhomogeneousMhd {
    pub fn new() -> Self {
        Self {
            domain: StateDomain::with_positive(2 * D + 1, vec![0]),
            constraint: ConstraintSpec::new(vec![
                group("v", 1, GroupTransform::Identity, GroupOrigin::Multiplier),
                group("b", 1 + D, GroupTransform::Identity, GroupOrigin::Transported),
            ]),
        }
    }
}

impl Default for NonhomogeneousMhd {
    fn default() -> Self {
        Self::new()
    }
}

impl NonhomogeneousMhd {
    fn v2(u: &State) -> f64 {
        u.rows(1, D).norm_squared()
    }
    fn b2(u: &State) -> f64 {
        u.rows(1 + D, D).norm_squared()
    }
}

impl HyperbolicSystem for NonhomogeneousMhd {
    fn name(&self) -> &str {
        "nonhom-inc-mhd"
    }
    fn state_dim(&self) -> usize {
        2 * D + 1
    }
    fn space_dim(&self) -> usize {
        D
    }
    fn domain(&self) -> &StateDomain {
        &self.domain
    }
    fn a(&self, u: &State) -> State {
        let mut out = u.clone();
        for i in 1..=D {
            out[i] = u[0] * u[i];
        }
        out
    }
    fn flux(&self, alpha: usize, u: &State) -> State {
        let rho = u[0];
        let (va, ba) = (u[1 + alpha], u[1 + D + alpha]);
        let mut f = State::zeros(2 * D + 1);
        f[0] = rho * va;
        for i in 0..D {
            f[1 + i] = rho * u[1 + i] * va - u[1 + D + i] * ba;
            f[1 + D + i] = u[1 + D + i] * va - u[1 + i] * ba;
        }
        f
    }
    fn eta(&self, u: &State) -> f64 {
        0.5 * (u[0] * u[0] + u[0] * Self::v2(u) + Self::b2(u))
    }
    fn entropy_flux(&self, alpha: usize, u: &State) -> f64 {
        self.eta(u) * u[1 + alpha] - vb(u, 1, 1 + D) * u[1 + D + alpha]
    }
    fn multiplier(&self, u: &State) -> State {
        let mut g = u.clone();
        g[0] = u[0] - 0.5 * Self::v2(u);
        g
    }
    fn grad_a(&self, u: &State) -> DMatrix<f64> {
        let n = 2 * D + 1;
        let mut m = DMatrix::identity(n, n);
        for i in 1..=D {
            m[(i, 0)] = u[i];
            m[(i, i)] = u[0];
        }
        m
    }
    fn grad_flux(&self, alpha: usize, u: &State) -> DMatrix<f64> {
        let n = 2 * D + 1;
        let rho = u[0];
        let va = u[1 + alpha];
        let mut m = DMatrix::zeros(n, n);
        m[(0, 0)] = va;
        m[(0, 1 + alpha)] = rho;
        for i in 0..D {
            m[(1 + i, 0)] = u[1 + i] * va;
            for j in 0..D {
                m[(1 + i, 1 + j)] = rho * (delta(i, j) * va + u[1 + i] * delta(j, alpha));
            }
        }
        fill_magnetic_blocks(&mut m, alpha, u, 1, 1 + D);
        m
    }
    fn grad_eta(&self, u: &State) -> State {
        let mut g = u.clone();
        g[0] = u[0] + 0.5 * Self::v2(u);
        for i in 1..=D {
            g[i] = u[0] * u[i];
        }
        g
    }
    fn grad_entropy_flux(&self, alpha: usize, u: &State) -> State {
        let rho = u[0];
        let w = self.eta(u);
        let c = vb(u, 1, 1 + D);
        let (va, ba) = (u[1 + alpha], u[1 + D + alpha]);
        let mut g = State::zeros(2 * D + 1);
        g[0] = (rho + 0.5 * Self::v2(u)) * va;
        for j in 0..D {
            g[1 + j] = rho * u[1 + j] * va + w * delta(j, alpha) - u[1 + D + j] * ba;
            g[1 + D + j] = u[1 + D + j] * va - u[1 + j] * ba - c * delta(j, alpha);
        }
        g
    }
    fn grad_multiplier(&self, u: &State) -> DMatrix<f64> {
        let n = 2 * D + 1;
        let mut m = DMatrix::identity(n, n);
        for j in 1..=D {
            m[(0, j)] = -u[j];
        }
        m
    }
    fn hess_eta(&self, u: &State) -> DMatrix<f64> {
        let n = 2 * D + 1;
        let mut m = DMatrix::identity(n, n);
        for i in 1..=D {
            m[(0, i)] = u[i];
            m[(i, 0)] = u[i];
            m[(i, i)] = u[0];
        }
        m
    }
    fn hess_a(&self, _u: &State) -> Vec<DMatrix<f64>> {
        let n = 2 * D + 1;
        let mut out = vec![DMatrix::zeros(n, n); n];
        for i in 1..=D {
            out[i][(0, i)] = 1.0;
            out[i][(i, 0)] = 1.0;
        }
        out
    }
    fn scaling_exponents(&self) -> Vec<f64> {
        let mut e = vec![2.0; 2 * D + 1];
        for x in e.iter_mut().skip(1).take(D) {
            *x = 1.0;
        }
        e
    }
    fn documented_box(&self) -> StateBox {
        StateBox::density_first(2 * D + 1, (0.5, 2.0), 2.0)
    }
    fn constraint(&self) -> Option<&ConstraintSpec> {
        Some(&self.constraint)
    }
    fn constraint_flux(&self, alpha: usize, u: &State) -> Option<State> {
        let mut l = State::zeros(2 * D + 1);
        l[1 + alpha] = 0.5 * (u[0] * u[0] + Self::b2(u));
        l[1 + D + alpha] = -vb(u, 1, 1 + D);
        Some(l)
    }
    fn a_inverse(&self, v: &State) -> Option<State> {
        if v.len() != 2 * D + 1 || !(v[0] > 0.0) {
            return None;
        }
        let mut u = v.clone();
        for i in 1..=D {
            u[i] = v[i] / v[0];
        }
        Some(u)
    }
    fn density_index(&self) -> Option<usize> {
        Some(0)
    }
}
