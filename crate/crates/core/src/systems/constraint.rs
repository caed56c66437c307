//! Divergence constraints on the periodic torus and their spectral
//! (Helmholtz) projection.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::{HyperbolicSystem, State};
use crate::error::{Error, Result};

/// Cell-centred states on the uniform periodic grid with `n` cells per
/// dimension. The cell index is `i₀ + n·i₁`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateField {
    pub n: usize,
    pub d: usize,
    pub cells: Vec<State>,
}

impl StateField {
    pub fn new(n: usize, d: usize, cells: Vec<State>) -> Result<Self> {
        if n == 0 || !(1..=2).contains(&d) || cells.len() != n.pow(d as u32) {
            return Err(Error::Grid(format!(
                "{} cells do not fill a {d}-dimensional torus with {n} cells per side",
                cells.len()
            )));
        }
        Ok(Self { n, d, cells })
    }

    pub fn constant(n: usize, d: usize, u: &State) -> Self {
        Self { n, d, cells: vec![u.clone(); n.pow(d as u32)] }
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// One scalar component as a flat array.
    pub fn component(&self, c: usize) -> Vec<f64> {
        self.cells.iter().map(|u| u[c]).collect()
    }
}

/// Neighbour of `idx` shifted by `shift` cells along axis `alpha`.
pub(crate) fn shifted(idx: usize, n: usize, alpha: usize, shift: isize) -> usize {
    let stride = n.pow(alpha as u32);
    let i = (idx / stride) % n;
    let j = (i as isize + shift).rem_euclid(n as isize) as usize;
    idx + j * stride - i * stride
}

/// Centred difference `(w(i+1) − w(i−1)) / 2h` along `alpha`.
pub(crate) fn centered_difference(values: &[f64], n: usize, alpha: usize) -> Vec<f64> {
    let inv = n as f64 / 2.0;
    (0..values.len())
        .map(|i| (values[shifted(i, n, alpha, 1)] - values[shifted(i, n, alpha, -1)]) * inv)
        .collect()
}

/// Centred discrete divergence of the vector field whose `α`-th component
/// is `fields[α]`.
pub fn discrete_divergence(fields: &[Vec<f64>], n: usize) -> Vec<f64> {
    let mut div = vec![0.0; fields.first().map_or(0, Vec::len)];
    for (alpha, f) in fields.iter().enumerate() {
        for (acc, x) in div.iter_mut().zip(centered_difference(f, n, alpha)) {
            *acc += x;
        }
    }
    div
}

/// How the divergence-free field is read off the state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GroupTransform {
    Identity,
    /// `w = u_c / √u_ρ`
    DivideBySqrtDensity(usize),
    /// `w = √u_ρ · u_c`
    TimesSqrtDensity(usize),
}

/// Whether a group encodes `G(u) ∈ Y` or a constraint propagated by the
/// evolution (like `div b = 0`) that the entropy identity relies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GroupOrigin {
    Multiplier,
    Transported,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceGroup {
    pub name: String,
    /// One state component per space direction.
    pub components: Vec<usize>,
    pub transform: GroupTransform,
    pub origin: GroupOrigin,
}

impl DivergenceGroup {
    fn scale(&self, u: &State) -> f64 {
        match self.transform {
            GroupTransform::Identity => 1.0,
            GroupTransform::DivideBySqrtDensity(r) => 1.0 / u[r].sqrt(),
            GroupTransform::TimesSqrtDensity(r) => u[r].sqrt(),
        }
    }

    /// The vector field `w` whose divergence must vanish, one array per
    /// direction.
    pub fn extract(&self, field: &StateField) -> Vec<Vec<f64>> {
        self.components
            .iter()
            .map(|&c| field.cells.iter().map(|u| self.scale(u) * u[c]).collect())
            .collect()
    }

    fn write_back(&self, field: &mut StateField, w: &[Vec<f64>]) {
        for (k, &c) in self.components.iter().enumerate() {
            for (i, u) in field.cells.iter_mut().enumerate() {
                let s = self.scale(u);
                u[c] = w[k][i] / s;
            }
        }
    }
}

/// The constraint part of a system: `L̄_α` lives on the system trait, the
/// divergence groups here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSpec {
    pub groups: Vec<DivergenceGroup>,
}

impl ConstraintSpec {
    pub fn new(groups: Vec<DivergenceGroup>) -> Self {
        Self { groups }
    }

    /// Project every group onto discretely divergence-free fields.
    pub fn project(&self, field: &StateField) -> Result<StateField> {
        self.project_where(field, |_| true)
    }

    /// Project only the groups accepted by `select`; the rest is copied.
    pub fn project_where(
        &self,
        field: &StateField,
        select: impl Fn(&DivergenceGroup) -> bool,
    ) -> Result<StateField> {
        let mut out = field.clone();
        for g in self.groups.iter().filter(|g| select(g)) {
            if g.components.len() != field.d {
                return Err(Error::Grid(format!(
                    "group {} has {} components on a {}-dimensional torus",
                    g.name,
                    g.components.len(),
                    field.d
                )));
            }
            let mut w = g.extract(field);
            helmholtz_project(&mut w, field.n, field.d);
            g.write_back(&mut out, &w);
        }
        Ok(out)
    }

    /// Largest centred divergence over all groups.
    pub fn max_divergence(&self, field: &StateField) -> f64 {
        self.groups
            .iter()
            .flat_map(|g| discrete_divergence(&g.extract(field), field.n))
            .fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Membership in the discrete constraint set (`G(u) ∈ Y` together with
    /// the transported constraints).
    pub fn satisfied(&self, field: &StateField, tol: f64) -> bool {
        self.max_divergence(field) <= tol
    }
}

fn fft_axes(data: &mut [Complex<f64>], n: usize, d: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let fft = if inverse { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) };
    let mut line = vec![Complex::new(0.0, 0.0); n];
    for alpha in 0..d {
        let stride = n.pow(alpha as u32);
        for start in 0..data.len() {
            // Visit each line once: lines along `alpha` start where the
            // `alpha` index is zero.
            if !(start / stride).is_multiple_of(n) {
                continue;
            }
            for k in 0..n {
                line[k] = data[start + k * stride];
            }
            fft.process(&mut line);
            for k in 0..n {
                data[start + k * stride] = line[k];
            }
        }
    }
}

/// Remove the gradient part of `w` so that its centred divergence vanishes.
///
/// In Fourier space the centred difference has symbol `i σ(k)` with
/// `σ_α = sin(2πk_α/N)/h`, so `ŵ − σ (σ·ŵ)/|σ|²` is exactly free of centred
/// divergence. Modes with `σ = 0` are left alone.
pub(crate) fn helmholtz_project(w: &mut [Vec<f64>], n: usize, d: usize) {
    let len = n.pow(d as u32);
    let mut hats: Vec<Vec<Complex<f64>>> = w
        .iter()
        .map(|c| {
            let mut z: Vec<Complex<f64>> = c.iter().map(|&x| Complex::new(x, 0.0)).collect();
            fft_axes(&mut z, n, d, false);
            z
        })
        .collect();
    let sym: Vec<f64> =
        (0..n).map(|k| (2.0 * std::f64::consts::PI * k as f64 / n as f64).sin() * n as f64).collect();
    for idx in 0..len {
        let sigma: Vec<f64> = (0..d).map(|a| sym[(idx / n.pow(a as u32)) % n]).collect();
        let s2: f64 = sigma.iter().map(|s| s * s).sum();
        if s2 < 1e-12 {
            continue;
        }
        let dot: Complex<f64> = (0..d).map(|a| hats[a][idx] * sigma[a]).sum();
        for a in 0..d {
            hats[a][idx] -= dot * (sigma[a] / s2);
        }
    }
    let scale = 1.0 / len as f64;
    for (c, mut z) in w.iter_mut().zip(hats) {
        fft_axes(&mut z, n, d, true);
        for (x, zi) in c.iter_mut().zip(z) {
            *x = zi.re * scale;
        }
    }
}

/// A random smooth periodic field of `system` states on the 2-torus, built
/// from Fourier modes up to `max_mode` with `1/(1+|k|²)` decay. Density
/// components stay within `1 ± 0.3`, the others within `±1`.
pub fn random_smooth_field(
    system: &dyn HyperbolicSystem,
    n: usize,
    max_mode: usize,
    seed: u64,
) -> StateField {
    let d = system.space_dim();
    let len = n.pow(d as u32);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let positive = &system.domain().positive;
    let m = max_mode as i64;
    let modes: Vec<Vec<i64>> = if d == 1 {
        (-m..=m).filter(|&k| k != 0).map(|k| vec![k]).collect()
    } else {
        (-m..=m)
            .flat_map(|a| (-m..=m).map(move |b| vec![a, b]))
            .filter(|k| k.iter().any(|&x| x != 0))
            .collect()
    };
    let mut cells = vec![State::zeros(system.state_dim()); len];
    for c in 0..system.state_dim() {
        let coeffs: Vec<(f64, f64)> = modes
            .iter()
            .map(|k| {
                let decay = 1.0 / (1.0 + k.iter().map(|x| (x * x) as f64).sum::<f64>());
                (decay * rng.random_range(-1.0..1.0), decay * rng.random_range(-1.0..1.0))
            })
            .collect();
        let norm: f64 = coeffs.iter().map(|(a, b)| a.abs() + b.abs()).sum::<f64>().max(1e-300);
        let (base, amp) = if positive.contains(&c) { (1.0, 0.3) } else { (0.0, 1.0) };
        for (idx, cell) in cells.iter_mut().enumerate() {
            let x: Vec<f64> = (0..d).map(|a| ((idx / n.pow(a as u32)) % n) as f64 + 0.5).collect();
            let mut s = 0.0;
            for (k, (a, b)) in modes.iter().zip(&coeffs) {
                let phase = 2.0 * std::f64::consts::PI
                    * k.iter().zip(&x).map(|(ki, xi)| *ki as f64 * xi).sum::<f64>()
                    / n as f64;
                s += a * phase.cos() + b * phase.sin();
            }
            cell[c] = base + amp * s / norm;
        }
    }
    StateField { n, d, cells }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{IncompressibleMhd, NonhomogeneousEuler, ShallowWaterMhd};

    #[test]
    fn shift_wraps_around() {
        assert_eq!(shifted(0, 4, 0, -1), 3);
        assert_eq!(shifted(3, 4, 0, 1), 0);
        assert_eq!(shifted(1, 4, 1, -1), 13);
        assert_eq!(shifted(13, 4, 1, 1), 1);
    }

    #[test]
    fn projection_is_divergence_free_and_idempotent() {
        let systems: Vec<Box<dyn HyperbolicSystem>> = vec![
            Box::new(IncompressibleMhd::new()),
            Box::new(NonhomogeneousEuler::new()),
            Box::new(ShallowWaterMhd::new(1.0).unwrap()),
        ];
        for sys in systems {
            let spec = sys.constraint().unwrap();
            let f = random_smooth_field(sys.as_ref(), 16, 3, 7);
            assert!(spec.max_divergence(&f) > 1e-3);
            let p = spec.project(&f).unwrap();
            assert!(spec.max_divergence(&p) < 1e-10, "{}", sys.name());
            let pp = spec.project(&p).unwrap();
            let diff = p.cells.iter().zip(&pp.cells).map(|(a, b)| (a - b).amax()).fold(0.0, f64::max);
            assert!(diff < 1e-10);
        }
    }

    #[test]
    fn gradient_field_projects_to_its_mean() {
        // w = ∇φ for φ = sin(2πx)cos(2πy) has zero divergence-free part
        // apart from its (zero) mean.
        let n = 16;
        let tau = 2.0 * std::f64::consts::PI;
        let mut w = vec![vec![0.0; n * n]; 2];
        for idx in 0..n * n {
            let x = ((idx % n) as f64 + 0.5) / n as f64;
            let y = ((idx / n) as f64 + 0.5) / n as f64;
            w[0][idx] = tau * (tau * x).cos() * (tau * y).cos();
            w[1][idx] = -tau * (tau * x).sin() * (tau * y).sin();
        }
        helmholtz_project(&mut w, n, 2);
        assert!(w.iter().flatten().all(|x| x.abs() < 1e-10));
    }
}
