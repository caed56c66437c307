//! Sampling-based certification of the structural hypotheses: invertible
//! `∇A` (H1), the entropy identities (H2), convexity of the relative entropy
//! (H3), entropy control of `A` and `F_α` at infinity (H4), relative fluxes
//! bounded by the relative entropy (H5), and the constrained variant (H2').
//!
//! Every "for all `u`" is realized by seeded sampling of a compact box plus
//! anisotropic rays; the reports publish the residuals and constants found.

mod defects;
mod derivatives;
mod rays;

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::relent::Linearization;
use crate::systems::{
    hessian_form_unchecked, HyperbolicSystem, State, StateBox,
};

pub use defects::{NegatedEntropy, PerturbedEntropyFlux};
pub use derivatives::{check_derivatives, fd_jacobian, DERIVATIVE_TOL};
pub use rays::{check_h4, ray_series, ray_state, RaySeries};

mod constrained;
pub use constrained::{check_h2prime, constraint_residual, ConstraintDesign};

/// Tolerance for residuals of identities that hold exactly.
pub const IDENTITY_TOL: f64 = 1e-8;
/// Lower bound on `|det ∇A|` and on the smallest (H3) eigenvalue.
pub const H1_DET_TOL: f64 = 1e-10;
pub const H3_EIGEN_TOL: f64 = 1e-10;
/// Pairs with `η(u|U)` below this are skipped in (H5).
pub const H5_SKIP: f64 = 1e-12;
/// Allowed relative change of the (H5) constant when the samples double.
pub const H5_DRIFT_TOL: f64 = 0.05;

/// Where and how densely the hypotheses are sampled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleDesign {
    pub compact_box: StateBox,
    pub n_samples: usize,
    pub ray_directions: usize,
    pub s_grid: Vec<f64>,
    pub seed: u64,
    /// Minimal distance of the box to the boundary of the state domain.
    pub margin: f64,
}

impl SampleDesign {
    /// 10³ samples of the system's documented box, 64 rays on `10¹..10⁶`.
    pub fn documented(system: &dyn HyperbolicSystem, seed: u64) -> Self {
        Self {
            compact_box: system.documented_box(),
            n_samples: 1000,
            ray_directions: 64,
            s_grid: crate::orlicz::geometric_grid(10.0, 1e6, 2),
            seed,
            margin: 1e-6,
        }
    }

    /// A box reaching from near vacuum to five times the documented box,
    /// used for the free state `u` in (H5).
    pub fn far_field(system: &dyn HyperbolicSystem, seed: u64) -> Self {
        let base = system.documented_box();
        let positive = &system.domain().positive;
        let mut lower = Vec::new();
        let mut upper = Vec::new();
        for i in 0..base.dim() {
            if positive.contains(&i) {
                lower.push(0.01);
                upper.push(5.0 * base.upper[i]);
            } else {
                let w = 5.0 * base.lower[i].abs().max(base.upper[i].abs());
                lower.push(-w);
                upper.push(w);
            }
        }
        Self { compact_box: StateBox::new(lower, upper), margin: 0.0, ..Self::documented(system, seed) }
    }

    pub fn with_samples(mut self, n: usize) -> Self {
        self.n_samples = n;
        self
    }

    pub fn validate(&self, system: &dyn HyperbolicSystem) -> Result<()> {
        let b = &self.compact_box;
        if b.dim() != system.state_dim() || !b.is_valid() {
            return Err(Error::Config(format!(
                "sample box must be a valid {}-dimensional box",
                system.state_dim()
            )));
        }
        if self.n_samples == 0 {
            return Err(Error::Config("n_samples must be positive".into()));
        }
        if self.s_grid.is_empty()
            || self.s_grid[0] <= 0.0
            || self.s_grid.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(Error::Config("s_grid must be positive and strictly increasing".into()));
        }
        let dist = b.boundary_distance(system.domain());
        if !(dist > self.margin) && !(self.margin == 0.0 && dist >= 0.0) {
            return Err(Error::Domain(format!(
                "sample box lies within {} of the boundary of X (margin {})",
                dist, self.margin
            )));
        }
        Ok(())
    }

    /// Seeded uniform samples followed by the box corners (for `n ≤ 5`).
    pub fn states(&self) -> Vec<State> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let b = &self.compact_box;
        let mut out: Vec<State> = (0..self.n_samples).map(|_| b.sample(&mut rng)).collect();
        let n = b.dim();
        if n <= 5 {
            for mask in 0..(1usize << n) {
                out.push(State::from_fn(n, |i, _| {
                    if mask >> i & 1 == 1 {
                        b.upper[i]
                    } else {
                        b.lower[i]
                    }
                }));
            }
        }
        out
    }

    /// Unit directions in the closure of the state domain: the normalized
    /// diagonal followed by seeded random directions.
    pub fn directions(&self, system: &dyn HyperbolicSystem) -> Vec<State> {
        let n = system.state_dim();
        let positive = &system.domain().positive;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0x5eed_d1ec);
        let mut out = vec![State::from_element(n, 1.0 / (n as f64).sqrt())];
        while out.len() < self.ray_directions.max(1) {
            let mut v = State::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
            let norm = v.norm();
            if !(norm > 1e-3 && norm <= 1.0) {
                continue;
            }
            v /= norm;
            for &i in positive {
                v[i] = v[i].abs();
            }
            out.push(v);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_bool(pass: bool) -> Self {
        if pass {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn passed(self) -> bool {
        self == Verdict::Pass
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub id: String,
    pub system: String,
    pub verdict: Verdict,
    pub tolerance: f64,
    pub residuals: BTreeMap<String, f64>,
    pub constants: BTreeMap<String, f64>,
    pub flags: BTreeMap<String, bool>,
    pub samples: usize,
    pub skipped: usize,
    pub seed: u64,
    pub notes: Vec<String>,
}

impl HypothesisReport {
    pub(crate) fn new(id: &str, system: &dyn HyperbolicSystem, tolerance: f64, seed: u64) -> Self {
        Self {
            id: id.into(),
            system: system.name().into(),
            verdict: Verdict::Fail,
            tolerance,
            residuals: BTreeMap::new(),
            constants: BTreeMap::new(),
            flags: BTreeMap::new(),
            samples: 0,
            skipped: 0,
            seed,
            notes: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict.passed()
    }
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a, x| a.max(x.abs()))
}

/// (H1): `∇A(u)` is nonsingular.
pub fn check_h1(system: &dyn HyperbolicSystem, design: &SampleDesign) -> Result<HypothesisReport> {
    design.validate(system)?;
    let states = design.states();
    let stats: Vec<(f64, f64)> = states
        .par_iter()
        .map(|u| {
            let g = system.grad_a(u);
            (g.determinant().abs(), linalg::condition_number(&g))
        })
        .collect();
    let min_det = stats.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    let max_cond = stats.iter().map(|s| s.1).fold(0.0, f64::max);
    let mut r = HypothesisReport::new("H1", system, H1_DET_TOL, design.seed);
    r.residuals.insert("min_abs_det".into(), min_det);
    r.constants.insert("max_condition".into(), max_cond);
    r.samples = states.len();
    r.verdict = Verdict::from_bool(min_det > H1_DET_TOL);
    Ok(r)
}

/// (H2): `∇η = G·∇A`, `∇q_α = G·∇F_α` (up to `L̄_α` for constrained
/// systems), symmetry of `∇Gᵀ∇A` and `∇Gᵀ∇F_α`, and `η ≥ 0`.
pub fn check_h2(system: &dyn HyperbolicSystem, design: &SampleDesign) -> Result<HypothesisReport> {
    design.validate(system)?;
    let states = design.states();
    let constrained = system.constraint().is_some();
    let rows: Vec<[f64; 5]> = states
        .par_iter()
        .map(|u| {
            let g = system.multiplier(u);
            let ga = system.grad_a(u);
            let gg = system.grad_multiplier(u);
            let eta_res = (system.grad_eta(u) - ga.transpose() * &g).amax();
            let ma = gg.transpose() * &ga;
            let sym_a = max_abs(&(&ma - ma.transpose()));
            let mut q_res: f64 = 0.0;
            let mut sym_f: f64 = 0.0;
            for alpha in 0..system.space_dim() {
                let gf = system.grad_flux(alpha, u);
                let mut lhs = system.grad_entropy_flux(alpha, u);
                if let Some(l) = system.constraint_flux(alpha, u) {
                    lhs += l;
                }
                q_res = q_res.max((lhs - gf.transpose() * &g).amax());
                let mf = gg.transpose() * &gf;
                sym_f = sym_f.max(max_abs(&(&mf - mf.transpose())));
            }
            [eta_res, q_res, sym_a, sym_f, (-system.eta(u)).max(0.0)]
        })
        .collect();
    let col = |k: usize| rows.iter().map(|r| r[k]).fold(0.0, f64::max);
    let mut r = HypothesisReport::new("H2", system, IDENTITY_TOL, design.seed);
    r.residuals.insert("grad_eta_minus_G_grad_A".into(), col(0));
    r.residuals.insert("grad_q_minus_G_grad_F".into(), col(1));
    r.residuals.insert("asymmetry_grad_G_grad_A".into(), col(2));
    r.residuals.insert("asymmetry_grad_G_grad_F".into(), col(3));
    r.residuals.insert("negative_eta".into(), col(4));
    let mut gated = vec![col(0), col(1), col(2), col(4)];
    if constrained {
        r.notes.push(
            "constrained system: the flux identity is checked in the form ∇q_α + L̄_α = G·∇F_α and \
             the symmetry of ∇Gᵀ∇F_α is reported without being required"
                .into(),
        );
    } else {
        gated.push(col(3));
    }
    r.flags.insert("constraint_form".into(), constrained);
    r.samples = states.len();
    r.verdict = Verdict::from_bool(gated.iter().all(|x| *x <= IDENTITY_TOL));
    Ok(r)
}

/// (H3): `∇²η − G·∇²A` is positive definite.
pub fn check_h3(system: &dyn HyperbolicSystem, design: &SampleDesign) -> Result<HypothesisReport> {
    design.validate(system)?;
    let states = design.states();
    let eig: Vec<(f64, f64)> = states
        .par_iter()
        .map(|u| {
            let m = hessian_form_unchecked(system, u);
            let e = SymmetricEigen::new(m).eigenvalues;
            (e.min(), e.max())
        })
        .collect();
    let min = eig.iter().map(|e| e.0).fold(f64::INFINITY, f64::min);
    let max = eig.iter().map(|e| e.1).fold(f64::NEG_INFINITY, f64::max);
    let mut r = HypothesisReport::new("H3", system, H3_EIGEN_TOL, design.seed);
    r.residuals.insert("min_eigenvalue".into(), min);
    r.constants.insert("max_eigenvalue".into(), max);
    r.samples = states.len();
    r.verdict = Verdict::from_bool(min > H3_EIGEN_TOL);
    Ok(r)
}

/// One (H5) sample: the free state `u` and the reference `U`.
type Pair = (State, State);

fn h5_ratio(system: &dyn HyperbolicSystem, lin: &Linearization, u: &State) -> Option<f64> {
    let eta = lin.relative_entropy(system, u);
    if !(eta >= H5_SKIP) || !eta.is_finite() {
        return None;
    }
    let f = (0..system.space_dim())
        .map(|alpha| lin.relative_flux(system, alpha, u).norm())
        .fold(0.0, f64::max);
    Some(f / eta)
}

fn h5_pairs(
    system: &dyn HyperbolicSystem,
    design_u: &SampleDesign,
    design_big_u: &SampleDesign,
) -> Vec<Pair> {
    let us = design_u.states();
    let big_us = design_big_u.states();
    let mut pairs = Vec::new();
    let density = system.density_index();
    for (i, u) in us.iter().enumerate() {
        let big_u = big_us[i % big_us.len()].clone();
        pairs.push((u.clone(), big_u.clone()));
        if let (Some(r), true) = (density, i % 10 == 0) {
            let mut vac = u.clone();
            vac[r] = 0.0;
            pairs.push((vac, big_u));
        }
    }
    let exps = system.scaling_exponents();
    for (j, beta) in design_u.directions(system).iter().enumerate() {
        let big_u = &big_us[j % big_us.len()];
        for &s in &design_u.s_grid {
            pairs.push((ray_state(&exps, beta, s), big_u.clone()));
        }
    }
    pairs
}

/// Coordinate (compass) ascent of the (H5) ratio in the joint variables
/// `(u, U)`, each confined to its sampling box.
fn refine_pair(
    system: &dyn HyperbolicSystem,
    pair: &Pair,
    u_box: &StateBox,
    big_u_box: &StateBox,
) -> f64 {
    let n = system.state_dim();
    let eval = |p: &Pair| -> f64 {
        Linearization::new(system, &p.1)
            .ok()
            .and_then(|lin| h5_ratio(system, &lin, &p.0))
            .unwrap_or(f64::NEG_INFINITY)
    };
    let mut best = pair.clone();
    let mut value = eval(&best);
    let mut steps: Vec<f64> = u_box.widths().iter().chain(big_u_box.widths().iter()).map(|w| 0.05 * w).collect();
    let floor: Vec<f64> = steps.iter().map(|s| s * 1e-5).collect();
    for _ in 0..400 {
        let mut improved = false;
        for k in 0..2 * n {
            for sign in [1.0, -1.0] {
                let mut cand = best.clone();
                if k < n {
                    cand.0[k] = (cand.0[k] + sign * steps[k]).clamp(u_box.lower[k], u_box.upper[k]);
                } else {
                    let i = k - n;
                    cand.1[i] = (cand.1[i] + sign * steps[k]).clamp(big_u_box.lower[i], big_u_box.upper[i]);
                }
                let v = eval(&cand);
                if v > value {
                    value = v;
                    best = cand;
                    improved = true;
                }
            }
        }
        if !improved {
            let mut all_small = true;
            for (s, f) in steps.iter_mut().zip(&floor) {
                *s *= 0.5;
                all_small &= *s < *f;
            }
            if all_small {
                break;
            }
        }
    }
    value
}

struct H5Estimate {
    c: f64,
    sampled: usize,
    skipped: usize,
}

fn h5_estimate(
    system: &dyn HyperbolicSystem,
    design_u: &SampleDesign,
    design_big_u: &SampleDesign,
) -> Result<H5Estimate> {
    let pairs = h5_pairs(system, design_u, design_big_u);
    let ratios: Vec<Option<f64>> = pairs
        .par_iter()
        .map(|(u, big_u)| {
            Linearization::new(system, big_u).ok().and_then(|lin| h5_ratio(system, &lin, u))
        })
        .collect();
    let skipped = ratios.iter().filter(|r| r.is_none()).count();
    let mut ranked: Vec<(usize, f64)> =
        ratios.iter().enumerate().filter_map(|(i, r)| r.map(|x| (i, x))).collect();
    if ranked.is_empty() {
        return Err(Error::Config("every (H5) pair was skipped".into()));
    }
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut c = ranked[0].1;
    let u_box = &design_u.compact_box;
    let starts: Vec<&Pair> = ranked
        .iter()
        .map(|(i, _)| &pairs[*i])
        .filter(|p| u_box.contains(&p.0))
        .take(8)
        .collect();
    let refined: Vec<f64> = starts
        .par_iter()
        .map(|p| refine_pair(system, p, u_box, &design_big_u.compact_box))
        .collect();
    for v in refined {
        c = c.max(v);
    }
    Ok(H5Estimate { c, sampled: pairs.len(), skipped })
}

/// (H5): `|F_α(u|U)| ≤ C η(u|U)` for `u` in the closure of the domain and
/// `U` in a compact interior set. The constant is estimated twice, with
/// `n` and `2n` samples, and must agree within 5%.
pub fn check_h5(
    system: &dyn HyperbolicSystem,
    design_u: &SampleDesign,
    design_big_u: &SampleDesign,
) -> Result<HypothesisReport> {
    design_big_u.validate(system)?;
    if design_big_u.margin <= 0.0 {
        return Err(Error::Domain("the reference box must keep a positive margin to ∂X".into()));
    }
    let mut relaxed = design_u.clone();
    relaxed.margin = 0.0;
    relaxed.validate(system)?;
    let single = h5_estimate(system, &relaxed, design_big_u)?;
    let doubled = h5_estimate(
        system,
        &relaxed.clone().with_samples(2 * relaxed.n_samples),
        &design_big_u.clone().with_samples(2 * design_big_u.n_samples),
    )?;
    let drift = (doubled.c - single.c).abs() / doubled.c.max(f64::MIN_POSITIVE);
    let mut r = HypothesisReport::new("H5", system, H5_DRIFT_TOL, design_u.seed);
    r.constants.insert("C".into(), doubled.c);
    r.constants.insert("C_single".into(), single.c);
    r.residuals.insert("doubling_drift".into(), drift);
    r.samples = doubled.sampled;
    r.skipped = doubled.skipped;
    r.verdict = Verdict::from_bool(doubled.c.is_finite() && drift <= H5_DRIFT_TOL);
    Ok(r)
}

/// All applicable checks on the documented boxes: H1 to H5, the derivative
/// cross-check and, for constrained systems, (H2').
pub fn certify(system: &dyn HyperbolicSystem, seed: u64) -> Result<Vec<HypothesisReport>> {
    certify_with(system, &SampleDesign::documented(system, seed))
}

/// [`certify`] on a custom design; the far field for (H5) uses the same
/// sample counts and the next seed.
pub fn certify_with(system: &dyn HyperbolicSystem, design: &SampleDesign) -> Result<Vec<HypothesisReport>> {
    let mut far = SampleDesign::far_field(system, design.seed.wrapping_add(1)).with_samples(design.n_samples);
    far.ray_directions = design.ray_directions;
    let mut out = vec![
        check_h1(system, design)?,
        check_h2(system, design)?,
        check_h3(system, design)?,
        check_h4(system, design)?,
        check_h5(system, &far, design)?,
        check_derivatives(system, design)?,
    ];
    if system.constraint().is_some() {
        out.push(check_h2prime(system, &ConstraintDesign { seed: design.seed, ..ConstraintDesign::default() })?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{CompressibleEuler, IncompressibleEuler};

    fn euler() -> CompressibleEuler {
        CompressibleEuler::new(1, 2.0, 1.0).unwrap()
    }

    #[test]
    fn h1_minimum_determinant_is_at_the_corner() {
        let sys = euler();
        let r = check_h1(&sys, &SampleDesign::documented(&sys, 1)).unwrap();
        assert!(r.passed());
        assert!((r.residuals["min_abs_det"] - 0.5f64.sqrt()).abs() < 1e-12);
        let id = check_h1(&IncompressibleEuler::new(), &SampleDesign::documented(&IncompressibleEuler::new(), 1))
            .unwrap();
        assert_eq!(id.residuals["min_abs_det"], 1.0);
    }

    #[test]
    fn box_touching_vacuum_is_rejected() {
        let sys = euler();
        let mut d = SampleDesign::documented(&sys, 1);
        d.compact_box = StateBox::new(vec![1e-12, -2.0], vec![1.0, 2.0]);
        assert!(matches!(check_h1(&sys, &d), Err(Error::Domain(_))));
    }

    #[test]
    fn directions_are_unit_and_admissible() {
        let sys = euler();
        let d = SampleDesign::documented(&sys, 3);
        for b in d.directions(&sys) {
            assert!((b.norm() - 1.0).abs() < 1e-12);
            assert!(b[0] >= 0.0);
        }
    }
}
