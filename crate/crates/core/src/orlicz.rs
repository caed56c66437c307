//! N-functions, Fenchel conjugates and the "essentially stronger" relation.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};

/// Default bound on the maximizer in [`fenchel_conjugate`].
pub const CONJUGATE_CAP: f64 = 1e9;
/// Default number of golden-section iterations.
pub const CONJUGATE_ITERATIONS: usize = 200;

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A convex `M: ℝ₊ → ℝ₊` with `M(0) = 0`, superlinear at infinity and
/// sublinear at zero.
#[derive(Clone)]
pub struct NFunction {
    pub name: String,
    m: RealFn,
    conjugate: Option<RealFn>,
}

impl fmt::Debug for NFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NFunction").field("name", &self.name).finish()
    }
}

impl NFunction {
    pub fn new(name: impl Into<String>, m: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { name: name.into(), m: Arc::new(m), conjugate: None }
    }

    pub fn with_conjugate(mut self, c: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.conjugate = Some(Arc::new(c));
        self
    }

    /// `M₁(ρ) = ρ² √log(ρ + 1)`.
    pub fn m1() -> Self {
        Self::new("M1", |r: f64| r * r * (r.ln_1p()).sqrt())
    }

    /// `M₂(ρ) = ρ²`, with exact conjugate `ξ²/4`.
    pub fn m2() -> Self {
        Self::new("M2", |r: f64| r * r).with_conjugate(|x: f64| 0.25 * x * x)
    }

    /// `M(ρ) = c ρ^p` for `p > 1`, conjugate in closed form.
    pub fn power(c: f64, p: f64) -> Self {
        let q = p / (p - 1.0);
        let k = (p - 1.0) * c * (c * p).powf(-q);
        Self::new(format!("{c}*r^{p}"), move |r: f64| c * r.powf(p))
            .with_conjugate(move |x: f64| k * x.powf(q))
    }

    pub fn eval(&self, r: f64) -> f64 {
        (self.m)(r)
    }

    pub fn closed_conjugate(&self, xi: f64) -> Option<f64> {
        self.conjugate.as_ref().map(|c| c(xi))
    }

    /// Midpoint convexity, `M(0) = 0` and the two limits of `M(v)/v`,
    /// probed on a geometric grid.
    pub fn looks_like_n_function(&self) -> bool {
        if self.eval(0.0) != 0.0 {
            return false;
        }
        let grid: Vec<f64> = (-60..=60).map(|i| 10f64.powf(i as f64 / 10.0)).collect();
        let convex = grid.windows(2).all(|w| {
            let (a, b) = (w[0], w[1]);
            self.eval(0.5 * (a + b)) <= 0.5 * (self.eval(a) + self.eval(b)) * (1.0 + 1e-12)
        });
        let lo = self.eval(grid[0]) / grid[0];
        let hi = self.eval(grid[grid.len() - 1]) / grid[grid.len() - 1];
        convex && lo < 1e-3 && hi > 1e3
    }
}

/// `M*(ξ) = sup_ρ (ξρ − M(ρ))` by golden-section search on `[0, cap]`.
pub fn fenchel_conjugate(m: &NFunction, xi: f64, search_cap: f64) -> Result<f64> {
    fenchel_conjugate_with(m, xi, search_cap, CONJUGATE_ITERATIONS)
}

pub fn fenchel_conjugate_with(m: &NFunction, xi: f64, search_cap: f64, iterations: usize) -> Result<f64> {
    if !(xi >= 0.0) {
        return Err(Error::Config(format!("conjugate needs ξ ≥ 0, got {xi}")));
    }
    if xi == 0.0 {
        return Ok(0.0);
    }
    let obj = |r: f64| xi * r - m.eval(r);
    // Bracket the maximizer by doubling before the golden-section phase.
    let mut hi = 1.0f64.min(search_cap);
    while hi < search_cap && obj((2.0 * hi).min(search_cap)) >= obj(hi) {
        hi = (2.0 * hi).min(search_cap);
    }
    let (mut a, mut b) = (0.0, (2.0 * hi).min(search_cap));
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (obj(c), obj(d));
    for _ in 0..iterations {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = obj(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = obj(d);
        }
    }
    let r = 0.5 * (a + b);
    if r >= search_cap * (1.0 - 1e-9) {
        return Err(Error::Cap { cap: search_cap });
    }
    Ok(obj(r).max(fc).max(fd).max(0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FenchelYoungReport {
    pub function: String,
    pub samples: usize,
    pub max_violation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Largest `vw − M(v) − M*(w)` over `samples` seeded random pairs in
/// `[0, range]²`. The closed-form conjugate is used when available.
pub fn fenchel_young_check(
    m: &NFunction,
    samples: usize,
    range: f64,
    seed: u64,
    tolerance: f64,
) -> Result<FenchelYoungReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs: Vec<(f64, f64)> =
        (0..samples).map(|_| (range * rng.random::<f64>(), range * rng.random::<f64>())).collect();
    let mut worst = f64::NEG_INFINITY;
    for (v, w) in pairs {
        let conj = match m.closed_conjugate(w) {
            Some(c) => c,
            None => fenchel_conjugate(m, w, CONJUGATE_CAP)?,
        };
        worst = worst.max(v * w - m.eval(v) - conj);
    }
    Ok(FenchelYoungReport {
        function: m.name.clone(),
        samples,
        max_violation: worst,
        tolerance,
        pass: worst <= tolerance,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioRow {
    pub lambda: f64,
    pub ratios: Vec<f64>,
    pub terminal_fraction: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrongerReport {
    pub stronger: String,
    pub weaker: String,
    pub v_grid: Vec<f64>,
    pub rows: Vec<RatioRow>,
    pub xi_grid: Vec<f64>,
    pub dual_ratios: Vec<f64>,
    pub dual_decreasing: bool,
    pub pass: bool,
}

/// Probe whether `m1` is essentially stronger than `m2`: for every `λ` the
/// ratio `M₂(λv)/M₁(v)` must fall to at most 5% of its first value along
/// `v_grid`, and the dual ratio `M₁*(ξ)/M₂*(ξ)` must decrease along
/// `xi_grid`.
pub fn essentially_stronger_check(
    m1: &NFunction,
    m2: &NFunction,
    lambda_grid: &[f64],
    v_grid: &[f64],
    xi_grid: &[f64],
) -> Result<StrongerReport> {
    let increasing = |g: &[f64]| !g.is_empty() && g.windows(2).all(|w| w[0] < w[1]);
    if !increasing(v_grid) || !increasing(xi_grid) || lambda_grid.is_empty() {
        return Err(Error::Config("grids must be nonempty and strictly increasing".into()));
    }
    let rows: Vec<RatioRow> = lambda_grid
        .iter()
        .map(|&lambda| {
            let ratios: Vec<f64> = v_grid.iter().map(|&v| m2.eval(lambda * v) / m1.eval(v)).collect();
            let terminal_fraction = ratios[ratios.len() - 1] / ratios[0];
            RatioRow { lambda, ratios, terminal_fraction, pass: terminal_fraction <= 0.05 }
        })
        .collect();
    let conj = |m: &NFunction, xi: f64| match m.closed_conjugate(xi) {
        Some(c) => Ok(c),
        None => fenchel_conjugate(m, xi, CONJUGATE_CAP),
    };
    let dual_ratios = xi_grid
        .iter()
        .map(|&xi| Ok(conj(m1, xi)? / conj(m2, xi)?))
        .collect::<Result<Vec<f64>>>()?;
    let dual_decreasing = dual_ratios.windows(2).all(|w| w[1] < w[0]);
    let pass = rows.iter().all(|r| r.pass) && dual_decreasing;
    Ok(StrongerReport {
        stronger: m1.name.clone(),
        weaker: m2.name.clone(),
        v_grid: v_grid.to_vec(),
        rows,
        xi_grid: xi_grid.to_vec(),
        dual_ratios,
        dual_decreasing,
        pass,
    })
}

/// Grids used when none are configured: `v` from 0.05 to 1e12, `ξ` from
/// 1e2 to 1e6, and scalings `λ ∈ {0.5, 1, 2, 4}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrongerGrids {
    pub lambda: Vec<f64>,
    pub v: Vec<f64>,
    pub xi: Vec<f64>,
}

impl Default for StrongerGrids {
    fn default() -> Self {
        Self {
            lambda: vec![0.5, 1.0, 2.0, 4.0],
            v: geometric_grid(0.05, 1e12, 2),
            xi: geometric_grid(1e2, 1e6, 2),
        }
    }
}

/// Geometric grid with `per_decade` points per factor of ten.
pub fn geometric_grid(start: f64, end: f64, per_decade: usize) -> Vec<f64> {
    let decades = (end / start).log10();
    let steps = (decades * per_decade as f64).round() as usize;
    (0..=steps).map(|i| start * 10f64.powf(decades * i as f64 / steps as f64)).collect()
}
