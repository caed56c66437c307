use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{HypothesisReport, Verdict};
use crate::error::{Error, Result};
use crate::linalg;
use crate::systems::constraint::centered_difference;
use crate::systems::{random_smooth_field, GroupOrigin, HyperbolicSystem, StateField};

/// Residuals at or below this are treated as exact zeros when measuring the
/// refinement order.
pub const NOISE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintDesign {
    pub n_fields: usize,
    /// Cells per side, increasing.
    pub grids: Vec<usize>,
    pub max_mode: usize,
    pub seed: u64,
    /// Project the transported groups too. Turning this off leaves e.g.
    /// the magnetic field of incompressible MHD unconstrained.
    pub project_transported: bool,
}

impl Default for ConstraintDesign {
    fn default() -> Self {
        Self { n_fields: 4, grids: vec![32, 64, 128], max_mode: 4, seed: 0, project_transported: true }
    }
}

/// `h^d Σ_cells Σ_α L̄_α(u)·D_α u` with centred differences `D_α`.
pub fn constraint_residual(system: &dyn HyperbolicSystem, field: &StateField) -> Result<f64> {
    if system.constraint().is_none() {
        return Err(Error::Config(format!("{} has no constraint", system.name())));
    }
    let n = system.state_dim();
    let mut total = 0.0;
    for alpha in 0..field.d {
        let derivs: Vec<Vec<f64>> =
            (0..n).map(|c| centered_difference(&field.component(c), field.n, alpha)).collect();
        for (i, u) in field.cells.iter().enumerate() {
            let l = system.constraint_flux(alpha, u).expect("constrained system provides L̄");
            total += (0..n).map(|c| l[c] * derivs[c][i]).sum::<f64>();
        }
    }
    Ok(total * field.h().powi(field.d as i32))
}

/// (H2'): on random smooth fields satisfying the discrete constraints the
/// integral of `L̄_α·∂_α u` must vanish to first order in `h`.
pub fn check_h2prime(system: &dyn HyperbolicSystem, design: &ConstraintDesign) -> Result<HypothesisReport> {
    let spec = system
        .constraint()
        .ok_or_else(|| Error::Config(format!("{} has no constraint", system.name())))?;
    if design.grids.is_empty() || design.n_fields == 0 || design.grids.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("constraint design needs fields and increasing grids".into()));
    }
    let mut r = HypothesisReport::new("H2prime", system, f64::NAN, design.seed);
    let mut hs = Vec::new();
    let mut worst = Vec::new();
    let mut pass = true;
    for &n in &design.grids {
        let residuals: Vec<Result<f64>> = (0..design.n_fields)
            .into_par_iter()
            .map(|k| {
                let raw = random_smooth_field(system, n, design.max_mode, design.seed.wrapping_add(k as u64));
                let field = spec.project_where(&raw, |g| {
                    design.project_transported || g.origin == GroupOrigin::Multiplier
                })?;
                constraint_residual(system, &field)
            })
            .collect();
        let max = residuals.into_iter().collect::<Result<Vec<_>>>()?.into_iter().fold(0.0f64, |a, x| a.max(x.abs()));
        let h = 1.0 / n as f64;
        pass &= max <= h;
        r.residuals.insert(format!("N{n}"), max);
        hs.push(h);
        worst.push(max);
    }
    let (mh, mw): (Vec<f64>, Vec<f64>) =
        hs.iter().zip(&worst).filter(|(_, w)| **w > NOISE_FLOOR).map(|(h, w)| (*h, *w)).unzip();
    let exact = mh.is_empty();
    if mh.len() >= 2 {
        r.constants.insert("order".into(), linalg::observed_order(&mh, &mw));
    }
    r.flags.insert("below_noise_floor".into(), exact);
    r.tolerance = hs[hs.len() - 1];
    r.samples = design.n_fields * design.grids.len();
    r.verdict = Verdict::from_bool(pass);
    Ok(r)
}
