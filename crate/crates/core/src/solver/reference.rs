use super::{init_field, run_from, ConservedField, InitSpec, RunOptions, TorusGrid, Trajectory};
use crate::error::{Error, Result};
use crate::systems::constraint::shifted;
use crate::systems::HyperbolicSystem;

/// The run stops with a shock error once the spatial gradient exceeds this
/// multiple of its initial value.
pub const SHOCK_FACTOR: f64 = 5.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSolution {
    pub trajectory: Trajectory,
    /// Largest discrete space or time derivative of `u` seen during the run.
    pub gradient_bound: f64,
    pub initial_gradient: f64,
}

/// Largest one-sided difference quotient of `u` over all cells, directions
/// and components.
pub fn gradient_norms(field: &ConservedField) -> f64 {
    let n = field.n;
    let inv_h = n as f64;
    let mut m: f64 = 0.0;
    for i in 0..field.u.len() {
        for a in 0..field.d {
            let j = shifted(i, n, a, 1);
            m = m.max((&field.u[j] - &field.u[i]).amax() * inv_h);
        }
    }
    m
}

/// Fine-grid surrogate of a strong solution: smooth data only, stopped with
/// a shock error when the gradient monitor trips before `T`.
pub fn reference_solution(
    system: &dyn HyperbolicSystem,
    grid: &TorusGrid,
    spec: &InitSpec,
    options: &RunOptions,
) -> Result<ReferenceSolution> {
    if !spec.is_smooth() {
        return Err(Error::Shock { time: 0.0, detail: "initial data are not Lipschitz".into() });
    }
    let field = init_field(system, grid, spec, options.vacuum)?;
    let g0 = gradient_norms(&field);
    let mut bound = g0;
    let mut monitor = |prev: &ConservedField, next: &ConservedField, dt: f64| -> Result<()> {
        let g = gradient_norms(next);
        if g > SHOCK_FACTOR * g0 {
            return Err(Error::Shock {
                time: next.t,
                detail: format!("spatial gradient {g:.3e} exceeds {SHOCK_FACTOR} × initial {g0:.3e}"),
            });
        }
        let dtu = prev.u.iter().zip(&next.u).map(|(a, b)| (b - a).amax()).fold(0.0, f64::max) / dt;
        bound = bound.max(g).max(dtu);
        Ok(())
    };
    let trajectory = run_from(system, grid, field, options, &mut monitor)?;
    Ok(ReferenceSolution { trajectory, gradient_bound: bound, initial_gradient: g0 })
}
