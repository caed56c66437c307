use nalgebra::DMatrix;
use rayon::prelude::*;

use super::{HypothesisReport, SampleDesign, Verdict};
use crate::error::Result;
use crate::systems::{HyperbolicSystem, State};

/// Relative tolerance between analytic and central-difference derivatives.
pub const DERIVATIVE_TOL: f64 = 1e-5;

/// Central-difference Jacobian of `f` at `u`, steps `1e-6·max(1,|u_i|)`.
pub fn fd_jacobian(f: impl Fn(&State) -> State, u: &State) -> DMatrix<f64> {
    let n = u.len();
    let m = f(u).len();
    let mut j = DMatrix::zeros(m, n);
    for i in 0..n {
        let h = 1e-6 * u[i].abs().max(1.0);
        let mut up = u.clone();
        let mut dn = u.clone();
        up[i] += h;
        dn[i] -= h;
        let col = (f(&up) - f(&dn)) / (2.0 * h);
        j.set_column(i, &col);
    }
    j
}

fn rel_err(analytic: &DMatrix<f64>, fd: &DMatrix<f64>) -> f64 {
    let scale = analytic.iter().fold(1.0f64, |a, x| a.max(x.abs()));
    (analytic - fd).iter().fold(0.0f64, |a, x| a.max(x.abs())) / scale
}

fn column(v: State) -> DMatrix<f64> {
    DMatrix::from_column_slice(v.len(), 1, v.as_slice())
}

fn scalar(x: f64) -> State {
    State::from_element(1, x)
}

/// Largest relative discrepancy of every analytic first and second
/// derivative against central differences at one state, by quantity name.
fn discrepancies(system: &dyn HyperbolicSystem, u: &State) -> Vec<(String, f64)> {
    let mut out: Vec<(String, f64)> = vec![
        ("grad_A".into(), rel_err(&system.grad_a(u), &fd_jacobian(|x| system.a(x), u))),
        (
            "grad_eta".into(),
            rel_err(&column(system.grad_eta(u)), &fd_jacobian(|x| scalar(system.eta(x)), u).transpose()),
        ),
        ("grad_G".into(), rel_err(&system.grad_multiplier(u), &fd_jacobian(|x| system.multiplier(x), u))),
        ("hess_eta".into(), rel_err(&system.hess_eta(u), &fd_jacobian(|x| system.grad_eta(x), u))),
    ];
    let ga_fd: Vec<DMatrix<f64>> = (0..u.len())
        .map(|k| fd_jacobian(|x| system.grad_a(x).row(k).transpose(), u))
        .collect();
    let hess_a = system.hess_a(u);
    let e = hess_a.iter().zip(&ga_fd).map(|(a, f)| rel_err(a, f)).fold(0.0, f64::max);
    out.push(("hess_A".into(), e));
    for alpha in 0..system.space_dim() {
        out.push((
            format!("grad_F{}", alpha + 1),
            rel_err(&system.grad_flux(alpha, u), &fd_jacobian(|x| system.flux(alpha, x), u)),
        ));
        out.push((
            format!("grad_q{}", alpha + 1),
            rel_err(
                &column(system.grad_entropy_flux(alpha, u)),
                &fd_jacobian(|x| scalar(system.entropy_flux(alpha, x)), u).transpose(),
            ),
        ));
    }
    out
}

/// Analytic Jacobians and Hessians against central differences on the
/// design samples.
pub fn check_derivatives(system: &dyn HyperbolicSystem, design: &SampleDesign) -> Result<HypothesisReport> {
    design.validate(system)?;
    let states = design.states();
    let per_state: Vec<Vec<(String, f64)>> = states.par_iter().map(|u| discrepancies(system, u)).collect();
    let mut r = HypothesisReport::new("derivatives", system, DERIVATIVE_TOL, design.seed);
    for row in per_state {
        for (name, e) in row {
            let slot = r.residuals.entry(name).or_insert(0.0);
            *slot = slot.max(e);
        }
    }
    r.samples = states.len();
    r.verdict = Verdict::from_bool(r.residuals.values().all(|e| *e <= DERIVATIVE_TOL));
    Ok(r)
}
