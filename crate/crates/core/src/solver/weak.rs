use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::Trajectory;
use crate::error::{Error, Result};
use crate::systems::HyperbolicSystem;

/// Smooth time cutoff `ζ`: one up to `start`, zero from `end` on, with a
/// `C^∞` transition in between.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeCutoff {
    pub start: f64,
    pub end: f64,
}

impl TimeCutoff {
    pub fn eval(&self, t: f64) -> f64 {
        let s = (t - self.start) / (self.end - self.start);
        if s <= 0.0 {
            return 1.0;
        }
        if s >= 1.0 {
            return 0.0;
        }
        let f = |x: f64| (-1.0 / x).exp();
        f(1.0 - s) / (f(1.0 - s) + f(s))
    }

    /// `∫_a^b ζ` by composite Simpson with eight panels.
    fn integral(&self, a: f64, b: f64) -> f64 {
        let m = 8;
        let h = (b - a) / m as f64;
        let mut s = self.eval(a) + self.eval(b);
        for k in 1..m {
            s += self.eval(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }
}

/// `φ(t,x) = ζ(t) ψ(x) e_c` with `ψ = sin(2πk·x)` or `cos(2πk·x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentTest {
    pub component: usize,
    pub wavenumber: Vec<i64>,
    #[serde(default)]
    pub cosine: bool,
    pub cutoff: TimeCutoff,
}

impl MomentTest {
    fn psi(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let arg = 2.0 * PI * self.wavenumber.iter().zip(x).map(|(k, xi)| *k as f64 * xi).sum::<f64>();
        let (val, dval) = if self.cosine { (arg.cos(), -arg.sin()) } else { (arg.sin(), arg.cos()) };
        (val, self.wavenumber.iter().map(|k| 2.0 * PI * *k as f64 * dval).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TestBank {
    pub moment: Vec<MomentTest>,
    /// Spatially constant entropy tests.
    pub entropy: Vec<TimeCutoff>,
}

impl TestBank {
    pub fn is_empty(&self) -> bool {
        self.moment.is_empty() && self.entropy.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeakResidual {
    pub moment: Vec<f64>,
    /// Discrete `∫S ζ' dt + S(0)ζ(0)`; nonnegative for entropy-dissipating
    /// runs.
    pub entropy: Vec<f64>,
}

/// Discrete weak form with the trajectory's snapshots as time levels and a
/// Dirac Young measure at the computed states:
///
/// `Σ_k ⟨A(u^k), φ^{k+1} − φ^k⟩ + Σ_k ∫ζ ⟨F_α(u^k), ∂_αψ⟩ + ⟨A(u^0), φ^0⟩`.
pub fn weak_residual(traj: &Trajectory, system: &dyn HyperbolicSystem, bank: &TestBank) -> Result<WeakResidual> {
    if bank.is_empty() {
        return Err(Error::Config("empty test bank".into()));
    }
    let t_last = traj.last().t;
    let all_cutoffs = bank.moment.iter().map(|m| &m.cutoff).chain(bank.entropy.iter());
    for c in all_cutoffs {
        if !(0.0 <= c.start && c.start < c.end && c.end <= t_last) {
            return Err(Error::Config(format!(
                "cutoff [{}, {}] must satisfy 0 ≤ start < end ≤ {t_last}",
                c.start, c.end
            )));
        }
    }
    let first = &traj.snapshots[0];
    let (n, d) = (first.n, first.d);
    let vol = first.cell_volume();
    let centers: Vec<Vec<f64>> = (0..first.u.len())
        .map(|i| (0..d).map(|a| (((i / n.pow(a as u32)) % n) as f64 + 0.5) / n as f64).collect())
        .collect();
    let mut moment = Vec::new();
    for test in &bank.moment {
        if test.component >= system.state_dim() || test.wavenumber.len() != d {
            return Err(Error::Config("test function does not match the system".into()));
        }
        let psi: Vec<(f64, Vec<f64>)> = centers.iter().map(|x| test.psi(x)).collect();
        let c = test.component;
        let pair = |k: usize| -> (f64, f64) {
            let snap = &traj.snapshots[k];
            let a_psi: f64 = snap.u.iter().zip(&psi).map(|(u, p)| system.a(u)[c] * p.0).sum::<f64>() * vol;
            let f_dpsi: f64 = snap
                .u
                .iter()
                .zip(&psi)
                .map(|(u, p)| (0..d).map(|a| system.flux(a, u)[c] * p.1[a]).sum::<f64>())
                .sum::<f64>()
                * vol;
            (a_psi, f_dpsi)
        };
        let z = |k: usize| test.cutoff.eval(traj.snapshots[k].t);
        let (a0, _) = pair(0);
        let mut r = a0 * z(0);
        for k in 0..traj.snapshots.len() - 1 {
            let (a_psi, f_dpsi) = pair(k);
            let (t0, t1) = (traj.snapshots[k].t, traj.snapshots[k + 1].t);
            r += a_psi * (z(k + 1) - z(k)) + test.cutoff.integral(t0, t1) * f_dpsi;
        }
        moment.push(r);
    }
    let totals: Vec<f64> = traj.snapshots.iter().map(|s| s.total_entropy(system)).collect();
    let entropy = bank
        .entropy
        .iter()
        .map(|c| {
            let z: Vec<f64> = traj.snapshots.iter().map(|s| c.eval(s.t)).collect();
            let mut e = totals[0] * z[0];
            for k in 0..totals.len() - 1 {
                e += totals[k] * (z[k + 1] - z[k]);
            }
            e
        })
        .collect();
    Ok(WeakResidual { moment, entropy })
}
