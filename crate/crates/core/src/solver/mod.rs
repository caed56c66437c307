//! First-order finite-volume schemes on the periodic torus, used as the
//! generating sequences of approximate solutions.

mod init;
mod reference;
mod weak;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::systems::constraint::shifted;
use crate::systems::{invert_a, HyperbolicSystem, State, StateField, VacuumPolicy};

pub use init::{init_field, FourierMode, InitSpec};
pub use reference::{gradient_norms, reference_solution, ReferenceSolution, SHOCK_FACTOR};
pub use weak::{weak_residual, MomentTest, TestBank, TimeCutoff, WeakResidual};

/// Safety factor applied to the wave-speed bounds.
pub const SPEED_SAFETY: f64 = 1.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusGrid {
    pub d: usize,
    /// Cells per dimension; `h = 1/n`.
    pub n: usize,
    pub t_final: f64,
    pub cfl: f64,
}

impl TorusGrid {
    pub fn new(d: usize, n: usize, t_final: f64, cfl: f64) -> Result<Self> {
        let g = Self { d, n, t_final, cfl };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if !(1..=2).contains(&self.d) {
            errs.push(format!("d = {} must be 1 or 2", self.d));
        }
        if self.n < 2 {
            errs.push(format!("N = {} must be at least 2", self.n));
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            errs.push(format!("T = {} must be positive", self.t_final));
        }
        if !(self.cfl > 0.0 && self.cfl < 1.0) {
            errs.push(format!("CFL = {} must lie in (0,1)", self.cfl));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs.join("; ")))
        }
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn cells(&self) -> usize {
        self.n.pow(self.d as u32)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    LaxFriedrichs,
    Rusanov,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::LaxFriedrichs => "lax-friedrichs",
            Scheme::Rusanov => "rusanov",
        }
    }
}

/// Conserved values `v = A(u)` per cell together with the recovered states.
#[derive(Debug, Clone, PartialEq)]
pub struct ConservedField {
    pub n: usize,
    pub d: usize,
    pub t: f64,
    pub v: Vec<State>,
    pub u: Vec<State>,
    /// Cells whose density was clamped to `ρ_min` when this field was built.
    pub clamps: usize,
}

impl ConservedField {
    /// Recover the states from conserved values. Clamped cells get their
    /// conserved values reset to `A(u)` so that `u` and `v` stay consistent.
    pub fn from_conserved(
        system: &dyn HyperbolicSystem,
        n: usize,
        d: usize,
        t: f64,
        mut v: Vec<State>,
        policy: VacuumPolicy,
    ) -> Result<Self> {
        let inv: Vec<Result<_>> = v.par_iter().map(|vi| invert_a(system, vi, policy)).collect();
        let mut u = Vec::with_capacity(v.len());
        let mut clamps = 0;
        for (i, r) in inv.into_iter().enumerate() {
            let r = r?;
            if r.clamped {
                clamps += 1;
                v[i] = system.a(&r.state);
            }
            u.push(r.state);
        }
        Ok(Self { n, d, t, v, u, clamps })
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.h().powi(self.d as i32)
    }

    pub fn states(&self) -> StateField {
        StateField { n: self.n, d: self.d, cells: self.u.clone() }
    }

    /// `Σ v h^d`.
    pub fn total(&self) -> State {
        let mut s = State::zeros(self.v[0].len());
        for v in &self.v {
            s += v;
        }
        s * self.cell_volume()
    }

    /// `Σ η(u) h^d`.
    pub fn total_entropy(&self, system: &dyn HyperbolicSystem) -> f64 {
        self.u.iter().map(|u| system.eta(u)).sum::<f64>() * self.cell_volume()
    }
}

/// Per-step entropy bookkeeping. `production` is the torus integral of the
/// discrete residual `(η(u')−η(u))/Δt + Σ_α D_α q̂`, `production_l1` the
/// integral of its absolute value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyRecord {
    pub t: f64,
    pub dt: f64,
    pub total: f64,
    pub production: f64,
    pub production_l1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Cadence {
    EveryStep,
    /// Snapshots at multiples of the interval (and at `T`).
    Interval(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    pub scheme: Scheme,
    pub cadence: Cadence,
    pub vacuum: VacuumPolicy,
    pub blowup_ceiling: f64,
    pub max_steps: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            scheme: Scheme::LaxFriedrichs,
            cadence: Cadence::Interval(f64::INFINITY),
            vacuum: VacuumPolicy::default(),
            blowup_ceiling: 1e8,
            max_steps: 10_000_000,
        }
    }
}

impl RunOptions {
    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_cadence(mut self, cadence: Cadence) -> Self {
        self.cadence = cadence;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub system: String,
    pub scheme: Scheme,
    pub cfl: f64,
    pub n: usize,
    pub d: usize,
    pub snapshots: Vec<ConservedField>,
    pub entropy: Vec<EntropyRecord>,
    pub initial_entropy: f64,
    pub steps: usize,
    pub clamps: usize,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.t).collect()
    }

    pub fn last(&self) -> &ConservedField {
        self.snapshots.last().expect("trajectory has the initial snapshot")
    }

    /// Total entropy production `Σ_steps production·Δt = S(T) − S(0)`.
    pub fn total_production(&self) -> f64 {
        self.entropy.iter().map(|r| r.production * r.dt).sum()
    }
}

fn max_speed(system: &dyn HyperbolicSystem, field: &ConservedField) -> Result<f64> {
    let speeds: Vec<Option<f64>> = field.u.par_iter().map(|u| system.wave_speed(u)).collect();
    let mut m: f64 = 0.0;
    for s in speeds {
        m = m.max(s.ok_or_else(|| Error::Config(format!("{} has no finite-volume solver", system.name())))?);
    }
    Ok(m)
}

/// `Δt = CFL·h / (d · 1.2 · max wave speed)`.
pub fn stable_dt(system: &dyn HyperbolicSystem, field: &ConservedField, cfl: f64) -> Result<f64> {
    let s = max_speed(system, field)?;
    Ok(if s > 0.0 { cfl * field.h() / (field.d as f64 * SPEED_SAFETY * s) } else { f64::INFINITY })
}

/// One conservative forward-Euler update of the conserved values.
pub fn step(
    system: &dyn HyperbolicSystem,
    field: &ConservedField,
    dt: f64,
    options: &RunOptions,
) -> Result<(ConservedField, EntropyRecord)> {
    let (n, d) = (field.n, field.d);
    let h = field.h();
    let len = field.v.len();
    let fluxes: Vec<Vec<State>> =
        field.u.par_iter().map(|u| (0..d).map(|a| system.flux(a, u)).collect()).collect();
    let qs: Vec<Vec<f64>> =
        field.u.par_iter().map(|u| (0..d).map(|a| system.entropy_flux(a, u)).collect()).collect();
    let speeds: Vec<f64> = match options.scheme {
        Scheme::Rusanov => field.u.par_iter().map(|u| system.wave_speed(u).unwrap_or(0.0)).collect(),
        Scheme::LaxFriedrichs => Vec::new(),
    };
    let lf_coef = h / (2.0 * d as f64 * dt);
    // Numerical flux through the right face of cell i along α.
    let face = |i: usize, a: usize| -> State {
        let j = shifted(i, n, a, 1);
        let c = match options.scheme {
            Scheme::LaxFriedrichs => lf_coef,
            Scheme::Rusanov => 0.5 * SPEED_SAFETY * speeds[i].max(speeds[j]),
        };
        (&fluxes[i][a] + &fluxes[j][a]) * 0.5 - (&field.v[j] - &field.v[i]) * c
    };
    let faces: Vec<Vec<State>> = (0..len).into_par_iter().map(|i| (0..d).map(|a| face(i, a)).collect()).collect();
    let ratio = dt / h;
    let v_new: Vec<State> = (0..len)
        .into_par_iter()
        .map(|i| {
            let mut v = field.v[i].clone();
            for a in 0..d {
                v -= (&faces[i][a] - &faces[shifted(i, n, a, -1)][a]) * ratio;
            }
            v
        })
        .collect();
    let t = field.t + dt;
    let magnitude = v_new.iter().map(|v| v.amax()).fold(0.0, |m: f64, x| if x.is_nan() { f64::INFINITY } else { m.max(x) });
    if !(magnitude <= options.blowup_ceiling) {
        return Err(Error::Blowup { magnitude, ceiling: options.blowup_ceiling, time: t });
    }
    let next = ConservedField::from_conserved(system, n, d, t, v_new, options.vacuum)?;
    let vol = field.cell_volume();
    let residuals: Vec<f64> = (0..len)
        .into_par_iter()
        .map(|i| {
            let mut r = (system.eta(&next.u[i]) - system.eta(&field.u[i])) / dt;
            for a in 0..d {
                let (l, rr) = (shifted(i, n, a, -1), shifted(i, n, a, 1));
                let q_right = 0.5 * (qs[i][a] + qs[rr][a]);
                let q_left = 0.5 * (qs[l][a] + qs[i][a]);
                r += (q_right - q_left) / h;
            }
            r
        })
        .collect();
    let record = EntropyRecord {
        t,
        dt,
        total: next.total_entropy(system),
        production: residuals.iter().sum::<f64>() * vol,
        production_l1: residuals.iter().map(|r| r.abs()).sum::<f64>() * vol,
    };
    Ok((next, record))
}

/// Run from `field` to `grid.t_final`, calling `monitor(previous, next, dt)`
/// after every step.
pub(crate) fn run_from(
    system: &dyn HyperbolicSystem,
    grid: &TorusGrid,
    field: ConservedField,
    options: &RunOptions,
    monitor: &mut dyn FnMut(&ConservedField, &ConservedField, f64) -> Result<()>,
) -> Result<Trajectory> {
    let t_final = grid.t_final;
    let mut traj = Trajectory {
        system: system.name().into(),
        scheme: options.scheme,
        cfl: grid.cfl,
        n: grid.n,
        d: grid.d,
        initial_entropy: field.total_entropy(system),
        clamps: field.clamps,
        snapshots: vec![field.clone()],
        entropy: Vec::new(),
        steps: 0,
    };
    let interval = match options.cadence {
        Cadence::EveryStep => None,
        Cadence::Interval(dt_out) if dt_out > 0.0 => Some(dt_out),
        Cadence::Interval(dt_out) => {
            return Err(Error::Config(format!("snapshot interval {dt_out} must be positive")))
        }
    };
    let out_time = |k: usize| interval.map_or(t_final, |i| (k as f64 * i).min(t_final));
    let mut k_out = 1;
    let mut current = field;
    let eps = 1e-12 * t_final.max(1.0);
    while current.t < t_final - eps {
        if traj.steps >= options.max_steps {
            return Err(Error::Config(format!("exceeded {} steps", options.max_steps)));
        }
        let target = out_time(k_out);
        let mut dt = stable_dt(system, &current, grid.cfl)?;
        let land = current.t + dt >= target - eps;
        if land {
            dt = target - current.t;
        }
        let (mut next, record) = step(system, &current, dt, options)?;
        if land {
            next.t = target;
        }
        monitor(&current, &next, dt)?;
        traj.steps += 1;
        traj.clamps += next.clamps;
        traj.entropy.push(record);
        let store = match options.cadence {
            Cadence::EveryStep => true,
            Cadence::Interval(_) => land,
        };
        if land {
            k_out += 1;
        }
        if store {
            traj.snapshots.push(next.clone());
        }
        current = next;
    }
    Ok(traj)
}

/// Evolve `spec` on `grid` to the final time.
pub fn run(
    system: &dyn HyperbolicSystem,
    grid: &TorusGrid,
    spec: &InitSpec,
    options: &RunOptions,
) -> Result<Trajectory> {
    let field = init_field(system, grid, spec, options.vacuum)?;
    run_from(system, grid, field, options, &mut |_, _, _| Ok(()))
}
