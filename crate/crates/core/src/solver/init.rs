use serde::{Deserialize, Serialize};

use super::{ConservedField, TorusGrid};
use crate::error::{Error, Result};
use crate::systems::{fmt_state, HyperbolicSystem, State, VacuumPolicy};

/// `amplitude · sin(2π k·x + phase)` added to one state component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierMode {
    pub component: usize,
    pub amplitude: f64,
    pub wavenumber: Vec<i64>,
    #[serde(default)]
    pub phase: f64,
}

/// Initial data on the torus, given in the state variables `u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InitSpec {
    Constant { state: Vec<f64> },
    SmoothPeriodic { base: Vec<f64>, modes: Vec<FourierMode> },
    /// `left` on `x₁ < ½`, `right` elsewhere.
    Riemann { left: Vec<f64>, right: Vec<f64> },
    /// Blocks of `frequency` cells alternating between the two states
    /// (checkerboard in 2D).
    Oscillatory { state_a: Vec<f64>, state_b: Vec<f64>, frequency: usize },
}

impl InitSpec {
    pub fn is_smooth(&self) -> bool {
        matches!(self, InitSpec::Constant { .. } | InitSpec::SmoothPeriodic { .. })
    }

    /// Smooth density profile `ρ₀ = 1 + amplitude·sin(2πx)` at rest, in the
    /// variables of a density-first system.
    pub fn density_wave(state_dim: usize, amplitude: f64) -> Self {
        let mut base = vec![0.0; state_dim];
        base[0] = 1.0;
        InitSpec::SmoothPeriodic {
            base,
            modes: vec![FourierMode { component: 0, amplitude, wavenumber: vec![1], phase: 0.0 }],
        }
    }

    /// Default smooth data for a system: a density wave along `x₁` when
    /// the system has a density, plus a shear `v₁(x₂)` in two dimensions.
    /// Both are divergence-free, so constrained systems start admissible.
    pub fn default_for(system: &dyn HyperbolicSystem, amplitude: f64) -> Self {
        let d = system.space_dim();
        let unit = |k: usize| (0..d).map(|i| i64::from(i == k)).collect::<Vec<_>>();
        let mut base = vec![0.0; system.state_dim()];
        let mut modes = Vec::new();
        let first_velocity = match system.density_index() {
            Some(i) => {
                base[i] = 1.0;
                modes.push(FourierMode { component: i, amplitude, wavenumber: unit(0), phase: 0.0 });
                i + 1
            }
            None => 0,
        };
        if d > 1 {
            modes.push(FourierMode { component: first_velocity, amplitude, wavenumber: unit(1), phase: 0.0 });
        }
        InitSpec::SmoothPeriodic { base, modes }
    }

    pub fn point_value(&self, x: &[f64]) -> State {
        match self {
            InitSpec::Constant { state } => State::from_column_slice(state),
            InitSpec::SmoothPeriodic { base, modes } => {
                let mut u = State::from_column_slice(base);
                for m in modes {
                    let phase: f64 = m.wavenumber.iter().zip(x).map(|(k, xi)| *k as f64 * xi).sum();
                    u[m.component] += m.amplitude * (2.0 * std::f64::consts::PI * phase + m.phase).sin();
                }
                u
            }
            InitSpec::Riemann { left, right } => {
                State::from_column_slice(if x[0] < 0.5 { left } else { right })
            }
            InitSpec::Oscillatory { .. } => unreachable!("oscillatory data are defined per cell"),
        }
    }

    fn validate(&self, system: &dyn HyperbolicSystem, d: usize) -> Result<()> {
        let n = system.state_dim();
        let check = |s: &[f64]| -> Result<()> {
            let u = State::from_column_slice(s);
            if s.len() != n || !system.domain().in_closure(&u) {
                return Err(Error::Domain(format!("initial state {} not in closure of X", fmt_state(&u))));
            }
            Ok(())
        };
        match self {
            InitSpec::Constant { state } => check(state),
            InitSpec::Riemann { left, right } => check(left).and(check(right)),
            InitSpec::Oscillatory { state_a, state_b, frequency } => {
                if *frequency == 0 {
                    return Err(Error::Config("oscillation frequency must be positive".into()));
                }
                check(state_a).and(check(state_b))
            }
            InitSpec::SmoothPeriodic { base, modes } => {
                if base.len() != n {
                    return Err(Error::Domain(format!("base state needs {n} components")));
                }
                for m in modes {
                    if m.component >= n || m.wavenumber.len() != d {
                        return Err(Error::Config(format!(
                            "Fourier mode needs a component below {n} and a {d}-dimensional wavenumber"
                        )));
                    }
                }
                Ok(())
            }
        }
    }
}

/// Three-point Gauss-Legendre nodes and weights on `[0,1]`.
const GAUSS: [(f64, f64); 3] = [
    (0.112_701_665_379_258_3, 5.0 / 18.0),
    (0.5, 8.0 / 18.0),
    (0.887_298_334_620_741_7, 5.0 / 18.0),
];

/// Cell-averaged conserved data for `spec`. Smooth data are averaged in
/// the conserved variables with tensor Gauss-Legendre quadrature.
pub fn init_field(
    system: &dyn HyperbolicSystem,
    grid: &TorusGrid,
    spec: &InitSpec,
    policy: VacuumPolicy,
) -> Result<ConservedField> {
    grid.validate()?;
    if system.space_dim() != grid.d {
        return Err(Error::Config(format!(
            "{} lives on a {}-torus, grid has d = {}",
            system.name(),
            system.space_dim(),
            grid.d
        )));
    }
    spec.validate(system, grid.d)?;
    let (n, d) = (grid.n, grid.d);
    let h = 1.0 / n as f64;
    let len = n.pow(d as u32);
    let mut v = Vec::with_capacity(len);
    for idx in 0..len {
        let ijk: Vec<usize> = (0..d).map(|a| (idx / n.pow(a as u32)) % n).collect();
        let cell = match spec {
            InitSpec::Oscillatory { state_a, state_b, frequency } => {
                let parity: usize = ijk.iter().map(|i| i / frequency).sum::<usize>() % 2;
                system.a(&State::from_column_slice(if parity == 0 { state_a } else { state_b }))
            }
            InitSpec::SmoothPeriodic { .. } => {
                let mut acc = State::zeros(system.state_dim());
                let nodes = GAUSS.len().pow(d as u32);
                for q in 0..nodes {
                    let mut x = vec![0.0; d];
                    let mut w = 1.0;
                    for a in 0..d {
                        let (xi, wi) = GAUSS[(q / GAUSS.len().pow(a as u32)) % GAUSS.len()];
                        x[a] = (ijk[a] as f64 + xi) * h;
                        w *= wi;
                    }
                    let u = spec.point_value(&x);
                    if !system.domain().in_closure(&u) {
                        return Err(Error::Domain(format!(
                            "initial profile leaves X: {} at x = {x:?}",
                            fmt_state(&u)
                        )));
                    }
                    acc += system.a(&u) * w;
                }
                acc
            }
            _ => {
                let x: Vec<f64> = ijk.iter().map(|&i| (i as f64 + 0.5) * h).collect();
                system.a(&spec.point_value(&x))
            }
        };
        v.push(cell);
    }
    ConservedField::from_conserved(system, n, d, 0.0, v, policy)
}
