use serde::Serialize;

use super::concentration::{concentration_mass, ConcQuantity, ConcentrationField, SampledFamily};
use crate::error::{Error, Result};
use crate::hypotheses::ray_state;
use crate::relent::Linearization;
use crate::solver::Trajectory;
use crate::systems::{require_closure, require_interior, HyperbolicSystem, State, INTERIOR_MARGIN};

/// Quantity whose entropy-normalized limit along a ray is requested.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum RecessionTarget {
    A,
    Flux(usize),
    RelativeEntropy(State),
    RelativeFlux(usize, State),
}

/// A ray `s ↦ (s^{α₁}β₁, …)` sampled on an increasing `s` grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecessionProbe {
    pub beta: State,
    pub exponents: Vec<f64>,
    pub s_grid: Vec<f64>,
}

impl RecessionProbe {
    /// Probe with the system's own exponents; `beta` is normalized.
    pub fn new(system: &dyn HyperbolicSystem, beta: State, s_grid: Vec<f64>) -> Result<Self> {
        let norm = beta.norm();
        if !(norm > 0.0) || beta.len() != system.state_dim() {
            return Err(Error::Config("recession direction must be a nonzero state-space vector".into()));
        }
        let beta = beta / norm;
        require_closure(system, &beta)?;
        if s_grid.len() < 2 || s_grid[0] <= 0.0 || s_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("s grid must be positive, increasing and have two points".into()));
        }
        Ok(Self { beta, exponents: system.scaling_exponents(), s_grid })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecessionResult {
    pub target: RecessionTarget,
    pub s: Vec<f64>,
    pub ratios: Vec<State>,
    /// Terminal ratio.
    pub value: State,
    /// Max-norm change between the last two usable grid points.
    pub cauchy: f64,
    /// Terminal value through the identity in `A^∞` (relative targets only).
    pub via_identity: Option<State>,
    pub identity_cauchy: Option<f64>,
    pub discrepancy: Option<f64>,
    pub truncated: usize,
}

impl RecessionResult {
    /// Direct and identity routes agree to within their own convergence.
    pub fn agrees(&self) -> bool {
        match (self.discrepancy, self.identity_cauchy) {
            (Some(d), Some(ic)) => d <= self.cauchy.max(ic) + 1e-12,
            _ => true,
        }
    }
}

fn cauchy(seq: &[State]) -> f64 {
    let n = seq.len();
    (&seq[n - 1] - &seq[n - 2]).amax()
}

/// Terminal-ratio estimate of `f^∞(β)` for the target, with the identity
/// route `1 − G(U)·A^∞` or `F_α^∞ − ∇F_α(U)∇A(U)⁻¹A^∞` for relative targets.
pub fn recession(system: &dyn HyperbolicSystem, target: RecessionTarget, probe: &RecessionProbe) -> Result<RecessionResult> {
    let lin = match &target {
        RecessionTarget::RelativeEntropy(u) | RecessionTarget::RelativeFlux(_, u) => {
            require_interior(system, u, INTERIOR_MARGIN)?;
            Some(Linearization::new(system, u)?)
        }
        _ => None,
    };
    if let RecessionTarget::Flux(a) | RecessionTarget::RelativeFlux(a, _) = target {
        if a >= system.space_dim() {
            return Err(Error::Config(format!("flux direction {a} out of range")));
        }
    }
    let mut s_used = Vec::new();
    let mut direct = Vec::new();
    let mut identity = Vec::new();
    let mut truncated = 0;
    for &s in &probe.s_grid {
        let u = ray_state(&probe.exponents, &probe.beta, s);
        let eta = system.eta(&u);
        if !(eta.is_finite() && eta > 0.0) {
            truncated += 1;
            continue;
        }
        let a = system.a(&u);
        let (d, i) = match (&target, &lin) {
            (RecessionTarget::A, _) => (a / eta, None),
            (RecessionTarget::Flux(al), _) => (system.flux(*al, &u) / eta, None),
            (RecessionTarget::RelativeEntropy(_), Some(l)) => (
                State::from_element(1, l.relative_entropy(system, &u) / eta),
                Some(State::from_element(1, 1.0 - l.g.dot(&a) / eta)),
            ),
            (RecessionTarget::RelativeFlux(al, _), Some(l)) => (
                l.relative_flux(system, *al, &u) / eta,
                Some((system.flux(*al, &u) - &l.transport[*al] * &a) / eta),
            ),
            _ => unreachable!("linearization exists for relative targets"),
        };
        if d.iter().chain(i.iter().flatten()).any(|x| !x.is_finite()) {
            truncated += 1;
            continue;
        }
        s_used.push(s);
        direct.push(d);
        if let Some(i) = i {
            identity.push(i);
        }
    }
    if s_used.len() < 2 {
        return Err(Error::Overflow);
    }
    let value = direct.last().cloned().expect("two points");
    let (via_identity, identity_cauchy, discrepancy) = if identity.is_empty() {
        (None, None, None)
    } else {
        let last = identity.last().cloned().expect("two points");
        let disc = (&value - &last).amax();
        (Some(last), Some(cauchy(&identity)), Some(disc))
    };
    Ok(RecessionResult {
        target,
        s: s_used,
        cauchy: cauchy(&direct),
        ratios: direct,
        value,
        via_identity,
        identity_cauchy,
        discrepancy,
        truncated,
    })
}

/// Cellwise checks of `m_η − m_A·G(U) ≥ 0` and
/// `|m_{F_α} − ∇F_α(U)∇A(U)⁻¹ m_A| ≤ C (m_η − m_A·G(U))`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelationsReport {
    pub constant: f64,
    pub cells: usize,
    /// `m_η − m_A·G(U)` per cell.
    pub margins: Vec<f64>,
    pub min_margin: f64,
    /// Largest `|m_F − T m_A| − C·margin` over cells and directions.
    pub worst_flux_excess: f64,
    pub positive_pass: bool,
    pub flux_pass: bool,
}

impl RelationsReport {
    pub fn passed(&self) -> bool {
        self.positive_pass && self.flux_pass
    }
}

pub const RELATION_TOL: f64 = 1e-8;

/// Relations on the extrapolated masses; `u_ref[cell]` is the strong
/// solution on each (space-time) cell.
pub fn concentration_relations(
    system: &dyn HyperbolicSystem,
    m_eta: &ConcentrationField,
    m_a: &ConcentrationField,
    m_flux: &[ConcentrationField],
    u_ref: &[State],
    c: f64,
) -> Result<RelationsReport> {
    let cells = m_eta.cells();
    if m_a.cells() != cells || m_flux.iter().any(|f| f.cells() != cells) || u_ref.len() != cells {
        return Err(Error::Grid("concentration fields and reference live on different grids".into()));
    }
    if m_flux.len() != system.space_dim() {
        return Err(Error::Config(format!("expected {} flux fields", system.space_dim())));
    }
    let mut margins = Vec::with_capacity(cells);
    let mut worst = f64::NEG_INFINITY;
    for cell in 0..cells {
        let lin = Linearization::new(system, &u_ref[cell])?;
        let ma = &m_a.extrapolated[cell];
        let margin = m_eta.extrapolated[cell][0] - ma.dot(&lin.g);
        for (alpha, f) in m_flux.iter().enumerate() {
            let excess = (&f.extrapolated[cell] - &lin.transport[alpha] * ma).amax() - c * margin;
            worst = worst.max(excess);
        }
        margins.push(margin);
    }
    let min_margin = margins.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(RelationsReport {
        constant: c,
        cells,
        min_margin,
        worst_flux_excess: worst,
        positive_pass: min_margin >= -RELATION_TOL,
        flux_pass: worst <= RELATION_TOL,
        margins,
    })
}

/// Concentration fields of `η`, `A` and every `F_α` for one run family.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyConcentration {
    pub eta: ConcentrationField,
    pub a: ConcentrationField,
    pub flux: Vec<ConcentrationField>,
}

pub fn family_concentration(
    system: &dyn HyperbolicSystem,
    trajectories: &[Trajectory],
    n_space: usize,
    n_slabs: usize,
    k_ladder: &[f64],
) -> Result<FamilyConcentration> {
    let build = |q| {
        SampledFamily::from_trajectories(system, trajectories, q, n_space, n_slabs)
            .and_then(|f| concentration_mass(&f, k_ladder))
    };
    Ok(FamilyConcentration {
        eta: build(ConcQuantity::Eta)?,
        a: build(ConcQuantity::A)?,
        flux: (0..system.space_dim()).map(|a| build(ConcQuantity::Flux(a))).collect::<Result<_>>()?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{build_system, SystemParams};

    fn field(values: Vec<State>) -> ConcentrationField {
        ConcentrationField {
            quantity: "x".into(),
            n_space: values.len(),
            d: 1,
            n_slabs: 1,
            levels: vec![10.0],
            partial: vec![values.clone()],
            extrapolated: values,
            ladder: Vec::new(),
        }
    }

    #[test]
    fn injected_masses_satisfy_relations() {
        let sys = build_system("euler", &SystemParams::default()).unwrap();
        let c = 2.0;
        let eta = field(vec![State::from_element(1, 1.0); 3]);
        let a = field(vec![State::zeros(2); 3]);
        let f = field(vec![State::from_element(2, 0.5 * c); 3]);
        let u = vec![State::from_column_slice(&[1.0, 0.2]); 3];
        let r = concentration_relations(sys.as_ref(), &eta, &a, &[f], &u, c).unwrap();
        assert!(r.passed());
        assert!((r.min_margin - 1.0).abs() < 1e-15);
    }

    #[test]
    fn euler_a_recession_vanishes() {
        let sys = build_system("euler", &SystemParams::default()).unwrap();
        let probe = RecessionProbe::new(sys.as_ref(), State::from_column_slice(&[0.6, 0.8]), vec![1e2, 1e3, 1e4]).unwrap();
        let r = recession(sys.as_ref(), RecessionTarget::A, &probe).unwrap();
        assert!(r.value.amax() <= 0.05, "{}", r.value);
    }
}
