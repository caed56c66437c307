use serde::Serialize;

use super::young::coarse_index;
use crate::error::{Error, Result};
use crate::solver::Trajectory;
use crate::systems::{HyperbolicSystem, State};

/// Which composite `f(u)` is tracked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ConcQuantity {
    Eta,
    A,
    Flux(usize),
}

impl ConcQuantity {
    pub fn label(self) -> String {
        match self {
            ConcQuantity::Eta => "eta".into(),
            ConcQuantity::A => "A".into(),
            ConcQuantity::Flux(a) => format!("F{}", a + 1),
        }
    }

    pub fn eval(self, system: &dyn HyperbolicSystem, u: &State) -> State {
        match self {
            ConcQuantity::Eta => State::from_element(1, system.eta(u)),
            ConcQuantity::A => system.a(u),
            ConcQuantity::Flux(a) => system.flux(a, u),
        }
    }
}

/// Values of `f(u^n)` with their space-time weights, binned into coarse
/// space-time cells (index `slab · n_space^d + space cell`).
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyMember {
    pub resolution: usize,
    pub cells: Vec<Vec<(State, f64)>>,
}

/// One [`FamilyMember`] per approximation index `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFamily {
    pub quantity: String,
    pub n_space: usize,
    pub d: usize,
    pub n_slabs: usize,
    pub t_final: f64,
    pub members: Vec<FamilyMember>,
}

impl SampledFamily {
    pub fn cells(&self) -> usize {
        self.n_slabs * self.n_space.pow(self.d as u32)
    }

    /// Bin the snapshots of each trajectory. Each snapshot except the last
    /// stands for the time interval up to the next one (left-point rule).
    pub fn from_trajectories(
        system: &dyn HyperbolicSystem,
        trajectories: &[Trajectory],
        quantity: ConcQuantity,
        n_space: usize,
        n_slabs: usize,
    ) -> Result<Self> {
        let first = trajectories.first().ok_or_else(|| Error::Config("empty run family".into()))?;
        let d = first.d;
        let t_final = first.last().t;
        if n_slabs == 0 {
            return Err(Error::Config("at least one time slab is needed".into()));
        }
        let mut members = Vec::new();
        for traj in trajectories {
            if traj.d != d || traj.n % n_space != 0 || (traj.last().t - t_final).abs() > 1e-12 {
                return Err(Error::Grid(format!(
                    "run with N = {} does not nest in {n_space} coarse cells or ends at another time",
                    traj.n
                )));
            }
            let ratio = traj.n / n_space;
            let space_cells = n_space.pow(d as u32);
            let mut cells = vec![Vec::new(); n_slabs * space_cells];
            for pair in traj.snapshots.windows(2) {
                let (snap, next) = (&pair[0], &pair[1]);
                let w = snap.cell_volume() * (next.t - snap.t);
                let slab = ((snap.t / t_final * n_slabs as f64).floor() as usize).min(n_slabs - 1);
                for (i, u) in snap.u.iter().enumerate() {
                    let c = slab * space_cells + coarse_index(i, traj.n, d, ratio);
                    cells[c].push((quantity.eval(system, u), w));
                }
            }
            members.push(FamilyMember { resolution: traj.n, cells });
        }
        Ok(Self { quantity: quantity.label(), n_space, d, n_slabs, t_final, members })
    }

    /// Scalar family on the space-time slab `[0,1) × [0,t_final)` given by
    /// point samples per resolution.
    pub fn from_samples(
        quantity: &str,
        n_space: usize,
        n_slabs: usize,
        t_final: f64,
        members: Vec<(usize, Vec<PointSample>)>,
    ) -> Result<Self> {
        if n_space == 0 || n_slabs == 0 || !(t_final > 0.0) {
            return Err(Error::Config("sample family needs cells, slabs and a positive horizon".into()));
        }
        let members = members
            .into_iter()
            .map(|(resolution, samples)| {
                let mut cells = vec![Vec::new(); n_space * n_slabs];
                for p in samples {
                    if !(0.0..1.0).contains(&p.x) || !(0.0..t_final).contains(&p.t) {
                        return Err(Error::Grid(format!("sample at (x, t) = ({}, {}) outside the slab", p.x, p.t)));
                    }
                    let i = ((p.x * n_space as f64) as usize).min(n_space - 1);
                    let s = ((p.t / t_final * n_slabs as f64) as usize).min(n_slabs - 1);
                    cells[s * n_space + i].push((State::from_element(1, p.value), p.weight));
                }
                Ok(FamilyMember { resolution, cells })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { quantity: quantity.into(), n_space, d: 1, n_slabs, t_final, members })
    }
}

/// A value of `f(u^n)` at a space-time point with its quadrature weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointSample {
    pub x: f64,
    pub t: f64,
    pub value: f64,
    pub weight: f64,
}

impl PointSample {
    pub fn new(x: f64, t: f64, value: f64, weight: f64) -> Self {
        Self { x, t, value, weight }
    }
}

/// Partial masses `∫_{cell ∩ {g ≥ k}} g` per truncation level and their
/// extrapolation in `k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcentrationField {
    pub quantity: String,
    pub n_space: usize,
    pub d: usize,
    pub n_slabs: usize,
    pub levels: Vec<f64>,
    /// `partial[k][cell]`, signed per component.
    pub partial: Vec<Vec<State>>,
    pub extrapolated: Vec<State>,
    /// Resolution and total max-norm partial mass per level, for every
    /// family member (coarse to fine).
    pub ladder: Vec<(usize, Vec<f64>)>,
}

impl ConcentrationField {
    pub fn cells(&self) -> usize {
        self.extrapolated.len()
    }

    fn sum(cells: &[State]) -> State {
        let mut s = State::zeros(cells[0].len());
        for c in cells {
            s += c;
        }
        s
    }

    pub fn total_at_level(&self, k: usize) -> State {
        Self::sum(&self.partial[k])
    }

    pub fn total_extrapolated(&self) -> State {
        Self::sum(&self.extrapolated)
    }

    /// Largest componentwise magnitude of any extrapolated cell mass.
    pub fn max_extrapolated(&self) -> f64 {
        self.extrapolated.iter().map(|m| m.amax()).fold(0.0, f64::max)
    }
}

fn partial_mass(samples: &[(State, f64)], dim: usize, k: f64) -> State {
    let mut m = State::zeros(dim);
    for (g, w) in samples {
        for c in 0..dim {
            let x = g[c];
            if x.abs() >= k {
                m[c] += w * x;
            }
        }
    }
    m
}

/// Limit in `k` from the last three levels by Aitken's Δ² rule, clamped
/// between zero and the last level; the last level itself when fewer than
/// three levels exist or the differences do not contract.
pub fn extrapolate_levels(m: &[f64]) -> f64 {
    let last = *m.last().expect("nonempty ladder");
    if m.len() < 3 || last == 0.0 {
        return last;
    }
    let (a, b, c) = (m[m.len() - 3], m[m.len() - 2], last);
    let (d1, d2) = (b - a, c - b);
    let denom = d2 - d1;
    if d2 == 0.0 || denom == 0.0 || d2.abs() >= d1.abs() {
        return last;
    }
    let e = c - d2 * d2 / denom;
    if last > 0.0 {
        e.clamp(0.0, last)
    } else {
        e.clamp(last, 0.0)
    }
}

/// Concentration masses of a sampled family on the ladder `k_ladder`: the
/// finest member gives the partial masses, which are then extrapolated in
/// `k`. Nonnegative and nonpositive parts are truncated separately.
pub fn concentration_mass(family: &SampledFamily, k_ladder: &[f64]) -> Result<ConcentrationField> {
    if family.members.len() < 2 {
        return Err(Error::Config("concentration needs at least two family members".into()));
    }
    if k_ladder.is_empty() || k_ladder[0] <= 0.0 || k_ladder.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("truncation ladder must be positive and increasing".into()));
    }
    let dim = family
        .members
        .iter()
        .flat_map(|m| m.cells.iter().flatten())
        .map(|(g, _)| g.len())
        .next()
        .unwrap_or(1);
    let mut order: Vec<&FamilyMember> = family.members.iter().collect();
    order.sort_by_key(|m| m.resolution);
    let ladder = order
        .iter()
        .map(|m| {
            let totals = k_ladder
                .iter()
                .map(|&k| {
                    let mut s = State::zeros(dim);
                    for c in &m.cells {
                        s += partial_mass(c, dim, k);
                    }
                    s.amax()
                })
                .collect();
            (m.resolution, totals)
        })
        .collect();
    let finest = order[order.len() - 1];
    let partial: Vec<Vec<State>> = k_ladder
        .iter()
        .map(|&k| finest.cells.iter().map(|c| partial_mass(c, dim, k)).collect())
        .collect();
    let extrapolated = (0..family.cells())
        .map(|cell| {
            State::from_fn(dim, |c, _| {
                let seq: Vec<f64> = partial.iter().map(|lvl| lvl[cell][c]).collect();
                extrapolate_levels(&seq)
            })
        })
        .collect();
    Ok(ConcentrationField {
        quantity: family.quantity.clone(),
        n_space: family.n_space,
        d: family.d,
        n_slabs: family.n_slabs,
        levels: k_ladder.to_vec(),
        partial,
        extrapolated,
        ladder,
    })
}

/// Split a space-time field into one spatial field per time slab.
pub fn time_slices(conc: &ConcentrationField) -> Vec<ConcentrationField> {
    let space = conc.n_space.pow(conc.d as u32);
    (0..conc.n_slabs)
        .map(|s| {
            let range = s * space..(s + 1) * space;
            ConcentrationField {
                quantity: conc.quantity.clone(),
                n_space: conc.n_space,
                d: conc.d,
                n_slabs: 1,
                levels: conc.levels.clone(),
                partial: conc.partial.iter().map(|lvl| lvl[range.clone()].to_vec()).collect(),
                extrapolated: conc.extrapolated[range.clone()].to_vec(),
                ladder: Vec::new(),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aitken_removes_geometric_tail() {
        assert!(extrapolate_levels(&[0.1, 0.01, 0.001, 1e-4]).abs() < 1e-12);
        assert_eq!(extrapolate_levels(&[1.0, 1.0, 1.0]), 1.0);
        assert_eq!(extrapolate_levels(&[2.0, 1.0]), 1.0);
    }

    #[test]
    fn singleton_family_is_rejected() {
        let f = SampledFamily::from_samples("g", 4, 1, 1.0, vec![(1, vec![PointSample::new(0.1, 0.0, 1.0, 1.0)])]).unwrap();
        assert!(matches!(concentration_mass(&f, &[1.0]), Err(Error::Config(_))));
    }

    #[test]
    fn signed_parts_are_truncated_separately() {
        let f = SampledFamily::from_samples(
            "g",
            1,
            1,
            1.0,
            vec![
                (1, vec![]),
                (2, vec![PointSample::new(0.1, 0.0, 20.0, 0.5), PointSample::new(0.6, 0.0, -30.0, 0.5)]),
            ],
        )
        .unwrap();
        let c = concentration_mass(&f, &[10.0, 25.0]).unwrap();
        assert_eq!(c.partial[0][0][0], -5.0);
        assert_eq!(c.partial[1][0][0], -15.0);
    }
}
