use serde::Serialize;

use crate::error::{Error, Result};
use crate::systems::{State, StateField};

/// Tolerance (max norm) under which two atoms are merged.
pub const ATOM_MERGE_TOL: f64 = 1e-9;

/// A finitely supported probability measure on state space.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellMeasure {
    atoms: Vec<(State, f64)>,
}

impl CellMeasure {
    /// Weights must lie in `[0,1]` and sum to one within `1e-12`.
    pub fn new(atoms: Vec<(State, f64)>) -> Result<Self> {
        let m = Self { atoms };
        m.validate()?;
        Ok(m)
    }

    pub fn dirac(u: State) -> Self {
        Self { atoms: vec![(u, 1.0)] }
    }

    pub fn validate(&self) -> Result<()> {
        if self.atoms.is_empty() {
            return Err(Error::Measure("measure without atoms".into()));
        }
        let dim = self.atoms[0].0.len();
        let mut total = 0.0;
        for (a, w) in &self.atoms {
            if !(0.0..=1.0).contains(w) || a.len() != dim || a.iter().any(|x| !x.is_finite()) {
                return Err(Error::Measure(format!("invalid atom with weight {w}")));
            }
            total += w;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Measure(format!("weights sum to {total}, not 1")));
        }
        Ok(())
    }

    pub fn atoms(&self) -> &[(State, f64)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// `⟨ν, f⟩` for scalar `f`.
    pub fn mean(&self, f: impl Fn(&State) -> f64) -> f64 {
        self.atoms.iter().map(|(a, w)| w * f(a)).sum()
    }

    /// `⟨ν, f⟩` for vector-valued `f`.
    pub fn mean_vector(&self, f: impl Fn(&State) -> State) -> State {
        let mut acc: Option<State> = None;
        for (a, w) in &self.atoms {
            let v = f(a) * *w;
            acc = Some(match acc {
                Some(s) => s + v,
                None => v,
            });
        }
        acc.expect("measure has atoms")
    }

    /// Weighted second moment about the barycentre.
    pub fn variance(&self) -> f64 {
        let mean = self.mean_vector(|u| u.clone());
        self.mean(|u| (u - &mean).norm_squared())
    }

    /// Push an atom, merging it into an existing one closer than
    /// [`ATOM_MERGE_TOL`].
    fn add(&mut self, u: &State, w: f64) {
        if let Some(slot) = self.atoms.iter_mut().find(|(a, _)| (a - u).amax() <= ATOM_MERGE_TOL) {
            slot.1 += w;
        } else {
            self.atoms.push((u.clone(), w));
        }
    }
}

/// One [`CellMeasure`] per cell of a coarse periodic grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteYoungMeasure {
    pub n_coarse: usize,
    pub d: usize,
    pub n_fine: usize,
    pub cells: Vec<CellMeasure>,
}

impl DiscreteYoungMeasure {
    pub fn h(&self) -> f64 {
        1.0 / self.n_coarse as f64
    }

    /// `∫⟨ν_x, f⟩ dx` over the torus.
    pub fn integrate(&self, f: impl Fn(&State) -> f64) -> f64 {
        let vol = self.h().powi(self.d as i32);
        self.cells.iter().map(|c| c.mean(&f)).sum::<f64>() * vol
    }
}

/// Index of the coarse cell containing fine cell `idx`.
pub(crate) fn coarse_index(idx: usize, n_fine: usize, d: usize, ratio: usize) -> usize {
    let n_coarse = n_fine / ratio;
    let mut out = 0;
    let mut stride = 1;
    for a in 0..d {
        let i = (idx / n_fine.pow(a as u32)) % n_fine;
        out += (i / ratio) * stride;
        stride *= n_coarse;
    }
    out
}

/// Bin the fine-cell states into the cells of a coarse grid with `n_coarse`
/// cells per side.
pub fn empirical_young_measure(fine: &StateField, n_coarse: usize) -> Result<DiscreteYoungMeasure> {
    if n_coarse == 0 || !fine.n.is_multiple_of(n_coarse) {
        return Err(Error::Grid(format!("{n_coarse} coarse cells do not nest in {} fine cells", fine.n)));
    }
    let ratio = fine.n / n_coarse;
    let weight = 1.0 / (ratio.pow(fine.d as u32)) as f64;
    let mut cells = vec![CellMeasure { atoms: Vec::new() }; n_coarse.pow(fine.d as u32)];
    for (idx, u) in fine.cells.iter().enumerate() {
        cells[coarse_index(idx, fine.n, fine.d, ratio)].add(u, weight);
    }
    Ok(DiscreteYoungMeasure { n_coarse, d: fine.d, n_fine: fine.n, cells })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: &[f64]) -> State {
        State::from_column_slice(v)
    }

    #[test]
    fn non_normalized_weights_are_rejected() {
        assert!(CellMeasure::new(vec![(s(&[1.0]), 0.5)]).is_err());
        assert!(CellMeasure::new(vec![(s(&[1.0]), 0.5), (s(&[2.0]), 0.5)]).is_ok());
    }

    #[test]
    fn oscillation_gives_two_atoms() {
        let cells = (0..16).map(|i| if i % 2 == 0 { s(&[1.0, 0.0]) } else { s(&[2.0, 0.0]) }).collect();
        let field = StateField::new(16, 1, cells).unwrap();
        let y = empirical_young_measure(&field, 2).unwrap();
        for c in &y.cells {
            assert_eq!(c.len(), 2);
            assert!(c.atoms().iter().all(|(_, w)| *w == 0.5));
        }
        assert!(matches!(empirical_young_measure(&field, 3), Err(Error::Grid(_))));
    }

    #[test]
    fn coarse_index_in_two_dimensions() {
        // Fine 4×4, ratio 2: fine (3,2) sits in coarse (1,1).
        assert_eq!(coarse_index(3 + 4 * 2, 4, 2, 2), 3);
    }
}
