mod concentration;
mod recession;
mod rn;
mod young;

pub use concentration::{
    concentration_mass, extrapolate_levels, time_slices, ConcQuantity, ConcentrationField, FamilyMember,
    PointSample, SampledFamily,
};
pub use recession::{
    concentration_relations, family_concentration, recession, FamilyConcentration, RecessionProbe,
    RecessionResult, RecessionTarget, RelationsReport, RELATION_TOL,
};
pub use rn::{check_domination, hat_kernel, radon_nikodym, DominationReport, RnDensity, MASK_TOL};
pub(crate) use young::coarse_index;
pub use young::{empirical_young_measure, CellMeasure, DiscreteYoungMeasure, ATOM_MERGE_TOL};
