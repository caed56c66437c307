//! Numerical diagnostics for measure-valued solutions of hyperbolic systems
//! with an entropy: certification of the structural hypotheses, relative
//! entropy calculus, a finite-volume generator of approximate solutions,
//! Young and concentration measure estimators, Orlicz-type convex utilities
//! and relative-entropy stability experiments.

// Negated float comparisons are how NaN inputs get rejected; index loops
// mirror the component formulas.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod harness;
pub mod hypotheses;
pub mod linalg;
pub mod measures;
pub mod orlicz;
pub mod relent;
pub mod solver;
pub mod systems;

pub use error::{Error, Result};
pub use systems::{
    build_system, evaluate, hessian_form, invert_a, jacobian, HyperbolicSystem, Quantity,
    SharedSystem, State, StateBox, StateDomain, SystemParams, VacuumPolicy, Value,
};
pub use harness::{GronwallFit, GronwallSeries, ProbeConfig, ProbeReport};
pub use hypotheses::{certify, certify_with, HypothesisReport, SampleDesign, Verdict};
pub use measures::{CellMeasure, ConcentrationField, DiscreteYoungMeasure, RecessionProbe};
pub use orlicz::NFunction;
pub use relent::{averaged_h, averaged_z, relative_entropy, relative_flux};
pub use solver::{InitSpec, RunOptions, Scheme, TorusGrid, Trajectory};
