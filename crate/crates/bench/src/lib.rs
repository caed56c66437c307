//! Fixtures shared by the benchmarks.

use entroflux::solver::{init_field, ConservedField};
use entroflux::{build_system, InitSpec, RunOptions, SharedSystem, SystemParams, TorusGrid};

pub fn system(id: &str) -> SharedSystem {
    build_system(id, &SystemParams::default()).expect("bundled system")
}

/// Default smooth data on an `n`-cell (per axis) torus.
pub fn smooth_field(sys: &SharedSystem, n: usize) -> ConservedField {
    let grid = TorusGrid::new(sys.space_dim(), n, 0.05, 0.9).expect("valid grid");
    let spec = InitSpec::default_for(sys.as_ref(), 0.05);
    init_field(sys.as_ref(), &grid, &spec, RunOptions::default().vacuum).expect("admissible data")
}
