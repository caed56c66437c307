//! Run configuration: TOML text with one table per module.

use std::path::{Path, PathBuf};

use entroflux::hypotheses::SampleDesign;
use entroflux::solver::FourierMode;
use entroflux::systems::SYSTEM_IDS;
use entroflux::{build_system, InitSpec, Scheme, SharedSystem, SystemParams, VacuumPolicy};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Validation(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemSection {
    pub id: String,
    pub gamma: f64,
    pub kappa: f64,
    pub gravity: f64,
    pub dim: usize,
}

impl Default for SystemSection {
    fn default() -> Self {
        let p = SystemParams::default();
        Self { id: "euler".into(), gamma: p.gamma, kappa: p.kappa, gravity: p.gravity, dim: p.dim }
    }
}

impl SystemSection {
    pub fn params(&self) -> SystemParams {
        SystemParams { gamma: self.gamma, kappa: self.kappa, gravity: self.gravity, dim: self.dim }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub n: usize,
    /// Defaults to 64..512 in one dimension and 16..128 in two.
    pub n_ladder: Option<Vec<usize>>,
    pub t_final: f64,
    pub cfl: f64,
    pub scheme: Scheme,
    /// Defaults to a tenth of `t_final`.
    pub snapshot_interval: Option<f64>,
    pub blowup_ceiling: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            n: 64,
            n_ladder: None,
            t_final: 0.05,
            cfl: 0.9,
            scheme: Scheme::LaxFriedrichs,
            snapshot_interval: None,
            blowup_ceiling: 1e8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HypothesesSection {
    pub samples: usize,
    pub ray_directions: usize,
}

impl Default for HypothesesSection {
    fn default() -> Self {
        Self { samples: 1000, ray_directions: 64 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeasuresSection {
    pub k_ladder: Vec<f64>,
    /// Defaults to `{4h, 2h}` on the coarse grid.
    pub eps_ladder: Option<Vec<f64>>,
    pub coarse_cells: usize,
    pub slabs: usize,
}

impl Default for MeasuresSection {
    fn default() -> Self {
        Self { k_ladder: vec![10.0, 1e2, 1e3, 1e4], eps_ladder: None, coarse_cells: 8, slabs: 4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeSection {
    /// Defaults to 4096 in one dimension and 512 in two.
    pub n_reference: Option<usize>,
    pub coarsening: usize,
    pub snapshots: usize,
    /// Start the coarse runs from `mismatch` (or a perturbed copy of the
    /// reference data) instead of the reference data.
    pub negative_control: bool,
    pub mismatch: Option<InitSpec>,
    pub c_cap: Option<f64>,
}

impl Default for ProbeSection {
    fn default() -> Self {
        Self { n_reference: None, coarsening: 4, snapshots: 10, negative_control: false, mismatch: None, c_cap: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecessionSection {
    pub directions: usize,
    /// Defaults to the documented hypothesis grid.
    pub s_grid: Option<Vec<f64>>,
    /// Defaults to the centre of the documented box.
    pub reference_state: Option<Vec<f64>>,
}

impl Default for RecessionSection {
    fn default() -> Self {
        Self { directions: 16, s_grid: None, reference_state: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OrliczSection {
    pub samples: usize,
    pub range: f64,
    pub tolerance: f64,
}

impl Default for OrliczSection {
    fn default() -> Self {
        Self { samples: 100_000, range: 50.0, tolerance: 1e-6 }
    }
}

/// The file as written, before defaults depending on the system are filled.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub seed: Option<u64>,
    #[serde(default)]
    pub system: SystemSection,
    #[serde(default)]
    pub grid: GridSection,
    pub initial: Option<InitSpec>,
    #[serde(default)]
    pub hypotheses: HypothesesSection,
    #[serde(default)]
    pub measures: MeasuresSection,
    #[serde(default)]
    pub probe: ProbeSection,
    #[serde(default)]
    pub recession: RecessionSection,
    #[serde(default)]
    pub orlicz: OrliczSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub vacuum: VacuumPolicy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("entroflux-out") }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub system: Option<String>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub strict_vacuum: bool,
}

/// A validated configuration with every default resolved.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub seed: u64,
    pub system: SystemSection,
    pub grid: GridSection,
    pub initial: InitSpec,
    pub hypotheses: HypothesesSection,
    pub measures: MeasuresSection,
    pub probe: ProbeSection,
    pub recession: RecessionSection,
    pub orlicz: OrliczSection,
    pub output: OutputSection,
    pub vacuum: VacuumPolicy,
}

impl RunConfig {
    pub fn build_system(&self) -> SharedSystem {
        build_system(&self.system.id, &self.system.params()).expect("validated system")
    }

    pub fn n_ladder(&self) -> &[usize] {
        self.grid.n_ladder.as_deref().expect("resolved in validate")
    }

    pub fn n_reference(&self) -> usize {
        self.probe.n_reference.expect("resolved in validate")
    }

    pub fn snapshot_interval(&self) -> f64 {
        self.grid.snapshot_interval.unwrap_or(self.grid.t_final / 10.0)
    }

    pub fn eps_ladder(&self) -> Vec<f64> {
        let h = 1.0 / self.measures.coarse_cells as f64;
        self.measures.eps_ladder.clone().unwrap_or_else(|| vec![4.0 * h, 2.0 * h])
    }

    pub fn s_grid(&self, system: &SharedSystem) -> Vec<f64> {
        self.recession
            .s_grid
            .clone()
            .unwrap_or_else(|| SampleDesign::documented(system.as_ref(), self.seed).s_grid)
    }

    /// Data for the coarse runs of a negative-control probe: the configured
    /// mismatch, or the reference data plus `0.02 cos(4πx₁)` in the first
    /// component.
    pub fn mismatch(&self) -> InitSpec {
        if let Some(m) = &self.probe.mismatch {
            return m.clone();
        }
        let d = self.grid_dim();
        let mut wavenumber = vec![0; d];
        wavenumber[0] = 2;
        let extra = FourierMode { component: 0, amplitude: 0.02, wavenumber, phase: std::f64::consts::FRAC_PI_2 };
        match self.initial.clone() {
            InitSpec::SmoothPeriodic { base, mut modes } => {
                modes.push(extra);
                InitSpec::SmoothPeriodic { base, modes }
            }
            InitSpec::Constant { state } => InitSpec::SmoothPeriodic { base: state, modes: vec![extra] },
            other => other,
        }
    }

    pub fn grid_dim(&self) -> usize {
        self.build_system().space_dim()
    }
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, column)
}

pub fn parse_config(path: &Path, overrides: &Overrides) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
    parse_config_str(&text, overrides)
}

pub fn parse_config_str(text: &str, overrides: &Overrides) -> Result<RunConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((1, 1), |s| line_column(text, s.start));
        ConfigError::Parse { line, column, message: e.message().to_string() }
    })?;
    validate(raw, overrides)
}

fn increasing<T: PartialOrd>(v: &[T]) -> bool {
    v.windows(2).all(|w| w[0] < w[1])
}

/// Apply overrides, fill system-dependent defaults and collect every
/// violated precondition.
pub fn validate(mut raw: RawConfig, overrides: &Overrides) -> Result<RunConfig, ConfigError> {
    if let Some(id) = &overrides.system {
        raw.system.id = id.clone();
    }
    if let Some(seed) = overrides.seed {
        raw.seed = Some(seed);
    }
    if let Some(out) = &overrides.out {
        raw.output.dir = out.clone();
    }
    if overrides.strict_vacuum {
        raw.vacuum.strict = true;
    }
    let mut errs = Vec::new();
    if raw.seed.is_none() {
        errs.push("seed is mandatory (set `seed = …` or pass --seed)".to_string());
    }
    let system = match build_system(&raw.system.id, &raw.system.params()) {
        Ok(s) => Some(s),
        Err(e) if SYSTEM_IDS.contains(&raw.system.id.as_str()) => {
            errs.push(format!("system parameters: {e}"));
            None
        }
        Err(_) => {
            errs.push(format!("unknown system id '{}'; registered ids: {}", raw.system.id, SYSTEM_IDS.join(", ")));
            None
        }
    };
    let two_d = system.as_ref().is_some_and(|s| s.space_dim() > 1);
    raw.grid.n_ladder.get_or_insert_with(|| if two_d { vec![16, 32, 64, 128] } else { vec![64, 128, 256, 512] });
    raw.probe.n_reference.get_or_insert(if two_d { 512 } else { 4096 });
    let ladder = raw.grid.n_ladder.clone().unwrap_or_default();
    let n_reference = raw.probe.n_reference.unwrap_or_default();
    let g = &raw.grid;
    if !(g.cfl > 0.0 && g.cfl < 1.0) {
        errs.push(format!("grid.cfl = {} must lie in (0,1)", g.cfl));
    }
    if !(g.t_final > 0.0 && g.t_final.is_finite()) {
        errs.push(format!("grid.t_final = {} must be positive", g.t_final));
    }
    if g.n < 2 {
        errs.push(format!("grid.n = {} must be at least 2", g.n));
    }
    if ladder.len() < 2 || !increasing(&ladder) || ladder[0] < 2 {
        errs.push("grid.n_ladder needs at least two increasing sizes ≥ 2".into());
    }
    if let Some(i) = g.snapshot_interval {
        if !(i > 0.0) {
            errs.push(format!("grid.snapshot_interval = {i} must be positive"));
        }
    }
    if !(g.blowup_ceiling > 0.0) {
        errs.push("grid.blowup_ceiling must be positive".into());
    }
    if raw.hypotheses.samples == 0 || raw.hypotheses.ray_directions == 0 {
        errs.push("hypotheses.samples and hypotheses.ray_directions must be positive".into());
    }
    let m = &raw.measures;
    if m.k_ladder.is_empty() || !increasing(&m.k_ladder) || m.k_ladder[0] <= 0.0 {
        errs.push("measures.k_ladder must be positive and increasing".into());
    }
    if let Some(e) = &m.eps_ladder {
        if e.is_empty() || e.iter().any(|x| !(*x > 0.0)) {
            errs.push("measures.eps_ladder must be nonempty and positive".into());
        }
    }
    if m.coarse_cells == 0 || m.slabs == 0 {
        errs.push("measures.coarse_cells and measures.slabs must be positive".into());
    } else if ladder.iter().any(|n| n % m.coarse_cells != 0) {
        errs.push(format!("measures.coarse_cells = {} must divide every grid.n_ladder entry", m.coarse_cells));
    }
    let p = &raw.probe;
    if p.coarsening == 0 || p.snapshots == 0 {
        errs.push("probe.coarsening and probe.snapshots must be positive".into());
    } else {
        for n in &ladder {
            if n % p.coarsening != 0 || !n_reference.is_multiple_of((n / p.coarsening).max(1)) {
                errs.push(format!(
                    "probe: N = {n} with coarsening {} does not nest in n_reference = {n_reference}",
                    p.coarsening
                ));
            }
        }
    }
    if let Some(c) = p.c_cap {
        if !(c > 0.0) {
            errs.push("probe.c_cap must be positive".into());
        }
    }
    if raw.recession.directions == 0 {
        errs.push("recession.directions must be positive".into());
    }
    if let Some(s) = &raw.recession.s_grid {
        if s.len() < 2 || !increasing(s) || s[0] <= 0.0 {
            errs.push("recession.s_grid must be positive, increasing and have two points".into());
        }
    }
    let o = &raw.orlicz;
    if o.samples == 0 || !(o.range > 0.0) || !(o.tolerance >= 0.0) {
        errs.push("orlicz.samples and orlicz.range must be positive, orlicz.tolerance nonnegative".into());
    }
    if let Some(sys) = &system {
        let dim = sys.state_dim();
        let mut check_spec = |name: &str, spec: &InitSpec| {
            let states: Vec<&Vec<f64>> = match spec {
                InitSpec::Constant { state } => vec![state],
                InitSpec::SmoothPeriodic { base, modes } => {
                    for md in modes {
                        if md.component >= dim || md.wavenumber.len() != sys.space_dim() {
                            errs.push(format!(
                                "{name}: mode needs component < {dim} and {} wavenumbers",
                                sys.space_dim()
                            ));
                        }
                    }
                    vec![base]
                }
                InitSpec::Riemann { left, right } => vec![left, right],
                InitSpec::Oscillatory { state_a, state_b, frequency } => {
                    if *frequency == 0 {
                        errs.push(format!("{name}: oscillation frequency must be positive"));
                    }
                    vec![state_a, state_b]
                }
            };
            for s in states {
                if s.len() != dim {
                    errs.push(format!("{name}: state {s:?} has {} components, {} expects {dim}", s.len(), sys.name()));
                }
            }
        };
        if let Some(spec) = &raw.initial {
            check_spec("initial", spec);
        }
        if let Some(spec) = &raw.probe.mismatch {
            check_spec("probe.mismatch", spec);
        }
        if let Some(u) = &raw.recession.reference_state {
            if u.len() != dim {
                errs.push(format!("recession.reference_state needs {dim} components"));
            }
        }
    }
    if !errs.is_empty() {
        return Err(ConfigError::Validation(errs));
    }
    let system = system.expect("no errors");
    let initial = raw.initial.unwrap_or_else(|| InitSpec::default_for(system.as_ref(), 0.05));
    Ok(RunConfig {
        seed: raw.seed.expect("no errors"),
        system: raw.system,
        grid: raw.grid,
        initial,
        hypotheses: raw.hypotheses,
        measures: raw.measures,
        probe: raw.probe,
        recession: raw.recession,
        orlicz: raw.orlicz,
        output: raw.output,
        vacuum: raw.vacuum,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config_str("seed = 3\n", &Overrides::default()).unwrap();
        assert_eq!(c.system.id, "euler");
        assert_eq!(c.grid.cfl, 0.9);
        assert_eq!(c.initial, InitSpec::density_wave(2, 0.05));
        assert_eq!(c.measures.k_ladder, vec![10.0, 1e2, 1e3, 1e4]);
    }

    #[test]
    fn every_problem_is_listed() {
        let text = "[system]\nid = \"mhd3d\"\n[grid]\ncfl = 1.5\n";
        let ConfigError::Validation(errs) = parse_config_str(text, &Overrides::default()).unwrap_err() else {
            panic!("expected validation errors");
        };
        assert!(errs.iter().any(|e| e.contains("seed")));
        assert!(errs.iter().any(|e| e.contains("cfl = 1.5 must lie in (0,1)")));
        assert!(errs.iter().any(|e| e.contains("registered ids") && e.contains("nonhom-inc-mhd")));
    }

    #[test]
    fn parse_errors_carry_positions() {
        let err = parse_config_str("seed = 3\n[grid]\ncfl = \"fast\"\n", &Overrides::default()).unwrap_err();
        let ConfigError::Parse { line, .. } = err else { panic!("expected a parse error") };
        assert_eq!(line, 3);
        let unknown = parse_config_str("seed = 3\n[grid]\nresolution = 4\n", &Overrides::default()).unwrap_err();
        assert!(matches!(unknown, ConfigError::Parse { line: 3, .. }));
    }

    #[test]
    fn overrides_win() {
        let o = Overrides { system: Some("swmhd".into()), seed: Some(9), out: None, strict_vacuum: true };
        let c = parse_config_str("seed = 1\n", &o).unwrap();
        assert_eq!((c.seed, c.system.id.as_str(), c.vacuum.strict), (9, "swmhd", true));
        assert_eq!(c.initial, InitSpec::default_for(c.build_system().as_ref(), 0.05));
    }
}
