//! Relative-entropy experiments against a fine reference run.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::observed_order;
use crate::measures::{coarse_index, empirical_young_measure};
use crate::relent::Linearization;
use crate::solver::{
    reference_solution, run, Cadence, ConservedField, InitSpec, ReferenceSolution, RunOptions, TorusGrid,
    Trajectory,
};
use crate::systems::{invert_a, HyperbolicSystem, State};

/// Truncation level for the per-slice concentration term.
pub const SLICE_TRUNCATION: f64 = 10.0;
/// Snapshot times of the two runs must agree to this tolerance.
pub const TIME_ALIGN_TOL: f64 = 1e-12;
/// Number of candidate rates on `[0, c_cap]`.
pub const FIT_GRID: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GronwallSeries {
    pub system: String,
    pub n_coarse: usize,
    pub n_measure: usize,
    pub times: Vec<f64>,
    /// `Σ_cells 𝓗(ν_t, U(t)) H^d`.
    pub relative_entropy: Vec<f64>,
    /// `Σ_cells (m_η − m_A·G(U))` at the slice truncation level.
    pub concentration: Vec<f64>,
    /// Integrated Young-measure variance.
    pub variance: Vec<f64>,
    /// Relative entropy plus concentration term.
    pub values: Vec<f64>,
    pub gradient_bound: f64,
}

impl GronwallSeries {
    pub fn terminal(&self) -> f64 {
        *self.values.last().expect("series has the initial time")
    }
}

/// Reference states per measure cell: `A⁻¹` of the cell average of `A(u)`.
fn projected_reference(
    system: &dyn HyperbolicSystem,
    field: &ConservedField,
    m: usize,
    options: &RunOptions,
) -> Result<Vec<State>> {
    if !field.n.is_multiple_of(m) {
        return Err(Error::Grid(format!("reference N = {} does not nest {m} measure cells", field.n)));
    }
    let ratio = field.n / m;
    let cells = m.pow(field.d as u32);
    let mut sums = vec![State::zeros(system.state_dim()); cells];
    for (i, v) in field.v.iter().enumerate() {
        sums[coarse_index(i, field.n, field.d, ratio)] += v;
    }
    let scale = 1.0 / ratio.pow(field.d as u32) as f64;
    sums.into_iter().map(|s| invert_a(system, &(s * scale), options.vacuum).map(|inv| inv.state)).collect()
}

fn slice_concentration(system: &dyn HyperbolicSystem, field: &ConservedField, lin: &[Linearization], ratio: usize) -> f64 {
    let w = field.cell_volume();
    let mut total = 0.0;
    for (i, u) in field.u.iter().enumerate() {
        let eta = system.eta(u);
        let a = system.a(u);
        let cell = coarse_index(i, field.n, field.d, ratio);
        if eta >= SLICE_TRUNCATION {
            total += w * eta;
        }
        let g = &lin[cell].g;
        for c in 0..a.len() {
            if a[c].abs() >= SLICE_TRUNCATION {
                total -= w * a[c] * g[c];
            }
        }
    }
    total
}

/// Relative entropy of the coarse run's Young measures (on cells of
/// `coarsening` coarse cells per side) against the projected reference.
pub fn relent_trajectory(
    coarse: &Trajectory,
    reference: &ReferenceSolution,
    system: &dyn HyperbolicSystem,
    coarsening: usize,
    options: &RunOptions,
) -> Result<GronwallSeries> {
    if coarsening == 0 || !coarse.n.is_multiple_of(coarsening) {
        return Err(Error::Grid(format!("coarsening {coarsening} does not divide N = {}", coarse.n)));
    }
    let m = coarse.n / coarsening;
    let h_d = (1.0 / m as f64).powi(coarse.d as i32);
    let mut out = GronwallSeries {
        system: system.name().to_string(),
        n_coarse: coarse.n,
        n_measure: m,
        times: Vec::new(),
        relative_entropy: Vec::new(),
        concentration: Vec::new(),
        variance: Vec::new(),
        values: Vec::new(),
        gradient_bound: reference.gradient_bound,
    };
    let refs = &reference.trajectory.snapshots;
    for snap in &coarse.snapshots {
        let r = refs
            .iter()
            .find(|r| (r.t - snap.t).abs() <= TIME_ALIGN_TOL)
            .ok_or_else(|| Error::Grid(format!("no reference snapshot at t = {}", snap.t)))?;
        let big_u = projected_reference(system, r, m, options)?;
        let lin = big_u.iter().map(|u| Linearization::new(system, u)).collect::<Result<Vec<_>>>()?;
        let young = empirical_young_measure(&snap.states(), m)?;
        let mut h = 0.0;
        let mut var = 0.0;
        for (cell, nu) in young.cells.iter().enumerate() {
            let mean_eta = nu.mean(|u| system.eta(u));
            let mean_a = nu.mean_vector(|u| system.a(u));
            h += h_d * lin[cell].averaged_entropy(mean_eta, &mean_a);
            var += h_d * nu.variance();
        }
        let conc = slice_concentration(system, snap, &lin, coarsening);
        out.times.push(snap.t);
        out.relative_entropy.push(h);
        out.concentration.push(conc);
        out.variance.push(var);
        out.values.push(h + conc);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GronwallFit {
    /// Multiplicative constant `(H(0) + δ)/H(0)`.
    pub big_c: f64,
    pub c: f64,
    pub delta: f64,
    pub cap: f64,
}

/// Smallest `c` on a uniform grid of `[0, c_cap]` with
/// `H(t) ≤ (H(0) + δ) e^{ct}` at every sample, `δ = 1e-10 + 0.01 H(0)`.
pub fn fit_gronwall(series: &GronwallSeries, c_cap: f64) -> Result<GronwallFit> {
    if !(c_cap > 0.0) {
        return Err(Error::Config(format!("Gronwall cap must be positive, got {c_cap}")));
    }
    let h0 = series.values[0];
    if !(h0 > 0.0) {
        return Ok(GronwallFit { big_c: 1.0, c: 0.0, delta: 0.0, cap: c_cap });
    }
    let delta = 1e-10 + 0.01 * h0;
    let base = h0 + delta;
    let mut needed = 0.0f64;
    for (&t, &h) in series.times.iter().zip(&series.values) {
        if h > base {
            if t <= 0.0 {
                return Err(Error::Fit { cap: c_cap });
            }
            needed = needed.max((h / base).ln() / t);
        }
    }
    let step = c_cap / FIT_GRID as f64;
    let mut c = (needed / step).ceil() * step;
    // Guard the rounding against a bound that fails by one ulp.
    while series.times.iter().zip(&series.values).any(|(&t, &h)| h > base * (c * t).exp()) {
        c += step;
    }
    if c > c_cap * (1.0 + 1e-12) {
        return Err(Error::Fit { cap: c_cap });
    }
    Ok(GronwallFit { big_c: base / h0, c, delta, cap: c_cap })
}

/// `10 (1 + ‖∇U‖_∞ · max wave speed)` over the reference run.
pub fn default_cap(system: &dyn HyperbolicSystem, reference: &ReferenceSolution) -> f64 {
    let speed = reference
        .trajectory
        .snapshots
        .iter()
        .flat_map(|s| s.u.iter())
        .filter_map(|u| system.wave_speed(u))
        .fold(0.0, f64::max);
    10.0 * (1.0 + reference.gradient_bound * speed)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeConfig {
    pub ladder: Vec<usize>,
    pub n_reference: usize,
    pub t_final: f64,
    pub cfl: f64,
    pub coarsening: usize,
    pub snapshots: usize,
    pub options: RunOptions,
    /// Initial data for the coarse runs when they differ from the reference.
    pub coarse_data: Option<InitSpec>,
    pub c_cap: Option<f64>,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            ladder: vec![64, 128, 256, 512],
            n_reference: 4096,
            t_final: 0.05,
            cfl: 0.9,
            coarsening: 4,
            snapshots: 10,
            options: RunOptions::default(),
            coarse_data: None,
            c_cap: None,
        }
    }
}

/// Minimum observed rate in `h` for the decreasing metrics.
pub const MIN_RATE: f64 = 0.4;
/// Minimum terminal reduction per halving of `h`.
pub const MIN_REDUCTION: f64 = 1.3;
/// Metrics below this are treated as exactly zero.
pub const ZERO_METRIC: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeLevel {
    pub n: usize,
    pub h: f64,
    pub terminal_relative_entropy: f64,
    pub terminal_variance: f64,
    pub terminal_concentration: f64,
    pub fit: Option<GronwallFit>,
    pub fit_error: Option<String>,
    pub series: GronwallSeries,
}

/// Refinement behaviour of one metric along the ladder.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricTrend {
    pub values: Vec<f64>,
    /// `None` when every value is zero.
    pub rate: Option<f64>,
    pub min_reduction: Option<f64>,
    pub vanishing: bool,
    pub pass: bool,
}

impl MetricTrend {
    fn new(h: &[f64], values: Vec<f64>, need_reduction: bool) -> Self {
        if values.iter().all(|v| v.abs() <= ZERO_METRIC) {
            return Self { values, rate: None, min_reduction: None, vanishing: true, pass: true };
        }
        if values.iter().any(|v| !(*v > 0.0)) {
            return Self { values, rate: None, min_reduction: None, vanishing: false, pass: false };
        }
        let rate = observed_order(h, &values);
        let min_reduction = values.windows(2).map(|w| w[0] / w[1]).fold(f64::INFINITY, f64::min);
        let pass = rate >= MIN_RATE && (!need_reduction || min_reduction >= MIN_REDUCTION);
        Self { values, rate: Some(rate), min_reduction: Some(min_reduction), vanishing: false, pass }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeReport {
    pub system: String,
    pub t_final: f64,
    pub n_reference: usize,
    pub coarsening: usize,
    pub mismatched_data: bool,
    pub gradient_bound: f64,
    pub cap: f64,
    pub levels: Vec<ProbeLevel>,
    pub relative_entropy: MetricTrend,
    pub variance: MetricTrend,
    pub concentration: MetricTrend,
    pub gronwall_pass: bool,
    pub pass: bool,
}

impl ProbeReport {
    pub fn finest_terminal(&self) -> f64 {
        self.levels.last().map(|l| l.terminal_relative_entropy).unwrap_or(0.0)
    }
}

/// Runs the ladder against one reference and reports whether relative
/// entropy, Young-measure variance and concentration all decay with `h`.
pub fn uniqueness_probe(system: &dyn HyperbolicSystem, spec: &InitSpec, config: &ProbeConfig) -> Result<ProbeReport> {
    if config.ladder.len() < 2 || config.ladder.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("N ladder must be increasing with at least two entries".into()));
    }
    if config.snapshots == 0 {
        return Err(Error::Config("at least one snapshot interval is needed".into()));
    }
    let d = system.space_dim();
    let options = config.options.with_cadence(Cadence::Interval(config.t_final / config.snapshots as f64));
    let ref_grid = TorusGrid::new(d, config.n_reference, config.t_final, config.cfl)?;
    let reference = reference_solution(system, &ref_grid, spec, &options)?;
    let cap = config.c_cap.unwrap_or_else(|| default_cap(system, &reference));
    let coarse_spec = config.coarse_data.as_ref().unwrap_or(spec);
    let levels = config
        .ladder
        .par_iter()
        .map(|&n| {
            let grid = TorusGrid::new(d, n, config.t_final, config.cfl)?;
            let traj = run(system, &grid, coarse_spec, &options)?;
            let series = relent_trajectory(&traj, &reference, system, config.coarsening, &options)?;
            let (fit, fit_error) = match fit_gronwall(&series, cap) {
                Ok(f) => (Some(f), None),
                Err(e @ Error::Fit { .. }) => (None, Some(e.to_string())),
                Err(e) => return Err(e),
            };
            Ok(ProbeLevel {
                n,
                h: 1.0 / n as f64,
                terminal_relative_entropy: series.terminal(),
                terminal_variance: *series.variance.last().expect("nonempty"),
                terminal_concentration: *series.concentration.last().expect("nonempty"),
                fit,
                fit_error,
                series,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let h: Vec<f64> = levels.iter().map(|l| l.h).collect();
    let relative_entropy = MetricTrend::new(&h, levels.iter().map(|l| l.terminal_relative_entropy).collect(), true);
    let variance = MetricTrend::new(&h, levels.iter().map(|l| l.terminal_variance).collect(), false);
    let concentration = MetricTrend::new(&h, levels.iter().map(|l| l.terminal_concentration).collect(), false);
    let gronwall_pass = levels.iter().all(|l| l.fit.is_some());
    let pass = relative_entropy.pass && variance.pass && concentration.pass && gronwall_pass;
    Ok(ProbeReport {
        system: system.name().to_string(),
        t_final: config.t_final,
        n_reference: config.n_reference,
        coarsening: config.coarsening,
        mismatched_data: config.coarse_data.is_some(),
        gradient_bound: reference.gradient_bound,
        cap,
        levels,
        relative_entropy,
        variance,
        concentration,
        gronwall_pass,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(times: Vec<f64>, values: Vec<f64>) -> GronwallSeries {
        GronwallSeries {
            system: "test".into(),
            n_coarse: 1,
            n_measure: 1,
            relative_entropy: values.clone(),
            concentration: vec![0.0; values.len()],
            variance: vec![0.0; values.len()],
            values,
            times,
            gradient_bound: 0.0,
        }
    }

    #[test]
    fn zero_series_fits_with_zero_rate() {
        let f = fit_gronwall(&series(vec![0.0, 0.5, 1.0], vec![0.0; 3]), 10.0).unwrap();
        assert_eq!(f.c, 0.0);
    }

    #[test]
    fn growth_rate_is_recovered_on_the_grid() {
        let t: Vec<f64> = (0..=10).map(|i| i as f64 * 0.1).collect();
        let v: Vec<f64> = t.iter().map(|t| (2.0 * t).exp()).collect();
        let f = fit_gronwall(&series(t, v), 10.0).unwrap();
        assert!(f.c <= 2.0 + 0.01 && f.c > 1.9, "{}", f.c);
    }

    #[test]
    fn blowup_exceeds_cap() {
        let t: Vec<f64> = vec![0.0, 1e-3, 1e-2, 0.1];
        let v: Vec<f64> = t.iter().map(|t| if *t == 0.0 { 1.0 } else { 1.0 / t }).collect();
        assert!(matches!(fit_gronwall(&series(t, v), 10.0), Err(Error::Fit { .. })));
    }
}
