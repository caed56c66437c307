//! One function per subcommand. Each writes its artifacts and returns the
//! overall verdict.

use entroflux::harness::{uniqueness_probe, ProbeConfig, ProbeReport};
use entroflux::hypotheses::{certify_with, check_h4, check_h5, SampleDesign};
use entroflux::measures::{
    check_domination, family_concentration, radon_nikodym, recession, time_slices, ConcentrationField,
    DominationReport, RecessionProbe, RecessionTarget, RelationsReport, RnDensity,
};
use entroflux::orlicz::{essentially_stronger_check, fenchel_young_check, FenchelYoungReport, NFunction, StrongerGrids, StrongerReport};
use entroflux::solver::{run, Cadence};
use entroflux::{invert_a, Error, HypothesisReport, RunOptions, SharedSystem, State, TorusGrid, Trajectory};
use serde::Serialize;
use thiserror::Error as ThisError;

use crate::config::{ConfigError, RunConfig};
use crate::output::{num, Artifacts};

#[derive(Debug, ThisError)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

pub type CmdResult = Result<bool, CliError>;

fn run_options(cfg: &RunConfig, cadence: Cadence) -> RunOptions {
    RunOptions {
        scheme: cfg.grid.scheme,
        cadence,
        vacuum: cfg.vacuum,
        blowup_ceiling: cfg.grid.blowup_ceiling,
        ..RunOptions::default()
    }
}

fn design(cfg: &RunConfig, sys: &SharedSystem) -> SampleDesign {
    let mut d = SampleDesign::documented(sys.as_ref(), cfg.seed).with_samples(cfg.hypotheses.samples);
    d.ray_directions = cfg.hypotheses.ray_directions;
    d
}

#[derive(Serialize)]
struct HypothesesOut {
    system: String,
    pass: bool,
    reports: Vec<HypothesisReport>,
}

pub fn check_hypotheses(cfg: &RunConfig, art: &mut Artifacts) -> CmdResult {
    let sys = cfg.build_system();
    let reports = certify_with(sys.as_ref(), &design(cfg, &sys))?;
    let pass = reports.iter().all(|r| r.passed());
    let rows = reports
        .iter()
        .map(|r| vec![r.id.clone(), format!("{:?}", r.verdict).to_lowercase(), r.samples.to_string(), r.skipped.to_string()])
        .collect::<Vec<_>>();
    art.csv("hypotheses.csv", &["id", "verdict", "samples", "skipped"], &rows)?;
    art.json("report.json", &HypothesesOut { system: sys.name().into(), pass, reports })?;
    Ok(pass)
}

#[derive(Serialize)]
struct SnapshotSidecar<'a> {
    system: &'a str,
    #[serde(rename = "N")]
    n: usize,
    d: usize,
    t: f64,
    scheme: &'a str,
    components: usize,
    variables: &'static str,
    layout: &'static str,
}

#[derive(Serialize)]
struct SimulateOut {
    system: String,
    scheme: String,
    n: usize,
    d: usize,
    t_final: f64,
    cfl: f64,
    steps: usize,
    clamps: usize,
    snapshot_times: Vec<f64>,
    conservation_drift: f64,
    initial_entropy: f64,
    final_entropy: f64,
    total_production: f64,
    entropy_nonincreasing: bool,
    pass: bool,
}

/// True when the total entropy never rises by more than `1e-12` relative.
pub fn entropy_nonincreasing(traj: &Trajectory) -> bool {
    let mut prev = traj.initial_entropy;
    traj.entropy.iter().all(|r| {
        let ok = r.total <= prev + 1e-12 * prev.abs().max(1.0);
        prev = r.total;
        ok
    })
}

pub fn simulate(cfg: &RunConfig, art: &mut Artifacts) -> CmdResult {
    let sys = cfg.build_system();
    let grid = TorusGrid::new(sys.space_dim(), cfg.grid.n, cfg.grid.t_final, cfg.grid.cfl)?;
    let traj = run(sys.as_ref(), &grid, &cfg.initial, &run_options(cfg, Cadence::Interval(cfg.snapshot_interval())))?;
    let total0 = traj.snapshots[0].total();
    let drift = traj.snapshots.iter().map(|s| (s.total() - &total0).amax()).fold(0.0, f64::max);
    for (k, snap) in traj.snapshots.iter().enumerate() {
        let values: Vec<f64> = snap.u.iter().flat_map(|u| u.iter().copied()).collect();
        let sidecar = SnapshotSidecar {
            system: sys.name(),
            n: snap.n,
            d: snap.d,
            t: snap.t,
            scheme: traj.scheme.name(),
            components: sys.state_dim(),
            variables: "u",
            layout: "little-endian f64, row-major [cell][component], cell = i1 + N*i2",
        };
        art.snapshot(&format!("snapshots/snap_{k:04}"), &values, &sidecar)?;
    }
    let rows = traj
        .entropy
        .iter()
        .map(|r| vec![num(r.t), num(r.dt), num(r.total), num(r.production), num(r.production_l1)])
        .collect::<Vec<_>>();
    art.csv("entropy.csv", &["t", "dt", "total", "production", "production_l1"], &rows)?;
    let monotone = entropy_nonincreasing(&traj);
    art.json(
        "report.json",
        &SimulateOut {
            system: sys.name().into(),
            scheme: traj.scheme.name().into(),
            n: traj.n,
            d: traj.d,
            t_final: cfg.grid.t_final,
            cfl: cfg.grid.cfl,
            steps: traj.steps,
            clamps: traj.clamps,
            snapshot_times: traj.times(),
            conservation_drift: drift,
            initial_entropy: traj.initial_entropy,
            final_entropy: traj.last().total_entropy(sys.as_ref()),
            total_production: traj.total_production(),
            entropy_nonincreasing: monotone,
            pass: monotone,
        },
    )?;
    Ok(monotone)
}

#[derive(Serialize)]
struct MassEntry {
    cell: usize,
    k: f64,
    mass: Vec<f64>,
}

#[derive(Serialize)]
struct FieldOut {
    quantity: String,
    entries: Vec<MassEntry>,
    extrapolated: Vec<Vec<f64>>,
    /// Resolution and max-norm total at each level, per family member.
    ladder: Vec<(usize, Vec<f64>)>,
    slab_totals: Vec<Vec<f64>>,
}

fn field_out(f: &ConcentrationField) -> FieldOut {
    let mut entries = Vec::new();
    for (ki, k) in f.levels.iter().enumerate() {
        for (cell, m) in f.partial[ki].iter().enumerate() {
            entries.push(MassEntry { cell, k: *k, mass: m.iter().copied().collect() });
        }
    }
    FieldOut {
        quantity: f.quantity.clone(),
        entries,
        extrapolated: f.extrapolated.iter().map(|m| m.iter().copied().collect()).collect(),
        ladder: f.ladder.clone(),
        slab_totals: time_slices(f).iter().map(|s| s.total_extrapolated().iter().copied().collect()).collect(),
    }
}

#[derive(Serialize)]
struct ConcentrationOut {
    system: String,
    n_ladder: Vec<usize>,
    coarse_cells: usize,
    slabs: usize,
    k_ladder: Vec<f64>,
    fields: Vec<FieldOut>,
    domination: DominationReport,
    relations: RelationsReport,
    radon_nikodym: Option<RnDensity>,
    masked_all: bool,
    pass: bool,
}

/// Reference states per space-time cell: cell and slab averages of `A(u)`
/// over the finest run, inverted.
fn space_time_reference(
    sys: &SharedSystem,
    traj: &Trajectory,
    coarse: usize,
    slabs: usize,
    cfg: &RunConfig,
) -> Result<Vec<State>, Error> {
    let d = traj.d;
    let space = coarse.pow(d as u32);
    let ratio = traj.n / coarse;
    let t_final = traj.last().t;
    let mut sums = vec![State::zeros(sys.state_dim()); slabs * space];
    let mut weights = vec![0.0; slabs * space];
    for pair in traj.snapshots.windows(2) {
        let (snap, next) = (&pair[0], &pair[1]);
        let w = next.t - snap.t;
        let slab = ((snap.t / t_final * slabs as f64).floor() as usize).min(slabs - 1);
        for (i, v) in snap.v.iter().enumerate() {
            let mut rem = i;
            let mut cell = 0;
            let mut stride = 1;
            for _ in 0..d {
                cell += (rem % traj.n) / ratio * stride;
                rem /= traj.n;
                stride *= coarse;
            }
            sums[slab * space + cell] += v * w;
            weights[slab * space + cell] += w;
        }
    }
    sums.into_iter()
        .zip(weights)
        .map(|(s, w)| invert_a(sys.as_ref(), &(s / w), cfg.vacuum).map(|inv| inv.state))
        .collect()
}

pub fn concentration(cfg: &RunConfig, art: &mut Artifacts) -> CmdResult {
    let sys = cfg.build_system();
    let d = sys.space_dim();
    let options = run_options(cfg, Cadence::Interval(cfg.snapshot_interval()));
    let runs = cfg
        .n_ladder()
        .iter()
        .map(|&n| run(sys.as_ref(), &TorusGrid::new(d, n, cfg.grid.t_final, cfg.grid.cfl)?, &cfg.initial, &options))
        .collect::<Result<Vec<_>, _>>()?;
    let (coarse, slabs) = (cfg.measures.coarse_cells, cfg.measures.slabs);
    let fam = family_concentration(sys.as_ref(), &runs, coarse, slabs, &cfg.measures.k_ladder)?;
    let design = design(cfg, &sys);
    let c_a = check_h4(sys.as_ref(), &design)?.constants["C_A"];
    let c_h5 = check_h5(sys.as_ref(), &SampleDesign::far_field(sys.as_ref(), cfg.seed.wrapping_add(1)).with_samples(design.n_samples), &design)?
        .constants["C"];
    let m_a: Vec<f64> = fam.a.extrapolated.iter().map(|m| m.amax()).collect();
    let m_eta: Vec<f64> = fam.eta.extrapolated.iter().map(|m| m[0]).collect();
    let domination = check_domination(&m_a, &m_eta, c_a)?;
    let finest = runs.last().expect("ladder has entries");
    let u_ref = space_time_reference(&sys, finest, coarse, slabs, cfg)?;
    let relations =
        entroflux::measures::concentration_relations(sys.as_ref(), &fam.eta, &fam.a, &fam.flux, &u_ref, c_h5)?;
    // Densities of the time-integrated masses on the spatial grid.
    let space = coarse.pow(d as u32);
    let fold = |v: &[f64]| -> Vec<f64> { (0..space).map(|c| (0..slabs).map(|s| v[s * space + c]).sum()).collect() };
    let (rn, masked_all) = match radon_nikodym(&fold(&m_a), &fold(&m_eta), coarse, d, &cfg.eps_ladder()) {
        Ok(r) => (Some(r), false),
        Err(Error::MaskedAll) => (None, true),
        Err(e) => return Err(e.into()),
    };
    let fields: Vec<FieldOut> =
        std::iter::once(&fam.eta).chain(std::iter::once(&fam.a)).chain(fam.flux.iter()).map(field_out).collect();
    let mut rows = Vec::new();
    for f in std::iter::once(&fam.eta).chain(std::iter::once(&fam.a)).chain(fam.flux.iter()) {
        for (ki, k) in f.levels.iter().enumerate() {
            rows.push(vec![f.quantity.clone(), num(*k), num(f.total_at_level(ki).amax())]);
        }
        rows.push(vec![f.quantity.clone(), "extrapolated".into(), num(f.total_extrapolated().amax())]);
    }
    art.csv("concentration.csv", &["quantity", "k", "total_mass"], &rows)?;
    let pass = domination.pass && relations.passed();
    art.json(
        "concentration.json",
        &ConcentrationOut {
            system: sys.name().into(),
            n_ladder: cfg.n_ladder().to_vec(),
            coarse_cells: coarse,
            slabs,
            k_ladder: cfg.measures.k_ladder.clone(),
            fields,
            domination,
            relations,
            radon_nikodym: rn,
            masked_all,
            pass,
        },
    )?;
    Ok(pass)
}

#[derive(Serialize)]
struct RecessionRow {
    direction: usize,
    beta: Vec<f64>,
    target: String,
    value: Vec<f64>,
    cauchy: f64,
    via_identity: Option<Vec<f64>>,
    discrepancy: Option<f64>,
    agrees: bool,
    truncated: usize,
}

#[derive(Serialize)]
struct RecessionOut {
    system: String,
    exponents: Vec<f64>,
    s_grid: Vec<f64>,
    reference_state: Vec<f64>,
    rows: Vec<RecessionRow>,
    identities_agree: bool,
    min_relative_entropy: f64,
    pass: bool,
}

/// Lowest admissible terminal value of the relative entropy recession.
pub const ETA_INFINITY_TOL: f64 = -0.05;

pub fn recession_cmd(cfg: &RunConfig, art: &mut Artifacts) -> CmdResult {
    let sys = cfg.build_system();
    let mut design = SampleDesign::documented(sys.as_ref(), cfg.seed);
    design.ray_directions = cfg.recession.directions;
    let big_u = match &cfg.recession.reference_state {
        Some(u) => State::from_column_slice(u),
        None => {
            let b = &design.compact_box;
            State::from_fn(b.dim(), |i, _| 0.5 * (b.lower[i] + b.upper[i]))
        }
    };
    let s_grid = cfg.s_grid(&sys);
    let mut targets = vec![RecessionTarget::A];
    targets.extend((0..sys.space_dim()).map(RecessionTarget::Flux));
    targets.push(RecessionTarget::RelativeEntropy(big_u.clone()));
    targets.extend((0..sys.space_dim()).map(|a| RecessionTarget::RelativeFlux(a, big_u.clone())));
    let mut rows = Vec::new();
    let mut min_re = f64::INFINITY;
    for (i, beta) in design.directions(sys.as_ref()).into_iter().enumerate() {
        let probe = RecessionProbe::new(sys.as_ref(), beta, s_grid.clone())?;
        for t in &targets {
            let r = recession(sys.as_ref(), t.clone(), &probe)?;
            let label = match t {
                RecessionTarget::A => "A".to_string(),
                RecessionTarget::Flux(a) => format!("F{}", a + 1),
                RecessionTarget::RelativeEntropy(_) => "eta_rel".to_string(),
                RecessionTarget::RelativeFlux(a, _) => format!("F{}_rel", a + 1),
            };
            if matches!(t, RecessionTarget::RelativeEntropy(_)) {
                min_re = min_re.min(r.value[0]);
            }
            rows.push(RecessionRow {
                direction: i,
                beta: probe.beta.iter().copied().collect(),
                target: label,
                value: r.value.iter().copied().collect(),
                cauchy: r.cauchy,
                via_identity: r.via_identity.as_ref().map(|v| v.iter().copied().collect()),
                discrepancy: r.discrepancy,
                agrees: r.agrees(),
                truncated: r.truncated,
            });
        }
    }
    let agree = rows.iter().all(|r| r.agrees);
    let pass = agree && min_re >= ETA_INFINITY_TOL;
    let csv_rows = rows
        .iter()
        .map(|r| {
            vec![
                r.direction.to_string(),
                r.target.clone(),
                num(r.value.iter().fold(0.0f64, |m, x| m.max(x.abs()))),
                num(r.cauchy),
                r.discrepancy.map_or(String::new(), num),
                r.agrees.to_string(),
            ]
        })
        .collect::<Vec<_>>();
    art.csv("recession.csv", &["direction", "target", "value_max_abs", "cauchy", "discrepancy", "agrees"], &csv_rows)?;
    art.json(
        "recession.json",
        &RecessionOut {
            system: sys.name().into(),
            exponents: sys.scaling_exponents(),
            s_grid,
            reference_state: big_u.iter().copied().collect(),
            rows,
            identities_agree: agree,
            min_relative_entropy: min_re,
            pass,
        },
    )?;
    Ok(pass)
}

pub fn probe_config(cfg: &RunConfig) -> ProbeConfig {
    ProbeConfig {
        ladder: cfg.n_ladder().to_vec(),
        n_reference: cfg.n_reference(),
        t_final: cfg.grid.t_final,
        cfl: cfg.grid.cfl,
        coarsening: cfg.probe.coarsening,
        snapshots: cfg.probe.snapshots,
        options: run_options(cfg, Cadence::EveryStep),
        coarse_data: cfg.probe.negative_control.then(|| cfg.mismatch()),
        c_cap: cfg.probe.c_cap,
    }
}

pub fn probe_uniqueness(cfg: &RunConfig, art: &mut Artifacts) -> CmdResult {
    let sys = cfg.build_system();
    let report: ProbeReport = uniqueness_probe(sys.as_ref(), &cfg.initial, &probe_config(cfg))?;
    for level in &report.levels {
        let s = &level.series;
        let rows = (0..s.times.len())
            .map(|i| vec![num(s.times[i]), num(s.values[i]), num(s.relative_entropy[i]), num(s.concentration[i]), num(s.variance[i])])
            .collect::<Vec<_>>();
        art.csv(&format!("probe_N{}.csv", level.n), &["t", "H", "relative_entropy", "concentration", "variance"], &rows)?;
    }
    let rows = report
        .levels
        .iter()
        .map(|l| {
            vec![
                l.n.to_string(),
                num(l.h),
                num(l.terminal_relative_entropy),
                num(l.terminal_variance),
                num(l.terminal_concentration),
                l.fit.map_or(String::new(), |f| num(f.c)),
            ]
        })
        .collect::<Vec<_>>();
    art.csv("probe_summary.csv", &["N", "h", "terminal_H", "variance", "concentration", "gronwall_c"], &rows)?;
    art.json("probe.json", &report)?;
    Ok(report.pass)
}

#[derive(Serialize)]
struct OrliczOut {
    fenchel_young: Vec<FenchelYoungReport>,
    stronger: StrongerReport,
    control: StrongerReport,
    pass: bool,
}

pub fn orlicz_suite(cfg: &RunConfig, art: &mut Artifacts) -> CmdResult {
    let o = &cfg.orlicz;
    let fy = [NFunction::m1(), NFunction::m2()]
        .iter()
        .enumerate()
        .map(|(i, m)| fenchel_young_check(m, o.samples, o.range, cfg.seed.wrapping_add(i as u64), o.tolerance))
        .collect::<Result<Vec<_>, _>>()?;
    let g = StrongerGrids::default();
    let stronger = essentially_stronger_check(&NFunction::m1(), &NFunction::m2(), &g.lambda, &g.v, &g.xi)?;
    let control = essentially_stronger_check(&NFunction::m2(), &NFunction::m2(), &g.lambda, &g.v, &g.xi)?;
    let pass = fy.iter().all(|r| r.pass) && stronger.pass && !control.pass;
    art.json("orlicz.json", &OrliczOut { fenchel_young: fy, stronger, control, pass })?;
    Ok(pass)
}
