//! Desk-scale acceptance run. Prints one line per criterion and fails if any
//! criterion fails.

use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use entroflux::harness::uniqueness_probe;
use entroflux::hypotheses::*;
use entroflux::measures::*;
use entroflux::orlicz::{essentially_stronger_check, fenchel_young_check, StrongerGrids};
use entroflux::solver::*;
use entroflux::systems::SYSTEM_IDS;
use entroflux::*;
use entroflux_cli::commands::probe_config;
use entroflux_cli::config::{parse_config_str, Overrides};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = (bool, String);
type Criterion = (&'static str, fn() -> Outcome);

fn system(id: &str) -> SharedSystem {
    build_system(id, &SystemParams::default()).unwrap()
}

fn s(v: &[f64]) -> State {
    State::from_column_slice(v)
}

fn smooth_euler() -> InitSpec {
    InitSpec::density_wave(2, 0.05)
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut worst_residual = 0.0f64;
    let mut min_eig = f64::INFINITY;
    let mut all = true;
    for id in SYSTEM_IDS {
        let sys = system(id);
        let design = SampleDesign::documented(sys.as_ref(), 1);
        let h1 = check_h1(sys.as_ref(), &design).unwrap();
        let h2 = check_h2(sys.as_ref(), &design).unwrap();
        let h3 = check_h3(sys.as_ref(), &design).unwrap();
        all &= h1.passed() && h2.passed() && h3.passed() && design.n_samples == 1000;
        worst_residual = worst_residual
            .max(h2.residuals["grad_eta_minus_G_grad_A"])
            .max(h2.residuals["grad_q_minus_G_grad_F"]);
        min_eig = min_eig.min(h3.residuals["min_eigenvalue"]);
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = all && worst_residual <= 1e-8 && min_eig > 1e-10 && secs <= 10.0;
    (pass, format!("6 systems x 1000 samples, max residual {worst_residual:.2e} <= 1e-8, min eigenvalue {min_eig:.3e} > 1e-10, {secs:.2} s <= 10 s"))
}

fn criterion_2() -> Outcome {
    let mut worst = 0.0f64;
    for id in SYSTEM_IDS {
        let sys = system(id);
        let r = check_derivatives(sys.as_ref(), &SampleDesign::documented(sys.as_ref(), 2)).unwrap();
        worst = r.residuals.values().fold(worst, |m, e| m.max(*e));
    }
    (worst <= 1e-5, format!("max relative Jacobian discrepancy {worst:.2e} <= 1e-5 at 1000 points per system"))
}

fn criterion_3() -> Outcome {
    let mut drift_max = 0.0f64;
    let mut ok = true;
    for id in ["euler", "swmhd"] {
        let sys = system(id);
        let design = SampleDesign::documented(sys.as_ref(), 3);
        let mut doubled = design.clone();
        doubled.ray_directions *= 2;
        let (a, b) = (check_h4(sys.as_ref(), &design).unwrap(), check_h4(sys.as_ref(), &doubled).unwrap());
        for key in ["C_A", "C_F"] {
            drift_max = drift_max.max((a.constants[key] - b.constants[key]).abs() / b.constants[key]);
        }
        let h5 = check_h5(sys.as_ref(), &SampleDesign::far_field(sys.as_ref(), 4), &design).unwrap();
        ok &= h5.passed();
        drift_max = drift_max.max(h5.residuals["doubling_drift"]);
    }
    let sys = system("euler");
    let design = SampleDesign::documented(sys.as_ref(), 3);
    let exps_ok = sys.scaling_exponents() == vec![2.0, 1.0];
    let ratio = design
        .directions(sys.as_ref())
        .iter()
        .map(|b| *ray_series(sys.as_ref(), b, &[1e2, 1e3, 1e4]).unwrap().ratio_a.last().unwrap())
        .fold(0.0, f64::max);
    let pass = ok && exps_ok && drift_max <= 0.05 && ratio <= 0.05;
    (pass, format!("C drift under doubling {drift_max:.2e} <= 0.05, euler |A|/eta at s=1e4 {ratio:.2e} <= 0.05"))
}

fn criterion_4() -> Outcome {
    let sys = system("euler");
    let (u, big_u) = (s(&[1.0, 0.0]), s(&[0.5, 0.0]));
    let re = relative_entropy(sys.as_ref(), &u, &big_u).unwrap();
    let rf = relative_flux(sys.as_ref(), 0, &u, &big_u).unwrap();
    let err = (re - 0.25).abs().max(rf[0].abs()).max((rf[1] - 0.25).abs());
    (err <= 1e-12, format!("eta(u|U) = {re}, q(u|U) = ({}, {}), error {err:.1e} <= 1e-12", rf[0], rf[1]))
}

fn l1_error(coarse: &ConservedField, fine: &ConservedField) -> f64 {
    let r = fine.n / coarse.n;
    coarse
        .v
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let avg = (0..r).fold(State::zeros(v.len()), |acc, j| acc + &fine.v[i * r + j]) / r as f64;
            (v - avg).amax() * coarse.h()
        })
        .sum()
}

fn criterion_5() -> Outcome {
    let sys = system("euler");
    let mut drift = 0.0f64;
    let grid = TorusGrid::new(1, 64, 1.0, 0.9).unwrap();
    let riemann = InitSpec::Riemann { left: vec![1.5, 0.3], right: vec![0.7, -0.2] };
    let oscillatory = InitSpec::Oscillatory { state_a: vec![1.0, 0.0], state_b: vec![2.0, 0.0], frequency: 1 };
    for scheme in [Scheme::LaxFriedrichs, Scheme::Rusanov] {
        for spec in [smooth_euler(), riemann.clone()] {
            let options = RunOptions::default().with_scheme(scheme);
            let mut field = init_field(sys.as_ref(), &grid, &spec, options.vacuum).unwrap();
            let before = field.total();
            for _ in 0..1000 {
                let dt = stable_dt(sys.as_ref(), &field, 0.9).unwrap();
                field = step(sys.as_ref(), &field, dt, &options).unwrap().0;
            }
            drift = drift.max((field.total() - before).amax());
        }
    }
    let options = RunOptions::default();
    let reference =
        reference_solution(sys.as_ref(), &TorusGrid::new(1, 4096, 0.05, 0.9).unwrap(), &smooth_euler(), &options).unwrap();
    let ladder = [64usize, 128, 256, 512, 1024];
    let errors: Vec<f64> = ladder
        .iter()
        .map(|&n| {
            let traj = run(sys.as_ref(), &TorusGrid::new(1, n, 0.05, 0.9).unwrap(), &smooth_euler(), &options).unwrap();
            l1_error(traj.last(), reference.trajectory.last())
        })
        .collect();
    let h: Vec<f64> = ladder.iter().map(|n| 1.0 / *n as f64).collect();
    let order = linalg::observed_order(&h, &errors);
    let mut monotone = true;
    let grid = TorusGrid::new(1, 128, 0.2, 0.9).unwrap();
    for scheme in [Scheme::LaxFriedrichs, Scheme::Rusanov] {
        for spec in [smooth_euler(), riemann.clone(), oscillatory.clone()] {
            let traj = run(sys.as_ref(), &grid, &spec, &RunOptions::default().with_scheme(scheme)).unwrap();
            monotone &= entroflux_cli::commands::entropy_nonincreasing(&traj);
        }
    }
    let pass = drift <= 1e-12 && order >= 0.8 && monotone;
    (pass, format!("drift {drift:.1e} <= 1e-12 over 1000 steps, self-convergence order {order:.2} >= 0.8, entropy nonincreasing on 6 runs: {monotone}"))
}

fn criterion_6() -> Outcome {
    let sys = system("euler");
    let cutoff = TimeCutoff { start: 0.01, end: 0.04 };
    let bank = TestBank {
        moment: vec![
            MomentTest { component: 0, wavenumber: vec![1], cosine: false, cutoff },
            MomentTest { component: 1, wavenumber: vec![1], cosine: true, cutoff },
        ],
        entropy: vec![cutoff],
    };
    let options = RunOptions::default().with_cadence(Cadence::EveryStep);
    let ladder = [64usize, 128, 256, 512];
    let mut worst = Vec::new();
    let mut min_entropy = f64::INFINITY;
    for &n in &ladder {
        let traj = run(sys.as_ref(), &TorusGrid::new(1, n, 0.05, 0.9).unwrap(), &smooth_euler(), &options).unwrap();
        let r = weak_residual(&traj, sys.as_ref(), &bank).unwrap();
        min_entropy = r.entropy.iter().fold(min_entropy, |m, e| m.min(*e));
        worst.push(r.moment.iter().map(|m| m.abs()).fold(0.0, f64::max));
    }
    let h: Vec<f64> = ladder.iter().map(|n| 1.0 / *n as f64).collect();
    let order = linalg::observed_order(&h, &worst);
    let constant =
        run(sys.as_ref(), &TorusGrid::new(1, 64, 0.05, 0.9).unwrap(), &InitSpec::Constant { state: vec![1.0, 0.3] }, &options)
            .unwrap();
    let exact = weak_residual(&constant, sys.as_ref(), &bank).unwrap().moment.iter().map(|m| m.abs()).fold(0.0, f64::max);
    let pass = order >= 0.4 && exact <= 1e-10 && min_entropy >= -1e-8;
    (pass, format!("residual order {order:.2} >= 0.4, constant-state residual {exact:.1e} <= 1e-10, min entropy test {min_entropy:.2e} >= -1e-8"))
}

fn spike_family(scale: impl Fn(f64) -> f64, t: f64, slabs: usize) -> SampledFamily {
    let members = [1e2, 1e3, 1e4, 1e5]
        .iter()
        .map(|&n| {
            let spike = PointSample::new(0.5 / n, t, scale(n), 1.0 / n);
            let rest = PointSample::new(0.5, t, 0.0, 1.0 - 1.0 / n);
            (n as usize, vec![spike, rest])
        })
        .collect();
    SampledFamily::from_samples("f", 10, slabs, 1.0, members).unwrap()
}

fn criterion_7() -> Outcome {
    let ladder = [10.0, 1e2, 1e3, 1e4];
    let delta = concentration_mass(&spike_family(|n| n, 0.5, 1), &ladder).unwrap().total_extrapolated()[0];
    let vanishing = concentration_mass(&spike_family(f64::sqrt, 0.5, 1), &ladder).unwrap().total_extrapolated()[0];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let pts: Vec<PointSample> = (0..500)
        .map(|_| PointSample::new(rng.random(), rng.random(), rng.random_range(0.0..2e4), rng.random_range(1e-4..1e-2)))
        .collect();
    let fam = SampledFamily::from_samples("g", 8, 5, 1.0, vec![(1, Vec::new()), (2, pts)]).unwrap();
    let c = concentration_mass(&fam, &ladder).unwrap();
    let monotone = c.partial.windows(2).all(|w| w[1].iter().zip(&w[0]).all(|(a, b)| a[0] <= b[0]));
    let slices = time_slices(&c);
    // Relative to the level total, so only summation order can contribute.
    let additivity = (0..ladder.len())
        .map(|k| {
            let whole = c.total_at_level(k)[0];
            (whole - slices.iter().map(|sl| sl.total_at_level(k)[0]).sum::<f64>()).abs() / whole.max(f64::MIN_POSITIVE)
        })
        .fold(0.0, f64::max);
    let pass = (delta - 1.0).abs() <= 0.05 && vanishing <= 0.05 && monotone && additivity <= 1e-12;
    (pass, format!("delta mass {delta:.4} in 1 +- 0.05, vanishing mass {vanishing:.2e} <= 0.05, truncation monotone: {monotone}, relative slicing defect {additivity:.1e} <= 1e-12"))
}

fn criterion_8() -> Outcome {
    let n = 256;
    let h = 1.0 / n as f64;
    let m_f = vec![h; n];
    let m_g: Vec<f64> = (0..n).map(|i| h * (i as f64 + 0.5) * h).collect();
    let rn = radon_nikodym(&m_g, &m_f, n, 1, &[4.0 * h, 2.0 * h]).unwrap();
    let err = rn.masked_l1(|x| x[0]) / 0.5;
    let weights: Vec<f64> = (0..n).map(|i| h * (1.0 + (i % 7) as f64)).collect();
    let scaled: Vec<f64> = weights.iter().map(|w| 2.5 * w).collect();
    let constant = radon_nikodym(&scaled, &weights, n, 1, &[2.0 * h]).unwrap();
    let exact = constant.estimate.iter().map(|e| (e.unwrap() - 2.5).abs()).fold(0.0, f64::max);
    let pass = err <= 0.05 && exact <= 1e-13;
    (pass, format!("w(x) = x masked L1 error {:.2}% <= 5% at eps = 2h, constant ratio error {exact:.1e} <= 1e-13", 100.0 * err))
}

fn criterion_9() -> Outcome {
    let mut agree = 0;
    let mut total = 0;
    let mut min_re = f64::INFINITY;
    for id in ["euler", "swmhd"] {
        let sys = system(id);
        let design = SampleDesign::documented(sys.as_ref(), 9);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let mut beta = State::from_fn(sys.state_dim(), |_, _| rng.random_range(-1.0..1.0));
            beta[0] = rng.random_range(0.05..1.0);
            let big_u = design.compact_box.sample(&mut rng);
            let probe = RecessionProbe::new(sys.as_ref(), beta, design.s_grid.clone()).unwrap();
            let re = recession(sys.as_ref(), RecessionTarget::RelativeEntropy(big_u.clone()), &probe).unwrap();
            let rf = recession(sys.as_ref(), RecessionTarget::RelativeFlux(0, big_u), &probe).unwrap();
            min_re = min_re.min(re.value[0]);
            agree += usize::from(re.agrees()) + usize::from(rf.agrees());
            total += 2;
        }
    }
    let pass = agree == total && min_re >= -0.05;
    (pass, format!("{agree}/{total} identity checks within the Cauchy diagnostic (100 probes each on euler and swmhd), min eta_inf(.|U) {min_re:.3e} >= -0.05"))
}

fn criterion_10() -> Outcome {
    let start = Instant::now();
    let sys = system("euler");
    let matched_cfg = parse_config_str("seed = 10\n", &Overrides::default()).unwrap();
    let control_cfg = parse_config_str("seed = 10\n[probe]\nnegative_control = true\n", &Overrides::default()).unwrap();
    assert_eq!(matched_cfg.n_ladder(), &[64, 128, 256, 512]);
    let matched = uniqueness_probe(sys.as_ref(), &matched_cfg.initial, &probe_config(&matched_cfg)).unwrap();
    let control = uniqueness_probe(sys.as_ref(), &control_cfg.initial, &probe_config(&control_cfg)).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let ratio = control.finest_terminal() / matched.finest_terminal();
    let pass = matched.pass && matched.gronwall_pass && ratio >= 10.0 && secs <= 60.0;
    (
        pass,
        format!(
            "terminal H rate {:.2} >= 0.4, variance rate {:.2}, concentration vanishing: {}, Gronwall: {}, control/matched {ratio:.0}x >= 10x, {secs:.1} s <= 60 s",
            matched.relative_entropy.rate.unwrap_or(f64::NAN),
            matched.variance.rate.unwrap_or(f64::NAN),
            matched.concentration.vanishing,
            matched.gronwall_pass,
        ),
    )
}

fn criterion_11() -> Outcome {
    let fy: Vec<_> = [NFunction::m1(), NFunction::m2()]
        .iter()
        .map(|m| fenchel_young_check(m, 100_000, 50.0, 11, 1e-6).unwrap())
        .collect();
    let worst = fy.iter().map(|r| r.max_violation).fold(f64::NEG_INFINITY, f64::max);
    let g = StrongerGrids::default();
    let stronger = essentially_stronger_check(&NFunction::m1(), &NFunction::m2(), &g.lambda, &g.v, &g.xi).unwrap();
    let same = essentially_stronger_check(&NFunction::m2(), &NFunction::m2(), &g.lambda, &g.v, &g.xi).unwrap();
    let pass = worst <= 1e-6 && fy.iter().all(|r| r.pass) && stronger.pass && !same.pass;
    (pass, format!("largest Fenchel-Young excess {worst:.2e} <= 1e-6 over 2 x 1e5 pairs, (M1, M2) stronger: {}, (M2, M2) stronger: {}", stronger.pass, same.pass))
}

fn tree(dir: &Path) -> Vec<(std::path::PathBuf, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                files.push((p.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&p).unwrap()));
            }
        }
    }
    files.sort();
    files
}

fn criterion_12() -> Outcome {
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/euler.toml");
    let commands = ["check-hypotheses", "simulate", "concentration", "recession", "probe-uniqueness", "orlicz-suite"];
    let mut identical = 0;
    let mut files = 0;
    for cmd in commands {
        let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
        for d in &dirs {
            let status = Command::new(env!("CARGO_BIN_EXE_entroflux"))
                .args([cmd, "--config", config.to_str().unwrap(), "--out", d.path().to_str().unwrap()])
                .output()
                .unwrap()
                .status;
            assert!(status.code().is_some());
        }
        let (a, b) = (tree(dirs[0].path()), tree(dirs[1].path()));
        files += a.len();
        identical += usize::from(!a.is_empty() && a == b);
    }
    (identical == commands.len(), format!("{identical}/{} commands bit-identical across two runs ({files} files)", commands.len()))
}

#[test]
fn acceptance_criteria() {
    let criteria: [Criterion; 12] = [
        ("hypothesis certification", criterion_1),
        ("derivative oracle", criterion_2),
        ("H4/H5 stability", criterion_3),
        ("hand-value anchors", criterion_4),
        ("solver conservation and convergence", criterion_5),
        ("weak-form consistency", criterion_6),
        ("concentration oracle", criterion_7),
        ("Radon-Nikodym oracle", criterion_8),
        ("recession identities", criterion_9),
        ("uniqueness probe", criterion_10),
        ("Orlicz suite", criterion_11),
        ("reproducibility", criterion_12),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (pass, detail) = check();
        let verdict = if pass { "PASS" } else { "FAIL" };
        let line = format!("criterion {:>2} {verdict} {name}: {detail} [{:.2} s]\n", i + 1, start.elapsed().as_secs_f64());
        // Written to the raw handle so the table shows without --nocapture.
        let mut out = std::io::stdout().lock();
        out.write_all(line.as_bytes()).unwrap();
        out.flush().unwrap();
        if !pass {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
