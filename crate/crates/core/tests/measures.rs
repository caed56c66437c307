use entroflux::hypotheses::{check_h4, SampleDesign};
use entroflux::measures::*;
use entroflux::solver::{run, Cadence};
use entroflux::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn s(v: &[f64]) -> State {
    State::from_column_slice(v)
}

fn euler() -> SharedSystem {
    build_system("euler", &SystemParams::default()).unwrap()
}

#[test]
fn young_measure_of_constant_and_oscillating_fields() {
    let constant = systems::StateField::constant(64, 1, &s(&[1.0, 0.5]));
    let nu = empirical_young_measure(&constant, 8).unwrap();
    assert!(nu.cells.iter().all(|c| c.len() == 1 && c.atoms()[0].1 == 1.0));
    let cells = (0..64).map(|i| if i % 2 == 0 { s(&[1.0, 0.0]) } else { s(&[2.0, 0.0]) }).collect();
    let osc = systems::StateField::new(64, 1, cells).unwrap();
    let nu = empirical_young_measure(&osc, 8).unwrap();
    for c in &nu.cells {
        assert_eq!(c.len(), 2);
        assert!(c.atoms().iter().all(|(_, w)| *w == 0.5));
    }
    assert!(matches!(empirical_young_measure(&osc, 7), Err(Error::Grid(_))));
}

#[test]
fn rebinning_preserves_integrals() {
    let sys = build_system("swmhd", &SystemParams::default()).unwrap();
    let field = systems::random_smooth_field(sys.as_ref(), 32, 3, 4);
    let nu = empirical_young_measure(&field, 8).unwrap();
    let fine_h = 1.0 / (32.0 * 32.0);
    let fine_eta: f64 = field.cells.iter().map(|u| sys.eta(u)).sum::<f64>() * fine_h;
    assert!((nu.integrate(|u| sys.eta(u)) - fine_eta).abs() <= 1e-12);
    for c in 0..5 {
        let fine: f64 = field.cells.iter().map(|u| sys.a(u)[c]).sum::<f64>() * fine_h;
        assert!((nu.integrate(|u| sys.a(u)[c]) - fine).abs() <= 1e-12);
    }
}

/// `f_n = scale(n) · 1[x < 1/n]` sampled exactly: one point carrying the
/// spike and one carrying the zero remainder.
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

const LADDER: [f64; 4] = [10.0, 1e2, 1e3, 1e4];

#[test]
fn delta_family_concentrates_unit_mass() {
    let c = concentration_mass(&spike_family(|n| n, 0.5, 1), &LADDER).unwrap();
    let total = c.total_extrapolated()[0];
    assert!((total - 1.0).abs() <= 0.05, "{total}");
    assert!((c.extrapolated[0][0] - 1.0).abs() <= 0.05);
}

#[test]
fn vanishing_family_has_small_mass() {
    let c = concentration_mass(&spike_family(f64::sqrt, 0.5, 1), &LADDER).unwrap();
    // Closed form at the finest member: √n·(1/n) = n^{-1/2} on levels k ≤ √n.
    let n: f64 = 1e5;
    for (k, level) in LADDER.iter().zip(&c.partial) {
        let want = if *k <= n.sqrt() { n.powf(-0.5) } else { 0.0 };
        assert!((level[0][0] - want).abs() < 1e-15);
    }
    assert!(c.total_extrapolated()[0] <= 0.05);
}

#[test]
fn bounded_family_has_no_concentration() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let members = (1..4)
        .map(|m| {
            let pts = (0..200).map(|_| PointSample::new(rng.random(), 0.0, rng.random_range(-5.0..5.0), 1.0 / 200.0)).collect();
            (m * 100, pts)
        })
        .collect();
    let fam = SampledFamily::from_samples("bounded", 8, 1, 1.0, members).unwrap();
    let c = concentration_mass(&fam, &LADDER).unwrap();
    assert!(c.partial.iter().flatten().all(|m| m[0] == 0.0));
    assert_eq!(c.max_extrapolated(), 0.0);
}

#[test]
fn slabs_localize_the_spike_in_time() {
    let c = concentration_mass(&spike_family(|n| n, 0.05, 10), &LADDER).unwrap();
    let slabs = time_slices(&c);
    assert_eq!(slabs.len(), 10);
    assert!((slabs[0].total_extrapolated()[0] - 1.0).abs() <= 0.05);
    for slab in &slabs[1..] {
        assert!(slab.max_extrapolated() <= 1e-12);
    }
    let zero = concentration_mass(&spike_family(|_| 0.0, 0.05, 10), &LADDER).unwrap();
    assert!(time_slices(&zero).iter().all(|s| s.max_extrapolated() == 0.0));
}

#[test]
fn slab_masses_add_up_on_solver_runs() {
    let sys = euler();
    let spec = InitSpec::Oscillatory { state_a: vec![1.0, 0.0], state_b: vec![4.0, 0.0], frequency: 1 };
    let options = RunOptions::default().with_cadence(Cadence::EveryStep);
    let runs: Vec<Trajectory> = [32usize, 64]
        .iter()
        .map(|&n| run(sys.as_ref(), &TorusGrid::new(1, n, 0.05, 0.9).unwrap(), &spec, &options).unwrap())
        .collect();
    let fam = SampledFamily::from_trajectories(sys.as_ref(), &runs, ConcQuantity::Eta, 8, 5).unwrap();
    let c = concentration_mass(&fam, &[1.0, 2.0, 4.0]).unwrap();
    for k in 0..3 {
        let whole = c.total_at_level(k)[0];
        let sliced: f64 = time_slices(&c).iter().map(|sl| sl.total_at_level(k)[0]).sum();
        assert!((whole - sliced).abs() <= 1e-12);
    }
}

proptest! {
    #[test]
    fn partial_masses_are_nonincreasing_in_k(values in prop::collection::vec((0.0f64..1.0, 0.0f64..1e4, 1e-4f64..1e-2), 1..80)) {
        let pts: Vec<PointSample> = values.iter().map(|(x, v, w)| PointSample::new(*x, 0.0, *v, *w)).collect();
        let fam = SampledFamily::from_samples("g", 4, 1, 1.0, vec![(1, Vec::new()), (2, pts)]).unwrap();
        let c = concentration_mass(&fam, &LADDER).unwrap();
        for cell in 0..4 {
            for w in c.partial.windows(2) {
                prop_assert!(w[1][cell][0] <= w[0][cell][0]);
            }
            prop_assert!(c.extrapolated[cell][0] >= 0.0);
        }
    }
}

#[test]
fn radon_nikodym_recovers_a_linear_density() {
    let n = 256;
    let h = 1.0 / n as f64;
    let m_f = vec![h; n];
    let m_g: Vec<f64> = (0..n).map(|i| h * (i as f64 + 0.5) * h).collect();
    let rn = radon_nikodym(&m_g, &m_f, n, 1, &[4.0 * h, 2.0 * h]).unwrap();
    assert_eq!(rn.eps[1], 2.0 * h);
    // Relative masked L¹ error against ∫|w| = ½.
    let err = rn.masked_l1(|x| x[0]) / 0.5;
    assert!(err <= 0.05, "{err}");
}

#[test]
fn radon_nikodym_is_exact_away_from_jumps() {
    let n = 64;
    let h = 1.0 / n as f64;
    let m_f: Vec<f64> = (0..n).map(|i| h * (1.0 + (i % 5) as f64)).collect();
    let w = |i: usize| if i < n / 2 { 1.0 } else { 3.0 };
    let m_g: Vec<f64> = (0..n).map(|i| w(i) * m_f[i]).collect();
    let eps = 2.0 * h;
    let rn = radon_nikodym(&m_g, &m_f, n, 1, &[eps]).unwrap();
    for i in 0..n {
        let x = (i as f64 + 0.5) * h;
        let to_jump = [x, (x - 0.5).abs(), 1.0 - x].into_iter().fold(f64::INFINITY, f64::min);
        if to_jump > 2.0 * eps + h {
            assert!((rn.estimate[i].unwrap() - w(i)).abs() < 1e-13, "cell {i}");
        }
    }
}

#[test]
fn alternating_signs_stay_bounded() {
    let n = 128;
    let h = 1.0 / n as f64;
    let m_f = vec![h; n];
    let m_g: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { h } else { -h }).collect();
    let rn = radon_nikodym(&m_g, &m_f, n, 1, &[8.0 * h, 2.0 * h]).unwrap();
    for row in &rn.values {
        assert!(row.iter().all(|v| v.unwrap().abs() <= 1.05));
    }
}

#[test]
fn masked_cells_are_skipped() {
    let m_f = vec![0.0, 1.0, 1.0, 0.0];
    let rn = radon_nikodym(&[0.0, 2.0, 2.0, 0.0], &m_f, 4, 1, &[0.25]).unwrap();
    assert_eq!(rn.masked, 2);
    assert!(rn.estimate[0].is_none() && rn.estimate[1].is_some());
}

#[test]
fn oscillating_euler_family_is_dominated() {
    let sys = euler();
    let spec = InitSpec::Oscillatory { state_a: vec![1.0, 0.0], state_b: vec![2.0, 0.0], frequency: 1 };
    let runs: Vec<Trajectory> = [64usize, 128, 256]
        .iter()
        .map(|&n| {
            let grid = TorusGrid::new(1, n, 0.05, 0.9).unwrap();
            run(sys.as_ref(), &grid, &spec, &RunOptions::default().with_cadence(Cadence::Interval(0.005))).unwrap()
        })
        .collect();
    let fam = family_concentration(sys.as_ref(), &runs, 16, 1, &LADDER).unwrap();
    let c_a = check_h4(sys.as_ref(), &SampleDesign::documented(sys.as_ref(), 1)).unwrap().constants["C_A"];
    let m_a: Vec<f64> = fam.a.extrapolated.iter().map(|m| m.amax()).collect();
    let m_eta: Vec<f64> = fam.eta.extrapolated.iter().map(|m| m[0]).collect();
    assert!(check_domination(&m_a, &m_eta, c_a).unwrap().pass);
    assert!(m_a.iter().all(|m| *m == 0.0));
    let u_ref = vec![s(&[1.5, 0.0]); 16];
    let rel = concentration_relations(sys.as_ref(), &fam.eta, &fam.a, &fam.flux, &u_ref, 2.0).unwrap();
    assert!(rel.passed());
    assert!(rel.min_margin.abs() <= 1e-12);
}

fn random_direction(rng: &mut ChaCha8Rng, dim: usize) -> State {
    let mut b = State::from_fn(dim, |_, _| rng.random_range(-1.0..1.0));
    b[0] = rng.random_range(0.05..1.0);
    b
}

#[test]
fn recession_identities_agree_on_random_probes() {
    for id in ["euler", "swmhd"] {
        let sys = build_system(id, &SystemParams::default()).unwrap();
        let design = SampleDesign::documented(sys.as_ref(), 21);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..100 {
            let beta = random_direction(&mut rng, sys.state_dim());
            let big_u = design.compact_box.sample(&mut rng);
            let probe = RecessionProbe::new(sys.as_ref(), beta, design.s_grid.clone()).unwrap();
            let re = recession(sys.as_ref(), RecessionTarget::RelativeEntropy(big_u.clone()), &probe).unwrap();
            assert!(re.agrees(), "{id}: discrepancy {:?} vs cauchy {}", re.discrepancy, re.cauchy);
            assert!(re.value[0] >= -0.05);
            let rf = recession(sys.as_ref(), RecessionTarget::RelativeFlux(0, big_u), &probe).unwrap();
            assert!(rf.agrees(), "{id}: discrepancy {:?} vs cauchy {}", rf.discrepancy, rf.cauchy);
        }
    }
}

#[test]
fn euler_a_recession_vanishes_at_s_ten_thousand() {
    let sys = euler();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..20 {
        let probe = RecessionProbe::new(sys.as_ref(), random_direction(&mut rng, 2), vec![1e2, 1e3, 1e4]).unwrap();
        let r = recession(sys.as_ref(), RecessionTarget::A, &probe).unwrap();
        assert!(r.value.amax() <= 0.05, "{}", r.value);
    }
    let outside = RecessionProbe::new(sys.as_ref(), s(&[-1.0, 0.0]), vec![1.0, 2.0]);
    assert!(matches!(outside, Err(Error::Domain(_))));
}
