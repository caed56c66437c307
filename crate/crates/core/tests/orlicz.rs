use entroflux::orlicz::*;

#[test]
fn fenchel_young_holds_for_bundled_functions() {
    for m in [NFunction::m1(), NFunction::m2()] {
        let r = fenchel_young_check(&m, 100_000, 50.0, 17, 1e-6).unwrap();
        assert!(r.pass, "{}: {}", m.name, r.max_violation);
        assert_eq!(r.samples, 100_000);
    }
}

#[test]
fn fenchel_young_is_tight_at_the_conjugate_pairing() {
    // For M = r², equality holds at w = M'(v) = 2v.
    let m = NFunction::m2();
    for v in [0.3, 1.0, 4.0] {
        let w = 2.0 * v;
        let gap = v * w - m.eval(v) - m.closed_conjugate(w).unwrap();
        assert!(gap.abs() < 1e-12);
    }
}

#[test]
fn numerical_conjugate_matches_closed_forms() {
    for (c, p) in [(1.0, 2.0), (0.5, 3.0), (2.0, 1.5)] {
        let m = NFunction::power(c, p);
        for xi in [0.1, 1.0, 10.0] {
            let numeric = fenchel_conjugate(&m, xi, CONJUGATE_CAP).unwrap();
            let exact = m.closed_conjugate(xi).unwrap();
            assert!((numeric - exact).abs() <= 1e-8 * (1.0 + exact), "c = {c}, p = {p}, ξ = {xi}");
        }
    }
}

#[test]
fn m1_is_essentially_stronger_than_m2_but_not_itself() {
    let g = StrongerGrids::default();
    let r = essentially_stronger_check(&NFunction::m1(), &NFunction::m2(), &g.lambda, &g.v, &g.xi).unwrap();
    assert!(r.pass, "{:?}", r.rows.iter().map(|x| x.terminal_fraction).collect::<Vec<_>>());
    let m = NFunction::m2();
    let same = essentially_stronger_check(&m, &m, &g.lambda, &g.v, &g.xi).unwrap();
    assert!(!same.pass);
}

#[test]
fn unordered_grids_are_rejected() {
    let m = NFunction::m2();
    assert!(essentially_stronger_check(&m, &m, &[1.0], &[2.0, 1.0], &[1.0, 2.0]).is_err());
}
