use entroflux::hypotheses::SampleDesign;
use entroflux::systems::{discrete_divergence, random_smooth_field, SYSTEM_IDS};
use entroflux::*;
use proptest::prelude::*;

fn s(v: &[f64]) -> State {
    State::from_column_slice(v)
}

#[test]
fn registry_lists_ids_for_unknown_systems() {
    let err = build_system("navier-stokes", &SystemParams::default()).unwrap_err().to_string();
    for id in SYSTEM_IDS {
        assert!(err.contains(id), "{err}");
    }
}

#[test]
fn euler_entropy_vanishes_at_its_minimum_and_vacuum_is_admissible() {
    let sys = build_system("euler", &SystemParams::default()).unwrap();
    let eta = |u: &[f64]| evaluate(sys.as_ref(), Quantity::Eta, &s(u)).unwrap().as_scalar().unwrap();
    assert_eq!(eta(&[0.5, 0.0]), 0.0);
    assert_eq!(eta(&[0.0, 0.0]), 0.25);
    assert!(matches!(evaluate(sys.as_ref(), Quantity::Multiplier, &s(&[0.0, 0.0])), Err(Error::Domain(_))));
    assert!(matches!(evaluate(sys.as_ref(), Quantity::Eta, &s(&[-0.1, 0.0])), Err(Error::Domain(_))));
}

#[test]
fn strict_vacuum_policy_refuses_to_clamp() {
    let sys = build_system("euler", &SystemParams::default()).unwrap();
    let v = s(&[-1e-3, 0.0]);
    let soft = invert_a(sys.as_ref(), &v, VacuumPolicy::default()).unwrap();
    assert!(soft.clamped);
    let strict = VacuumPolicy { strict: true, ..VacuumPolicy::default() };
    assert!(matches!(invert_a(sys.as_ref(), &v, strict), Err(Error::Vacuum(_))));
}

#[test]
fn hessian_form_is_symmetric_positive_on_documented_boxes() {
    for id in SYSTEM_IDS {
        let sys = build_system(id, &SystemParams::default()).unwrap();
        for u in SampleDesign::documented(sys.as_ref(), 2).with_samples(100).states() {
            let m = hessian_form(sys.as_ref(), &u).unwrap();
            assert_eq!(m, m.transpose());
            assert!(m.symmetric_eigenvalues().min() > 1e-10, "{id}");
        }
    }
}

#[test]
fn projected_random_fields_are_discretely_divergence_free() {
    for id in ["swmhd", "inc-euler", "inc-mhd", "nonhom-inc-euler", "nonhom-inc-mhd"] {
        let sys = build_system(id, &SystemParams::default()).unwrap();
        let spec = sys.constraint().unwrap();
        let field = spec.project(&random_smooth_field(sys.as_ref(), 32, 4, 9)).unwrap();
        assert!(spec.max_divergence(&field) < 1e-10, "{id}");
        for group in &spec.groups {
            let w = group.extract(&field);
            assert!(discrete_divergence(&w, 32).iter().all(|x| x.abs() < 1e-10));
        }
    }
}

proptest! {
    #[test]
    fn inverting_a_recovers_the_state(id in prop::sample::select(SYSTEM_IDS.to_vec()), seed in 0u64..1000) {
        let sys = build_system(id, &SystemParams::default()).unwrap();
        for u in SampleDesign::documented(sys.as_ref(), seed).with_samples(20).states() {
            let back = invert_a(sys.as_ref(), &sys.a(&u), VacuumPolicy::default()).unwrap();
            prop_assert!(!back.clamped);
            prop_assert!((back.state - &u).amax() <= 1e-12 * (1.0 + u.amax()));
        }
    }

    #[test]
    fn euler_entropy_matches_closed_form(rho in 0.0f64..5.0, m in -3.0f64..3.0) {
        let sys = build_system("euler", &SystemParams::default()).unwrap();
        let eta = sys.eta(&s(&[rho, m]));
        let want = 0.5 * m * m + (rho - 0.5).powi(2);
        prop_assert!((eta - want).abs() <= 1e-12 * (1.0 + want));
    }
}
