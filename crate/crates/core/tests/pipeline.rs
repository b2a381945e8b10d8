//! End-to-end runs of the library outside the desk configuration.

use ap_euler::assembly::BuildSpec;
use ap_euler::frequencies::FrequencyMode;
use ap_euler::verify::{self, EstimateSettings};
use ap_euler::{Error, Rational};

fn four_d() -> BuildSpec {
    BuildSpec {
        d: 4,
        m: 2,
        s: 1,
        epsilon: Rational::new(1, 10),
        j: vec![1, 1],
        q: 6,
        p: 6,
        ..BuildSpec::desk()
    }
}

#[test]
fn four_dimensional_solution_is_exact() {
    let af = four_d().build().unwrap();
    assert_eq!(af.cylinders(), 2);
    for e in verify::residual_audit(&af, 2_000, 5.0, 3) {
        assert!(e.pass, "{} = {:e}", e.check, e.measured);
    }
    for e in verify::base_flow_audit(&af.base(), 300, 3) {
        assert!(e.pass, "{} = {:e}", e.check, e.measured);
    }
}

#[test]
fn four_dimensional_bounds_hold() {
    let af = four_d().build().unwrap();
    let entries = verify::estimate_suite(
        &af,
        &EstimateSettings {
            per_dim: Some(8),
            thetas: 4,
            ..EstimateSettings::default()
        },
    )
    .unwrap();
    let failed: Vec<String> = entries.iter().filter(|e| !e.pass).map(|e| e.label()).collect();
    assert!(failed.is_empty(), "{failed:?}");
}

#[test]
fn four_dimensional_pressure_converges() {
    // one wide scale, so that a 32^4 grid resolves the copy
    let af = BuildSpec {
        epsilon: Rational::new(2, 5),
        j: vec![1],
        ..four_d()
    }
    .build()
    .unwrap();
    let theta = af.phase0().clone();
    let errs: Vec<f64> = [8, 16, 32]
        .iter()
        .map(|&n| verify::pressure_reconstruction(&af, &theta, n).unwrap().rel_error)
        .collect();
    assert!(errs[2] < errs[1] && errs[1] < errs[0]);
}

#[test]
fn user_frequencies_with_a_resonance_are_flagged() {
    let spec = BuildSpec {
        mode: FrequencyMode::User(vec![vec![vec![0.5], vec![0.25]], vec![vec![1e-3]], vec![vec![1e-6]]]),
        ..BuildSpec::desk()
    };
    let af = spec.build().unwrap();
    let entries = verify::frequency_audit(af.frequencies(), 10.0, 3).unwrap();
    let nonres = entries.iter().find(|e| e.check == "nonresonance").unwrap();
    assert!(!nonres.pass);
    // the construction itself is still an exact solution
    assert!(verify::residual_audit(&af, 500, 5.0, 1).iter().all(|e| e.pass));
}

#[test]
fn out_of_scope_inputs_are_rejected() {
    assert!(matches!(
        BuildSpec { d: 3, ..BuildSpec::desk() }.build(),
        Err(Error::UnsupportedDimension { d: 3 })
    ));
    assert!(BuildSpec { epsilon: Rational::new(1, 2), ..BuildSpec::desk() }.build().is_err());
    let af = BuildSpec::desk().build().unwrap();
    assert!(matches!(
        verify::pressure_reconstruction(&af, af.phase0(), 63),
        Err(Error::Grid(_))
    ));
    let four = four_d().build().unwrap();
    assert!(matches!(
        verify::spectral_drift_check(&four, four.phase0(), 0.1, 1e-3, 16, 1),
        Err(Error::Precondition(_))
    ));
}
