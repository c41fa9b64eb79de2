use std::f64::consts::PI;

use proptest::prelude::*;

use ptwell::continuation::classify_levels;
use ptwell::model::ScaledParams;
use ptwell::oracle::{oracle_spectrum, GridSpec};
use ptwell::secular::{solve_coefficients, wavefunction_at, RootTriple};
use ptwell::spectrum::{scan_roots, Stability};

#[test]
fn robust_levels_survive_past_the_cap() {
    let p = ScaledParams::unit(20.0, 0.0).unwrap();
    let z_cap = 50.0;
    let s = classify_levels(&p, z_cap, 0.6).unwrap();
    let far = scan_roots(&p.with_z(2.0 * z_cap), 2.0);
    for root in s.roots.iter().filter(|r| r.stability == Stability::Robust) {
        // robust levels drift by well under a spacing pi/(2 lambda)
        let gate = PI / (4.0 * p.lambda);
        assert!(far.roots.iter().any(|f| (f.r - root.r).abs() < gate + 0.5), "{root:?}");
    }
}

#[test]
fn oracle_tracks_the_merger() {
    // L = 1, ell = 0.5: lambda = 1, scale 0.5
    let s = ScaledParams::new(1.0, 0.0, 0.5).unwrap();
    let count = |z: f64| {
        let p = s.with_z(z).to_physical();
        oracle_spectrum(&p, &GridSpec::new(800, 40.0).unwrap()).unwrap().eigenvalues.len()
    };
    let branch = ptwell::continuation::sweep(&s, ptwell::continuation::Parameter::Z, (0.0, 12.0), 49, 6.0).unwrap();
    let ep_z = ptwell::continuation::exceptional_from_branch(&branch)
        .into_iter()
        .filter_map(Result::ok)
        .map(|e| e.z)
        .fold(f64::INFINITY, f64::min);
    assert!(ep_z.is_finite());
    assert_eq!(count(0.97 * ep_z), count(1.03 * ep_z) + 2, "EP at Z = {ep_z}");
}

#[test]
fn oracle_levels_sit_on_analytic_roots() {
    let s = ScaledParams::new(0.6, 1.2, 1.0 / 1.6).unwrap();
    let analytic = scan_roots(&s, 12.0);
    let o = oracle_spectrum(&s.to_physical(), &GridSpec::new(600, 150.0).unwrap().with_halving()).unwrap();
    let fd = o.extrapolated.unwrap();
    for (a, b) in analytic.roots.iter().zip(&fd) {
        assert!((a.energy - b).abs() < 1e-4 * a.energy, "{} vs {b}", a.energy);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn wavefunctions_are_pt_symmetric(lambda in 0.05f64..3.0, z in 0.0f64..4.0) {
        let p = ScaledParams::unit(lambda, z).unwrap();
        let phys = p.to_physical();
        for root in scan_roots(&p, 8.0).roots.iter().take(3) {
            let t = RootTriple::from_r(root.r, z);
            let c = solve_coefficients(&t, &p, 1e-9).unwrap();
            for i in 1..10 {
                let x = phys.l * i as f64 / 10.5;
                let a = wavefunction_at(&c, &t, &p, x).unwrap();
                let b = wavefunction_at(&c, &t, &p, -x).unwrap();
                prop_assert!((a - b.conj()).norm() < 1e-9 * (1.0 + a.norm()));
            }
        }
    }
}
