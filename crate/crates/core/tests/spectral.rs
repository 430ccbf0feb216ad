use std::f64::consts::PI;

use num_complex::Complex64;

use coherent_torus::cache;
use coherent_torus::fbi::{husimi_mass_outside, reconstruct_error};
use coherent_torus::quantize::{kn_matrix, quantize, weyl_matrix, Quantization};
use coherent_torus::spectral::{
    bounding_radius, classical_radius, count_states, count_states_refined, eigendecompose,
    localization_radius, sublevel_volume,
};
use coherent_torus::symbol::{Symbol, SymbolSpec, SymbolTerm, XiExpr};
use coherent_torus::{Error, Exec, TorusGrid};

fn pendulum() -> Symbol {
    SymbolSpec::builtin("pendulum", 1).unwrap().build().unwrap()
}

/// Lowest pendulum eigenvalues `1 + h² a/8` from the Mathieu characteristic
/// values `a_{2r}(4/h²)`, `b_{2r}(4/h²)` (scipy.special, sorted).
const MATHIEU_EIGHTH: [f64; 6] = [
    0.062_007_811_418_213_1,
    0.185_022_841_110_259_02,
    0.306_010_780_917_976_4,
    0.424_917_463_037_825_07,
    0.541_683_621_383_967_1,
    0.656_244_048_262_752_4,
];
const MATHIEU_SIXTEENTH: [f64; 6] = [
    0.031_127_447_163_832_866,
    0.093_135_270_694_905_35,
    0.154_645_914_192_463_65,
    0.215_653_173_043_909_63,
    0.276_150_578_070_067_5,
    0.336_131_376_393_756,
];

#[test]
fn pendulum_levels_match_mathieu_values() {
    for (h, k, reference) in [(0.125, 64, MATHIEU_EIGHTH), (0.0625, 96, MATHIEU_SIXTEENTH)] {
        let g = TorusGrid::new(1, k, h).unwrap();
        let dec = eigendecompose(&kn_matrix(&pendulum(), &g, &Exec::serial()).unwrap()).unwrap();
        for (e, r) in dec.eigenvalues().iter().zip(reference) {
            assert!((e - r).abs() < 1e-11, "h={h}: {e} vs {r}");
        }
    }
}

#[test]
fn free_spectrum_is_the_squared_lattice() {
    for n in 1..=2 {
        let h = 0.25;
        let g = TorusGrid::new(n, 5, h).unwrap();
        let b = Symbol::free(n).unwrap();
        let dec = eigendecompose(&weyl_matrix(&b, &g, &Exec::serial()).unwrap()).unwrap();
        let mut expect: Vec<f64> = g
            .modes()
            .map(|k| 0.5 * h * h * k[..n].iter().map(|&v| (v * v) as f64).sum::<f64>())
            .collect();
        expect.sort_by(f64::total_cmp);
        for (e, x) in dec.eigenvalues().iter().zip(&expect) {
            assert!((e - x).abs() < 1e-14);
        }
        assert!(dec.orthonormality_error() < 1e-12);
    }
    // Ties resolve by mode order: e^{-iy} precedes e^{iy}.
    let g = TorusGrid::new(1, 4, 0.5).unwrap();
    let dec = eigendecompose(&kn_matrix(&Symbol::free(1).unwrap(), &g, &Exec::serial()).unwrap()).unwrap();
    let first = dec.eigenfunction(1).unwrap();
    let second = dec.eigenfunction(2).unwrap();
    assert!(first.coeff(&[-1]).norm() > 0.1 && second.coeff(&[1]).norm() > 0.1);
    assert_eq!(first.coeff(&[-1]).im, 0.0);
    assert!(first.coeff(&[-1]).re > 0.0);
}

#[test]
fn eigenpairs_have_small_residuals() {
    let g = TorusGrid::new(2, 4, 0.5).unwrap();
    let b = Symbol::from_fn(2, 2.0, 1, |x, xi| {
        0.5 * (xi[0] * xi[0] + xi[1] * xi[1]) + (x[0] - x[1]).cos() * xi[0] + x[1].sin()
    })
    .unwrap();
    let a = weyl_matrix(&b, &g, &Exec::serial()).unwrap();
    let dec = eigendecompose(&a).unwrap();
    assert!(dec.orthonormality_error() <= 1e-10);
    let scale = dec.spectral_norm().max(1.0);
    assert!(dec.residuals().iter().all(|&r| r <= 1e-9 * scale));
    assert!(dec.eigenvalues().windows(2).all(|w| w[0] <= w[1]));
    for j in [0, 7, 24] {
        let psi = dec.eigenfunction(j).unwrap();
        assert!((psi.norm() - 1.0).abs() < 1e-12);
        let apsi = a.apply(&psi).unwrap();
        let lam = Complex64::new(dec.eigenvalues()[j], 0.0);
        assert!(apsi.sub(&psi.scaled(lam)).unwrap().norm() <= 1e-9 * scale);
    }
}

#[test]
fn non_hermitian_matrix_is_refused() {
    let t = SymbolTerm::new(
        vec![(vec![1], Complex64::new(0.5, 0.0)), (vec![-1], Complex64::new(0.5, 0.0))],
        XiExpr::Component(0),
    )
    .unwrap();
    let b = Symbol::from_terms(1, 1.0, vec![t]).unwrap();
    let g = TorusGrid::new(1, 6, 0.5).unwrap();
    let e = eigendecompose(&kn_matrix(&b, &g, &Exec::serial()).unwrap()).unwrap_err();
    assert!(matches!(e, Error::NotHermitian(_)));
    assert!(eigendecompose(&weyl_matrix(&b, &g, &Exec::serial()).unwrap()).is_ok());
}

#[test]
fn low_levels_are_stable_under_refinement() {
    let h = 1.0 / 16.0;
    let exec = Exec::serial();
    let coarse = eigendecompose(&kn_matrix(&pendulum(), &TorusGrid::new(1, 48, h).unwrap(), &exec).unwrap()).unwrap();
    let fine = eigendecompose(&kn_matrix(&pendulum(), &TorusGrid::new(1, 96, h).unwrap(), &exec).unwrap()).unwrap();
    let count = count_states(&coarse, 1.0);
    assert!(count > 10);
    for j in 0..count {
        assert!((coarse.eigenvalues()[j] - fine.eigenvalues()[j]).abs() < 1e-10);
    }
    let refined = count_states_refined(&pendulum(), &TorusGrid::new(1, 48, h).unwrap(), Quantization::KohnNirenberg, 1.0, &exec).unwrap();
    assert_eq!(refined.count, count);
    assert_eq!(refined.refined_band_limit, 96);
}

#[test]
fn unresolved_count_is_reported() {
    let g = TorusGrid::new(1, 8, 1.0 / 64.0).unwrap();
    let e = count_states_refined(&pendulum(), &g, Quantization::KohnNirenberg, 1.0, &Exec::serial()).unwrap_err();
    assert!(matches!(e, Error::RefinementUnstable { .. }), "{e:?}");
}

/// `∫_0^{2π} 2√(2(E − 1 + cos x))_+ dx` by composite Simpson.
fn pendulum_volume(energy: f64) -> f64 {
    let m = 200_000;
    let f = |x: f64| 2.0 * (2.0 * (energy - 1.0 + x.cos())).max(0.0).sqrt();
    let step = 2.0 * PI / m as f64;
    let mut s = f(0.0) + f(2.0 * PI);
    for i in 1..m {
        s += f(i as f64 * step) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * step / 3.0
}

#[test]
fn monte_carlo_volume_matches_quadrature() {
    let exec = Exec::with_workers(3).unwrap();
    for energy in [0.5, 1.0, 2.5] {
        let v = sublevel_volume(&pendulum(), energy, 400_000, 7, &exec).unwrap();
        let reference = pendulum_volume(energy);
        assert!((v.volume - reference).abs() <= 4.0 * v.stderr + 1e-3, "E={energy}: {v:?} vs {reference}");
    }
    assert!((pendulum_volume(1.0) - 6.777_704_678_351_829).abs() < 1e-3);
    // Free symbol: exact area 2π·2√(2E).
    let v = sublevel_volume(&Symbol::free(1).unwrap(), 2.0, 400_000, 3, &exec).unwrap();
    assert!((v.volume - 2.0 * PI * 4.0).abs() <= 4.0 * v.stderr);
}

#[test]
fn monte_carlo_is_reproducible_across_workers() {
    let a = sublevel_volume(&pendulum(), 1.0, 300_000, 11, &Exec::with_workers(1).unwrap()).unwrap();
    let b = sublevel_volume(&pendulum(), 1.0, 300_000, 11, &Exec::with_workers(6).unwrap()).unwrap();
    assert_eq!(a, b);
    let c = sublevel_volume(&pendulum(), 1.0, 300_000, 12, &Exec::serial()).unwrap();
    assert_ne!(a.volume, c.volume);
    let empty = sublevel_volume(&pendulum(), -0.5, 10_000, 1, &Exec::serial()).unwrap();
    assert_eq!(empty.volume, 0.0);
}

#[test]
fn bounding_and_classical_radii() {
    // C⟨ρ⟩² = 1 gives ρ = √3 < c = 3, so c wins.
    let r = bounding_radius(&pendulum(), 1.0).unwrap();
    assert!((r - 3.0).abs() < 1e-6);
    assert!((classical_radius(&pendulum(), 1.0).unwrap() - 2f64.sqrt()).abs() < 1e-9);
    assert!((classical_radius(&Symbol::free(2).unwrap(), 0.5).unwrap() - 1.0).abs() < 1e-9);
    // Without ellipticity constants the shell scan still terminates.
    let raw = Symbol::from_fn(1, 2.0, 0, |_, xi| xi[0] * xi[0]).unwrap();
    assert!(bounding_radius(&raw, 9.0).unwrap() > 3.0);
}

#[test]
fn weyl_law_holds_at_small_h() {
    let h = 1.0 / 32.0;
    let g = TorusGrid::new(1, 64, h).unwrap();
    let dec = eigendecompose(&quantize(&pendulum(), &g, Quantization::Weyl, &Exec::serial()).unwrap()).unwrap();
    let count = count_states(&dec, 1.0) as f64;
    let weyl = pendulum_volume(1.0) / (2.0 * PI * h);
    assert!((count / weyl - 1.0).abs() < 0.15, "{count} vs {weyl}");
}

#[test]
fn localization_radii_certify_each_eigenfunction() {
    let h = 1.0 / 16.0;
    let tol = 1e-8;
    let exec = Exec::serial();
    let g = TorusGrid::new(1, 48, h).unwrap();
    let dec = eigendecompose(&kn_matrix(&pendulum(), &g, &exec).unwrap()).unwrap();
    let mut prev = 0.0;
    for energy in [0.3, 0.8, 1.5] {
        let report = localization_radius(&dec, energy, tol, &exec).unwrap();
        assert_eq!(report.rows.len(), count_states(&dec, energy));
        assert!(report.radius >= prev);
        prev = report.radius;
        for row in &report.rows {
            let psi = dec.eigenfunction(row.index).unwrap();
            assert!(reconstruct_error(&psi, row.radius, &exec).unwrap() <= tol);
            assert!(reconstruct_error(&psi, row.radius - h, &exec).unwrap() > tol);
        }
        let worst = dec.eigenfunction(report.rows.len() - 1).unwrap();
        assert!(husimi_mass_outside(&worst, report.radius, &exec).unwrap() <= 10.0 * tol);
        // The classical region sits inside the certified radius.
        assert!(report.radius >= classical_radius(&pendulum(), energy).unwrap());
    }
    let below = localization_radius(&dec, -1.0, tol, &exec).unwrap();
    assert!(below.rows.is_empty());
    assert_eq!(below.radius, 0.0);
}

#[test]
fn cache_round_trip() {
    let g = TorusGrid::new(1, 12, 0.25).unwrap();
    let spec = SymbolSpec::builtin("pendulum", 1).unwrap();
    let a = kn_matrix(&spec.build().unwrap(), &g, &Exec::serial()).unwrap();
    let dec = eigendecompose(&a).unwrap();
    let hash = cache::symbol_hash(&spec, Quantization::KohnNirenberg).unwrap();
    assert_ne!(hash, cache::symbol_hash(&spec, Quantization::Weyl).unwrap());

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("eigen.tcs");
    assert!(cache::read(&path, &a, hash).unwrap().is_none());
    cache::write(&path, &dec, hash).unwrap();
    let back = cache::read(&path, &a, hash).unwrap().unwrap();
    assert_eq!(back.eigenvalues(), dec.eigenvalues());
    assert_eq!(back.vectors(), dec.vectors());
    assert!(cache::read(&path, &a, hash ^ 1).unwrap().is_none());

    let other = kn_matrix(&spec.build().unwrap(), &TorusGrid::new(1, 13, 0.25).unwrap(), &Exec::serial()).unwrap();
    assert!(cache::read(&path, &other, hash).unwrap().is_none());
    std::fs::write(&path, b"XXXX").unwrap();
    assert!(cache::read(&path, &a, hash).is_err());
}
