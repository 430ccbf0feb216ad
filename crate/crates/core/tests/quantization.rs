use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use coherent_torus::quantize::{
    apply_kn, ellipticity_check, kn_matrix, quantize, weyl_matrix, EllipticityProbe, Quantization,
};
use coherent_torus::symbol::{Symbol, SymbolSpec, SymbolTerm, XiExpr};
use coherent_torus::{Error, Exec, FourierField, TorusGrid};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `b(x, ξ) = p0 ξ² + p1 ξ + p2 + Σ_m (a_m cos mx + s_m sin mx)(q_m ξ + r_m)` in one dimension.
#[derive(Clone, Debug)]
struct Mixed {
    p: [f64; 3],
    harmonics: Vec<(f64, f64, f64, f64)>,
}

impl Mixed {
    fn eval(&self, x: f64, xi: f64) -> f64 {
        let mut v = self.p[0] * xi * xi + self.p[1] * xi + self.p[2];
        for (m, &(a, s, q, r)) in self.harmonics.iter().enumerate() {
            let m = (m + 1) as f64;
            v += (a * (m * x).cos() + s * (m * x).sin()) * (q * xi + r);
        }
        v
    }

    fn symbol(&self) -> Symbol {
        let mut terms = vec![SymbolTerm::momentum_only(
            XiExpr::parse(&format!("{}*xi^2 + {}*xi + {}", self.p[0], self.p[1], self.p[2])).unwrap(),
        )];
        for (m, &(a, s, q, r)) in self.harmonics.iter().enumerate() {
            let m = (m + 1) as i64;
            let coeffs = vec![(vec![m], c(a / 2.0, -s / 2.0)), (vec![-m], c(a / 2.0, s / 2.0))];
            terms.push(SymbolTerm::new(coeffs, XiExpr::parse(&format!("{q}*xi + {r}")).unwrap()).unwrap());
        }
        let this = self.clone();
        Symbol::from_terms(1, 2.0, terms)
            .unwrap()
            .with_raw(move |x, xi| this.eval(x[0], xi[0]))
            .unwrap()
    }

    fn pointwise(&self) -> Symbol {
        let this = self.clone();
        Symbol::from_fn(1, 2.0, self.harmonics.len(), move |x, xi| this.eval(x[0], xi[0])).unwrap()
    }
}

/// `(Op ψ)(x) = Σ_κ b(x, hκ) ψ̂(κ) e^{iκx}` sampled at `l` nodes, then
/// projected back onto the band by a discrete Fourier sum.
fn kn_oracle(b: impl Fn(f64, f64) -> f64, psi: &FourierField, l: usize) -> Vec<Complex64> {
    let g = psi.grid();
    let h = g.h();
    let xs: Vec<f64> = (0..l).map(|j| 2.0 * PI * j as f64 / l as f64).collect();
    let values: Vec<Complex64> = xs
        .iter()
        .map(|&x| {
            g.modes()
                .zip(psi.coeffs())
                .map(|(k, &a)| a * b(x, h * k[0] as f64) * Complex64::from_polar(1.0, k[0] as f64 * x))
                .sum()
        })
        .collect();
    g.modes()
        .map(|k| {
            xs.iter()
                .zip(&values)
                .map(|(&x, &v)| v * Complex64::from_polar(1.0 / l as f64, -(k[0] as f64) * x))
                .sum()
        })
        .collect()
}

/// `A[k, μ] = (2π)^{-1} ∫ b(x, h(k+μ)/2) e^{−i(k−μ)x} dx` by the trapezoid rule.
fn weyl_oracle(b: impl Fn(f64, f64) -> f64, g: &TorusGrid, l: usize) -> DMatrix<Complex64> {
    let h = g.h();
    let d = g.num_modes();
    DMatrix::from_fn(d, d, |row, col| {
        let k = g.mode(row)[0];
        let mu = g.mode(col)[0];
        let xi = 0.5 * h * (k + mu) as f64;
        (0..l)
            .map(|j| {
                let x = 2.0 * PI * j as f64 / l as f64;
                b(x, xi) * Complex64::from_polar(1.0 / l as f64, -((k - mu) as f64) * x)
            })
            .sum()
    })
}

fn max_diff(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn sample_mixed() -> Mixed {
    Mixed {
        p: [0.5, -0.3, 1.2],
        harmonics: vec![(0.8, -0.2, 0.6, 0.1), (-0.4, 0.7, -0.3, 0.9)],
    }
}

fn sample_state(g: &TorusGrid) -> FourierField {
    FourierField::from_fn(g, |k| c((0.3 * k[0] as f64).cos(), 0.2 * k[0] as f64 - 0.1)).unwrap()
}

#[test]
fn kn_matrix_matches_the_defining_sum() {
    let g = TorusGrid::new(1, 6, 0.25).unwrap();
    let mixed = sample_mixed();
    let psi = sample_state(&g);
    let oracle = kn_oracle(|x, xi| mixed.eval(x, xi), &psi, 64);
    for symbol in [mixed.symbol(), mixed.pointwise()] {
        let a = kn_matrix(&symbol, &g, &Exec::serial()).unwrap();
        let out = a.apply(&psi).unwrap();
        for (u, v) in out.coeffs().iter().zip(&oracle) {
            assert!((u - v).norm() < 1e-12, "{u} vs {v}");
        }
        assert!(!a.is_hermitian());
    }
}

#[test]
fn weyl_matrix_matches_the_defining_integral() {
    let g = TorusGrid::new(1, 6, 0.25).unwrap();
    let mixed = sample_mixed();
    let oracle = weyl_oracle(|x, xi| mixed.eval(x, xi), &g, 64);
    for symbol in [mixed.symbol(), mixed.pointwise()] {
        let a = weyl_matrix(&symbol, &g, &Exec::serial()).unwrap();
        assert!(max_diff(a.entries(), &oracle) < 1e-12);
        assert!(a.is_hermitian());
    }
}

#[test]
fn weyl_symmetrizes_momentum_times_potential() {
    // Op^w(ξ a(x)) = ½(a·hD + hD·a), while Op(ξ a(x)) = a·hD.
    let g = TorusGrid::new(1, 8, 0.5).unwrap();
    let exec = Exec::serial();
    let cosx = vec![(vec![1], c(0.5, 0.0)), (vec![-1], c(0.5, 0.0))];
    let mixed = Symbol::from_terms(1, 1.0, vec![SymbolTerm::new(cosx.clone(), XiExpr::parse("xi").unwrap()).unwrap()]).unwrap();
    let hd = kn_matrix(&Symbol::from_terms(1, 1.0, vec![SymbolTerm::momentum_only(XiExpr::parse("xi").unwrap())]).unwrap(), &g, &exec).unwrap();
    let mult = kn_matrix(&Symbol::from_terms(1, 0.0, vec![SymbolTerm::new(cosx, XiExpr::Const(1.0)).unwrap()]).unwrap(), &g, &exec).unwrap();
    let (hd, mult) = (hd.entries(), mult.entries());

    let kn = kn_matrix(&mixed, &g, &exec).unwrap();
    let w = weyl_matrix(&mixed, &g, &exec).unwrap();
    // Products are compared away from the band edge, where truncation cuts the inner sum.
    let inner = 1..g.num_modes() - 1;
    let prod = mult * hd;
    let sym = (mult * hd + hd * mult) * c(0.5, 0.0);
    for i in inner.clone() {
        for j in inner.clone() {
            assert!((kn.entries()[(i, j)] - prod[(i, j)]).norm() < 1e-14);
            assert!((w.entries()[(i, j)] - sym[(i, j)]).norm() < 1e-14);
        }
    }
}

#[test]
fn pointwise_two_dimensional_symbol() {
    let h = 0.5;
    let g = TorusGrid::new(2, 3, h).unwrap();
    let b = Symbol::from_fn(2, 2.0, 1, |x, xi| {
        0.5 * (xi[0] * xi[0] + xi[1] * xi[1]) + (x[0] - x[1]).cos() * xi[0] * xi[1] + x[1].sin()
    })
    .unwrap();
    let a = weyl_matrix(&b, &g, &Exec::serial()).unwrap();
    assert!(a.is_hermitian());
    // Single entry: k = (1, 0), μ = (0, 1); only the cos(x1 − x2) term contributes.
    let row = g.mode_index(&[1, 0]).unwrap();
    let col = g.mode_index(&[0, 1]).unwrap();
    let xi = [0.5 * h, 0.5 * h];
    assert!((a.entries()[(row, col)] - c(0.5 * xi[0] * xi[1], 0.0)).norm() < 1e-14);
}

#[test]
fn x_independent_symbols_are_diagonal() {
    let g = TorusGrid::new(2, 4, 0.25).unwrap();
    let b = Symbol::from_terms(2, 4.0, vec![SymbolTerm::momentum_only(XiExpr::parse("|xi|^2^2 + xi2 - 3").unwrap())]).unwrap();
    for kind in [Quantization::KohnNirenberg, Quantization::Weyl] {
        let a = quantize(&b, &g, kind, &Exec::serial()).unwrap();
        for (i, k) in g.modes().enumerate() {
            for j in 0..g.num_modes() {
                let expect = if i == j {
                    let xi = [0.25 * k[0] as f64, 0.25 * k[1] as f64];
                    (xi[0] * xi[0] + xi[1] * xi[1]).powi(2) + xi[1] - 3.0
                } else {
                    0.0
                };
                assert!((a.entries()[(i, j)] - c(expect, 0.0)).norm() < 1e-13);
            }
        }
    }
}

#[test]
fn band_limit_below_symbol_degree_is_rejected() {
    let b = Symbol::from_fn(1, 2.0, 5, |x, xi| xi[0] * xi[0] + (5.0 * x[0]).cos()).unwrap();
    let g = TorusGrid::new(1, 4, 0.5).unwrap();
    assert!(matches!(kn_matrix(&b, &g, &Exec::serial()), Err(Error::BandLimit { .. })));
    let g = TorusGrid::new(1, 5, 0.5).unwrap();
    assert!(kn_matrix(&b, &g, &Exec::serial()).is_ok());
}

#[test]
fn ellipticity_of_builtins() {
    for (name, n) in [("free", 1), ("free", 3), ("pendulum", 1)] {
        let b = SymbolSpec::builtin(name, n).unwrap().build().unwrap();
        let e = b.ellipticity().unwrap();
        let report = ellipticity_check(&b, &EllipticityProbe::for_radius(e.radius)).unwrap();
        assert!(report.passed, "{name}: {report:?}");
    }
    let vanishing = Symbol::from_terms(1, 2.0, vec![SymbolTerm::momentum_only(XiExpr::parse("0.5*xi^2 - 2").unwrap())])
        .unwrap()
        .with_ellipticity(0.25, 1.0)
        .unwrap();
    assert!(!ellipticity_check(&vanishing, &EllipticityProbe::for_radius(1.0)).unwrap().passed);
}

fn harmonic() -> impl Strategy<Value = (f64, f64, f64, f64)> {
    (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0)
}

fn mixed_strategy() -> impl Strategy<Value = Mixed> {
    (
        (0.1f64..1.0, -1.0f64..1.0, -1.0f64..1.0),
        prop::collection::vec(harmonic(), 0..=3),
    )
        .prop_map(|((a, b, c), harmonics)| Mixed { p: [a, b, c], harmonics })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn fast_application_matches_dense(mixed in mixed_strategy(), v in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 17)) {
        let g = TorusGrid::new(1, 8, 0.25).unwrap();
        let b = mixed.symbol();
        let psi = FourierField::new(&g, v.iter().map(|&(a, b)| c(a, b)).collect()).unwrap();
        let dense = kn_matrix(&b, &g, &Exec::serial()).unwrap().apply(&psi).unwrap();
        let fast = apply_kn(&b, &psi).unwrap();
        for (u, w) in dense.coeffs().iter().zip(fast.coeffs()) {
            prop_assert!((u - w).norm() < 1e-12);
        }
    }

    #[test]
    fn mechanical_hamiltonians_quantize_alike(
        n in 1usize..=2,
        v in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 4),
        mass in 0.2f64..2.0,
    ) {
        let g = TorusGrid::new(n, 5, 0.25).unwrap();
        let mut coeffs = vec![(vec![0; n], c(v[0].0, 0.0))];
        for (j, &(re, im)) in v[1..].iter().enumerate() {
            let mut m = vec![0; n];
            m[j % n] = (j / n + 1) as i64;
            let neg: Vec<i64> = m.iter().map(|x| -x).collect();
            coeffs.push((m, c(re, im)));
            coeffs.push((neg, c(re, -im)));
        }
        let b = Symbol::from_terms(n, 2.0, vec![
            SymbolTerm::momentum_only(XiExpr::parse(&format!("{}*|xi|^2", 0.5 / mass)).unwrap()),
            SymbolTerm::new(coeffs, XiExpr::Const(1.0)).unwrap(),
        ]).unwrap();
        let kn = kn_matrix(&b, &g, &Exec::serial()).unwrap();
        let w = weyl_matrix(&b, &g, &Exec::serial()).unwrap();
        prop_assert!(max_diff(kn.entries(), w.entries()) < 1e-13);
        prop_assert!(kn.is_hermitian());
    }

    #[test]
    fn weyl_quantization_of_real_symbols_is_hermitian(mixed in mixed_strategy(), h in 0.05f64..1.0) {
        let g = TorusGrid::new(1, 6, h).unwrap();
        let a = weyl_matrix(&mixed.symbol(), &g, &Exec::serial()).unwrap();
        prop_assert!(a.hermitian_deviation() <= 1e-12);
        prop_assert!(a.is_hermitian());
    }

    #[test]
    fn expectation_of_real_symbol_is_real(mixed in mixed_strategy(), k in -6i64..=6) {
        let g = TorusGrid::new(1, 6, 0.5).unwrap();
        let a = weyl_matrix(&mixed.symbol(), &g, &Exec::serial()).unwrap();
        let psi = FourierField::plane_wave(&g, &[k]).unwrap();
        let e = a.expectation(&psi).unwrap();
        prop_assert!(e.im.abs() < 1e-12);
        // ⟨e_k, Op^w e_k⟩ is the x-average of b at ξ = hk.
        let avg: f64 = (0..64).map(|j| mixed.eval(2.0 * PI * j as f64 / 64.0, 0.5 * k as f64)).sum::<f64>() / 64.0;
        let unit = psi.norm_sq();
        prop_assert!((e.re / unit - avg).abs() < 1e-12);
    }
}
