//! Kohn–Nirenberg and Weyl quantization of symbols as dense matrices in the
//! retained Fourier basis.
//!
//! In Fourier coordinates `Op_h(b) e^{iμ·y} = b(y, hμ) e^{iμ·y}`, so the
//! Kohn–Nirenberg entry is `A[k, μ] = b̂(k − μ, hμ)`. The Weyl entry samples
//! the momentum at the frequency midpoint, `A[k, μ] = b̂(k − μ, h(k + μ)/2)`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::grid::{FourierField, TorusGrid, MAX_DIM};
use crate::symbol::Symbol;

/// Entrywise tolerance for `max |A − A†|` below which a matrix counts as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantization {
    KohnNirenberg,
    Weyl,
}

impl Quantization {
    pub fn name(self) -> &'static str {
        match self {
            Quantization::KohnNirenberg => "kohn_nirenberg",
            Quantization::Weyl => "weyl",
        }
    }
}

#[derive(Clone, Debug)]
pub struct OperatorMatrix {
    grid: TorusGrid,
    entries: DMatrix<Complex64>,
    hermitian: bool,
    kind: Quantization,
}

impl OperatorMatrix {
    /// Wraps an explicit matrix; the Hermitian flag is derived from the entries.
    pub fn from_entries(grid: &TorusGrid, entries: DMatrix<Complex64>, kind: Quantization) -> Result<Self> {
        let d = grid.num_modes();
        if entries.nrows() != d || entries.ncols() != d {
            return Err(Error::SizeMismatch {
                expected: d * d,
                actual: entries.nrows() * entries.ncols(),
            });
        }
        if entries.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::NonFinite("operator matrix entry".into()));
        }
        let hermitian = hermitian_deviation(&entries) <= HERMITIAN_TOL;
        Ok(Self {
            grid: grid.clone(),
            entries,
            hermitian,
            kind,
        })
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn kind(&self) -> Quantization {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    /// `max |A − A†|` over all entries.
    pub fn hermitian_deviation(&self) -> f64 {
        hermitian_deviation(&self.entries)
    }

    /// Matrix action on Fourier coefficients.
    pub fn apply(&self, psi: &FourierField) -> Result<FourierField> {
        self.grid.check_same(psi.grid())?;
        let v = nalgebra::DVector::from_column_slice(psi.coeffs());
        let out = &self.entries * v;
        FourierField::new(&self.grid, out.as_slice().to_vec())
    }

    /// `⟨ψ, Aψ⟩` with the crate's inner product.
    pub fn expectation(&self, psi: &FourierField) -> Result<Complex64> {
        let a_psi = self.apply(psi)?;
        crate::grid::inner_product(psi, &a_psi)
    }
}

fn hermitian_deviation(a: &DMatrix<Complex64>) -> f64 {
    let d = a.nrows();
    let mut worst = 0.0f64;
    for j in 0..d {
        for i in j..d {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

/// `b̂(m, ξ)` for every `m` with `|m|_∞ ≤ degree`, indexed lexicographically.
/// Computed exactly from the terms, or by one uniform quadrature pass.
struct CoeffBlock {
    n: usize,
    degree: usize,
    nodes: Vec<[f64; MAX_DIM]>,
    weights: Vec<Vec<Complex64>>,
}

impl CoeffBlock {
    fn new(n: usize, degree: usize) -> Self {
        let side = 2 * degree + 1;
        let l = 2 * degree + 2;
        let count = l.pow(n as u32);
        let nodes: Vec<[f64; MAX_DIM]> = (0..count)
            .map(|flat| {
                let mut y = [0.0; MAX_DIM];
                let mut rem = flat;
                for v in y[..n].iter_mut().rev() {
                    *v = 2.0 * PI * (rem % l) as f64 / l as f64;
                    rem /= l;
                }
                y
            })
            .collect();
        let scale = 1.0 / count as f64;
        let weights = (0..side.pow(n as u32))
            .map(|mi| {
                let m = Self::mode_of(n, degree, mi);
                nodes
                    .iter()
                    .map(|y| {
                        let phase: f64 = m.iter().zip(y).map(|(&a, &b)| a as f64 * b).sum();
                        Complex64::from_polar(scale, -phase)
                    })
                    .collect()
            })
            .collect();
        Self {
            n,
            degree,
            nodes,
            weights,
        }
    }

    fn mode_of(n: usize, degree: usize, index: usize) -> [i64; MAX_DIM] {
        let side = 2 * degree + 1;
        let mut out = [0i64; MAX_DIM];
        let mut rem = index;
        for v in out[..n].iter_mut().rev() {
            *v = (rem % side) as i64 - degree as i64;
            rem /= side;
        }
        out
    }

    fn index_of(&self, m: &[i64]) -> Option<usize> {
        let side = 2 * self.degree as i64 + 1;
        let mut idx = 0i64;
        for &mj in m {
            if mj.unsigned_abs() as usize > self.degree {
                return None;
            }
            idx = idx * side + mj + self.degree as i64;
        }
        Some(idx as usize)
    }

    fn coeffs(&self, b: &Symbol, xi: &[f64]) -> Result<Vec<Complex64>> {
        if b.is_separable() {
            let out: Vec<Complex64> = (0..self.weights.len())
                .map(|mi| b.term_coeff(&Self::mode_of(self.n, self.degree, mi)[..self.n], xi))
                .collect();
            if out.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
                return Err(Error::NonFinite(format!("symbol coefficient at xi = {xi:?}")));
            }
            return Ok(out);
        }
        let samples: Vec<f64> = self.nodes.iter().map(|y| b.eval(&y[..self.n], xi)).collect();
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("symbol value at xi = {xi:?}")));
        }
        Ok(self
            .weights
            .iter()
            .map(|w| w.iter().zip(&samples).map(|(wi, s)| wi * s).sum())
            .collect())
    }
}

fn check_compatible(b: &Symbol, grid: &TorusGrid) -> Result<()> {
    if b.dim() != grid.dim() {
        return Err(Error::GridMismatch);
    }
    if b.x_degree() > grid.band_limit() {
        return Err(Error::BandLimit {
            band_limit: grid.band_limit(),
            detail: format!(
                "symbol has x-degree {} above the band limit; raise K to at least that",
                b.x_degree()
            ),
        });
    }
    Ok(())
}

fn assemble(b: &Symbol, grid: &TorusGrid, kind: Quantization, exec: &Exec) -> Result<OperatorMatrix> {
    check_compatible(b, grid)?;
    let n = grid.dim();
    let d = grid.num_modes();
    let h = grid.h();
    let degree = b.x_degree();
    let block = CoeffBlock::new(n, degree);

    let columns: Vec<Result<Vec<Complex64>>> = exec.map_range(d, |col| {
        let mu = grid.mode(col);
        let mut column = vec![Complex64::new(0.0, 0.0); d];
        match kind {
            Quantization::KohnNirenberg => {
                let xi: Vec<f64> = mu[..n].iter().map(|&v| h * v as f64).collect();
                let coeffs = block.coeffs(b, &xi)?;
                for (row, slot) in column.iter_mut().enumerate() {
                    let k = grid.mode(row);
                    let m: Vec<i64> = (0..n).map(|j| k[j] - mu[j]).collect();
                    if let Some(mi) = block.index_of(&m) {
                        *slot = coeffs[mi];
                    }
                }
            }
            Quantization::Weyl => {
                for (row, slot) in column.iter_mut().enumerate() {
                    let k = grid.mode(row);
                    let m: Vec<i64> = (0..n).map(|j| k[j] - mu[j]).collect();
                    if m.iter().any(|v| v.unsigned_abs() as usize > degree) {
                        continue;
                    }
                    let xi: Vec<f64> = (0..n).map(|j| 0.5 * h * (k[j] + mu[j]) as f64).collect();
                    *slot = if b.is_separable() {
                        b.x_coeff(&m, &xi)?
                    } else {
                        let coeffs = block.coeffs(b, &xi)?;
                        coeffs[block.index_of(&m).unwrap_or(0)]
                    };
                }
            }
        }
        Ok(column)
    });

    let mut entries = DMatrix::<Complex64>::zeros(d, d);
    for (col, values) in columns.into_iter().enumerate() {
        let values = values?;
        entries.column_mut(col).copy_from_slice(&values);
    }
    OperatorMatrix::from_entries(grid, entries, kind)
}

/// Kohn–Nirenberg matrix `A[k, μ] = b̂(k − μ, hμ)`.
pub fn kn_matrix(b: &Symbol, grid: &TorusGrid, exec: &Exec) -> Result<OperatorMatrix> {
    assemble(b, grid, Quantization::KohnNirenberg, exec)
}

/// Weyl matrix `A[k, μ] = b̂(k − μ, h(k + μ)/2)`.
pub fn weyl_matrix(b: &Symbol, grid: &TorusGrid, exec: &Exec) -> Result<OperatorMatrix> {
    assemble(b, grid, Quantization::Weyl, exec)
}

pub fn quantize(b: &Symbol, grid: &TorusGrid, kind: Quantization, exec: &Exec) -> Result<OperatorMatrix> {
    assemble(b, grid, kind, exec)
}

/// Applies the Kohn–Nirenberg quantization of a separable symbol without
/// forming the matrix: each term multiplies `ψ̂(κ)` by `c(hκ)`, then by `a(x)`
/// on an alias-free padded grid. The result is projected onto the retained band,
/// matching the dense matrix product.
pub fn apply_kn(b: &Symbol, psi: &FourierField) -> Result<FourierField> {
    let grid = psi.grid();
    if !b.is_separable() {
        return Err(Error::Symbol("fast application needs a separable symbol".into()));
    }
    check_compatible(b, grid)?;
    let n = grid.dim();
    let h = grid.h();
    let k = grid.band_limit();
    let samples = (2 * k + b.x_degree() + 2).next_power_of_two();
    let padded = TorusGrid::with_samples(n, k, samples, h)?;
    let fft = padded.fft();

    let xs: Vec<[f64; MAX_DIM]> = (0..padded.num_nodes()).map(|i| padded.node(i)).collect();
    let xi: Vec<Vec<f64>> = grid
        .modes()
        .map(|m| m[..n].iter().map(|&v| h * v as f64).collect())
        .collect();

    let mut total = vec![Complex64::new(0.0, 0.0); grid.num_modes()];
    for term in b.terms() {
        let scaled: Vec<Complex64> = psi
            .coeffs()
            .iter()
            .zip(&xi)
            .map(|(c, x)| c * term.xi().eval(x))
            .collect();
        let mut buf = padded.embed(&scaled);
        fft.inverse(&mut buf);
        for (v, x) in buf.iter_mut().zip(&xs) {
            *v *= term.eval_x(&x[..n]);
        }
        fft.forward(&mut buf);
        for (t, c) in total.iter_mut().zip(padded.extract(&buf)) {
            *t += c;
        }
    }
    FourierField::new(grid, total)
}

/// Relative slack when comparing the worst ratio with `C`; builtin
/// constants are attained exactly at `|ξ| = c`.
const ELLIPTICITY_SLACK: f64 = 1e-12;

/// Sampling plan for [`ellipticity_check`].
#[derive(Clone, Debug, PartialEq)]
pub struct EllipticityProbe {
    /// Uniform samples per position axis.
    pub x_samples: usize,
    /// Momentum shells between `c` and `max_radius`.
    pub shells: usize,
    pub max_radius: f64,
    /// Directions per shell (ignored for `n = 1`, which uses `±1`).
    pub directions: usize,
}

impl EllipticityProbe {
    pub fn for_radius(c: f64) -> Self {
        Self {
            x_samples: 16,
            shells: 32,
            max_radius: (4.0 * c).max(c + 10.0),
            directions: 24,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EllipticityReport {
    pub passed: bool,
    pub constant: f64,
    pub radius: f64,
    pub order: f64,
    /// Smallest `|b| / ⟨ξ⟩^m` seen on the probe.
    pub worst_ratio: f64,
    pub worst_x: Vec<f64>,
    pub worst_xi: Vec<f64>,
}

/// Unit directions covering `S^{n-1}`.
fn directions(n: usize, count: usize) -> Vec<Vec<f64>> {
    match n {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..count.max(4))
            .map(|i| {
                let t = 2.0 * PI * i as f64 / count.max(4) as f64;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        _ => {
            // Fibonacci sphere.
            let count = count.max(8);
            let golden = PI * (3.0 - 5f64.sqrt());
            (0..count)
                .map(|i| {
                    let z = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
                    let r = (1.0 - z * z).sqrt();
                    let t = golden * i as f64;
                    vec![r * t.cos(), r * t.sin(), z]
                })
                .collect()
        }
    }
}

/// Evaluates `|b| / ⟨ξ⟩^m` over the probe restricted to `|ξ| ≥ c` and
/// compares the worst ratio against `C`.
pub fn ellipticity_check(b: &Symbol, probe: &EllipticityProbe) -> Result<EllipticityReport> {
    let e = b
        .ellipticity()
        .ok_or_else(|| Error::Symbol("symbol carries no ellipticity constants".into()))?;
    let n = b.dim();
    let xs = probe.x_samples.max(1);
    let shells = probe.shells.max(1);
    let dirs = directions(n, probe.directions);
    let max_r = probe.max_radius.max(e.radius);
    let mut worst = f64::INFINITY;
    let mut worst_x = vec![0.0; n];
    let mut worst_xi = vec![0.0; n];
    let mut x = vec![0.0; n];
    for flat in 0..xs.pow(n as u32) {
        let mut rem = flat;
        for v in x.iter_mut().rev() {
            *v = 2.0 * PI * (rem % xs) as f64 / xs as f64;
            rem /= xs;
        }
        for s in 0..=shells {
            let r = e.radius + (max_r - e.radius) * s as f64 / shells as f64;
            for d in &dirs {
                let xi: Vec<f64> = d.iter().map(|v| v * r).collect();
                let bracket = (1.0 + r * r).sqrt();
                let ratio = b.eval(&x, &xi).abs() / bracket.powf(b.order());
                if !(ratio >= worst) {
                    worst = ratio;
                    worst_x.clone_from(&x);
                    worst_xi = xi;
                }
            }
        }
    }
    Ok(EllipticityReport {
        passed: worst >= e.constant * (1.0 - ELLIPTICITY_SLACK),
        constant: e.constant,
        radius: e.radius,
        order: b.order(),
        worst_ratio: worst,
        worst_x,
        worst_xi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbol::{SymbolTerm, XiExpr};

    fn cos_x_plus_free() -> Symbol {
        let kinetic = SymbolTerm::momentum_only(XiExpr::parse("0.5*|xi|^2").unwrap());
        let cos = SymbolTerm::new(
            vec![(vec![1], Complex64::new(0.5, 0.0)), (vec![-1], Complex64::new(0.5, 0.0))],
            XiExpr::Const(1.0),
        )
        .unwrap();
        Symbol::from_terms(1, 2.0, vec![kinetic, cos]).unwrap()
    }

    fn xi_cos_x() -> Symbol {
        let t = SymbolTerm::new(
            vec![(vec![1], Complex64::new(0.5, 0.0)), (vec![-1], Complex64::new(0.5, 0.0))],
            XiExpr::Component(0),
        )
        .unwrap();
        Symbol::from_terms(1, 1.0, vec![t]).unwrap()
    }

    fn at(a: &OperatorMatrix, k: i64, mu: i64) -> Complex64 {
        let g = a.grid();
        a.entries()[(g.mode_index(&[k]).unwrap(), g.mode_index(&[mu]).unwrap())]
    }

    #[test]
    fn kn_entries_free_plus_cosine() {
        let g = TorusGrid::new(1, 8, 0.1).unwrap();
        let a = kn_matrix(&cos_x_plus_free(), &g, &Exec::serial()).unwrap();
        assert!((at(&a, 3, 3).re - 0.045).abs() < 1e-15);
        assert!((at(&a, 4, 3) - Complex64::new(0.5, 0.0)).norm() < 1e-15);
        assert_eq!(at(&a, 5, 3), Complex64::new(0.0, 0.0));
        assert!(a.is_hermitian());
    }

    #[test]
    fn kn_is_not_hermitian_for_mixed_symbol() {
        let g = TorusGrid::new(1, 4, 1.0).unwrap();
        let a = kn_matrix(&xi_cos_x(), &g, &Exec::serial()).unwrap();
        assert_eq!(at(&a, 1, 0), Complex64::new(0.0, 0.0));
        assert!((at(&a, 0, 1) - Complex64::new(0.5, 0.0)).norm() < 1e-15);
        assert!(!a.is_hermitian());

        let w = weyl_matrix(&xi_cos_x(), &g, &Exec::serial()).unwrap();
        assert!((at(&w, 1, 0) - Complex64::new(0.25, 0.0)).norm() < 1e-15);
        assert!((at(&w, 0, 1) - at(&w, 1, 0).conj()).norm() < 1e-15);
        assert!(w.is_hermitian());
    }

    #[test]
    fn identity_symbol_gives_identity() {
        let g = TorusGrid::new(2, 2, 0.5).unwrap();
        let a = weyl_matrix(&Symbol::identity(2).unwrap(), &g, &Exec::serial()).unwrap();
        assert_eq!(a.entries(), &DMatrix::<Complex64>::identity(g.num_modes(), g.num_modes()));
    }

    #[test]
    fn band_limit_below_degree_rejected() {
        let t = SymbolTerm::new(vec![(vec![3], Complex64::new(1.0, 0.0)), (vec![-3], Complex64::new(1.0, 0.0))], XiExpr::Const(1.0)).unwrap();
        let b = Symbol::from_terms(1, 0.0, vec![t]).unwrap();
        let g = TorusGrid::new(1, 2, 0.5).unwrap();
        assert!(matches!(kn_matrix(&b, &g, &Exec::serial()), Err(Error::BandLimit { .. })));
    }

    #[test]
    fn apply_kn_simple_cases() {
        let g = TorusGrid::new(1, 6, 0.5).unwrap();
        let free = Symbol::free(1).unwrap();
        let e2 = FourierField::plane_wave(&g, &[2]).unwrap();
        let out = apply_kn(&free, &e2).unwrap();
        assert!((out.coeff(&[2]) - Complex64::new(0.5, 0.0)).norm() < 1e-14);

        let cos = Symbol::from_terms(
            1,
            0.0,
            vec![SymbolTerm::new(
                vec![(vec![1], Complex64::new(0.5, 0.0)), (vec![-1], Complex64::new(0.5, 0.0))],
                XiExpr::Const(1.0),
            )
            .unwrap()],
        )
        .unwrap();
        let one = FourierField::plane_wave(&g, &[0]).unwrap();
        let out = apply_kn(&cos, &one).unwrap();
        assert!((out.coeff(&[1]) - Complex64::new(0.5, 0.0)).norm() < 1e-15);
        assert!((out.coeff(&[-1]) - Complex64::new(0.5, 0.0)).norm() < 1e-15);
        assert!(out.coeff(&[0]).norm() < 1e-15);
    }

    #[test]
    fn raw_symbol_matches_separable_matrix() {
        let sep = cos_x_plus_free();
        let raw = Symbol::from_fn(1, 2.0, 1, |x, xi| 0.5 * xi[0] * xi[0] + x[0].cos()).unwrap();
        let g = TorusGrid::new(1, 5, 0.3).unwrap();
        for kind in [Quantization::KohnNirenberg, Quantization::Weyl] {
            let a = quantize(&sep, &g, kind, &Exec::serial()).unwrap();
            let b = quantize(&raw, &g, kind, &Exec::serial()).unwrap();
            let diff = (a.entries() - b.entries()).iter().map(|c| c.norm()).fold(0.0, f64::max);
            assert!(diff < 1e-14, "{kind:?}: {diff}");
        }
    }

    #[test]
    fn ellipticity_examples() {
        let p = Symbol::pendulum().unwrap();
        let r = ellipticity_check(&p, &EllipticityProbe::for_radius(3.0)).unwrap();
        assert!(r.passed);
        assert!(r.worst_ratio >= 0.45 - 1e-12);

        let xi = Symbol::from_terms(1, 1.0, vec![SymbolTerm::momentum_only(XiExpr::Component(0))])
            .unwrap();
        let r = ellipticity_check(&xi.clone().with_ellipticity(0.5, 1.0).unwrap(), &EllipticityProbe::for_radius(1.0)).unwrap();
        assert!(r.passed);
        let r = ellipticity_check(&xi.with_ellipticity(0.5, 0.0).unwrap(), &EllipticityProbe::for_radius(0.0)).unwrap();
        assert!(!r.passed);

        let cos = Symbol::from_fn(1, 0.0, 1, |x, _| x[0].cos()).unwrap().with_ellipticity(0.1, 0.0).unwrap();
        let r = ellipticity_check(&cos, &EllipticityProbe::for_radius(0.0)).unwrap();
        assert!(!r.passed);
        assert!(r.worst_ratio < 1e-15);
    }
}
