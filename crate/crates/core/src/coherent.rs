//! Gaussian coherent states on `R^n` and their periodizations on `T^n`.
//!
//! The euclidean state centred at `(x, ξ)` is
//! `φ(y) = α_h e^{(i/h)(x−y)·ξ} e^{−|x−y|²/(2h)}`. With this phase the
//! periodized state `Φ` concentrates at frequency `−ξ/h`; the sign is kept as
//! written and only radii `|ξ|` matter downstream.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{inverse_samples, periodize, FourierField, TorusGrid, MAX_DIM};

/// Gaussian weights below this fraction of the peak count as negligible.
pub const BAND_EDGE_REL: f64 = 1e-14;

/// A phase-space point `(x, ξ) ∈ T^n × hZ^n`, with `ξ = hα` stored as `α`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoherentPoint {
    n: usize,
    x: [f64; MAX_DIM],
    lattice: [i64; MAX_DIM],
    h: f64,
}

impl CoherentPoint {
    pub fn new(x: &[f64], lattice: &[i64], h: f64) -> Result<Self> {
        let n = x.len();
        if !(1..=MAX_DIM).contains(&n) || lattice.len() != n {
            return Err(Error::invalid("position and lattice index must share a dimension of 1..=3"));
        }
        check_h(h)?;
        let mut xs = [0.0; MAX_DIM];
        let mut al = [0i64; MAX_DIM];
        for j in 0..n {
            if !x[j].is_finite() {
                return Err(Error::NonFinite("coherent state position".into()));
            }
            xs[j] = x[j].rem_euclid(2.0 * PI);
            al[j] = lattice[j];
        }
        Ok(Self {
            n,
            x: xs,
            lattice: al,
            h,
        })
    }

    /// Builds a point from a real momentum, which must lie within 1e-12 of `hZ^n`.
    pub fn from_momentum(x: &[f64], xi: &[f64], h: f64) -> Result<Self> {
        check_h(h)?;
        if xi.len() != x.len() {
            return Err(Error::invalid("position and momentum dimensions differ"));
        }
        let mut lattice = Vec::with_capacity(xi.len());
        for &v in xi {
            let a = (v / h).round();
            if (v - a * h).abs() > 1e-12 {
                return Err(Error::invalid(format!("momentum {v} is not on the lattice hZ with h = {h}")));
            }
            lattice.push(a as i64);
        }
        Self::new(x, &lattice, h)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn x(&self) -> &[f64] {
        &self.x[..self.n]
    }

    pub fn lattice_index(&self) -> &[i64] {
        &self.lattice[..self.n]
    }

    pub fn xi(&self) -> Vec<f64> {
        self.lattice_index().iter().map(|&a| a as f64 * self.h).collect()
    }

    pub fn h(&self) -> f64 {
        self.h
    }
}

fn check_h(h: f64) -> Result<()> {
    if h.is_finite() && h > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("semiclassical parameter h = {h} must be positive")))
    }
}

/// The prefactor `α_h = 2^{−n/2} (πh)^{−3n/4}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormalizationConstant(f64);

impl NormalizationConstant {
    pub fn new(n: usize, h: f64) -> Result<Self> {
        check_h(h)?;
        let n = n as f64;
        Ok(Self(2f64.powf(-n / 2.0) * (PI * h).powf(-0.75 * n)))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

pub fn alpha(n: usize, h: f64) -> Result<f64> {
    NormalizationConstant::new(n, h).map(NormalizationConstant::value)
}

/// `α_h (2πh)^{n/2}`, the constant in front of every Gaussian coefficient.
pub(crate) fn gaussian_prefactor(n: usize, h: f64) -> f64 {
    let a = 2f64.powf(-(n as f64) / 2.0) * (PI * h).powf(-0.75 * n as f64);
    a * (2.0 * PI * h).powf(n as f64 / 2.0)
}

/// `e^{−|hk+ξ|²/(2h)} = e^{−h|k+α|²/2}` for `ξ = hα`.
pub fn gaussian_weight(h: f64, k: &[i64], lattice: &[i64]) -> f64 {
    let d2: f64 = k
        .iter()
        .zip(lattice)
        .map(|(&kj, &aj)| {
            let s = (kj + aj) as f64;
            s * s
        })
        .sum();
    (-0.5 * h * d2).exp()
}

/// Exact euclidean transform `∫ e^{−ik·y} φ_{(x,ξ)}(y) dy
/// = α_h (2πh)^{n/2} e^{−ik·x} e^{−|hk+ξ|²/(2h)}`.
pub fn euclid_gaussian_ft(k: &[i64], p: &CoherentPoint) -> Complex64 {
    let phase: f64 = k.iter().zip(p.x()).map(|(&kj, &xj)| kj as f64 * xj).sum();
    let amp = gaussian_prefactor(p.n, p.h) * gaussian_weight(p.h, k, p.lattice_index());
    Complex64::from_polar(amp, -phase)
}

/// Checks that the Gaussian envelope of `Φ_{(x,ξ)}` has decayed below
/// [`BAND_EDGE_REL`] of its peak at the edge of the retained band.
pub fn check_band(grid: &TorusGrid, lattice: &[i64]) -> Result<()> {
    let k = grid.band_limit() as i64;
    let h = grid.h();
    for (j, &a) in lattice.iter().enumerate() {
        let inside = k - a.abs();
        if inside < 0 {
            return Err(Error::BandLimit {
                band_limit: grid.band_limit(),
                detail: format!("peak frequency {} on axis {} lies outside the band", -a, j + 1),
            });
        }
        let edge = (-0.5 * h * (inside * inside) as f64).exp();
        if edge > BAND_EDGE_REL {
            return Err(Error::BandLimit {
                band_limit: grid.band_limit(),
                detail: format!(
                    "coherent state weight {edge:.3e} at the band edge on axis {} exceeds {BAND_EDGE_REL:e}",
                    j + 1
                ),
            });
        }
    }
    Ok(())
}

/// Fourier coefficients of the periodized state `Φ_{(x,ξ)} = Π φ_{(x,ξ)}`.
pub fn coherent_coeffs(p: &CoherentPoint, grid: &TorusGrid) -> Result<FourierField> {
    if p.h.to_bits() != grid.h().to_bits() || p.n != grid.dim() {
        return Err(Error::GridMismatch);
    }
    check_band(grid, p.lattice_index())?;
    periodize(grid, |k| euclid_gaussian_ft(k, p))
}

/// Position-space values of `Φ_{(x,ξ)}` at the grid nodes.
pub fn coherent_samples(p: &CoherentPoint, grid: &TorusGrid) -> Result<Vec<Complex64>> {
    coherent_coeffs(p, grid).map(|f| inverse_samples(&f))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_values() {
        // 2^{-1/2} π^{-3/4} and friends, evaluated independently.
        assert!((alpha(1, 1.0).unwrap() - 0.299_655_737_576_611_9).abs() < 1e-15);
        assert!((alpha(1, 0.5).unwrap() - 0.503_958_871_076_761_5).abs() < 1e-15);
        assert!((alpha(2, 1.0).unwrap() - 0.299_655_737_576_611_9f64.powi(2)).abs() < 1e-15);
        assert!(alpha(1, 0.0).is_err());
        assert!(alpha(1, -1.0).is_err());
    }

    #[test]
    fn lattice_membership() {
        let p = CoherentPoint::from_momentum(&[0.0], &[1.5], 0.5).unwrap();
        assert_eq!(p.lattice_index(), &[3]);
        assert!(CoherentPoint::from_momentum(&[0.0], &[0.3], 0.5).is_err());
    }

    #[test]
    fn position_is_reduced() {
        let p = CoherentPoint::new(&[2.0 * PI + 1.0], &[0], 1.0).unwrap();
        assert!((p.x()[0] - 1.0).abs() < 1e-15);
        let q = CoherentPoint::new(&[-1.0], &[0], 1.0).unwrap();
        assert!((q.x()[0] - (2.0 * PI - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn band_check_flags_truncated_states() {
        // e^{-K²/2} at h = 1: K = 9 clears 1e-14, K = 8 does not.
        let g = TorusGrid::new(1, 9, 1.0).unwrap();
        let p = CoherentPoint::new(&[0.0], &[0], 1.0).unwrap();
        assert!(coherent_coeffs(&p, &g).is_ok());
        let g = TorusGrid::new(1, 8, 1.0).unwrap();
        assert!(matches!(coherent_coeffs(&p, &g), Err(Error::BandLimit { .. })));
        let g = TorusGrid::new(1, 16, 1.0).unwrap();
        let far = CoherentPoint::new(&[0.0], &[20], 1.0).unwrap();
        assert!(matches!(coherent_coeffs(&far, &g), Err(Error::BandLimit { .. })));
    }

    #[test]
    fn h_mismatch_rejected() {
        let g = TorusGrid::new(1, 16, 0.5).unwrap();
        let p = CoherentPoint::new(&[0.0], &[0], 1.0).unwrap();
        assert!(matches!(coherent_coeffs(&p, &g), Err(Error::GridMismatch)));
    }
}
