//! Spectral propagation `U_h(t) = exp(−i t Op_h(b) / h)` of finite
//! eigenfunction superpositions and the time-invariance of their momentum
//! truncation radius.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::fbi::{reconstruct_error, truncation_radius};
use crate::grid::FourierField;
use crate::quantize::OperatorMatrix;
use crate::spectral::EigenDecomposition;

/// `φ = Σ_{j ∈ J} c_j ψ_j` over a set of eigenfunctions.
#[derive(Clone, Debug)]
pub struct Superposition<'a> {
    dec: &'a EigenDecomposition,
    indices: Vec<usize>,
    coeffs: Vec<Complex64>,
}

impl<'a> Superposition<'a> {
    /// Builds a superposition normalized to `Σ|c_j|² = 1`.
    pub fn new(dec: &'a EigenDecomposition, indices: Vec<usize>, coeffs: Vec<Complex64>) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::invalid("a superposition needs at least one eigenfunction"));
        }
        if indices.len() != coeffs.len() {
            return Err(Error::SizeMismatch {
                expected: indices.len(),
                actual: coeffs.len(),
            });
        }
        let mut seen = indices.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != indices.len() {
            return Err(Error::invalid("eigen indices in a superposition must be distinct"));
        }
        if let Some(&j) = indices.iter().find(|&&j| j >= dec.len()) {
            return Err(Error::invalid(format!("eigen index {j} out of range 0..{}", dec.len())));
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::NonFinite("superposition coefficient".into()));
        }
        let norm = coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::invalid("superposition coefficients are all zero"));
        }
        let coeffs = coeffs.iter().map(|c| c / norm).collect();
        Ok(Self { dec, indices, coeffs })
    }

    /// Equal weights over the `count` lowest eigenfunctions.
    pub fn lowest(dec: &'a EigenDecomposition, count: usize) -> Result<Self> {
        Self::new(dec, (0..count).collect(), vec![Complex64::new(1.0, 0.0); count])
    }

    /// Checks `J ≤ J_0 h^{−Q}`.
    pub fn check_budget(&self, j0: f64, q_exp: f64) -> Result<()> {
        let cap = j0 * self.dec.grid().h().powf(-q_exp);
        if !(self.len() as f64 <= cap) {
            return Err(Error::invalid(format!(
                "superposition of {} states exceeds the budget J_0 h^-Q = {cap}",
                self.len()
            )));
        }
        Ok(())
    }

    pub fn decomposition(&self) -> &EigenDecomposition {
        self.dec
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// The same eigenfunctions with coefficients `c_j e^{−iE_j t/h}`.
    pub fn evolved(&self, t: f64) -> Result<Superposition<'a>> {
        if !t.is_finite() {
            return Err(Error::NonFinite("time".into()));
        }
        let h = self.dec.grid().h();
        let coeffs = self
            .indices
            .iter()
            .zip(&self.coeffs)
            .map(|(&j, c)| c * Complex64::from_polar(1.0, -self.dec.eigenvalues()[j] * t / h))
            .collect();
        Ok(Self {
            dec: self.dec,
            indices: self.indices.clone(),
            coeffs,
        })
    }

    /// `Σ_j c_j ψ_j` as Fourier coefficients.
    pub fn field(&self) -> Result<FourierField> {
        let v = self.dec.vectors();
        let mut out = vec![Complex64::new(0.0, 0.0); v.nrows()];
        for (&j, c) in self.indices.iter().zip(&self.coeffs) {
            for (o, x) in out.iter_mut().zip(v.column(j).iter()) {
                *o += c * x;
            }
        }
        FourierField::new(self.dec.grid(), out)
    }
}

/// `U_h(t) φ = Σ_j c_j e^{−iE_j t/h} ψ_j`.
pub fn propagate(s: &Superposition, t: f64) -> Result<FourierField> {
    s.evolved(t)?.field()
}

/// Largest truncation radius among the constituent eigenfunctions.
pub fn ell_radius(s: &Superposition, tol: f64, exec: &Exec) -> Result<f64> {
    let radii: Vec<Result<f64>> = exec.map(s.indices(), |&j| {
        truncation_radius(&s.decomposition().eigenfunction(j)?, tol, &Exec::serial())
    });
    let mut worst = 0.0f64;
    for r in radii {
        worst = worst.max(r?);
    }
    Ok(worst)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InvarianceRow {
    pub t: f64,
    pub error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InvarianceReport {
    /// The radius used at every time, computed once from the superposition.
    pub radius: f64,
    pub tol: f64,
    pub rows: Vec<InvarianceRow>,
}

/// Reconstruction error of `U_h(t) φ` at a single, time-independent radius.
pub fn invariance_experiment(s: &Superposition, times: &[f64], tol: f64, exec: &Exec) -> Result<InvarianceReport> {
    if times.is_empty() {
        return Err(Error::invalid("the time list is empty"));
    }
    if let Some(t) = times.iter().find(|t| !t.is_finite()) {
        return Err(Error::NonFinite(format!("time {t}")));
    }
    let radius = ell_radius(s, tol, exec)?;
    invariance_at_radius(s, times, radius, tol, exec)
}

/// As [`invariance_experiment`] with an explicit radius.
pub fn invariance_at_radius(
    s: &Superposition,
    times: &[f64],
    radius: f64,
    tol: f64,
    exec: &Exec,
) -> Result<InvarianceReport> {
    let errors: Vec<Result<f64>> = exec.map(times, |&t| {
        reconstruct_error(&propagate(s, t)?, radius, &Exec::serial())
    });
    let mut rows = Vec::with_capacity(times.len());
    for (&t, e) in times.iter().zip(errors) {
        rows.push(InvarianceRow { t, error: e? });
    }
    Ok(InvarianceReport { radius, tol, rows })
}

/// `Re ⟨ψ, Aψ⟩`.
pub fn energy(a: &OperatorMatrix, psi: &FourierField) -> Result<f64> {
    Ok(a.expectation(psi)?.re)
}
