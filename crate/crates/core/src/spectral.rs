//! Eigenpairs of quantized symbols, state counting against phase-space
//! volume, and the localization radius of the low-lying eigenfunctions.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::fbi::truncation_radius;
use crate::grid::{FourierField, TorusGrid};
use crate::quantize::{quantize, OperatorMatrix, Quantization};
use crate::symbol::Symbol;

/// Eigenvalues closer than this (relative to `max(1, |E|)`) count as tied.
const TIE_REL: f64 = 1e-12;
/// Maximum allowed `max |V†V − I|` entry.
pub const ORTHONORMALITY_TOL: f64 = 1e-10;
/// Maximum allowed residual relative to the spectral norm.
pub const RESIDUAL_REL: f64 = 1e-9;
const EIGEN_MAX_ITER: usize = 10_000;

#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    grid: TorusGrid,
    kind: Quantization,
    eigenvalues: Vec<f64>,
    /// Column `j` holds the Fourier coefficients of the `L²`-normalized `ψ_j`.
    vectors: DMatrix<Complex64>,
    residuals: Vec<f64>,
}

impl EigenDecomposition {
    /// Reassembles a decomposition (for example from a cache file) and
    /// recomputes residuals against `a`.
    pub fn from_parts(a: &OperatorMatrix, eigenvalues: Vec<f64>, vectors: DMatrix<Complex64>) -> Result<Self> {
        let d = a.dim();
        if eigenvalues.len() != d || vectors.nrows() != d || vectors.ncols() != d {
            return Err(Error::SizeMismatch {
                expected: d,
                actual: eigenvalues.len(),
            });
        }
        let residuals = residuals(a, &eigenvalues, &vectors);
        let dec = Self {
            grid: a.grid().clone(),
            kind: a.kind(),
            eigenvalues,
            vectors,
            residuals,
        };
        dec.verify()?;
        Ok(dec)
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn kind(&self) -> Quantization {
        self.kind
    }

    pub fn band_limit(&self) -> usize {
        self.grid.band_limit()
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn vectors(&self) -> &DMatrix<Complex64> {
        &self.vectors
    }

    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    pub fn eigenfunction(&self, j: usize) -> Result<FourierField> {
        if j >= self.len() {
            return Err(Error::invalid(format!("eigen index {j} out of range 0..{}", self.len())));
        }
        FourierField::new(&self.grid, self.vectors.column(j).iter().copied().collect())
    }

    /// `max |⟨ψ_i, ψ_j⟩ − δ_ij|`.
    pub fn orthonormality_error(&self) -> f64 {
        let gram = self.vectors.adjoint() * &self.vectors * Complex64::new(self.grid.cell_volume(), 0.0);
        let d = gram.nrows();
        let mut worst = 0.0f64;
        for j in 0..d {
            for i in 0..d {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((gram[(i, j)] - target).norm());
            }
        }
        worst
    }

    pub fn spectral_norm(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0f64, |m, e| m.max(e.abs()))
    }

    fn verify(&self) -> Result<()> {
        let bound = RESIDUAL_REL * self.spectral_norm().max(1.0);
        if let Some((j, r)) = self.residuals.iter().enumerate().find(|(_, r)| !(**r <= bound)) {
            return Err(Error::Solver(format!("eigenpair {j} has residual {r:e} above {bound:e}")));
        }
        let ortho = self.orthonormality_error();
        if !(ortho <= ORTHONORMALITY_TOL) {
            return Err(Error::Solver(format!("eigenvectors deviate from orthonormality by {ortho:e}")));
        }
        Ok(())
    }
}

/// `‖A v_j − E_j v_j‖` in the crate's `L²` norm.
fn residuals(a: &OperatorMatrix, eigenvalues: &[f64], vectors: &DMatrix<Complex64>) -> Vec<f64> {
    let av = a.entries() * vectors;
    let scale = a.grid().cell_volume().sqrt();
    (0..eigenvalues.len())
        .map(|j| {
            let r: f64 = av
                .column(j)
                .iter()
                .zip(vectors.column(j).iter())
                .map(|(x, v)| (x - v * eigenvalues[j]).norm_sqr())
                .sum();
            scale * r.sqrt()
        })
        .collect()
}

/// First index whose modulus is within a relative 1e-8 of the column maximum.
fn dominant_index(col: &[Complex64]) -> usize {
    let max = col.iter().fold(0.0f64, |m, c| m.max(c.norm()));
    col.iter().position(|c| c.norm() >= (1.0 - 1e-8) * max).unwrap_or(0)
}

/// Full dense Hermitian eigendecomposition.
///
/// Eigenvalues ascend; ties are ordered by the index of the dominant Fourier
/// mode. Each eigenvector is scaled to unit `L²` norm and rotated so its
/// dominant coefficient is real and positive.
pub fn eigendecompose(a: &OperatorMatrix) -> Result<EigenDecomposition> {
    if !a.is_hermitian() {
        return Err(Error::NotHermitian(a.hermitian_deviation()));
    }
    let d = a.dim();
    let (values, raw_vectors): (DVector<f64>, DMatrix<Complex64>) =
        if a.entries().iter().all(|c| c.im == 0.0) {
            let real = a.entries().map(|c| c.re);
            let real = (&real + real.transpose()) * 0.5;
            let eig = SymmetricEigen::try_new(real, f64::EPSILON, EIGEN_MAX_ITER)
                .ok_or_else(|| Error::Solver("symmetric eigensolver did not converge".into()))?;
            (eig.eigenvalues, eig.eigenvectors.map(|v| Complex64::new(v, 0.0)))
        } else {
            let m = a.entries();
            let herm = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
            let eig = SymmetricEigen::try_new(herm, f64::EPSILON, EIGEN_MAX_ITER)
                .ok_or_else(|| Error::Solver("Hermitian eigensolver did not converge".into()))?;
            (eig.eigenvalues, eig.eigenvectors)
        };
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Solver("eigensolver produced non-finite eigenvalues".into()));
    }

    let dominant: Vec<usize> = (0..d)
        .map(|j| dominant_index(raw_vectors.column(j).as_slice()))
        .collect();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]).then(dominant[i].cmp(&dominant[j])));
    // Reorder runs of numerically tied eigenvalues by dominant mode alone.
    let mut start = 0;
    while start < d {
        let mut end = start + 1;
        while end < d {
            let (e0, e1) = (values[order[end - 1]], values[order[end]]);
            if (e1 - e0).abs() > TIE_REL * e0.abs().max(1.0) {
                break;
            }
            end += 1;
        }
        order[start..end].sort_by_key(|&i| dominant[i]);
        start = end;
    }

    let unit = a.grid().cell_volume().sqrt().recip();
    let mut vectors = DMatrix::<Complex64>::zeros(d, d);
    let mut eigenvalues = Vec::with_capacity(d);
    for (dst, &src) in order.iter().enumerate() {
        let col = raw_vectors.column(src);
        let norm = col.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let pivot = col[dominant[src]];
        let phase = if pivot.norm() > 0.0 { pivot.conj() / pivot.norm() } else { Complex64::new(1.0, 0.0) };
        let s = phase * (unit / norm);
        for (out, v) in vectors.column_mut(dst).iter_mut().zip(col.iter()) {
            *out = v * s;
        }
        // The pivot is real positive up to rounding; make it exactly so.
        vectors[(dominant[src], dst)].im = 0.0;
        eigenvalues.push(values[src]);
    }
    EigenDecomposition::from_parts(a, eigenvalues, vectors)
}

/// `#{j : E_j ≤ E}`.
pub fn count_states(dec: &EigenDecomposition, energy: f64) -> usize {
    dec.eigenvalues().partition_point(|&e| e <= energy)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RefinedCount {
    pub count: usize,
    pub band_limit: usize,
    pub refined_band_limit: usize,
}

/// Counts states on `grid` and on the grid with doubled band limit; the two
/// counts must agree.
pub fn count_states_refined(
    b: &Symbol,
    grid: &TorusGrid,
    kind: Quantization,
    energy: f64,
    exec: &Exec,
) -> Result<RefinedCount> {
    let coarse = count_states(&eigendecompose(&quantize(b, grid, kind, exec)?)?, energy);
    let fine_grid = grid.with_band_limit(2 * grid.band_limit())?;
    let fine = count_states(&eigendecompose(&quantize(b, &fine_grid, kind, exec)?)?, energy);
    if coarse != fine {
        return Err(Error::RefinementUnstable { coarse, fine });
    }
    Ok(RefinedCount {
        count: coarse,
        band_limit: grid.band_limit(),
        refined_band_limit: fine_grid.band_limit(),
    })
}

/// Monte Carlo estimate of `vol{(x, ξ) ∈ T^n × R^n : b(x, ξ) ≤ E}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SublevelVolume {
    pub energy: f64,
    pub volume: f64,
    pub stderr: f64,
    pub samples: u64,
    pub seed: u64,
    /// Half-width of the momentum box that was sampled.
    pub box_radius: f64,
}

const MC_CHUNK: u64 = 1 << 16;
const SCAN_CAP: f64 = 1e6;
const SCAN_X: usize = 32;
const SCAN_DIRECTIONS: usize = 24;

fn probe_positions(n: usize) -> Vec<Vec<f64>> {
    let per = if n == 1 { SCAN_X * 4 } else { SCAN_X };
    (0..per.pow(n as u32))
        .map(|flat| {
            let mut rem = flat;
            let mut x = vec![0.0; n];
            for v in x.iter_mut().rev() {
                *v = 2.0 * PI * (rem % per) as f64 / per as f64;
                rem /= per;
            }
            x
        })
        .collect()
}

fn probe_directions(n: usize) -> Vec<Vec<f64>> {
    match n {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..SCAN_DIRECTIONS)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / SCAN_DIRECTIONS as f64;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        _ => {
            let golden = PI * (3.0 - 5f64.sqrt());
            let count = 4 * SCAN_DIRECTIONS;
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

fn exceeds_on_shell(b: &Symbol, energy: f64, radius: f64, xs: &[Vec<f64>], dirs: &[Vec<f64>]) -> bool {
    xs.iter().all(|x| {
        dirs.iter().all(|d| {
            let xi: Vec<f64> = d.iter().map(|v| v * radius).collect();
            b.eval(x, &xi) > energy
        })
    })
}

/// Momentum radius beyond which `b > E`. Uses the ellipticity constants when
/// they bound the symbol away from `E`, otherwise scans shells outward.
pub fn bounding_radius(b: &Symbol, energy: f64) -> Result<f64> {
    let n = b.dim();
    let xs = probe_positions(n);
    let dirs = probe_directions(n);
    if let Some(e) = b.ellipticity() {
        if b.order() > 0.0 {
            // C⟨ρ⟩^m > |E| beyond ρ.
            let bracket = (energy.abs() / e.constant).powf(1.0 / b.order());
            let rho = (bracket * bracket - 1.0).max(0.0).sqrt();
            let r = e.radius.max(rho) * (1.0 + 1e-9) + 1e-9;
            if exceeds_on_shell(b, energy, r, &xs, &dirs) {
                return Ok(r);
            }
        }
    }
    let mut r = 1.0;
    while r <= SCAN_CAP {
        if [1.0, 1.5, 2.0, 4.0]
            .iter()
            .all(|s| exceeds_on_shell(b, energy, r * s, &xs, &dirs))
        {
            return Ok(r);
        }
        r *= 2.0;
    }
    Err(Error::Symbol(format!(
        "no momentum radius up to {SCAN_CAP:e} bounds the sublevel set at E = {energy}"
    )))
}

/// Monte Carlo volume over `[0, 2π]^n × [−R_box, R_box]^n`.
///
/// Samples are drawn in fixed chunks, chunk `c` from a ChaCha8 stream `c`
/// under `seed`, so the estimate is independent of the worker count.
pub fn sublevel_volume(b: &Symbol, energy: f64, samples: u64, seed: u64, exec: &Exec) -> Result<SublevelVolume> {
    if samples == 0 {
        return Err(Error::invalid("Monte Carlo sample count must be positive"));
    }
    if !energy.is_finite() {
        return Err(Error::NonFinite("energy".into()));
    }
    let n = b.dim();
    let r_box = bounding_radius(b, energy)?;
    let chunks = samples.div_ceil(MC_CHUNK);
    let hits: Vec<u64> = exec.map_range(chunks as usize, |c| {
        let c = c as u64;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(c);
        let count = MC_CHUNK.min(samples - c * MC_CHUNK);
        let mut x = vec![0.0; n];
        let mut xi = vec![0.0; n];
        let mut hit = 0u64;
        for _ in 0..count {
            for v in x.iter_mut() {
                *v = 2.0 * PI * rng.random::<f64>();
            }
            for v in xi.iter_mut() {
                *v = r_box * (2.0 * rng.random::<f64>() - 1.0);
            }
            if b.eval(&x, &xi) <= energy {
                hit += 1;
            }
        }
        hit
    });
    let hits: u64 = hits.iter().sum();
    let box_volume = (2.0 * PI * 2.0 * r_box).powi(n as i32);
    let p = hits as f64 / samples as f64;
    Ok(SublevelVolume {
        energy,
        volume: box_volume * p,
        stderr: box_volume * (p * (1.0 - p) / samples as f64).sqrt(),
        samples,
        seed,
        box_radius: r_box,
    })
}

/// Largest `|ξ|` reached by the sublevel set `{b ≤ E}` on the probe.
pub fn classical_radius(b: &Symbol, energy: f64) -> Result<f64> {
    let n = b.dim();
    let r_box = bounding_radius(b, energy)?;
    let xs = probe_positions(n);
    let dirs = probe_directions(n);
    const STEPS: usize = 512;
    let mut best = 0.0f64;
    let mut xi = vec![0.0; n];
    for x in &xs {
        for d in &dirs {
            let at = |r: f64, xi: &mut Vec<f64>| {
                for (v, dj) in xi.iter_mut().zip(d) {
                    *v = dj * r;
                }
                b.eval(x, xi) <= energy
            };
            let last = (0..=STEPS).rev().find(|&s| at(r_box * s as f64 / STEPS as f64, &mut xi));
            let Some(s) = last else { continue };
            let (mut lo, mut hi) = (r_box * s as f64 / STEPS as f64, r_box * (s + 1) as f64 / STEPS as f64);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if at(mid, &mut xi) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            best = best.max(lo);
        }
    }
    Ok(best)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LocalizationRow {
    pub index: usize,
    pub energy: f64,
    pub radius: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LocalizationReport {
    pub energy: f64,
    pub tol: f64,
    pub rows: Vec<LocalizationRow>,
    /// Maximum radius over the rows; zero when no eigenvalue lies below `E`.
    pub radius: f64,
}

/// Truncation radius of every eigenfunction with `E_j ≤ E`, and their maximum.
pub fn localization_radius(dec: &EigenDecomposition, energy: f64, tol: f64, exec: &Exec) -> Result<LocalizationReport> {
    let count = count_states(dec, energy);
    let radii: Vec<Result<f64>> = exec.map_range(count, |j| {
        let psi = dec.eigenfunction(j)?;
        truncation_radius(&psi, tol, &Exec::serial())
    });
    let mut rows = Vec::with_capacity(count);
    for (j, r) in radii.into_iter().enumerate() {
        rows.push(LocalizationRow {
            index: j,
            energy: dec.eigenvalues()[j],
            radius: r?,
        });
    }
    let radius = rows.iter().fold(0.0f64, |m, r| m.max(r.radius));
    Ok(LocalizationReport {
        energy,
        tol,
        rows,
        radius,
    })
}
