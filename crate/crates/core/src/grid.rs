//! Discretization of the flat torus, toroidal Fourier transforms, inner
//! products and the periodization operator.
//!
//! Conventions used throughout the crate:
//!
//! * coefficients `ψ̂(k) = (2π)^{-n} ∫ e^{-ik·y} ψ(y) dy`, so `ψ(y) = Σ_k ψ̂(k) e^{ik·y}`;
//! * the euclidean transform is `(Fφ)(k) = ∫ e^{-ik·y} φ(y) dy` (no 2π factors);
//! * inner products are conjugate-linear in the first argument;
//! * retained modes `|k_j| ≤ K` are ordered lexicographically over
//!   `(k_1, …, k_n)`, each axis running `-K..=K`, `k_1` slowest. Grid nodes
//!   `x_m = 2πm/M` use the same row-major layout.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 3;

/// An integer frequency vector; components past the grid dimension are zero.
pub type Mode = [i64; MAX_DIM];

/// Multi-dimensional FFT over a cube of side `m` stored row-major.
#[derive(Clone)]
pub(crate) struct CubeFft {
    n: usize,
    m: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl CubeFft {
    pub(crate) fn new(n: usize, m: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            m,
            forward: planner.plan_fft_forward(m),
            inverse: planner.plan_fft_inverse(m),
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.m.pow(self.n as u32)
    }

    /// Unnormalized `Σ_m data[m] e^{-ik·x_m}` in place.
    pub(crate) fn forward(&self, data: &mut [Complex64]) {
        self.run(data, &self.forward);
    }

    /// Unnormalized `Σ_k data[k] e^{+ik·x_m}` in place.
    pub(crate) fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, &self.inverse);
    }

    fn run(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        debug_assert_eq!(data.len(), self.len());
        let m = self.m;
        // Last axis: contiguous rows.
        fft.process(data);
        if self.n == 1 {
            return;
        }
        let mut line = vec![Complex64::new(0.0, 0.0); m];
        for axis in 0..self.n - 1 {
            let stride = m.pow((self.n - 1 - axis) as u32);
            let block = stride * m;
            for base in (0..data.len()).step_by(block) {
                for offset in 0..stride {
                    let start = base + offset;
                    for (i, v) in line.iter_mut().enumerate() {
                        *v = data[start + i * stride];
                    }
                    fft.process(&mut line);
                    for (i, v) in line.iter().enumerate() {
                        data[start + i * stride] = *v;
                    }
                }
            }
        }
    }
}

/// Discretization of `T^n` with band limit `K`, `M` samples per axis and the
/// semiclassical parameter `h`.
#[derive(Clone)]
pub struct TorusGrid {
    n: usize,
    band_limit: usize,
    samples: usize,
    h: f64,
    integer_reciprocal: bool,
    fft: CubeFft,
    positions: Arc<[usize]>,
}

impl fmt::Debug for TorusGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TorusGrid")
            .field("n", &self.n)
            .field("band_limit", &self.band_limit)
            .field("samples", &self.samples)
            .field("h", &self.h)
            .field("integer_reciprocal", &self.integer_reciprocal)
            .finish()
    }
}

impl PartialEq for TorusGrid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
            && self.band_limit == other.band_limit
            && self.samples == other.samples
            && self.h.to_bits() == other.h.to_bits()
    }
}

impl TorusGrid {
    /// Default samples per axis: `2K + 2` rounded up to a power of two.
    pub fn default_samples(band_limit: usize) -> usize {
        (2 * band_limit + 2).next_power_of_two()
    }

    pub fn new(n: usize, band_limit: usize, h: f64) -> Result<Self> {
        Self::with_samples(n, band_limit, Self::default_samples(band_limit), h)
    }

    pub fn with_samples(n: usize, band_limit: usize, samples: usize, h: f64) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&n) {
            return Err(Error::invalid(format!("dimension n = {n} must be 1, 2 or 3")));
        }
        if band_limit < 1 {
            return Err(Error::invalid("band limit K must be at least 1"));
        }
        if samples < 2 * band_limit + 2 {
            return Err(Error::invalid(format!(
                "M = {samples} samples per axis is below 2K + 2 = {}",
                2 * band_limit + 2
            )));
        }
        if !h.is_finite() || h <= 0.0 || h > 1.0 {
            return Err(Error::invalid(format!("h = {h} must satisfy 0 < h <= 1")));
        }
        let recip = 1.0 / h;
        let integer_reciprocal = (recip - recip.round()).abs() <= 1e-12 * recip;

        let side = 2 * band_limit + 1;
        let count = side.pow(n as u32);
        let k = band_limit as i64;
        let positions: Vec<usize> = (0..count)
            .map(|idx| {
                let mut rem = idx;
                let mut pos = 0usize;
                let mut digits = [0usize; MAX_DIM];
                for d in (0..n).rev() {
                    digits[d] = rem % side;
                    rem /= side;
                }
                for &digit in digits.iter().take(n) {
                    let kj = digit as i64 - k;
                    pos = pos * samples + kj.rem_euclid(samples as i64) as usize;
                }
                pos
            })
            .collect();

        Ok(Self {
            n,
            band_limit,
            samples,
            h,
            integer_reciprocal,
            fft: CubeFft::new(n, samples),
            positions: positions.into(),
        })
    }

    /// Same `n`, `h`, with a new band limit; `M` grows if needed to stay valid.
    pub fn with_band_limit(&self, band_limit: usize) -> Result<Self> {
        let samples = self.samples.max(Self::default_samples(band_limit));
        Self::with_samples(self.n, band_limit, samples, self.h)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn band_limit(&self) -> usize {
        self.band_limit
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Whether `1/h` is an integer.
    pub fn integer_reciprocal(&self) -> bool {
        self.integer_reciprocal
    }

    /// Number of retained Fourier modes, `(2K+1)^n`.
    pub fn num_modes(&self) -> usize {
        self.positions.len()
    }

    /// Number of grid nodes, `M^n`.
    pub fn num_nodes(&self) -> usize {
        self.samples.pow(self.n as u32)
    }

    /// Quadrature weight of one node, `(2π/M)^n`.
    pub fn node_weight(&self) -> f64 {
        (2.0 * PI / self.samples as f64).powi(self.n as i32)
    }

    /// `(2π)^n`, the volume of the fundamental cell.
    pub fn cell_volume(&self) -> f64 {
        (2.0 * PI).powi(self.n as i32)
    }

    pub fn mode(&self, index: usize) -> Mode {
        let side = 2 * self.band_limit + 1;
        let mut out = [0i64; MAX_DIM];
        let mut rem = index;
        for d in (0..self.n).rev() {
            out[d] = (rem % side) as i64 - self.band_limit as i64;
            rem /= side;
        }
        out
    }

    pub fn mode_index(&self, k: &[i64]) -> Option<usize> {
        if k.len() != self.n {
            return None;
        }
        let side = 2 * self.band_limit as i64 + 1;
        let mut idx = 0i64;
        for &kj in k {
            if kj.unsigned_abs() as usize > self.band_limit {
                return None;
            }
            idx = idx * side + kj + self.band_limit as i64;
        }
        Some(idx as usize)
    }

    pub fn modes(&self) -> impl Iterator<Item = Mode> + '_ {
        (0..self.num_modes()).map(|i| self.mode(i))
    }

    pub fn node(&self, index: usize) -> [f64; MAX_DIM] {
        let mut out = [0.0; MAX_DIM];
        let mut rem = index;
        for d in (0..self.n).rev() {
            out[d] = 2.0 * PI * (rem % self.samples) as f64 / self.samples as f64;
            rem /= self.samples;
        }
        out
    }

    pub(crate) fn fft(&self) -> &CubeFft {
        &self.fft
    }

    pub(crate) fn check_same(&self, other: &TorusGrid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Scatters retained coefficients into a zeroed `M^n` transform buffer.
    pub(crate) fn embed(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.num_nodes()];
        for (c, &p) in coeffs.iter().zip(self.positions.iter()) {
            buf[p] = *c;
        }
        buf
    }

    /// Gathers retained coefficients from a forward-transformed buffer and
    /// applies the `M^{-n}` normalization.
    pub(crate) fn extract(&self, buf: &[Complex64]) -> Vec<Complex64> {
        let scale = 1.0 / self.num_nodes() as f64;
        self.positions.iter().map(|&p| buf[p] * scale).collect()
    }
}

/// A band-limited function on `T^n` stored by its toroidal Fourier coefficients.
#[derive(Clone, Debug)]
pub struct FourierField {
    grid: TorusGrid,
    coeffs: Vec<Complex64>,
}

impl FourierField {
    pub fn new(grid: &TorusGrid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.num_modes() {
            return Err(Error::SizeMismatch {
                expected: grid.num_modes(),
                actual: coeffs.len(),
            });
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::NonFinite("Fourier coefficient".into()));
        }
        Ok(Self {
            grid: grid.clone(),
            coeffs,
        })
    }

    pub fn zeros(grid: &TorusGrid) -> Self {
        Self {
            grid: grid.clone(),
            coeffs: vec![Complex64::new(0.0, 0.0); grid.num_modes()],
        }
    }

    /// The plane wave `e^{ik·y}`.
    pub fn plane_wave(grid: &TorusGrid, k: &[i64]) -> Result<Self> {
        let idx = grid
            .mode_index(k)
            .ok_or_else(|| Error::invalid(format!("mode {k:?} outside the retained band")))?;
        let mut f = Self::zeros(grid);
        f.coeffs[idx] = Complex64::new(1.0, 0.0);
        Ok(f)
    }

    pub fn from_fn(grid: &TorusGrid, f: impl Fn(&[i64]) -> Complex64) -> Result<Self> {
        let coeffs = grid.modes().map(|k| f(&k[..grid.dim()])).collect();
        Self::new(grid, coeffs)
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Coefficient at `k`; zero outside the retained band.
    pub fn coeff(&self, k: &[i64]) -> Complex64 {
        self.grid
            .mode_index(k)
            .map_or(Complex64::new(0.0, 0.0), |i| self.coeffs[i])
    }

    /// `‖ψ‖² = (2π)^n Σ_k |ψ̂(k)|²`.
    pub fn norm_sq(&self) -> f64 {
        self.grid.cell_volume() * self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn normalized(&self) -> Result<Self> {
        let norm = self.norm();
        if norm == 0.0 {
            return Err(Error::invalid("cannot normalize the zero function"));
        }
        Ok(self.scaled(Complex64::new(1.0 / norm, 0.0)))
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        Self {
            grid: self.grid.clone(),
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    /// `self + s·other`.
    pub fn axpy(&self, s: Complex64, other: &FourierField) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        Ok(Self {
            grid: self.grid.clone(),
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + s * b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &FourierField) -> Result<Self> {
        self.axpy(Complex64::new(-1.0, 0.0), other)
    }

    /// Largest `|k|_∞` carrying a nonzero coefficient.
    pub fn max_mode(&self) -> usize {
        let n = self.grid.dim();
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| c.norm_sqr() > 0.0)
            .map(|(i, _)| {
                let k = self.grid.mode(i);
                k[..n].iter().map(|v| v.unsigned_abs() as usize).max().unwrap_or(0)
            })
            .max()
            .unwrap_or(0)
    }

    /// Re-expresses the field on a grid with the same `n` and `h`; modes
    /// outside the target band must vanish.
    pub fn regrid(&self, target: &TorusGrid) -> Result<Self> {
        if target.dim() != self.grid.dim() || target.h().to_bits() != self.grid.h().to_bits() {
            return Err(Error::GridMismatch);
        }
        let mut out = FourierField::zeros(target);
        for (i, c) in self.coeffs.iter().enumerate() {
            let k = self.grid.mode(i);
            match target.mode_index(&k[..target.dim()]) {
                Some(j) => out.coeffs[j] = *c,
                None if c.norm_sqr() == 0.0 => {}
                None => {
                    return Err(Error::BandLimit {
                        band_limit: target.band_limit(),
                        detail: "field has energy outside the target band".into(),
                    })
                }
            }
        }
        Ok(out)
    }
}

/// Toroidal Fourier coefficients of grid samples (normalized discrete transform).
pub fn forward_coeffs(grid: &TorusGrid, samples: &[Complex64]) -> Result<FourierField> {
    if samples.len() != grid.num_nodes() {
        return Err(Error::SizeMismatch {
            expected: grid.num_nodes(),
            actual: samples.len(),
        });
    }
    let mut buf = samples.to_vec();
    grid.fft().forward(&mut buf);
    FourierField::new(grid, grid.extract(&buf))
}

/// Values `ψ(x_m) = Σ_k ψ̂(k) e^{ik·x_m}` at all grid nodes.
pub fn inverse_samples(field: &FourierField) -> Vec<Complex64> {
    let grid = field.grid();
    let mut buf = grid.embed(field.coeffs());
    grid.fft().inverse(&mut buf);
    buf
}

/// `⟨a, b⟩ = (2π)^n Σ_k â(k)* b̂(k)`.
pub fn inner_product(a: &FourierField, b: &FourierField) -> Result<Complex64> {
    a.grid().check_same(b.grid())?;
    let s: Complex64 = a
        .coeffs()
        .iter()
        .zip(b.coeffs())
        .map(|(x, y)| x.conj() * y)
        .sum();
    Ok(s * a.grid().cell_volume())
}

/// Grid quadrature `(2π/M)^n Σ_m a(x_m)* b(x_m)`.
pub fn quadrature_inner(grid: &TorusGrid, a: &[Complex64], b: &[Complex64]) -> Result<Complex64> {
    if a.len() != grid.num_nodes() || b.len() != grid.num_nodes() {
        return Err(Error::SizeMismatch {
            expected: grid.num_nodes(),
            actual: a.len().min(b.len()),
        });
    }
    let s: Complex64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
    Ok(s * grid.node_weight())
}

/// Periodization `Π φ = Σ_j φ(· − 2πj)` from the euclidean transform of `φ`:
/// the torus coefficients are `(2π)^{-n} (Fφ)(k)` restricted to `Z^n`.
pub fn periodize(
    grid: &TorusGrid,
    euclid_ft: impl Fn(&[i64]) -> Complex64,
) -> Result<FourierField> {
    let scale = grid.cell_volume().recip();
    let mut coeffs = Vec::with_capacity(grid.num_modes());
    for k in grid.modes() {
        let v = euclid_ft(&k[..grid.dim()]);
        if !v.re.is_finite() || !v.im.is_finite() {
            return Err(Error::NonFinite(format!("euclidean transform at k = {:?}", &k[..grid.dim()])));
        }
        coeffs.push(v * scale);
    }
    FourierField::new(grid, coeffs)
}
