//! The toroidal FBI transform `T`, its adjoint `T*`, and the frame operator.
//!
//! `(Tψ)(x, ξ) = ⟨Φ_{(x,ξ)}, ψ⟩` is evaluated on the grid nodes for every
//! lattice momentum `ξ = hα` in the closed ball `|ξ| ≤ R`. The phase-space
//! measure gives each lattice point weight `h^n`, so the truncated frame
//! operator `T*_R T_R` is the Fourier multiplier
//!
//! ```text
//! m_R(k) = (h/π)^{n/2} Σ_{|hα| ≤ R} e^{−h|k+α|²}
//! ```
//!
//! which tends to `c̃(h) = (θ(h) √(h/π))^n`, `θ(h) = Σ_m e^{−hm²}`, as `R → ∞`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::coherent::{gaussian_prefactor, gaussian_weight};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::grid::{FourierField, TorusGrid, MAX_DIM};

/// Cap on the number of lattice points in a momentum ball.
pub const LATTICE_CAP: usize = 1 << 22;

/// Default tolerance for truncation radii.
pub const DEFAULT_TOL: f64 = 1e-8;

/// Lattice momenta `{α ∈ Z^n : |hα| ≤ R}`, lexicographically ordered.
#[derive(Clone, Debug, PartialEq)]
pub struct Lattice {
    n: usize,
    h: f64,
    radius: f64,
    points: Vec<[i64; MAX_DIM]>,
}

impl Lattice {
    pub fn ball(n: usize, h: f64, radius: f64) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&n) {
            return Err(Error::invalid(format!("dimension n = {n} must be 1, 2 or 3")));
        }
        if radius.is_nan() || radius < 0.0 {
            return Err(Error::invalid(format!("radius {radius} must be nonnegative")));
        }
        if !radius.is_finite() {
            return Err(Error::ResourceCap("an infinite radius cannot be enumerated".into()));
        }
        let scaled = radius / h;
        let reach = (scaled * (1.0 + 1e-12) + 1e-9).floor();
        if (2.0 * reach + 1.0).powi(n as i32) > (LATTICE_CAP as f64) * 4.0 {
            return Err(Error::ResourceCap(format!(
                "momentum ball of radius {radius} at h = {h} exceeds {LATTICE_CAP} lattice points"
            )));
        }
        let a = reach as i64;
        let r2 = scaled * scaled * (1.0 + 1e-12) + 1e-9;
        let side = (2 * a + 1) as usize;
        let mut points = Vec::new();
        for flat in 0..side.pow(n as u32) {
            let mut cur = [0i64; MAX_DIM];
            let mut rem = flat;
            for d in (0..n).rev() {
                cur[d] = (rem % side) as i64 - a;
                rem /= side;
            }
            let norm2: i64 = cur[..n].iter().map(|v| v * v).sum();
            if (norm2 as f64) <= r2 {
                points.push(cur);
            }
        }
        if points.len() > LATTICE_CAP {
            return Err(Error::ResourceCap(format!(
                "momentum ball holds {} lattice points, cap is {LATTICE_CAP}",
                points.len()
            )));
        }
        Ok(Self {
            n,
            h,
            radius,
            points,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn index(&self, i: usize) -> &[i64] {
        &self.points[i][..self.n]
    }

    /// The momentum `ξ = hα` of lattice point `i`.
    pub fn xi(&self, i: usize) -> Vec<f64> {
        self.index(i).iter().map(|&a| a as f64 * self.h).collect()
    }

    pub fn norm(&self, i: usize) -> f64 {
        self.h
            * self.index(i)
                .iter()
                .map(|&a| (a * a) as f64)
                .sum::<f64>()
                .sqrt()
    }

    /// Whether lattice point `i` lies in the closed ball of the given radius,
    /// using the same rounding as [`Lattice::ball`].
    pub fn within(&self, i: usize, radius: f64) -> bool {
        let scaled = radius / self.h;
        let r2 = scaled * scaled * (1.0 + 1e-12) + 1e-9;
        let norm2: i64 = self.index(i).iter().map(|v| v * v).sum();
        (norm2 as f64) <= r2
    }
}

/// Values on (grid node) × (lattice momentum); node index runs fastest.
#[derive(Clone, Debug)]
pub struct PhaseSpaceField<T = Complex64> {
    grid: TorusGrid,
    lattice: Lattice,
    values: Vec<T>,
}

impl<T: Copy> PhaseSpaceField<T> {
    pub fn new(grid: &TorusGrid, lattice: Lattice, values: Vec<T>) -> Result<Self> {
        if lattice.dim() != grid.dim() || lattice.h().to_bits() != grid.h().to_bits() {
            return Err(Error::GridMismatch);
        }
        let expected = lattice.len() * grid.num_nodes();
        if values.len() != expected {
            return Err(Error::SizeMismatch {
                expected,
                actual: values.len(),
            });
        }
        Ok(Self {
            grid: grid.clone(),
            lattice,
            values,
        })
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn radius(&self) -> f64 {
        self.lattice.radius()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn value(&self, node: usize, lattice_point: usize) -> T {
        self.values[lattice_point * self.grid.num_nodes() + node]
    }

    /// All node values at one lattice momentum.
    pub fn slice(&self, lattice_point: usize) -> &[T] {
        let m = self.grid.num_nodes();
        &self.values[lattice_point * m..(lattice_point + 1) * m]
    }
}

impl PhaseSpaceField<Complex64> {
    pub fn zeros(grid: &TorusGrid, lattice: Lattice) -> Result<Self> {
        let len = lattice.len() * grid.num_nodes();
        Self::new(grid, lattice, vec![Complex64::new(0.0, 0.0); len])
    }

    /// `Σ_α h^n (2π/M)^n Σ_x |F(x, hα)|²`.
    pub fn norm_sq(&self) -> f64 {
        let w = self.grid.h().powi(self.grid.dim() as i32) * self.grid.node_weight();
        w * self.values.iter().map(|v| v.norm_sqr()).sum::<f64>()
    }
}

impl PhaseSpaceField<f64> {
    /// Quadrature mass `Σ_α (2π/M)^n Σ_x H(x, hα)`.
    pub fn mass(&self) -> f64 {
        self.grid.node_weight() * self.values.iter().sum::<f64>()
    }

    /// Mass carried by lattice points with `|ξ| ≤ radius`.
    pub fn mass_within(&self, radius: f64) -> f64 {
        let w = self.grid.node_weight();
        (0..self.lattice.len())
            .filter(|&i| self.lattice.within(i, radius))
            .map(|i| w * self.slice(i).iter().sum::<f64>())
            .sum()
    }

    /// Marginal over `x`: the mass at each lattice momentum.
    pub fn momentum_marginal(&self) -> Vec<f64> {
        let w = self.grid.node_weight();
        (0..self.lattice.len())
            .map(|i| w * self.slice(i).iter().sum::<f64>())
            .collect()
    }
}

/// Phase-space inner product `Σ_α h^n (2π/M)^n Σ_x F* G`.
pub fn phase_space_inner(f: &PhaseSpaceField, g: &PhaseSpaceField) -> Result<Complex64> {
    f.grid.check_same(&g.grid)?;
    if f.lattice != g.lattice {
        return Err(Error::invalid("phase-space fields use different lattices"));
    }
    let w = f.grid.h().powi(f.grid.dim() as i32) * f.grid.node_weight();
    let s: Complex64 = f.values.iter().zip(&g.values).map(|(a, b)| a.conj() * b).sum();
    Ok(s * w)
}

fn check_lattice(grid: &TorusGrid, lattice: &Lattice) -> Result<()> {
    if lattice.dim() != grid.dim() || lattice.h().to_bits() != grid.h().to_bits() {
        Err(Error::GridMismatch)
    } else {
        Ok(())
    }
}

/// Gaussian-weighted coefficients `α_h (2πh)^{n/2} e^{−h|k+α|²/2} c(k)`
/// embedded in a transform buffer.
fn weighted_buffer(grid: &TorusGrid, coeffs: &[Complex64], alpha: &[i64]) -> Vec<Complex64> {
    let pref = gaussian_prefactor(grid.dim(), grid.h());
    let n = grid.dim();
    let weighted: Vec<Complex64> = coeffs
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let k = grid.mode(i);
            c * (pref * gaussian_weight(grid.h(), &k[..n], alpha))
        })
        .collect();
    grid.embed(&weighted)
}

/// Analysis `(Tψ)(x, ξ) = Σ_k α_h (2πh)^{n/2} e^{ik·x} e^{−|hk+ξ|²/(2h)} ψ̂(k)`
/// over the momentum ball of the given radius.
pub fn analyze(psi: &FourierField, radius: f64, exec: &Exec) -> Result<PhaseSpaceField> {
    let grid = psi.grid();
    let lattice = Lattice::ball(grid.dim(), grid.h(), radius)?;
    analyze_on(psi, lattice, exec)
}

pub fn analyze_on(psi: &FourierField, lattice: Lattice, exec: &Exec) -> Result<PhaseSpaceField> {
    let grid = psi.grid();
    check_lattice(grid, &lattice)?;
    let total = lattice.len().saturating_mul(grid.num_nodes());
    if total > exec.phase_space_cap() {
        return Err(Error::ResourceCap(format!(
            "phase-space field would hold {total} values (cap {})",
            exec.phase_space_cap()
        )));
    }
    let slices = exec.map_range(lattice.len(), |i| {
        let mut buf = weighted_buffer(grid, psi.coeffs(), lattice.index(i));
        grid.fft().inverse(&mut buf);
        buf
    });
    let values = slices.into_iter().flatten().collect();
    PhaseSpaceField::new(grid, lattice, values)
}

/// Synthesis `T*F = Σ_α h^n ∫ F(x, hα) Φ_{(x,hα)} dx`, the adjoint of
/// [`analyze`] for the weighted phase-space measure. The `x` integral is the
/// grid quadrature, exact on band-limited integrands.
pub fn synthesize(field: &PhaseSpaceField, exec: &Exec) -> Result<FourierField> {
    let grid = field.grid();
    let lattice = field.lattice();
    let hn = grid.h().powi(grid.dim() as i32);
    let pref = gaussian_prefactor(grid.dim(), grid.h());
    let n = grid.dim();
    let coeffs = exec.sum_vectors(lattice.len(), grid.num_modes(), |i| {
        let alpha = lattice.index(i);
        let mut buf = field.slice(i).to_vec();
        grid.fft().forward(&mut buf);
        grid.extract(&buf)
            .into_iter()
            .enumerate()
            .map(|(j, c)| {
                let k = grid.mode(j);
                c * (hn * pref * gaussian_weight(grid.h(), &k[..n], alpha))
            })
            .collect()
    });
    FourierField::new(grid, coeffs)
}

/// `T*_R T_R ψ` computed as an actual analysis/synthesis round trip, one
/// lattice momentum at a time without materializing the phase-space field.
pub fn frame_apply(psi: &FourierField, radius: f64, exec: &Exec) -> Result<FourierField> {
    let grid = psi.grid();
    let lattice = Lattice::ball(grid.dim(), grid.h(), radius)?;
    let hn = grid.h().powi(grid.dim() as i32);
    let pref = gaussian_prefactor(grid.dim(), grid.h());
    let n = grid.dim();
    let coeffs = exec.sum_vectors(lattice.len(), grid.num_modes(), |i| {
        let alpha = lattice.index(i);
        let mut buf = weighted_buffer(grid, psi.coeffs(), alpha);
        grid.fft().inverse(&mut buf);
        grid.fft().forward(&mut buf);
        grid.extract(&buf)
            .into_iter()
            .enumerate()
            .map(|(j, c)| {
                let k = grid.mode(j);
                c * (hn * pref * gaussian_weight(grid.h(), &k[..n], alpha))
            })
            .collect()
    });
    FourierField::new(grid, coeffs)
}

/// `m_R(k) = (h/π)^{n/2} Σ_{|hα| ≤ R} e^{−h|k+α|²}`; an infinite radius gives `c̃(h)`.
pub fn frame_multiplier(grid: &TorusGrid, k: &[i64], radius: f64) -> Result<f64> {
    if radius.is_infinite() && radius > 0.0 {
        return frame_constant(grid.dim(), grid.h());
    }
    let lattice = Lattice::ball(grid.dim(), grid.h(), radius)?;
    Ok(multiplier_on(&lattice, k))
}

fn multiplier_on(lattice: &Lattice, k: &[i64]) -> f64 {
    let h = lattice.h();
    let s: f64 = (0..lattice.len())
        .map(|i| {
            let d2: f64 = k
                .iter()
                .zip(lattice.index(i))
                .map(|(&kj, &aj)| ((kj + aj) * (kj + aj)) as f64)
                .sum();
            (-h * d2).exp()
        })
        .sum();
    (h / PI).powf(lattice.dim() as f64 / 2.0) * s
}

/// The multiplier over every retained mode of `grid`, in mode order.
pub fn multiplier_table(grid: &TorusGrid, radius: f64, exec: &Exec) -> Result<Vec<f64>> {
    if radius.is_infinite() && radius > 0.0 {
        return Ok(vec![frame_constant(grid.dim(), grid.h())?; grid.num_modes()]);
    }
    let lattice = Lattice::ball(grid.dim(), grid.h(), radius)?;
    let n = grid.dim();
    Ok(exec.map_range(grid.num_modes(), |i| multiplier_on(&lattice, &grid.mode(i)[..n])))
}

fn check_h(h: f64) -> Result<()> {
    if h.is_finite() && h > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("h = {h} must be positive")))
    }
}

/// Sums a decreasing series of positive terms from the smallest term up.
fn sum_tail(first: usize, term: impl Fn(f64) -> f64) -> f64 {
    let mut terms = Vec::new();
    let mut j = first;
    loop {
        let t = term(j as f64);
        if t == 0.0 || (j > first && t < 1e-40) {
            break;
        }
        terms.push(t);
        j += 1;
    }
    terms.iter().rev().sum()
}

/// `c̃(h)` from the direct theta series `(√(h/π) Σ_m e^{−hm²})^n`.
pub fn frame_constant_theta(n: usize, h: f64) -> Result<f64> {
    check_h(h)?;
    let theta = 1.0 + 2.0 * sum_tail(1, |m| (-h * m * m).exp());
    Ok((theta * (h / PI).sqrt()).powi(n as i32))
}

/// `c̃(h)` from the Poisson-dual series `(1 + 2 Σ_{j≥1} e^{−π²j²/h})^n`.
pub fn frame_constant_poisson(n: usize, h: f64) -> Result<f64> {
    check_h(h)?;
    Ok((1.0 + poisson_tail(h)).powi(n as i32))
}

fn poisson_tail(h: f64) -> f64 {
    2.0 * sum_tail(1, |j| (-PI * PI * j * j / h).exp())
}

/// The tight-frame constant `c̃(h)`.
pub fn frame_constant(n: usize, h: f64) -> Result<f64> {
    frame_constant_poisson(n, h)
}

/// `c̃(h) − 1`, evaluated without cancellation.
pub fn frame_defect(n: usize, h: f64) -> Result<f64> {
    check_h(h)?;
    Ok((n as f64 * poisson_tail(h).ln_1p()).exp_m1())
}

/// Quantitative summary of `T*_R T_R` on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameDiagnostics {
    pub c_tilde: f64,
    pub multiplier: Vec<f64>,
    pub radius: f64,
    /// `max_k (c̃ − m_R(k))` over the retained modes.
    pub tail_bound: f64,
}

pub fn frame_diagnostics(grid: &TorusGrid, radius: f64, exec: &Exec) -> Result<FrameDiagnostics> {
    let c_tilde = frame_constant(grid.dim(), grid.h())?;
    let multiplier = multiplier_table(grid, radius, exec)?;
    let tail_bound = multiplier
        .iter()
        .map(|m| c_tilde - m)
        .fold(0.0f64, f64::max);
    Ok(FrameDiagnostics {
        c_tilde,
        multiplier,
        radius,
        tail_bound,
    })
}

fn nonzero_norm(psi: &FourierField) -> Result<f64> {
    let norm = psi.norm();
    if norm == 0.0 {
        Err(Error::invalid("state has zero norm"))
    } else {
        Ok(norm)
    }
}

/// `‖ψ − T*_R T_R ψ‖ / ‖ψ‖` via the analysis/synthesis round trip.
pub fn reconstruct_error(psi: &FourierField, radius: f64, exec: &Exec) -> Result<f64> {
    let norm = nonzero_norm(psi)?;
    let back = frame_apply(psi, radius, exec)?;
    Ok(psi.sub(&back)?.norm() / norm)
}

/// Closed-form counterpart of [`reconstruct_error`]:
/// `[Σ_k |1 − m_R(k)|² |ψ̂(k)|² / Σ_k |ψ̂(k)|²]^{1/2}`.
pub fn multiplier_error(psi: &FourierField, radius: f64, exec: &Exec) -> Result<f64> {
    nonzero_norm(psi)?;
    let table = multiplier_table(psi.grid(), radius, exec)?;
    let (num, den) = psi
        .coeffs()
        .iter()
        .zip(&table)
        .fold((0.0, 0.0), |(num, den), (c, m)| {
            (num + (1.0 - m).powi(2) * c.norm_sqr(), den + c.norm_sqr())
        });
    Ok((num / den).sqrt())
}

/// Radius beyond which the Gaussian tails of every mode of `psi` fall below
/// about 1e-17 of the frame multiplier.
pub fn ample_radius(psi: &FourierField) -> f64 {
    let grid = psi.grid();
    let n = grid.dim();
    let kmax = psi
        .coeffs()
        .iter()
        .enumerate()
        .filter(|(_, c)| c.norm_sqr() > 0.0)
        .map(|(i, _)| {
            let k = grid.mode(i);
            k[..n].iter().map(|&v| (v * v) as f64).sum::<f64>().sqrt()
        })
        .fold(0.0f64, f64::max);
    let margin = (40.0 / grid.h()).sqrt().ceil();
    grid.h() * (kmax.ceil() + margin)
}

/// Smallest radius `R ∈ {h, 2h, …}` with `reconstruct_error(ψ, R) ≤ tol`,
/// located by doubling the multiple of `h` and then bisecting.
pub fn truncation_radius(psi: &FourierField, tol: f64, exec: &Exec) -> Result<f64> {
    let grid = psi.grid();
    let h = grid.h();
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::invalid(format!("tolerance {tol} must be positive")));
    }
    let defect = frame_defect(grid.dim(), h)?;
    if tol <= defect {
        return Err(Error::UnattainableTolerance { tol, defect });
    }
    nonzero_norm(psi)?;
    let ok = |j: u64| -> Result<bool> { Ok(reconstruct_error(psi, j as f64 * h, exec)? <= tol) };

    let mut hi = 1u64;
    let mut lo = 0u64;
    while !ok(hi)? {
        lo = hi;
        hi = hi.checked_mul(2).ok_or_else(|| {
            Error::ResourceCap("truncation radius search overflowed".into())
        })?;
    }
    // Invariant: ok(hi), !ok(lo) (lo = 0 means no lattice at all).
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi as f64 * h)
}

/// Husimi density `H(x, ξ) = h^n |(Tψ)(x, ξ)|²` of the normalized state.
pub fn husimi(psi: &FourierField, radius: f64, exec: &Exec) -> Result<PhaseSpaceField<f64>> {
    let unit = psi.normalized()?;
    let t = analyze(&unit, radius, exec)?;
    let hn = unit.grid().h().powi(unit.grid().dim() as i32);
    let values = t.values().iter().map(|v| hn * v.norm_sqr()).collect();
    PhaseSpaceField::new(unit.grid(), t.lattice().clone(), values)
}

/// Husimi mass of the normalized state outside the ball `|ξ| ≤ radius`,
/// summed over lattice shells out to [`ample_radius`].
pub fn husimi_mass_outside(psi: &FourierField, radius: f64, exec: &Exec) -> Result<f64> {
    let far = ample_radius(psi).max(radius + psi.grid().h());
    let field = husimi(psi, far, exec)?;
    let w = field.grid().node_weight();
    Ok((0..field.lattice().len())
        .filter(|&i| !field.lattice().within(i, radius))
        .map(|i| w * field.slice(i).iter().sum::<f64>())
        .sum())
}
