//! C ABI for `coherent-torus`.
//!
//! Objects cross the boundary as opaque handles created by `ct_*_new`-style
//! functions and released with the matching `ct_*_free`. Every fallible call
//! returns a [`CtStatus`]; on failure [`ct_last_error_message`] describes the
//! error for the calling thread. Outputs are written through pointer
//! arguments only on success.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use num_complex::Complex64;

use coherent_torus::coherent::{alpha, coherent_coeffs, CoherentPoint};
use coherent_torus::dynamics::{propagate, Superposition};
use coherent_torus::fbi::{frame_constant, frame_defect, frame_multiplier, reconstruct_error, truncation_radius};
use coherent_torus::grid::inner_product;
use coherent_torus::quantize::{quantize, OperatorMatrix, Quantization};
use coherent_torus::spectral::{count_states, eigendecompose, EigenDecomposition};
use coherent_torus::symbol::{Symbol, SymbolSpec};
use coherent_torus::{Error, Exec, FourierField, TorusGrid};

/// Result of every fallible call. Values 1 to 6 match the command-line exit codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CtStatus {
    Ok = 0,
    /// I/O or cache failure.
    Io = 1,
    /// Invalid argument, size mismatch, non-finite value or insufficient band limit.
    Invalid = 2,
    /// A resource cap would be exceeded.
    ResourceCap = 3,
    /// The tolerance lies below the frame defect.
    Unattainable = 4,
    /// Malformed or unsupported symbol, or a non-Hermitian operator.
    Symbol = 5,
    /// Eigensolver failure or unstable state count.
    Solver = 6,
    /// A required pointer argument was null.
    NullPointer = 7,
    /// A panic was caught at the boundary.
    Panic = 8,
}

/// Discretization grid.
pub struct CtGrid(TorusGrid);
/// Band-limited function given by its Fourier coefficients.
pub struct CtField(FourierField);
/// Phase-space symbol.
pub struct CtSymbol(Symbol);
/// Quantized operator matrix.
pub struct CtOperator(OperatorMatrix);
/// Eigendecomposition of a Hermitian operator.
pub struct CtSpectrum(EigenDecomposition);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

enum Fail {
    Core(Error),
    Null(&'static str),
    Utf8(&'static str),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Core(e)
    }
}

fn set_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = msg);
}

fn status_of(e: &Error) -> CtStatus {
    match e.exit_code() {
        1 => CtStatus::Io,
        2 => CtStatus::Invalid,
        3 => CtStatus::ResourceCap,
        4 => CtStatus::Unattainable,
        5 => CtStatus::Symbol,
        _ => CtStatus::Solver,
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> CtStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CtStatus::Ok,
        Ok(Err(Fail::Core(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Fail::Null(name))) => {
            set_error(format!("null pointer passed for `{name}`"));
            CtStatus::NullPointer
        }
        Ok(Err(Fail::Utf8(name))) => {
            set_error(format!("`{name}` is not valid UTF-8"));
            CtStatus::Invalid
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            CtStatus::Panic
        }
    }
}

unsafe fn get<'a, T>(ptr: *const T, name: &'static str) -> Result<&'a T, Fail> {
    ptr.as_ref().ok_or(Fail::Null(name))
}

unsafe fn out<'a, T>(ptr: *mut T, name: &'static str) -> Result<&'a mut T, Fail> {
    ptr.as_mut().ok_or(Fail::Null(name))
}

unsafe fn slice<'a, T>(ptr: *const T, len: usize, name: &'static str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(Fail::Null(name));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

unsafe fn slice_mut<'a, T>(ptr: *mut T, len: usize, name: &'static str) -> Result<&'a mut [T], Fail> {
    if len == 0 {
        return Ok(&mut []);
    }
    if ptr.is_null() {
        return Err(Fail::Null(name));
    }
    Ok(std::slice::from_raw_parts_mut(ptr, len))
}

unsafe fn text<'a>(ptr: *const c_char, name: &'static str) -> Result<&'a str, Fail> {
    if ptr.is_null() {
        return Err(Fail::Null(name));
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| Fail::Utf8(name))
}

fn check_len(expected: usize, actual: usize) -> Result<(), Fail> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::SizeMismatch { expected, actual }.into())
    }
}

fn boxed<T>(value: T) -> *mut T {
    Box::into_raw(Box::new(value))
}

fn exec() -> Result<Exec, Fail> {
    Ok(Exec::from_env()?)
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ct_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => c"",
    };
    VERSION.as_ptr()
}

/// Message of the last failed call on this thread. The pointer stays valid
/// until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ct_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

// ---- grids ----

/// Creates a grid of dimension `n`, band limit `band_limit` and semiclassical
/// parameter `h`. `samples_per_dim = 0` selects the default sample count.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn ct_grid_new(
    n: usize,
    band_limit: usize,
    samples_per_dim: usize,
    h: f64,
    out_grid: *mut *mut CtGrid,
) -> CtStatus {
    guard(|| {
        let slot = out(out_grid, "out_grid")?;
        let g = if samples_per_dim == 0 {
            TorusGrid::new(n, band_limit, h)?
        } else {
            TorusGrid::with_samples(n, band_limit, samples_per_dim, h)?
        };
        *slot = boxed(CtGrid(g));
        Ok(())
    })
}

/// # Safety
/// `grid` must be null or a handle from [`ct_grid_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ct_grid_free(grid: *mut CtGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// Number of retained Fourier modes `(2K+1)^n`; zero for a null handle.
///
/// # Safety
/// `grid` must be null or a live grid handle.
#[no_mangle]
pub unsafe extern "C" fn ct_grid_num_modes(grid: *const CtGrid) -> usize {
    grid.as_ref().map_or(0, |g| g.0.num_modes())
}

/// Writes the `n` integer components of mode `index` (lexicographic order,
/// first component slowest) to `out_mode`.
///
/// # Safety
/// `grid` must be a live grid handle and `out_mode` must hold `n` values.
#[no_mangle]
pub unsafe extern "C" fn ct_grid_mode(grid: *const CtGrid, index: usize, out_mode: *mut i64) -> CtStatus {
    guard(|| {
        let g = &get(grid, "grid")?.0;
        if index >= g.num_modes() {
            return Err(Error::InvalidInput(format!("mode index {index} out of range")).into());
        }
        let dst = slice_mut(out_mode, g.dim(), "out_mode")?;
        dst.copy_from_slice(&g.mode(index)[..g.dim()]);
        Ok(())
    })
}

// ---- fields ----

/// Builds a field from `len` coefficients in mode order, split into real
/// and imaginary parts. `len` must equal [`ct_grid_num_modes`].
///
/// # Safety
/// `re` and `im` must each hold `len` values; `out_field` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ct_field_new(
    grid: *const CtGrid,
    re: *const f64,
    im: *const f64,
    len: usize,
    out_field: *mut *mut CtField,
) -> CtStatus {
    guard(|| {
        let g = &get(grid, "grid")?.0;
        let re = slice(re, len, "re")?;
        let im = slice(im, len, "im")?;
        let slot = out(out_field, "out_field")?;
        let coeffs = re.iter().zip(im).map(|(&a, &b)| Complex64::new(a, b)).collect();
        *slot = boxed(CtField(FourierField::new(g, coeffs)?));
        Ok(())
    })
}

/// The plane wave `e^{ik·y}` (norm `(2π)^{n/2}`); `k` holds `n` components.
///
/// # Safety
/// `k` must hold `n` values; `out_field` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ct_field_plane_wave(grid: *const CtGrid, k: *const i64, out_field: *mut *mut CtField) -> CtStatus {
    guard(|| {
        let g = &get(grid, "grid")?.0;
        let k = slice(k, g.dim(), "k")?;
        let slot = out(out_field, "out_field")?;
        *slot = boxed(CtField(FourierField::plane_wave(g, k)?));
        Ok(())
    })
}

/// # Safety
/// `field` must be null or a live field handle.
#[no_mangle]
pub unsafe extern "C" fn ct_field_free(field: *mut CtField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// Copies the coefficients into `re` and `im`, each of length `len`.
///
/// # Safety
/// `re` and `im` must each have room for `len` values.
#[no_mangle]
pub unsafe extern "C" fn ct_field_coeffs(field: *const CtField, re: *mut f64, im: *mut f64, len: usize) -> CtStatus {
    guard(|| {
        let f = &get(field, "field")?.0;
        check_len(f.coeffs().len(), len)?;
        let re = slice_mut(re, len, "re")?;
        let im = slice_mut(im, len, "im")?;
        for ((r, i), c) in re.iter_mut().zip(im.iter_mut()).zip(f.coeffs()) {
            *r = c.re;
            *i = c.im;
        }
        Ok(())
    })
}

/// `L²(T^n)` norm of the field.
///
/// # Safety
/// `field` must be a live handle; `out_norm` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ct_field_norm(field: *const CtField, out_norm: *mut f64) -> CtStatus {
    guard(|| {
        let f = &get(field, "field")?.0;
        *out(out_norm, "out_norm")? = f.norm();
        Ok(())
    })
}

/// `⟨a, b⟩ = ∫ conj(a) b`, conjugate-linear in `a`.
///
/// # Safety
/// Both fields must be live handles; `out_re` and `out_im` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ct_inner_product(
    a: *const CtField,
    b: *const CtField,
    out_re: *mut f64,
    out_im: *mut f64,
) -> CtStatus {
    guard(|| {
        let v = inner_product(&get(a, "a")?.0, &get(b, "b")?.0)?;
        *out(out_re, "out_re")? = v.re;
        *out(out_im, "out_im")? = v.im;
        Ok(())
    })
}

// ---- coherent states and frames ----

/// Normalization constant of the Gaussian coherent state.
///
/// # Safety
/// `out_value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ct_alpha(n: usize, h: f64, out_value: *mut f64) -> CtStatus {
    guard(|| {
        *out(out_value, "out_value")? = alpha(n, h)?;
        Ok(())
    })
}

/// Tight-frame constant `c̃(h)`.
///
/// # Safety
/// `out_value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ct_frame_constant(n: usize, h: f64, out_value: *mut f64) -> CtStatus {
    guard(|| {
        *out(out_value, "out_value")? = frame_constant(n, h)?;
        Ok(())
    })
}

/// `c̃(h) − 1`, computed without cancellation.
///
/// # Safety
/// `out_value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ct_frame_defect(n: usize, h: f64, out_value: *mut f64) -> CtStatus {
    guard(|| {
        *out(out_value, "out_value")? = frame_defect(n, h)?;
        Ok(())
    })
}

/// Frame multiplier `m_R(k)` for the momentum ball of radius `radius`;
/// an infinite radius yields `c̃(h)`.
///
/// # Safety
/// `k` must hold `n` values; `out_value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ct_frame_multiplier(
    grid: *const CtGrid,
    k: *const i64,
    radius: f64,
    out_value: *mut f64,
) -> CtStatus {
    guard(|| {
        let g = &get(grid, "grid")?.0;
        let k = slice(k, g.dim(), "k")?;
        *out(out_value, "out_value")? = frame_multiplier(g, k, radius)?;
        Ok(())
    })
}

/// Relative error of the truncated analysis/synthesis round trip.
///
/// # Safety
/// `field` must be a live handle; `out_value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ct_reconstruct_error(field: *const CtField, radius: f64, out_value: *mut f64) -> CtStatus {
    guard(|| {
        let f = &get(field, "field")?.0;
        let slot = out(out_value, "out_value")?;
        *slot = reconstruct_error(f, radius, &exec()?)?;
        Ok(())
    })
}

/// Smallest multiple of `h` at which the reconstruction error is at most `tol`.
///
/// # Safety
/// `field` must be a live handle; `out_value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ct_truncation_radius(field: *const CtField, tol: f64, out_value: *mut f64) -> CtStatus {
    guard(|| {
        let f = &get(field, "field")?.0;
        let slot = out(out_value, "out_value")?;
        *slot = truncation_radius(f, tol, &exec()?)?;
        Ok(())
    })
}

/// Periodized coherent state centred at position `x` with momentum
/// `h·lattice`; both arrays hold `n` values.
///
/// # Safety
/// `x` and `lattice` must hold `n` values; `out_field` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ct_coherent_state(
    grid: *const CtGrid,
    x: *const f64,
    lattice: *const i64,
    out_field: *mut *mut CtField,
) -> CtStatus {
    guard(|| {
        let g = &get(grid, "grid")?.0;
        let x = slice(x, g.dim(), "x")?;
        let lattice = slice(lattice, g.dim(), "lattice")?;
        let slot = out(out_field, "out_field")?;
        let p = CoherentPoint::new(x, lattice, g.h())?;
        *slot = boxed(CtField(coherent_coeffs(&p, g)?));
        Ok(())
    })
}

// ---- symbols and operators ----

/// Parses a JSON symbol definition.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out_symbol` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ct_symbol_from_json(json: *const c_char, out_symbol: *mut *mut CtSymbol) -> CtStatus {
    guard(|| {
        let spec = SymbolSpec::from_json(text(json, "json")?)?;
        let slot = out(out_symbol, "out_symbol")?;
        *slot = boxed(CtSymbol(spec.build()?));
        Ok(())
    })
}

/// Built-in symbol: `free`, `pendulum` or `identity`.
///
/// # Safety
/// `name` must be a NUL-terminated string; `out_symbol` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ct_symbol_builtin(name: *const c_char, n: usize, out_symbol: *mut *mut CtSymbol) -> CtStatus {
    guard(|| {
        let spec = SymbolSpec::builtin(text(name, "name")?, n)?;
        let slot = out(out_symbol, "out_symbol")?;
        *slot = boxed(CtSymbol(spec.build()?));
        Ok(())
    })
}

/// # Safety
/// `symbol` must be null or a live symbol handle.
#[no_mangle]
pub unsafe extern "C" fn ct_symbol_free(symbol: *mut CtSymbol) {
    if !symbol.is_null() {
        drop(Box::from_raw(symbol));
    }
}

/// Quantizes `symbol` on `grid`: Weyl when `weyl` is true, Kohn–Nirenberg otherwise.
///
/// # Safety
/// Handles must be live; `out_operator` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ct_operator_new(
    symbol: *const CtSymbol,
    grid: *const CtGrid,
    weyl: bool,
    out_operator: *mut *mut CtOperator,
) -> CtStatus {
    guard(|| {
        let b = &get(symbol, "symbol")?.0;
        let g = &get(grid, "grid")?.0;
        let slot = out(out_operator, "out_operator")?;
        let kind = if weyl { Quantization::Weyl } else { Quantization::KohnNirenberg };
        *slot = boxed(CtOperator(quantize(b, g, kind, &exec()?)?));
        Ok(())
    })
}

/// # Safety
/// `operator` must be null or a live operator handle.
#[no_mangle]
pub unsafe extern "C" fn ct_operator_free(operator: *mut CtOperator) {
    if !operator.is_null() {
        drop(Box::from_raw(operator));
    }
}

/// Whether the matrix is Hermitian to within 1e-12; false for a null handle.
///
/// # Safety
/// `operator` must be null or a live operator handle.
#[no_mangle]
pub unsafe extern "C" fn ct_operator_is_hermitian(operator: *const CtOperator) -> bool {
    operator.as_ref().is_some_and(|a| a.0.is_hermitian())
}

/// `A ψ` projected onto the band.
///
/// # Safety
/// Handles must be live; `out_field` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ct_operator_apply(
    operator: *const CtOperator,
    field: *const CtField,
    out_field: *mut *mut CtField,
) -> CtStatus {
    guard(|| {
        let a = &get(operator, "operator")?.0;
        let f = &get(field, "field")?.0;
        let slot = out(out_field, "out_field")?;
        *slot = boxed(CtField(a.apply(f)?));
        Ok(())
    })
}

// ---- spectra and dynamics ----

/// Full eigendecomposition of a Hermitian operator.
///
/// # Safety
/// `operator` must be live; `out_spectrum` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ct_spectrum_new(operator: *const CtOperator, out_spectrum: *mut *mut CtSpectrum) -> CtStatus {
    guard(|| {
        let a = &get(operator, "operator")?.0;
        let slot = out(out_spectrum, "out_spectrum")?;
        *slot = boxed(CtSpectrum(eigendecompose(a)?));
        Ok(())
    })
}

/// # Safety
/// `spectrum` must be null or a live spectrum handle.
#[no_mangle]
pub unsafe extern "C" fn ct_spectrum_free(spectrum: *mut CtSpectrum) {
    if !spectrum.is_null() {
        drop(Box::from_raw(spectrum));
    }
}

/// Number of eigenpairs; zero for a null handle.
///
/// # Safety
/// `spectrum` must be null or a live spectrum handle.
#[no_mangle]
pub unsafe extern "C" fn ct_spectrum_len(spectrum: *const CtSpectrum) -> usize {
    spectrum.as_ref().map_or(0, |s| s.0.len())
}

/// Copies the ascending eigenvalues into `out_values` (length `len`).
///
/// # Safety
/// `out_values` must have room for `len` values.
#[no_mangle]
pub unsafe extern "C" fn ct_spectrum_eigenvalues(spectrum: *const CtSpectrum, out_values: *mut f64, len: usize) -> CtStatus {
    guard(|| {
        let s = &get(spectrum, "spectrum")?.0;
        check_len(s.len(), len)?;
        slice_mut(out_values, len, "out_values")?.copy_from_slice(s.eigenvalues());
        Ok(())
    })
}

/// Eigenfunction `j`, normalized in `L²(T^n)`.
///
/// # Safety
/// `spectrum` must be live; `out_field` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ct_spectrum_eigenfunction(
    spectrum: *const CtSpectrum,
    j: usize,
    out_field: *mut *mut CtField,
) -> CtStatus {
    guard(|| {
        let s = &get(spectrum, "spectrum")?.0;
        let slot = out(out_field, "out_field")?;
        *slot = boxed(CtField(s.eigenfunction(j)?));
        Ok(())
    })
}

/// `#{j : E_j ≤ energy}`.
///
/// # Safety
/// `spectrum` must be live; `out_count` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ct_count_states(spectrum: *const CtSpectrum, energy: f64, out_count: *mut usize) -> CtStatus {
    guard(|| {
        let s = &get(spectrum, "spectrum")?.0;
        *out(out_count, "out_count")? = count_states(s, energy);
        Ok(())
    })
}

/// Propagates the superposition `Σ c_j ψ_j` (normalized) to time `t`.
/// `indices`, `re` and `im` each hold `count` values.
///
/// # Safety
/// Arrays must hold `count` values; `out_field` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ct_propagate(
    spectrum: *const CtSpectrum,
    indices: *const usize,
    re: *const f64,
    im: *const f64,
    count: usize,
    t: f64,
    out_field: *mut *mut CtField,
) -> CtStatus {
    guard(|| {
        let s = &get(spectrum, "spectrum")?.0;
        let idx = slice(indices, count, "indices")?;
        let re = slice(re, count, "re")?;
        let im = slice(im, count, "im")?;
        let slot = out(out_field, "out_field")?;
        let coeffs = re.iter().zip(im).map(|(&a, &b)| Complex64::new(a, b)).collect();
        let sup = Superposition::new(s, idx.to_vec(), coeffs)?;
        *slot = boxed(CtField(propagate(&sup, t)?));
        Ok(())
    })
}
