//! One function per subcommand. Each computes everything in memory and
//! returns the files to write, so a failure never leaves partial output.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use serde_json::json;

use super::config::RunConfig;
use super::output::{csv, json_document, Cell, Metadata, Outputs};
use super::state::{build_state, random_state, StateSpec};
use crate::cache;
use crate::dynamics::{energy, invariance_experiment, propagate, Superposition};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::fbi::{
    ample_radius, frame_apply, frame_constant_theta, frame_defect, frame_diagnostics, husimi,
    reconstruct_error, truncation_radius,
};
use crate::grid::TorusGrid;
use crate::quantize::{ellipticity_check, quantize, EllipticityProbe, OperatorMatrix};
use crate::spectral::{
    classical_radius, count_states, eigendecompose, localization_radius, sublevel_volume,
    EigenDecomposition,
};
use crate::symbol::Symbol;

/// Name of the eigendecomposition cache inside the output directory.
pub const CACHE_FILE: &str = "eigen.tcs";

fn metadata(command: &'static str, config: &RunConfig) -> Result<Metadata> {
    Ok(Metadata {
        command,
        config: config.resolved()?,
    })
}

fn mode_header(prefix: &str, n: usize) -> Vec<String> {
    if n == 1 {
        vec![prefix.to_string()]
    } else {
        (1..=n).map(|j| format!("{prefix}_{j}")).collect()
    }
}

/// Radius used by `frame-check` when none is given: the band edge plus a
/// Gaussian margin of `√(36/h)` lattice steps.
pub fn auto_frame_radius(grid: &TorusGrid) -> f64 {
    let h = grid.h();
    h * (grid.band_limit() as f64 + (36.0 / h).sqrt().ceil())
}

pub fn frame_check(config: &RunConfig, exec: &Exec) -> Result<Outputs> {
    let grid = config.grid()?;
    let meta = metadata("frame-check", config)?;
    let n = grid.dim();
    let radius = config.radius.explicit().unwrap_or_else(|| auto_frame_radius(&grid));
    let diag = frame_diagnostics(&grid, radius, exec)?;
    let c_theta = frame_constant_theta(n, grid.h())?;

    let deviations: Vec<Result<f64>> = exec.map_range(config.trials, |t| {
        let psi = random_state(&grid, grid.band_limit(), config.seed, t as u64)?;
        let back = frame_apply(&psi, radius, &Exec::serial())?;
        Ok(back.axpy(Complex64::new(-diag.c_tilde, 0.0), &psi)?.norm())
    });
    let mut max_deviation = 0.0f64;
    for d in deviations {
        max_deviation = max_deviation.max(d?);
    }

    let mut header = mode_header("k", n);
    header.extend(["m_R".to_string(), "abs_dev".to_string()]);
    let rows: Vec<Vec<Cell>> = diag
        .multiplier
        .iter()
        .enumerate()
        .map(|(i, &m)| {
            let k = grid.mode(i);
            let mut row: Vec<Cell> = k[..n].iter().map(|&v| Cell::Int(v)).collect();
            row.push(m.into());
            row.push((m - diag.c_tilde).abs().into());
            row
        })
        .collect();

    let mut out = Outputs::default();
    out.add("multiplier.csv", csv(&meta, &header, &rows));
    out.add(
        "frame.json",
        json_document(
            &meta,
            json!({
                "c_tilde": diag.c_tilde,
                "c_tilde_theta": c_theta,
                "defect": frame_defect(n, grid.h())?,
                "max_deviation": max_deviation,
                "tail_bound": diag.tail_bound,
                "R": radius,
                "h": grid.h(),
                "n": n,
                "band_limit": grid.band_limit(),
                "samples_per_dim": grid.samples(),
                "trials": config.trials,
                "integer_reciprocal": grid.integer_reciprocal(),
            }),
        )?,
    );
    Ok(out)
}

/// Quantized operator and its eigendecomposition, reusing a matching cache
/// in the output directory. Returns the cache bytes to (re)write.
struct Spectrum {
    symbol: Symbol,
    matrix: OperatorMatrix,
    dec: EigenDecomposition,
    cache: Vec<u8>,
}

fn spectrum_for(config: &RunConfig, exec: &Exec, out_dir: &Path) -> Result<Spectrum> {
    let grid = config.grid()?;
    let (spec, symbol) = config.symbol()?;
    let kind = config.quantization();
    let matrix = quantize(&symbol, &grid, kind, exec)?;
    if !matrix.is_hermitian() {
        return Err(Error::NotHermitian(matrix.hermitian_deviation()));
    }
    let hash = cache::symbol_hash(&spec, kind)?;
    let cached = match cache::read(&out_dir.join(CACHE_FILE), &matrix, hash) {
        Ok(found) => found,
        Err(e) => {
            eprintln!("warning: ignoring unusable cache: {e}");
            None
        }
    };
    let dec = match cached {
        Some(dec) => {
            eprintln!("reusing cached eigendecomposition");
            dec
        }
        None => eigendecompose(&matrix)?,
    };
    let cache = cache::encode(&dec, hash);
    Ok(Spectrum {
        symbol,
        matrix,
        dec,
        cache,
    })
}

fn state_for(config: &RunConfig, exec: &Exec, out_dir: &Path) -> Result<crate::grid::FourierField> {
    let grid = config.grid()?;
    let spec = StateSpec::parse(&config.state)?;
    build_state(&spec, &grid, config.seed, |j| {
        spectrum_for(config, exec, out_dir)?.dec.eigenfunction(j)
    })
}

pub fn reconstruct(config: &RunConfig, exec: &Exec, out_dir: &Path) -> Result<Outputs> {
    let grid = config.grid()?;
    let meta = metadata("reconstruct", config)?;
    let psi = state_for(config, exec, out_dir)?;
    let h = grid.h();
    let f = truncation_radius(&psi, config.tol, exec)?;
    let steps = (f / h).round() as usize + 4;
    let errors: Vec<Result<f64>> = exec.map_range(steps + 1, |j| {
        reconstruct_error(&psi, j as f64 * h, &Exec::serial())
    });
    let mut rows = Vec::with_capacity(steps + 1);
    for (j, e) in errors.into_iter().enumerate() {
        rows.push(vec![Cell::Float(j as f64 * h), Cell::Float(e?)]);
    }
    let explicit = match config.radius.explicit() {
        Some(r) => Some(reconstruct_error(&psi, r, exec)?),
        None => None,
    };

    let mut out = Outputs::default();
    out.add("recon.csv", csv(&meta, &["R".into(), "error".into()], &rows));
    out.add(
        "recon.json",
        json_document(
            &meta,
            json!({
                "f": f,
                "tol": config.tol,
                "defect": frame_defect(grid.dim(), h)?,
                "state": config.state,
                "R": config.radius.explicit(),
                "error_at_R": explicit,
            }),
        )?,
    );
    Ok(out)
}

pub fn spectrum(config: &RunConfig, exec: &Exec, out_dir: &Path) -> Result<Outputs> {
    let meta = metadata("spectrum", config)?;
    let s = spectrum_for(config, exec, out_dir)?;
    let ellipticity = match s.symbol.ellipticity() {
        Some(e) => Some(ellipticity_check(&s.symbol, &EllipticityProbe::for_radius(e.radius))?),
        None => None,
    };
    let rows: Vec<Vec<Cell>> = s
        .dec
        .eigenvalues()
        .iter()
        .zip(s.dec.residuals())
        .enumerate()
        .map(|(j, (&e, &r))| vec![Cell::Int(j as i64), e.into(), r.into()])
        .collect();
    let mut out = Outputs::default();
    out.add(
        "spectrum.csv",
        csv(&meta, &["index".into(), "eigenvalue".into(), "residual".into()], &rows),
    );
    out.add(
        "spectrum.json",
        json_document(
            &meta,
            json!({
                "dimension": s.dec.len(),
                "quantization": s.matrix.kind().name(),
                "hermitian_deviation": s.matrix.hermitian_deviation(),
                "orthonormality_error": s.dec.orthonormality_error(),
                "max_residual": s.dec.residuals().iter().fold(0.0f64, |m, r| m.max(*r)),
                "ellipticity": ellipticity,
                "cache": CACHE_FILE,
            }),
        )?,
    );
    out.add(CACHE_FILE, s.cache);
    Ok(out)
}

pub fn localization(config: &RunConfig, exec: &Exec, out_dir: &Path) -> Result<Outputs> {
    let meta = metadata("localization", config)?;
    let s = spectrum_for(config, exec, out_dir)?;
    let report = localization_radius(&s.dec, config.energy, config.tol, exec)?;
    let classical = classical_radius(&s.symbol, config.energy)?;
    let rows: Vec<Vec<Cell>> = report
        .rows
        .iter()
        .map(|r| vec![Cell::Int(r.index as i64), r.energy.into(), r.radius.into()])
        .collect();
    let mut out = Outputs::default();
    out.add(
        "localization.csv",
        csv(&meta, &["j".into(), "E_j".into(), "f_j".into()], &rows),
    );
    out.add(
        "localization.json",
        json_document(
            &meta,
            json!({
                "E": config.energy,
                "tol": config.tol,
                "g": report.radius,
                "count": report.rows.len(),
                "classical_radius": classical,
            }),
        )?,
    );
    out.add(CACHE_FILE, s.cache);
    Ok(out)
}

pub fn weyl_law(config: &RunConfig, exec: &Exec, out_dir: &Path) -> Result<Outputs> {
    let meta = metadata("weyl-law", config)?;
    let s = spectrum_for(config, exec, out_dir)?;
    let grid = s.dec.grid().clone();
    let count = count_states(&s.dec, config.energy);
    let fine_grid = grid.with_band_limit(2 * grid.band_limit())?;
    let fine = eigendecompose(&quantize(&s.symbol, &fine_grid, config.quantization(), exec)?)?;
    let fine_count = count_states(&fine, config.energy);
    if fine_count != count {
        return Err(Error::RefinementUnstable {
            coarse: count,
            fine: fine_count,
        });
    }
    let vol = sublevel_volume(&s.symbol, config.energy, config.mc_samples, config.seed, exec)?;
    let cell = (2.0 * PI * grid.h()).powi(grid.dim() as i32);
    let ratio = (vol.volume > 0.0).then(|| count as f64 * cell / vol.volume);
    let mut out = Outputs::default();
    out.add(
        "weyl.json",
        json_document(
            &meta,
            json!({
                "E": config.energy,
                "count": count,
                "refined_band_limit": fine_grid.band_limit(),
                "volume": vol.volume,
                "volume_stderr": vol.stderr,
                "ratio": ratio,
                "weyl_estimate": vol.volume / cell,
                "box_radius": vol.box_radius,
                "samples": vol.samples,
                "seed": vol.seed,
            }),
        )?,
    );
    out.add(CACHE_FILE, s.cache);
    Ok(out)
}

pub fn evolve(config: &RunConfig, exec: &Exec, out_dir: &Path) -> Result<Outputs> {
    if config.times.is_empty() {
        return Err(Error::invalid("the time list is empty"));
    }
    let meta = metadata("evolve", config)?;
    let s = spectrum_for(config, exec, out_dir)?;
    let weights: Vec<Complex64> = match &config.weights {
        Some(w) => w.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        None => vec![Complex64::new(1.0, 0.0); config.states.len()],
    };
    let sup = Superposition::new(&s.dec, config.states.clone(), weights)?;
    sup.check_budget(config.j0, config.q_exp)?;
    let report = invariance_experiment(&sup, &config.times, config.tol, exec)?;

    let e0 = energy(&s.matrix, &propagate(&sup, 0.0)?)?;
    let mut norm_deviation = 0.0f64;
    let mut energy_drift = 0.0f64;
    for &t in &config.times {
        let psi = propagate(&sup, t)?;
        norm_deviation = norm_deviation.max((psi.norm() - 1.0).abs());
        energy_drift = energy_drift.max((energy(&s.matrix, &psi)? - e0).abs());
    }
    let rows: Vec<Vec<Cell>> = report
        .rows
        .iter()
        .map(|r| vec![r.t.into(), r.error.into()])
        .collect();
    let max_error = report.rows.iter().fold(0.0f64, |m, r| m.max(r.error));
    let mut out = Outputs::default();
    out.add("invariance.csv", csv(&meta, &["t".into(), "error".into()], &rows));
    out.add(
        "invariance.json",
        json_document(
            &meta,
            json!({
                "ell": report.radius,
                "tol": config.tol,
                "states": config.states,
                "J": sup.len(),
                "j0": config.j0,
                "q_exp": config.q_exp,
                "max_error": max_error,
                "energy": e0,
                "norm_deviation": norm_deviation,
                "energy_drift": energy_drift,
            }),
        )?,
    );
    out.add(CACHE_FILE, s.cache);
    Ok(out)
}

pub fn husimi_table(config: &RunConfig, exec: &Exec, out_dir: &Path) -> Result<Outputs> {
    let grid = config.grid()?;
    let meta = metadata("husimi", config)?;
    let psi = state_for(config, exec, out_dir)?;
    let radius = config.radius.explicit().unwrap_or_else(|| ample_radius(&psi));
    let field = husimi(&psi, radius, exec)?;
    let n = grid.dim();
    let lattice = field.lattice();

    let mut header = mode_header("x", n);
    header.extend(mode_header("xi", n));
    header.push("density".into());
    let mut rows = Vec::with_capacity(field.values().len());
    for a in 0..lattice.len() {
        let xi = lattice.xi(a);
        for (node, &d) in field.slice(a).iter().enumerate() {
            let x = grid.node(node);
            let mut row: Vec<Cell> = x[..n].iter().map(|&v| Cell::Float(v)).collect();
            row.extend(xi.iter().map(|&v| Cell::Float(v)));
            row.push(d.into());
            rows.push(row);
        }
    }
    let mut out = Outputs::default();
    out.add("husimi.csv", csv(&meta, &header, &rows));
    out.add(
        "husimi.json",
        json_document(
            &meta,
            json!({
                "R": radius,
                "lattice_points": lattice.len(),
                "mass": field.mass(),
                "c_tilde": crate::fbi::frame_constant(n, grid.h())?,
                "state": config.state,
            }),
        )?,
    );
    Ok(out)
}
