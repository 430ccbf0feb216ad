//! Textual state specifications accepted by `--state`.
//!
//! * `const` — the normalized constant function;
//! * `mode:k1[,k2,k3]` — a normalized plane wave;
//! * `random:B` — seeded random coefficients on `|k|_∞ ≤ B`;
//! * `eigen:j` — eigenfunction `j` of the configured operator;
//! * `coeffs:PATH` — JSON array of `[re, im]` pairs in mode order.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{FourierField, TorusGrid};

#[derive(Clone, Debug, PartialEq)]
pub enum StateSpec {
    Constant,
    Mode(Vec<i64>),
    Random(usize),
    Eigen(usize),
    Coeffs(String),
}

impl StateSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let bad = || Error::invalid(format!("unrecognized state {text:?}"));
        if text == "const" {
            return Ok(StateSpec::Constant);
        }
        let (kind, arg) = text.split_once(':').ok_or_else(bad)?;
        match kind {
            "mode" => arg
                .split(',')
                .map(|v| v.trim().parse::<i64>().map_err(|_| bad()))
                .collect::<Result<Vec<_>>>()
                .map(StateSpec::Mode),
            "random" => arg.trim().parse().map(StateSpec::Random).map_err(|_| bad()),
            "eigen" => arg.trim().parse().map(StateSpec::Eigen).map_err(|_| bad()),
            "coeffs" if !arg.is_empty() => Ok(StateSpec::Coeffs(arg.to_string())),
            _ => Err(bad()),
        }
    }
}

/// Random coefficients with uniform real and imaginary parts in `[−1, 1]`
/// on `|k|_∞ ≤ band`, normalized. `stream` selects an independent sequence.
pub fn random_state(grid: &TorusGrid, band: usize, seed: u64, stream: u64) -> Result<FourierField> {
    if band > grid.band_limit() {
        return Err(Error::BandLimit {
            band_limit: grid.band_limit(),
            detail: format!("random state band {band} exceeds the grid"),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let n = grid.dim();
    let coeffs = grid
        .modes()
        .map(|k| {
            if k[..n].iter().all(|v| v.unsigned_abs() as usize <= band) {
                Complex64::new(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0))
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    FourierField::new(grid, coeffs)?.normalized()
}

/// Builds the state; `eigen` is consulted only for `eigen:j`.
pub fn build_state(
    spec: &StateSpec,
    grid: &TorusGrid,
    seed: u64,
    eigen: impl FnOnce(usize) -> Result<FourierField>,
) -> Result<FourierField> {
    let field = match spec {
        StateSpec::Constant => FourierField::plane_wave(grid, &vec![0; grid.dim()])?,
        StateSpec::Mode(k) => {
            if k.len() != grid.dim() {
                return Err(Error::invalid(format!("mode {k:?} needs {} components", grid.dim())));
            }
            FourierField::plane_wave(grid, k)?
        }
        StateSpec::Random(band) => return random_state(grid, *band, seed, 0),
        StateSpec::Eigen(j) => eigen(*j)?,
        StateSpec::Coeffs(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::invalid(format!("state file {path}: {e}")))?;
            let pairs: Vec<[f64; 2]> = serde_json::from_str(&text)
                .map_err(|e| Error::invalid(format!("state file {path}: {e}")))?;
            FourierField::new(grid, pairs.iter().map(|p| Complex64::new(p[0], p[1])).collect())?
        }
    };
    if field.norm() == 0.0 {
        return Err(Error::invalid("state is empty (zero norm)"));
    }
    field.normalized()
}
