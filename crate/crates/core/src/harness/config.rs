//! Run configuration: a JSON document whose keys mirror the command-line flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::TorusGrid;
use crate::quantize::Quantization;
use crate::symbol::{Symbol, SymbolSpec};

/// Symbol given inline, as a built-in name, or as a path to a JSON definition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SymbolSource {
    Inline(SymbolSpec),
    Named(String),
}

impl SymbolSource {
    pub fn resolve(&self, n: usize) -> Result<SymbolSpec> {
        match self {
            SymbolSource::Inline(spec) => Ok(spec.clone()),
            SymbolSource::Named(name) if matches!(name.as_str(), "free" | "pendulum" | "identity") => {
                SymbolSpec::builtin(name, n)
            }
            SymbolSource::Named(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::invalid(format!("symbol file {path}: {e}")))?;
                SymbolSpec::from_json(&text)
            }
        }
    }
}

/// Momentum cut-off: chosen per command, or fixed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RadiusPolicy {
    Explicit(f64),
    Named(AutoRadius),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoRadius {
    Auto,
}

impl RadiusPolicy {
    pub fn explicit(self) -> Option<f64> {
        match self {
            RadiusPolicy::Explicit(r) => Some(r),
            RadiusPolicy::Named(AutoRadius::Auto) => None,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        if text == "auto" {
            return Ok(RadiusPolicy::Named(AutoRadius::Auto));
        }
        text.parse::<f64>()
            .map(RadiusPolicy::Explicit)
            .map_err(|_| Error::invalid(format!("radius {text:?} is neither 'auto' nor a number")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct RunConfig {
    pub n: usize,
    pub h: f64,
    pub band_limit: usize,
    /// Grid samples per axis; defaults to `2K + 2` rounded up to a power of two.
    pub samples_per_dim: Option<usize>,
    pub symbol: SymbolSource,
    /// Use Weyl rather than Kohn–Nirenberg quantization.
    pub weyl: bool,
    pub tol: f64,
    pub radius: RadiusPolicy,
    pub seed: u64,
    pub mc_samples: u64,
    /// Random states drawn by `frame-check`.
    pub trials: usize,
    pub times: Vec<f64>,
    pub energy: f64,
    /// State for `reconstruct` and `husimi`.
    pub state: String,
    /// Eigen indices of the `evolve` superposition.
    pub states: Vec<usize>,
    /// Real weights of the superposition; equal weights when absent.
    pub weights: Option<Vec<f64>>,
    pub j0: f64,
    pub q_exp: f64,
    /// Output location; not part of the recorded metadata.
    #[serde(skip_serializing)]
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n: 1,
            h: 0.5,
            band_limit: 16,
            samples_per_dim: None,
            symbol: SymbolSource::Named("free".into()),
            weyl: false,
            tol: 1e-8,
            radius: RadiusPolicy::Named(AutoRadius::Auto),
            seed: 0,
            mc_samples: 1_000_000,
            trials: 20,
            times: vec![0.0, 1.0, 10.0, 100.0],
            energy: 1.0,
            state: "const".into(),
            states: vec![0, 1, 2, 3, 4],
            weights: None,
            j0: 8.0,
            q_exp: 2.0,
            out_dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::invalid(format!("config file {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::invalid(format!("config file {}: {e}", path.display())))
    }

    pub fn grid(&self) -> Result<TorusGrid> {
        let m = self
            .samples_per_dim
            .unwrap_or_else(|| TorusGrid::default_samples(self.band_limit));
        TorusGrid::with_samples(self.n, self.band_limit, m, self.h)
    }

    pub fn quantization(&self) -> Quantization {
        if self.weyl {
            Quantization::Weyl
        } else {
            Quantization::KohnNirenberg
        }
    }

    pub fn symbol_spec(&self) -> Result<SymbolSpec> {
        let spec = self.symbol.resolve(self.n)?;
        if spec.n != self.n {
            return Err(Error::invalid(format!(
                "symbol is defined for n = {} but the run uses n = {}",
                spec.n, self.n
            )));
        }
        Ok(spec)
    }

    pub fn symbol(&self) -> Result<(SymbolSpec, Symbol)> {
        let spec = self.symbol_spec()?;
        let b = spec.build()?;
        Ok((spec, b))
    }

    /// Checks every field that does not depend on the command.
    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} = {v} must be positive and finite")))
            }
        };
        positive("tol", self.tol)?;
        positive("j0", self.j0)?;
        if !self.q_exp.is_finite() {
            return Err(Error::invalid("q-exp must be finite"));
        }
        if !self.energy.is_finite() {
            return Err(Error::invalid("energy must be finite"));
        }
        if let Some(r) = self.radius.explicit() {
            if !(r.is_finite() && r >= 0.0) {
                return Err(Error::invalid(format!("radius {r} must be finite and non-negative")));
            }
        }
        if self.mc_samples == 0 {
            return Err(Error::invalid("mc-samples must be positive"));
        }
        if self.trials == 0 {
            return Err(Error::invalid("trials must be positive"));
        }
        if let Some(t) = self.times.iter().find(|t| !t.is_finite()) {
            return Err(Error::invalid(format!("time {t} is not finite")));
        }
        if let Some(w) = &self.weights {
            if w.len() != self.states.len() {
                return Err(Error::invalid(format!(
                    "{} weights given for {} states",
                    w.len(),
                    self.states.len()
                )));
            }
        }
        Ok(())
    }

    /// The configuration as recorded in output metadata, with the symbol and
    /// sample count resolved.
    pub fn resolved(&self) -> Result<serde_json::Value> {
        let mut c = self.clone();
        c.symbol = SymbolSource::Inline(self.symbol_spec()?);
        c.samples_per_dim = Some(self.grid()?.samples());
        Ok(serde_json::to_value(&c)?)
    }
}
