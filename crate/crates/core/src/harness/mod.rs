//! Command-line front end: flag parsing, configuration merging and dispatch.

pub mod commands;
pub mod config;
pub mod output;
pub mod state;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::exec::Exec;
use config::{RadiusPolicy, RunConfig, SymbolSource};

#[derive(Debug, Parser)]
#[command(name = "coherent-torus", version, about = "Coherent-state frames and semiclassical spectra on the flat torus")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Frame constant, multiplier table and tightness on random states.
    FrameCheck,
    /// Reconstruction error against truncation radius for one state.
    Reconstruct,
    /// Eigenvalues and residuals of the quantized symbol.
    Spectrum,
    /// Truncation radius of every eigenfunction below an energy.
    Localization,
    /// State count against Monte Carlo phase-space volume.
    WeylLaw,
    /// Decomposition error of a propagated eigenfunction superposition.
    Evolve,
    /// Husimi density of one state.
    Husimi,
}

/// Flags override keys of the JSON configuration file.
#[derive(Debug, Default, Args)]
pub struct Flags {
    /// JSON configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub n: Option<usize>,
    #[arg(long, global = true)]
    pub h: Option<f64>,
    #[arg(long, global = true)]
    pub band_limit: Option<usize>,
    #[arg(long, global = true)]
    pub samples_per_dim: Option<usize>,
    /// Built-in symbol name (free, pendulum, identity) or path to a JSON definition.
    #[arg(long, global = true)]
    pub symbol: Option<String>,
    /// Use Weyl quantization.
    #[arg(long, global = true)]
    pub weyl: bool,
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// `auto` or a momentum radius.
    #[arg(long, global = true)]
    pub radius: Option<String>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub mc_samples: Option<u64>,
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    /// Comma-separated times.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub times: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub energy: Option<f64>,
    /// const | mode:k1,.. | random:B | eigen:j | coeffs:PATH
    #[arg(long, global = true)]
    pub state: Option<String>,
    /// Comma-separated eigen indices.
    #[arg(long, global = true)]
    pub states: Option<String>,
    /// Comma-separated real weights.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub weights: Option<String>,
    #[arg(long, global = true)]
    pub j0: Option<f64>,
    #[arg(long, global = true)]
    pub q_exp: Option<f64>,
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
}

fn parse_list<T: std::str::FromStr>(name: &str, text: &str) -> Result<Vec<T>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|_| Error::invalid(format!("--{name}: cannot parse {s:?}")))
        })
        .collect()
}

impl Flags {
    pub fn into_config(self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        if let Some(v) = self.n {
            c.n = v;
        }
        if let Some(v) = self.h {
            c.h = v;
        }
        if let Some(v) = self.band_limit {
            c.band_limit = v;
        }
        if let Some(v) = self.samples_per_dim {
            c.samples_per_dim = Some(v);
        }
        if let Some(v) = self.symbol {
            c.symbol = SymbolSource::Named(v);
        }
        if self.weyl {
            c.weyl = true;
        }
        if let Some(v) = self.tol {
            c.tol = v;
        }
        if let Some(v) = self.radius {
            c.radius = RadiusPolicy::parse(&v)?;
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = self.mc_samples {
            c.mc_samples = v;
        }
        if let Some(v) = self.trials {
            c.trials = v;
        }
        if let Some(v) = self.times {
            c.times = parse_list("times", &v)?;
        }
        if let Some(v) = self.energy {
            c.energy = v;
        }
        if let Some(v) = self.state {
            c.state = v;
        }
        if let Some(v) = self.states {
            c.states = parse_list("states", &v)?;
        }
        if let Some(v) = self.weights {
            c.weights = Some(parse_list("weights", &v)?);
        }
        if let Some(v) = self.j0 {
            c.j0 = v;
        }
        if let Some(v) = self.q_exp {
            c.q_exp = v;
        }
        if let Some(v) = self.out_dir {
            c.out_dir = v;
        }
        Ok(c)
    }
}

/// Runs one command to completion and writes its outputs.
pub fn execute(command: Command, config: &RunConfig, exec: &Exec) -> Result<Vec<String>> {
    config.validate()?;
    let dir = config.out_dir.as_path();
    let outputs = match command {
        Command::FrameCheck => commands::frame_check(config, exec)?,
        Command::Reconstruct => commands::reconstruct(config, exec, dir)?,
        Command::Spectrum => commands::spectrum(config, exec, dir)?,
        Command::Localization => commands::localization(config, exec, dir)?,
        Command::WeylLaw => commands::weyl_law(config, exec, dir)?,
        Command::Evolve => commands::evolve(config, exec, dir)?,
        Command::Husimi => commands::husimi_table(config, exec, dir)?,
    };
    outputs.write_all(dir)?;
    Ok(outputs.names().map(str::to_string).collect())
}

/// Entry point of the binary; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    let result = cli
        .flags
        .into_config()
        .and_then(|config| Ok((config, Exec::from_env()?)))
        .and_then(|(config, exec)| execute(cli.command, &config, &exec).map(|files| (config, files)));
    match result {
        Ok((config, files)) => {
            for f in files {
                println!("{}", config.out_dir.join(f).display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
