//! Run configuration: a TOML file plus command-line overrides.
//!
//! ```toml
//! [extension]
//! d1 = -1
//! d2 = 0
//! alpha = "-1/2"      # exact rational, "p/q" or "p"
//! div = -1            # max degree of a lifted subline; defaults to d1
//!
//! [grid]
//! n = 64
//!
//! [flow]              # all optional
//! step = 0.25
//! max_iterations = 20000
//! tolerance = 1e-6
//! divergence_threshold = 50.0
//! projection_interval = 10
//! min_step = 1e-6
//!
//! [seed]
//! kind = "canonical-harmonic"   # or "zero", or "file" with `path`
//!
//! [sweep]
//! alphas = ["-7/5", "-6/5", "-9/10"]
//!
//! [walls]
//! r1 = 1
//! r2 = 1
//! degree_box = 6
//! ```

use std::path::{Path, PathBuf};

use hk_core::vortex::FlowControls;
use hk_core::{int, Rational};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Extension {
    pub d1: i64,
    pub d2: i64,
    #[serde(default = "default_alpha")]
    pub alpha: String,
    pub div: Option<i64>,
}

fn default_alpha() -> String {
    "0".into()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub n: usize,
}

impl Default for Grid {
    fn default() -> Self {
        Grid { n: 32 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, rename_all = "kebab-case", tag = "kind")]
pub enum Seed {
    #[default]
    CanonicalHarmonic,
    Zero,
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub alphas: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Walls {
    pub r1: u32,
    pub r2: u32,
    pub degree_box: i64,
}

impl Default for Walls {
    fn default() -> Self {
        Walls { r1: 1, r2: 1, degree_box: 6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub extension: Extension,
    #[serde(default)]
    pub grid: Grid,
    #[serde(default)]
    pub flow: FlowControls,
    #[serde(default)]
    pub seed: Seed,
    #[serde(default)]
    pub sweep: Sweep,
    #[serde(default)]
    pub walls: Walls,
}

/// Flag overrides shared by all commands.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct Overrides {
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub d1: Option<i64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub d2: Option<i64>,
    /// Exact rational, e.g. -1/2.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub alpha: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub div: Option<i64>,
    /// Grid points per side.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    #[arg(long, global = true)]
    pub max_iterations: Option<usize>,
    #[arg(long, global = true)]
    pub tolerance: Option<f64>,
    #[arg(long, global = true)]
    pub step: Option<f64>,
    /// Comma-separated rationals for `sweep`.
    #[arg(long, global = true, allow_hyphen_values = true, value_delimiter = ',')]
    pub alphas: Option<Vec<String>>,
    #[arg(long, global = true)]
    pub degree_box: Option<i64>,
    #[arg(long, global = true)]
    pub r1: Option<u32>,
    #[arg(long, global = true)]
    pub r2: Option<u32>,
}

impl Config {
    pub fn load(path: Option<&Path>, o: &Overrides) -> Result<Config, CliError> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::Io(p.display().to_string(), e))?;
                toml::from_str::<Config>(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
            }
            None => {
                let (d1, d2) = match (o.d1, o.d2) {
                    (Some(a), Some(b)) => (a, b),
                    _ => return Err(CliError::Config("either --config or both --d1 and --d2 are required".into())),
                };
                Config {
                    extension: Extension { d1, d2, alpha: default_alpha(), div: None },
                    grid: Grid::default(),
                    flow: FlowControls::default(),
                    seed: Seed::default(),
                    sweep: Sweep::default(),
                    walls: Walls::default(),
                }
            }
        };
        cfg.apply(o);
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply(&mut self, o: &Overrides) {
        let e = &mut self.extension;
        if let Some(v) = o.d1 {
            e.d1 = v;
        }
        if let Some(v) = o.d2 {
            e.d2 = v;
        }
        if let Some(v) = &o.alpha {
            e.alpha = v.clone();
        }
        if o.div.is_some() {
            e.div = o.div;
        }
        if let Some(v) = o.n {
            self.grid.n = v;
        }
        if let Some(v) = o.max_iterations {
            self.flow.max_iterations = v;
        }
        if let Some(v) = o.tolerance {
            self.flow.tolerance = v;
        }
        if let Some(v) = o.step {
            self.flow.step = v;
        }
        if let Some(v) = &o.alphas {
            self.sweep.alphas = v.clone();
        }
        if let Some(v) = o.degree_box {
            self.walls.degree_box = v;
        }
        if let Some(v) = o.r1 {
            self.walls.r1 = v;
        }
        if let Some(v) = o.r2 {
            self.walls.r2 = v;
        }
    }

    fn validate(&self) -> Result<(), CliError> {
        self.alpha()?;
        for a in &self.sweep.alphas {
            parse_rational(a)?;
        }
        let e = &self.extension;
        if let Some(div) = e.div {
            if div < e.d1 || div > e.d2 {
                return Err(CliError::Config(format!("div = {div} must lie in [d1, d2] = [{}, {}]", e.d1, e.d2)));
            }
        }
        Ok(())
    }

    pub fn alpha(&self) -> Result<Rational, CliError> {
        parse_rational(&self.extension.alpha)
    }

    pub fn sweep_alphas(&self) -> Result<Vec<Rational>, CliError> {
        self.sweep.alphas.iter().map(|a| parse_rational(a)).collect()
    }

    /// `div`, defaulting to `d1` (a generic nontrivial extension).
    pub fn div(&self) -> i64 {
        self.extension.div.unwrap_or(self.extension.d1)
    }
}

/// Parse `"p/q"` or `"p"` into an exact rational.
pub fn parse_rational(s: &str) -> Result<Rational, CliError> {
    let bad = || CliError::Config(format!("`{s}` is not a rational of the form p/q"));
    let s = s.trim();
    let (p, q) = match s.split_once('/') {
        Some((p, q)) => (p.trim(), q.trim()),
        None => (s, "1"),
    };
    let p: i128 = p.parse().map_err(|_| bad())?;
    let q: i128 = q.parse().map_err(|_| bad())?;
    if q == 0 {
        return Err(bad());
    }
    Ok(Rational::new(p, q) + int(0))
}
