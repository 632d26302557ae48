//! Run configuration: JSON file plus command-line overrides.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use qkansatz::cmap::Prepotential;
use qkansatz::excalc::DEFAULT_H;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Subcommand {
    VerifyGh,
    VerifyCone,
    ReduceQk,
    Cp4d,
    Cmap,
    Legendre,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::VerifyGh => "verify-gh",
            Subcommand::VerifyCone => "verify-cone",
            Subcommand::ReduceQk => "reduce-qk",
            Subcommand::Cp4d => "cp4d",
            Subcommand::Cmap => "cmap",
            Subcommand::Legendre => "legendre",
        }
    }
}

impl fmt::Display for Subcommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Malformed configuration; maps to exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> UsageError {
    UsageError(msg.into())
}

/// Gibbons-Hawking data by name.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GhSpec {
    DiracMonopole,
    TwoCenter,
    ThreeCenter,
    FourCenter,
    ShiftedCenters,
    /// Constant `U`, row-major `m × m`.
    Flat { u: Vec<f64> },
    Plugin { name: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "potential", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CpSpec {
    Rho1,
    Rho2sq,
    One,
    LinearCombo { a: f64, b: f64 },
    Plugin { name: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PrepSpec {
    /// `F = ½ C_AB η^A η^B`, `C` row-major as `[re, im]` pairs.
    Quadratic {
        #[serde(rename = "C")]
        c: Vec<[f64; 2]>,
    },
    /// `F = (ic/2) Σ s_A (η^A)²`.
    Diagonal { c: f64, signs: Vec<f64> },
    /// `F = c Π (η^A)^{p_A}`.
    Monomial { c: [f64; 2], powers: Vec<i32> },
    Plugin { name: String },
}

impl PrepSpec {
    pub fn build(&self) -> Result<Option<Prepotential>, UsageError> {
        let err = |e: qkansatz::error::Error| usage(format!("prepotential: {e:?}"));
        match self {
            PrepSpec::Quadratic { c } => {
                let n = (c.len() as f64).sqrt().round() as usize;
                if n * n != c.len() {
                    return Err(usage("prepotential: C must have n² entries"));
                }
                let c = c.iter().map(|v| Complex::new(v[0], v[1])).collect();
                Prepotential::quadratic(n, c).map(Some).map_err(err)
            }
            PrepSpec::Diagonal { c, signs } => {
                if signs.is_empty() {
                    return Err(usage("prepotential: signs must be non-empty"));
                }
                Ok(Some(Prepotential::diagonal(*c, signs)))
            }
            PrepSpec::Monomial { c, powers } => {
                Prepotential::monomial(Complex::new(c[0], c[1]), powers.clone()).map(Some).map_err(err)
            }
            PrepSpec::Plugin { .. } => Ok(None),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Input {
    Gh(GhSpec),
    Cp(CpSpec),
    Special {
        prepotential: PrepSpec,
        s: f64,
    },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecialInput {
    prepotential: PrepSpec,
    #[serde(default = "one")]
    s: f64,
}

fn one() -> f64 {
    1.0
}

impl Input {
    pub fn default_for(sub: Subcommand) -> Input {
        match sub {
            Subcommand::VerifyGh => Input::Gh(GhSpec::DiracMonopole),
            Subcommand::VerifyCone => Input::Gh(GhSpec::ThreeCenter),
            Subcommand::ReduceQk => Input::Gh(GhSpec::TwoCenter),
            Subcommand::Cp4d => Input::Cp(CpSpec::Rho2sq),
            Subcommand::Cmap | Subcommand::Legendre => {
                Input::Special { prepotential: PrepSpec::Diagonal { c: 1.0, signs: vec![1.0] }, s: 1.0 }
            }
        }
    }

    fn parse(sub: Subcommand, v: serde_json::Value) -> Result<Input, UsageError> {
        let bad = |e: serde_json::Error| usage(format!("input for {sub}: {e}"));
        Ok(match sub {
            Subcommand::VerifyGh | Subcommand::VerifyCone | Subcommand::ReduceQk => {
                Input::Gh(serde_json::from_value(v).map_err(bad)?)
            }
            Subcommand::Cp4d => Input::Cp(serde_json::from_value(v).map_err(bad)?),
            Subcommand::Cmap | Subcommand::Legendre => {
                let s: SpecialInput = serde_json::from_value(v).map_err(bad)?;
                Input::Special { prepotential: s.prepotential, s: s.s }
            }
        })
    }
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    subcommand: Option<Subcommand>,
    samples: Option<usize>,
    seed: Option<u64>,
    h: Option<f64>,
    #[serde(default)]
    tolerances: BTreeMap<String, f64>,
    input: Option<serde_json::Value>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub subcommand: Subcommand,
    pub input: Input,
    pub samples: usize,
    pub seed: u64,
    pub h: f64,
    pub tolerances: BTreeMap<String, f64>,
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub h: Option<f64>,
    pub tolerances: Vec<(String, f64)>,
}

pub const DEFAULT_SAMPLES: usize = 20;
pub const DEFAULT_SEED: u64 = 0;

impl RunConfig {
    pub fn new(subcommand: Subcommand) -> Self {
        RunConfig {
            subcommand,
            input: Input::default_for(subcommand),
            samples: DEFAULT_SAMPLES,
            seed: DEFAULT_SEED,
            h: DEFAULT_H,
            tolerances: BTreeMap::new(),
        }
    }

    /// Builds the configuration from optional JSON text and overrides.
    pub fn load(subcommand: Subcommand, json: Option<&str>, ov: &Overrides) -> Result<Self, UsageError> {
        let file: FileConfig = match json {
            Some(t) => serde_json::from_str(t).map_err(|e| usage(format!("config: {e}")))?,
            None => FileConfig::default(),
        };
        if let Some(s) = file.subcommand {
            if s != subcommand {
                return Err(usage(format!("config is for {s}, not {subcommand}")));
            }
        }
        let mut cfg = RunConfig::new(subcommand);
        if let Some(v) = file.input {
            cfg.input = Input::parse(subcommand, v)?;
        }
        cfg.samples = ov.samples.or(file.samples).unwrap_or(DEFAULT_SAMPLES);
        cfg.seed = ov.seed.or(file.seed).unwrap_or(DEFAULT_SEED);
        cfg.h = ov.h.or(file.h).unwrap_or(DEFAULT_H);
        cfg.tolerances = file.tolerances;
        for (k, v) in &ov.tolerances {
            cfg.tolerances.insert(k.clone(), *v);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), UsageError> {
        if self.samples < 1 {
            return Err(usage("samples must be at least 1"));
        }
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(usage("h must be positive"));
        }
        for (k, v) in &self.tolerances {
            if !(*v >= 0.0) {
                return Err(usage(format!("tolerance {k} must be non-negative")));
            }
        }
        if let Input::Special { s, prepotential } = &self.input {
            if *s == 0.0 || !s.is_finite() {
                return Err(usage("s must be non-zero"));
            }
            prepotential.build()?;
        }
        Ok(())
    }
}

/// Parses `NAME=VALUE`.
pub fn parse_tolerance(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected NAME=VALUE, got {s:?}"))?;
    let v = f64::from_str(v.trim()).map_err(|e| format!("{k}: {e}"))?;
    if k.trim().is_empty() {
        return Err("empty tolerance name".into());
    }
    Ok((k.trim().to_string(), v))
}
